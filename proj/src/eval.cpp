#include "ctxseq/eval.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "ctxseq/checkpoint.hpp"
#include "ctxseq/errors.hpp"
#include "ctxseq/trainer.hpp"

namespace ctxseq {

namespace {

namespace fs = std::filesystem;

TokenSeq decode_stripped(const Vocabulary& vocab, const std::vector<std::size_t>& ids) {
    TokenSeq tokens;
    for (std::size_t id : ids) {
        if (id == kMarkerId) continue;
        tokens.push_back(vocab.token_of(id));
    }
    return tokens;
}

// Teacher-forced loss over one document, threading context exactly as the
// training loop does, without touching any gradient.
void document_loss(Seq2SeqModel& model, const EncodedDocument& doc, double& loss_sum,
                   std::size_t& n_predicted) {
    ContextState ctx = model.initial_context();
    for (const auto& sentence : doc.sentences) {
        if (sentence.paragraph_start()) model.reset_context(ctx);
        EncodeResult enc = model.encode(frame_source(sentence.src_ids));
        LSTMState q1 = model.connect(enc.final, ctx);
        TeacherForcedResult res = model.decode_teacher_forced(q1, frame_target(sentence.tgt_ids));
        loss_sum += res.loss_sum;
        n_predicted += res.n_predicted;
    }
}

std::vector<IterationRecord> read_loss_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    std::vector<IterationRecord> records;
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        IterationRecord rec;
        std::istringstream row(line);
        std::string field;
        std::getline(row, field, ',');
        rec.iteration = std::stoull(field);
        std::getline(row, field, ',');
        rec.epoch = std::stoull(field);
        std::getline(row, field, ',');
        rec.loss = std::stod(field);
        records.push_back(rec);
    }
    return records;
}

// epoch -> mean_loss from an epochs.csv.
std::vector<std::pair<std::size_t, double>> read_epoch_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read " + path);
    std::vector<std::pair<std::size_t, double>> records;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream row(line);
        std::string epoch_field, bleu_field, loss_field;
        std::getline(row, epoch_field, ',');
        std::getline(row, bleu_field, ',');
        std::getline(row, loss_field, ',');
        records.emplace_back(std::stoull(epoch_field), std::stod(loss_field));
    }
    return records;
}

}  // namespace

EvalReport evaluate(Seq2SeqModel& model, const std::vector<EncodedDocument>& docs,
                    const Vocabulary& tgt_vocab, const std::string& model_id, bool smooth_bleu) {
    if (model.config().tgt_vocab != tgt_vocab.size()) {
        throw ConfigError("evaluate: model target vocabulary size " +
                          std::to_string(model.config().tgt_vocab) +
                          " does not match vocabulary of " + std::to_string(tgt_vocab.size()));
    }
    EvalReport report;
    report.model_id = model_id;

    std::vector<TokenSeq> hyps, refs;
    double loss_sum = 0.0;
    for (const auto& doc : docs) {
        DocumentResult result = model.process_document(doc, ProcessMode::infer);
        for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
            SentenceEval s;
            s.doc_id = doc.doc_id;
            s.sentence_index = i;
            s.reference = decode_stripped(tgt_vocab, doc.sentences[i].tgt_ids);
            s.hypothesis = decode_stripped(tgt_vocab, result.translations[i]);
            s.sentence_bleu = bleu_sentence(s.hypothesis, s.reference);
            hyps.push_back(s.hypothesis);
            refs.push_back(s.reference);
            report.sentences.push_back(std::move(s));
        }
        document_loss(model, doc, loss_sum, report.n_predicted);
    }
    report.corpus_bleu = bleu_corpus(hyps, refs, 4, smooth_bleu);
    report.mean_loss = report.n_predicted ? loss_sum / static_cast<double>(report.n_predicted) : 0.0;
    return report;
}

void write_translations(const std::string& path, const EvalReport& report) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    for (const auto& s : report.sentences) {
        out << s.doc_id << '\t' << s.sentence_index << '\t';
        for (std::size_t i = 0; i < s.hypothesis.size(); ++i) {
            if (i) out << ' ';
            out << s.hypothesis[i];
        }
        out << '\n';
    }
}

void write_eval_report(const std::string& path, const EvalReport& report) {
    nlohmann::json j;
    j["model_id"] = report.model_id;
    j["corpus_bleu"] = report.corpus_bleu;
    j["mean_loss"] = report.mean_loss;
    j["n_predicted_tokens"] = report.n_predicted;
    j["n_sentences"] = report.sentences.size();
    nlohmann::json sentences = nlohmann::json::array();
    for (const auto& s : report.sentences) {
        sentences.push_back(nlohmann::json{{"doc_id", s.doc_id},
                                           {"sentence_index", s.sentence_index},
                                           {"reference", s.reference},
                                           {"hypothesis", s.hypothesis},
                                           {"sentence_bleu", s.sentence_bleu}});
    }
    j["sentences"] = sentences;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
}

std::vector<std::pair<std::size_t, std::string>> list_checkpoints(const std::string& dir) {
    std::vector<std::pair<std::size_t, std::string>> found;
    if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir);
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("epoch_", 0) != 0 || name.size() < 11 ||
            name.substr(name.size() - 5) != ".ckpt") {
            continue;
        }
        const std::string digits = name.substr(6, name.size() - 11);
        try {
            found.emplace_back(std::stoull(digits), entry.path().string());
        } catch (const std::exception&) {
            continue;
        }
    }
    std::sort(found.begin(), found.end());
    return found;
}

CompareSummary compare_runs(const std::string& baseline_dir, const std::string& context_dir,
                            const std::vector<EncodedDocument>& test_docs,
                            const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                            const std::string& out_dir) {
    auto baseline_ckpts = list_checkpoints(baseline_dir);
    auto context_ckpts = list_checkpoints(context_dir);
    if (baseline_ckpts.empty() || context_ckpts.empty()) {
        throw DataError("compare: no epoch_NNNN.ckpt files in " +
                        (baseline_ckpts.empty() ? baseline_dir : context_dir));
    }
    if (baseline_ckpts.size() != context_ckpts.size()) {
        throw DataError("compare: series are misaligned (" +
                        std::to_string(baseline_ckpts.size()) + " vs " +
                        std::to_string(context_ckpts.size()) + " checkpoints)");
    }
    for (std::size_t i = 0; i < baseline_ckpts.size(); ++i) {
        if (baseline_ckpts[i].first != context_ckpts[i].first) {
            throw DataError("compare: series are misaligned at epoch " +
                            std::to_string(baseline_ckpts[i].first) + " vs " +
                            std::to_string(context_ckpts[i].first));
        }
    }

    CompareSummary summary;
    auto eval_series = [&](const std::vector<std::pair<std::size_t, std::string>>& ckpts,
                           bool expect_context) {
        std::vector<double> bleus;
        for (const auto& [epoch, path] : ckpts) {
            Checkpoint ckpt = load_checkpoint(path);
            if ((ckpt.config.mode == ModelMode::context) != expect_context) {
                throw ConfigError("compare: " + path + " is a " + to_string(ckpt.config.mode) +
                                  "-mode checkpoint in the " +
                                  (expect_context ? "context" : "baseline") + " series");
            }
            if (ckpt.src_vocab_hash != src_vocab.content_hash() ||
                ckpt.tgt_vocab_hash != tgt_vocab.content_hash()) {
                throw ConfigError("compare: vocabulary hash mismatch for " + path);
            }
            Seq2SeqModel model = model_from_checkpoint(ckpt);
            bleus.push_back(evaluate(model, test_docs, tgt_vocab, path).corpus_bleu);
        }
        return bleus;
    };
    const std::vector<double> baseline_bleu = eval_series(baseline_ckpts, false);
    const std::vector<double> context_bleu = eval_series(context_ckpts, true);

    for (std::size_t i = 0; i < baseline_ckpts.size(); ++i) {
        summary.bleu_series.push_back(
            EpochPoint{baseline_ckpts[i].first, baseline_bleu[i], context_bleu[i]});
    }
    summary.final_bleu_baseline = baseline_bleu.back();
    summary.final_bleu_context = context_bleu.back();

    // First epoch after the last strict baseline win.
    std::size_t crossover_index = 0;
    bool never = false;
    for (std::size_t i = baseline_ckpts.size(); i-- > 0;) {
        if (context_bleu[i] < baseline_bleu[i]) {
            if (i + 1 >= baseline_ckpts.size()) {
                never = true;
            } else {
                crossover_index = i + 1;
            }
            break;
        }
    }
    summary.crossover_epoch = never ? 0 : summary.bleu_series[crossover_index].epoch;

    const fs::path out(out_dir);
    fs::create_directories(out);
    {
        std::ofstream csv(out / "bleu_compare.csv", std::ios::binary);
        if (!csv) throw DataError("cannot write bleu_compare.csv");
        csv << "epoch,bleu_baseline,bleu_context\n";
        for (const auto& point : summary.bleu_series) {
            csv << point.epoch << ',' << format_double(point.bleu_baseline) << ','
                << format_double(point.bleu_context) << '\n';
        }
    }
    {
        const auto baseline_loss = read_loss_csv((fs::path(baseline_dir) / "loss.csv").string());
        const auto context_loss = read_loss_csv((fs::path(context_dir) / "loss.csv").string());
        if (baseline_loss.size() != context_loss.size()) {
            throw DataError("compare: loss logs are misaligned (" +
                            std::to_string(baseline_loss.size()) + " vs " +
                            std::to_string(context_loss.size()) + " iterations)");
        }
        std::ofstream csv(out / "loss_compare.csv", std::ios::binary);
        if (!csv) throw DataError("cannot write loss_compare.csv");
        csv << "iteration,loss_baseline,loss_context\n";
        for (std::size_t i = 0; i < baseline_loss.size(); ++i) {
            if (baseline_loss[i].iteration != context_loss[i].iteration) {
                throw DataError("compare: loss logs disagree at row " + std::to_string(i + 1));
            }
            csv << baseline_loss[i].iteration << ',' << format_double(baseline_loss[i].loss)
                << ',' << format_double(context_loss[i].loss) << '\n';
        }
    }
    {
        const auto baseline_epochs = read_epoch_csv((fs::path(baseline_dir) / "epochs.csv").string());
        const auto context_epochs = read_epoch_csv((fs::path(context_dir) / "epochs.csv").string());
        if (baseline_epochs.empty() || context_epochs.empty()) {
            throw DataError("compare: empty epochs.csv");
        }
        summary.first_epoch_loss_baseline = baseline_epochs.front().second;
        summary.first_epoch_loss_context = context_epochs.front().second;

        nlohmann::json j;
        j["epochs"] = summary.bleu_series.size();
        j["crossover_epoch"] = summary.crossover_epoch;
        j["first_epoch_loss_baseline"] = summary.first_epoch_loss_baseline;
        j["first_epoch_loss_context"] = summary.first_epoch_loss_context;
        j["final_bleu_baseline"] = summary.final_bleu_baseline;
        j["final_bleu_context"] = summary.final_bleu_context;
        std::ofstream jf(out / "summary.json", std::ios::binary);
        if (!jf) throw DataError("cannot write summary.json");
        jf << j.dump(2) << '\n';
    }
    return summary;
}

}  // namespace ctxseq
