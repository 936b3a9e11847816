#include "ctxseq/commands.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "json.hpp"

#include "ctxseq/checkpoint.hpp"
#include "ctxseq/errors.hpp"
#include "ctxseq/layers.hpp"

namespace ctxseq {

namespace fs = std::filesystem;

void write_run_manifest(const std::string& path, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& flags,
                        const std::vector<std::string>& input_files) {
    nlohmann::json j;
    j["command"] = command;
    nlohmann::json flag_obj = nlohmann::json::object();
    for (const auto& [k, v] : flags) flag_obj[k] = v;
    j["flags"] = flag_obj;
    nlohmann::json inputs = nlohmann::json::object();
    for (const auto& f : input_files) inputs[f] = file_digest(f);
    j["inputs"] = inputs;
    j["tool_version"] = kToolVersion;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << j.dump(2) << '\n';
}

void cmd_preprocess(const PreprocessArgs& args) {
    std::vector<Document> docs = load_corpus(args.src_path, args.tgt_path);
    for (auto& doc : docs) {
        normalize_numbers(doc);
        insert_paragraph_marker(doc, args.marker);
    }
    Vocabulary src_vocab = build_vocab(docs, Side::source, args.vocab_size, args.marker);
    Vocabulary tgt_vocab = build_vocab(docs, Side::target, args.vocab_size, args.marker);

    std::vector<EncodedDocument> encoded;
    encoded.reserve(docs.size());
    for (const auto& doc : docs) encoded.push_back(encode_document(src_vocab, tgt_vocab, doc));

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    write_preprocessed_tsv((out / "corpus.tsv").string(), encoded);
    src_vocab.save((out / "src_vocab.txt").string());
    tgt_vocab.save((out / "tgt_vocab.txt").string());
    write_run_manifest((out / "run_manifest.json").string(), "preprocess",
                       {{"src", args.src_path},
                        {"tgt", args.tgt_path},
                        {"out-dir", args.out_dir},
                        {"vocab-size", std::to_string(args.vocab_size)},
                        {"seed", std::to_string(args.seed)},
                        {"marker", args.marker}},
                       {args.src_path, args.tgt_path});
}

PreprocessedData load_preprocessed(const std::string& data_dir) {
    const fs::path dir(data_dir);
    if (!fs::is_directory(dir)) throw DataError("data directory not found: " + data_dir);
    PreprocessedData data{read_preprocessed_tsv((dir / "corpus.tsv").string()),
                          Vocabulary::load((dir / "src_vocab.txt").string()),
                          Vocabulary::load((dir / "tgt_vocab.txt").string())};
    if (data.docs.empty()) throw DataError("empty preprocessed corpus in " + data_dir);
    return data;
}

std::vector<EncodedDocument> encode_raw_corpus(const std::string& src_path,
                                               const std::string& tgt_path,
                                               const Vocabulary& src_vocab,
                                               const Vocabulary& tgt_vocab) {
    std::vector<Document> docs = load_corpus(src_path, tgt_path);
    std::vector<EncodedDocument> encoded;
    for (auto& doc : docs) {
        normalize_numbers(doc);
        insert_paragraph_marker(doc, src_vocab.marker());
        encoded.push_back(encode_document(src_vocab, tgt_vocab, doc));
    }
    return encoded;
}

TrainLog cmd_train(const TrainArgs& args) {
    args.train.validate();
    PreprocessedData data = load_preprocessed(args.data_dir);

    ModelConfig cfg;
    cfg.mode = args.mode;
    cfg.src_vocab = data.src_vocab.size();
    cfg.tgt_vocab = data.tgt_vocab.size();
    cfg.embed_dim = args.embed_dim;
    cfg.hidden_dim = args.hidden_dim;
    cfg.max_decode_len = args.max_decode_len;
    cfg.validate();

    std::optional<std::vector<EncodedDocument>> dev_docs;
    if (args.dev_src && args.dev_tgt) {
        dev_docs = encode_raw_corpus(*args.dev_src, *args.dev_tgt, data.src_vocab, data.tgt_vocab);
    } else if (args.dev_src || args.dev_tgt) {
        throw ConfigError("train: dev data needs both source and target files");
    }

    Seq2SeqModel model(cfg);
    model.init_params(args.train.seed, args.train.init_range);
    BatchSchedule schedule = make_batches(data.docs, args.train.batch_size);

    fs::create_directories(args.ckpt_dir);
    const fs::path ckpt_dir(args.ckpt_dir);
    const std::string src_hash = data.src_vocab.content_hash();
    const std::string tgt_hash = data.tgt_vocab.content_hash();

    EpochHook hook = [&](Seq2SeqModel& m, const Optimizer& opt, EpochRecord& rec) {
        char name[32];
        std::snprintf(name, sizeof(name), "epoch_%04zu.ckpt", rec.epoch);
        save_checkpoint((ckpt_dir / name).string(),
                        make_checkpoint(m, rec.epoch, src_hash, tgt_hash, describe_optimizer(opt)));
        if (dev_docs && (rec.epoch % args.train.eval_every_epochs == 0 ||
                         rec.epoch == args.train.epochs)) {
            rec.bleu = evaluate(m, *dev_docs, data.tgt_vocab, "dev").corpus_bleu;
        }
    };

    TrainLog log = train(model, data.docs, schedule, args.train, hook);
    write_loss_csv((ckpt_dir / "loss.csv").string(), log);
    write_epoch_csv((ckpt_dir / "epochs.csv").string(), log);

    std::vector<std::pair<std::string, std::string>> flags = {
        {"data", args.data_dir},
        {"mode", to_string(args.mode)},
        {"embed-dim", std::to_string(args.embed_dim)},
        {"hidden-dim", std::to_string(args.hidden_dim)},
        {"max-decode-len", std::to_string(args.max_decode_len)},
        {"epochs", std::to_string(args.train.epochs)},
        {"batch-size", std::to_string(args.train.batch_size)},
        {"optimizer", to_string(args.train.optimizer.kind)},
        {"lr", format_double(args.train.optimizer.lr)},
        {"clip-norm", format_double(args.train.grad_clip_norm)},
        {"seed", std::to_string(args.train.seed)},
        {"init-range", format_double(args.train.init_range)},
        {"context-flow-through", args.train.context_flow_through ? "true" : "false"},
        {"eval-every", std::to_string(args.train.eval_every_epochs)},
        {"ckpt-dir", args.ckpt_dir}};
    if (args.dev_src) {
        flags.emplace_back("dev-src", *args.dev_src);
        flags.emplace_back("dev-tgt", *args.dev_tgt);
    }
    std::vector<std::string> inputs = {(fs::path(args.data_dir) / "corpus.tsv").string(),
                                       (fs::path(args.data_dir) / "src_vocab.txt").string(),
                                       (fs::path(args.data_dir) / "tgt_vocab.txt").string()};
    if (args.dev_src) {
        inputs.push_back(*args.dev_src);
        inputs.push_back(*args.dev_tgt);
    }
    write_run_manifest((ckpt_dir / "run_manifest.json").string(), "train", flags, inputs);
    return log;
}

void cmd_translate(const TranslateArgs& args) {
    Checkpoint ckpt = load_checkpoint(args.ckpt_path);
    const fs::path data_dir(args.data_dir);
    Vocabulary src_vocab = Vocabulary::load((data_dir / "src_vocab.txt").string());
    Vocabulary tgt_vocab = Vocabulary::load((data_dir / "tgt_vocab.txt").string());
    if (ckpt.src_vocab_hash != src_vocab.content_hash()) {
        throw ConfigError("translate: source vocabulary hash mismatch (checkpoint " +
                          ckpt.src_vocab_hash + ", file " + src_vocab.content_hash() + ")");
    }
    if (ckpt.tgt_vocab_hash != tgt_vocab.content_hash()) {
        throw ConfigError("translate: target vocabulary hash mismatch (checkpoint " +
                          ckpt.tgt_vocab_hash + ", file " + tgt_vocab.content_hash() + ")");
    }
    if (args.max_len) {
        if (*args.max_len == 0) throw ConfigError("translate: max-len must be >= 1");
        ckpt.config.max_decode_len = *args.max_len;
    }
    Seq2SeqModel model = model_from_checkpoint(ckpt);

    std::vector<Document> docs = load_source_documents(args.input_path);
    if (docs.empty()) {
        std::cerr << "warning: input file " << args.input_path << " contains no sentences\n";
    }

    std::ofstream out(args.output_path, std::ios::binary);
    if (!out) throw DataError("cannot write " + args.output_path);
    for (auto& doc : docs) {
        normalize_numbers(doc);
        insert_paragraph_marker(doc, src_vocab.marker());
        EncodedDocument encoded = encode_document(src_vocab, tgt_vocab, doc);
        DocumentResult result = model.process_document(encoded, ProcessMode::infer);
        for (std::size_t i = 0; i < result.translations.size(); ++i) {
            out << doc.doc_id << '\t' << i << '\t';
            const auto tokens = decode_tokens(tgt_vocab, result.translations[i]);
            for (std::size_t k = 0; k < tokens.size(); ++k) {
                if (k) out << ' ';
                out << tokens[k];
            }
            out << '\n';
        }
    }
    out.close();

    std::vector<std::pair<std::string, std::string>> flags = {
        {"ckpt", args.ckpt_path},
        {"data", args.data_dir},
        {"input", args.input_path},
        {"output", args.output_path}};
    if (args.max_len) flags.emplace_back("max-len", std::to_string(*args.max_len));
    write_run_manifest(args.output_path + ".manifest.json", "translate", flags,
                       {args.ckpt_path, args.input_path});
}

EvalReport cmd_evaluate(const EvaluateArgs& args) {
    Checkpoint ckpt = load_checkpoint(args.ckpt_path);
    const fs::path data_dir(args.data_dir);
    Vocabulary src_vocab = Vocabulary::load((data_dir / "src_vocab.txt").string());
    Vocabulary tgt_vocab = Vocabulary::load((data_dir / "tgt_vocab.txt").string());
    if (ckpt.src_vocab_hash != src_vocab.content_hash() ||
        ckpt.tgt_vocab_hash != tgt_vocab.content_hash()) {
        throw ConfigError("evaluate: vocabulary hash mismatch between checkpoint and " +
                          args.data_dir);
    }
    Seq2SeqModel model = model_from_checkpoint(ckpt);
    std::vector<EncodedDocument> test_docs =
        encode_raw_corpus(args.test_src, args.test_tgt, src_vocab, tgt_vocab);

    EvalReport report = evaluate(model, test_docs, tgt_vocab, args.ckpt_path, args.smooth_bleu);

    fs::create_directories(args.out_dir);
    const fs::path out(args.out_dir);
    write_eval_report((out / "report.json").string(), report);
    write_translations((out / "hypotheses.tsv").string(), report);
    write_run_manifest((out / "run_manifest.json").string(), "evaluate",
                       {{"ckpt", args.ckpt_path},
                        {"data", args.data_dir},
                        {"test-src", args.test_src},
                        {"test-tgt", args.test_tgt},
                        {"out-dir", args.out_dir},
                        {"smooth-bleu", args.smooth_bleu ? "true" : "false"}},
                       {args.ckpt_path, args.test_src, args.test_tgt});
    return report;
}

CompareSummary cmd_compare(const CompareArgs& args) {
    const fs::path data_dir(args.data_dir);
    Vocabulary src_vocab = Vocabulary::load((data_dir / "src_vocab.txt").string());
    Vocabulary tgt_vocab = Vocabulary::load((data_dir / "tgt_vocab.txt").string());
    std::vector<EncodedDocument> test_docs =
        encode_raw_corpus(args.test_src, args.test_tgt, src_vocab, tgt_vocab);
    CompareSummary summary = compare_runs(args.baseline_dir, args.context_dir, test_docs,
                                          src_vocab, tgt_vocab, args.out_dir);
    write_run_manifest((fs::path(args.out_dir) / "run_manifest.json").string(), "compare",
                       {{"baseline-dir", args.baseline_dir},
                        {"context-dir", args.context_dir},
                        {"data", args.data_dir},
                        {"test-src", args.test_src},
                        {"test-tgt", args.test_tgt},
                        {"out-dir", args.out_dir}},
                       {args.test_src, args.test_tgt});
    return summary;
}

namespace {

Tensor random_vector(UniformRng& rng, std::size_t n, double r) {
    Tensor t = Tensor::zeros({n});
    fill_uniform(t, rng, r);
    return t;
}

double dot(const Tensor& a, const Tensor& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

LSTMState random_state(UniformRng& rng, std::size_t h) {
    LSTMState s(h);
    fill_uniform(s.h, rng, 0.8);
    fill_uniform(s.c, rng, 1.0);
    return s;
}

GradCheckCase check_embedding(const GradCheckArgs& a) {
    UniformRng rng(a.seed);
    Parameter w("embed.W", {a.embed_dim, a.vocab});
    fill_uniform(w.value, rng, 0.5);
    const std::vector<std::size_t> tokens = {1, a.vocab - 1, 1};  // repeated column on purpose
    std::vector<Tensor> weights;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        weights.push_back(random_vector(rng, a.embed_dim, 1.0));
    }

    auto loss = [&]() {
        double sum = 0.0;
        for (std::size_t i = 0; i < tokens.size(); ++i) {
            sum += dot(weights[i], embed_forward(w, tokens[i]));
        }
        return sum;
    };
    w.zero_grad();
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        const Tensor out = embed_forward(w, tokens[i]);
        embed_backward(w, tokens[i], out, weights[i]);
    }
    return GradCheckCase{"embedding", grad_check({&w}, loss, a.eps, a.tol)};
}

GradCheckCase check_lstm_cell(const GradCheckArgs& a, std::size_t bptt_steps) {
    UniformRng rng(a.seed + bptt_steps);
    const std::size_t h = a.hidden_dim, d = a.embed_dim;
    Parameter w_in("cell.W_in", {4 * h, d});
    Parameter w_rec("cell.W_rec", {4 * h, h});
    Parameter bias("cell.bias", {4 * h});
    fill_uniform(w_in.value, rng, 0.5);
    fill_uniform(w_rec.value, rng, 0.5);
    fill_uniform(bias.value, rng, 0.5);

    std::vector<Tensor> xs;
    for (std::size_t t = 0; t < bptt_steps; ++t) xs.push_back(random_vector(rng, d, 1.0));
    const LSTMState start = random_state(rng, h);
    const Tensor wh = random_vector(rng, h, 1.0);
    const Tensor wc = random_vector(rng, h, 1.0);

    auto loss = [&]() {
        LSTMState state = start;
        for (const Tensor& x : xs) {
            LstmCellCache cache;
            state = lstm_cell_forward(w_in, w_rec, bias, x, state, cache);
        }
        return dot(wh, state.h) + dot(wc, state.c);
    };

    w_in.zero_grad();
    w_rec.zero_grad();
    bias.zero_grad();
    std::vector<LstmCellCache> caches(bptt_steps);
    LSTMState state = start;
    for (std::size_t t = 0; t < bptt_steps; ++t) {
        state = lstm_cell_forward(w_in, w_rec, bias, xs[t], state, caches[t]);
    }
    Tensor d_h = wh, d_c = wc;
    for (std::size_t t = bptt_steps; t-- > 0;) {
        LstmCellGrads grads = lstm_cell_backward(w_in, w_rec, bias, caches[t], d_h, d_c);
        d_h = std::move(grads.d_prev.h);
        d_c = std::move(grads.d_prev.c);
    }
    const std::string name = "lstm_cell_" + std::to_string(bptt_steps) + "step";
    return GradCheckCase{name, grad_check({&w_in, &w_rec, &bias}, loss, a.eps, a.tol)};
}

GradCheckCase check_output_projection(const GradCheckArgs& a) {
    UniformRng rng(a.seed + 11);
    Parameter w_qj("out.W_qj", {a.embed_dim, a.hidden_dim});
    Parameter w_jy("out.W_jy", {a.vocab, a.embed_dim});
    fill_uniform(w_qj.value, rng, 0.5);
    fill_uniform(w_jy.value, rng, 0.5);
    const Tensor q = random_vector(rng, a.hidden_dim, 0.8);
    const std::size_t target = a.vocab / 2;

    auto loss = [&]() {
        OutputCache cache;
        return cross_entropy(output_forward(w_qj, w_jy, q, cache), target);
    };
    w_qj.zero_grad();
    w_jy.zero_grad();
    OutputCache cache;
    const Tensor probs = output_forward(w_qj, w_jy, q, cache);
    output_backward(w_qj, w_jy, cache, cross_entropy_logit_grad(probs, target, 1.0));
    return GradCheckCase{"output_projection", grad_check({&w_qj, &w_jy}, loss, a.eps, a.tol)};
}

GradCheckCase check_connect_step(const GradCheckArgs& a, bool paragraph_start) {
    UniformRng rng(a.seed + (paragraph_start ? 23 : 29));
    const std::size_t h = a.hidden_dim;
    Parameter w_start("connect.W_pq", {4 * h, h});
    Parameter w_cur("connect.W_cur", {4 * h, h});
    Parameter w_prev("connect.W_prev", {4 * h, h});
    Parameter w_rec("connect.W_rec", {4 * h, h});
    Parameter bias("connect.bias", {4 * h});
    for (Parameter* p : {&w_start, &w_cur, &w_prev, &w_rec, &bias}) {
        fill_uniform(p->value, rng, 0.5);
    }
    const Tensor final = random_vector(rng, h, 0.8);
    const Tensor prev_final = random_vector(rng, h, 0.8);
    const LSTMState state_in = paragraph_start ? LSTMState(h) : random_state(rng, h);
    const Tensor wh = random_vector(rng, h, 1.0);
    const Tensor wc = random_vector(rng, h, 1.0);

    auto preact = [&]() {
        return paragraph_start ? matvec(w_start.value, final)
                               : add(matvec(w_cur.value, final), matvec(w_prev.value, prev_final));
    };
    auto loss = [&]() {
        LstmStepCache cache;
        const LSTMState q1 = lstm_step(preact(), w_rec, bias, state_in, cache);
        return dot(wh, q1.h) + dot(wc, q1.c);
    };

    for (Parameter* p : {&w_start, &w_cur, &w_prev, &w_rec, &bias}) p->zero_grad();
    LstmStepCache cache;
    lstm_step(preact(), w_rec, bias, state_in, cache);
    Tensor d_preact;
    LSTMState d_state_in;
    lstm_step_backward(cache, w_rec, bias, wh, wc, d_preact, d_state_in);
    if (paragraph_start) {
        add_outer(w_start.grad, d_preact, final);
    } else {
        add_outer(w_cur.grad, d_preact, final);
        add_outer(w_prev.grad, d_preact, prev_final);
    }
    const std::string name =
        paragraph_start ? "connect_paragraph_start" : "connect_mid_paragraph";
    return GradCheckCase{
        name, grad_check({&w_start, &w_cur, &w_prev, &w_rec, &bias}, loss, a.eps, a.tol)};
}

GradCheckCase check_full_chain(const GradCheckArgs& a, ModelMode mode) {
    ModelConfig cfg;
    cfg.mode = mode;
    cfg.src_vocab = a.vocab;
    cfg.tgt_vocab = a.vocab;
    cfg.embed_dim = a.embed_dim;
    cfg.hidden_dim = a.hidden_dim;
    Seq2SeqModel model(cfg);
    model.init_params(a.seed + 41, 0.4);

    const std::vector<std::size_t> src = {5, a.vocab - 1, 6, kEosId};
    const std::vector<std::size_t> tgt = {kBosId, 7, 5, a.vocab - 2, kEosId};

    auto loss = [&]() {
        ContextState ctx = model.initial_context();
        EncodeResult enc = model.encode(src);
        LSTMState q1 = model.connect(enc.final, ctx);
        return model.decode_teacher_forced(q1, tgt).loss_sum;
    };
    model.zero_grads();
    ContextState ctx = model.initial_context();
    SentenceCache cache;
    model.forward_sentence(src, tgt, ctx, cache);
    model.backward_sentence(cache, 1.0);
    const std::string name = "full_chain_" + to_string(mode);
    return GradCheckCase{name, grad_check(model.parameters(), loss, a.eps, a.tol)};
}

// Two sentences of one paragraph with detached context: the second
// sentence's context inputs are held at their recorded values, matching the
// default training semantics.
GradCheckCase check_full_chain_two_sentences(const GradCheckArgs& a) {
    ModelConfig cfg;
    cfg.mode = ModelMode::context;
    cfg.src_vocab = a.vocab;
    cfg.tgt_vocab = a.vocab;
    cfg.embed_dim = a.embed_dim;
    cfg.hidden_dim = a.hidden_dim;
    Seq2SeqModel model(cfg);
    model.init_params(a.seed + 43, 0.4);

    const std::vector<std::size_t> src1 = {kMarkerId, 5, kEosId};
    const std::vector<std::size_t> tgt1 = {kBosId, 6, kEosId};
    const std::vector<std::size_t> src2 = {7, 8, kEosId};
    const std::vector<std::size_t> tgt2 = {kBosId, 9, 10, kEosId};

    // Record the context the first sentence emits; it stays frozen for the
    // finite differences, exactly as the detached backward treats it.
    ContextState ctx = model.initial_context();
    SentenceCache cache1, cache2;
    model.forward_sentence(src1, tgt1, ctx, cache1);
    const ContextState frozen = ctx;
    model.forward_sentence(src2, tgt2, ctx, cache2);

    auto loss = [&]() {
        ContextState fresh = model.initial_context();
        EncodeResult enc1 = model.encode(src1);
        LSTMState q1 = model.connect(enc1.final, fresh);
        double sum = model.decode_teacher_forced(q1, tgt1).loss_sum;
        ContextState mid = frozen;
        EncodeResult enc2 = model.encode(src2);
        LSTMState q2 = model.connect(enc2.final, mid);
        sum += model.decode_teacher_forced(q2, tgt2).loss_sum;
        return sum;
    };
    model.zero_grads();
    model.backward_sentence(cache2, 1.0);
    model.backward_sentence(cache1, 1.0);
    return GradCheckCase{"full_chain_two_sentences",
                         grad_check(model.parameters(), loss, a.eps, a.tol)};
}

}  // namespace

std::vector<GradCheckCase> run_gradcheck_suite(const GradCheckArgs& args) {
    if (args.vocab < kNumReserved + 6) {
        throw ConfigError("gradcheck: vocab must be at least " +
                          std::to_string(kNumReserved + 6));
    }
    std::vector<GradCheckCase> cases;
    cases.push_back(check_embedding(args));
    cases.push_back(check_lstm_cell(args, 1));
    cases.push_back(check_lstm_cell(args, 2));
    cases.push_back(check_output_projection(args));
    cases.push_back(check_connect_step(args, true));
    cases.push_back(check_connect_step(args, false));
    cases.push_back(check_full_chain(args, ModelMode::baseline));
    cases.push_back(check_full_chain(args, ModelMode::context));
    cases.push_back(check_full_chain_two_sentences(args));
    return cases;
}

bool cmd_gradcheck(const GradCheckArgs& args) {
    const auto cases = run_gradcheck_suite(args);
    bool all_passed = true;
    std::printf("%-28s %8s %14s   %s\n", "case", "params", "max_rel_err", "status");
    for (const auto& c : cases) {
        const bool ok = c.report.all_passed();
        all_passed = all_passed && ok;
        std::printf("%-28s %8zu %14.3e   %s\n", c.name.c_str(), c.report.entries.size(),
                    c.report.max_rel_error(), ok ? "PASS" : "FAIL");
        if (!ok) {
            for (const auto& e : c.report.entries) {
                if (!e.passed) {
                    std::printf("    %-24s rel %.3e at [%zu] analytic %.6e numeric %.6e\n",
                                e.param.c_str(), e.max_rel_error, e.worst_index,
                                e.analytic_at_worst, e.numeric_at_worst);
                }
            }
        }
    }
    std::printf("gradcheck: %s (eps=%g, tol=%g)\n", all_passed ? "all passed" : "FAILURES",
                args.eps, args.tol);
    return all_passed;
}

}  // namespace ctxseq
