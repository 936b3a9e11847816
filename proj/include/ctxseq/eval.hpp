#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "ctxseq/bleu.hpp"
#include "ctxseq/corpus.hpp"
#include "ctxseq/model.hpp"

namespace ctxseq {

struct SentenceEval {
    std::string doc_id;
    std::size_t sentence_index = 0;  // flat within the document
    TokenSeq reference;
    TokenSeq hypothesis;
    double sentence_bleu = 0.0;  // smoothed, for readability on short pairs
};

struct EvalReport {
    std::string model_id;
    double corpus_bleu = 0.0;
    double mean_loss = 0.0;  // teacher-forced, per predicted token
    std::size_t n_predicted = 0;
    std::vector<SentenceEval> sentences;
};

// Greedy-translates every document (context threading and paragraph resets
// exactly as in training) and scores corpus BLEU against the references.
// Paragraph-marker tokens are stripped from both token streams before
// scoring. Read-only on the model.
EvalReport evaluate(Seq2SeqModel& model, const std::vector<EncodedDocument>& docs,
                    const Vocabulary& tgt_vocab, const std::string& model_id,
                    bool smooth_bleu = false);

// doc_id \t sentence_index \t hypothesis tokens
void write_translations(const std::string& path, const EvalReport& report);
void write_eval_report(const std::string& path, const EvalReport& report);

struct EpochPoint {
    std::size_t epoch = 0;
    double bleu_baseline = 0.0;
    double bleu_context = 0.0;
};

struct CompareSummary {
    std::vector<EpochPoint> bleu_series;
    // First epoch from which context BLEU stays >= baseline BLEU; 0 = never.
    std::size_t crossover_epoch = 0;
    double first_epoch_loss_baseline = 0.0;
    double first_epoch_loss_context = 0.0;
    double final_bleu_baseline = 0.0;
    double final_bleu_context = 0.0;
};

// Evaluates two per-epoch checkpoint series (as written by training runs:
// epoch_NNNN.ckpt plus loss.csv/epochs.csv) on the same test documents and
// writes bleu_compare.csv, loss_compare.csv and summary.json into out_dir.
CompareSummary compare_runs(const std::string& baseline_dir, const std::string& context_dir,
                            const std::vector<EncodedDocument>& test_docs,
                            const Vocabulary& src_vocab, const Vocabulary& tgt_vocab,
                            const std::string& out_dir);

// Sorted (epoch, path) list of epoch_NNNN.ckpt files in a directory.
std::vector<std::pair<std::size_t, std::string>> list_checkpoints(const std::string& dir);

}  // namespace ctxseq
