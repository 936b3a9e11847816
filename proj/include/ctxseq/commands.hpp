#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctxseq/eval.hpp"
#include "ctxseq/gradcheck.hpp"
#include "ctxseq/model.hpp"
#include "ctxseq/trainer.hpp"

namespace ctxseq {

inline constexpr const char* kToolVersion = "ctxseq 0.1.0";

// Every command drops a run_manifest.json (command, flags, seed, input
// digests, tool version) next to its outputs so a run is reproducible from
// the manifest alone.
void write_run_manifest(const std::string& path, const std::string& command,
                        const std::vector<std::pair<std::string, std::string>>& flags,
                        const std::vector<std::string>& input_files);

struct PreprocessArgs {
    std::string src_path;
    std::string tgt_path;
    std::string out_dir;
    std::size_t vocab_size = 1000;
    std::uint64_t seed = 1;
    std::string marker = kDefaultMarker;
};

void cmd_preprocess(const PreprocessArgs& args);

struct PreprocessedData {
    std::vector<EncodedDocument> docs;
    Vocabulary src_vocab;
    Vocabulary tgt_vocab;
};

PreprocessedData load_preprocessed(const std::string& data_dir);

struct TrainArgs {
    std::string data_dir;
    std::string ckpt_dir;
    ModelMode mode = ModelMode::baseline;
    std::size_t embed_dim = 32;
    std::size_t hidden_dim = 32;
    std::size_t max_decode_len = 32;
    TrainConfig train;
    // Optional raw dev corpus for per-epoch BLEU in epochs.csv.
    std::optional<std::string> dev_src;
    std::optional<std::string> dev_tgt;
};

TrainLog cmd_train(const TrainArgs& args);

struct TranslateArgs {
    std::string ckpt_path;
    std::string data_dir;  // vocabularies
    std::string input_path;
    std::string output_path;
    std::optional<std::size_t> max_len;  // overrides the checkpoint's value
};

void cmd_translate(const TranslateArgs& args);

struct EvaluateArgs {
    std::string ckpt_path;
    std::string data_dir;
    std::string test_src;
    std::string test_tgt;
    std::string out_dir;
    bool smooth_bleu = false;
};

EvalReport cmd_evaluate(const EvaluateArgs& args);

struct CompareArgs {
    std::string baseline_dir;
    std::string context_dir;
    std::string data_dir;
    std::string test_src;
    std::string test_tgt;
    std::string out_dir;
};

CompareSummary cmd_compare(const CompareArgs& args);

struct GradCheckCase {
    std::string name;
    GradCheckReport report;
};

struct GradCheckArgs {
    std::uint64_t seed = 7;
    std::size_t embed_dim = 8;
    std::size_t hidden_dim = 12;
    std::size_t vocab = 16;
    double eps = 1e-5;
    double tol = 1e-5;
};

// Finite-difference verification of every layer and of the full
// encode -> connect -> decode chain. Returns one report per case.
std::vector<GradCheckCase> run_gradcheck_suite(const GradCheckArgs& args);

// Prints the per-case table to stdout; returns true when everything passed.
bool cmd_gradcheck(const GradCheckArgs& args);

// Loads a raw corpus and applies the preprocessing pipeline with existing
// vocabularies (used for test/dev/translate inputs).
std::vector<EncodedDocument> encode_raw_corpus(const std::string& src_path,
                                               const std::string& tgt_path,
                                               const Vocabulary& src_vocab,
                                               const Vocabulary& tgt_vocab);

}  // namespace ctxseq
