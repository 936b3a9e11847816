#pragma once

#include <string>
#include <utility>
#include <vector>

#include "ctxseq/model.hpp"
#include "ctxseq/trainer.hpp"

namespace ctxseq {

// On-disk model snapshot: magic "CTXSEQ", format version, UTF-8 JSON
// manifest (model config, vocabulary hashes, epoch, optimizer descriptor,
// parameter directory), then the named parameter arrays as little-endian
// float64 in manifest order. Loading reproduces forward outputs bit-exactly.
inline constexpr char kCheckpointMagic[] = "CTXSEQ";
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct OptimizerDescriptor {
    std::string kind = "adam";
    double lr = 0.0;
    double beta1 = 0.0;
    double beta2 = 0.0;
    double eps = 0.0;
    std::size_t steps = 0;
};

struct Checkpoint {
    ModelConfig config;
    std::size_t epoch = 0;
    std::string src_vocab_hash;
    std::string tgt_vocab_hash;
    OptimizerDescriptor optimizer;
    std::vector<std::pair<std::string, Tensor>> params;  // registration order
};

Checkpoint make_checkpoint(const Seq2SeqModel& model, std::size_t epoch,
                           const std::string& src_vocab_hash, const std::string& tgt_vocab_hash,
                           const OptimizerDescriptor& optimizer);

OptimizerDescriptor describe_optimizer(const Optimizer& optimizer);

void save_checkpoint(const std::string& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::string& path);

// Copies parameter values into a model of the same configuration; any
// config/name/shape disagreement raises ConfigError naming the field.
void apply_checkpoint(Seq2SeqModel& model, const Checkpoint& ckpt);

// Convenience: construct a model from the checkpoint's own config.
Seq2SeqModel model_from_checkpoint(const Checkpoint& ckpt);

}  // namespace ctxseq
