#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ctxseq/corpus.hpp"
#include "ctxseq/model.hpp"

namespace ctxseq {

enum class OptimizerKind { sgd, adam };

std::string to_string(OptimizerKind kind);
OptimizerKind optimizer_kind_from_string(const std::string& s);

struct OptimizerConfig {
    OptimizerKind kind = OptimizerKind::adam;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct TrainConfig {
    std::size_t batch_size = 64;
    std::size_t epochs = 1;
    OptimizerConfig optimizer;
    double grad_clip_norm = 5.0;
    std::uint64_t seed = 1;
    // When set, the gradient of a sentence flows one sentence back through
    // the stored context values (truncated cross-sentence BPTT, depth 1).
    // Off by default: context values are constants for backprop.
    bool context_flow_through = false;
    std::size_t eval_every_epochs = 1;
    double init_range = 0.08;

    void validate() const;
};

// If the global L2 norm of all grads exceeds max_norm, rescales them to
// max_norm. Returns the pre-clip norm.
double clip_global_norm(const std::vector<Parameter*>& params, double max_norm);

void sgd_step(const std::vector<Parameter*>& params, double lr);

struct AdamState {
    std::size_t steps = 0;
    std::vector<Tensor> m, v;  // aligned with the parameter list
};

void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps);

// Applies the configured update rule and zeroes all grads.
class Optimizer {
  public:
    Optimizer(const OptimizerConfig& cfg, const std::vector<Parameter*>& params);
    void step();
    std::size_t step_count() const { return steps_; }
    const OptimizerConfig& config() const { return cfg_; }

  private:
    OptimizerConfig cfg_;
    std::vector<Parameter*> params_;
    AdamState adam_;
    std::size_t steps_ = 0;
};

struct IterationRecord {
    std::size_t iteration = 0;  // 1-based, global across epochs
    std::size_t epoch = 0;      // 1-based
    double loss = 0.0;          // batch mean loss per predicted token
};

struct EpochRecord {
    std::size_t epoch = 0;
    std::optional<double> bleu;
    double mean_loss = 0.0;  // token-weighted over the epoch
};

struct TrainLog {
    std::vector<IterationRecord> iterations;
    std::vector<EpochRecord> epochs;
};

// Runs at the end of every epoch (checkpointing, dev evaluation). May fill
// record.bleu.
using EpochHook = std::function<void(Seq2SeqModel& model, const Optimizer& optimizer,
                                     EpochRecord& record)>;

// Mini-batch teacher-forced training over a lane schedule. Each step
// forwards one sentence per occupied lane (threading that lane's
// ContextState), averages the loss over predicted tokens, runs the backward
// passes in lane order, clips the global grad norm, and applies one
// optimizer update. Deterministic for a fixed seed and schedule.
TrainLog train(Seq2SeqModel& model, const std::vector<EncodedDocument>& docs,
               const BatchSchedule& schedule, const TrainConfig& cfg,
               const EpochHook& epoch_hook = {});

// iteration,epoch,loss
void write_loss_csv(const std::string& path, const TrainLog& log);
// epoch,bleu,mean_loss (bleu empty when not evaluated)
void write_epoch_csv(const std::string& path, const TrainLog& log);

// Round-trip float64 formatting used by every CSV this tool writes.
std::string format_double(double v);

}  // namespace ctxseq
