#include "ctxseq/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>

#include "ctxseq/errors.hpp"

namespace ctxseq {

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_kind_from_string(const std::string& s) {
    if (s == "sgd") return OptimizerKind::sgd;
    if (s == "adam") return OptimizerKind::adam;
    throw ConfigError("unknown optimizer '" + s + "' (expected sgd|adam)");
}

void TrainConfig::validate() const {
    if (batch_size == 0) throw ConfigError("train: batch_size must be >= 1");
    if (optimizer.lr <= 0.0) throw ConfigError("train: learning rate must be positive");
    if (grad_clip_norm <= 0.0) throw ConfigError("train: grad_clip_norm must be positive");
    if (eval_every_epochs == 0) throw ConfigError("train: eval_every_epochs must be >= 1");
}

double clip_global_norm(const std::vector<Parameter*>& params, double max_norm) {
    if (max_norm <= 0.0) throw DomainError("clip_global_norm: max_norm must be positive");
    double sum_sq = 0.0;
    for (const Parameter* p : params) {
        for (double g : p->grad.data) sum_sq += g * g;
    }
    const double norm = std::sqrt(sum_sq);
    if (norm > max_norm) {
        const double factor = max_norm / norm;
        for (Parameter* p : params) {
            for (double& g : p->grad.data) g *= factor;
        }
    }
    return norm;
}

void sgd_step(const std::vector<Parameter*>& params, double lr) {
    for (Parameter* p : params) {
        for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] -= lr * p->grad[i];
        p->zero_grad();
    }
}

void adam_step(const std::vector<Parameter*>& params, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
    if (state.m.empty()) {
        for (const Parameter* p : params) {
            state.m.push_back(Tensor::zeros(p->value.shape));
            state.v.push_back(Tensor::zeros(p->value.shape));
        }
    }
    if (state.m.size() != params.size()) {
        throw StateError("adam_step: state does not match the parameter list");
    }
    ++state.steps;
    const double t = static_cast<double>(state.steps);
    const double bc1 = 1.0 - std::pow(beta1, t);
    const double bc2 = 1.0 - std::pow(beta2, t);
    for (std::size_t k = 0; k < params.size(); ++k) {
        Parameter* p = params[k];
        Tensor& m = state.m[k];
        Tensor& v = state.v[k];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad[i];
            m[i] = beta1 * m[i] + (1.0 - beta1) * g;
            v[i] = beta2 * v[i] + (1.0 - beta2) * g * g;
            const double m_hat = m[i] / bc1;
            const double v_hat = v[i] / bc2;
            p->value[i] -= lr * m_hat / (std::sqrt(v_hat) + eps);
        }
        p->zero_grad();
    }
}

Optimizer::Optimizer(const OptimizerConfig& cfg, const std::vector<Parameter*>& params)
    : cfg_(cfg), params_(params) {}

void Optimizer::step() {
    if (cfg_.kind == OptimizerKind::sgd) {
        sgd_step(params_, cfg_.lr);
    } else {
        adam_step(params_, adam_, cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps);
    }
    ++steps_;
}

namespace {

struct Lane {
    ContextState ctx;
    // Previous sentence of the current paragraph, kept only for
    // context_flow_through so its upstream context grads can be replayed.
    std::optional<SentenceCache> prev_cache;
};

}  // namespace

TrainLog train(Seq2SeqModel& model, const std::vector<EncodedDocument>& docs,
               const BatchSchedule& schedule, const TrainConfig& cfg,
               const EpochHook& epoch_hook) {
    cfg.validate();
    if (schedule.num_lanes != cfg.batch_size) {
        throw ConfigError("train: schedule was built for batch size " +
                          std::to_string(schedule.num_lanes) + ", config says " +
                          std::to_string(cfg.batch_size));
    }
    const bool flow_through =
        cfg.context_flow_through && model.config().mode == ModelMode::context;

    TrainLog log;
    Optimizer optimizer(cfg.optimizer, model.parameters());
    model.zero_grads();
    std::size_t iteration = 0;

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<Lane> lanes(schedule.num_lanes);
        for (auto& lane : lanes) lane.ctx = model.initial_context();
        double epoch_loss_sum = 0.0;
        std::size_t epoch_tokens = 0;

        for (const BatchStep& step : schedule.steps) {
            ++iteration;
            std::vector<SentenceCache> caches(step.slots.size());
            double loss_sum = 0.0;
            std::size_t n_predicted = 0;

            for (std::size_t s = 0; s < step.slots.size(); ++s) {
                const BatchSlot& slot = step.slots[s];
                Lane& lane = lanes[slot.lane];
                const EncodedSentence& sentence = docs[slot.doc].sentences[slot.sentence];
                if (slot.paragraph_start) {
                    model.reset_context(lane.ctx);
                    lane.prev_cache.reset();  // gradients never cross a paragraph boundary
                }
                SentenceForwardResult fwd =
                    model.forward_sentence(frame_source(sentence.src_ids),
                                           frame_target(sentence.tgt_ids), lane.ctx, caches[s]);
                if (!std::isfinite(fwd.loss_sum)) {
                    throw NumericError("train: non-finite loss at iteration " +
                                       std::to_string(iteration) + ", lane " +
                                       std::to_string(slot.lane) + " (doc " +
                                       docs[slot.doc].doc_id + ", sentence " +
                                       std::to_string(slot.sentence) + ")");
                }
                loss_sum += fwd.loss_sum;
                n_predicted += fwd.n_predicted;
            }

            const double scale = 1.0 / static_cast<double>(n_predicted);
            for (std::size_t s = 0; s < step.slots.size(); ++s) {
                const BatchSlot& slot = step.slots[s];
                Lane& lane = lanes[slot.lane];
                ContextGrads consumed = model.backward_sentence(caches[s], scale, nullptr);
                if (flow_through && lane.prev_cache &&
                    (consumed.d_prev_encoder_final || consumed.d_connect_state)) {
                    // Replay the previous sentence's backward for the context
                    // grads only (loss scale 0); its own loss was already
                    // backpropagated last step. Depth-1 truncation: the grads
                    // it would emit in turn are dropped.
                    model.backward_sentence(*lane.prev_cache, 0.0, &consumed);
                }
                if (flow_through) lane.prev_cache = std::move(caches[s]);
            }

            clip_global_norm(model.parameters(), cfg.grad_clip_norm);
            optimizer.step();

            const double batch_loss = loss_sum * scale;
            log.iterations.push_back(IterationRecord{iteration, epoch, batch_loss});
            epoch_loss_sum += loss_sum;
            epoch_tokens += n_predicted;
        }

        EpochRecord record;
        record.epoch = epoch;
        record.mean_loss = epoch_loss_sum / static_cast<double>(epoch_tokens);
        if (epoch_hook) epoch_hook(model, optimizer, record);
        log.epochs.push_back(std::move(record));
    }
    return log;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

void write_loss_csv(const std::string& path, const TrainLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << "iteration,epoch,loss\n";
    for (const auto& it : log.iterations) {
        out << it.iteration << ',' << it.epoch << ',' << format_double(it.loss) << '\n';
    }
}

void write_epoch_csv(const std::string& path, const TrainLog& log) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write " + path);
    out << "epoch,bleu,mean_loss\n";
    for (const auto& ep : log.epochs) {
        out << ep.epoch << ',' << (ep.bleu ? format_double(*ep.bleu) : std::string()) << ','
            << format_double(ep.mean_loss) << '\n';
    }
}

}  // namespace ctxseq
