#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ctxseq/corpus.hpp"
#include "ctxseq/layers.hpp"
#include "ctxseq/parameter.hpp"

namespace ctxseq {

enum class ModelMode { baseline, context };

std::string to_string(ModelMode mode);
ModelMode model_mode_from_string(const std::string& s);

struct ModelConfig {
    ModelMode mode = ModelMode::baseline;
    std::size_t src_vocab = 0;
    std::size_t tgt_vocab = 0;
    std::size_t embed_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t max_decode_len = 32;

    void validate() const;
    bool operator==(const ModelConfig&) const = default;
};

// Cross-sentence carryover: the previous sentence's final encoder state and
// the Connect LSTM's recurrent state. prev_encoder_final is empty exactly
// until the first sentence after a reset has been processed.
struct ContextState {
    std::optional<Tensor> prev_encoder_final;
    LSTMState connect_state;
    bool at_paragraph_start = true;
};

struct EncodeResult {
    std::vector<LSTMState> states;  // one per source token
    Tensor final;                   // h of the last step
};

struct TeacherForcedResult {
    double loss_mean = 0.0;
    double loss_sum = 0.0;
    std::size_t n_predicted = 0;
    std::vector<Tensor> probs;  // one distribution per predicted position
};

// Per-sentence forward record, consumed once by backward_sentence.
struct SentenceCache {
    struct EncStep {
        std::size_t token = 0;
        Tensor embed;
        LstmCellCache cell;
    };
    struct DecStep {
        std::size_t in_token = 0;
        std::size_t target = 0;
        Tensor embed;
        LstmCellCache cell;
        OutputCache out;
    };
    std::vector<EncStep> enc;
    bool connect_used = false;
    bool connect_paragraph_start = false;
    Tensor connect_final_in;
    Tensor connect_prev_final_in;
    LstmStepCache connect_step;
    std::vector<DecStep> dec;
    double loss_sum = 0.0;
    std::size_t n_predicted = 0;
};

// Gradients flowing across a sentence boundary: with respect to the context
// values this sentence consumed (training normally drops these; the
// flow-through option feeds them into the previous sentence's backward).
struct ContextGrads {
    std::optional<Tensor> d_prev_encoder_final;
    std::optional<LSTMState> d_connect_state;
};

struct SentenceForwardResult {
    double loss_sum = 0.0;
    std::size_t n_predicted = 0;
};

struct DocumentResult {
    std::vector<double> sentence_losses;                 // mean per predicted token
    std::vector<std::vector<std::size_t>> translations;  // infer mode only
    double loss_sum = 0.0;
    std::size_t n_predicted = 0;
    ContextState final_context;
};

enum class ProcessMode { train, infer };

// The encoder-decoder pair plus, in context mode, the Connect LSTM that
// carries the previous sentence's final encoder state into the decoder's
// initial state. All backward passes are analytic and accumulate into the
// parameters' grad tensors.
class Seq2SeqModel {
  public:
    explicit Seq2SeqModel(const ModelConfig& cfg);

    const ModelConfig& config() const { return cfg_; }
    const std::vector<Parameter*>& parameters() { return params_; }
    std::vector<const Parameter*> parameters() const;
    Parameter* find_parameter(const std::string& name);
    void zero_grads();

    // Uniform(-range, range) weights from a seeded generator; biases zero
    // except the forget-gate block, which starts at 1.0.
    void init_params(std::uint64_t seed, double range = 0.08);

    ContextState initial_context() const;
    void reset_context(ContextState& ctx) const;

    // src_ids must end with EOS; runs left-to-right from a zero state.
    EncodeResult encode(const std::vector<std::size_t>& src_ids) const;

    // Turns the encoder final state into the decoder's initial state and
    // advances ctx. Baseline mode bypasses the Connect LSTM entirely
    // (q1.h = final, q1.c = 0, ctx untouched).
    LSTMState connect(const Tensor& final, ContextState& ctx) const;

    // tgt_ids must be BOS ... EOS; loss is averaged over predicted positions.
    TeacherForcedResult decode_teacher_forced(const LSTMState& q1,
                                              const std::vector<std::size_t>& tgt_ids) const;

    // Feeds back its own argmax each step (ties: lowest id); stops at EOS or
    // max_len emitted tokens. The returned sequence excludes BOS/EOS.
    std::vector<std::size_t> decode_greedy(const LSTMState& q1, std::size_t max_len) const;

    // Training-path forward over one framed sentence pair; advances ctx and
    // fills the cache for backward_sentence.
    SentenceForwardResult forward_sentence(const std::vector<std::size_t>& src_framed,
                                           const std::vector<std::size_t>& tgt_framed,
                                           ContextState& ctx, SentenceCache& cache) const;

    // Backprop through one cached sentence. Every predicted position's loss
    // gradient is scaled by loss_scale. upstream, when given, carries
    // gradients w.r.t. the context this sentence emitted. Returns gradients
    // w.r.t. the context it consumed.
    ContextGrads backward_sentence(const SentenceCache& cache, double loss_scale,
                                   const ContextGrads* upstream = nullptr);

    // Greedy translation of one framed source sentence; advances ctx.
    std::vector<std::size_t> translate_sentence(const std::vector<std::size_t>& src_framed,
                                                ContextState& ctx, std::size_t max_len) const;

    // Iterates a document in order, resetting context at every paragraph
    // boundary. train: accumulates detached-context gradients scaled by
    // 1 / (total predicted tokens). infer: greedy translations.
    DocumentResult process_document(const EncodedDocument& doc, ProcessMode mode);

  private:
    LSTMState connect_impl(const Tensor& final, ContextState& ctx, SentenceCache* cache) const;
    EncodeResult encode_impl(const std::vector<std::size_t>& src_ids, SentenceCache* cache) const;
    TeacherForcedResult decode_impl(const LSTMState& q1, const std::vector<std::size_t>& tgt_ids,
                                    SentenceCache* cache) const;
    void register_params();

    ModelConfig cfg_;

    Parameter src_embed_;                         // encoder.W_xi
    Parameter enc_w_in_, enc_w_rec_, enc_bias_;   // encoder.W_ip / W_pp / bias
    Parameter con_w_start_;                       // connect.W_pq (paragraph start)
    Parameter con_w_cur_, con_w_prev_;            // connect.W_cur / W_prev (mid-paragraph)
    Parameter con_w_rec_, con_bias_;              // connect.W_rec / bias
    Parameter tgt_embed_;                         // decoder.W_yj
    Parameter dec_w_in_, dec_w_rec_, dec_bias_;   // decoder.W_yq / W_qq / bias
    Parameter out_w_qj_, out_w_jy_;               // output.W_qj / W_jy

    std::vector<Parameter*> params_;
};

}  // namespace ctxseq
