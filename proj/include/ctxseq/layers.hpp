#pragma once

#include <cstddef>

#include "ctxseq/parameter.hpp"
#include "ctxseq/tensor.hpp"

namespace ctxseq {

// Hidden/cell pair of one recurrent unit. h entries stay in (-1, 1)
// because h = o * tanh(c) with o in (0, 1).
struct LSTMState {
    Tensor h;
    Tensor c;

    LSTMState() = default;
    explicit LSTMState(std::size_t hidden) : h(Tensor::zeros({hidden})), c(Tensor::zeros({hidden})) {}

    std::size_t hidden() const { return h.size(); }
    void zero() {
        h.fill(0.0);
        c.fill(0.0);
    }
};

// Standard LSTM with input/forget/output gates and a tanh candidate cell,
// no peephole connections. All gate weights live in one 4H-row matrix per
// input stream; row blocks are ordered i, f, g, o.
//
//   z  = sum_k W_k * x_k + W_rec * h_prev + bias
//   i, f, o = sigmoid(z blocks)   g = tanh(z block)
//   c' = f.c_prev + i.g           h' = o.tanh(c')
inline constexpr std::size_t kGateInput = 0;
inline constexpr std::size_t kGateForget = 1;
inline constexpr std::size_t kGateCandidate = 2;
inline constexpr std::size_t kGateOutput = 3;

struct LstmStepCache {
    Tensor input_preact;  // the summed W_k * x_k term, before recurrence/bias
    LSTMState prev;
    Tensor gate_i, gate_f, gate_g, gate_o;
    Tensor c_new, tanh_c_new;
    bool valid = false;
};

// One step given the already-projected input contribution (4H).
LSTMState lstm_step(const Tensor& input_preact, const Parameter& w_rec, const Parameter& bias,
                    const LSTMState& prev, LstmStepCache& cache);

// Gradients of lstm_step. Accumulates into w_rec.grad and bias.grad, returns
// the gradient w.r.t. input_preact via d_input_preact and w.r.t. prev state
// via d_prev (both overwritten).
void lstm_step_backward(const LstmStepCache& cache, Parameter& w_rec, Parameter& bias,
                        const Tensor& d_h_new, const Tensor& d_c_new, Tensor& d_input_preact,
                        LSTMState& d_prev);

struct LstmCellCache {
    Tensor x;
    LstmStepCache step;
};

// Single-input convenience wrapper: z = W_in * x + W_rec * h_prev + bias.
LSTMState lstm_cell_forward(const Parameter& w_in, const Parameter& w_rec, const Parameter& bias,
                            const Tensor& x, const LSTMState& prev, LstmCellCache& cache);

struct LstmCellGrads {
    Tensor d_x;
    LSTMState d_prev;
};

LstmCellGrads lstm_cell_backward(Parameter& w_in, Parameter& w_rec, Parameter& bias,
                                 const LstmCellCache& cache, const Tensor& d_h_new,
                                 const Tensor& d_c_new);

// tanh of column `token` of an (E x V) embedding matrix. The one-hot matmul
// of the word id reduces to a column gather.
Tensor embed_forward(const Parameter& w_embed, std::size_t token);

// Accumulates the loss gradient into column `token`. `out` must be the
// cached embed_forward result for that token.
void embed_backward(Parameter& w_embed, std::size_t token, const Tensor& out,
                    const Tensor& d_out);

struct OutputCache {
    Tensor q, j, probs;
};

// j = tanh(W_qj * q); probs = softmax(W_jy * j).
Tensor output_forward(const Parameter& w_qj, const Parameter& w_jy, const Tensor& q,
                      OutputCache& cache);

// Backward from a gradient w.r.t. the pre-softmax logits. Accumulates weight
// grads and returns d_q.
Tensor output_backward(Parameter& w_qj, Parameter& w_jy, const OutputCache& cache,
                       const Tensor& d_logits);

// d(loss)/d(logits) for loss = -ln(probs[target] + eps), scaled by `scale`.
// Includes the exact probs[target]/(probs[target]+eps) factor of the floor.
Tensor cross_entropy_logit_grad(const Tensor& probs, std::size_t target, double scale);

}  // namespace ctxseq
