#include "ctxseq/layers.hpp"

#include <cmath>

#include "ctxseq/errors.hpp"

namespace ctxseq {

void fill_uniform(Tensor& t, UniformRng& rng, double r) {
    for (double& v : t.data) v = rng.next_symmetric(r);
}

namespace {

void check_gate_shapes(const Tensor& preact, const Parameter& w_rec, const Parameter& bias,
                       const LSTMState& prev) {
    const std::size_t hidden = prev.hidden();
    if (preact.rank() != 1 || preact.size() != 4 * hidden) {
        throw DimensionError("lstm_step: preactivation shape " + preact.shape_str() +
                             " does not match 4x hidden " + std::to_string(hidden));
    }
    if (w_rec.value.rank() != 2 || w_rec.value.rows() != 4 * hidden ||
        w_rec.value.cols() != hidden) {
        throw DimensionError("lstm_step: recurrent weight shape " + w_rec.value.shape_str() +
                             " incompatible with hidden " + std::to_string(hidden));
    }
    if (bias.value.size() != 4 * hidden) {
        throw DimensionError("lstm_step: bias shape " + bias.value.shape_str() +
                             " incompatible with hidden " + std::to_string(hidden));
    }
    if (prev.h.size() != prev.c.size()) {
        throw DimensionError("lstm_step: state h/c length mismatch");
    }
}

}  // namespace

LSTMState lstm_step(const Tensor& input_preact, const Parameter& w_rec, const Parameter& bias,
                    const LSTMState& prev, LstmStepCache& cache) {
    check_gate_shapes(input_preact, w_rec, bias, prev);
    const std::size_t hidden = prev.hidden();

    Tensor z = input_preact;
    const Tensor rec = matvec(w_rec.value, prev.h);
    for (std::size_t i = 0; i < 4 * hidden; ++i) z[i] += rec[i] + bias.value[i];

    cache.input_preact = input_preact;
    cache.prev = prev;
    cache.gate_i = Tensor::zeros({hidden});
    cache.gate_f = Tensor::zeros({hidden});
    cache.gate_g = Tensor::zeros({hidden});
    cache.gate_o = Tensor::zeros({hidden});

    LSTMState next(hidden);
    cache.c_new = Tensor::zeros({hidden});
    cache.tanh_c_new = Tensor::zeros({hidden});
    for (std::size_t k = 0; k < hidden; ++k) {
        const double zi = z[kGateInput * hidden + k];
        const double zf = z[kGateForget * hidden + k];
        const double zg = z[kGateCandidate * hidden + k];
        const double zo = z[kGateOutput * hidden + k];
        const double gi = 1.0 / (1.0 + std::exp(-zi));
        const double gf = 1.0 / (1.0 + std::exp(-zf));
        const double gg = std::tanh(zg);
        const double go = 1.0 / (1.0 + std::exp(-zo));
        const double c = gf * prev.c[k] + gi * gg;
        const double tc = std::tanh(c);
        cache.gate_i[k] = gi;
        cache.gate_f[k] = gf;
        cache.gate_g[k] = gg;
        cache.gate_o[k] = go;
        cache.c_new[k] = c;
        cache.tanh_c_new[k] = tc;
        next.c[k] = c;
        next.h[k] = go * tc;
    }
    cache.valid = true;
    return next;
}

void lstm_step_backward(const LstmStepCache& cache, Parameter& w_rec, Parameter& bias,
                        const Tensor& d_h_new, const Tensor& d_c_new, Tensor& d_input_preact,
                        LSTMState& d_prev) {
    if (!cache.valid) throw StateError("lstm_step_backward: cache not produced by a forward call");
    const std::size_t hidden = cache.prev.hidden();
    if (d_h_new.size() != hidden || d_c_new.size() != hidden) {
        throw DimensionError("lstm_step_backward: upstream gradient shape mismatch");
    }

    Tensor d_z = Tensor::zeros({4 * hidden});
    d_prev = LSTMState(hidden);
    for (std::size_t k = 0; k < hidden; ++k) {
        const double gi = cache.gate_i[k];
        const double gf = cache.gate_f[k];
        const double gg = cache.gate_g[k];
        const double go = cache.gate_o[k];
        const double tc = cache.tanh_c_new[k];

        const double d_o = d_h_new[k] * tc;
        double d_c = d_c_new[k] + d_h_new[k] * go * (1.0 - tc * tc);
        const double d_i = d_c * gg;
        const double d_f = d_c * cache.prev.c[k];
        const double d_g = d_c * gi;

        d_z[kGateInput * hidden + k] = d_i * gi * (1.0 - gi);
        d_z[kGateForget * hidden + k] = d_f * gf * (1.0 - gf);
        d_z[kGateCandidate * hidden + k] = d_g * (1.0 - gg * gg);
        d_z[kGateOutput * hidden + k] = d_o * go * (1.0 - go);

        d_prev.c[k] = d_c * gf;
    }

    add_outer(w_rec.grad, d_z, cache.prev.h);
    add_inplace(bias.grad, d_z);
    d_prev.h = matvec_transposed(w_rec.value, d_z);
    d_input_preact = d_z;
}

LSTMState lstm_cell_forward(const Parameter& w_in, const Parameter& w_rec, const Parameter& bias,
                            const Tensor& x, const LSTMState& prev, LstmCellCache& cache) {
    if (w_in.value.rank() != 2 || w_in.value.cols() != x.size()) {
        throw DimensionError("lstm_cell_forward: input weight " + w_in.value.shape_str() +
                             " incompatible with input " + x.shape_str());
    }
    cache.x = x;
    return lstm_step(matvec(w_in.value, x), w_rec, bias, prev, cache.step);
}

LstmCellGrads lstm_cell_backward(Parameter& w_in, Parameter& w_rec, Parameter& bias,
                                 const LstmCellCache& cache, const Tensor& d_h_new,
                                 const Tensor& d_c_new) {
    LstmCellGrads grads;
    Tensor d_preact;
    lstm_step_backward(cache.step, w_rec, bias, d_h_new, d_c_new, d_preact, grads.d_prev);
    add_outer(w_in.grad, d_preact, cache.x);
    grads.d_x = matvec_transposed(w_in.value, d_preact);
    return grads;
}

Tensor embed_forward(const Parameter& w_embed, std::size_t token) {
    const Tensor& w = w_embed.value;
    if (w.rank() != 2) throw DimensionError("embed_forward: weight must be rank-2");
    if (token >= w.cols()) {
        throw IndexError("embed_forward: token " + std::to_string(token) +
                         " out of range for vocabulary " + std::to_string(w.cols()));
    }
    const std::size_t e = w.rows(), v = w.cols();
    Tensor out({e});
    for (std::size_t i = 0; i < e; ++i) out[i] = std::tanh(w.data[i * v + token]);
    return out;
}

void embed_backward(Parameter& w_embed, std::size_t token, const Tensor& out,
                    const Tensor& d_out) {
    const std::size_t e = w_embed.value.rows(), v = w_embed.value.cols();
    if (token >= v) throw IndexError("embed_backward: token out of range");
    if (out.size() != e || d_out.size() != e) {
        throw DimensionError("embed_backward: gradient shape mismatch");
    }
    for (std::size_t i = 0; i < e; ++i) {
        w_embed.grad.data[i * v + token] += d_out[i] * (1.0 - out[i] * out[i]);
    }
}

Tensor output_forward(const Parameter& w_qj, const Parameter& w_jy, const Tensor& q,
                      OutputCache& cache) {
    if (w_qj.value.cols() != q.size()) {
        throw DimensionError("output_forward: W_qj " + w_qj.value.shape_str() +
                             " incompatible with state " + q.shape_str());
    }
    if (w_jy.value.cols() != w_qj.value.rows()) {
        throw DimensionError("output_forward: W_jy " + w_jy.value.shape_str() +
                             " incompatible with W_qj " + w_qj.value.shape_str());
    }
    cache.q = q;
    cache.j = tanh(matvec(w_qj.value, q));
    cache.probs = softmax(matvec(w_jy.value, cache.j));
    return cache.probs;
}

Tensor output_backward(Parameter& w_qj, Parameter& w_jy, const OutputCache& cache,
                       const Tensor& d_logits) {
    add_outer(w_jy.grad, d_logits, cache.j);
    Tensor d_j = matvec_transposed(w_jy.value, d_logits);
    for (std::size_t i = 0; i < d_j.size(); ++i) d_j[i] *= 1.0 - cache.j[i] * cache.j[i];
    add_outer(w_qj.grad, d_j, cache.q);
    return matvec_transposed(w_qj.value, d_j);
}

Tensor cross_entropy_logit_grad(const Tensor& probs, std::size_t target, double scale) {
    if (target >= probs.size()) throw IndexError("cross_entropy_logit_grad: target out of range");
    const double pt = probs[target];
    const double factor = scale * pt / (pt + kCrossEntropyEpsilon);
    Tensor d = probs;
    for (double& v : d.data) v *= factor;
    d[target] -= factor;
    return d;
}

}  // namespace ctxseq
