#include "ctxseq/model.hpp"

#include <cmath>

#include "ctxseq/errors.hpp"

namespace ctxseq {

std::string to_string(ModelMode mode) {
    return mode == ModelMode::baseline ? "baseline" : "context";
}

ModelMode model_mode_from_string(const std::string& s) {
    if (s == "baseline") return ModelMode::baseline;
    if (s == "context") return ModelMode::context;
    throw ConfigError("unknown model mode '" + s + "' (expected baseline|context)");
}

void ModelConfig::validate() const {
    if (src_vocab < kNumReserved || tgt_vocab < kNumReserved) {
        throw ConfigError("model: vocabulary sizes must cover the " +
                          std::to_string(kNumReserved) + " reserved ids");
    }
    if (embed_dim == 0 || hidden_dim == 0) {
        throw ConfigError("model: embed_dim and hidden_dim must be positive");
    }
    if (max_decode_len == 0) throw ConfigError("model: max_decode_len must be >= 1");
}

Seq2SeqModel::Seq2SeqModel(const ModelConfig& cfg) : cfg_(cfg) {
    cfg_.validate();
    const std::size_t e = cfg_.embed_dim, h = cfg_.hidden_dim;
    const std::size_t vs = cfg_.src_vocab, vt = cfg_.tgt_vocab;

    src_embed_ = Parameter("encoder.W_xi", {e, vs});
    enc_w_in_ = Parameter("encoder.W_ip", {4 * h, e});
    enc_w_rec_ = Parameter("encoder.W_pp", {4 * h, h});
    enc_bias_ = Parameter("encoder.bias", {4 * h});
    if (cfg_.mode == ModelMode::context) {
        con_w_start_ = Parameter("connect.W_pq", {4 * h, h});
        con_w_cur_ = Parameter("connect.W_cur", {4 * h, h});
        con_w_prev_ = Parameter("connect.W_prev", {4 * h, h});
        con_w_rec_ = Parameter("connect.W_rec", {4 * h, h});
        con_bias_ = Parameter("connect.bias", {4 * h});
    }
    tgt_embed_ = Parameter("decoder.W_yj", {e, vt});
    dec_w_in_ = Parameter("decoder.W_yq", {4 * h, e});
    dec_w_rec_ = Parameter("decoder.W_qq", {4 * h, h});
    dec_bias_ = Parameter("decoder.bias", {4 * h});
    out_w_qj_ = Parameter("output.W_qj", {e, h});
    out_w_jy_ = Parameter("output.W_jy", {vt, e});
    register_params();
}

void Seq2SeqModel::register_params() {
    params_ = {&src_embed_, &enc_w_in_, &enc_w_rec_, &enc_bias_};
    if (cfg_.mode == ModelMode::context) {
        params_.push_back(&con_w_start_);
        params_.push_back(&con_w_cur_);
        params_.push_back(&con_w_prev_);
        params_.push_back(&con_w_rec_);
        params_.push_back(&con_bias_);
    }
    params_.push_back(&tgt_embed_);
    params_.push_back(&dec_w_in_);
    params_.push_back(&dec_w_rec_);
    params_.push_back(&dec_bias_);
    params_.push_back(&out_w_qj_);
    params_.push_back(&out_w_jy_);
}

std::vector<const Parameter*> Seq2SeqModel::parameters() const {
    std::vector<const Parameter*> out(params_.begin(), params_.end());
    return out;
}

Parameter* Seq2SeqModel::find_parameter(const std::string& name) {
    for (Parameter* p : params_) {
        if (p->name == name) return p;
    }
    return nullptr;
}

void Seq2SeqModel::zero_grads() {
    for (Parameter* p : params_) p->zero_grad();
}

void Seq2SeqModel::init_params(std::uint64_t seed, double range) {
    if (range <= 0.0) throw DomainError("init_params: range must be positive");
    UniformRng rng(seed);
    const std::size_t h = cfg_.hidden_dim;
    for (Parameter* p : params_) {
        if (p->name.ends_with(".bias")) {
            p->value.fill(0.0);
            for (std::size_t k = 0; k < h; ++k) p->value[kGateForget * h + k] = 1.0;
        } else {
            fill_uniform(p->value, rng, range);
        }
        p->zero_grad();
    }
}

ContextState Seq2SeqModel::initial_context() const {
    ContextState ctx;
    ctx.connect_state = LSTMState(cfg_.hidden_dim);
    ctx.at_paragraph_start = true;
    return ctx;
}

void Seq2SeqModel::reset_context(ContextState& ctx) const {
    ctx.prev_encoder_final.reset();
    ctx.connect_state = LSTMState(cfg_.hidden_dim);
    ctx.at_paragraph_start = true;
}

EncodeResult Seq2SeqModel::encode(const std::vector<std::size_t>& src_ids) const {
    return encode_impl(src_ids, nullptr);
}

EncodeResult Seq2SeqModel::encode_impl(const std::vector<std::size_t>& src_ids,
                                       SentenceCache* cache) const {
    if (src_ids.empty()) throw DataError("encode: empty input");
    if (src_ids.back() != kEosId) throw DataError("encode: input must end with EOS");

    EncodeResult result;
    LSTMState state(cfg_.hidden_dim);
    for (std::size_t token : src_ids) {
        Tensor embedded = embed_forward(src_embed_, token);
        LstmCellCache cell;
        state = lstm_cell_forward(enc_w_in_, enc_w_rec_, enc_bias_, embedded, state, cell);
        result.states.push_back(state);
        if (cache) {
            cache->enc.push_back(SentenceCache::EncStep{token, std::move(embedded), std::move(cell)});
        }
    }
    result.final = result.states.back().h;
    return result;
}

LSTMState Seq2SeqModel::connect(const Tensor& final, ContextState& ctx) const {
    return connect_impl(final, ctx, nullptr);
}

LSTMState Seq2SeqModel::connect_impl(const Tensor& final, ContextState& ctx,
                                     SentenceCache* cache) const {
    const std::size_t h = cfg_.hidden_dim;
    if (final.rank() != 1 || final.size() != h) {
        throw DimensionError("connect: encoder final shape " + final.shape_str() +
                             " does not match hidden " + std::to_string(h));
    }

    if (cfg_.mode == ModelMode::baseline) {
        // Fig.-1 topology: the decoder starts directly from the sentence
        // vector; no cross-sentence state exists.
        LSTMState q1(h);
        q1.h = final;
        if (cache) cache->connect_used = false;
        return q1;
    }

    Tensor preact;
    LSTMState state_in;
    if (ctx.at_paragraph_start) {
        preact = matvec(con_w_start_.value, final);
        state_in = LSTMState(h);  // zero Connect state at a paragraph start
    } else {
        if (!ctx.prev_encoder_final) {
            throw StateError("connect: mid-paragraph call without a previous encoder state");
        }
        preact = add(matvec(con_w_cur_.value, final),
                     matvec(con_w_prev_.value, *ctx.prev_encoder_final));
        state_in = ctx.connect_state;
    }

    LstmStepCache local;
    LstmStepCache& step = cache ? cache->connect_step : local;
    LSTMState q1 = lstm_step(preact, con_w_rec_, con_bias_, state_in, step);

    if (cache) {
        cache->connect_used = true;
        cache->connect_paragraph_start = ctx.at_paragraph_start;
        cache->connect_final_in = final;
        if (!ctx.at_paragraph_start) cache->connect_prev_final_in = *ctx.prev_encoder_final;
    }

    ctx.prev_encoder_final = final;
    ctx.connect_state = q1;
    ctx.at_paragraph_start = false;
    return q1;
}

TeacherForcedResult Seq2SeqModel::decode_teacher_forced(
    const LSTMState& q1, const std::vector<std::size_t>& tgt_ids) const {
    return decode_impl(q1, tgt_ids, nullptr);
}

TeacherForcedResult Seq2SeqModel::decode_impl(const LSTMState& q1,
                                              const std::vector<std::size_t>& tgt_ids,
                                              SentenceCache* cache) const {
    if (tgt_ids.size() < 2 || tgt_ids.front() != kBosId || tgt_ids.back() != kEosId) {
        throw DataError("decode: target must be framed BOS ... EOS");
    }

    TeacherForcedResult result;
    LSTMState state = q1;
    const std::size_t steps = tgt_ids.size() - 1;
    for (std::size_t m = 0; m < steps; ++m) {
        const std::size_t in_token = tgt_ids[m];
        const std::size_t target = tgt_ids[m + 1];
        Tensor embedded = embed_forward(tgt_embed_, in_token);
        LstmCellCache cell;
        state = lstm_cell_forward(dec_w_in_, dec_w_rec_, dec_bias_, embedded, state, cell);
        OutputCache out;
        const Tensor& probs = output_forward(out_w_qj_, out_w_jy_, state.h, out);
        result.loss_sum += cross_entropy(probs, target);
        if (cache) {
            cache->dec.push_back(SentenceCache::DecStep{in_token, target, std::move(embedded),
                                                        std::move(cell), std::move(out)});
        } else {
            result.probs.push_back(probs);
        }
    }
    result.n_predicted = steps;
    result.loss_mean = result.loss_sum / static_cast<double>(steps);
    if (!std::isfinite(result.loss_mean)) throw NumericError("decode: non-finite loss");
    return result;
}

std::vector<std::size_t> Seq2SeqModel::decode_greedy(const LSTMState& q1,
                                                     std::size_t max_len) const {
    if (max_len == 0) throw DomainError("decode_greedy: max_len must be >= 1");
    std::vector<std::size_t> out;
    LSTMState state = q1;
    std::size_t in_token = kBosId;
    for (std::size_t m = 0; m < max_len; ++m) {
        Tensor embedded = embed_forward(tgt_embed_, in_token);
        LstmCellCache cell;
        state = lstm_cell_forward(dec_w_in_, dec_w_rec_, dec_bias_, embedded, state, cell);
        OutputCache cache;
        const Tensor& probs = output_forward(out_w_qj_, out_w_jy_, state.h, cache);
        const std::size_t next = argmax(probs);
        if (next == kEosId) break;
        out.push_back(next);
        in_token = next;
    }
    return out;
}

SentenceForwardResult Seq2SeqModel::forward_sentence(const std::vector<std::size_t>& src_framed,
                                                     const std::vector<std::size_t>& tgt_framed,
                                                     ContextState& ctx,
                                                     SentenceCache& cache) const {
    cache = SentenceCache{};
    EncodeResult enc = encode_impl(src_framed, &cache);
    LSTMState q1 = connect_impl(enc.final, ctx, &cache);
    TeacherForcedResult dec = decode_impl(q1, tgt_framed, &cache);
    cache.loss_sum = dec.loss_sum;
    cache.n_predicted = dec.n_predicted;
    return SentenceForwardResult{dec.loss_sum, dec.n_predicted};
}

ContextGrads Seq2SeqModel::backward_sentence(const SentenceCache& cache, double loss_scale,
                                             const ContextGrads* upstream) {
    if (cache.enc.empty() || cache.dec.empty()) {
        throw StateError("backward_sentence: cache not filled by forward_sentence");
    }
    const std::size_t h = cfg_.hidden_dim;

    // Decoder BPTT, newest step first.
    Tensor d_h = Tensor::zeros({h});
    Tensor d_c = Tensor::zeros({h});
    for (std::size_t m = cache.dec.size(); m-- > 0;) {
        const auto& step = cache.dec[m];
        const Tensor d_logits = cross_entropy_logit_grad(step.out.probs, step.target, loss_scale);
        add_inplace(d_h, output_backward(out_w_qj_, out_w_jy_, step.out, d_logits));
        LstmCellGrads grads =
            lstm_cell_backward(dec_w_in_, dec_w_rec_, dec_bias_, step.cell, d_h, d_c);
        embed_backward(tgt_embed_, step.in_token, step.embed, grads.d_x);
        d_h = std::move(grads.d_prev.h);
        d_c = std::move(grads.d_prev.c);
    }
    // d_h/d_c now hold the gradient w.r.t. q1, the decoder's initial state.
    if (upstream && upstream->d_connect_state) {
        add_inplace(d_h, upstream->d_connect_state->h);
        add_inplace(d_c, upstream->d_connect_state->c);
    }

    ContextGrads consumed;
    Tensor d_final;
    if (!cache.connect_used) {
        // Baseline: q1.h was the encoder final; q1.c was a constant zero.
        d_final = std::move(d_h);
    } else {
        Tensor d_preact;
        LSTMState d_state_in;
        lstm_step_backward(cache.connect_step, con_w_rec_, con_bias_, d_h, d_c, d_preact,
                           d_state_in);
        if (cache.connect_paragraph_start) {
            add_outer(con_w_start_.grad, d_preact, cache.connect_final_in);
            d_final = matvec_transposed(con_w_start_.value, d_preact);
            // The consumed Connect state was the zero constant; nothing flows.
        } else {
            add_outer(con_w_cur_.grad, d_preact, cache.connect_final_in);
            add_outer(con_w_prev_.grad, d_preact, cache.connect_prev_final_in);
            d_final = matvec_transposed(con_w_cur_.value, d_preact);
            consumed.d_prev_encoder_final = matvec_transposed(con_w_prev_.value, d_preact);
            consumed.d_connect_state = std::move(d_state_in);
        }
    }
    if (upstream && upstream->d_prev_encoder_final) {
        // The next sentence read our encoder final as its prev_encoder_final.
        add_inplace(d_final, *upstream->d_prev_encoder_final);
    }

    // Encoder BPTT from the final hidden state.
    Tensor d_eh = std::move(d_final);
    Tensor d_ec = Tensor::zeros({h});
    for (std::size_t t = cache.enc.size(); t-- > 0;) {
        const auto& step = cache.enc[t];
        LstmCellGrads grads =
            lstm_cell_backward(enc_w_in_, enc_w_rec_, enc_bias_, step.cell, d_eh, d_ec);
        embed_backward(src_embed_, step.token, step.embed, grads.d_x);
        d_eh = std::move(grads.d_prev.h);
        d_ec = std::move(grads.d_prev.c);
    }
    return consumed;
}

std::vector<std::size_t> Seq2SeqModel::translate_sentence(
    const std::vector<std::size_t>& src_framed, ContextState& ctx, std::size_t max_len) const {
    EncodeResult enc = encode_impl(src_framed, nullptr);
    LSTMState q1 = connect_impl(enc.final, ctx, nullptr);
    return decode_greedy(q1, max_len);
}

DocumentResult Seq2SeqModel::process_document(const EncodedDocument& doc, ProcessMode mode) {
    if (doc.sentences.empty()) throw DataError("process_document: empty document");

    DocumentResult result;
    ContextState ctx = initial_context();

    if (mode == ProcessMode::infer) {
        for (const auto& sentence : doc.sentences) {
            if (sentence.paragraph_start()) reset_context(ctx);
            result.translations.push_back(
                translate_sentence(frame_source(sentence.src_ids), ctx, cfg_.max_decode_len));
        }
        result.final_context = std::move(ctx);
        return result;
    }

    // Forward the whole document first so the per-token scale is known, then
    // run the per-sentence detached backward passes.
    std::vector<SentenceCache> caches(doc.sentences.size());
    for (std::size_t i = 0; i < doc.sentences.size(); ++i) {
        const auto& sentence = doc.sentences[i];
        if (sentence.paragraph_start()) reset_context(ctx);
        SentenceForwardResult fwd = forward_sentence(frame_source(sentence.src_ids),
                                                     frame_target(sentence.tgt_ids), ctx, caches[i]);
        result.sentence_losses.push_back(fwd.loss_sum / static_cast<double>(fwd.n_predicted));
        result.loss_sum += fwd.loss_sum;
        result.n_predicted += fwd.n_predicted;
    }
    const double scale = 1.0 / static_cast<double>(result.n_predicted);
    for (const auto& cache : caches) backward_sentence(cache, scale, nullptr);
    result.final_context = std::move(ctx);
    return result;
}

}  // namespace ctxseq
