#include "ctxseq/bleu.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "ctxseq/errors.hpp"

namespace ctxseq {

namespace {

// n-gram -> count, keyed by the joined token string ('\x1f' separator).
std::map<std::string, std::size_t> ngram_counts(const TokenSeq& tokens, std::size_t n) {
    std::map<std::string, std::size_t> counts;
    if (tokens.size() < n) return counts;
    for (std::size_t i = 0; i + n <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (std::size_t k = 1; k < n; ++k) {
            key += '\x1f';
            key += tokens[i + k];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double bleu_corpus(const std::vector<TokenSeq>& hyps, const std::vector<TokenSeq>& refs,
                   std::size_t max_n, bool smooth) {
    if (hyps.size() != refs.size()) {
        throw DataError("bleu: " + std::to_string(hyps.size()) + " hypotheses vs " +
                        std::to_string(refs.size()) + " references");
    }
    if (max_n == 0) throw DomainError("bleu: max_n must be >= 1");

    std::vector<std::size_t> matches(max_n, 0), totals(max_n, 0);
    std::size_t hyp_len = 0, ref_len = 0;
    for (std::size_t i = 0; i < hyps.size(); ++i) {
        hyp_len += hyps[i].size();
        ref_len += refs[i].size();
        for (std::size_t n = 1; n <= max_n; ++n) {
            const auto hyp_ngrams = ngram_counts(hyps[i], n);
            const auto ref_ngrams = ngram_counts(refs[i], n);
            for (const auto& [gram, count] : hyp_ngrams) {
                totals[n - 1] += count;
                auto it = ref_ngrams.find(gram);
                if (it != ref_ngrams.end()) matches[n - 1] += std::min(count, it->second);
            }
        }
    }

    if (hyp_len == 0) return 0.0;

    double log_precision_sum = 0.0;
    std::size_t orders_used = 0;
    for (std::size_t n = 0; n < max_n; ++n) {
        if (totals[n] == 0) continue;  // corpus too short for this order
        double p;
        if (smooth) {
            p = static_cast<double>(matches[n] + 1) / static_cast<double>(totals[n] + 1);
        } else {
            if (matches[n] == 0) return 0.0;
            p = static_cast<double>(matches[n]) / static_cast<double>(totals[n]);
        }
        log_precision_sum += std::log(p);
        ++orders_used;
    }
    if (orders_used == 0) return 0.0;

    const double brevity =
        std::exp(std::min(0.0, 1.0 - static_cast<double>(ref_len) / static_cast<double>(hyp_len)));
    return brevity * std::exp(log_precision_sum / static_cast<double>(orders_used));
}

double bleu_sentence(const TokenSeq& hyp, const TokenSeq& ref, std::size_t max_n, bool smooth) {
    return bleu_corpus({hyp}, {ref}, max_n, smooth);
}

}  // namespace ctxseq
