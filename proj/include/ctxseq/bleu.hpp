#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ctxseq {

using TokenSeq = std::vector<std::string>;

// Corpus-level BLEU: geometric mean of clipped n-gram precisions for
// n = 1..max_n times the brevity penalty exp(min(0, 1 - r/c)), one
// reference per hypothesis.
//
// Unsmoothed by default: a zero clipped count at any order gives 0. With
// `smooth`, every order uses (matches + 1) / (total + 1). Orders where the
// corpus has no hypothesis n-grams at all (every sentence shorter than n)
// are skipped, so identical corpora score exactly 1 at any length.
double bleu_corpus(const std::vector<TokenSeq>& hyps, const std::vector<TokenSeq>& refs,
                   std::size_t max_n = 4, bool smooth = false);

// Single-pair convenience used for per-sentence reporting.
double bleu_sentence(const TokenSeq& hyp, const TokenSeq& ref, std::size_t max_n = 4,
                     bool smooth = true);

}  // namespace ctxseq
