#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctxseq/parameter.hpp"

namespace ctxseq {

struct GradCheckEntry {
    std::string param;
    double max_rel_error = 0.0;
    std::size_t worst_index = 0;
    double analytic_at_worst = 0.0;
    double numeric_at_worst = 0.0;
    bool passed = true;
};

struct GradCheckReport {
    double eps = 0.0;
    double tol = 0.0;
    std::vector<GradCheckEntry> entries;

    bool all_passed() const;
    double max_rel_error() const;
};

// Central-difference check of analytic gradients.
//
// `loss_fn` must be a deterministic, side-effect-free forward pass over the
// current parameter values. Each parameter's `grad` must already hold the
// analytic gradient of that same loss. Every entry is perturbed by +/-eps and
// compared as |a - n| / max(|a|, |n|, 1e-8).
GradCheckReport grad_check(const std::vector<Parameter*>& params,
                           const std::function<double()>& loss_fn, double eps, double tol);

}  // namespace ctxseq
