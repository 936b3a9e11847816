#include "ctxseq/gradcheck.hpp"

#include <algorithm>
#include <cmath>

#include "ctxseq/errors.hpp"

namespace ctxseq {

bool GradCheckReport::all_passed() const {
    return std::all_of(entries.begin(), entries.end(),
                       [](const GradCheckEntry& e) { return e.passed; });
}

double GradCheckReport::max_rel_error() const {
    double mx = 0.0;
    for (const auto& e : entries) mx = std::max(mx, e.max_rel_error);
    return mx;
}

GradCheckReport grad_check(const std::vector<Parameter*>& params,
                           const std::function<double()>& loss_fn, double eps, double tol) {
    if (eps <= 0.0) throw DomainError("grad_check: eps must be positive");
    GradCheckReport report;
    report.eps = eps;
    report.tol = tol;

    auto eval = [&]() {
        double loss = loss_fn();
        if (!std::isfinite(loss)) throw NumericError("grad_check: loss is not finite");
        return loss;
    };
    eval();  // reject non-finite losses before perturbing anything

    for (Parameter* p : params) {
        GradCheckEntry entry;
        entry.param = p->name;
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value[i];
            p->value[i] = saved + eps;
            const double up = eval();
            p->value[i] = saved - eps;
            const double down = eval();
            p->value[i] = saved;

            const double numeric = (up - down) / (2.0 * eps);
            const double analytic = p->grad[i];
            const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-8});
            const double rel = std::abs(analytic - numeric) / denom;
            if (rel > entry.max_rel_error) {
                entry.max_rel_error = rel;
                entry.worst_index = i;
                entry.analytic_at_worst = analytic;
                entry.numeric_at_worst = numeric;
            }
        }
        entry.passed = entry.max_rel_error <= tol;
        report.entries.push_back(std::move(entry));
    }
    return report;
}

}  // namespace ctxseq
