#include "ctxseq/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ctxseq/errors.hpp"

namespace ctxseq {

namespace {

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
    if (!a.same_shape(b)) {
        throw DimensionError(std::string(op) + ": shape mismatch " + a.shape_str() +
                             " vs " + b.shape_str());
    }
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> shape_)
    : shape(std::move(shape_)), data(shape_product(shape), 0.0) {}

Tensor::Tensor(std::vector<std::size_t> shape_, std::vector<double> data_)
    : shape(std::move(shape_)), data(std::move(data_)) {
    if (data.size() != shape_product(shape)) {
        throw DimensionError("tensor: data length " + std::to_string(data.size()) +
                             " does not match shape " + shape_str());
    }
}

Tensor Tensor::zeros(std::vector<std::size_t> shape_) { return Tensor(std::move(shape_)); }

Tensor Tensor::vector_of(std::vector<double> values) {
    std::vector<std::size_t> s{values.size()};
    return Tensor(std::move(s), std::move(values));
}

std::size_t Tensor::rows() const {
    if (rank() != 2) throw DimensionError("rows(): tensor is not rank-2, shape " + shape_str());
    return shape[0];
}

std::size_t Tensor::cols() const {
    if (rank() != 2) throw DimensionError("cols(): tensor is not rank-2, shape " + shape_str());
    return shape[1];
}

double& Tensor::at(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
double Tensor::at(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

void Tensor::fill(double v) { std::fill(data.begin(), data.end(), v); }

std::string Tensor::shape_str() const {
    std::ostringstream out;
    out << "(";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) out << "x";
        out << shape[i];
    }
    out << ")";
    return out.str();
}

Tensor matmul(const Tensor& a, const Tensor& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.cols() != b.rows()) {
        throw DimensionError("matmul: incompatible shapes " + a.shape_str() + " vs " +
                             b.shape_str());
    }
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    Tensor out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
            double acc = 0.0;
            for (std::size_t t = 0; t < k; ++t) acc += a.data[i * k + t] * b.data[t * n + j];
            out.data[i * n + j] = acc;
        }
    }
    return out;
}

Tensor matvec(const Tensor& w, const Tensor& x) {
    if (w.rank() != 2 || x.rank() != 1 || w.cols() != x.size()) {
        throw DimensionError("matvec: incompatible shapes " + w.shape_str() + " vs " +
                             x.shape_str());
    }
    const std::size_t m = w.rows(), n = w.cols();
    Tensor out({m});
    for (std::size_t i = 0; i < m; ++i) {
        double acc = 0.0;
        const double* row = &w.data[i * n];
        for (std::size_t j = 0; j < n; ++j) acc += row[j] * x.data[j];
        out.data[i] = acc;
    }
    return out;
}

Tensor matvec_transposed(const Tensor& w, const Tensor& y) {
    if (w.rank() != 2 || y.rank() != 1 || w.rows() != y.size()) {
        throw DimensionError("matvec_transposed: incompatible shapes " + w.shape_str() +
                             " vs " + y.shape_str());
    }
    const std::size_t m = w.rows(), n = w.cols();
    Tensor out({n});
    // Accumulate row by row so the per-entry sum order stays fixed over m.
    for (std::size_t i = 0; i < m; ++i) {
        const double yi = y.data[i];
        const double* row = &w.data[i * n];
        for (std::size_t j = 0; j < n; ++j) out.data[j] += yi * row[j];
    }
    return out;
}

void add_outer(Tensor& grad, const Tensor& dy, const Tensor& x) {
    if (grad.rank() != 2 || grad.rows() != dy.size() || grad.cols() != x.size()) {
        throw DimensionError("add_outer: incompatible shapes " + grad.shape_str() + ", " +
                             dy.shape_str() + ", " + x.shape_str());
    }
    const std::size_t m = grad.rows(), n = grad.cols();
    for (std::size_t i = 0; i < m; ++i) {
        const double d = dy.data[i];
        double* row = &grad.data[i * n];
        for (std::size_t j = 0; j < n; ++j) row[j] += d * x.data[j];
    }
}

Tensor add(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "add");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] += b.data[i];
    return out;
}

Tensor sub(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "sub");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] -= b.data[i];
    return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
    require_same_shape(a, b, "mul");
    Tensor out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out.data[i] *= b.data[i];
    return out;
}

Tensor scale(const Tensor& a, double s) {
    Tensor out = a;
    for (double& v : out.data) v *= s;
    return out;
}

Tensor tanh(const Tensor& a) {
    Tensor out = a;
    for (double& v : out.data) v = std::tanh(v);
    return out;
}

Tensor sigmoid(const Tensor& a) {
    Tensor out = a;
    for (double& v : out.data) v = 1.0 / (1.0 + std::exp(-v));
    return out;
}

void add_inplace(Tensor& dst, const Tensor& src) {
    require_same_shape(dst, src, "add_inplace");
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += src.data[i];
}

void add_scaled_inplace(Tensor& dst, const Tensor& src, double s) {
    require_same_shape(dst, src, "add_scaled_inplace");
    for (std::size_t i = 0; i < dst.size(); ++i) dst.data[i] += s * src.data[i];
}

Tensor softmax(const Tensor& v) {
    if (v.size() == 0) throw DomainError("softmax: empty input");
    Tensor out = v;
    double mx = out.data[0];
    for (double x : out.data) mx = std::max(mx, x);
    double sum = 0.0;
    for (double& x : out.data) {
        x = std::exp(x - mx);
        sum += x;
    }
    for (double& x : out.data) x /= sum;
    return out;
}

double cross_entropy(const Tensor& probs, std::size_t target) {
    if (target >= probs.size()) {
        throw IndexError("cross_entropy: target " + std::to_string(target) +
                         " out of range for " + std::to_string(probs.size()) + " classes");
    }
    return -std::log(probs.data[target] + kCrossEntropyEpsilon);
}

std::size_t argmax(const Tensor& v) {
    if (v.size() == 0) throw DomainError("argmax: empty input");
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (v.data[i] > v.data[best]) best = i;
    }
    return best;
}

bool all_finite(const Tensor& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

}  // namespace ctxseq
