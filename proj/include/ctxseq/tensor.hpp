#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace ctxseq {

// Dense float64 array, row-major, explicit shape, no broadcasting.
// Every exported operation uses a fixed summation order, so identical
// inputs always produce bit-identical outputs.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> shape_);
    Tensor(std::vector<std::size_t> shape_, std::vector<double> data_);

    static Tensor zeros(std::vector<std::size_t> shape_);
    static Tensor vector_of(std::vector<double> values);

    std::size_t size() const { return data.size(); }
    std::size_t rank() const { return shape.size(); }
    std::size_t rows() const;
    std::size_t cols() const;

    // Rank-2 element access.
    double& at(std::size_t r, std::size_t c);
    double at(std::size_t r, std::size_t c) const;

    double& operator[](std::size_t i) { return data[i]; }
    double operator[](std::size_t i) const { return data[i]; }

    void fill(double v);
    bool same_shape(const Tensor& other) const { return shape == other.shape; }
    std::string shape_str() const;
};

// a (m x k) * b (k x n) -> (m x n). Inner sum runs left-to-right over k.
Tensor matmul(const Tensor& a, const Tensor& b);

// W (m x n) * x (n) -> (m); the matrix product with a rank-1 operand.
Tensor matvec(const Tensor& w, const Tensor& x);
// W^T (n x m) * y (m) -> (n).
Tensor matvec_transposed(const Tensor& w, const Tensor& y);
// grad += dy (m) outer x (n), accumulated into an (m x n) tensor.
void add_outer(Tensor& grad, const Tensor& dy, const Tensor& x);

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // elementwise
Tensor scale(const Tensor& a, double s);
Tensor tanh(const Tensor& a);
Tensor sigmoid(const Tensor& a);

void add_inplace(Tensor& dst, const Tensor& src);          // dst += src
void add_scaled_inplace(Tensor& dst, const Tensor& src, double s);  // dst += s*src

// Max-subtracted softmax over a non-empty rank-1 tensor.
Tensor softmax(const Tensor& v);

// -ln(probs[target] + kCrossEntropyEpsilon); bounded for zero probability.
inline constexpr double kCrossEntropyEpsilon = 1e-12;
double cross_entropy(const Tensor& probs, std::size_t target);

// Index of the largest entry; ties resolve to the lowest index.
std::size_t argmax(const Tensor& v);

// True when every entry is finite.
bool all_finite(const Tensor& t);

}  // namespace ctxseq
