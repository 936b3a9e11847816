#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>

#include "ctxseq/tensor.hpp"

namespace ctxseq {

// A named weight tensor with a same-shaped gradient accumulator.
// Forward passes read `value`; backward passes only add into `grad`.
struct Parameter {
    std::string name;
    Tensor value;
    Tensor grad;

    Parameter() = default;
    Parameter(std::string name_, std::vector<std::size_t> shape)
        : name(std::move(name_)), value(Tensor::zeros(shape)), grad(Tensor::zeros(shape)) {}

    void zero_grad() { grad.fill(0.0); }
};

// Uniform draws derived from raw mt19937_64 output, so the stream does not
// depend on the standard library's distribution implementation.
class UniformRng {
  public:
    explicit UniformRng(std::uint64_t seed) : engine_(seed) {}

    // [0, 1)
    double next_unit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    // [-r, r)
    double next_symmetric(double r) { return (2.0 * next_unit() - 1.0) * r; }

    std::uint64_t next_u64() { return engine_(); }

  private:
    std::mt19937_64 engine_;
};

// Fills a tensor with i.i.d. uniform(-r, r) draws in flat index order.
void fill_uniform(Tensor& t, UniformRng& rng, double r);

}  // namespace ctxseq
