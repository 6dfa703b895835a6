#pragma once

#include "stella/nn.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct RevinStats {
    Tensor mu;     // B x 1 x C
    Tensor sigma;  // B x 1 x C
    Tensor gamma;  // 1 x 1 x C
    Tensor beta;   // 1 x 1 x C
    real eps = 1e-5;
};

// Reversible instance normalization at the model boundary. gamma/beta are the
// learnable affine owned by the model; statistics are per (instance, channel)
// over the S axis with the population (1/S) variance.
struct Revin {
    Tensor gamma;  // 1 x 1 x C
    Tensor beta;   // 1 x 1 x C
    real eps = 1e-5;
    // The denormalizer divides by gamma+eps as written; exact_inverse divides
    // by gamma instead, recovering a bit-exact round trip.
    bool exact_inverse = false;

    Revin() = default;
    explicit Revin(int64_t channels, real eps = 1e-5);

    std::pair<Tensor, RevinStats> normalize(const Tensor& x) const;
    Tensor denormalize(const Tensor& yhat, const RevinStats& stats) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

struct RmsNorm {
    Tensor gain;  // D
    real eps = 1e-5;

    RmsNorm() = default;
    explicit RmsNorm(int64_t d, real eps = 1e-5);
    Tensor forward(const Tensor& h) const;
    void collect(ParamRegistry& reg, const std::string& prefix, bool frozen = false) const;
};

}  // namespace stella
