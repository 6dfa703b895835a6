#pragma once

#include "stella/nn.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct ComponentTriple {
    Tensor trend;     // B x S x C
    Tensor seasonal;  // B x S x C
    Tensor residual;  // B x S x C
};

// Learnable additive decomposition: per-channel LSTMs produce a proto-trend,
// time-shared channel mixers synthesize trend and seasonal parts, and the
// residual closes the sum against the normalized input.
struct NeuralStl {
    std::vector<Lstm> cells;  // one per channel
    Tensor w_contract;        // d_h x 1, shared across channels
    Tensor b_contract;        // scalar
    Mlp trend_mixer;          // C -> C
    Mlp season_mixer;         // C -> C
    int64_t channels = 0;
    int64_t d_h = 0;
    bool passthrough = false;  // w/o N-STL variant: T = input, S = R = 0

    NeuralStl() = default;
    NeuralStl(int64_t channels, int64_t d_h, Rng& rng);

    Tensor proto_trend(const Tensor& xnorm) const;
    ComponentTriple synthesize(const Tensor& xnorm, const Tensor& z) const;
    ComponentTriple forward(const Tensor& xnorm) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

}  // namespace stella
