#pragma once

#include "stella/nn.hpp"
#include "stella/tensor.hpp"

namespace stella {

// Component head: position-wise two-layer residual MLP over the patch tokens,
// then a flatten(P_n*D) -> H projection. One head per component, disjoint
// parameters.
struct DecodeHead {
    Linear res1, res2;  // D -> D -> D, shared across patches
    Linear proj;        // P_n*D -> H
    int64_t p_n = 0, d_model = 0, horizon = 0;

    DecodeHead() = default;
    DecodeHead(int64_t p_n, int64_t d_model, int64_t horizon, Rng& rng);
    // z: (B*C) x P_n x D -> B x H x C
    Tensor forward(const Tensor& z, int64_t batch, int64_t channels) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

struct FusionResult {
    Tensor fused;  // B x H x C
    Tensor gates;  // B x H x C x 3
};

// Channel-aware residual gating: static base weights plus a dynamic term from
// the summed component forecasts of each channel.
struct GatedFusion {
    Tensor w_base;  // 3, init (1,1,1)
    Mlp gate;       // H -> max(H/4,16) -> 3H, shared across channels
    int64_t horizon = 0;

    GatedFusion() = default;
    GatedFusion(int64_t horizon, Rng& rng);
    FusionResult fuse(const Tensor& yt, const Tensor& ys, const Tensor& yr) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

}  // namespace stella
