#pragma once

#include "stella/nn.hpp"
#include "stella/normalization.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct PatchConfig {
    int64_t patch_len = 16;
    int64_t stride = 16;
    int64_t tcn_layers = 2;  // residual layers
    int64_t sub_blocks = 3;  // dilations 1,2,4,...
    int64_t kernel = 3;
    real dropout = 0.1;
    int64_t d_model = 64;

    int64_t patch_count(int64_t seq_len) const {
        if (seq_len < patch_len)
            tensor_fail("patchify: S=" + std::to_string(seq_len) + " < patch length " +
                        std::to_string(patch_len));
        return (seq_len - patch_len) / stride + 1;
    }
};

enum class ComponentKind { trend, seasonal, residual };
const char* component_name(ComponentKind k);

// Non-overlapping patch split plus RMSNorm over the patch axis.
// Z: B x S x C -> tokens (B*C) x P_n x P_ell.
Tensor patchify(const Tensor& z, const PatchConfig& cfg, const RmsNorm& norm);

// One TC-Patch encoder: dilated causal TCN over the remapped axes
// (B*C batch, P_n channels, P_ell sequence), then the projection head.
struct TcPatchEncoder {
    PatchConfig cfg;
    RmsNorm token_norm;                           // over P_ell
    std::vector<WeightNormConv1d> convs;          // tcn_layers * sub_blocks
    std::vector<RmsNorm> conv_norms;              // over P_n, per position
    Linear proj;                                  // P_ell -> D
    Tensor tconv_w;                               // P_ell x D x 1 (Cin,Cout,K)
    Tensor tconv_b;                               // D
    Tensor dw_scale;                              // P_n (per-patch recalibration)
    Tensor dw_bias;                               // P_n
    bool linear_only = false;                     // w/o TC-P variant
    int64_t p_n = 0;

    TcPatchEncoder() = default;
    TcPatchEncoder(PatchConfig cfg, int64_t seq_len, Rng& rng, bool linear_only = false);

    Tensor tcn_forward(const Tensor& tokens, bool training, Rng& rng) const;
    Tensor project_head(const Tensor& h) const;
    // Z: B x S x C -> embedding (B*C) x P_n x D.
    Tensor encode(const Tensor& z, bool training, Rng& rng) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

}  // namespace stella
