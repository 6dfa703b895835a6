#pragma once

#include "stella/nn.hpp"
#include "stella/normalization.hpp"
#include "stella/semantic_anchor.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct BackboneConfig {
    int64_t layers = 2;
    int64_t d_model = 64;
    int64_t n_heads = 4;
    int64_t d_ff = 256;
    int64_t lora_r = 4;
    real lora_alpha = 8;
    int64_t lora_r_out = 8;  // adapter on the attention output projection
    real lora_alpha_out = 16;
    real lora_dropout = 0.1;
    uint64_t frozen_seed = 1;
};

// Frozen base weight plus a trainable low-rank adapter. The up matrix starts
// at zero so the adapter contributes nothing before training.
struct LoraLinear {
    Tensor w0;      // in x out, frozen
    Tensor a_down;  // in x r
    Tensor b_up;    // r x out, zero init
    real scale = 0;
    real dropout_p = 0;
    int64_t rank = 0;

    LoraLinear() = default;
    LoraLinear(int64_t in, int64_t out, int64_t r, real alpha, real dropout_p, Rng& rng);
    Tensor forward(const Tensor& x, bool training, Rng& rng) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

struct TransformerLayer {
    RmsNorm attn_norm;  // gain trainable
    LoraLinear wq, wv, wo;
    Linear wk;          // frozen
    RmsNorm ffn_norm;
    Linear ffn1, ffn2;  // frozen
    int64_t n_heads = 0;
    int64_t d_model = 0;

    TransformerLayer() = default;
    TransformerLayer(const BackboneConfig& cfg, Rng& rng);
    // x: N x L x D with causal self-attention and rotary positions.
    Tensor forward(const Tensor& x, bool training, Rng& rng) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

// Decoder-only pre-norm stack over the assembled prompt+token stream; strips
// prompt segments to recover the per-component representations.
struct Backbone {
    BackboneConfig cfg;
    std::vector<TransformerLayer> layers;

    Backbone() = default;
    explicit Backbone(const BackboneConfig& cfg);

    Tensor run(const Tensor& x_in, bool training, Rng& rng) const;
    // Returns Z for emb_T, emb_S, emb_R segments of the layout.
    std::vector<Tensor> forward(const Tensor& x_in, const SequenceLayout& layout, bool training,
                                Rng& rng) const;
    void collect(ParamRegistry& reg, const std::string& prefix) const;
};

}  // namespace stella
