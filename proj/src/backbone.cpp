#include "stella/backbone.hpp"

#include <cmath>

namespace stella {

LoraLinear::LoraLinear(int64_t in, int64_t out, int64_t r, real alpha, real p, Rng& rng)
    : scale(r > 0 ? alpha / static_cast<real>(r) : 0), dropout_p(p), rank(r) {
    w0 = init_linear_weight(in, out, rng);
    w0.node()->requires_grad = false;
    if (r > 0) {
        a_down = init_linear_weight(in, r, rng);
        b_up = Tensor::zeros({r, out}, true);
    }
}

Tensor LoraLinear::forward(const Tensor& x, bool training, Rng& rng) const {
    Tensor y = linear(x, w0);
    if (rank > 0) {
        Tensor xa = linear(dropout(x, dropout_p, training, rng), a_down);
        y = y + linear(xa, b_up) * scale;
    }
    return y;
}

void LoraLinear::collect(ParamRegistry& reg, const std::string& prefix) const {
    reg.add(prefix + ".w0", w0, /*frozen=*/true);
    if (rank > 0) {
        reg.add(prefix + ".lora_a", a_down);
        reg.add(prefix + ".lora_b", b_up);
    }
}

namespace {

// Rotary position tables for a (N, L, dh) head layout, half-split pairing.
std::pair<Tensor, Tensor> rope_tables(int64_t len, int64_t dh) {
    std::vector<real> cosv(static_cast<size_t>(len * dh)), sinv(static_cast<size_t>(len * dh));
    int64_t half = dh / 2;
    for (int64_t p = 0; p < len; ++p)
        for (int64_t i = 0; i < dh; ++i) {
            real freq = std::pow(10000.0, -2.0 * static_cast<real>(i % half) /
                                              static_cast<real>(dh));
            cosv[static_cast<size_t>(p * dh + i)] = std::cos(static_cast<real>(p) * freq);
            sinv[static_cast<size_t>(p * dh + i)] = std::sin(static_cast<real>(p) * freq);
        }
    return {Tensor::from({1, len, dh}, std::move(cosv)),
            Tensor::from({1, len, dh}, std::move(sinv))};
}

Tensor rotate_half(const Tensor& x) {
    int64_t dh = x.shape()[2];
    Tensor x1 = slice(x, 2, 0, dh / 2);
    Tensor x2 = slice(x, 2, dh / 2, dh / 2);
    return concat({neg(x2), x1}, 2);
}

Tensor causal_mask(int64_t len) {
    std::vector<real> m(static_cast<size_t>(len * len), 0.0);
    for (int64_t i = 0; i < len; ++i)
        for (int64_t j = i + 1; j < len; ++j) m[static_cast<size_t>(i * len + j)] = -1e30;
    return Tensor::from({1, len, len}, std::move(m));
}

// (N, L, D) -> (N*heads, L, dh)
Tensor split_heads(const Tensor& x, int64_t heads) {
    int64_t n = x.shape()[0], l = x.shape()[1], d = x.shape()[2];
    int64_t dh = d / heads;
    Tensor r = reshape(x, {n, l, heads, dh});
    r = permute(r, {0, 2, 1, 3});
    return reshape(r, {n * heads, l, dh});
}

Tensor merge_heads(const Tensor& x, int64_t heads) {
    int64_t nh = x.shape()[0], l = x.shape()[1], dh = x.shape()[2];
    int64_t n = nh / heads;
    Tensor r = reshape(x, {n, heads, l, dh});
    r = permute(r, {0, 2, 1, 3});
    return reshape(r, {n, l, heads * dh});
}

}  // namespace

TransformerLayer::TransformerLayer(const BackboneConfig& cfg, Rng& rng)
    : n_heads(cfg.n_heads), d_model(cfg.d_model) {
    if (cfg.d_model % cfg.n_heads != 0) tensor_fail("d_model must be divisible by n_heads");
    attn_norm = RmsNorm(cfg.d_model);
    wq = LoraLinear(cfg.d_model, cfg.d_model, cfg.lora_r, cfg.lora_alpha, cfg.lora_dropout, rng);
    wv = LoraLinear(cfg.d_model, cfg.d_model, cfg.lora_r, cfg.lora_alpha, cfg.lora_dropout, rng);
    wo = LoraLinear(cfg.d_model, cfg.d_model, cfg.lora_r_out, cfg.lora_alpha_out,
                    cfg.lora_dropout, rng);
    wk = Linear(cfg.d_model, cfg.d_model, rng, /*bias=*/false);
    wk.w.node()->requires_grad = false;
    ffn_norm = RmsNorm(cfg.d_model);
    ffn1 = Linear(cfg.d_model, cfg.d_ff, rng, /*bias=*/false);
    ffn2 = Linear(cfg.d_ff, cfg.d_model, rng, /*bias=*/false);
    ffn1.w.node()->requires_grad = false;
    ffn2.w.node()->requires_grad = false;
}

Tensor TransformerLayer::forward(const Tensor& x, bool training, Rng& rng) const {
    int64_t len = x.shape()[1];
    int64_t dh = d_model / n_heads;
    Tensor h = attn_norm.forward(x);
    Tensor q = split_heads(wq.forward(h, training, rng), n_heads);
    Tensor k = split_heads(linear(h, wk.w), n_heads);
    Tensor v = split_heads(wv.forward(h, training, rng), n_heads);
    auto [cos_t, sin_t] = rope_tables(len, dh);
    q = q * cos_t + rotate_half(q) * sin_t;
    k = k * cos_t + rotate_half(k) * sin_t;
    Tensor scores = matmul(q, permute(k, {0, 2, 1})) / std::sqrt(static_cast<real>(dh));
    Tensor attn = softmax(scores + causal_mask(len), 2);
    Tensor ctx = merge_heads(matmul(attn, v), n_heads);
    Tensor msa = wo.forward(ctx, training, rng);
    Tensor x1 = x + msa;
    Tensor f = ffn_norm.forward(x1);
    Tensor ffn = linear(gelu(linear(f, ffn1.w)), ffn2.w);
    return x1 + ffn;
}

void TransformerLayer::collect(ParamRegistry& reg, const std::string& prefix) const {
    attn_norm.collect(reg, prefix + ".attn_norm");
    wq.collect(reg, prefix + ".wq");
    wv.collect(reg, prefix + ".wv");
    reg.add(prefix + ".wk.w", wk.w, /*frozen=*/true);
    wo.collect(reg, prefix + ".wo");
    ffn_norm.collect(reg, prefix + ".ffn_norm");
    reg.add(prefix + ".ffn1.w", ffn1.w, /*frozen=*/true);
    reg.add(prefix + ".ffn2.w", ffn2.w, /*frozen=*/true);
}

Backbone::Backbone(const BackboneConfig& c) : cfg(c) {
    Rng rng(cfg.frozen_seed);
    for (int64_t l = 0; l < cfg.layers; ++l) layers.emplace_back(cfg, rng);
}

Tensor Backbone::run(const Tensor& x_in, bool training, Rng& rng) const {
    Tensor x = x_in;
    for (const auto& layer : layers) x = layer.forward(x, training, rng);
    return x;
}

std::vector<Tensor> Backbone::forward(const Tensor& x_in, const SequenceLayout& layout,
                                      bool training, Rng& rng) const {
    if (x_in.shape()[1] != layout.total)
        tensor_fail("backbone_forward: sequence length " + std::to_string(x_in.shape()[1]) +
                    " != layout total " + std::to_string(layout.total));
    Tensor x = run(x_in, training, rng);
    std::vector<Tensor> out;
    for (const char* name : {"emb_T", "emb_S", "emb_R"}) {
        auto span = layout.find(name);
        if (!span) tensor_fail(std::string("backbone_forward: missing segment ") + name);
        out.push_back(slice(x, 1, span->offset, span->length));
    }
    return out;
}

void Backbone::collect(ParamRegistry& reg, const std::string& prefix) const {
    for (size_t l = 0; l < layers.size(); ++l)
        layers[l].collect(reg, prefix + ".layer" + std::to_string(l));
}

}  // namespace stella
