#include "stella/tc_patch.hpp"

namespace stella {

const char* component_name(ComponentKind k) {
    switch (k) {
        case ComponentKind::trend: return "trend";
        case ComponentKind::seasonal: return "seasonal";
        case ComponentKind::residual: return "residual";
    }
    return "?";
}

Tensor patchify(const Tensor& z, const PatchConfig& cfg, const RmsNorm& norm) {
    int64_t B = z.shape()[0], S = z.shape()[1], C = z.shape()[2];
    int64_t pn = cfg.patch_count(S);
    Tensor zc = permute(z, {0, 2, 1});  // B x C x S
    std::vector<Tensor> patches;
    patches.reserve(static_cast<size_t>(pn));
    for (int64_t i = 0; i < pn; ++i) {
        Tensor p = slice(zc, 2, i * cfg.stride, cfg.patch_len);  // B x C x P_ell
        patches.push_back(reshape(p, {B * C, 1, cfg.patch_len}));
    }
    Tensor tok = concat(patches, 1);  // (B*C) x P_n x P_ell
    return norm.forward(tok);
}

TcPatchEncoder::TcPatchEncoder(PatchConfig c, int64_t seq_len, Rng& rng, bool lin_only)
    : cfg(c), linear_only(lin_only) {
    p_n = cfg.patch_count(seq_len);
    token_norm = RmsNorm(cfg.patch_len);
    proj = Linear(cfg.patch_len, cfg.d_model, rng);
    if (!linear_only) {
        for (int64_t l = 0; l < cfg.tcn_layers; ++l)
            for (int64_t m = 0; m < cfg.sub_blocks; ++m) {
                convs.emplace_back(p_n, p_n, cfg.kernel, int64_t(1) << m, rng);
                // normalized over the channel (P_n) axis per position, so no
                // future position leaks through the norm statistics
                conv_norms.emplace_back(p_n);
            }
        tconv_w = init_kaiming({cfg.patch_len, cfg.d_model, 1}, cfg.patch_len, rng);
        tconv_b = Tensor::zeros({cfg.d_model}, true);
        dw_scale = Tensor::full({p_n}, 1.0, true);
        dw_bias = Tensor::zeros({p_n}, true);
    }
}

Tensor TcPatchEncoder::tcn_forward(const Tensor& tokens, bool training, Rng& rng) const {
    Tensor z = tokens;  // (B*C) x P_n x P_ell, already in (N, C, L) layout
    for (size_t i = 0; i < convs.size(); ++i) {
        Tensor u = convs[i].forward(z);
        u = permute(conv_norms[i].forward(permute(u, {0, 2, 1})), {0, 2, 1});
        u = dropout(gelu(u), cfg.dropout, training, rng);
        z = z + u;
    }
    return z;
}

Tensor TcPatchEncoder::project_head(const Tensor& h) const {
    int64_t bc = h.shape()[0];
    Tensor flat = reshape(h, {bc * p_n, cfg.patch_len});
    Tensor hat = proj.forward(gelu(flat));  // (BC*P_n) x D
    Tensor up = conv_transpose1d(reshape(flat, {bc * p_n, cfg.patch_len, 1}), tconv_w, tconv_b, 1);
    Tensor bar = hat + reshape(up, {bc * p_n, cfg.d_model});
    Tensor e = reshape(bar, {bc, p_n, cfg.d_model});
    // Depthwise 1x1 over the patch axis: per-patch scale and shift only.
    return e * reshape(dw_scale, {1, p_n, 1}) + reshape(dw_bias, {1, p_n, 1});
}

Tensor TcPatchEncoder::encode(const Tensor& z, bool training, Rng& rng) const {
    Tensor tokens = patchify(z, cfg, token_norm);
    if (linear_only) return proj.forward(tokens);
    Tensor h = tcn_forward(tokens, training, rng);
    return project_head(h);
}

void TcPatchEncoder::collect(ParamRegistry& reg, const std::string& prefix) const {
    token_norm.collect(reg, prefix + ".token_norm");
    proj.collect(reg, prefix + ".proj");
    if (linear_only) return;
    for (size_t i = 0; i < convs.size(); ++i) {
        convs[i].collect(reg, prefix + ".conv" + std::to_string(i));
        conv_norms[i].collect(reg, prefix + ".conv_norm" + std::to_string(i));
    }
    reg.add(prefix + ".tconv_w", tconv_w);
    reg.add(prefix + ".tconv_b", tconv_b);
    reg.add(prefix + ".dw_scale", dw_scale);
    reg.add(prefix + ".dw_bias", dw_bias);
}

}  // namespace stella
