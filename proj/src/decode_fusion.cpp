#include "stella/decode_fusion.hpp"

#include <algorithm>

namespace stella {

DecodeHead::DecodeHead(int64_t pn, int64_t d, int64_t h, Rng& rng)
    : res1(d, d, rng), res2(d, d, rng), proj(pn * d, h, rng), p_n(pn), d_model(d), horizon(h) {}

Tensor DecodeHead::forward(const Tensor& z, int64_t batch, int64_t channels) const {
    Tensor r = z + res2.forward(gelu(res1.forward(z)));
    Tensor flat = reshape(r, {batch * channels, p_n * d_model});
    Tensor y = proj.forward(flat);                       // (B*C) x H
    y = reshape(y, {batch, channels, horizon});
    return permute(y, {0, 2, 1});                        // B x H x C
}

void DecodeHead::collect(ParamRegistry& reg, const std::string& prefix) const {
    res1.collect(reg, prefix + ".res1");
    res2.collect(reg, prefix + ".res2");
    proj.collect(reg, prefix + ".proj");
}

GatedFusion::GatedFusion(int64_t h, Rng& rng) : horizon(h) {
    w_base = Tensor::from({3}, {1.0, 1.0, 1.0}, true);
    gate = Mlp(h, std::max<int64_t>(h / 4, 16), 3 * h, rng);
}

FusionResult GatedFusion::fuse(const Tensor& yt, const Tensor& ys, const Tensor& yr) const {
    int64_t B = yt.shape()[0], H = yt.shape()[1], C = yt.shape()[2];
    Tensor f = yt + ys + yr;                               // B x H x C
    Tensor fc = reshape(permute(f, {0, 2, 1}), {B * C, H});
    Tensor dg = gate.forward(fc);                          // (B*C) x 3H
    Tensor g = reshape(dg, {B, C, H, 3}) + reshape(w_base, {1, 1, 1, 3});
    Tensor fused;
    const Tensor* comps[3] = {&yt, &ys, &yr};
    for (int64_t k = 0; k < 3; ++k) {
        Tensor gk = reshape(slice(g, 3, k, 1), {B, C, H});
        gk = permute(gk, {0, 2, 1});                       // B x H x C
        Tensor term = gk * (*comps[k]);
        fused = k == 0 ? term : fused + term;
    }
    Tensor gates = permute(g, {0, 2, 1, 3});               // B x H x C x 3
    return {fused, gates};
}

void GatedFusion::collect(ParamRegistry& reg, const std::string& prefix) const {
    reg.add(prefix + ".w_base", w_base);
    gate.collect(reg, prefix + ".gate");
}

}  // namespace stella
