#include "stella/neural_stl.hpp"

#include <algorithm>

namespace stella {

NeuralStl::NeuralStl(int64_t c, int64_t dh, Rng& rng) : channels(c), d_h(dh) {
    for (int64_t i = 0; i < c; ++i) cells.emplace_back(1, dh, rng);
    w_contract = init_linear_weight(dh, 1, rng);
    b_contract = Tensor::zeros({1}, true);
    int64_t width = std::max<int64_t>(c, 8);
    trend_mixer = Mlp(c, width, c, rng);
    season_mixer = Mlp(c, width, c, rng);
}

Tensor NeuralStl::proto_trend(const Tensor& xnorm) const {
    if (xnorm.shape()[2] != channels)
        tensor_fail("neural_stl: expected " + std::to_string(channels) + " channels, got " +
                    std::to_string(xnorm.shape()[2]));
    int64_t B = xnorm.shape()[0], S = xnorm.shape()[1];
    std::vector<Tensor> cols;
    cols.reserve(static_cast<size_t>(channels));
    for (int64_t c = 0; c < channels; ++c) {
        Tensor xc = slice(xnorm, 2, c, 1);                   // B x S x 1
        Tensor h = cells[static_cast<size_t>(c)].forward(xc);  // B x S x d_h
        Tensor z = gelu(linear(h, w_contract, b_contract));    // B x S x 1
        cols.push_back(z);
    }
    return concat(cols, 2);  // B x S x C
}

ComponentTriple NeuralStl::synthesize(const Tensor& xnorm, const Tensor& z) const {
    Tensor trend = trend_mixer.forward(z);
    Tensor s_pre = xnorm - trend;
    Tensor seasonal = season_mixer.forward(s_pre);
    Tensor residual = xnorm - trend - seasonal;
    return {trend, seasonal, residual};
}

ComponentTriple NeuralStl::forward(const Tensor& xnorm) const {
    if (passthrough) {
        Tensor zero = Tensor::zeros(xnorm.shape());
        return {xnorm, zero, zero};
    }
    return synthesize(xnorm, proto_trend(xnorm));
}

void NeuralStl::collect(ParamRegistry& reg, const std::string& prefix) const {
    if (passthrough) return;
    for (size_t c = 0; c < cells.size(); ++c)
        cells[c].collect(reg, prefix + ".lstm" + std::to_string(c));
    reg.add(prefix + ".w_contract", w_contract);
    reg.add(prefix + ".b_contract", b_contract);
    trend_mixer.collect(reg, prefix + ".trend_mixer");
    season_mixer.collect(reg, prefix + ".season_mixer");
}

}  // namespace stella
