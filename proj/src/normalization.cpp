#include "stella/normalization.hpp"

#include <cmath>

namespace stella {

Revin::Revin(int64_t channels, real e) : eps(e) {
    gamma = Tensor::full({1, 1, channels}, 1.0, true);
    beta = Tensor::zeros({1, 1, channels}, true);
}

std::pair<Tensor, RevinStats> Revin::normalize(const Tensor& x) const {
    if (x.dim() != 3) tensor_fail("revin_normalize expects B x S x C, got " + shape_str(x.shape()));
    if (x.shape()[1] < 2) tensor_fail("revin_normalize needs S >= 2");
    Tensor mu = mean(x, 1, true);
    Tensor centered = x - mu;
    Tensor var = mean(centered * centered, 1, true);
    Tensor sigma = sqrt(var + 1e-300);  // keeps sqrt differentiable off zero
    Tensor xnorm = gamma * (centered / (sigma + eps)) + beta;
    RevinStats stats{mu, sigma, gamma, beta, eps};
    return {xnorm, stats};
}

Tensor Revin::denormalize(const Tensor& yhat, const RevinStats& stats) const {
    real denom_eps = exact_inverse ? 0.0 : stats.eps;
    for (real g : stats.gamma.data())
        if (std::abs(g + denom_eps) < 1e-12)
            tensor_fail("revin_denormalize: degenerate affine, |gamma+eps| < 1e-12");
    return stats.sigma * ((yhat - stats.beta) / (stats.gamma + denom_eps)) + stats.mu;
}

void Revin::collect(ParamRegistry& reg, const std::string& prefix) const {
    reg.add(prefix + ".gamma", gamma);
    reg.add(prefix + ".beta", beta);
}

RmsNorm::RmsNorm(int64_t d, real e) : eps(e) { gain = Tensor::full({d}, 1.0, true); }

Tensor RmsNorm::forward(const Tensor& h) const {
    int64_t d = gain.shape()[0];
    if (h.shape().back() != d)
        tensor_fail("rms_norm: last axis " + std::to_string(h.shape().back()) +
                    " != gain size " + std::to_string(d));
    Tensor ms = mean(h * h, h.dim() - 1, true);
    Shape gshape(static_cast<size_t>(h.dim()), 1);
    gshape.back() = d;
    return h / sqrt(ms + eps) * reshape(gain, gshape);
}

void RmsNorm::collect(ParamRegistry& reg, const std::string& prefix, bool frozen) const {
    reg.add(prefix + ".gain", gain, frozen);
}

}  // namespace stella
