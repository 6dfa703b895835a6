#include "stella/nn.hpp"

#include <cmath>

namespace stella {

Tensor init_linear_weight(int64_t in, int64_t out, Rng& rng) {
    real bound = 1.0 / std::sqrt(static_cast<real>(in));
    std::vector<real> data(static_cast<size_t>(in * out));
    for (real& v : data) v = rng.uniform(-bound, bound);
    return Tensor::from({in, out}, std::move(data), true);
}

Tensor init_kaiming(Shape shape, int64_t fan_in, Rng& rng) {
    real stddev = std::sqrt(2.0 / static_cast<real>(fan_in));
    std::vector<real> data(static_cast<size_t>(numel(shape)));
    for (real& v : data) v = rng.normal(0.0, stddev);
    return Tensor::from(std::move(shape), std::move(data), true);
}

Tensor init_normal(Shape shape, real stddev, Rng& rng) {
    std::vector<real> data(static_cast<size_t>(numel(shape)));
    for (real& v : data) v = rng.normal(0.0, stddev);
    return Tensor::from(std::move(shape), std::move(data), true);
}

Linear::Linear(int64_t in, int64_t out, Rng& rng, bool bias) {
    w = init_linear_weight(in, out, rng);
    if (bias) b = Tensor::zeros({out}, true);
}

void Linear::collect(ParamRegistry& reg, const std::string& prefix, bool frozen) const {
    reg.add(prefix + ".w", w, frozen);
    if (b.defined()) reg.add(prefix + ".b", b, frozen);
}

Mlp::Mlp(int64_t in, int64_t hidden, int64_t out, Rng& rng)
    : fc1(in, hidden, rng), fc2(hidden, out, rng) {}

void Mlp::collect(ParamRegistry& reg, const std::string& prefix, bool frozen) const {
    fc1.collect(reg, prefix + ".fc1", frozen);
    fc2.collect(reg, prefix + ".fc2", frozen);
}

WeightNormConv1d::WeightNormConv1d(int64_t cin, int64_t cout, int64_t k, int64_t dil, Rng& rng)
    : dilation(dil) {
    v = init_kaiming({cout, cin, k}, cin * k, rng);
    // g starts at the norm of v so the initial effective kernel equals v.
    std::vector<real> gs(static_cast<size_t>(cout));
    for (int64_t co = 0; co < cout; ++co) {
        real acc = 0;
        for (int64_t i = 0; i < cin * k; ++i) {
            real x = v.data()[static_cast<size_t>(co * cin * k + i)];
            acc += x * x;
        }
        gs[static_cast<size_t>(co)] = std::sqrt(acc);
    }
    g = Tensor::from({cout}, std::move(gs), true);
    bias = Tensor::zeros({cout}, true);
}

Tensor WeightNormConv1d::effective_weight() const {
    int64_t cout = v.shape()[0];
    int64_t rest = v.size() / cout;
    Tensor flat = reshape(v, {cout, rest});
    Tensor norm = sqrt(sum(flat * flat, 1, true) + 1e-24);
    Tensor scaled = flat / norm * reshape(g, {cout, 1});
    return reshape(scaled, v.shape());
}

Tensor WeightNormConv1d::forward(const Tensor& x) const {
    return conv1d_causal(x, effective_weight(), bias, dilation);
}

void WeightNormConv1d::collect(ParamRegistry& reg, const std::string& prefix, bool frozen) const {
    reg.add(prefix + ".v", v, frozen);
    reg.add(prefix + ".g", g, frozen);
    reg.add(prefix + ".bias", bias, frozen);
}

Lstm::Lstm(int64_t in, int64_t dh, Rng& rng) : d_h(dh) {
    w_x = init_linear_weight(in, 4 * dh, rng);
    w_h = init_linear_weight(dh, 4 * dh, rng);
    std::vector<real> bs(static_cast<size_t>(4 * dh), 0.0);
    for (int64_t i = dh; i < 2 * dh; ++i) bs[static_cast<size_t>(i)] = 1.0;  // forget gate
    b = Tensor::from({4 * dh}, std::move(bs), true);
}

Tensor Lstm::forward(const Tensor& x) const {
    int64_t B = x.shape()[0], S = x.shape()[1];
    Tensor h = Tensor::zeros({B, d_h});
    Tensor c = Tensor::zeros({B, d_h});
    std::vector<Tensor> outs;
    outs.reserve(static_cast<size_t>(S));
    for (int64_t t = 0; t < S; ++t) {
        Tensor xt = reshape(slice(x, 1, t, 1), {B, x.shape()[2]});
        Tensor gates = linear(xt, w_x) + linear(h, w_h) + reshape(b, {1, 4 * d_h});
        Tensor i = sigmoid(slice(gates, 1, 0, d_h));
        Tensor f = sigmoid(slice(gates, 1, d_h, d_h));
        Tensor gg = tanh(slice(gates, 1, 2 * d_h, d_h));
        Tensor o = sigmoid(slice(gates, 1, 3 * d_h, d_h));
        c = f * c + i * gg;
        h = o * tanh(c);
        outs.push_back(reshape(h, {B, 1, d_h}));
    }
    return concat(outs, 1);
}

void Lstm::collect(ParamRegistry& reg, const std::string& prefix, bool frozen) const {
    reg.add(prefix + ".w_x", w_x, frozen);
    reg.add(prefix + ".w_h", w_h, frozen);
    reg.add(prefix + ".b", b, frozen);
}

real clip_grad_norm(const std::vector<Tensor>& params, real max_norm) {
    real total = 0;
    for (const Tensor& p : params)
        for (real g : p.grad()) total += g * g;
    total = std::sqrt(total);
    if (total > max_norm && total > 0) {
        real scale = max_norm / total;
        for (const Tensor& p : params) {
            Tensor t = p;
            for (real& g : t.grad()) g *= scale;
        }
    }
    return total;
}

}  // namespace stella
