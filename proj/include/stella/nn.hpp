#pragma once

#include <string>
#include <vector>

#include "stella/rng.hpp"
#include "stella/tensor.hpp"

namespace stella {

struct NamedParam {
    std::string name;
    Tensor tensor;
    bool frozen = false;
};

// Flat registry of named parameters; modules append under a dotted prefix.
class ParamRegistry {
  public:
    void add(const std::string& name, Tensor t, bool frozen = false) {
        params_.push_back({name, std::move(t), frozen});
    }
    std::vector<NamedParam>& all() { return params_; }
    const std::vector<NamedParam>& all() const { return params_; }
    std::vector<Tensor> trainable() const {
        std::vector<Tensor> out;
        for (const auto& p : params_)
            if (!p.frozen) out.push_back(p.tensor);
        return out;
    }
    int64_t trainable_count() const {
        int64_t n = 0;
        for (const auto& p : params_)
            if (!p.frozen) n += p.tensor.size();
        return n;
    }

  private:
    std::vector<NamedParam> params_;
};

// Uniform +-1/sqrt(fan_in) for linear weights, zeros for biases.
Tensor init_linear_weight(int64_t in, int64_t out, Rng& rng);
// Kaiming fan-in normal, used for conv kernels.
Tensor init_kaiming(Shape shape, int64_t fan_in, Rng& rng);
Tensor init_normal(Shape shape, real stddev, Rng& rng);

struct Linear {
    Tensor w;  // in x out
    Tensor b;  // out

    Linear() = default;
    Linear(int64_t in, int64_t out, Rng& rng, bool bias = true);
    Tensor forward(const Tensor& x) const { return linear(x, w, b); }
    void collect(ParamRegistry& reg, const std::string& prefix, bool frozen = false) const;
};

// Two-layer MLP with GELU, used for the channel mixers and gates.
struct Mlp {
    Linear fc1, fc2;

    Mlp() = default;
    Mlp(int64_t in, int64_t hidden, int64_t out, Rng& rng);
    Tensor forward(const Tensor& x) const { return fc2.forward(gelu(fc1.forward(x))); }
    void collect(ParamRegistry& reg, const std::string& prefix, bool frozen = false) const;
};

// Causal dilated conv with direction/magnitude weight normalization:
// W = g * v / ||v||, norm taken per output channel.
struct WeightNormConv1d {
    Tensor v;     // Cout x Cin x K direction
    Tensor g;     // Cout magnitude
    Tensor bias;  // Cout
    int64_t dilation = 1;

    WeightNormConv1d() = default;
    WeightNormConv1d(int64_t cin, int64_t cout, int64_t k, int64_t dilation, Rng& rng);
    Tensor effective_weight() const;
    Tensor forward(const Tensor& x) const;
    void collect(ParamRegistry& reg, const std::string& prefix, bool frozen = false) const;
};

// Single-layer LSTM over (B, S, in); returns hidden states (B, S, d_h).
// Forget-gate bias initialized to 1.
struct Lstm {
    Tensor w_x;  // in x 4*d_h, gate order i,f,g,o
    Tensor w_h;  // d_h x 4*d_h
    Tensor b;    // 4*d_h
    int64_t d_h = 0;

    Lstm() = default;
    Lstm(int64_t in, int64_t d_h, Rng& rng);
    Tensor forward(const Tensor& x) const;
    void collect(ParamRegistry& reg, const std::string& prefix, bool frozen = false) const;
};

// Gradient clipping by global norm; returns the pre-clip norm.
real clip_grad_norm(const std::vector<Tensor>& params, real max_norm);

}  // namespace stella
