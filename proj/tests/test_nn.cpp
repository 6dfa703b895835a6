#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "stella/gradcheck.hpp"
#include "stella/nn.hpp"

using namespace stella;
using testutil::random_tensor;

TEST_CASE("linear init is bounded and seed-deterministic") {
    Rng a(42), b(42), c(43);
    Tensor wa = init_linear_weight(9, 5, a);
    Tensor wb = init_linear_weight(9, 5, b);
    Tensor wc = init_linear_weight(9, 5, c);
    double bound = 1.0 / std::sqrt(9.0);
    for (real v : wa.data()) CHECK(std::abs(v) <= bound);
    CHECK(testutil::max_abs_diff(wa.data(), wb.data()) == 0.0);
    CHECK(testutil::max_abs_diff(wa.data(), wc.data()) > 0.0);
}

TEST_CASE("kaiming init matches target moments") {
    Rng rng(7);
    Tensor w = init_kaiming({200, 200}, 64, rng);
    double mean = 0, var = 0;
    for (real v : w.data()) mean += v;
    mean /= static_cast<double>(w.size());
    for (real v : w.data()) var += (v - mean) * (v - mean);
    var /= static_cast<double>(w.size());
    double target = 2.0 / 64.0;
    CHECK(std::abs(mean) < 0.005);
    CHECK(var == doctest::Approx(target).epsilon(0.05));
}

TEST_CASE("linear layer matches a hand-rolled affine map") {
    Rng rng(1);
    Linear lin(3, 2, rng);
    lin.b.data() = {0.5, -0.25};
    Tensor x = random_tensor({4, 3}, rng, false);
    Tensor y = lin.forward(x);
    for (int64_t n = 0; n < 4; ++n)
        for (int64_t o = 0; o < 2; ++o) {
            double acc = lin.b.at({o});
            for (int64_t i = 0; i < 3; ++i) acc += x.at({n, i}) * lin.w.at({i, o});
            CHECK(y.at({n, o}) == doctest::Approx(acc).epsilon(1e-12));
        }
}

TEST_CASE("identity-weight mlp reduces to gelu") {
    Rng rng(2);
    Mlp mlp(4, 4, 4, rng);
    for (auto& v : mlp.fc1.w.data()) v = 0;
    for (auto& v : mlp.fc2.w.data()) v = 0;
    for (int64_t i = 0; i < 4; ++i) {
        mlp.fc1.w.data()[static_cast<size_t>(i * 4 + i)] = 1.0;
        mlp.fc2.w.data()[static_cast<size_t>(i * 4 + i)] = 1.0;
    }
    for (auto& v : mlp.fc1.b.data()) v = 0;
    for (auto& v : mlp.fc2.b.data()) v = 0;
    Tensor x = random_tensor({3, 4}, rng, false);
    Tensor y = mlp.forward(x);
    Tensor expect = gelu(x);
    CHECK(testutil::max_abs_diff(y.data(), expect.data()) == 0.0);
}

TEST_CASE("weight-norm conv matches a direct causal convolution") {
    Rng rng(3);
    for (int64_t dil : {int64_t(1), int64_t(2), int64_t(4)}) {
        WeightNormConv1d conv(2, 3, 3, dil, rng);
        conv.bias.data() = {0.1, -0.2, 0.3};
        Tensor x = random_tensor({2, 2, 10}, rng, false);
        Tensor y = conv.forward(x);
        Tensor w = conv.effective_weight();
        REQUIRE(y.shape() == Shape{2, 3, 10});
        for (int64_t n = 0; n < 2; ++n)
            for (int64_t co = 0; co < 3; ++co)
                for (int64_t t = 0; t < 10; ++t) {
                    double acc = conv.bias.at({co});
                    for (int64_t ci = 0; ci < 2; ++ci)
                        for (int64_t k = 0; k < 3; ++k) {
                            int64_t src = t - k * dil;  // tap k looks back k*dil steps
                            if (src < 0) continue;
                            acc += x.at({n, ci, src}) * w.at({co, ci, k});
                        }
                    CHECK(y.at({n, co, t}) == doctest::Approx(acc).epsilon(1e-12));
                }
    }
}

TEST_CASE("weight norm is invariant to the direction scale") {
    Rng rng(4);
    WeightNormConv1d conv(3, 2, 3, 1, rng);
    Tensor before = conv.effective_weight();
    for (auto& v : conv.v.data()) v *= 3.0;
    Tensor after = conv.effective_weight();
    CHECK(testutil::max_abs_diff(before.data(), after.data()) < 1e-12);
}

TEST_CASE("initial effective kernel equals the direction tensor") {
    Rng rng(5);
    WeightNormConv1d conv(2, 4, 3, 2, rng);
    CHECK(testutil::max_abs_diff(conv.effective_weight().data(), conv.v.data()) < 1e-10);
}

TEST_CASE("lstm matches a scalar reference implementation") {
    Rng rng(6);
    int64_t in = 3, dh = 4, B = 2, S = 5;
    Lstm lstm(in, dh, rng);
    Tensor x = random_tensor({B, S, in}, rng, false);
    Tensor h = lstm.forward(x);
    REQUIRE(h.shape() == Shape{B, S, dh});
    auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
    for (int64_t n = 0; n < B; ++n) {
        std::vector<double> hs(static_cast<size_t>(dh), 0.0), cs(static_cast<size_t>(dh), 0.0);
        for (int64_t t = 0; t < S; ++t) {
            std::vector<double> gates(static_cast<size_t>(4 * dh));
            for (int64_t j = 0; j < 4 * dh; ++j) {
                double acc = lstm.b.at({j});
                for (int64_t i = 0; i < in; ++i) acc += x.at({n, t, i}) * lstm.w_x.at({i, j});
                for (int64_t i = 0; i < dh; ++i) acc += hs[static_cast<size_t>(i)] * lstm.w_h.at({i, j});
                gates[static_cast<size_t>(j)] = acc;
            }
            for (int64_t d = 0; d < dh; ++d) {
                double ig = sig(gates[static_cast<size_t>(d)]);
                double fg = sig(gates[static_cast<size_t>(dh + d)]);
                double gg = std::tanh(gates[static_cast<size_t>(2 * dh + d)]);
                double og = sig(gates[static_cast<size_t>(3 * dh + d)]);
                cs[static_cast<size_t>(d)] = fg * cs[static_cast<size_t>(d)] + ig * gg;
                hs[static_cast<size_t>(d)] = og * std::tanh(cs[static_cast<size_t>(d)]);
                CHECK(h.at({n, t, d}) == doctest::Approx(hs[static_cast<size_t>(d)]).epsilon(1e-12));
            }
        }
    }
}

TEST_CASE("lstm forget-gate bias starts at one") {
    Rng rng(7);
    Lstm lstm(2, 3, rng);
    for (int64_t j = 0; j < 12; ++j)
        CHECK(lstm.b.at({j}) == (j >= 3 && j < 6 ? 1.0 : 0.0));
}

TEST_CASE("lstm output is causal") {
    Rng rng(8);
    Lstm lstm(2, 3, rng);
    Tensor x = random_tensor({1, 6, 2}, rng, false);
    Tensor h = lstm.forward(x);
    Tensor xp = Tensor::from(x.shape(), x.data());
    for (int64_t i = 4 * 2; i < 6 * 2; ++i) xp.data()[static_cast<size_t>(i)] += 1.0;
    Tensor hp = lstm.forward(xp);
    for (int64_t t = 0; t < 4; ++t)
        for (int64_t d = 0; d < 3; ++d) CHECK(hp.at({0, t, d}) == h.at({0, t, d}));
    bool tail_changed = false;
    for (int64_t t = 4; t < 6; ++t)
        for (int64_t d = 0; d < 3; ++d) tail_changed |= hp.at({0, t, d}) != h.at({0, t, d});
    CHECK(tail_changed);
}

TEST_CASE("lstm gradients") {
    Rng rng(9);
    Lstm lstm(2, 3, rng);
    Tensor x = random_tensor({2, 4, 2}, rng);
    auto f = [&](const Tensor& t) {
        Tensor h = lstm.forward(t);
        return sum(h * h);
    };
    CHECK(grad_check(f, x).passed);
    Tensor x0 = random_tensor({1, 4, 2}, rng, false);
    auto fw = [&](const Tensor& w) {
        Lstm l2 = lstm;
        l2.w_h = w;
        Tensor h = l2.forward(x0);
        return sum(h * h);
    };
    CHECK(grad_check(fw, random_tensor(lstm.w_h.shape(), rng)).passed);
}

TEST_CASE("gradient clipping rescales to the threshold") {
    Tensor p1 = Tensor::from({4}, {1, 1, 1, 1}, true);
    Tensor p2 = Tensor::from({2}, {1, 1}, true);
    Tensor c1 = Tensor::from({4}, {3, 0, 0, 0});
    Tensor c2 = Tensor::from({2}, {0, 4});
    Tensor loss = sum(p1 * c1) + sum(p2 * c2);
    loss.backward();
    // grads are (3,0,0,0) and (0,4): global norm 5
    real norm = clip_grad_norm({p1, p2}, 1.0);
    CHECK(norm == doctest::Approx(5.0).epsilon(1e-12));
    CHECK(p1.grad()[0] == doctest::Approx(0.6).epsilon(1e-12));
    CHECK(p2.grad()[1] == doctest::Approx(0.8).epsilon(1e-12));
    double post = 0;
    for (real g : p1.grad()) post += g * g;
    for (real g : p2.grad()) post += g * g;
    CHECK(std::sqrt(post) == doctest::Approx(1.0).epsilon(1e-12));
    // below the threshold nothing moves
    real norm2 = clip_grad_norm({p1, p2}, 10.0);
    CHECK(norm2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p1.grad()[0] == doctest::Approx(0.6).epsilon(1e-12));
}

TEST_CASE("registry collects names and trainable counts") {
    Rng rng(10);
    Mlp mlp(3, 5, 2, rng);
    ParamRegistry reg;
    mlp.collect(reg, "gate");
    REQUIRE(reg.all().size() == 4);
    CHECK(reg.all()[0].name == "gate.fc1.w");
    CHECK(reg.all()[1].name == "gate.fc1.b");
    CHECK(reg.all()[2].name == "gate.fc2.w");
    CHECK(reg.all()[3].name == "gate.fc2.b");
    CHECK(reg.trainable_count() == 3 * 5 + 5 + 5 * 2 + 2);
    ParamRegistry frozen;
    mlp.collect(frozen, "gate", /*frozen=*/true);
    CHECK(frozen.trainable_count() == 0);
    CHECK(frozen.trainable().empty());
}
