#include <cmath>

#include "doctest.h"
#include "helpers.hpp"
#include "stella/semantic_anchor.hpp"

using namespace stella;
using testutil::random_tensor;

TEST_CASE("constant series signature") {
    std::vector<real> z(20, 4.2);
    auto sig = extract_signature(z, 3);
    CHECK(sig.slope == 0.0);
    CHECK(sig.trend_category == "stable");
    CHECK(sig.var == 0.0);
    CHECK(sig.top_lags.empty());
    CHECK(sig.min <= sig.mean);
    CHECK(sig.mean <= sig.max);
}

TEST_CASE("sinusoid finds lag 12") {
    std::vector<real> z(96);
    for (int t = 0; t < 96; ++t) z[static_cast<size_t>(t)] = std::sin(2 * M_PI * t / 12.0);
    auto sig = extract_signature(z, 1);
    REQUIRE(sig.top_lags.size() == 1);
    CHECK(sig.top_lags[0].lag == 12);
    CHECK(sig.top_lags[0].autocorr > 0.9);
}

TEST_CASE("linear ramp is strongly increasing") {
    std::vector<real> z(50);
    for (int t = 0; t < 50; ++t) z[static_cast<size_t>(t)] = static_cast<real>(t);
    auto sig = extract_signature(z, 1);
    CHECK(sig.trend_category == "strongly increasing");
    std::vector<real> zd(50);
    for (int t = 0; t < 50; ++t) zd[static_cast<size_t>(t)] = -static_cast<real>(t);
    CHECK(extract_signature(zd, 1).trend_category == "strongly decreasing");
}

TEST_CASE("signature preconditions") {
    std::vector<real> tiny = {1.0, 2.0};
    CHECK_THROWS(extract_signature(tiny, 1));
    std::vector<real> ok = {1.0, 2.0, 3.0};
    CHECK_THROWS(extract_signature(ok, 0));
}

TEST_CASE("top lags match brute force on random series") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        int64_t s = 16 + static_cast<int64_t>(rng.index(48));
        std::vector<real> z(static_cast<size_t>(s));
        for (auto& v : z) v = rng.uniform(-1, 1);
        auto sig = extract_signature(z, 3);
        // brute force oracle
        real mean = 0;
        for (real v : z) mean += v;
        mean /= static_cast<real>(s);
        real var = 0;
        for (real v : z) var += (v - mean) * (v - mean);
        var /= static_cast<real>(s);
        std::vector<std::pair<real, int64_t>> scored;
        for (int64_t lag = 1; lag < s; ++lag) {
            real acc = 0;
            for (int64_t t = 0; t + lag < s; ++t)
                acc += (z[static_cast<size_t>(t)] - mean) * (z[static_cast<size_t>(t + lag)] - mean);
            real r = acc / (static_cast<real>(s - lag) * var);
            r = std::clamp(r, static_cast<real>(-1), static_cast<real>(1));
            scored.push_back({r, lag});
        }
        std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (std::abs(a.first) != std::abs(b.first)) return std::abs(a.first) > std::abs(b.first);
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        REQUIRE(sig.top_lags.size() == 3);
        for (size_t k = 0; k < 3; ++k) {
            CHECK(sig.top_lags[k].lag == scored[k].second);
            CHECK(sig.top_lags[k].autocorr == doctest::Approx(scored[k].first).epsilon(1e-12));
            CHECK(sig.top_lags[k].autocorr >= -1.0);
            CHECK(sig.top_lags[k].autocorr <= 1.0);
            CHECK(sig.top_lags[k].lag >= 1);
            CHECK(sig.top_lags[k].lag < s);
        }
    }
}

TEST_CASE("fbp text rendering") {
    std::vector<real> z(20, 1.0);
    auto sig = extract_signature(z, 3);
    std::string text = render_fbp_text(sig, ComponentKind::trend);
    CHECK(text.find("stable") != std::string::npos);
    CHECK(text.find("trend") != std::string::npos);
    CHECK(render_fbp_text(sig, ComponentKind::trend) == text);  // byte-identical
    // K = 2 -> exactly two lag sentences
    std::vector<real> z2(40);
    for (int t = 0; t < 40; ++t) z2[static_cast<size_t>(t)] = std::sin(2 * M_PI * t / 8.0);
    auto sig2 = extract_signature(z2, 2);
    std::string t2 = render_fbp_text(sig2, ComponentKind::seasonal);
    size_t count = 0, pos = 0;
    while ((pos = t2.find("lag", pos)) != std::string::npos) {
        ++count;
        ++pos;
    }
    CHECK(count == 2);
}

TEST_CASE("csp text rendering") {
    CorpusMetadata meta{"Temperature", "1 hour", 7};
    std::string text = render_csp_text(meta);
    CHECK(text.find("Temperature") != std::string::npos);
    CHECK(text.find("1 hour") != std::string::npos);
    CHECK(render_csp_text(meta) == text);
    CorpusMetadata empty;
    std::string et = render_csp_text(empty);
    CHECK(et.find("unknown") != std::string::npos);
}

TEST_CASE("frozen encoder determinism and fallback") {
    FrozenTextEncoder a(16, 42), b(16, 42);
    std::string text = "stable trend with lag 12 .";
    auto ids1 = a.tokenize(text);
    auto ids2 = b.tokenize(text);
    CHECK(ids1 == ids2);
    Tensor e1 = a.embed(text);
    Tensor e2 = b.embed(text);
    CHECK(testutil::max_abs_diff(e1.data(), e2.data()) == 0.0);
    CHECK(e1.shape()[0] == static_cast<int64_t>(ids1.size()));
    // non-alphabetic word falls back to per-byte ids below 256
    auto bytes = a.tokenize("x9");
    REQUIRE(bytes.size() == 2);
    CHECK(bytes[0] == 'x');
    CHECK(bytes[1] == '9');
    CHECK_THROWS(a.embed(""));
}

TEST_CASE("degenerate attention copies the value projection") {
    Rng rng(2);
    CrossAttention attn(4, 8, 3, rng);
    Tensor kv = random_tensor({1, 8}, rng, false);  // single token
    Tensor p = attn.distill(kv);
    Tensor expect = matmul(matmul(kv, attn.wv_down), attn.wv_up);
    for (int64_t g = 0; g < 4; ++g)
        for (int64_t d = 0; d < 8; ++d)
            CHECK(p.at({g, d}) == doctest::Approx(expect.at({0, d})).epsilon(1e-12));
}

TEST_CASE("cross-component disentanglement is exact") {
    Rng rng(3);
    SamConfig cfg;
    cfg.g_fbp = 4;
    SemanticAnchorModule sam(cfg, 16, 9, rng);
    CorpusMetadata meta{"Temperature", "1 hour", 2};
    Tensor trend = random_tensor({1, 12, 2}, rng, false);
    Tensor season = random_tensor({1, 12, 2}, rng, false);
    Tensor resid = random_tensor({1, 12, 2}, rng, false);
    auto a1 = sam.anchors({trend, season, resid}, meta, 1);
    Tensor season2 = season + Tensor::full(season.shape(), 0.7);
    auto a2 = sam.anchors({trend, season2, resid}, meta, 1);
    // perturbing the seasonal component must leave trend/residual prompts
    // bit-identical (block-diagonal scoping)
    CHECK(testutil::max_abs_diff(a1.fbp[0].data(), a2.fbp[0].data()) == 0.0);
    CHECK(testutil::max_abs_diff(a1.fbp[2].data(), a2.fbp[2].data()) == 0.0);
    // per-instance scoping: instance 0 prompts unaffected by instance 1
    Tensor trend_b2 = concat({trend, trend * 3.0}, 0);
    Tensor season_b2 = concat({season, season * 3.0}, 0);
    Tensor resid_b2 = concat({resid, resid * 3.0}, 0);
    auto a3 = sam.anchors({trend_b2, season_b2, resid_b2}, meta, 2);
    for (int64_t i = 0; i < a1.fbp[0].size(); ++i)
        CHECK(a3.fbp[0].data()[static_cast<size_t>(i)] ==
              a1.fbp[0].data()[static_cast<size_t>(i)]);
}

TEST_CASE("anchors are deterministic") {
    Rng rng1(4), rng2(4);
    SamConfig cfg;
    SemanticAnchorModule s1(cfg, 16, 9, rng1), s2(cfg, 16, 9, rng2);
    CorpusMetadata meta{"Electricity", "15 min", 3};
    Rng data_rng(5);
    Tensor t = random_tensor({1, 10, 3}, data_rng, false);
    Tensor s = random_tensor({1, 10, 3}, data_rng, false);
    Tensor r = random_tensor({1, 10, 3}, data_rng, false);
    auto a1 = s1.anchors({t, s, r}, meta, 1);
    auto a2 = s2.anchors({t, s, r}, meta, 1);
    CHECK(testutil::max_abs_diff(a1.csp.data(), a2.csp.data()) == 0.0);
    for (int k = 0; k < 3; ++k)
        CHECK(testutil::max_abs_diff(a1.fbp[static_cast<size_t>(k)].data(),
                                     a2.fbp[static_cast<size_t>(k)].data()) == 0.0);
}

TEST_CASE("assembled layout lengths and slicing") {
    Rng rng(6);
    SamConfig cfg;  // g_fbp 6, g_csp 10
    SemanticAnchorModule sam(cfg, 16, 9, rng);
    CorpusMetadata meta{"Weather", "10 min", 2};
    int64_t B = 2, C = 2, S = 12, pn = 6;
    Rng data_rng(7);
    Tensor t = random_tensor({B, S, C}, data_rng, false);
    Tensor s = random_tensor({B, S, C}, data_rng, false);
    Tensor r = random_tensor({B, S, C}, data_rng, false);
    auto anchors = sam.anchors({t, s, r}, meta, B);
    std::vector<Tensor> emb;
    for (int k = 0; k < 3; ++k) emb.push_back(random_tensor({B * C, pn, 16}, data_rng, false));
    auto [x_in, layout] = assemble_input(anchors, emb, B, C);
    CHECK(layout.total == 10 + 3 * (6 + 6));  // 46
    CHECK(x_in.shape() == Shape{B * C, 46, 16});
    // slicing by layout offsets reproduces each input bit-identically
    auto span = layout.find("emb_S");
    REQUIRE(span.has_value());
    Tensor back = slice(x_in, 1, span->offset, span->length);
    CHECK(testutil::max_abs_diff(back.data(), emb[1].data()) == 0.0);
    auto fbp_span = layout.find("fbp_T");
    REQUIRE(fbp_span.has_value());
    Tensor fbp_back = slice(x_in, 1, fbp_span->offset, fbp_span->length);
    CHECK(testutil::max_abs_diff(fbp_back.data(), anchors.fbp[0].data()) == 0.0);

    // ablations
    SamConfig no_csp = cfg;
    no_csp.use_csp = false;
    SemanticAnchorModule sam2(no_csp, 16, 9, rng);
    auto a2 = sam2.anchors({t, s, r}, meta, B);
    auto [x2, l2] = assemble_input(a2, emb, B, C);
    CHECK(l2.total == 3 * (6 + 6));
    SamConfig no_fbp = cfg;
    no_fbp.use_fbp = false;
    SemanticAnchorModule sam3(no_fbp, 16, 9, rng);
    auto a3 = sam3.anchors({t, s, r}, meta, B);
    auto [x3, l3] = assemble_input(a3, emb, B, C);
    CHECK(l3.total == 10 + 3 * 6);
    // dimension mismatch fails
    std::vector<Tensor> bad = emb;
    bad[2] = random_tensor({B * C, pn, 8}, data_rng, false);
    CHECK_THROWS(assemble_input(anchors, bad, B, C));
}

TEST_CASE("csp rows are identical across the batch") {
    Rng rng(8);
    SamConfig cfg;
    SemanticAnchorModule sam(cfg, 16, 9, rng);
    CorpusMetadata meta{"Exchange", "1 day", 1};
    Rng data_rng(9);
    int64_t B = 3;
    Tensor t = random_tensor({B, 10, 1}, data_rng, false);
    auto anchors = sam.anchors({t, t, t}, meta, B);
    std::vector<Tensor> emb;
    for (int k = 0; k < 3; ++k) emb.push_back(random_tensor({B, 2, 16}, data_rng, false));
    auto [x_in, layout] = assemble_input(anchors, emb, B, 1);
    auto span = layout.find("csp");
    REQUIRE(span.has_value());
    Tensor csp = slice(x_in, 1, span->offset, span->length);
    for (int64_t b = 1; b < B; ++b)
        for (int64_t g = 0; g < span->length; ++g)
            for (int64_t d = 0; d < 16; ++d)
                CHECK(csp.at({b, g, d}) == csp.at({0, g, d}));
}
