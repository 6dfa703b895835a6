#include <cmath>
#include <vector>

#include "doctest.h"
#include "json.hpp"
#include "stella/metrics.hpp"
#include "stella/rng.hpp"

using namespace stella;

TEST_CASE("perfect forecast zeroes every point metric") {
    std::vector<double> y = {1.5, -2.0, 0.0, 7.25};
    PointMetrics m = point_metrics(y, y);
    CHECK(m.mse == 0.0);
    CHECK(m.mae == 0.0);
    CHECK(m.smape == 0.0);
    CHECK(m.mape == 0.0);
    CHECK(m.mape_skipped == 1);  // the zero target is excluded from MAPE
}

TEST_CASE("smape hand example") {
    PointMetrics m = point_metrics({100, 100}, {110, 90});
    double expect = 100.0 * (10.0 / 210.0 + 10.0 / 190.0);
    CHECK(std::abs(m.smape - expect) < 1e-9);
    CHECK(m.smape == doctest::Approx(10.0251).epsilon(1e-4));
}

TEST_CASE("unit error example") {
    PointMetrics m = point_metrics({1, 1}, {0, 2});
    CHECK(m.mse == 1.0);
    CHECK(m.mae == 1.0);
    CHECK(m.mape == 100.0);
    CHECK(m.smape == doctest::Approx(100.0 * (1.0 + 1.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("zero denominators are guarded") {
    PointMetrics m = point_metrics({0, 0}, {0, 1});
    CHECK(m.smape == 100.0);  // both-zero term counts as perfect
    CHECK(m.mape == 0.0);
    CHECK(m.mape_skipped == 2);
    // opposite signs hit the smape ceiling
    CHECK(point_metrics({1}, {-1}).smape == 200.0);
}

TEST_CASE("point metrics match a brute-force loop on random instances") {
    Rng rng(1);
    for (int rep = 0; rep < 100; ++rep) {
        size_t n = 1 + rng.index(40);
        std::vector<double> y(n), yhat(n);
        for (size_t i = 0; i < n; ++i) {
            y[i] = rng.uniform(-50, 50);
            yhat[i] = rng.uniform(-50, 50);
        }
        PointMetrics m = point_metrics(y, yhat);
        double mse = 0, mae = 0, smape = 0, mape = 0;
        int64_t terms = 0;
        for (size_t i = 0; i < n; ++i) {
            mse += (y[i] - yhat[i]) * (y[i] - yhat[i]) / static_cast<double>(n);
            mae += std::abs(y[i] - yhat[i]) / static_cast<double>(n);
            smape += 200.0 / static_cast<double>(n) * std::abs(y[i] - yhat[i]) /
                     (std::abs(y[i]) + std::abs(yhat[i]));
            mape += 100.0 * std::abs((y[i] - yhat[i]) / y[i]);
            ++terms;
        }
        CHECK(std::abs(m.mse - mse) < 1e-9);
        CHECK(std::abs(m.mae - mae) < 1e-9);
        CHECK(std::abs(m.smape - smape) < 1e-9);
        CHECK(std::abs(m.mape - mape / static_cast<double>(terms)) < 1e-9);
        CHECK(m.smape >= 0.0);
        CHECK(m.smape <= 200.0);
    }
}

TEST_CASE("mase basics") {
    std::vector<double> hist = {0, 1, 2, 3};
    std::vector<double> y = {4, 5}, yhat = {3.5, 5.5};
    // s=1 denominator: mean |x_j - x_{j-1}| = 1
    CHECK(mase(y, y, hist, 1) == 0.0);
    CHECK(mase(y, yhat, hist, 1) == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("seasonal-naive-equivalent forecast scores one") {
    Rng rng(2);
    int64_t s = 4;
    std::vector<double> hist(32);
    for (auto& v : hist) v = rng.uniform(0, 10);
    double denom = 0;
    for (size_t j = static_cast<size_t>(s); j < hist.size(); ++j)
        denom += std::abs(hist[j] - hist[j - static_cast<size_t>(s)]);
    denom /= static_cast<double>(hist.size() - static_cast<size_t>(s));
    std::vector<double> y = {1.0, 2.0, 3.0};
    std::vector<double> yhat = {1.0 + denom, 2.0 + denom, 3.0 + denom};
    CHECK(mase(y, yhat, hist, s) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mase is scale invariant") {
    Rng rng(3);
    std::vector<double> hist(24), y(6), yhat(6);
    for (auto& v : hist) v = rng.uniform(-5, 5);
    for (auto& v : y) v = rng.uniform(-5, 5);
    for (auto& v : yhat) v = rng.uniform(-5, 5);
    double base = mase(y, yhat, hist, 4);
    double k = 3.7;
    std::vector<double> h2 = hist, y2 = y, f2 = yhat;
    for (auto& v : h2) v *= k;
    for (auto& v : y2) v *= k;
    for (auto& v : f2) v *= k;
    CHECK(std::abs(mase(y2, f2, h2, 4) - base) < 1e-12);
}

TEST_CASE("mase failure modes") {
    std::vector<double> y = {1, 2};
    CHECK_THROWS_WITH(mase(y, y, {5, 5, 5, 5, 5, 5}, 2),
                      doctest::Contains("constant seasonal history"));
    CHECK_THROWS(mase(y, y, {1, 2}, 2));  // history must exceed s
}

TEST_CASE("naive2 falls back to repeat-last") {
    // s = 1 never claims seasonality
    auto f = naive2({3.0, 1.0, 4.0, 1.5}, 5, 1);
    REQUIRE(f.size() == 5);
    for (double v : f) CHECK(v == 1.5);
    // constant series: zero variance fails the test
    auto g = naive2(std::vector<double>(48, 7.0), 4, 12);
    for (double v : g) CHECK(v == 7.0);
    // short history with claimed seasonality also falls back
    auto h = naive2({1.0, 9.0, 1.0, 9.0, 1.0, 2.0}, 3, 4);
    for (double v : h) CHECK(v == 2.0);
    CHECK_THROWS(naive2({}, 3, 1));
}

TEST_CASE("naive2 reproduces a pure multiplicative cycle") {
    std::vector<double> pattern = {8.0, 12.0, 9.0, 11.0};
    int64_t s = 4, n = 80, horizon = 8;
    std::vector<double> hist(static_cast<size_t>(n));
    for (int64_t t = 0; t < n; ++t) hist[static_cast<size_t>(t)] = pattern[static_cast<size_t>(t % s)];
    CHECK(seasonality_test(hist, s));
    auto f = naive2(hist, horizon, s);
    REQUIRE(f.size() == static_cast<size_t>(horizon));
    for (int64_t h = 0; h < horizon; ++h)
        CHECK(std::abs(f[static_cast<size_t>(h)] - pattern[static_cast<size_t>((n + h) % s)]) <
              1e-9);
}

TEST_CASE("seasonality test behaviour") {
    CHECK(!seasonality_test({1, 2, 3, 4, 5, 6, 7, 8}, 1));
    Rng rng(4);
    std::vector<double> noise(120);
    for (auto& v : noise) v = rng.uniform(-1, 1);
    // white noise at lag 12 should not fire
    CHECK(!seasonality_test(noise, 12));
    std::vector<double> periodic(120);
    for (size_t t = 0; t < periodic.size(); ++t)
        periodic[t] = 10.0 + 3.0 * std::sin(2.0 * M_PI * static_cast<double>(t) / 12.0);
    CHECK(seasonality_test(periodic, 12));
}

TEST_CASE("owa formula and monotonicity") {
    CHECK(owa(12.0, 1.4, 12.0, 1.4) == 1.0);
    CHECK(owa(6.0, 0.7, 12.0, 1.4) == 0.5);
    CHECK(owa(6.0, 1.4, 12.0, 1.4) == doctest::Approx(0.75).epsilon(1e-12));
    CHECK_THROWS(owa(1.0, 1.0, 0.0, 1.0));
    CHECK_THROWS(owa(1.0, 1.0, 1.0, -2.0));
    CHECK(owa(11.0, 1.4, 12.0, 1.4) < owa(12.0, 1.4, 12.0, 1.4));
    CHECK(owa(12.0, 1.3, 12.0, 1.4) < owa(12.0, 1.4, 12.0, 1.4));
}

TEST_CASE("m4 frequency groups") {
    const auto& groups = m4_groups();
    REQUIRE(groups.size() == 6);
    CHECK(groups[0].name == "Yearly");
    CHECK(groups[0].seasonality == 1);
    CHECK(groups[0].horizon == 6);
    CHECK(groups[2].name == "Monthly");
    CHECK(groups[2].seasonality == 12);
    CHECK(groups[2].horizon == 18);
    CHECK(groups[5].name == "Hourly");
    CHECK(groups[5].seasonality == 24);
    CHECK(groups[5].horizon == 48);
}

TEST_CASE("metric report serializes exactly") {
    MetricReport r;
    r.values["smape"] = 10.02506265664160;
    r.values["mase"] = 1.25;
    r.seasonality = 24;
    auto j = nlohmann::json::parse(r.to_json());
    CHECK(j.at("smape").get<double>() == r.values["smape"]);
    CHECK(j.at("mase").get<double>() == 1.25);
    CHECK(j.at("seasonality").get<int64_t>() == 24);
}
