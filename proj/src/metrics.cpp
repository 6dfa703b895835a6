#include "stella/metrics.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace stella {

PointMetrics point_metrics(const std::vector<double>& y, const std::vector<double>& yhat) {
    if (y.size() != yhat.size() || y.empty())
        throw std::runtime_error("point_metrics: size mismatch or empty input");
    PointMetrics m;
    size_t n = y.size();
    double mape_acc = 0;
    int64_t mape_terms = 0;
    for (size_t i = 0; i < n; ++i) {
        double d = y[i] - yhat[i];
        m.mse += d * d;
        m.mae += std::abs(d);
        double denom = std::abs(y[i]) + std::abs(yhat[i]);
        if (denom > 0) m.smape += std::abs(d) / denom;  // both zero -> perfect, term 0
        if (std::abs(y[i]) > 0) {
            mape_acc += std::abs(d) / std::abs(y[i]);
            ++mape_terms;
        } else {
            ++m.mape_skipped;
        }
    }
    m.mse /= static_cast<double>(n);
    m.mae /= static_cast<double>(n);
    m.smape = 200.0 * m.smape / static_cast<double>(n);
    m.mape = mape_terms > 0 ? 100.0 * mape_acc / static_cast<double>(mape_terms) : 0.0;
    return m;
}

double mase(const std::vector<double>& y, const std::vector<double>& yhat,
            const std::vector<double>& insample, int64_t s) {
    if (y.size() != yhat.size() || y.empty()) throw std::runtime_error("mase: size mismatch");
    if (static_cast<int64_t>(insample.size()) <= s)
        throw std::runtime_error("mase: history length must exceed seasonality");
    double denom = 0;
    for (size_t j = static_cast<size_t>(s); j < insample.size(); ++j)
        denom += std::abs(insample[j] - insample[j - static_cast<size_t>(s)]);
    denom /= static_cast<double>(insample.size() - static_cast<size_t>(s));
    if (denom == 0) throw std::runtime_error("mase: undefined (constant seasonal history)");
    double num = 0;
    for (size_t h = 0; h < y.size(); ++h) num += std::abs(y[h] - yhat[h]);
    num /= static_cast<double>(y.size());
    return num / denom;
}

namespace {
std::vector<double> acf(const std::vector<double>& x, int64_t max_lag) {
    size_t n = x.size();
    double mean = 0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(n);
    double var = 0;
    for (double v : x) var += (v - mean) * (v - mean);
    std::vector<double> r(static_cast<size_t>(max_lag) + 1, 0.0);
    if (var == 0) return r;
    for (int64_t lag = 1; lag <= max_lag; ++lag) {
        double acc = 0;
        for (size_t t = 0; t + static_cast<size_t>(lag) < n; ++t)
            acc += (x[t] - mean) * (x[t + static_cast<size_t>(lag)] - mean);
        r[static_cast<size_t>(lag)] = acc / var;
    }
    return r;
}

// Centered moving average seasonal indices (classical multiplicative
// decomposition), normalized to average 1.
std::vector<double> seasonal_indices(const std::vector<double>& x, int64_t s) {
    size_t n = x.size();
    std::vector<double> trend(n, std::nan(""));
    size_t half = static_cast<size_t>(s) / 2;
    if (s % 2 == 0) {
        for (size_t t = half; t + half < n; ++t) {
            double acc = 0.5 * x[t - half] + 0.5 * x[t + half];
            for (size_t j = t - half + 1; j < t + half; ++j) acc += x[j];
            trend[t] = acc / static_cast<double>(s);
        }
    } else {
        for (size_t t = half; t + half < n; ++t) {
            double acc = 0;
            for (size_t j = t - half; j <= t + half; ++j) acc += x[j];
            trend[t] = acc / static_cast<double>(s);
        }
    }
    std::vector<double> sums(static_cast<size_t>(s), 0.0);
    std::vector<int64_t> counts(static_cast<size_t>(s), 0);
    for (size_t t = 0; t < n; ++t) {
        if (std::isnan(trend[t]) || trend[t] == 0) continue;
        sums[t % static_cast<size_t>(s)] += x[t] / trend[t];
        ++counts[t % static_cast<size_t>(s)];
    }
    std::vector<double> idx(static_cast<size_t>(s), 1.0);
    double total = 0;
    for (size_t k = 0; k < static_cast<size_t>(s); ++k) {
        idx[k] = counts[k] > 0 ? sums[k] / static_cast<double>(counts[k]) : 1.0;
        total += idx[k];
    }
    for (double& v : idx) v *= static_cast<double>(s) / total;
    return idx;
}
}  // namespace

bool seasonality_test(const std::vector<double>& history, int64_t s) {
    if (s <= 1) return false;
    int64_t n = static_cast<int64_t>(history.size());
    if (n < 3 * s) return false;
    auto r = acf(history, s);
    double acc = 0;
    for (int64_t i = 1; i < s; ++i) acc += r[static_cast<size_t>(i)] * r[static_cast<size_t>(i)];
    double limit = 1.645 * std::sqrt((1.0 + 2.0 * acc) / static_cast<double>(n));
    return std::abs(r[static_cast<size_t>(s)]) > limit;
}

std::vector<double> naive2(const std::vector<double>& history, int64_t horizon, int64_t s) {
    if (history.empty()) throw std::runtime_error("naive2: empty history");
    bool seasonal = s > 1 && static_cast<int64_t>(history.size()) >= 2 * s &&
                    seasonality_test(history, s);
    if (!seasonal) {
        return std::vector<double>(static_cast<size_t>(horizon), history.back());
    }
    auto idx = seasonal_indices(history, s);
    std::vector<double> deseason(history.size());
    for (size_t t = 0; t < history.size(); ++t) {
        double si = idx[t % static_cast<size_t>(s)];
        deseason[t] = si != 0 ? history[t] / si : history[t];
    }
    double level = deseason.back();
    std::vector<double> out(static_cast<size_t>(horizon));
    size_t n = history.size();
    for (size_t h = 0; h < out.size(); ++h)
        out[h] = level * idx[(n + h) % static_cast<size_t>(s)];
    return out;
}

double owa(double smape, double mase_v, double smape_n2, double mase_n2) {
    if (smape_n2 <= 0 || mase_n2 <= 0)
        throw std::runtime_error("owa: reference values must be positive");
    return 0.5 * (smape / smape_n2 + mase_v / mase_n2);
}

const std::vector<M4Group>& m4_groups() {
    static const std::vector<M4Group> groups = {
        {"Yearly", 1, 6},  {"Quarterly", 4, 8}, {"Monthly", 12, 18},
        {"Weekly", 1, 13}, {"Daily", 1, 14},    {"Hourly", 24, 48},
    };
    return groups;
}

std::string MetricReport::to_json() const {
    nlohmann::json j;
    for (const auto& [k, v] : values) j[k] = v;
    if (seasonality > 0) j["seasonality"] = seasonality;
    return j.dump(2);
}

}  // namespace stella
