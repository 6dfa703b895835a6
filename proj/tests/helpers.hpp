#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "stella/rng.hpp"
#include "stella/tensor.hpp"

namespace testutil {

inline stella::Tensor random_tensor(stella::Shape shape, stella::Rng& rng, bool grad = true,
                                    double lo = -1.0, double hi = 1.0) {
    stella::Tensor t = stella::Tensor::zeros(shape, grad);
    for (auto& v : t.data()) v = rng.uniform(lo, hi);
    return t;
}

inline double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
    double m = 0;
    for (size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Synthetic multichannel CSV with trend + two sinusoids + deterministic noise,
// hourly timestamps. Reproduces dataset-scale row counts without bundling the
// real files.
inline void write_synthetic_csv(const std::string& path, int64_t rows, int64_t channels,
                                int64_t minutes_per_step, uint64_t seed = 7) {
    std::ofstream out(path);
    out << "date";
    for (int64_t c = 0; c < channels; ++c) out << ",ch" << c;
    out << "\n";
    stella::Rng rng(seed);
    out.precision(10);
    int64_t t0 = 1467331200;  // 2016-07-01 00:00:00 UTC
    for (int64_t i = 0; i < rows; ++i) {
        int64_t t = t0 + i * minutes_per_step * 60;
        int64_t days = t / 86400, rem = t % 86400;
        // civil-from-days
        int64_t z = days + 719468;
        int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        int64_t doe = z - era * 146097;
        int64_t yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        int64_t y = yoe + era * 400;
        int64_t doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        int64_t mp = (5 * doy + 2) / 153;
        int64_t d = doy - (153 * mp + 2) / 5 + 1;
        int64_t m = mp + (mp < 10 ? 3 : -9);
        y += m <= 2;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%04lld-%02lld-%02lld %02lld:%02lld:%02lld",
                      static_cast<long long>(y), static_cast<long long>(m),
                      static_cast<long long>(d), static_cast<long long>(rem / 3600),
                      static_cast<long long>((rem % 3600) / 60),
                      static_cast<long long>(rem % 60));
        out << buf;
        for (int64_t c = 0; c < channels; ++c) {
            double x = static_cast<double>(i);
            double v = 0.001 * x + 2.0 * std::sin(2 * M_PI * x / 24.0 + 0.3 * static_cast<double>(c)) +
                       0.5 * std::sin(2 * M_PI * x / 168.0) + 0.2 * rng.normal();
            out << "," << v;
        }
        out << "\n";
    }
}

}  // namespace testutil
