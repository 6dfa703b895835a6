#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace stella {

struct PointMetrics {
    double mse = 0, mae = 0, smape = 0, mape = 0;
    int64_t mape_skipped = 0;  // terms with |Y| == 0
};

PointMetrics point_metrics(const std::vector<double>& y, const std::vector<double>& yhat);

// Numerator: mean |Y - Yhat| over the horizon. Denominator: mean seasonal
// naive in-sample error over the history. Throws on a constant seasonal
// history (undefined MASE).
double mase(const std::vector<double>& y, const std::vector<double>& yhat,
            const std::vector<double>& insample, int64_t seasonality);

// M4-convention Naive2: seasonally adjusted naive when the 90%-level
// autocorrelation test at lag s fires, plain naive otherwise.
std::vector<double> naive2(const std::vector<double>& history, int64_t horizon,
                           int64_t seasonality);
bool seasonality_test(const std::vector<double>& history, int64_t seasonality);

double owa(double smape, double mase_v, double smape_n2, double mase_n2);

// M4 frequency groups and their seasonalities / horizons.
struct M4Group {
    std::string name;
    int64_t seasonality;
    int64_t horizon;
};
const std::vector<M4Group>& m4_groups();

struct MetricReport {
    std::map<std::string, double> values;  // metric name -> value
    int64_t seasonality = 0;
    std::string to_json() const;
};

}  // namespace stella
