#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stella/tensor.hpp"

namespace stella {

struct SeriesTable {
    std::vector<double> timestamps;  // parsed to seconds (or raw numeric)
    std::vector<std::vector<double>> values;  // N rows x C
    std::vector<std::string> channel_names;
    std::string frequency;  // declared sampling period, e.g. "1 hour"
    std::string domain_tag;
    int64_t rows() const { return static_cast<int64_t>(values.size()); }
    int64_t channels() const {
        return values.empty() ? 0 : static_cast<int64_t>(values[0].size());
    }
};

// CSV with a header row whose first column is "date"; remaining columns
// numeric. Unparseable rows and non-monotone timestamps fail with a line
// number.
SeriesTable load_csv(const std::string& path);

struct SplitRange {
    int64_t begin = 0, end = 0;  // [begin, end)
    int64_t length() const { return end - begin; }
};

struct SplitBundle {
    SplitRange train, val, test;  // val/test include the lookback prefix
    int64_t lookback = 0;         // S steps prepended to val and test
};

struct SplitSpec {
    enum class Mode { ratio, ett_months } mode = Mode::ratio;
    double train = 0.7, val = 0.1, test = 0.2;
};

SplitBundle chronological_split(const SeriesTable& table, const SplitSpec& spec, int64_t seq_len,
                                int64_t horizon);

// Audit count under the documented conventions: L - S + 1, or L - S - H + 1
// when subtract_horizon is set.
int64_t window_count(int64_t segment_len_with_lookback, int64_t seq_len, bool subtract_horizon,
                     int64_t horizon);

struct TimeWindowBatch {
    Tensor x;  // B x S x C
    Tensor y;  // B x H x C
    std::vector<int64_t> origins;
};

enum class Split { train, val, test };

// Yields every admissible (X, Y) window of the chosen split once per epoch,
// optionally oversampled (each repetition independently shuffled).
class WindowStream {
  public:
    WindowStream(const SeriesTable& table, const SplitBundle& bundle, Split split,
                 int64_t seq_len, int64_t horizon, int64_t batch, bool shuffle, uint64_t seed,
                 int64_t oversample = 1);
    void start_epoch();
    std::optional<TimeWindowBatch> next();
    int64_t windows_per_epoch() const {
        return static_cast<int64_t>(base_origins_.size()) * oversample_;
    }

  private:
    const SeriesTable& table_;
    int64_t seq_len_, horizon_, batch_;
    bool shuffle_;
    int64_t oversample_;
    uint64_t seed_;
    uint64_t epoch_ = 0;
    std::vector<int64_t> base_origins_;
    std::vector<int64_t> epoch_origins_;
    size_t cursor_ = 0;
};

// Train-only global standardization (per channel).
struct Scaler {
    std::vector<double> mean, std;
};
Scaler fit_scaler(const SeriesTable& table, const SplitRange& train);
void apply_scaler(SeriesTable& table, const Scaler& s);

// One series per line: id, v1, v2, ...
struct M4Series {
    std::string id;
    std::vector<double> values;
};
std::vector<M4Series> load_m4(const std::string& path);

// JSON split/window manifest for audit.
std::string split_manifest_json(const SeriesTable& table, const SplitBundle& bundle,
                                int64_t seq_len, int64_t horizon, bool subtract_horizon);

}  // namespace stella
