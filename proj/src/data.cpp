#include "stella/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "stella/rng.hpp"

namespace stella {

namespace {

std::vector<std::string> split_line(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, sep)) out.push_back(field);
    if (!line.empty() && line.back() == sep) out.push_back("");
    return out;
}

// Accepts "YYYY-MM-DD HH:MM[:SS]", "YYYY-MM-DD", or a plain number.
bool parse_timestamp(const std::string& raw, double* out) {
    std::tm tm = {};
    for (const char* fmt : {"%Y-%m-%d %H:%M:%S", "%Y-%m-%d %H:%M", "%Y-%m-%d"}) {
        std::istringstream in(raw);
        in >> std::get_time(&tm, fmt);
        if (!in.fail() && in.peek() == EOF) {
            // timegm-style arithmetic without TZ dependence
            int64_t days = 0;
            int y = tm.tm_year + 1900, m = tm.tm_mon + 1, d = tm.tm_mday;
            // days since 1970-01-01 (civil-from-days inverse)
            y -= m <= 2;
            int64_t era = (y >= 0 ? y : y - 399) / 400;
            int64_t yoe = y - era * 400;
            int64_t doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
            int64_t doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
            days = era * 146097 + doe - 719468;
            *out = static_cast<double>(days) * 86400.0 + tm.tm_hour * 3600.0 +
                   tm.tm_min * 60.0 + tm.tm_sec;
            return true;
        }
        tm = {};
    }
    char* end = nullptr;
    double v = std::strtod(raw.c_str(), &end);
    if (end != raw.c_str() && *end == '\0') {
        *out = v;
        return true;
    }
    return false;
}

bool parse_number(const std::string& raw, double* out) {
    if (raw.empty()) return false;
    char* end = nullptr;
    double v = std::strtod(raw.c_str(), &end);
    if (end == raw.c_str() || *end != '\0') return false;
    if (!std::isfinite(v)) return false;
    *out = v;
    return true;
}

std::string strip_cr(std::string s) {
    if (!s.empty() && s.back() == '\r') s.pop_back();
    return s;
}

// Steps per 12 months (30-day months) at the declared sampling period.
int64_t ett_points_per_year(const std::string& frequency) {
    if (frequency == "1 hour" || frequency == "1h") return 8640;
    if (frequency == "15 min" || frequency == "15min") return 34560;
    throw std::runtime_error("ett_months split requires an ETT frequency (1 hour or 15 min), got '" +
                             frequency + "'");
}

}  // namespace

SeriesTable load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    SeriesTable table;
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
    auto header = split_line(strip_cr(line), ',');
    if (header.empty() || header[0] != "date")
        throw std::runtime_error(path + ":1: first header column must be 'date'");
    table.channel_names.assign(header.begin() + 1, header.end());
    size_t cols = header.size();
    int64_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_line(line, ',');
        if (fields.size() != cols)
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected " + std::to_string(cols) + " fields, got " +
                                     std::to_string(fields.size()));
        double ts;
        if (!parse_timestamp(fields[0], &ts))
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": unparseable timestamp '" + fields[0] + "'");
        if (!table.timestamps.empty() && ts <= table.timestamps.back())
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": timestamps not strictly increasing");
        std::vector<double> row(cols - 1);
        for (size_t c = 1; c < cols; ++c) {
            if (!parse_number(fields[c], &row[c - 1]))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unparseable value '" + fields[c] + "' in column " +
                                         std::to_string(c + 1));
        }
        table.timestamps.push_back(ts);
        table.values.push_back(std::move(row));
    }
    if (table.values.empty()) throw std::runtime_error(path + ": no data rows");
    return table;
}

SplitBundle chronological_split(const SeriesTable& table, const SplitSpec& spec, int64_t seq_len,
                                int64_t horizon) {
    int64_t n = table.rows();
    int64_t b1 = 0, b2 = 0;  // core boundaries: train [0,b1), val [b1,b2), test [b2,n)
    if (spec.mode == SplitSpec::Mode::ett_months) {
        int64_t year = ett_points_per_year(table.frequency);
        int64_t train_len = year;            // 12 months
        int64_t part_len = year / 3;         // 4 months
        if (n < train_len + 2 * part_len)
            throw std::runtime_error("ett_months split: table too short (" + std::to_string(n) +
                                     " rows, need " + std::to_string(train_len + 2 * part_len) +
                                     ")");
        b1 = train_len;
        b2 = train_len + part_len;
        // rows beyond 20 months are ignored, matching the fixed-border convention
        n = train_len + 2 * part_len;
    } else {
        double sum = spec.train + spec.val + spec.test;
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::runtime_error("split ratios must sum to 1");
        int64_t train_len = static_cast<int64_t>(std::floor(static_cast<double>(n) * spec.train));
        int64_t test_len = static_cast<int64_t>(std::floor(static_cast<double>(n) * spec.test));
        b1 = train_len;
        b2 = n - test_len;
    }
    SplitBundle bundle;
    bundle.lookback = seq_len;
    bundle.train = {0, b1};
    bundle.val = {b1 - seq_len, b2};
    bundle.test = {b2 - seq_len, n};
    if (bundle.val.begin < 0)
        throw std::runtime_error("train segment shorter than the lookback prefix");
    for (const SplitRange* r : {&bundle.train, &bundle.val, &bundle.test}) {
        if (r->length() < seq_len + horizon)
            throw std::runtime_error("split segment of length " + std::to_string(r->length()) +
                                     " is shorter than S+H = " +
                                     std::to_string(seq_len + horizon));
    }
    return bundle;
}

int64_t window_count(int64_t segment_len_with_lookback, int64_t seq_len, bool subtract_horizon,
                     int64_t horizon) {
    int64_t count = segment_len_with_lookback - seq_len + 1;
    if (subtract_horizon) count -= horizon;
    if (count <= 0)
        throw std::runtime_error("window_count: nonpositive count for segment length " +
                                 std::to_string(segment_len_with_lookback));
    return count;
}

WindowStream::WindowStream(const SeriesTable& table, const SplitBundle& bundle, Split split,
                           int64_t seq_len, int64_t horizon, int64_t batch, bool shuffle,
                           uint64_t seed, int64_t oversample)
    : table_(table),
      seq_len_(seq_len),
      horizon_(horizon),
      batch_(batch),
      shuffle_(shuffle),
      oversample_(oversample),
      seed_(seed) {
    if (oversample < 1) throw std::runtime_error("oversample factor must be >= 1");
    if (batch < 1) throw std::runtime_error("batch size must be >= 1");
    const SplitRange& r = split == Split::train  ? bundle.train
                          : split == Split::val ? bundle.val
                                                : bundle.test;
    // every window (X and Y) must fit inside the segment
    int64_t last_origin = r.end - seq_len - horizon;
    if (last_origin < r.begin)
        throw std::runtime_error("segment too short for S+H windows");
    for (int64_t o = r.begin; o <= last_origin; ++o) base_origins_.push_back(o);
    start_epoch();
}

void WindowStream::start_epoch() {
    epoch_origins_.clear();
    epoch_origins_.reserve(base_origins_.size() * static_cast<size_t>(oversample_));
    Rng rng(seed_ + 0x9e3779b97f4a7c15ull * (epoch_ + 1));
    for (int64_t rep = 0; rep < oversample_; ++rep) {
        size_t start = epoch_origins_.size();
        epoch_origins_.insert(epoch_origins_.end(), base_origins_.begin(), base_origins_.end());
        if (shuffle_)
            std::shuffle(epoch_origins_.begin() + static_cast<std::ptrdiff_t>(start),
                         epoch_origins_.end(), rng.engine());
    }
    cursor_ = 0;
    ++epoch_;
}

std::optional<TimeWindowBatch> WindowStream::next() {
    if (cursor_ >= epoch_origins_.size()) return std::nullopt;
    size_t take = std::min(static_cast<size_t>(batch_), epoch_origins_.size() - cursor_);
    int64_t b = static_cast<int64_t>(take);
    int64_t c = table_.channels();
    TimeWindowBatch batch;
    batch.x = Tensor::zeros({b, seq_len_, c});
    batch.y = Tensor::zeros({b, horizon_, c});
    auto& xd = batch.x.data();
    auto& yd = batch.y.data();
    for (size_t i = 0; i < take; ++i) {
        int64_t origin = epoch_origins_[cursor_ + i];
        batch.origins.push_back(origin);
        for (int64_t t = 0; t < seq_len_; ++t)
            for (int64_t ch = 0; ch < c; ++ch)
                xd[static_cast<size_t>((static_cast<int64_t>(i) * seq_len_ + t) * c + ch)] =
                    table_.values[static_cast<size_t>(origin + t)][static_cast<size_t>(ch)];
        for (int64_t t = 0; t < horizon_; ++t)
            for (int64_t ch = 0; ch < c; ++ch)
                yd[static_cast<size_t>((static_cast<int64_t>(i) * horizon_ + t) * c + ch)] =
                    table_.values[static_cast<size_t>(origin + seq_len_ + t)]
                                 [static_cast<size_t>(ch)];
    }
    cursor_ += take;
    return batch;
}

Scaler fit_scaler(const SeriesTable& table, const SplitRange& train) {
    int64_t c = table.channels();
    Scaler s;
    s.mean.assign(static_cast<size_t>(c), 0.0);
    s.std.assign(static_cast<size_t>(c), 0.0);
    int64_t n = train.length();
    if (n < 2) throw std::runtime_error("fit_scaler: need at least 2 train rows");
    for (int64_t t = train.begin; t < train.end; ++t)
        for (int64_t ch = 0; ch < c; ++ch)
            s.mean[static_cast<size_t>(ch)] +=
                table.values[static_cast<size_t>(t)][static_cast<size_t>(ch)];
    for (double& m : s.mean) m /= static_cast<double>(n);
    for (int64_t t = train.begin; t < train.end; ++t)
        for (int64_t ch = 0; ch < c; ++ch) {
            double d = table.values[static_cast<size_t>(t)][static_cast<size_t>(ch)] -
                       s.mean[static_cast<size_t>(ch)];
            s.std[static_cast<size_t>(ch)] += d * d;
        }
    for (double& v : s.std) {
        v = std::sqrt(v / static_cast<double>(n));
        if (v == 0) v = 1.0;  // constant channel: shift only
    }
    return s;
}

void apply_scaler(SeriesTable& table, const Scaler& s) {
    if (static_cast<int64_t>(s.mean.size()) != table.channels())
        throw std::runtime_error("apply_scaler: channel mismatch");
    for (auto& row : table.values)
        for (size_t ch = 0; ch < row.size(); ++ch) row[ch] = (row[ch] - s.mean[ch]) / s.std[ch];
}

std::vector<M4Series> load_m4(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::vector<M4Series> out;
    std::string line;
    int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        auto fields = split_line(line, ',');
        if (line_no == 1 && fields.size() > 1 && (fields[1] == "V1" || fields[1] == "\"V1\""))
            continue;  // header, optionally quoted

        M4Series s;
        s.id = fields[0];
        // strip surrounding quotes, as in the published M4 files
        if (s.id.size() >= 2 && s.id.front() == '"' && s.id.back() == '"')
            s.id = s.id.substr(1, s.id.size() - 2);
        for (size_t i = 1; i < fields.size(); ++i) {
            if (fields[i].empty()) break;  // ragged tail padding
            double v;
            if (!parse_number(fields[i], &v))
                throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                         ": unparseable value '" + fields[i] + "'");
            s.values.push_back(v);
        }
        if (s.values.empty())
            throw std::runtime_error(path + ":" + std::to_string(line_no) + ": series '" + s.id +
                                     "' has no values");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw std::runtime_error(path + ": no series");
    return out;
}

std::string split_manifest_json(const SeriesTable& table, const SplitBundle& bundle,
                                int64_t seq_len, int64_t horizon, bool subtract_horizon) {
    nlohmann::json j;
    j["rows"] = table.rows();
    j["channels"] = table.channels();
    j["frequency"] = table.frequency;
    j["seq_len"] = seq_len;
    j["horizon"] = horizon;
    j["subtract_horizon"] = subtract_horizon;
    j["lookback"] = bundle.lookback;
    auto seg = [&](const SplitRange& r) {
        nlohmann::json s;
        s["begin"] = r.begin;
        s["end"] = r.end;
        s["length"] = r.length();
        s["windows"] = window_count(r.length(), seq_len, subtract_horizon, horizon);
        return s;
    };
    j["train"] = seg(bundle.train);
    j["val"] = seg(bundle.val);
    j["test"] = seg(bundle.test);
    return j.dump(2);
}

}  // namespace stella
