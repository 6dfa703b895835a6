#include "stella/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "stella/checkpoint.hpp"
#include "stella/training.hpp"

namespace stella {

namespace {

struct LoadedData {
    SeriesTable table;
    SplitBundle bundle;
    Scaler scaler;
};

SeriesTable load_table(const RunConfig& cfg, const std::string& path) {
    if (path.empty()) throw UserError("no dataset path configured");
    SeriesTable table;
    try {
        table = load_csv(path);
    } catch (const std::exception& e) {
        throw UserError(e.what());
    }
    table.frequency = cfg.frequency;
    table.domain_tag = cfg.domain;
    return table;
}

LoadedData load_data(const RunConfig& cfg, const std::string& path) {
    LoadedData d;
    d.table = load_table(cfg, path);
    d.bundle = chronological_split(d.table, cfg.split, cfg.model.seq_len, cfg.model.horizon);
    if (cfg.standardize) {
        d.scaler = fit_scaler(d.table, d.bundle.train);
        apply_scaler(d.table, d.scaler);
    }
    return d;
}

void write_file(const std::string& dir, const std::string& name, const std::string& content) {
    std::filesystem::create_directories(dir);
    std::string path = dir + "/" + name;
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
}

StellaModel build_model(const RunConfig& cfg, const SeriesTable& table) {
    ModelConfig mc = cfg.model;
    mc.channels = table.channels();
    CorpusMetadata meta{table.domain_tag, table.frequency, table.channels()};
    return StellaModel(mc, meta);
}

nlohmann::json train_one(StellaModel& model, const LoadedData& d, const RunConfig& cfg) {
    TrainHistory history = train(model, d.table, d.bundle, cfg.training);
    MetricReport report =
        evaluate_metrics(model, d.table, d.bundle, Split::test, cfg.training);
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["best_val_loss"] = history.best_val_loss;
    j["best_epoch"] = history.best_epoch;
    j["epochs_run"] = history.epochs.size();
    j["early_stopped"] = history.early_stopped;
    j["test_metrics"] = nlohmann::json::parse(report.to_json());
    return j;
}

}  // namespace

std::string cmd_inspect(const CliOptions& opt) {
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    std::string manifest = split_manifest_json(d.table, d.bundle, opt.cfg.model.seq_len,
                                               opt.cfg.model.horizon, opt.cfg.subtract_horizon);
    write_file(opt.out_dir, "manifest.json", manifest);
    return manifest;
}

std::string cmd_textualize(const CliOptions& opt) {
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    StellaModel model = build_model(opt.cfg, d.table);
    if (!opt.checkpoint.empty()) {
        ParamRegistry reg = model.parameters();
        load_checkpoint(reg, opt.checkpoint);
    }
    WindowStream stream(d.table, d.bundle, Split::train, opt.cfg.model.seq_len,
                        opt.cfg.model.horizon, 1, false, opt.cfg.seed);
    if (opt.window_index < 0 || opt.window_index >= stream.windows_per_epoch())
        throw UserError("window index out of range");
    std::optional<TimeWindowBatch> batch;
    for (int64_t i = 0; i <= opt.window_index; ++i) batch = stream.next();
    Rng rng(opt.cfg.seed);
    auto [xnorm, stats] = model.revin.normalize(batch->x);
    ComponentTriple comps = model.stl.forward(xnorm);
    const Tensor* parts[3] = {&comps.trend, &comps.seasonal, &comps.residual};
    static const ComponentKind kKinds[3] = {ComponentKind::trend, ComponentKind::seasonal,
                                            ComponentKind::residual};
    nlohmann::json j;
    j["window_index"] = opt.window_index;
    CorpusMetadata meta{d.table.domain_tag, d.table.frequency, d.table.channels()};
    j["corpus"] = {{"text", render_csp_text(meta)}};
    nlohmann::json records = nlohmann::json::array();
    int64_t S = opt.cfg.model.seq_len, C = d.table.channels();
    for (int64_t c = 0; c < C; ++c) {
        for (int k = 0; k < 3; ++k) {
            std::vector<real> series(static_cast<size_t>(S));
            for (int64_t t = 0; t < S; ++t)
                series[static_cast<size_t>(t)] =
                    parts[k]->data()[static_cast<size_t>(t * C + c)];
            auto sig = extract_signature(series, opt.cfg.model.sam.top_k_lags);
            nlohmann::json rec;
            rec["channel"] = d.table.channel_names.empty()
                                 ? std::to_string(c)
                                 : d.table.channel_names[static_cast<size_t>(c)];
            rec["component"] = component_name(kKinds[k]);
            rec["trend_category"] = sig.trend_category;
            rec["mean"] = sig.mean;
            rec["var"] = sig.var;
            rec["min"] = sig.min;
            rec["max"] = sig.max;
            rec["slope"] = sig.slope;
            nlohmann::json lags = nlohmann::json::array();
            for (const auto& l : sig.top_lags)
                lags.push_back({{"lag", l.lag}, {"autocorr", l.autocorr}});
            rec["top_lags"] = lags;
            rec["text"] = render_fbp_text(sig, kKinds[k]);
            records.push_back(std::move(rec));
        }
    }
    j["records"] = std::move(records);
    std::string out = j.dump(2);
    write_file(opt.out_dir, "textualize.json", out);
    return out;
}

std::string cmd_train(const CliOptions& opt) {
    const RunConfig& cfg = opt.cfg;
    LoadedData d = load_data(cfg, cfg.data_path);
    SplitBundle bundle = d.bundle;
    if (cfg.mode == "few_shot")
        bundle = few_shot_bundle(bundle, cfg.few_shot_fraction, cfg.model.seq_len,
                                 cfg.model.horizon);
    StellaModel model = build_model(cfg, d.table);
    TrainHistory history = train(model, d.table, bundle, cfg.training);
    ParamRegistry reg = model.parameters();
    save_checkpoint(reg, opt.out_dir + "/checkpoint.json", cfg.to_json());
    write_file(opt.out_dir, "history.csv", history.to_csv());
    nlohmann::json j;
    j["seed"] = cfg.seed;
    j["mode"] = cfg.mode;
    j["best_val_loss"] = history.best_val_loss;
    j["best_epoch"] = history.best_epoch;
    j["epochs_run"] = history.epochs.size();
    j["early_stopped"] = history.early_stopped;
    j["trainable_parameters"] = reg.trainable_count();
    if (cfg.mode == "zero_shot") {
        if (cfg.zero_shot_target.empty())
            throw UserError("zero_shot mode requires training.zero_shot_target");
        LoadedData target = load_data(cfg, cfg.zero_shot_target);
        if (target.table.channels() != d.table.channels())
            throw UserError("zero-shot source and target channel counts differ");
        MetricReport report =
            evaluate_metrics(model, target.table, target.bundle, Split::test, cfg.training);
        j["zero_shot_metrics"] = nlohmann::json::parse(report.to_json());
    } else {
        MetricReport report =
            evaluate_metrics(model, d.table, d.bundle, Split::test, cfg.training);
        j["test_metrics"] = nlohmann::json::parse(report.to_json());
    }
    std::string out = j.dump(2);
    write_file(opt.out_dir, "train.json", out);
    return out;
}

std::string cmd_evaluate(const CliOptions& opt) {
    if (opt.checkpoint.empty()) throw UserError("evaluate requires a checkpoint");
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    StellaModel model = build_model(opt.cfg, d.table);
    ParamRegistry reg = model.parameters();
    load_checkpoint(reg, opt.checkpoint);
    MetricReport report =
        evaluate_metrics(model, d.table, d.bundle, Split::test, opt.cfg.training);
    std::string out = report.to_json();
    write_file(opt.out_dir, "metrics.json", out);
    return out;
}

std::string cmd_forecast(const CliOptions& opt) {
    if (opt.checkpoint.empty()) throw UserError("forecast requires a checkpoint");
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    StellaModel model = build_model(opt.cfg, d.table);
    ParamRegistry reg = model.parameters();
    load_checkpoint(reg, opt.checkpoint);
    WindowStream stream(d.table, d.bundle, Split::test, opt.cfg.model.seq_len,
                        opt.cfg.model.horizon, 1, false, opt.cfg.seed);
    if (opt.window_index < 0 || opt.window_index >= stream.windows_per_epoch())
        throw UserError("window index out of range");
    std::optional<TimeWindowBatch> batch;
    for (int64_t i = 0; i <= opt.window_index; ++i) batch = stream.next();
    Rng rng(opt.cfg.seed);
    ForwardResult fr = model.forward(batch->x, false, rng);
    int64_t H = opt.cfg.model.horizon, C = d.table.channels();
    std::ostringstream csv;
    csv.precision(17);
    csv << "step";
    for (int64_t c = 0; c < C; ++c)
        csv << ","
            << (d.table.channel_names.empty() ? std::to_string(c)
                                              : d.table.channel_names[static_cast<size_t>(c)]);
    csv << "\n";
    for (int64_t h = 0; h < H; ++h) {
        csv << h;
        for (int64_t c = 0; c < C; ++c)
            csv << "," << fr.yhat.data()[static_cast<size_t>(h * C + c)];
        csv << "\n";
    }
    write_file(opt.out_dir, "forecast.csv", csv.str());
    nlohmann::json gates;
    gates["shape"] = fr.gates.shape();
    gates["values"] = fr.gates.data();
    write_file(opt.out_dir, "gates.json", gates.dump());
    return csv.str();
}

std::string cmd_ablate(const CliOptions& opt) {
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    struct Variant {
        const char* name;
        Ablation ab;
    };
    const Variant variants[5] = {
        {"full", {}},
        {"no_nstl", {true, false, false, false}},
        {"no_tcp", {false, true, false, false}},
        {"no_fbp", {false, false, true, false}},
        {"no_csp", {false, false, false, true}},
    };
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& v : variants) {
        RunConfig cfg = opt.cfg;
        cfg.model.ablation = v.ab;
        StellaModel model = build_model(cfg, d.table);
        nlohmann::json row = train_one(model, d, cfg);
        row["variant"] = v.name;
        rows.push_back(std::move(row));
    }
    nlohmann::json j;
    j["seed"] = opt.cfg.seed;
    j["variants"] = std::move(rows);
    std::string out = j.dump(2);
    write_file(opt.out_dir, "ablate.json", out);
    return out;
}

std::string cmd_sweep(const CliOptions& opt) {
    if (opt.sweep_axis != "fbp" && opt.sweep_axis != "csp")
        throw UserError("sweep axis must be fbp or csp");
    std::vector<int64_t> values = opt.sweep_values;
    if (values.empty())
        values = opt.sweep_axis == "fbp" ? std::vector<int64_t>{3, 6, 12, 24, 48}
                                         : std::vector<int64_t>{1, 5, 10, 20, 40};
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    nlohmann::json rows = nlohmann::json::array();
    for (int64_t v : values) {
        RunConfig cfg = opt.cfg;
        if (opt.sweep_axis == "fbp")
            cfg.model.sam.g_fbp = v;
        else
            cfg.model.sam.g_csp = v;
        StellaModel model = build_model(cfg, d.table);
        nlohmann::json row = train_one(model, d, cfg);
        row["value"] = v;
        rows.push_back(std::move(row));
    }
    nlohmann::json j;
    j["axis"] = opt.sweep_axis;
    j["seed"] = opt.cfg.seed;
    j["runs"] = std::move(rows);
    std::string out = j.dump(2);
    write_file(opt.out_dir, "sweep.json", out);
    return out;
}

std::string cmd_export_embeddings(const CliOptions& opt) {
    if (opt.checkpoint.empty()) throw UserError("export-embeddings requires a checkpoint");
    LoadedData d = load_data(opt.cfg, opt.cfg.data_path);
    StellaModel model = build_model(opt.cfg, d.table);
    ParamRegistry reg = model.parameters();
    load_checkpoint(reg, opt.checkpoint);
    int64_t n = opt.export_count;
    WindowStream stream(d.table, d.bundle, Split::test, opt.cfg.model.seq_len,
                        opt.cfg.model.horizon, n, false, opt.cfg.seed);
    auto batch = stream.next();
    Rng rng(opt.cfg.seed);
    ForwardResult fr = model.forward(batch->x, false, rng);
    std::ostringstream csv;
    csv.precision(17);
    csv << "label,sample,channel,token";
    for (int64_t k = 0; k < opt.cfg.model.patch.d_model; ++k) csv << ",d" << k;
    csv << "\n";
    int64_t B = batch->x.shape()[0], C = d.table.channels();
    auto dump_rows = [&](const char* label, const Tensor& t) {
        // t: (B*C) x G x D
        int64_t G = t.shape()[1], D = t.shape()[2];
        for (int64_t r = 0; r < t.shape()[0]; ++r)
            for (int64_t g = 0; g < G; ++g) {
                csv << label << "," << r / C << "," << r % C << "," << g;
                for (int64_t k = 0; k < D; ++k)
                    csv << "," << t.data()[static_cast<size_t>((r * G + g) * D + k)];
                csv << "\n";
            }
    };
    static const char* kComp[3] = {"trend", "seasonal", "residual"};
    static const char* kFbp[3] = {"fbp_T", "fbp_S", "fbp_R"};
    for (int k = 0; k < 3; ++k) dump_rows(kComp[k], fr.embeddings[static_cast<size_t>(k)]);
    if (!fr.anchors.fbp.empty())
        for (int k = 0; k < 3; ++k) dump_rows(kFbp[k], fr.anchors.fbp[static_cast<size_t>(k)]);
    if (fr.anchors.csp.defined()) {
        Tensor csp = fr.anchors.csp;  // 1 x G x D
        dump_rows("csp", csp);
    }
    (void)B;
    write_file(opt.out_dir, "embeddings.csv", csv.str());
    return csv.str();
}

int run_command(const std::string& name, const CliOptions& opt) {
    try {
        std::string out;
        if (name == "inspect")
            out = cmd_inspect(opt);
        else if (name == "textualize")
            out = cmd_textualize(opt);
        else if (name == "train")
            out = cmd_train(opt);
        else if (name == "evaluate")
            out = cmd_evaluate(opt);
        else if (name == "forecast")
            out = cmd_forecast(opt);
        else if (name == "ablate")
            out = cmd_ablate(opt);
        else if (name == "sweep")
            out = cmd_sweep(opt);
        else if (name == "export-embeddings")
            out = cmd_export_embeddings(opt);
        else
            throw UserError("unknown command '" + name + "'");
        std::cout << out << std::endl;
        return 0;
    } catch (const UserError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << std::endl;
        return 2;
    }
}

}  // namespace stella
