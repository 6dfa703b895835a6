#include "stella/config.hpp"

#include <fstream>
#include <set>
#include <stdexcept>

#include "json.hpp"

namespace stella {

namespace {

constexpr int kSchemaVersion = 1;

void check_keys(const nlohmann::json& j, const std::set<std::string>& allowed,
                const std::string& section) {
    for (auto it = j.begin(); it != j.end(); ++it)
        if (!allowed.count(it.key()))
            throw std::runtime_error("unknown config key '" + section + it.key() + "'");
}

template <typename T>
void get(const nlohmann::json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::string RunConfig::to_json() const {
    nlohmann::json j;
    j["schema_version"] = kSchemaVersion;
    j["seed"] = seed;
    auto& d = j["data"];
    d["path"] = data_path;
    d["frequency"] = frequency;
    d["domain"] = domain;
    d["split_mode"] = split.mode == SplitSpec::Mode::ett_months ? "ett_months" : "ratio";
    d["train_ratio"] = split.train;
    d["val_ratio"] = split.val;
    d["test_ratio"] = split.test;
    d["subtract_horizon"] = subtract_horizon;
    d["standardize"] = standardize;
    auto& m = j["model"];
    m["seq_len"] = model.seq_len;
    m["horizon"] = model.horizon;
    m["stl_hidden"] = model.stl_hidden;
    m["d_model"] = model.patch.d_model;
    m["patch_len"] = model.patch.patch_len;
    m["stride"] = model.patch.stride;
    m["tcn_layers"] = model.patch.tcn_layers;
    m["sub_blocks"] = model.patch.sub_blocks;
    m["kernel"] = model.patch.kernel;
    m["dropout"] = model.patch.dropout;
    m["g_fbp"] = model.sam.g_fbp;
    m["g_csp"] = model.sam.g_csp;
    m["top_k_lags"] = model.sam.top_k_lags;
    m["sam_rank"] = model.sam.rank;
    m["layers"] = model.backbone.layers;
    m["n_heads"] = model.backbone.n_heads;
    m["d_ff"] = model.backbone.d_ff;
    m["lora_r"] = model.backbone.lora_r;
    m["lora_alpha"] = model.backbone.lora_alpha;
    m["lora_r_out"] = model.backbone.lora_r_out;
    m["lora_alpha_out"] = model.backbone.lora_alpha_out;
    m["lora_dropout"] = model.backbone.lora_dropout;
    m["frozen_seed"] = model.backbone.frozen_seed;
    auto& t = j["training"];
    t["loss"] = loss_kind_name(training.loss_kind);
    t["lr"] = training.lr_target;
    t["warmup_epochs"] = training.warmup_epochs;
    t["decay"] = training.decay_rate;
    t["max_epochs"] = training.max_epochs;
    t["patience"] = training.patience;
    t["batch_size"] = training.batch_size;
    t["clip_norm"] = training.clip_norm;
    t["oversample"] = training.oversample;
    t["mode"] = mode;
    t["few_shot_fraction"] = few_shot_fraction;
    t["zero_shot_target"] = zero_shot_target;
    return j.dump(2);
}

RunConfig parse_run_config(const std::string& json_text) {
    nlohmann::json j = nlohmann::json::parse(json_text);
    check_keys(j, {"schema_version", "seed", "data", "model", "training"}, "");
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != kSchemaVersion)
        throw std::runtime_error("unsupported config schema_version");
    RunConfig cfg;
    get(j, "seed", cfg.seed);
    if (j.contains("data")) {
        const auto& d = j.at("data");
        check_keys(d,
                   {"path", "frequency", "domain", "split_mode", "train_ratio", "val_ratio",
                    "test_ratio", "subtract_horizon", "standardize"},
                   "data.");
        get(d, "path", cfg.data_path);
        get(d, "frequency", cfg.frequency);
        get(d, "domain", cfg.domain);
        if (d.contains("split_mode")) {
            std::string mode = d.at("split_mode").get<std::string>();
            if (mode == "ratio")
                cfg.split.mode = SplitSpec::Mode::ratio;
            else if (mode == "ett_months")
                cfg.split.mode = SplitSpec::Mode::ett_months;
            else
                throw std::runtime_error("unknown split_mode '" + mode + "'");
        }
        get(d, "train_ratio", cfg.split.train);
        get(d, "val_ratio", cfg.split.val);
        get(d, "test_ratio", cfg.split.test);
        get(d, "subtract_horizon", cfg.subtract_horizon);
        get(d, "standardize", cfg.standardize);
    }
    if (j.contains("model")) {
        const auto& m = j.at("model");
        check_keys(m,
                   {"seq_len", "horizon", "stl_hidden", "d_model", "patch_len", "stride",
                    "tcn_layers", "sub_blocks", "kernel", "dropout", "g_fbp", "g_csp",
                    "top_k_lags", "sam_rank", "layers", "n_heads", "d_ff", "lora_r", "lora_alpha",
                    "lora_r_out", "lora_alpha_out", "lora_dropout", "frozen_seed"},
                   "model.");
        get(m, "seq_len", cfg.model.seq_len);
        get(m, "horizon", cfg.model.horizon);
        get(m, "stl_hidden", cfg.model.stl_hidden);
        get(m, "d_model", cfg.model.patch.d_model);
        get(m, "patch_len", cfg.model.patch.patch_len);
        get(m, "stride", cfg.model.patch.stride);
        get(m, "tcn_layers", cfg.model.patch.tcn_layers);
        get(m, "sub_blocks", cfg.model.patch.sub_blocks);
        get(m, "kernel", cfg.model.patch.kernel);
        get(m, "dropout", cfg.model.patch.dropout);
        get(m, "g_fbp", cfg.model.sam.g_fbp);
        get(m, "g_csp", cfg.model.sam.g_csp);
        get(m, "top_k_lags", cfg.model.sam.top_k_lags);
        get(m, "sam_rank", cfg.model.sam.rank);
        get(m, "layers", cfg.model.backbone.layers);
        get(m, "n_heads", cfg.model.backbone.n_heads);
        get(m, "d_ff", cfg.model.backbone.d_ff);
        get(m, "lora_r", cfg.model.backbone.lora_r);
        get(m, "lora_alpha", cfg.model.backbone.lora_alpha);
        get(m, "lora_r_out", cfg.model.backbone.lora_r_out);
        get(m, "lora_alpha_out", cfg.model.backbone.lora_alpha_out);
        get(m, "lora_dropout", cfg.model.backbone.lora_dropout);
        get(m, "frozen_seed", cfg.model.backbone.frozen_seed);
    }
    if (j.contains("training")) {
        const auto& t = j.at("training");
        check_keys(t,
                   {"loss", "lr", "warmup_epochs", "decay", "max_epochs", "patience",
                    "batch_size", "clip_norm", "oversample", "mode", "few_shot_fraction",
                    "zero_shot_target"},
                   "training.");
        if (t.contains("loss"))
            cfg.training.loss_kind = loss_kind_from(t.at("loss").get<std::string>());
        get(t, "lr", cfg.training.lr_target);
        get(t, "warmup_epochs", cfg.training.warmup_epochs);
        get(t, "decay", cfg.training.decay_rate);
        get(t, "max_epochs", cfg.training.max_epochs);
        get(t, "patience", cfg.training.patience);
        get(t, "batch_size", cfg.training.batch_size);
        get(t, "clip_norm", cfg.training.clip_norm);
        get(t, "oversample", cfg.training.oversample);
        get(t, "mode", cfg.mode);
        if (cfg.mode != "standard" && cfg.mode != "few_shot" && cfg.mode != "zero_shot")
            throw std::runtime_error("unknown training mode '" + cfg.mode + "'");
        get(t, "few_shot_fraction", cfg.few_shot_fraction);
        get(t, "zero_shot_target", cfg.zero_shot_target);
    }
    cfg.model.seed = cfg.seed;
    cfg.training.seed = cfg.seed;
    return cfg;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

}  // namespace stella
