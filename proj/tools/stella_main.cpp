#include <cstdlib>
#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "stella/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"stella: decomposition-based time-series forecasting"};
    app.require_subcommand(1);

    stella::CliOptions opt;
    std::string config_path, dataset, seed_str;
    int64_t seq_len = -1, pred_len = -1;
    std::string ablate_flag, sweep_axis;
    std::vector<int64_t> sweep_values;

    app.add_option("--config", config_path, "run configuration (JSON)");
    app.add_option("--seed", seed_str, "master random seed");
    app.add_option("--dataset", dataset, "dataset CSV path");
    app.add_option("--seq-len", seq_len, "input window length S");
    app.add_option("--pred-len", pred_len, "forecast horizon H");
    app.add_option("--out-dir", opt.out_dir, "artifact output directory");
    app.add_option("--checkpoint", opt.checkpoint, "checkpoint to load");
    app.add_option("--window", opt.window_index, "window index");
    app.add_option("--ablate", ablate_flag, "single ablation: no_nstl|no_tcp|no_fbp|no_csp");
    app.add_option("--sweep-axis", sweep_axis, "sweep axis: fbp|csp");
    app.add_option("--sweep-values", sweep_values, "sweep values");
    app.add_option("--export-count", opt.export_count, "samples to export");

    std::string subcommands[] = {"inspect",  "textualize", "train", "evaluate",
                                 "forecast", "ablate",     "sweep", "export-embeddings"};
    for (const auto& name : subcommands) app.add_subcommand(name);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (config_path.empty()) {
            const char* env = std::getenv("STELLA_DATA_DIR");
            (void)env;
            opt.cfg = stella::RunConfig();
        } else {
            opt.cfg = stella::load_run_config(config_path);
        }
        if (!dataset.empty()) {
            opt.cfg.data_path = dataset;
        } else if (!opt.cfg.data_path.empty() && opt.cfg.data_path.front() != '/') {
            const char* env = std::getenv("STELLA_DATA_DIR");
            if (env) opt.cfg.data_path = std::string(env) + "/" + opt.cfg.data_path;
        }
        if (!seed_str.empty()) {
            opt.cfg.seed = std::stoull(seed_str);
            opt.cfg.model.seed = opt.cfg.seed;
            opt.cfg.training.seed = opt.cfg.seed;
        }
        if (seq_len > 0) opt.cfg.model.seq_len = seq_len;
        if (pred_len > 0) opt.cfg.model.horizon = pred_len;
        if (!ablate_flag.empty()) {
            if (ablate_flag == "no_nstl")
                opt.cfg.model.ablation.no_nstl = true;
            else if (ablate_flag == "no_tcp")
                opt.cfg.model.ablation.no_tcp = true;
            else if (ablate_flag == "no_fbp")
                opt.cfg.model.ablation.no_fbp = true;
            else if (ablate_flag == "no_csp")
                opt.cfg.model.ablation.no_csp = true;
            else
                throw stella::UserError("unknown ablation '" + ablate_flag + "'");
        }
        if (!sweep_axis.empty()) opt.sweep_axis = sweep_axis;
        opt.sweep_values = sweep_values;
        return stella::run_command(app.get_subcommands()[0]->get_name(), opt);
    } catch (const stella::UserError& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << std::endl;
        return 1;
    }
}
