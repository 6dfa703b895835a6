#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "stella/config.hpp"

namespace stella {

// Exit code 1 (bad input/config) as opposed to 2 (runtime failure).
struct UserError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliOptions {
    RunConfig cfg;
    std::string out_dir = ".";
    std::string checkpoint;        // input checkpoint for evaluate/forecast/export
    int64_t window_index = 0;      // textualize/forecast
    int64_t export_count = 10;     // export-embeddings
    std::string sweep_axis = "fbp";
    std::vector<int64_t> sweep_values;  // empty -> documented defaults
};

// Each command returns its primary artifact as a string (also written under
// out_dir) and throws UserError / std::runtime_error on failure.
std::string cmd_inspect(const CliOptions& opt);
std::string cmd_textualize(const CliOptions& opt);
std::string cmd_train(const CliOptions& opt);
std::string cmd_evaluate(const CliOptions& opt);
std::string cmd_forecast(const CliOptions& opt);
std::string cmd_ablate(const CliOptions& opt);
std::string cmd_sweep(const CliOptions& opt);
std::string cmd_export_embeddings(const CliOptions& opt);

// Dispatch by name; returns the process exit code (0/1/2) and prints the
// artifact or error message.
int run_command(const std::string& name, const CliOptions& opt);

}  // namespace stella
