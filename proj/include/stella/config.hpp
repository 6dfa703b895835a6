#pragma once

#include <string>

#include "stella/data.hpp"
#include "stella/model.hpp"
#include "stella/training.hpp"

namespace stella {

// Declarative run configuration; every field has a default, unknown keys are
// rejected.
struct RunConfig {
    // data
    std::string data_path;
    std::string frequency = "1 hour";
    std::string domain = "unknown";
    SplitSpec split;  // mode + ratios
    bool subtract_horizon = false;
    bool standardize = true;
    // model
    ModelConfig model;
    // training
    TrainConfig training;
    std::string mode = "standard";  // standard | few_shot | zero_shot
    real few_shot_fraction = 0.1;
    std::string zero_shot_target;  // target dataset path
    uint64_t seed = 0;

    std::string to_json() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);

}  // namespace stella
