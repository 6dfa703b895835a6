#pragma once

#include <string>

#include "stella/nn.hpp"

namespace stella {

// Versioned JSON manifest: every named parameter with shape, frozen flag, and
// raw values. Round trips bit-exactly.
void save_checkpoint(const ParamRegistry& reg, const std::string& path,
                     const std::string& config_json = "{}");

// Loads values into an already-constructed registry; name/shape/frozen must
// match exactly. Returns the stored config document.
std::string load_checkpoint(ParamRegistry& reg, const std::string& path);

}  // namespace stella
