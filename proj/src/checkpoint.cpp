#include "stella/checkpoint.hpp"

#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace stella {

namespace {
constexpr int kVersion = 1;
}

void save_checkpoint(const ParamRegistry& reg, const std::string& path,
                     const std::string& config_json) {
    nlohmann::json j;
    j["version"] = kVersion;
    j["config"] = nlohmann::json::parse(config_json);
    nlohmann::json params = nlohmann::json::array();
    for (const auto& p : reg.all()) {
        nlohmann::json e;
        e["name"] = p.name;
        e["shape"] = p.tensor.shape();
        e["frozen"] = p.frozen;
        e["values"] = p.tensor.data();
        params.push_back(std::move(e));
    }
    j["params"] = std::move(params);
    auto parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << j.dump();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::string load_checkpoint(ParamRegistry& reg, const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    if (j.value("version", 0) != kVersion)
        throw std::runtime_error(path + ": unsupported checkpoint version");
    const auto& params = j.at("params");
    if (params.size() != reg.all().size())
        throw std::runtime_error(path + ": parameter count mismatch (" +
                                 std::to_string(params.size()) + " stored, " +
                                 std::to_string(reg.all().size()) + " expected)");
    for (size_t i = 0; i < reg.all().size(); ++i) {
        auto& p = reg.all()[i];
        const auto& e = params[i];
        if (e.at("name").get<std::string>() != p.name)
            throw std::runtime_error(path + ": parameter name mismatch at index " +
                                     std::to_string(i) + " (" +
                                     e.at("name").get<std::string>() + " vs " + p.name + ")");
        if (e.at("shape").get<Shape>() != p.tensor.shape())
            throw std::runtime_error(path + ": shape mismatch for " + p.name);
        if (e.at("frozen").get<bool>() != p.frozen)
            throw std::runtime_error(path + ": frozen flag mismatch for " + p.name);
        auto values = e.at("values").get<std::vector<real>>();
        if (static_cast<int64_t>(values.size()) != p.tensor.size())
            throw std::runtime_error(path + ": value count mismatch for " + p.name);
        p.tensor.data() = std::move(values);
    }
    return j.at("config").dump();
}

}  // namespace stella
