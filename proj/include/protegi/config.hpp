#pragma once

#include "protegi/optimizer.hpp"
#include "protegi/remote_backend.hpp"
#include "protegi/sim_backend.hpp"

#include <json.hpp>

#include <filesystem>

namespace protegi {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// The shipped default profile, as a nested JSON object.
nlohmann::json default_config();

/// Overlays `overlay` onto `base`. Keys absent from `base` are rejected,
/// except inside free-form maps (sim.keywords).
void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& where = "");

/// Applies one "dotted.key=value" override; the value is parsed as JSON when
/// it parses, otherwise taken as a string.
void apply_override(nlohmann::json& cfg, std::string_view assignment);

/// Defaults + optional file + overrides, in that order.
nlohmann::json load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides);

struct DataSettings {
    std::string path;
    std::string format = "jsonl";
    LabelMapping labels;
    std::size_t n_dev = 50;
    std::size_t n_test = 150;
    std::size_t few_shot = 2;
    /// "train" or "dev": where expansion minibatches come from.
    std::string minibatch_source = "train";
    /// Size of the generated dataset when no path is given (sim backend only).
    std::size_t synthetic_size = 600;
};

struct EffectiveConfig {
    std::uint64_t seed = 0;
    std::string backend = "sim";
    RunConfig run;
    SimProfile sim;
    RemoteConfig remote;
    std::string cache_dir;
    DataSettings data;
    /// Built-in task prompt name or a path to a template file.
    std::string initial_prompt = "ethos";
    std::string template_dir;
    std::string run_name = "run";
    std::size_t replicates = 1;
};

/// Typed view of a merged config; throws ConfigError on bad values.
EffectiveConfig to_effective(const nlohmann::json& cfg);

} // namespace protegi
