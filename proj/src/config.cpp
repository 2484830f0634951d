#include "protegi/config.hpp"

#include <fstream>

namespace protegi {

nlohmann::json default_config()
{
    return nlohmann::json::parse(R"({
  "seed": 0,
  "mode": "protegi",
  "replicates": 1,
  "backend": {
    "kind": "sim",
    "endpoint": "https://api.openai.com/v1/chat/completions",
    "model": "gpt-3.5-turbo",
    "api_key_env": "OPENAI_API_KEY",
    "max_in_flight": 8,
    "max_retries": 5,
    "retry_base_ms": 500,
    "timeout_s": 60,
    "cache_dir": ""
  },
  "sim": {
    "base_accuracy": 0.55,
    "cap": 0.95,
    "keywords": {"religion": 0.15, "targets": 0.15},
    "gradient_hit_rate": 0.75,
    "paraphrase_inject_rate": 0.05,
    "paraphrase_drop_rate": 0.2
  },
  "data": {
    "path": "",
    "format": "jsonl",
    "positive_label": "Yes",
    "negative_label": "No",
    "n_dev": 50,
    "n_test": 150,
    "few_shot": 2,
    "minibatch_source": "train",
    "synthetic_size": 600
  },
  "task": {
    "initial_prompt": "ethos",
    "template_dir": ""
  },
  "search": {
    "beam_width": 4,
    "depth": 6,
    "include_parents": true,
    "patience": 0
  },
  "expansion": {
    "minibatch_size": 64,
    "error_group_size": 4,
    "gradients_per_group": 4,
    "edits_per_gradient": 1,
    "paraphrases_per_edit": 2,
    "max_successors": 8,
    "error_groups_used": 1
  },
  "selection": {
    "algorithm": "ucb",
    "exploration": 2.0,
    "rounds": 0,
    "sample_size": 5,
    "budget": 0,
    "ucb_update": "mean",
    "ucbe_bonus": "scaled",
    "sr_horizon": "arms"
  },
  "output": {
    "name": "run"
  }
})");
}

namespace {

bool is_free_map(const std::string& where)
{
    return where == "sim.keywords";
}

bool compatible(const nlohmann::json& base, const nlohmann::json& value)
{
    if (base.is_number())
        return value.is_number();
    if (base.is_boolean())
        return value.is_boolean();
    if (base.is_string())
        return value.is_string();
    if (base.is_object())
        return value.is_object();
    return base.type() == value.type();
}

} // namespace

void merge_config(nlohmann::json& base, const nlohmann::json& overlay, const std::string& where)
{
    if (!overlay.is_object())
        throw ConfigError("config" + (where.empty() ? std::string() : " section '" + where + "'") +
                          " must be an object");
    for (const auto& [key, value] : overlay.items()) {
        const std::string path = where.empty() ? key : where + "." + key;
        if (!base.contains(key))
            throw ConfigError("unknown config key '" + path + "'");
        auto& slot = base[key];
        if (!compatible(slot, value))
            throw ConfigError("config key '" + path + "' expects " + std::string(slot.type_name()) + ", got " +
                              std::string(value.type_name()));
        if (slot.is_object() && !is_free_map(path))
            merge_config(slot, value, path);
        else
            slot = value;
    }
}

void apply_override(nlohmann::json& cfg, std::string_view assignment)
{
    const auto eq = assignment.find('=');
    if (eq == std::string_view::npos || eq == 0)
        throw ConfigError("override '" + std::string(assignment) + "' is not key=value");
    const std::string key(assignment.substr(0, eq));
    const std::string raw(assignment.substr(eq + 1));
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded())
        value = raw;

    // build {"a":{"b":value}} and merge it, so validation is shared
    nlohmann::json overlay = value;
    std::string_view rest = key;
    std::vector<std::string> parts;
    while (true) {
        auto dot = rest.find('.');
        parts.emplace_back(rest.substr(0, dot));
        if (dot == std::string_view::npos)
            break;
        rest.remove_prefix(dot + 1);
    }
    for (auto it = parts.rbegin(); it != parts.rend(); ++it)
        overlay = nlohmann::json{{*it, overlay}};
    merge_config(cfg, overlay);
}

nlohmann::json load_config(const std::filesystem::path& file, const std::vector<std::string>& overrides)
{
    nlohmann::json cfg = default_config();
    if (!file.empty()) {
        std::ifstream in(file);
        if (!in)
            throw ConfigError("cannot open config file " + file.string());
        nlohmann::json overlay = nlohmann::json::parse(in, nullptr, false);
        if (overlay.is_discarded())
            throw ConfigError("config file " + file.string() + " is not valid JSON");
        merge_config(cfg, overlay);
    }
    for (const auto& o : overrides)
        apply_override(cfg, o);
    return cfg;
}

namespace {

template <typename T>
T get_as(const nlohmann::json& cfg, const char* section, const char* key)
{
    try {
        const auto& v = section ? cfg.at(section).at(key) : cfg.at(key);
        if constexpr (std::is_unsigned_v<T>) {
            if (v.is_number_integer() && v.get<long long>() < 0)
                throw ConfigError(std::string(section ? section : "") + "." + key + " must be non-negative");
            if (v.is_number_float())
                throw ConfigError(std::string(section ? section : "") + "." + key + " must be an integer");
        }
        return v.get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config key ") + (section ? std::string(section) + "." : "") + key + ": " +
                          e.what());
    }
}

} // namespace

EffectiveConfig to_effective(const nlohmann::json& cfg)
{
    EffectiveConfig e;
    e.seed = get_as<std::uint64_t>(cfg, nullptr, "seed");
    e.replicates = get_as<std::size_t>(cfg, nullptr, "replicates");
    if (e.replicates < 1)
        throw ConfigError("replicates must be >= 1");

    e.backend = get_as<std::string>(cfg, "backend", "kind");
    if (e.backend != "sim" && e.backend != "remote")
        throw ConfigError("backend.kind must be 'sim' or 'remote'");
    e.remote.endpoint = get_as<std::string>(cfg, "backend", "endpoint");
    e.remote.model = get_as<std::string>(cfg, "backend", "model");
    e.remote.api_key_env = get_as<std::string>(cfg, "backend", "api_key_env");
    e.remote.max_in_flight = get_as<int>(cfg, "backend", "max_in_flight");
    e.remote.max_retries = get_as<int>(cfg, "backend", "max_retries");
    e.remote.retry_base = std::chrono::milliseconds(get_as<int>(cfg, "backend", "retry_base_ms"));
    e.remote.timeout = std::chrono::seconds(get_as<int>(cfg, "backend", "timeout_s"));
    e.cache_dir = get_as<std::string>(cfg, "backend", "cache_dir");
    if (e.remote.max_in_flight < 1 || e.remote.max_retries < 0)
        throw ConfigError("backend.max_in_flight must be >= 1 and backend.max_retries >= 0");

    e.sim.base_accuracy = get_as<double>(cfg, "sim", "base_accuracy");
    e.sim.cap = get_as<double>(cfg, "sim", "cap");
    e.sim.gradient_hit_rate = get_as<double>(cfg, "sim", "gradient_hit_rate");
    e.sim.paraphrase_inject_rate = get_as<double>(cfg, "sim", "paraphrase_inject_rate");
    e.sim.paraphrase_drop_rate = get_as<double>(cfg, "sim", "paraphrase_drop_rate");
    e.sim.keyword_weights.clear();
    for (const auto& [kw, w] : cfg.at("sim").at("keywords").items()) {
        if (!w.is_number())
            throw ConfigError("sim.keywords." + kw + " must be a number");
        e.sim.keyword_weights[kw] = w.get<double>();
    }
    try {
        e.sim.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }

    e.data.path = get_as<std::string>(cfg, "data", "path");
    e.data.format = get_as<std::string>(cfg, "data", "format");
    e.data.labels.positive = get_as<std::string>(cfg, "data", "positive_label");
    e.data.labels.negative = get_as<std::string>(cfg, "data", "negative_label");
    e.data.n_dev = get_as<std::size_t>(cfg, "data", "n_dev");
    e.data.n_test = get_as<std::size_t>(cfg, "data", "n_test");
    e.data.few_shot = get_as<std::size_t>(cfg, "data", "few_shot");
    e.data.minibatch_source = get_as<std::string>(cfg, "data", "minibatch_source");
    e.data.synthetic_size = get_as<std::size_t>(cfg, "data", "synthetic_size");
    if (e.data.minibatch_source != "train" && e.data.minibatch_source != "dev")
        throw ConfigError("data.minibatch_source must be 'train' or 'dev'");

    e.initial_prompt = get_as<std::string>(cfg, "task", "initial_prompt");
    e.template_dir = get_as<std::string>(cfg, "task", "template_dir");
    e.run_name = get_as<std::string>(cfg, "output", "name");

    RunConfig& r = e.run;
    r.seed = e.seed;
    try {
        r.mode = parse_mode(get_as<std::string>(cfg, nullptr, "mode"));
        r.selection.algorithm = parse_algorithm(get_as<std::string>(cfg, "selection", "algorithm"));
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    r.beam_width = get_as<std::size_t>(cfg, "search", "beam_width");
    r.depth = get_as<std::size_t>(cfg, "search", "depth");
    r.include_parents = get_as<bool>(cfg, "search", "include_parents");
    r.patience = get_as<std::size_t>(cfg, "search", "patience");

    r.expansion.minibatch_size = get_as<std::size_t>(cfg, "expansion", "minibatch_size");
    r.expansion.error_group_size = get_as<std::size_t>(cfg, "expansion", "error_group_size");
    r.expansion.gradients_per_group = get_as<int>(cfg, "expansion", "gradients_per_group");
    r.expansion.edits_per_gradient = get_as<int>(cfg, "expansion", "edits_per_gradient");
    r.expansion.paraphrases_per_edit = get_as<int>(cfg, "expansion", "paraphrases_per_edit");
    r.expansion.max_successors = get_as<std::size_t>(cfg, "expansion", "max_successors");
    r.expansion.error_groups_used = get_as<std::size_t>(cfg, "expansion", "error_groups_used");

    r.selection.beam_width = r.beam_width;
    r.selection.exploration = get_as<double>(cfg, "selection", "exploration");
    r.selection.rounds = get_as<std::size_t>(cfg, "selection", "rounds");
    r.selection.sample_size = get_as<std::size_t>(cfg, "selection", "sample_size");
    r.selection.budget = get_as<std::size_t>(cfg, "selection", "budget");
    const auto update = get_as<std::string>(cfg, "selection", "ucb_update");
    if (update == "mean")
        r.selection.ucb_update = UcbUpdate::mean;
    else if (update == "increment")
        r.selection.ucb_update = UcbUpdate::increment;
    else
        throw ConfigError("selection.ucb_update must be 'mean' or 'increment'");
    const auto bonus = get_as<std::string>(cfg, "selection", "ucbe_bonus");
    if (bonus == "scaled")
        r.selection.ucbe_bonus = UcbeBonus::scaled;
    else if (bonus == "canonical")
        r.selection.ucbe_bonus = UcbeBonus::canonical;
    else
        throw ConfigError("selection.ucbe_bonus must be 'scaled' or 'canonical'");
    const auto horizon = get_as<std::string>(cfg, "selection", "sr_horizon");
    if (horizon == "arms")
        r.selection.sr_horizon = SrHorizon::arms;
    else if (horizon == "rounds")
        r.selection.sr_horizon = SrHorizon::rounds;
    else
        throw ConfigError("selection.sr_horizon must be 'arms' or 'rounds'");

    try {
        r.validate();
    } catch (const std::invalid_argument& ex) {
        throw ConfigError(ex.what());
    }
    return e;
}

} // namespace protegi
