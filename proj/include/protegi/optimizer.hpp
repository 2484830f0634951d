#pragma once

#include "protegi/expansion.hpp"
#include "protegi/selection.hpp"
#include "protegi/sim_backend.hpp"

#include <chrono>
#include <optional>

namespace protegi {

enum class SearchMode { protegi, flat, greedy, mc };
std::string_view mode_name(SearchMode m) noexcept;
SearchMode parse_mode(std::string_view name);

struct RunConfig {
    SearchMode mode = SearchMode::protegi;
    std::size_t beam_width = 4;
    std::size_t depth = 6;
    ExpansionConfig expansion;
    SelectionConfig selection;
    std::uint64_t seed = 0;
    /// Keep the current beam in the selection pool.
    bool include_parents = true;
    /// Stop after this many steps without a better best dev F1; 0 disables.
    std::size_t patience = 0;

    /// Throws std::invalid_argument on an unusable configuration.
    void validate() const;
};

/// Datasets a run reads; all must outlive the run.
struct RunData {
    const Dataset& minibatch_source;
    const Dataset& selection_pool;
    const Dataset& dev;
    const Dataset& test;
    const FewShotSet& few_shot;
};

struct RunContext {
    MeteredBackend& backend;
    const MetaPromptSet& templates;
    /// Set when the backend is simulated; enables latent-accuracy reporting.
    const SimProfile* sim_profile = nullptr;
};

struct BeamEntry {
    PromptCandidate candidate;
    double dev_f1 = 0.0;
    double dev_accuracy = 0.0;
    std::optional<double> sim_accuracy;
};

struct StepRecord {
    std::size_t step = 0;
    std::vector<BeamEntry> beam;
    /// Candidates in the selection pool (parents included when kept).
    std::size_t pool_size = 0;
    /// Successors produced by expansion in this step.
    std::size_t expanded = 0;
    std::optional<nlohmann::json> ledger;

    double best_dev_f1() const noexcept;
};

struct RunReport {
    SearchMode mode = SearchMode::protegi;
    std::uint64_t seed = 0;
    std::string status = "ok";
    std::vector<StepRecord> steps;
    BeamEntry final_best;
    double final_test_f1 = 0.0;
    std::size_t candidates_expanded = 0;
    CallCounts calls;
    /// Every candidate generated, in generation order.
    std::vector<PromptCandidate> lineage;
    std::chrono::duration<double> wall_time{0};
    nlohmann::json config = nlohmann::json::object();

    bool ok() const noexcept { return status == "ok"; }
};

/// Candidate count flat search must reach to match a beam search of the
/// same configuration.
std::size_t parity_candidate_count(const RunConfig& cfg) noexcept;

RunReport optimize(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg);
RunReport flat_search(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg);
RunReport greedy_search(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg);
RunReport mc_baseline(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg);

/// Dispatches on cfg.mode.
RunReport run_search(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg);

/// Repeated expansions of `parent` until `target` distinct successors exist
/// (or progress stalls), then subsampled to `target`.
ExpansionResult expand_to(const ExpansionContext& ctx, const PromptCandidate& parent, const Dataset& train,
                          const ExpansionConfig& cfg, std::size_t target, std::uint64_t seed);

} // namespace protegi
