#pragma once

#include "protegi/selection.hpp"
#include "protegi/sim_backend.hpp"

namespace protegi {

/// Best-arm identification benchmark over simulated prompt arms.
struct BanditBenchConfig {
    std::vector<double> arm_accuracies{0.9, 0.7, 0.5, 0.3};
    std::vector<std::size_t> pulls_per_prompt{25, 50};
    std::vector<SelectAlgorithm> algorithms{SelectAlgorithm::uniform, SelectAlgorithm::ucb, SelectAlgorithm::ucb_e,
                                            SelectAlgorithm::sr, SelectAlgorithm::sh};
    std::size_t trials = 200;
    std::size_t beam_width = 1;
    std::size_t sample_size = 5;
    double exploration = 2.0;
    /// Examples the arms are scored on.
    std::size_t pool_size = 1000;
    std::uint64_t seed = 0;
};

struct BanditCell {
    SelectAlgorithm algorithm;
    std::size_t pulls_per_prompt = 0;
    /// Evaluation budget B handed to the selector.
    std::size_t budget = 0;
    std::size_t trials = 0;
    std::size_t identified = 0;
    /// Largest number of evaluations any trial spent.
    std::size_t max_spent = 0;

    double rate() const noexcept { return trials ? static_cast<double>(identified) / static_cast<double>(trials) : 0.0; }
};

/// One simulated arm per accuracy; trial `t` re-labels the arms so their
/// prompts (and hence per-example outcomes) differ between trials.
std::vector<PromptCandidate> make_sim_arms(const std::vector<double>& accuracies, std::uint64_t trial,
                                           SimProfile& profile_out);

/// One trial: returns (identified, spent).
std::pair<bool, std::size_t> run_bandit_trial(const BanditBenchConfig& cfg, const Dataset& pool,
                                              SelectAlgorithm algorithm, std::size_t pulls_per_prompt,
                                              std::uint64_t trial);

/// Cells in (budget, algorithm) order; trials run in parallel with OpenMP.
std::vector<BanditCell> run_bandit_bench(const BanditBenchConfig& cfg);

/// Sequential reference for run_bandit_bench().
std::vector<BanditCell> run_bandit_bench_serial(const BanditBenchConfig& cfg);

std::string render_bandit_table(const std::vector<BanditCell>& cells);
nlohmann::json bandit_cells_to_json(const std::vector<BanditCell>& cells);

} // namespace protegi
