#include "protegi/bandit_bench.hpp"
#include "protegi/rng.hpp"

#include <omp.h>

#include <cstdio>

namespace protegi {

namespace {

std::string arm_token(std::size_t k) { return "[arm-" + std::to_string(k) + "]"; }

struct Cell {
    SelectAlgorithm algorithm;
    std::size_t pulls;
};

std::vector<Cell> cells_of(const BanditBenchConfig& cfg)
{
    std::vector<Cell> cells;
    for (auto pulls : cfg.pulls_per_prompt)
        for (auto alg : cfg.algorithms)
            cells.push_back({alg, pulls});
    return cells;
}

Dataset bench_pool(const BanditBenchConfig& cfg)
{
    return make_synthetic_dataset(cfg.pool_size, derive_seed(cfg.seed, {0}), "bandit-pool");
}

BanditCell blank_cell(const BanditBenchConfig& cfg, const Cell& c)
{
    BanditCell out;
    out.algorithm = c.algorithm;
    out.pulls_per_prompt = c.pulls;
    out.budget = c.pulls * cfg.arm_accuracies.size();
    out.trials = cfg.trials;
    return out;
}

} // namespace

std::vector<PromptCandidate> make_sim_arms(const std::vector<double>& accuracies, std::uint64_t trial,
                                           SimProfile& profile_out)
{
    profile_out = SimProfile{};
    profile_out.keyword_weights.clear();
    profile_out.base_accuracy = 0.0;
    profile_out.cap = 1.0;
    std::vector<PromptCandidate> arms;
    for (std::size_t k = 0; k < accuracies.size(); ++k) {
        profile_out.keyword_weights[arm_token(k)] = accuracies[k];
        arms.push_back(make_initial_prompt("# Task\nDecide whether the text is positive. " + arm_token(k) +
                                           " trial " + std::to_string(trial) +
                                           "\n\n# Output format\nAnswer Yes or No as labels\n\n"
                                           "# Prediction\nText: { text }\nLabel:"));
    }
    return arms;
}

std::pair<bool, std::size_t> run_bandit_trial(const BanditBenchConfig& cfg, const Dataset& pool,
                                              SelectAlgorithm algorithm, std::size_t pulls_per_prompt,
                                              std::uint64_t trial)
{
    SimProfile profile;
    const auto arms = make_sim_arms(cfg.arm_accuracies, trial, profile);
    SimBackend backend(profile, derive_seed(cfg.seed, {1, trial}), {&pool});
    const FewShotSet none;
    PromptScorer scorer(backend, arms, none, pool);

    SelectionConfig sc;
    sc.algorithm = algorithm;
    sc.beam_width = cfg.beam_width;
    sc.exploration = cfg.exploration;
    sc.sample_size = cfg.sample_size;
    sc.budget = pulls_per_prompt * arms.size();
    const auto result = select(scorer, sc, derive_seed(cfg.seed, {2, trial}));

    std::size_t best = 0;
    for (std::size_t k = 1; k < cfg.arm_accuracies.size(); ++k)
        if (cfg.arm_accuracies[k] > cfg.arm_accuracies[best])
            best = k;
    const bool hit = !result.selected.empty() && result.selected.front() == best;
    return {hit, result.ledger.spent()};
}

std::vector<BanditCell> run_bandit_bench(const BanditBenchConfig& cfg)
{
    const Dataset pool = bench_pool(cfg);
    const auto cells = cells_of(cfg);
    std::vector<BanditCell> out;
    for (const auto& c : cells) {
        BanditCell cell = blank_cell(cfg, c);
        std::vector<char> hits(cfg.trials, 0);
        std::vector<std::size_t> spent(cfg.trials, 0);
        std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 8)
        for (std::ptrdiff_t t = 0; t < static_cast<std::ptrdiff_t>(cfg.trials); ++t) {
            try {
                auto [hit, used] = run_bandit_trial(cfg, pool, c.algorithm, c.pulls, static_cast<std::uint64_t>(t));
                hits[t] = hit;
                spent[t] = used;
            } catch (...) {
#pragma omp critical(protegi_bandit_error)
                if (!failure)
                    failure = std::current_exception();
            }
        }
        if (failure)
            std::rethrow_exception(failure);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            cell.identified += hits[t] ? 1 : 0;
            cell.max_spent = std::max(cell.max_spent, spent[t]);
        }
        out.push_back(cell);
    }
    return out;
}

std::vector<BanditCell> run_bandit_bench_serial(const BanditBenchConfig& cfg)
{
    const Dataset pool = bench_pool(cfg);
    std::vector<BanditCell> out;
    for (const auto& c : cells_of(cfg)) {
        BanditCell cell = blank_cell(cfg, c);
        for (std::size_t t = 0; t < cfg.trials; ++t) {
            auto [hit, used] = run_bandit_trial(cfg, pool, c.algorithm, c.pulls, t);
            cell.identified += hit ? 1 : 0;
            cell.max_spent = std::max(cell.max_spent, used);
        }
        out.push_back(cell);
    }
    return out;
}

std::string render_bandit_table(const std::vector<BanditCell>& cells)
{
    std::string out = "algorithm  pulls/prompt  budget  identified  rate    max_spent\n";
    char line[128];
    for (const auto& c : cells) {
        std::snprintf(line, sizeof line, "%-9s  %12zu  %6zu  %6zu/%-3zu  %.3f  %9zu\n",
                      std::string(algorithm_name(c.algorithm)).c_str(), c.pulls_per_prompt, c.budget, c.identified,
                      c.trials, c.rate(), c.max_spent);
        out += line;
    }
    return out;
}

nlohmann::json bandit_cells_to_json(const std::vector<BanditCell>& cells)
{
    auto arr = nlohmann::json::array();
    for (const auto& c : cells)
        arr.push_back({{"algorithm", algorithm_name(c.algorithm)},
                       {"pulls_per_prompt", c.pulls_per_prompt},
                       {"budget", c.budget},
                       {"trials", c.trials},
                       {"identified", c.identified},
                       {"rate", c.rate()},
                       {"max_spent", c.max_spent}});
    return arr;
}

} // namespace protegi
