#pragma once

#include "protegi/data_model.hpp"
#include "protegi/llm_backend.hpp"
#include "protegi/rng.hpp"

#include <json.hpp>

#include <span>

namespace protegi {

class SelectError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class SelectAlgorithm { uniform, ucb, ucb_e, sr, sh };
std::string_view algorithm_name(SelectAlgorithm a) noexcept;
SelectAlgorithm parse_algorithm(std::string_view name);

/// How UCB-type selectors update their estimate after a pull.
enum class UcbUpdate {
    mean,      ///< Q = reward_sum / N
    increment, ///< Q += r / N, with r the pull's mean reward and N after the pull
};

/// UCB-E exploration bonus.
enum class UcbeBonus {
    scaled,    ///< c * sqrt(c / N)
    canonical, ///< sqrt(c / N)
};

/// Which horizon the successive-rejects schedule uses.
enum class SrHorizon {
    arms,   ///< number of candidates
    rounds, ///< configured round count T
};

struct SelectionConfig {
    SelectAlgorithm algorithm = SelectAlgorithm::ucb;
    std::size_t beam_width = 4;
    double exploration = 2.0;
    /// UCB rounds; 0 means 10 per arm.
    std::size_t rounds = 0;
    /// Examples per pull round.
    std::size_t sample_size = 5;
    /// Example evaluations allowed; 0 means rounds * sample_size.
    std::size_t budget = 0;
    UcbUpdate ucb_update = UcbUpdate::mean;
    UcbeBonus ucbe_bonus = UcbeBonus::scaled;
    SrHorizon sr_horizon = SrHorizon::arms;

    std::size_t resolved_rounds(std::size_t n_arms) const noexcept;
    std::size_t resolved_budget(std::size_t n_arms) const noexcept;
};

/// Per-arm running statistics plus the global evaluation budget. Recording
/// past the budget throws SelectError.
class ScoreLedger {
public:
    struct Arm {
        std::string id;
        std::size_t pulls = 0;
        double reward_sum = 0.0;
        double estimate = 0.0;
    };

    ScoreLedger(std::vector<std::string> ids, std::size_t budget);

    /// One pull of `arm` on `n` examples of which `correct` were right.
    void record(std::size_t arm, std::size_t n, std::size_t correct, UcbUpdate update = UcbUpdate::mean);

    const std::vector<Arm>& arms() const noexcept { return arms_; }
    const Arm& arm(std::size_t i) const { return arms_[i]; }
    std::size_t spent() const noexcept { return spent_; }
    std::size_t budget() const noexcept { return budget_; }
    std::size_t remaining() const noexcept { return budget_ - spent_; }

    /// Arm indices ordered by estimate (highest first), ties by id; arms
    /// never pulled come last.
    std::vector<std::size_t> ranked() const;
    std::vector<std::size_t> ranked(std::span<const std::size_t> subset) const;

    nlohmann::json to_json() const;

private:
    std::vector<Arm> arms_;
    std::size_t budget_;
    std::size_t spent_ = 0;
};

/// Order of arms by (score desc, id asc).
std::vector<std::size_t> rank_by_score(std::span<const double> scores, std::span<const std::string> ids);

/// Evaluates arms on examples from a fixed pool.
class ArmScorer {
public:
    virtual ~ArmScorer() = default;
    virtual std::size_t num_arms() const = 0;
    virtual std::size_t num_examples() const = 0;
    virtual std::string arm_id(std::size_t arm) const = 0;
    /// Number of correct predictions of `arm` on the given example indices.
    virtual std::size_t pull(std::size_t arm, std::span<const std::size_t> examples) = 0;
};

/// Arms are prompt candidates; pulls are classification calls.
class PromptScorer final : public ArmScorer {
public:
    PromptScorer(Backend& backend, std::span<const PromptCandidate> candidates, const FewShotSet& few_shot,
                 const Dataset& pool);
    PromptScorer(Backend&, std::span<const PromptCandidate>, FewShotSet&&, const Dataset&) = delete;

    std::size_t num_arms() const override { return candidates_.size(); }
    std::size_t num_examples() const override { return pool_.size(); }
    std::string arm_id(std::size_t arm) const override { return candidates_[arm].id(); }
    std::size_t pull(std::size_t arm, std::span<const std::size_t> examples) override;

private:
    Backend& backend_;
    std::span<const PromptCandidate> candidates_;
    const FewShotSet& few_shot_;
    const Dataset& pool_;
};

struct SelectionResult {
    /// Chosen arm indices, best first.
    std::vector<std::size_t> selected;
    ScoreLedger ledger;
    SelectAlgorithm algorithm;
};

/// Successive-rejects phase lengths n_1..n_{n-1} for `horizon` (the number
/// of arms unless the raw-T variant is used). Throws SelectError if
/// budget <= horizon or n_arms < 2.
std::vector<std::size_t> sr_schedule(std::size_t n_arms, std::size_t budget);
std::vector<std::size_t> sr_schedule(std::size_t n_arms, std::size_t budget, std::size_t horizon);

/// Per-arm allocation of the first successive-halving round.
std::size_t sh_allocation(std::size_t survivors, std::size_t n_arms, std::size_t budget);

SelectionResult select_uniform(ArmScorer& scorer, std::size_t b, std::size_t budget, std::uint64_t seed);
SelectionResult select_ucb(ArmScorer& scorer, const SelectionConfig& cfg, std::uint64_t seed);
SelectionResult select_sr(ArmScorer& scorer, std::size_t b, std::size_t budget, std::uint64_t seed,
                          SrHorizon horizon = SrHorizon::arms, std::size_t rounds = 0);
SelectionResult select_sh(ArmScorer& scorer, std::size_t b, std::size_t budget, std::uint64_t seed);

/// Dispatches on cfg.algorithm. With no more arms than the beam width every
/// arm is returned unevaluated, ordered by id.
SelectionResult select(ArmScorer& scorer, const SelectionConfig& cfg, std::uint64_t seed);

/// Indices for one pull: without replacement inside a pull, refilled from
/// the full pool when the pull is larger than the pool.
std::vector<std::size_t> draw_sample(Rng& rng, std::size_t pool, std::size_t count);

} // namespace protegi
