#include "protegi/selection.hpp"
#include "protegi/rng.hpp"
#include "protegi/task_eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace protegi {

std::string_view algorithm_name(SelectAlgorithm a) noexcept
{
    switch (a) {
    case SelectAlgorithm::uniform:
        return "uniform";
    case SelectAlgorithm::ucb:
        return "ucb";
    case SelectAlgorithm::ucb_e:
        return "ucb-e";
    case SelectAlgorithm::sr:
        return "sr";
    case SelectAlgorithm::sh:
        return "sh";
    }
    return "unknown";
}

SelectAlgorithm parse_algorithm(std::string_view name)
{
    for (auto a : {SelectAlgorithm::uniform, SelectAlgorithm::ucb, SelectAlgorithm::ucb_e, SelectAlgorithm::sr,
                   SelectAlgorithm::sh}) {
        if (algorithm_name(a) == name)
            return a;
    }
    throw std::invalid_argument("unknown selection algorithm '" + std::string(name) + "'");
}

std::size_t SelectionConfig::resolved_rounds(std::size_t n_arms) const noexcept
{
    if (rounds > 0)
        return budget > 0 ? std::min(rounds, budget / std::max<std::size_t>(sample_size, 1)) : rounds;
    if (budget > 0)
        return budget / std::max<std::size_t>(sample_size, 1);
    return 10 * n_arms;
}

std::size_t SelectionConfig::resolved_budget(std::size_t n_arms) const noexcept
{
    if (budget > 0)
        return budget;
    return (rounds > 0 ? rounds : 10 * n_arms) * sample_size;
}

ScoreLedger::ScoreLedger(std::vector<std::string> ids, std::size_t budget) : budget_(budget)
{
    arms_.reserve(ids.size());
    for (auto& id : ids)
        arms_.push_back(Arm{std::move(id)});
}

void ScoreLedger::record(std::size_t arm, std::size_t n, std::size_t correct, UcbUpdate update)
{
    if (n == 0)
        return;
    if (n > remaining())
        throw SelectError("evaluation budget exceeded: " + std::to_string(spent_ + n) + " > " +
                          std::to_string(budget_));
    auto& a = arms_.at(arm);
    spent_ += n;
    a.pulls += n;
    a.reward_sum += static_cast<double>(correct);
    if (update == UcbUpdate::mean)
        a.estimate = a.reward_sum / static_cast<double>(a.pulls);
    else
        a.estimate += (static_cast<double>(correct) / static_cast<double>(n)) / static_cast<double>(a.pulls);
}

std::vector<std::size_t> ScoreLedger::ranked() const
{
    std::vector<std::size_t> all(arms_.size());
    std::iota(all.begin(), all.end(), std::size_t{0});
    return ranked(all);
}

std::vector<std::size_t> ScoreLedger::ranked(std::span<const std::size_t> subset) const
{
    std::vector<std::size_t> order(subset.begin(), subset.end());
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        const auto& a = arms_[x];
        const auto& b = arms_[y];
        if ((a.pulls > 0) != (b.pulls > 0))
            return a.pulls > 0;
        if (a.estimate != b.estimate)
            return a.estimate > b.estimate;
        return a.id < b.id;
    });
    return order;
}

nlohmann::json ScoreLedger::to_json() const
{
    nlohmann::json arms = nlohmann::json::array();
    for (const auto& a : arms_)
        arms.push_back({{"id", a.id}, {"pulls", a.pulls}, {"reward_sum", a.reward_sum}, {"estimate", a.estimate}});
    return {{"budget", budget_}, {"spent", spent_}, {"arms", std::move(arms)}};
}

std::vector<std::size_t> rank_by_score(std::span<const double> scores, std::span<const std::string> ids)
{
    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) {
        if (scores[x] != scores[y])
            return scores[x] > scores[y];
        return ids[x] < ids[y];
    });
    return order;
}

PromptScorer::PromptScorer(Backend& backend, std::span<const PromptCandidate> candidates, const FewShotSet& few_shot,
                           const Dataset& pool)
    : backend_(backend), candidates_(candidates), few_shot_(few_shot), pool_(pool)
{
}

std::size_t PromptScorer::pull(std::size_t arm, std::span<const std::size_t> examples)
{
    std::vector<LabeledExample> batch;
    batch.reserve(examples.size());
    for (auto i : examples)
        batch.push_back(pool_[i]);
    const auto records = evaluate(backend_, candidates_[arm], few_shot_, batch);
    return static_cast<std::size_t>(std::count_if(records.begin(), records.end(), [](const auto& r) { return r.correct(); }));
}

std::vector<std::size_t> draw_sample(Rng& rng, std::size_t pool, std::size_t count)
{
    if (pool == 0)
        throw SelectError("no examples to evaluate on");
    std::vector<std::size_t> out;
    out.reserve(count);
    while (out.size() < count) {
        auto chunk = rng.sample_without_replacement(pool, std::min(pool, count - out.size()));
        out.insert(out.end(), chunk.begin(), chunk.end());
    }
    return out;
}

namespace {

ScoreLedger make_ledger(const ArmScorer& scorer, std::size_t budget)
{
    std::vector<std::string> ids;
    ids.reserve(scorer.num_arms());
    for (std::size_t i = 0; i < scorer.num_arms(); ++i)
        ids.push_back(scorer.arm_id(i));
    return ScoreLedger(std::move(ids), budget);
}

void pull_and_record(ArmScorer& scorer, ScoreLedger& ledger, std::size_t arm, std::span<const std::size_t> sample,
                     UcbUpdate update = UcbUpdate::mean)
{
    if (sample.size() > ledger.remaining())
        throw SelectError("evaluation budget exhausted mid-phase");
    ledger.record(arm, sample.size(), scorer.pull(arm, sample), update);
}

std::vector<std::size_t> top(const ScoreLedger& ledger, std::size_t b)
{
    auto order = ledger.ranked();
    order.resize(std::min(b, order.size()));
    return order;
}

long double harmonic_tail(std::size_t horizon)
{
    long double s = 0.5L;
    for (std::size_t i = 2; i <= horizon; ++i)
        s += 1.0L / static_cast<long double>(i);
    return s;
}

} // namespace

std::vector<std::size_t> sr_schedule(std::size_t n_arms, std::size_t budget)
{
    return sr_schedule(n_arms, budget, n_arms);
}

std::vector<std::size_t> sr_schedule(std::size_t n_arms, std::size_t budget, std::size_t horizon)
{
    if (n_arms < 2)
        throw SelectError("successive rejects needs at least 2 arms");
    if (horizon + 1 < n_arms)
        throw SelectError("successive rejects horizon shorter than the phase count");
    if (budget <= horizon)
        throw SelectError("successive rejects needs a budget above " + std::to_string(horizon) + ", got " +
                          std::to_string(budget));
    const long double logbar = harmonic_tail(horizon);
    std::vector<std::size_t> schedule;
    schedule.reserve(n_arms - 1);
    for (std::size_t t = 1; t < n_arms; ++t) {
        const long double v = static_cast<long double>(budget - horizon) /
                              (logbar * static_cast<long double>(horizon + 1 - t));
        // the rational value is at least ~1e-10 away from any integer it is
        // not equal to, while long double error here stays below 1e-15
        schedule.push_back(static_cast<std::size_t>(std::ceil(v - 1e-12L)));
    }
    return schedule;
}

std::size_t sh_allocation(std::size_t survivors, std::size_t n_arms, std::size_t budget)
{
    const auto rounds = static_cast<std::size_t>(std::ceil(std::log2(static_cast<double>(std::max<std::size_t>(n_arms, 2)))));
    return budget / (survivors * rounds);
}

SelectionResult select_uniform(ArmScorer& scorer, std::size_t b, std::size_t budget, std::uint64_t seed)
{
    const std::size_t n = scorer.num_arms();
    if (n == 0 || budget < n)
        throw SelectError("uniform selection needs a budget of at least one evaluation per candidate");
    auto ledger = make_ledger(scorer, budget);
    const std::size_t per_arm = budget / n;
    Rng rng(seed);
    for (std::size_t arm = 0; arm < n; ++arm) {
        auto sample = draw_sample(rng, scorer.num_examples(), per_arm);
        pull_and_record(scorer, ledger, arm, sample);
    }
    auto selected = top(ledger, b);
    return {std::move(selected), std::move(ledger), SelectAlgorithm::uniform};
}

SelectionResult select_ucb(ArmScorer& scorer, const SelectionConfig& cfg, std::uint64_t seed)
{
    const std::size_t n = scorer.num_arms();
    const std::size_t rounds = cfg.resolved_rounds(n);
    const std::size_t budget = cfg.resolved_budget(n);
    if (n == 0 || rounds < n)
        throw SelectError("UCB selection needs at least one round per candidate (" + std::to_string(rounds) +
                          " rounds for " + std::to_string(n) + " candidates)");
    if (cfg.sample_size == 0)
        throw SelectError("UCB selection needs sample_size >= 1");
    const bool explore_e = cfg.algorithm == SelectAlgorithm::ucb_e;
    const double c = cfg.exploration;

    auto ledger = make_ledger(scorer, budget);
    Rng rng(seed);
    for (std::size_t t = 1; t <= rounds; ++t) {
        std::size_t choice = 0;
        if (t <= n) {
            choice = t - 1;
        } else {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < n; ++i) {
                const auto& a = ledger.arm(i);
                const double pulls = static_cast<double>(a.pulls);
                double bonus;
                if (!explore_e)
                    bonus = c * std::sqrt(std::log(static_cast<double>(t)) / pulls);
                else if (cfg.ucbe_bonus == UcbeBonus::scaled)
                    bonus = c * std::sqrt(c / pulls);
                else
                    bonus = std::sqrt(c / pulls);
                const double index = a.estimate + bonus;
                if (index > best || (index == best && a.id < ledger.arm(choice).id)) {
                    best = index;
                    choice = i;
                }
            }
        }
        auto sample = draw_sample(rng, scorer.num_examples(), cfg.sample_size);
        pull_and_record(scorer, ledger, choice, sample, cfg.ucb_update);
    }
    auto selected = top(ledger, cfg.beam_width);
    return {std::move(selected), std::move(ledger), cfg.algorithm};
}

SelectionResult select_sr(ArmScorer& scorer, std::size_t b, std::size_t budget, std::uint64_t seed,
                          SrHorizon horizon, std::size_t rounds)
{
    const std::size_t n = scorer.num_arms();
    if (n <= b)
        throw SelectError("successive rejects needs more candidates than the beam width");
    const std::size_t t_horizon = horizon == SrHorizon::arms ? n : std::max(rounds, n - 1);
    const auto schedule = sr_schedule(n, budget, t_horizon);

    auto ledger = make_ledger(scorer, budget);
    std::vector<std::size_t> survivors(n);
    std::iota(survivors.begin(), survivors.end(), std::size_t{0});
    Rng rng(seed);
    std::size_t done = 0;
    // n_k is the cumulative per-arm count after phase k
    for (std::size_t k = 0; survivors.size() > b; ++k) {
        const std::size_t extra = schedule[k] - std::min(schedule[k], done);
        auto sample = draw_sample(rng, scorer.num_examples(), extra);
        for (auto arm : survivors)
            pull_and_record(scorer, ledger, arm, sample);
        done = std::max(done, schedule[k]);
        auto order = ledger.ranked(survivors);
        order.pop_back();
        survivors = std::move(order);
    }
    auto selected = ledger.ranked(survivors);
    return {std::move(selected), std::move(ledger), SelectAlgorithm::sr};
}

SelectionResult select_sh(ArmScorer& scorer, std::size_t b, std::size_t budget, std::uint64_t seed)
{
    const std::size_t n = scorer.num_arms();
    if (n <= b)
        throw SelectError("successive halving needs more candidates than the beam width");
    auto ledger = make_ledger(scorer, budget);
    std::vector<std::size_t> survivors(n);
    std::iota(survivors.begin(), survivors.end(), std::size_t{0});
    Rng rng(seed);
    while (survivors.size() > b) {
        const std::size_t per_arm = sh_allocation(survivors.size(), n, budget);
        if (per_arm == 0)
            throw SelectError("successive halving budget " + std::to_string(budget) + " leaves no evaluations for " +
                              std::to_string(survivors.size()) + " candidates");
        auto sample = draw_sample(rng, scorer.num_examples(), per_arm);
        for (auto arm : survivors)
            pull_and_record(scorer, ledger, arm, sample);
        auto order = ledger.ranked(survivors);
        order.resize(std::max(b, (survivors.size() + 1) / 2));
        survivors = std::move(order);
    }
    auto selected = ledger.ranked(survivors);
    return {std::move(selected), std::move(ledger), SelectAlgorithm::sh};
}

SelectionResult select(ArmScorer& scorer, const SelectionConfig& cfg, std::uint64_t seed)
{
    const std::size_t n = scorer.num_arms();
    const std::size_t budget = cfg.resolved_budget(n);
    if (cfg.beam_width == 0)
        throw SelectError("beam width must be >= 1");
    if (n <= cfg.beam_width) {
        auto ledger = make_ledger(scorer, budget);
        std::vector<std::size_t> all(n);
        std::iota(all.begin(), all.end(), std::size_t{0});
        std::sort(all.begin(), all.end(), [&](auto x, auto y) { return ledger.arm(x).id < ledger.arm(y).id; });
        return {std::move(all), std::move(ledger), cfg.algorithm};
    }
    switch (cfg.algorithm) {
    case SelectAlgorithm::uniform:
        return select_uniform(scorer, cfg.beam_width, budget, seed);
    case SelectAlgorithm::ucb:
    case SelectAlgorithm::ucb_e:
        return select_ucb(scorer, cfg, seed);
    case SelectAlgorithm::sr:
        return select_sr(scorer, cfg.beam_width, budget, seed, cfg.sr_horizon, cfg.resolved_rounds(n));
    case SelectAlgorithm::sh:
        return select_sh(scorer, cfg.beam_width, budget, seed);
    }
    throw SelectError("unknown selection algorithm");
}

} // namespace protegi
