#include "protegi/optimizer.hpp"
#include "protegi/rng.hpp"

#include <algorithm>
#include <unordered_set>

namespace protegi {

std::string_view mode_name(SearchMode m) noexcept
{
    switch (m) {
    case SearchMode::protegi:
        return "protegi";
    case SearchMode::flat:
        return "flat";
    case SearchMode::greedy:
        return "greedy";
    case SearchMode::mc:
        return "mc";
    }
    return "unknown";
}

SearchMode parse_mode(std::string_view name)
{
    for (auto m : {SearchMode::protegi, SearchMode::flat, SearchMode::greedy, SearchMode::mc}) {
        if (mode_name(m) == name)
            return m;
    }
    throw std::invalid_argument("unknown search mode '" + std::string(name) + "'");
}

void RunConfig::validate() const
{
    if (beam_width < 1)
        throw std::invalid_argument("beam width must be >= 1");
    if (depth < 1)
        throw std::invalid_argument("search depth must be >= 1");
    if (expansion.max_successors < 1 || expansion.error_group_size < 1 || expansion.gradients_per_group < 1 ||
        expansion.edits_per_gradient < 1 || expansion.paraphrases_per_edit < 0 || expansion.minibatch_size < 1)
        throw std::invalid_argument("expansion parameters must be positive");
    if (selection.sample_size < 1)
        throw std::invalid_argument("selection sample size must be >= 1");
    if (!(selection.exploration >= 0.0))
        throw std::invalid_argument("exploration constant must be >= 0");
}

double StepRecord::best_dev_f1() const noexcept
{
    double best = 0.0;
    for (const auto& e : beam)
        best = std::max(best, e.dev_f1);
    return best;
}

std::size_t parity_candidate_count(const RunConfig& cfg) noexcept
{
    if (cfg.depth < 2)
        return cfg.expansion.max_successors;
    return cfg.expansion.max_successors * (1 + (cfg.depth - 2) * cfg.beam_width);
}

namespace {

/// Mutable state of one run, owned by the driver.
class Driver {
public:
    Driver(const RunContext& ctx, const RunData& data, const RunConfig& cfg)
        : ctx_(ctx), data_(data), cfg_(cfg), expansion_ctx_{ctx.backend, data.few_shot, ctx.templates},
          started_(std::chrono::steady_clock::now())
    {
        cfg_.validate();
        report_.mode = cfg.mode;
        report_.seed = cfg.seed;
    }

    BeamEntry score(const PromptCandidate& c)
    {
        const auto records = evaluate(ctx_.backend, c, data_.few_shot, data_.dev.examples());
        BeamEntry e{c, f1_score(records).value, accuracy(records), std::nullopt};
        if (ctx_.sim_profile)
            e.sim_accuracy = sim_accuracy(c, *ctx_.sim_profile);
        return e;
    }

    void record_step(std::size_t step, const std::vector<PromptCandidate>& beam, std::size_t pool_size,
                     std::size_t expanded, std::optional<nlohmann::json> ledger)
    {
        StepRecord rec;
        rec.step = step;
        rec.pool_size = pool_size;
        rec.expanded = expanded;
        rec.ledger = std::move(ledger);
        for (const auto& c : beam)
            rec.beam.push_back(score(c));
        report_.steps.push_back(std::move(rec));
    }

    void note_generated(const std::vector<PromptCandidate>& cands)
    {
        for (const auto& c : cands) {
            if (seen_.insert(c.id()).second)
                report_.lineage.push_back(c);
        }
        report_.candidates_expanded += cands.size();
    }

    /// Runs selection over `pool` and returns the chosen candidates.
    std::vector<PromptCandidate> select_from(const std::vector<PromptCandidate>& pool, std::size_t b,
                                             std::uint64_t seed, nlohmann::json& ledger_out)
    {
        SelectionConfig sel = cfg_.selection;
        sel.beam_width = b;
        PromptScorer scorer(ctx_.backend, pool, data_.few_shot, data_.selection_pool);
        auto result = select(scorer, sel, seed);
        ledger_out = result.ledger.to_json();
        ledger_out["algorithm"] = std::string(algorithm_name(result.algorithm));
        nlohmann::json chosen = nlohmann::json::array();
        std::vector<PromptCandidate> out;
        for (auto i : result.selected) {
            out.push_back(pool[i]);
            chosen.push_back(pool[i].id());
        }
        ledger_out["selected"] = std::move(chosen);
        return out;
    }

    bool stalled() const
    {
        if (cfg_.patience == 0 || report_.steps.size() <= cfg_.patience)
            return false;
        double before = 0.0;
        for (std::size_t i = 0; i + cfg_.patience < report_.steps.size(); ++i)
            before = std::max(before, report_.steps[i].best_dev_f1());
        double recent = 0.0;
        for (std::size_t i = report_.steps.size() - cfg_.patience; i < report_.steps.size(); ++i)
            recent = std::max(recent, report_.steps[i].best_dev_f1());
        return recent <= before;
    }

    RunReport finish()
    {
        if (!report_.steps.empty()) {
            const auto& last = report_.steps.back().beam;
            auto best = std::max_element(last.begin(), last.end(), [](const BeamEntry& a, const BeamEntry& b) {
                if (a.dev_f1 != b.dev_f1)
                    return a.dev_f1 < b.dev_f1;
                return a.candidate.id() > b.candidate.id();
            });
            if (best != last.end()) {
                report_.final_best = *best;
                try {
                    const auto records =
                        evaluate(ctx_.backend, best->candidate, data_.few_shot, data_.test.examples());
                    report_.final_test_f1 = f1_score(records).value;
                } catch (const BackendError& e) {
                    fail(e.what());
                }
            }
        }
        report_.calls = ctx_.backend.counts();
        report_.wall_time = std::chrono::steady_clock::now() - started_;
        return std::move(report_);
    }

    void fail(const std::string& why)
    {
        if (report_.ok())
            report_.status = "failed: " + why;
    }

    const RunContext& ctx_;
    const RunData& data_;
    RunConfig cfg_;
    ExpansionContext expansion_ctx_;
    RunReport report_;
    std::unordered_set<std::string> seen_;
    std::chrono::steady_clock::time_point started_;
};

template <typename Body>
RunReport guarded(Driver& driver, Body&& body)
{
    try {
        body();
    } catch (const BackendError& e) {
        driver.fail(std::string("backend: ") + e.what());
    } catch (const ExpandError& e) {
        driver.fail(std::string("expand: ") + e.what());
    } catch (const SelectError& e) {
        driver.fail(std::string("select: ") + e.what());
    }
    return driver.finish();
}

void dedup_into(std::vector<PromptCandidate>& pool, std::unordered_set<std::string>& ids,
                std::vector<PromptCandidate> more)
{
    for (auto& c : more) {
        if (ids.insert(c.id()).second)
            pool.push_back(std::move(c));
    }
}

/// Shared beam loop for the beam-search and monte-carlo modes.
template <typename ExpandFn>
RunReport beam_loop(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg,
                    ExpandFn&& expand_one)
{
    Driver d(ctx, data, cfg);
    d.note_generated({p0});
    return guarded(d, [&] {
        std::vector<PromptCandidate> beam{p0};
        d.record_step(0, beam, 1, 0, std::nullopt);
        for (std::size_t step = 1; step < cfg.depth; ++step) {
            std::vector<PromptCandidate> pool;
            std::unordered_set<std::string> ids;
            if (cfg.include_parents)
                dedup_into(pool, ids, beam);
            std::size_t expanded = 0;
            for (std::size_t j = 0; j < beam.size(); ++j) {
                auto res = expand_one(beam[j], derive_seed(cfg.seed, {10, step, j}));
                expanded += res.successors.size();
                d.note_generated(res.successors);
                dedup_into(pool, ids, std::move(res.successors));
            }
            nlohmann::json ledger;
            beam = d.select_from(pool, cfg.beam_width, derive_seed(cfg.seed, {11, step}), ledger);
            d.record_step(step, beam, pool.size(), expanded, std::move(ledger));
            if (d.stalled())
                break;
        }
    });
}

} // namespace

ExpansionResult expand_to(const ExpansionContext& ctx, const PromptCandidate& parent, const Dataset& train,
                          const ExpansionConfig& cfg, std::size_t target, std::uint64_t seed)
{
    ExpansionConfig wide = cfg;
    wide.max_successors = std::numeric_limits<std::size_t>::max();
    wide.error_groups_used = std::numeric_limits<std::size_t>::max();

    ExpansionResult total;
    std::vector<PromptCandidate> pool;
    std::unordered_set<std::string> ids;
    std::size_t stale = 0;
    for (std::uint64_t round = 0; pool.size() < target && stale < 3; ++round) {
        auto res = expand(ctx, parent, train, wide, derive_seed(seed, {round}));
        const std::size_t before = pool.size();
        total.minibatch_errors += res.minibatch_errors;
        total.raw_count += res.raw_count;
        std::move(res.gradients.begin(), res.gradients.end(), std::back_inserter(total.gradients));
        dedup_into(pool, ids, std::move(res.successors));
        stale = pool.size() == before ? stale + 1 : 0;
    }
    total.successors = canonicalize_successors(parent, std::move(pool), target, derive_seed(seed, {~0ULL}));
    return total;
}

RunReport optimize(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg)
{
    const ExpansionContext ectx{ctx.backend, data.few_shot, ctx.templates};
    return beam_loop(ctx, p0, data, cfg, [&](const PromptCandidate& parent, std::uint64_t seed) {
        return expand(ectx, parent, data.minibatch_source, cfg.expansion, seed);
    });
}

RunReport mc_baseline(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg)
{
    const ExpansionContext ectx{ctx.backend, data.few_shot, ctx.templates};
    return beam_loop(ctx, p0, data, cfg, [&](const PromptCandidate& parent, std::uint64_t seed) {
        return expand_paraphrase_only(ectx, parent, cfg.expansion, seed);
    });
}

RunReport flat_search(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg)
{
    Driver d(ctx, data, cfg);
    d.note_generated({p0});
    return guarded(d, [&] {
        d.record_step(0, {p0}, 1, 0, std::nullopt);
        if (cfg.depth < 2)
            return;
        const ExpansionContext ectx{ctx.backend, data.few_shot, ctx.templates};
        auto res = expand_to(ectx, p0, data.minibatch_source, cfg.expansion, parity_candidate_count(cfg),
                             derive_seed(cfg.seed, {10, 1, 0}));
        d.note_generated(res.successors);
        std::vector<PromptCandidate> pool;
        std::unordered_set<std::string> ids;
        if (cfg.include_parents)
            dedup_into(pool, ids, {p0});
        const std::size_t expanded = res.successors.size();
        dedup_into(pool, ids, std::move(res.successors));
        nlohmann::json ledger;
        auto beam = d.select_from(pool, cfg.beam_width, derive_seed(cfg.seed, {11, 1}), ledger);
        d.record_step(1, beam, pool.size(), expanded, std::move(ledger));
    });
}

RunReport greedy_search(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg)
{
    Driver d(ctx, data, cfg);
    d.note_generated({p0});
    return guarded(d, [&] {
        const ExpansionContext ectx{ctx.backend, data.few_shot, ctx.templates};
        const std::size_t per_step = cfg.beam_width * cfg.expansion.max_successors;
        PromptCandidate current = p0;
        d.record_step(0, {current}, 1, 0, std::nullopt);
        for (std::size_t step = 1; step < cfg.depth; ++step) {
            auto res = expand_to(ectx, current, data.minibatch_source, cfg.expansion, per_step,
                                 derive_seed(cfg.seed, {10, step, 0}));
            if (res.successors.empty())
                break;
            d.note_generated(res.successors);
            const std::size_t expanded = res.successors.size();
            nlohmann::json ledger;
            auto chosen = d.select_from(res.successors, 1, derive_seed(cfg.seed, {11, step}), ledger);
            current = chosen.front();
            d.record_step(step, {current}, expanded, expanded, std::move(ledger));
            if (d.stalled())
                break;
        }
    });
}

RunReport run_search(const RunContext& ctx, const PromptCandidate& p0, const RunData& data, const RunConfig& cfg)
{
    switch (cfg.mode) {
    case SearchMode::protegi:
        return optimize(ctx, p0, data, cfg);
    case SearchMode::flat:
        return flat_search(ctx, p0, data, cfg);
    case SearchMode::greedy:
        return greedy_search(ctx, p0, data, cfg);
    case SearchMode::mc:
        return mc_baseline(ctx, p0, data, cfg);
    }
    throw std::invalid_argument("unknown search mode");
}

} // namespace protegi
