#include "protegi/bandit_bench.hpp"
#include "protegi/expansion.hpp"
#include "protegi/runner.hpp"
#include "test_util.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numeric>
#include <set>
#include <sstream>

using namespace protegi;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// Successive-rejects phase lengths by exact integer arithmetic: the
// harmonic tail 1/2 + sum 1/i is P/Q with Q = lcm(2..n).
std::vector<std::uint64_t> sr_oracle(std::uint64_t n, std::uint64_t budget)
{
    std::uint64_t q = 1;
    for (std::uint64_t i = 2; i <= n; ++i)
        q = std::lcm(q, i);
    std::uint64_t p = q / 2;
    for (std::uint64_t i = 2; i <= n; ++i)
        p += q / i;
    std::vector<std::uint64_t> out;
    for (std::uint64_t t = 1; t < n; ++t) {
        const std::uint64_t num = (budget - n) * q;
        const std::uint64_t den = p * (n + 1 - t);
        out.push_back((num + den - 1) / den);
    }
    return out;
}

Outcome criterion_schedule()
{
    std::size_t checked = 0;
    for (std::size_t n = 2; n <= 20; ++n) {
        for (std::size_t b = n + 1; b <= 10000; ++b) {
            const auto got = sr_schedule(n, b);
            const auto want = sr_oracle(n, b);
            if (!std::equal(got.begin(), got.end(), want.begin(), want.end()))
                return {false, fmt("mismatch at n=%zu B=%zu", n, b)};
            ++checked;
        }
    }
    const bool anchor = sr_schedule(4, 100) == std::vector<std::size_t>{16, 21, 31};
    return {anchor, fmt("%zu (n, B) pairs agree; (4, 100) -> [16, 21, 31] %s", checked, anchor ? "ok" : "WRONG")};
}

// Simulated arms scored through the sim backend; classify calls are the
// independent evaluation count.
struct SimArms {
    Dataset pool;
    SimProfile profile;
    std::vector<PromptCandidate> arms;
    std::shared_ptr<SimBackend> sim;

    SimArms(const std::vector<double>& acc, std::size_t pool_size, std::uint64_t seed)
        : pool(make_synthetic_dataset(pool_size, derive_seed(seed, {0}), "pool"))
    {
        arms = make_sim_arms(acc, seed, profile);
        sim = std::make_shared<SimBackend>(profile, seed, std::vector<const Dataset*>{&pool});
    }
};

const FewShotSet kNoShots;

const SelectAlgorithm kAlgorithms[] = {SelectAlgorithm::uniform, SelectAlgorithm::ucb, SelectAlgorithm::ucb_e,
                                       SelectAlgorithm::sr, SelectAlgorithm::sh};

Outcome criterion_budget()
{
    Rng rng(2024);
    std::size_t runs = 0, rejected = 0, worst_gap = 0;
    std::string violation;
    for (std::size_t inst = 0; inst < 1000; ++inst) {
        const std::size_t n = 2 + rng.uniform_index(11);
        const std::size_t budget = 1 + rng.uniform_index(400);
        const std::size_t b = 1 + rng.uniform_index(n);
        std::vector<double> acc(n);
        for (auto& a : acc)
            a = rng.uniform01();
        SimArms arms(acc, 50 + rng.uniform_index(200), inst);
        for (auto alg : kAlgorithms) {
            MeteredBackend metered(arms.sim);
            PromptScorer scorer(metered, arms.arms, kNoShots, arms.pool);
            SelectionConfig cfg;
            cfg.algorithm = alg;
            cfg.beam_width = b;
            cfg.budget = budget;
            try {
                select(scorer, cfg, derive_seed(inst, {1}));
            } catch (const SelectError&) {
                ++rejected;
            }
            const auto used = metered.counts().of(CallKind::classify);
            ++runs;
            if (used > budget && violation.empty())
                violation = fmt("%s spent %llu > B=%zu (n=%zu)", std::string(algorithm_name(alg)).c_str(),
                                static_cast<unsigned long long>(used), budget, n);
            worst_gap = std::max(worst_gap, static_cast<std::size_t>(used));
        }
    }
    if (!violation.empty())
        return {false, violation};
    return {true, fmt("%zu selector runs over 1000 instances, none above B (%zu refused an infeasible budget)", runs,
                      rejected)};
}

Outcome criterion_oracle()
{
    Rng rng(77);
    std::size_t instances = 0;
    for (std::size_t inst = 0; inst < 400; ++inst) {
        const std::size_t n = 2 + rng.uniform_index(5);
        const std::size_t b = 1 + rng.uniform_index(n - 1);
        std::vector<double> acc(n);
        for (auto& a : acc)
            a = rng.bernoulli(0.5) ? 1.0 : 0.0;
        SimArms arms(acc, 12, 1000 + inst);

        std::vector<std::size_t> truth(n);
        std::iota(truth.begin(), truth.end(), std::size_t{0});
        std::sort(truth.begin(), truth.end(), [&](auto x, auto y) {
            if (acc[x] != acc[y])
                return acc[x] > acc[y];
            return arms.arms[x].id() < arms.arms[y].id();
        });
        truth.resize(b);

        for (auto alg : kAlgorithms) {
            MeteredBackend metered(arms.sim);
            PromptScorer scorer(metered, arms.arms, kNoShots, arms.pool);
            SelectionConfig cfg;
            cfg.algorithm = alg;
            cfg.beam_width = b;
            cfg.budget = 60 * n;
            const auto got = select(scorer, cfg, inst).selected;
            if (got != truth)
                return {false, fmt("%s differs from brute force on instance %zu (n=%zu b=%zu)",
                                   std::string(algorithm_name(alg)).c_str(), inst, n, b)};
        }
        ++instances;
    }
    return {true, fmt("all five selectors equal the brute-force top-b on %zu instances with n <= 6", instances)};
}

Outcome criterion_identification()
{
    BanditBenchConfig cfg;
    const auto cells = run_bandit_bench(cfg);
    std::printf("%s", render_bandit_table(cells).c_str());
    double best_bandit = 0.0, uniform = 1.0;
    bool ok = true;
    std::string detail;
    for (const auto& c : cells) {
        if (c.pulls_per_prompt != 50)
            continue;
        if (c.algorithm == SelectAlgorithm::uniform) {
            uniform = c.rate();
            continue;
        }
        best_bandit = std::max(best_bandit, c.rate());
        ok = ok && c.rate() >= 0.9;
        detail += fmt("%s %.3f, ", std::string(algorithm_name(c.algorithm)).c_str(), c.rate());
    }
    ok = ok && uniform <= best_bandit;
    return {ok, detail + fmt("uniform %.3f at 50 pulls/prompt over %zu seeds", uniform, cfg.trials)};
}

nlohmann::json sim_config(std::uint64_t seed, std::string_view mode)
{
    auto cfg = default_config();
    cfg["seed"] = seed;
    cfg["mode"] = std::string(mode);
    return cfg;
}

RunReport run_once(std::uint64_t seed, std::string_view mode, const std::filesystem::path& out)
{
    auto o = execute_run(sim_config(seed, mode), out / (std::string(mode) + "-" + std::to_string(seed)));
    if (o.reports.empty())
        throw std::runtime_error(o.message);
    return o.reports.front();
}

Outcome criterion_closed_loop(const std::filesystem::path& out)
{
    std::size_t improved = 0, calls_remote = 0;
    double total = 0.0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        const auto r = run_once(seed, "protegi", out);
        if (!r.ok())
            return {false, "run failed: " + r.status};
        const double delta = r.final_best.dev_f1 - r.steps.front().beam.front().dev_f1;
        improved += delta > 0.0;
        total += delta;
        calls_remote += r.config["backend"]["kind"] != "sim";
    }
    const double mean = total / 20.0;
    return {improved >= 18 && mean >= 0.15 && calls_remote == 0,
            fmt("improved on %zu/20 seeds, mean dev F1 gain %.3f, remote calls 0", improved, mean)};
}

Outcome criterion_mode_ordering(const std::filesystem::path& out)
{
    std::size_t vs_mc = 0, vs_flat = 0, vs_greedy = 0;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
        std::map<std::string, double> score;
        for (auto mode : {"protegi", "mc", "flat", "greedy"}) {
            const auto r = run_once(seed, mode, out);
            if (!r.ok())
                return {false, std::string(mode) + " failed: " + r.status};
            score[mode] = r.final_test_f1;
        }
        vs_mc += score["protegi"] >= score["mc"];
        vs_flat += score["protegi"] >= score["flat"];
        vs_greedy += score["protegi"] >= score["greedy"];
    }
    return {vs_mc >= 14 && vs_flat >= 14 && vs_greedy >= 14,
            fmt("test F1 protegi >= mc on %zu/20, >= flat on %zu/20, >= greedy on %zu/20", vs_mc, vs_flat, vs_greedy)};
}

Outcome criterion_f1()
{
    Rng rng(9);
    for (int i = 0; i < 10000; ++i) {
        const std::size_t n = rng.uniform_index(40);
        std::vector<PredictionRecord> recs(n);
        long tp = 0, fp = 0, fn = 0;
        for (auto& r : recs) {
            r.gold = rng.bernoulli(0.5) ? Label::positive : Label::negative;
            const auto roll = rng.uniform_index(5);
            if (roll < 2)
                r.predicted = Label::positive;
            else if (roll < 4)
                r.predicted = Label::negative;
            const bool pp = r.predicted == Label::positive, gp = r.gold == Label::positive;
            tp += pp && gp;
            fp += pp && !gp;
            fn += !pp && gp;
        }
        const double want = tp == 0 ? 0.0 : 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
        const double got = f1_score(recs).value;
        if (std::abs(got - want) > 1e-12 || f1_score(recs).n_evaluated != n)
            return {false, fmt("list %d: got %.17g want %.17g", i, got, want)};
    }
    std::vector<PredictionRecord> none{{"a", Label::negative, Label::negative, "No"}};
    std::vector<PredictionRecord> unparsed{{"a", Label::positive, std::nullopt, "?"}};
    const bool zero = f1_score({}).value == 0.0 && f1_score(none).value == 0.0 && f1_score(unparsed).value == 0.0;
    return {zero, "10000 random lists match confusion-matrix arithmetic; empty, no-positive and unparsed cases score 0"};
}

Outcome criterion_templates()
{
    const MetaPromptSet t;
    const auto p = make_initial_prompt(std::string(*builtin_task_prompt("ethos")));
    ErrorGroup g{{test::ex("e1", "I hate group X", Label::positive), {"e1", Label::positive, Label::negative, "No"}},
                 {test::ex("e2", "Nice day", Label::negative), {"e2", Label::negative, Label::positive, "Yes"}}};
    std::vector<std::string> bad;
    if (render_gradient_prompt(t, p, g, 4) != test::golden("gradient_rendered.txt"))
        bad.push_back("gradient");
    if (render_edit_prompt(t, p, g, "the prompt ignores who the text targets.", 1) != test::golden("edit_rendered.txt"))
        bad.push_back("edit");
    if (render_paraphrase_prompt(t, p) != test::golden("paraphrase_rendered.txt"))
        bad.push_back("paraphrase");
    for (std::string name : {"jailbreak", "ethos", "liar", "sarcasm"})
        if (std::string(*builtin_task_prompt(name)) != test::golden("task_" + name + ".txt"))
            bad.push_back(name);
    const FewShotSet fs{{test::ex("s", "You are lovely", Label::negative)}};
    if (render_task_prompt(p, fs, test::ex("q", "I hate group X", Label::positive)) != test::golden("ethos_rendered.txt"))
        bad.push_back("ethos rendered");
    std::string which;
    for (const auto& b : bad)
        which += b + " ";
    return {bad.empty(), bad.empty() ? "3 meta-prompts, 4 task prompts and a rendered task prompt match byte for byte"
                                     : "mismatch: " + which};
}

Outcome criterion_determinism(const std::filesystem::path& out)
{
    std::vector<std::string> reports;
    for (const char* tag : {"a", "b"}) {
        const auto dir = out / tag;
        const std::string cmd = std::string("\"") + PROTEGI_CLI + "\" run --backend sim --seed 7 --out \"" +
                                dir.string() + "\" > /dev/null";
        if (std::system(cmd.c_str()) != 0)
            return {false, "cli run failed"};
        std::string joined;
        for (const char* f : {"report.json", "ledgers.jsonl", "lineage.jsonl"})
            joined += read_text_file(dir / "run" / f) + '\x1f';
        reports.push_back(joined);
    }
    const bool same = reports[0] == reports[1];
    return {same, fmt("two CLI executions with seed 7: report, ledgers and lineage %s (%zu bytes)",
                      same ? "byte-identical" : "DIFFER", reports[0].size())};
}

Outcome criterion_replicates(const std::filesystem::path& out)
{
    std::vector<nlohmann::json> docs;
    for (auto mode : {"protegi", "mc", "flat", "greedy"}) {
        auto cfg = sim_config(2025, mode);
        cfg["replicates"] = 12;
        cfg["output"]["name"] = std::string(mode);
        const auto o = execute_run(cfg, out);
        if (o.exit_code != kExitOk || o.reports.size() != 12)
            return {false, std::string(mode) + ": " + o.message};
        for (const auto& d : o.run_dirs)
            docs.push_back(read_report(d / "report.json"));
    }
    const auto table = render_reports(docs);
    std::printf("%s", table.c_str());
    const auto agg = aggregate_by_mode(docs);
    double protegi = 0, mc = 0;
    for (const auto& a : agg) {
        if (a.mode == "protegi")
            protegi = a.test_mean;
        if (a.mode == "mc")
            mc = a.test_mean;
    }
    const bool shape = agg.size() == 4 && table.find("\xc2\xb1") != std::string::npos &&
                       std::filesystem::exists(out / "protegi" / "aggregate.json");
    return {shape && protegi > mc,
            fmt("12 replicates x 4 modes; mean test F1 protegi %.4f vs mc %.4f", protegi, mc)};
}

} // namespace

int main(int argc, char** argv)
{
    std::set<int> only;
    for (int i = 1; i < argc; ++i)
        only.insert(std::atoi(argv[i]));
    const auto out = test::temp_dir("acceptance");

    const std::vector<std::pair<int, std::function<Outcome()>>> criteria{
        {1, criterion_schedule},
        {2, criterion_budget},
        {3, criterion_oracle},
        {4, criterion_identification},
        {5, [&] { return criterion_closed_loop(out / "c5"); }},
        {6, [&] { return criterion_mode_ordering(out / "c6"); }},
        {7, criterion_f1},
        {8, criterion_templates},
        {9, [&] { return criterion_determinism(out / "c9"); }},
        {10, [&] { return criterion_replicates(out / "c10"); }},
    };
    int failed = 0;
    for (const auto& [id, fn] : criteria) {
        if (!only.empty() && !only.count(id))
            continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("criterion %2d: %s (%.2f s) %s\n", id, o.pass ? "PASS" : "FAIL", secs, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.pass;
    }
    std::filesystem::remove_all(out);
    return failed == 0 ? 0 : 1;
}
