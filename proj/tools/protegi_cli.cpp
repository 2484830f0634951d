#include "protegi/bandit_bench.hpp"
#include "protegi/runner.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace protegi;

namespace {

struct RunArgs {
    std::string config;
    std::vector<std::string> sets;
    std::string backend;
    std::string mode;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> beam_width;
    std::optional<std::size_t> depth;
    std::string selector;
    std::optional<std::size_t> budget;
    std::optional<std::size_t> replicates;
    std::string data;
    std::string name;
    std::string out = "runs";
};

int do_run(const RunArgs& a)
{
    std::vector<std::string> overrides = a.sets;
    auto set = [&](const std::string& key, const std::string& value) { overrides.push_back(key + "=" + value); };
    if (!a.backend.empty())
        set("backend.kind", "\"" + a.backend + "\"");
    if (!a.mode.empty())
        set("mode", "\"" + a.mode + "\"");
    if (a.seed)
        set("seed", std::to_string(*a.seed));
    if (a.beam_width)
        set("search.beam_width", std::to_string(*a.beam_width));
    if (a.depth)
        set("search.depth", std::to_string(*a.depth));
    if (!a.selector.empty())
        set("selection.algorithm", "\"" + a.selector + "\"");
    if (a.budget)
        set("selection.budget", std::to_string(*a.budget));
    if (a.replicates)
        set("replicates", std::to_string(*a.replicates));
    if (!a.data.empty())
        set("data.path", nlohmann::json(a.data).dump());
    if (!a.name.empty())
        set("output.name", nlohmann::json(a.name).dump());

    nlohmann::json cfg;
    try {
        cfg = load_config(a.config, overrides);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    }
    if (cfg["mode"] == "flat" && a.depth)
        std::cerr << "warning: --depth has no effect in flat mode\n";

    const auto outcome = execute_run(cfg, a.out);
    if (outcome.exit_code == kExitConfig) {
        std::cerr << outcome.message << "\n";
        return outcome.exit_code;
    }
    for (std::size_t i = 0; i < outcome.reports.size(); ++i) {
        const auto& r = outcome.reports[i];
        std::cout << outcome.run_dirs[i].string() << ": " << r.status;
        if (r.ok())
            std::cout << "  dev_f1=" << r.steps.back().best_dev_f1() << "  test_f1=" << r.final_test_f1;
        std::cout << "  calls=" << r.calls.total << "\n";
    }
    if (outcome.exit_code != kExitOk)
        std::cerr << "run failed: " << outcome.message << " (partial report written)\n";
    return outcome.exit_code;
}

int do_report(const std::vector<std::string>& paths)
{
    std::vector<nlohmann::json> docs;
    for (const auto& p : paths) {
        std::filesystem::path path = p;
        if (std::filesystem::is_directory(path))
            path /= "report.json";
        try {
            docs.push_back(read_report(path));
        } catch (const ReportError& e) {
            std::cerr << "report error: " << e.what() << "\n";
            return kExitConfig;
        }
    }
    if (docs.size() == 1)
        std::cout << render_report(docs.front());
    else
        std::cout << render_reports(docs);
    return kExitOk;
}

int do_bench(BanditBenchConfig cfg, const std::string& json_out)
{
    const auto cells = run_bandit_bench(cfg);
    std::cout << render_bandit_table(cells);
    if (!json_out.empty()) {
        std::ofstream out(json_out, std::ios::binary | std::ios::trunc);
        out << bandit_cells_to_json(cells).dump(2) << "\n";
    }
    return kExitOk;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Prompt optimization with textual gradients and bandit beam search"};
    app.require_subcommand(1);

    RunArgs run;
    auto* run_cmd = app.add_subcommand("run", "Optimize a prompt and write a run directory");
    run_cmd->add_option("--config", run.config, "JSON config file layered over the defaults")->check(CLI::ExistingFile);
    run_cmd->add_option("--set", run.sets, "Override a config value, e.g. --set search.depth=3");
    run_cmd->add_option("--backend", run.backend, "sim or remote")->check(CLI::IsMember({"sim", "remote"}));
    run_cmd->add_option("--mode", run.mode, "protegi, flat, greedy or mc")
        ->check(CLI::IsMember({"protegi", "flat", "greedy", "mc"}));
    run_cmd->add_option("--seed", run.seed, "Master seed");
    run_cmd->add_option("--beam-width", run.beam_width, "Beam width b");
    run_cmd->add_option("--depth", run.depth, "Search depth r");
    run_cmd->add_option("--selector", run.selector, "uniform, ucb, ucb-e, sr or sh")
        ->check(CLI::IsMember({"uniform", "ucb", "ucb-e", "sr", "sh"}));
    run_cmd->add_option("--budget", run.budget, "Example evaluations per selection step");
    run_cmd->add_option("--replicates", run.replicates, "Independent runs with derived seeds");
    run_cmd->add_option("--data", run.data, "Labeled JSONL dataset");
    run_cmd->add_option("--name", run.name, "Run directory name");
    run_cmd->add_option("--out", run.out, "Output root directory");

    std::vector<std::string> report_paths;
    auto* report_cmd = app.add_subcommand("report", "Summarize one or more run reports");
    report_cmd->add_option("paths", report_paths, "report.json files or run directories")->required();

    BanditBenchConfig bench;
    std::string bench_json;
    auto* bench_cmd = app.add_subcommand("bench-bandits", "Best-arm identification rates on simulated arms");
    bench_cmd->add_option("--arms", bench.arm_accuracies, "Arm accuracies");
    bench_cmd->add_option("--pulls", bench.pulls_per_prompt, "Pulls per prompt (one cell each)");
    bench_cmd->add_option("--trials", bench.trials, "Seeds per cell");
    bench_cmd->add_option("--seed", bench.seed, "Master seed");
    bench_cmd->add_option("--json", bench_json, "Also write the cells as JSON");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd)
            return do_run(run);
        if (*report_cmd)
            return do_report(report_paths);
        if (*bench_cmd)
            return do_bench(bench, bench_json);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
