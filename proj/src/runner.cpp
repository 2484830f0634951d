#include "protegi/runner.hpp"
#include "protegi/rng.hpp"

#include <fstream>

namespace protegi {

namespace {

struct Prepared {
    EffectiveConfig eff;
    Dataset all;
    DataSplit split;
    FewShotSet few_shot;
    PromptCandidate p0;
    MetaPromptSet templates;
};

Prepared prepare(const nlohmann::json& cfg)
{
    Prepared p;
    p.eff = to_effective(cfg);
    const auto& d = p.eff.data;
    if (!d.path.empty())
        p.all = load_dataset(d.path, d.format, d.labels);
    else if (p.eff.backend == "sim")
        p.all = make_synthetic_dataset(d.synthetic_size, derive_seed(p.eff.seed, {0}));
    else
        throw ConfigError("data.path is required with the remote backend");
    p.split = split_dataset(p.all, derive_seed(p.eff.seed, {1}), d.n_dev, d.n_test);
    p.few_shot = select_few_shot(p.split.train, d.few_shot, derive_seed(p.eff.seed, {2}));

    if (auto builtin = builtin_task_prompt(p.eff.initial_prompt))
        p.p0 = make_initial_prompt(std::string(*builtin));
    else if (std::filesystem::exists(p.eff.initial_prompt))
        p.p0 = make_initial_prompt(read_text_file(p.eff.initial_prompt));
    else
        throw ConfigError("task.initial_prompt '" + p.eff.initial_prompt +
                          "' is neither a built-in prompt nor a readable file");
    p.templates = load_meta_prompts(p.eff.template_dir);
    return p;
}

std::shared_ptr<Backend> make_backend(const Prepared& p, std::uint64_t run_seed)
{
    std::shared_ptr<Backend> base;
    if (p.eff.backend == "sim")
        base = std::make_shared<SimBackend>(p.eff.sim, derive_seed(run_seed, {3}), std::vector<const Dataset*>{&p.all});
    else
        base = std::make_shared<RemoteBackend>(p.eff.remote);
    if (!p.eff.cache_dir.empty())
        base = std::make_shared<CachingBackend>(base, p.eff.cache_dir, make_run_nonce());
    return base;
}

} // namespace

RunOutcome execute_run(const nlohmann::json& cfg, const std::filesystem::path& out_dir)
{
    RunOutcome outcome;
    Prepared prep;
    try {
        prep = prepare(cfg);
    } catch (const ConfigError& e) {
        return {kExitConfig, std::string("config error: ") + e.what(), {}, {}};
    } catch (const IngestError& e) {
        return {kExitConfig, std::string("data error: ") + e.what(), {}, {}};
    } catch (const SplitError& e) {
        return {kExitConfig, std::string("data error: ") + e.what(), {}, {}};
    } catch (const TemplateError& e) {
        return {kExitConfig, std::string("template error: ") + e.what(), {}, {}};
    } catch (const std::runtime_error& e) {
        return {kExitConfig, std::string("error: ") + e.what(), {}, {}};
    }

    const Dataset& minibatch = prep.eff.data.minibatch_source == "dev" ? prep.split.dev : prep.split.train;
    const RunData data{minibatch, prep.split.train, prep.split.dev, prep.split.test, prep.few_shot};
    const auto base_dir = out_dir / prep.eff.run_name;

    for (std::size_t k = 0; k < prep.eff.replicates; ++k) {
        RunConfig rc = prep.eff.run;
        rc.seed = prep.eff.replicates == 1 ? prep.eff.seed : derive_seed(prep.eff.seed, {100, k});

        std::shared_ptr<Backend> base;
        try {
            base = make_backend(prep, rc.seed);
        } catch (const BackendError& e) {
            return {kExitConfig, std::string("backend setup: ") + e.what(), {}, {}};
        }
        MeteredBackend metered(base);
        RunContext ctx{metered, prep.templates, prep.eff.backend == "sim" ? &prep.eff.sim : nullptr};

        RunReport report = run_search(ctx, prep.p0, data, rc);
        report.config = cfg;
        if (prep.eff.replicates > 1)
            report.config["seed"] = rc.seed;

        char name[32];
        std::snprintf(name, sizeof name, "rep-%02zu", k + 1);
        const auto dir = prep.eff.replicates == 1 ? base_dir : base_dir / name;
        write_run_directory(dir, report);
        outcome.run_dirs.push_back(dir);
        if (!report.ok() && outcome.exit_code == kExitOk) {
            outcome.exit_code = kExitBackend;
            outcome.message = report.status;
        }
        outcome.reports.push_back(std::move(report));
    }

    if (prep.eff.replicates > 1) {
        std::vector<nlohmann::json> docs;
        for (const auto& r : outcome.reports)
            docs.push_back(report_to_json(r));
        nlohmann::json agg = nlohmann::json::array();
        for (const auto& a : aggregate_by_mode(docs)) {
            nlohmann::json row{{"mode", a.mode}, {"runs", a.runs}, {"dev_f1_mean", a.dev_mean},
                               {"dev_f1_se", a.dev_se}, {"test_f1_mean", a.test_mean}, {"test_f1_se", a.test_se}};
            if (a.sim_mean) {
                row["sim_accuracy_mean"] = *a.sim_mean;
                row["sim_accuracy_se"] = *a.sim_se;
            }
            agg.push_back(std::move(row));
        }
        std::ofstream out(base_dir / "aggregate.json", std::ios::binary | std::ios::trunc);
        out << agg.dump(2) << "\n";
    }
    return outcome;
}

} // namespace protegi
