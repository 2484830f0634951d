#include "protegi/config.hpp"
#include "protegi/report.hpp"
#include "protegi/runner.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace protegi;

TEST(Config, DefaultsAreValid)
{
    const auto eff = to_effective(default_config());
    EXPECT_EQ(eff.backend, "sim");
    EXPECT_EQ(eff.run.beam_width, 4u);
    EXPECT_EQ(eff.run.depth, 6u);
    EXPECT_EQ(eff.run.selection.algorithm, SelectAlgorithm::ucb);
    EXPECT_EQ(eff.run.expansion.max_successors, 8u);
    EXPECT_EQ(eff.sim.keyword_weights.size(), 2u);
}

TEST(Config, OverridesAndTypeChecks)
{
    auto cfg = default_config();
    apply_override(cfg, "search.depth=3");
    apply_override(cfg, "selection.algorithm=sr");
    apply_override(cfg, "sim.keywords.violence=0.1");
    const auto eff = to_effective(cfg);
    EXPECT_EQ(eff.run.depth, 3u);
    EXPECT_EQ(eff.run.selection.algorithm, SelectAlgorithm::sr);
    EXPECT_DOUBLE_EQ(eff.sim.keyword_weights.at("violence"), 0.1);
    EXPECT_THROW(apply_override(cfg, "search.dept=3"), ConfigError);
    EXPECT_THROW(apply_override(cfg, "search.depth=\"deep\""), ConfigError);
    EXPECT_THROW(apply_override(cfg, "no-equals"), ConfigError);
}

TEST(Config, RejectsBadValues)
{
    for (const char* o : {"mode=\"beam\"", "selection.algorithm=\"best\"", "search.beam_width=0", "backend.kind=\"gpt\"",
                          "sim.cap=2.0", "data.minibatch_source=\"test\""}) {
        auto cfg = default_config();
        apply_override(cfg, o);
        EXPECT_THROW(to_effective(cfg), ConfigError) << o;
    }
}

TEST(Config, FileLayering)
{
    auto dir = test::temp_dir("cfg");
    test::write_file(dir / "c.json", R"({"search": {"beam_width": 2}, "seed": 7})");
    const auto cfg = load_config(dir / "c.json", {"seed=9"});
    EXPECT_EQ(cfg["search"]["beam_width"], 2);
    EXPECT_EQ(cfg["seed"], 9);
    test::write_file(dir / "bad.json", R"({"search": {"bogus": 1}})");
    EXPECT_THROW(load_config(dir / "bad.json", {}), ConfigError);
    EXPECT_THROW(load_config(dir / "missing.json", {}), ConfigError);
}

TEST(Report, MeanAndStandardError)
{
    const auto [m, se] = mean_and_standard_error({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(m, 2.5);
    EXPECT_NEAR(se, std::sqrt(5.0 / 3.0) / 2.0, 1e-12);
    EXPECT_EQ(mean_and_standard_error({0.7}).second, 0.0);
}

TEST(Runner, WritesRunDirectoryAndReadsBack)
{
    auto out = test::temp_dir("runner");
    auto cfg = default_config();
    apply_override(cfg, "search.depth=2");
    apply_override(cfg, "data.synthetic_size=300");
    const auto o = execute_run(cfg, out);
    ASSERT_EQ(o.exit_code, kExitOk) << o.message;
    for (const char* f : {"report.json", "ledgers.jsonl", "lineage.jsonl", "timing.json"})
        EXPECT_TRUE(std::filesystem::exists(out / "run" / f)) << f;
    const auto doc = read_report(out / "run" / "report.json");
    EXPECT_EQ(doc["mode"], "protegi");
    EXPECT_EQ(doc["status"], "ok");
    EXPECT_FALSE(render_report(doc).empty());
}

TEST(Runner, ConfigErrorsWriteNothing)
{
    auto out = test::temp_dir("runner-bad");
    auto cfg = default_config();
    apply_override(cfg, "data.path=\"/nonexistent/data.jsonl\"");
    const auto o = execute_run(cfg, out);
    EXPECT_EQ(o.exit_code, kExitConfig);
    EXPECT_FALSE(std::filesystem::exists(out / "run"));
}

TEST(Runner, RemoteWithoutCredentialIsConfigError)
{
    auto out = test::temp_dir("runner-remote");
    auto dir = test::temp_dir("runner-remote-data");
    test::write_file(dir / "d.jsonl", "{\"text\": \"a\", \"label\": \"Yes\"}\n");
    ::unsetenv("PROTEGI_NO_SUCH_KEY");
    auto cfg = default_config();
    apply_override(cfg, "backend.kind=remote");
    apply_override(cfg, "backend.api_key_env=PROTEGI_NO_SUCH_KEY");
    apply_override(cfg, "data.path=\"" + (dir / "d.jsonl").string() + "\"");
    apply_override(cfg, "data.n_dev=0");
    apply_override(cfg, "data.n_test=0");
    EXPECT_EQ(execute_run(cfg, out).exit_code, kExitConfig);
}

TEST(Report, CorruptReportIsRejected)
{
    auto dir = test::temp_dir("corrupt");
    test::write_file(dir / "report.json", "{\"format\": 1");
    EXPECT_THROW(read_report(dir / "report.json"), ReportError);
    test::write_file(dir / "report.json", "{\"format\": \"protegi-run-report/1\"}");
    EXPECT_THROW(read_report(dir / "report.json"), ReportError);
}
