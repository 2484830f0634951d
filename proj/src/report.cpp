#include "protegi/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace protegi {

namespace {

nlohmann::json beam_entry_json(const BeamEntry& e)
{
    const auto& lin = e.candidate.lineage();
    nlohmann::json j{
        {"id", e.candidate.id()},
        {"origin", std::string(origin_name(lin.origin))},
        {"parent", lin.parent_id},
        {"generation", lin.step},
        {"dev_f1", e.dev_f1},
        {"dev_accuracy", e.dev_accuracy},
        {"prompt", e.candidate.template_text()},
    };
    if (e.sim_accuracy)
        j["sim_accuracy"] = *e.sim_accuracy;
    return j;
}

std::string fixed(double v, int digits = 4)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return buf;
}

std::string pad(std::string s, std::size_t width)
{
    if (s.size() < width)
        s.append(width - s.size(), ' ');
    return s;
}

} // namespace

nlohmann::json report_to_json(const RunReport& report)
{
    nlohmann::json steps = nlohmann::json::array();
    nlohmann::json curve = nlohmann::json::array();
    for (const auto& s : report.steps) {
        nlohmann::json beam = nlohmann::json::array();
        for (const auto& e : s.beam)
            beam.push_back(beam_entry_json(e));
        nlohmann::json step{
            {"step", s.step},
            {"pool_size", s.pool_size},
            {"expanded", s.expanded},
            {"best_dev_f1", s.best_dev_f1()},
            {"beam", std::move(beam)},
        };
        if (s.ledger)
            step["ledger"] = *s.ledger;
        steps.push_back(std::move(step));
        curve.push_back({s.step, s.best_dev_f1()});
    }

    nlohmann::json final_best = beam_entry_json(report.final_best);
    final_best["task"] = report.final_best.candidate.task_description();
    final_best["test_f1"] = report.final_test_f1;

    nlohmann::json by_kind = nlohmann::json::object();
    for (std::size_t k = 0; k < kCallKindCount; ++k)
        by_kind[std::string(call_kind_name(static_cast<CallKind>(k)))] = report.calls.by_kind[k];

    return {
        {"format", "protegi-run-report/1"},
        {"mode", std::string(mode_name(report.mode))},
        {"seed", report.seed},
        {"status", report.status},
        {"config", report.config},
        {"steps", std::move(steps)},
        {"learning_curve", std::move(curve)},
        {"final", std::move(final_best)},
        {"calls",
         {{"total", report.calls.total},
          {"cache_hits", report.calls.cache_hits},
          {"billed", report.calls.billed()},
          {"by_kind", std::move(by_kind)}}},
        {"candidates_expanded", report.candidates_expanded},
        {"candidates_generated", report.lineage.size()},
    };
}

std::string lineage_jsonl(const RunReport& report)
{
    std::string out;
    for (const auto& c : report.lineage) {
        const auto& lin = c.lineage();
        nlohmann::json j{
            {"id", c.id()},
            {"origin", std::string(origin_name(lin.origin))},
            {"parent", lin.parent_id},
            {"generation", lin.step},
            {"ancestry", lin.ancestry},
            {"task", c.task_description()},
        };
        if (!lin.gradient.empty())
            j["gradient"] = lin.gradient;
        out += j.dump() + "\n";
    }
    return out;
}

void write_run_directory(const std::filesystem::path& dir, const RunReport& report)
{
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / "report.json", std::ios::binary | std::ios::trunc);
        out << report_to_json(report).dump(2) << "\n";
    }
    {
        std::ofstream out(dir / "ledgers.jsonl", std::ios::binary | std::ios::trunc);
        for (const auto& s : report.steps) {
            if (s.ledger)
                out << nlohmann::json{{"step", s.step}, {"ledger", *s.ledger}}.dump() << "\n";
        }
    }
    {
        std::ofstream out(dir / "lineage.jsonl", std::ios::binary | std::ios::trunc);
        out << lineage_jsonl(report);
    }
    {
        std::ofstream out(dir / "timing.json", std::ios::binary | std::ios::trunc);
        out << nlohmann::json{{"wall_time_s", report.wall_time.count()}}.dump() << "\n";
    }
}

nlohmann::json read_report(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in)
        throw ReportError("cannot open report " + path.string());
    auto j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded() || !j.is_object())
        throw ReportError(path.string() + " is not a JSON report");
    for (const char* key : {"mode", "status", "steps", "final", "calls"}) {
        if (!j.contains(key))
            throw ReportError(path.string() + " lacks '" + key + "'");
    }
    if (!j["steps"].is_array() || !j["final"].is_object())
        throw ReportError(path.string() + " has malformed steps or final entries");
    return j;
}

std::pair<double, double> mean_and_standard_error(const std::vector<double>& xs)
{
    if (xs.empty())
        return {0.0, 0.0};
    double sum = 0.0;
    for (double x : xs)
        sum += x;
    const double mean = sum / static_cast<double>(xs.size());
    if (xs.size() < 2)
        return {mean, 0.0};
    double ss = 0.0;
    for (double x : xs)
        ss += (x - mean) * (x - mean);
    const double sd = std::sqrt(ss / static_cast<double>(xs.size() - 1));
    return {mean, sd / std::sqrt(static_cast<double>(xs.size()))};
}

std::vector<ModeAggregate> aggregate_by_mode(const std::vector<nlohmann::json>& reports)
{
    std::vector<std::string> order;
    std::map<std::string, std::vector<const nlohmann::json*>> groups;
    for (const auto& r : reports) {
        const auto mode = r.value("mode", std::string("?"));
        if (!groups.count(mode))
            order.push_back(mode);
        groups[mode].push_back(&r);
    }
    std::vector<ModeAggregate> out;
    for (const auto& mode : order) {
        std::vector<double> dev, test, sim;
        for (const auto* r : groups[mode]) {
            const auto& f = (*r)["final"];
            dev.push_back(f.value("dev_f1", 0.0));
            test.push_back(f.value("test_f1", 0.0));
            if (f.contains("sim_accuracy"))
                sim.push_back(f["sim_accuracy"].get<double>());
        }
        ModeAggregate agg;
        agg.mode = mode;
        agg.runs = dev.size();
        std::tie(agg.dev_mean, agg.dev_se) = mean_and_standard_error(dev);
        std::tie(agg.test_mean, agg.test_se) = mean_and_standard_error(test);
        if (sim.size() == dev.size()) {
            auto [m, se] = mean_and_standard_error(sim);
            agg.sim_mean = m;
            agg.sim_se = se;
        }
        out.push_back(agg);
    }
    return out;
}

std::string render_report(const nlohmann::json& report)
{
    std::ostringstream out;
    out << "mode " << report.value("mode", "?") << "  seed " << report.value("seed", 0ULL) << "  status "
        << report.value("status", "?") << "\n\n";
    out << pad("step", 6) << pad("beam", 6) << pad("pool", 6) << "best dev F1\n";
    for (const auto& s : report["steps"]) {
        out << pad(std::to_string(s.value("step", 0)), 6) << pad(std::to_string(s["beam"].size()), 6)
            << pad(std::to_string(s.value("pool_size", 0)), 6) << fixed(s.value("best_dev_f1", 0.0)) << "\n";
    }
    const auto& f = report["final"];
    out << "\nfinal dev F1 " << fixed(f.value("dev_f1", 0.0)) << "  test F1 " << fixed(f.value("test_f1", 0.0));
    if (f.contains("sim_accuracy"))
        out << "  sim accuracy " << fixed(f["sim_accuracy"].get<double>());
    out << "\n";
    const auto& calls = report["calls"];
    out << "backend calls " << calls.value("total", 0ULL) << " (cache hits " << calls.value("cache_hits", 0ULL)
        << ";";
    if (calls.contains("by_kind")) {
        for (const auto& [kind, n] : calls["by_kind"].items())
            out << " " << kind << " " << n.get<std::uint64_t>();
    }
    out << ")\n\nbest prompt:\n" << f.value("prompt", "") << "\n";
    return out.str();
}

std::string render_reports(const std::vector<nlohmann::json>& reports)
{
    if (reports.size() == 1)
        return render_report(reports.front());
    std::ostringstream out;
    out << pad("mode", 10) << pad("seed", 22) << pad("steps", 7) << pad("dev F1", 9) << pad("test F1", 9)
        << "calls\n";
    for (const auto& r : reports) {
        const auto& f = r["final"];
        out << pad(r.value("mode", "?"), 10) << pad(std::to_string(r.value("seed", 0ULL)), 22)
            << pad(std::to_string(r["steps"].size()), 7) << pad(fixed(f.value("dev_f1", 0.0)), 9)
            << pad(fixed(f.value("test_f1", 0.0)), 9) << r["calls"].value("total", 0ULL) << "\n";
    }
    out << "\n" << pad("mode", 10) << pad("runs", 6) << pad("dev F1 (mean ± SE)", 22)
        << pad("test F1 (mean ± SE)", 22) << "sim accuracy\n";
    for (const auto& a : aggregate_by_mode(reports)) {
        out << pad(a.mode, 10) << pad(std::to_string(a.runs), 6)
            << pad(fixed(a.dev_mean) + " ± " + fixed(a.dev_se), 22)
            << pad(fixed(a.test_mean) + " ± " + fixed(a.test_se), 22);
        if (a.sim_mean)
            out << fixed(*a.sim_mean) << " ± " << fixed(*a.sim_se);
        else
            out << "-";
        out << "\n";
    }
    return out.str();
}

} // namespace protegi
