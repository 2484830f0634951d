#pragma once

#include "protegi/optimizer.hpp"

#include <json.hpp>

#include <filesystem>

namespace protegi {

class ReportError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Machine-readable report. Wall time is left out so that identical runs
/// serialize identically; it goes to timing.json instead.
nlohmann::json report_to_json(const RunReport& report);

/// One JSON object per generated candidate, in generation order.
std::string lineage_jsonl(const RunReport& report);

/// Writes report.json, ledgers.jsonl, lineage.jsonl and timing.json into
/// `dir` (created if needed).
void write_run_directory(const std::filesystem::path& dir, const RunReport& report);

/// Parses a report.json; throws ReportError if it is unreadable or lacks
/// the expected fields.
nlohmann::json read_report(const std::filesystem::path& path);

struct ModeAggregate {
    std::string mode;
    std::size_t runs = 0;
    double dev_mean = 0.0;
    double dev_se = 0.0;
    double test_mean = 0.0;
    double test_se = 0.0;
    /// Present when every run came from the simulated backend.
    std::optional<double> sim_mean;
    std::optional<double> sim_se;
};

/// Mean and standard error (sample sd / sqrt(n)) of the final scores per
/// mode, modes in first-seen order.
std::vector<ModeAggregate> aggregate_by_mode(const std::vector<nlohmann::json>& reports);

std::pair<double, double> mean_and_standard_error(const std::vector<double>& xs);

/// Human-readable summary of one report: per-step table, final scores,
/// call audit and the best prompt.
std::string render_report(const nlohmann::json& report);

/// Summary line per report plus a per-mode comparison table.
std::string render_reports(const std::vector<nlohmann::json>& reports);

} // namespace protegi
