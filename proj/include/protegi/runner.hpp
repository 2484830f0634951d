#pragma once

#include "protegi/config.hpp"
#include "protegi/report.hpp"

namespace protegi {

/// Exit codes shared by the CLI and CI scripts.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitBackend = 3;

struct RunOutcome {
    int exit_code = kExitOk;
    std::string message;
    std::vector<RunReport> reports;
    std::vector<std::filesystem::path> run_dirs;
};

/// Everything `protegi run` does: validate the merged config, load and split
/// data, build the backend stack, run every replicate and write one run
/// directory per replicate under `out_dir`. Nothing is written when the
/// configuration or data is rejected.
RunOutcome execute_run(const nlohmann::json& cfg, const std::filesystem::path& out_dir);

} // namespace protegi
