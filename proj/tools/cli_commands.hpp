#pragma once

#include <filesystem>
#include <optional>
#include <string>

namespace ofmpc::cli {

enum ExitCode : int {
    kOk = 0,
    kUsage = 1,
    kConfigError = 2,
    kConditionFailed = 3,
    kRuntimeError = 4,
};

struct RunOptions {
    std::filesystem::path config;
    std::optional<std::string> mode; // nominal, learned or both
    std::optional<std::filesystem::path> out;
    std::optional<std::filesystem::path> grnn;
};

struct SweepOptions {
    std::filesystem::path config;
    std::optional<std::filesystem::path> setpoints;
    std::optional<std::filesystem::path> out;
    std::optional<std::size_t> workers;
};

struct FitOptions {
    std::filesystem::path samples;
    std::string sigma = "auto";
    std::optional<std::filesystem::path> out;
    std::size_t grid = 201;
};

int cmd_check(const std::filesystem::path& config);
int cmd_run(const RunOptions& opts);
int cmd_sweep(const SweepOptions& opts);
int cmd_grnn_fit(const FitOptions& opts);

} // namespace ofmpc::cli
