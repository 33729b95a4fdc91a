#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "ofmpc/closed_loop.hpp"

namespace ofmpc {

/// Where a list of setpoints comes from. All setpoints are in absolute units.
struct SetpointSource {
    enum class Kind { Points, Linspace, Random };
    Kind kind = Kind::Points;
    std::vector<Vector> points;
    std::vector<std::pair<double, double>> ranges;
    std::size_t count = 0;
    std::uint64_t seed = 0;
    bool reachable_only = true;
    std::size_t repeat = 1;
};

struct PlantSpec {
    enum class Kind { Cstr, Linear };
    Kind kind = Kind::Cstr;
    CstrParams cstr;
    Vector linear_disturbance; // deviation units, Linear only
};

struct ScenarioSpec {
    ScenarioConfig cfg; // schedule filled in by resolve_schedule
    std::vector<std::pair<std::size_t, Vector>> fixed_schedule; // absolute setpoints
    std::optional<SetpointSource> random_schedule;
    std::size_t segment = 15;
    std::optional<std::size_t> duration;
};

struct SweepSpec {
    std::optional<SetpointSource> setpoints;
    ControllerMode mode = ControllerMode::Nominal;
    std::size_t cap = 200;
    double offset_tolerance = 1e-4;
    std::vector<std::pair<std::size_t, PlantEvent>> events;
    std::size_t workers = 1;
};

struct GrnnSpec {
    GrnnPolicy policy;
    std::optional<std::filesystem::path> samples_file;
    std::optional<SweepSpec> training;
};

struct RunConfig {
    std::filesystem::path source;
    LinearModel model;
    DisturbanceModel dist;
    EstimatorGains gains;
    OperatingPoint op;
    OcpConfig ocp; // deviation coordinates
    Box x_abs;
    Box u_abs;
    PlantSpec plant;
    ScenarioSpec scenario;
    SweepSpec sweep;
    GrnnSpec grnn;
    std::filesystem::path output_dir = "out";
    std::string output_prefix = "run";
};

/// Parses a JSON config. An optional top-level "extends" names a base config
/// (relative to this file) that is merged underneath. Throws ConfigParse with
/// the line or field at fault.
[[nodiscard]] RunConfig load_config(const std::filesystem::path& path);
[[nodiscard]] RunConfig parse_config(const std::string& text,
                                     const std::filesystem::path& source = "<memory>");

struct ConditionResult {
    std::string name;
    bool pass = false;
    double value = 0.0;
    std::string detail;
};

struct ConditionReport {
    std::vector<ConditionResult> results;
    [[nodiscard]] bool all_pass() const;
};

/// Augmented observability rank, estimator spectral radius, steady estimator
/// nonsingularity and the offset-free null-space residual. Never throws for a
/// failing condition; each failure is reported.
[[nodiscard]] ConditionReport check_conditions(const RunConfig& cfg);

[[nodiscard]] ControllerSetup make_setup(const RunConfig& cfg);
[[nodiscard]] std::unique_ptr<Plant> make_plant(const RunConfig& cfg);

/// Absolute setpoint (n_z entries) to deviation coordinates.
[[nodiscard]] Vector to_deviation_setpoint(const RunConfig& cfg, const Vector& absolute);
[[nodiscard]] Vector to_absolute_setpoint(const RunConfig& cfg, const Vector& deviation);

/// Whether a CSTR setpoint (absolute units) has a physical equilibrium inside
/// the boxes and whether the controller target at that equilibrium's steady
/// disturbance estimate also sits inside them, both with a 2% margin.
[[nodiscard]] bool setpoint_admissible(const RunConfig& cfg, const ControllerSetup& setup,
                                       const Vector& setpoint);

/// Expands a setpoint source, filtering unreachable CSTR setpoints when asked.
[[nodiscard]] std::vector<Vector> resolve_setpoints(const RunConfig& cfg,
                                                    const SetpointSource& source);

/// The scenario with its schedule resolved to deviation setpoints.
[[nodiscard]] ScenarioConfig resolve_scenario(const RunConfig& cfg);

/// Sweep configuration for the given spec with setpoints resolved.
[[nodiscard]] SweepConfig resolve_sweep(const RunConfig& cfg, const SweepSpec& spec);

/// Runs a sweep on a fresh plant. With more than one worker, nominal sweeps
/// without events are split into contiguous chunks that each start from the
/// operating point on their own plant; results are concatenated in order.
[[nodiscard]] SweepResult run_sweep(const RunConfig& cfg, const SweepSpec& spec);

/// GRNN holding the last `policy.capacity` samples with sigma set by the policy.
[[nodiscard]] GrnnModel grnn_from_samples(const std::vector<HarvestedSample>& samples,
                                          std::size_t nz, std::size_t nd,
                                          const GrnnPolicy& policy);

struct TrainedGrnn {
    GrnnModel model;
    std::vector<HarvestedSample> samples; // empty when loaded from a file
};

/// GRNN from grnn.samples_file, else from the grnn.training sweep, else empty.
[[nodiscard]] std::optional<TrainedGrnn> build_grnn(const RunConfig& cfg);

/// Output directory, honouring the OFMPC_OUT_DIR environment override.
[[nodiscard]] std::filesystem::path output_directory(const RunConfig& cfg);

} // namespace ofmpc
