#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "ofmpc/estimator.hpp"
#include "ofmpc/grnn.hpp"
#include "ofmpc/ocp.hpp"
#include "ofmpc/plant.hpp"
#include "ofmpc/target.hpp"

namespace ofmpc {

enum class ControllerMode { Nominal, Learned };

[[nodiscard]] std::string_view to_string(ControllerMode mode) noexcept;
/// Accepts "nominal" or "learned"; throws ConfigParse otherwise.
[[nodiscard]] ControllerMode parse_mode(std::string_view text);

/// Everything the controller needs that does not change during a run.
struct ControllerSetup {
    LinearModel model;
    DisturbanceModel dist;
    Estimator estimator;
    TargetSolver target;
    OcpConfig ocp;
    PredictionMatrices pred;

    ControllerSetup(LinearModel model, DisturbanceModel dist, EstimatorGains gains, OcpConfig ocp);
};

/// Mutable per-run controller state.
struct ControllerState {
    AugmentedEstimate estimate;
    std::vector<std::size_t> warm_start;
    std::size_t time = 0;

    [[nodiscard]] static ControllerState initial(const ControllerSetup& setup);
};

struct StepRecord {
    std::size_t time = 0;
    Vector r;
    Vector y_p;
    Vector z_p;
    Vector u;
    Vector x_hat;
    Vector d_learned;
    Vector d_supp;
    Vector d_total;
    Vector x_bar;
    Vector u_bar;
    double objective = 0.0;
    std::size_t active_count = 0;
    bool steady = false;
    bool harvested = false;
};

/// One control interval: measure, look up the learned disturbance, solve the
/// target and the QP at the current estimate, advance the estimator with
/// (u, y_p) and step the plant. `grnn` is only read in learned mode.
/// Throws Infeasible (and other QP errors) without touching the plant.
[[nodiscard]] StepRecord control_step(const ControllerSetup& setup, ControllerState& state,
                                      Plant& plant, const Vector& r, ControllerMode mode,
                                      const GrnnModel* grnn);

struct SteadyDetection {
    std::size_t window = 5;
    double tol_y = 1e-5;
    double tol_u = 1e-5;
};

/// True when the last `window` records share the setpoint and consecutive
/// changes of y_p and u stay below the tolerances. Throws
/// PreconditionViolated for window < 2.
[[nodiscard]] bool detect_steady(const std::vector<StepRecord>& records,
                                 const SteadyDetection& cfg);

inline constexpr double kCrossCheckTolerance = 1e-4;

struct HarvestedSample {
    Vector r;
    Vector d_ss;
    Vector y_p;
    Vector u;
    double cross_check = 0.0; // |d_ss - d from the steady I/O solve|_inf
    std::size_t time = 0;
};

/// Sample from the last record: d_total in both modes, which equals the
/// nominal estimate in nominal mode and the combined disturbance in learned
/// mode. Throws CrossCheckFailed when it differs from
/// steady_state_from_io(y_p, u) by more than kCrossCheckTolerance.
[[nodiscard]] HarvestedSample harvest(const ControllerSetup& setup,
                                      const std::vector<StepRecord>& records);

struct ScheduleEntry {
    std::size_t start = 0;
    Vector r; // deviation coordinates, n_z entries
};

struct TimedEvent {
    std::size_t time = 0;
    PlantEvent event;
};

/// GRNN handling during a run. With `online`, each harvested sample is pushed
/// into the window and sigma is refitted.
struct GrnnPolicy {
    std::size_t capacity = 50;
    std::optional<double> sigma; // empty selects sigma automatically
    bool online = false;
};

/// Applies the sigma policy: fixed value, LOO selection with at least five
/// samples, otherwise GrnnModel::kDefaultSigma.
void refit_sigma(GrnnModel& model, const GrnnPolicy& policy);

struct ScenarioConfig {
    std::size_t duration = 0;
    std::vector<ScheduleEntry> schedule;
    ControllerMode mode = ControllerMode::Nominal;
    GrnnPolicy grnn;
    std::vector<TimedEvent> events;
    bool harvest = false;
    SteadyDetection steady;
    std::uint64_t seed = 0;

    /// Throws PreconditionViolated for unordered schedules or events.
    void validate(std::size_t nz) const;
};

struct ClosedLoopLog {
    ControllerMode mode = ControllerMode::Nominal;
    std::vector<StepRecord> records;
    /// Controlled variables z_p measured after the last interval of each segment.
    std::vector<Vector> segment_end_z;
    std::vector<std::size_t> segment_starts;
    std::vector<HarvestedSample> samples;
    std::size_t rejected_samples = 0;
    std::vector<std::size_t> event_times;
    std::optional<std::string> abort_reason;
};

/// Runs the schedule against the plant. Events take effect between control
/// intervals. A QP failure stops the run and is recorded in abort_reason.
[[nodiscard]] ClosedLoopLog run_scenario(const ControllerSetup& setup, Plant& plant,
                                         const ScenarioConfig& cfg,
                                         const GrnnModel* grnn = nullptr);

struct SweepConfig {
    std::vector<Vector> setpoints; // deviation coordinates
    ControllerMode mode = ControllerMode::Nominal;
    GrnnPolicy grnn;
    SteadyDetection steady;
    std::size_t cap = 200;          // maximum intervals per setpoint
    double offset_tolerance = 1e-4; // |e_z|_inf required before harvesting
    /// Events applied just before the setpoint with the given index.
    std::vector<std::pair<std::size_t, PlantEvent>> events;
};

struct SweepResult {
    std::vector<HarvestedSample> samples;
    std::vector<std::size_t> intervals; // per setpoint
    std::optional<GrnnModel> final_grnn;
};

/// Visits each setpoint in turn, holding it until steady, and harvests one
/// sample per setpoint. Throws SteadyNotReached naming the setpoint when the
/// cap is exceeded.
[[nodiscard]] SweepResult sweep(const ControllerSetup& setup, Plant& plant,
                                const SweepConfig& cfg, const GrnnModel* grnn = nullptr);

struct SegmentSummary {
    std::size_t start = 0;
    std::size_t end = 0;
    Vector r;
    Vector terminal_offset; // componentwise |e_z| at the segment end
    double ise = 0.0;
    double peak = 0.0;
    std::optional<std::size_t> settling_time; // relative to the segment start
};

struct MetricsSummary {
    std::vector<SegmentSummary> segments;
    double total_ise = 0.0;
    double max_terminal_offset = 0.0;
};

/// Per segment: terminal |e_z|, ISE = sum |z_p - r|^2 dt, peak |e_z|_inf and
/// the first time after which |e_z|_inf stays below settle_tol.
[[nodiscard]] MetricsSummary metrics(const ClosedLoopLog& log, double dt = 1.0,
                                     double settle_tol = 1e-3);

struct LyapunovTrace {
    std::vector<double> values;  // J*(k)
    std::vector<double> margins; // J*(k+1) - J*(k) + stage(k)
    std::optional<std::size_t> truncated_at;
};

/// Value function at each record's estimate against the target of the
/// learned disturbance, and the per-step decrease margins.
[[nodiscard]] LyapunovTrace lyapunov_trace(const ControllerSetup& setup, const ClosedLoopLog& log);

/// Uniform setpoints within per-component ranges (absolute units), seeded.
/// `accept` filters candidates; rejection sampling gives up after 1000
/// attempts per setpoint with PreconditionViolated.
[[nodiscard]] std::vector<Vector> random_setpoints(
    const std::vector<std::pair<double, double>>& ranges, std::size_t count, std::uint64_t seed,
    const std::function<bool(const Vector&)>& accept = {});

/// Whether the CSTR has an equilibrium at setpoint (c, T) whose inputs and
/// level sit inside the boxes (absolute units) with the given margin fraction.
[[nodiscard]] bool cstr_setpoint_reachable(const CstrParams& params, const Vector& setpoint,
                                           const Box& x_abs, const Box& u_abs,
                                           double margin = 0.02);

/// Calls task(0..count-1) on up to `workers` threads; each task owns its own
/// output slot. The first exception thrown by a task is rethrown after all
/// threads join.
void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task);

} // namespace ofmpc
