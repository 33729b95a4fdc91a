#include "ofmpc/closed_loop.hpp"

#include <algorithm>
#include <atomic>
#include <exception>
#include <mutex>
#include <random>
#include <thread>

namespace ofmpc {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

double inf_norm(const Vector& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

bool within(double v, double lo, double hi, double margin) {
    const double pad = margin * (hi - lo);
    return v >= lo + pad && v <= hi - pad;
}

} // namespace

std::string_view to_string(ControllerMode mode) noexcept {
    return mode == ControllerMode::Nominal ? "nominal" : "learned";
}

ControllerMode parse_mode(std::string_view text) {
    if (text == "nominal") {
        return ControllerMode::Nominal;
    }
    if (text == "learned") {
        return ControllerMode::Learned;
    }
    throw Error(ErrorCode::ConfigParse,
                "mode must be 'nominal' or 'learned', got '" + std::string(text) + "'");
}

ControllerSetup::ControllerSetup(LinearModel model_in, DisturbanceModel dist_in,
                                 EstimatorGains gains, OcpConfig ocp_in)
    : model(std::move(model_in)),
      dist(std::move(dist_in)),
      estimator(model, dist, std::move(gains)),
      target(model, dist),
      ocp(std::move(ocp_in)),
      pred(build_prediction(model, dist, ocp)) {
    ocp.validate(model.nx(), model.nu());
}

ControllerState ControllerState::initial(const ControllerSetup& setup) {
    ControllerState state;
    state.estimate = AugmentedEstimate::zero(setup.model.nx(), setup.dist.nd());
    return state;
}

StepRecord control_step(const ControllerSetup& setup, ControllerState& state, Plant& plant,
                        const Vector& r, ControllerMode mode, const GrnnModel* grnn) {
    const Vector y = plant.measure();
    Vector d_learned = Vector::Zero(idx(setup.dist.nd()));
    if (mode == ControllerMode::Learned) {
        if (grnn == nullptr) {
            throw Error(ErrorCode::PreconditionViolated, "learned mode needs a GRNN model");
        }
        d_learned = grnn->predict(r);
    }
    const CombinedDisturbance dist = CombinedDisturbance::combine(d_learned, state.estimate.d_hat);
    const TargetPair tgt = setup.target.solve(dist.d_total, r);
    const CondensedQp qp = condense(setup.pred, setup.ocp, state.estimate.x_hat, dist.d_total, tgt);
    const QpSolution sol = solve_qp(qp, state.warm_start);
    const Vector u = sol.u_seq.head(idx(setup.model.nu()));

    StepRecord rec;
    rec.time = state.time;
    rec.r = r;
    rec.y_p = y;
    rec.z_p = setup.model.H() * y;
    rec.u = u;
    rec.x_hat = state.estimate.x_hat;
    rec.d_learned = dist.d_learned;
    rec.d_supp = dist.d_supp;
    rec.d_total = dist.d_total;
    rec.x_bar = tgt.x_bar;
    rec.u_bar = tgt.u_bar;
    rec.objective = sol.objective;
    rec.active_count = sol.active_set.size();

    state.warm_start = sol.active_set;
    state.estimate = mode == ControllerMode::Learned
                         ? setup.estimator.learned_step(state.estimate, u, y, d_learned)
                         : setup.estimator.nominal_step(state.estimate, u, y);
    plant.step(u, setup.model.dt());
    ++state.time;
    return rec;
}

bool detect_steady(const std::vector<StepRecord>& records, const SteadyDetection& cfg) {
    if (cfg.window < 2) {
        throw Error(ErrorCode::PreconditionViolated, "steady detection window must be at least 2");
    }
    if (records.size() < cfg.window) {
        return false;
    }
    const std::size_t first = records.size() - cfg.window;
    for (std::size_t k = first + 1; k < records.size(); ++k) {
        const StepRecord& a = records[k - 1];
        const StepRecord& b = records[k];
        if (a.r != b.r) {
            return false;
        }
        if (inf_norm(b.y_p - a.y_p) >= cfg.tol_y || inf_norm(b.u - a.u) >= cfg.tol_u) {
            return false;
        }
    }
    return true;
}

HarvestedSample harvest(const ControllerSetup& setup, const std::vector<StepRecord>& records) {
    if (records.empty()) {
        throw Error(ErrorCode::InsufficientData, "nothing to harvest from an empty log");
    }
    const StepRecord& last = records.back();
    const AugmentedEstimate io = setup.estimator.steady_state_from_io(last.y_p, last.u);
    HarvestedSample sample;
    sample.r = last.r;
    sample.d_ss = last.d_total;
    sample.y_p = last.y_p;
    sample.u = last.u;
    sample.time = last.time;
    sample.cross_check = inf_norm(io.d_hat - last.d_total);
    if (!(sample.cross_check <= kCrossCheckTolerance)) {
        throw Error(ErrorCode::CrossCheckFailed,
                    "steady I/O disturbance differs by " + std::to_string(sample.cross_check));
    }
    return sample;
}

void refit_sigma(GrnnModel& model, const GrnnPolicy& policy) {
    if (policy.sigma) {
        model.set_sigma(*policy.sigma);
    } else if (model.size() >= 5) {
        model.set_sigma(select_sigma(model).sigma);
    } else {
        model.set_sigma(GrnnModel::kDefaultSigma);
    }
}

void ScenarioConfig::validate(std::size_t nz) const {
    if (duration > 0 && (schedule.empty() || schedule.front().start != 0)) {
        throw Error(ErrorCode::PreconditionViolated, "schedule must start at time 0");
    }
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        if (schedule[i].r.size() != idx(nz)) {
            throw Error(ErrorCode::DimensionMismatch, "setpoint has wrong dimension");
        }
        if (i > 0 && schedule[i].start <= schedule[i - 1].start) {
            throw Error(ErrorCode::PreconditionViolated, "schedule times must strictly increase");
        }
    }
    if (!schedule.empty() && schedule.back().start >= duration && duration > 0) {
        throw Error(ErrorCode::PreconditionViolated, "duration does not cover the schedule");
    }
    for (std::size_t i = 1; i < events.size(); ++i) {
        if (events[i].time < events[i - 1].time) {
            throw Error(ErrorCode::PreconditionViolated, "events must be ordered by time");
        }
    }
}

ClosedLoopLog run_scenario(const ControllerSetup& setup, Plant& plant, const ScenarioConfig& cfg,
                           const GrnnModel* grnn) {
    cfg.validate(setup.model.nz());
    ClosedLoopLog log;
    log.mode = cfg.mode;

    std::optional<GrnnModel> working;
    if (cfg.mode == ControllerMode::Learned) {
        working = grnn != nullptr ? *grnn
                                  : GrnnModel(setup.model.nz(), setup.dist.nd(), cfg.grnn.capacity);
    }
    ControllerState state = ControllerState::initial(setup);
    std::size_t segment = 0;
    std::size_t next_event = 0;
    bool harvested_here = false;

    for (std::size_t t = 0; t < cfg.duration; ++t) {
        while (next_event < cfg.events.size() && cfg.events[next_event].time <= t) {
            plant.apply_event(cfg.events[next_event].event);
            log.event_times.push_back(t);
            ++next_event;
        }
        if (t == 0) {
            log.segment_starts.push_back(0);
        } else if (segment + 1 < cfg.schedule.size() && cfg.schedule[segment + 1].start == t) {
            ++segment;
            harvested_here = false;
            log.segment_starts.push_back(t);
        }
        const Vector& r = cfg.schedule[segment].r;

        try {
            log.records.push_back(control_step(setup, state, plant, r, cfg.mode,
                                               working ? &*working : nullptr));
        } catch (const Error& e) {
            log.abort_reason = "time " + std::to_string(t) + ": " + e.what();
            log.segment_end_z.push_back(setup.model.H() * plant.measure());
            break;
        }
        StepRecord& rec = log.records.back();
        rec.steady = detect_steady(log.records, cfg.steady);
        if (cfg.harvest && rec.steady && !harvested_here) {
            try {
                HarvestedSample sample = harvest(setup, log.records);
                rec.harvested = true;
                harvested_here = true;
                if (working && cfg.grnn.online) {
                    working->add_sample(sample.r, sample.d_ss);
                    refit_sigma(*working, cfg.grnn);
                }
                log.samples.push_back(std::move(sample));
            } catch (const Error& e) {
                if (e.code() != ErrorCode::CrossCheckFailed) {
                    throw;
                }
                ++log.rejected_samples;
            }
        }
        const bool segment_ends = t + 1 == cfg.duration ||
                                  (segment + 1 < cfg.schedule.size() &&
                                   cfg.schedule[segment + 1].start == t + 1);
        if (segment_ends) {
            log.segment_end_z.push_back(setup.model.H() * plant.measure());
        }
    }
    return log;
}

SweepResult sweep(const ControllerSetup& setup, Plant& plant, const SweepConfig& cfg,
                  const GrnnModel* grnn) {
    SweepResult result;
    std::optional<GrnnModel> working;
    if (cfg.mode == ControllerMode::Learned) {
        working = grnn != nullptr ? *grnn
                                  : GrnnModel(setup.model.nz(), setup.dist.nd(), cfg.grnn.capacity);
    }
    ControllerState state = ControllerState::initial(setup);
    std::vector<StepRecord> tail;

    for (std::size_t i = 0; i < cfg.setpoints.size(); ++i) {
        for (const auto& [index, event] : cfg.events) {
            if (index == i) {
                plant.apply_event(event);
            }
        }
        const Vector& r = cfg.setpoints[i];
        tail.clear();
        std::size_t n = 0;
        while (true) {
            if (n >= cfg.cap) {
                std::string where;
                for (Eigen::Index j = 0; j < r.size(); ++j) {
                    where += (j ? ", " : "") + std::to_string(r(j));
                }
                throw Error(ErrorCode::SteadyNotReached,
                            "setpoint " + std::to_string(i) + " (" + where + ") after " +
                                std::to_string(cfg.cap) + " intervals");
            }
            tail.push_back(control_step(setup, state, plant, r, cfg.mode,
                                        working ? &*working : nullptr));
            ++n;
            if (tail.size() > cfg.steady.window) {
                tail.erase(tail.begin());
            }
            const StepRecord& rec = tail.back();
            if (!detect_steady(tail, cfg.steady) ||
                inf_norm(rec.z_p - rec.r) > cfg.offset_tolerance) {
                continue;
            }
            try {
                HarvestedSample sample = harvest(setup, tail);
                if (working && cfg.grnn.online) {
                    working->add_sample(sample.r, sample.d_ss);
                    refit_sigma(*working, cfg.grnn);
                }
                result.samples.push_back(std::move(sample));
                break;
            } catch (const Error& e) {
                if (e.code() != ErrorCode::CrossCheckFailed) {
                    throw;
                }
            }
        }
        result.intervals.push_back(n);
    }
    result.final_grnn = working;
    return result;
}

MetricsSummary metrics(const ClosedLoopLog& log, double dt, double settle_tol) {
    MetricsSummary out;
    const std::size_t n_seg = log.segment_starts.size();
    for (std::size_t s = 0; s < n_seg; ++s) {
        SegmentSummary seg;
        seg.start = log.segment_starts[s];
        const std::size_t first = seg.start - log.segment_starts.front();
        const std::size_t last =
            s + 1 < n_seg ? log.segment_starts[s + 1] - log.segment_starts.front() : log.records.size();
        if (first >= log.records.size() || first >= last) {
            break;
        }
        seg.end = seg.start + (last - first);
        seg.r = log.records[first].r;
        std::optional<std::size_t> last_violation;
        for (std::size_t k = first; k < last; ++k) {
            const Vector e = log.records[k].z_p - log.records[k].r;
            seg.ise += e.squaredNorm() * dt;
            seg.peak = std::max(seg.peak, inf_norm(e));
            if (inf_norm(e) > settle_tol) {
                last_violation = k - first;
            }
        }
        // Terminal offset from the measurement after the last interval.
        const Vector terminal = s < log.segment_end_z.size()
                                    ? Vector((log.segment_end_z[s] - seg.r).cwiseAbs())
                                    : Vector((log.records[last - 1].z_p - seg.r).cwiseAbs());
        seg.terminal_offset = terminal;
        const bool settled_at_end = inf_norm(terminal) <= settle_tol;
        if (settled_at_end) {
            seg.settling_time = last_violation ? *last_violation + 1 : 0;
        }
        out.total_ise += seg.ise;
        out.max_terminal_offset = std::max(out.max_terminal_offset, inf_norm(terminal));
        out.segments.push_back(std::move(seg));
    }
    return out;
}

LyapunovTrace lyapunov_trace(const ControllerSetup& setup, const ClosedLoopLog& log) {
    LyapunovTrace trace;
    std::vector<TargetPair> targets;
    for (std::size_t k = 0; k < log.records.size(); ++k) {
        const StepRecord& rec = log.records[k];
        const TargetPair tgt = setup.target.solve(rec.d_learned, rec.r);
        try {
            trace.values.push_back(
                value_function(setup.pred, setup.ocp, rec.x_hat, rec.d_learned, tgt));
        } catch (const Error& e) {
            if (e.code() != ErrorCode::Infeasible) {
                throw;
            }
            trace.truncated_at = k;
            break;
        }
        targets.push_back(tgt);
    }
    for (std::size_t k = 0; k + 1 < trace.values.size(); ++k) {
        const StepRecord& rec = log.records[k];
        const Vector dx = rec.x_hat - targets[k].x_bar;
        const Vector du = rec.u - targets[k].u_bar;
        const double stage =
            dx.dot(setup.ocp.Qx.cwiseProduct(dx)) + du.dot(setup.ocp.Qu.cwiseProduct(du));
        trace.margins.push_back(trace.values[k + 1] - trace.values[k] + stage);
    }
    return trace;
}

std::vector<Vector> random_setpoints(const std::vector<std::pair<double, double>>& ranges,
                                     std::size_t count, std::uint64_t seed,
                                     const std::function<bool(const Vector&)>& accept) {
    std::mt19937_64 gen(seed);
    std::vector<Vector> out;
    constexpr std::size_t kAttempts = 1000;
    for (std::size_t i = 0; i < count; ++i) {
        bool found = false;
        for (std::size_t attempt = 0; attempt < kAttempts && !found; ++attempt) {
            Vector v(idx(ranges.size()));
            for (std::size_t j = 0; j < ranges.size(); ++j) {
                const auto [lo, hi] = ranges[j];
                v(idx(j)) = lo == hi ? lo : std::uniform_real_distribution<double>(lo, hi)(gen);
            }
            if (!accept || accept(v)) {
                out.push_back(std::move(v));
                found = true;
            }
        }
        if (!found) {
            throw Error(ErrorCode::PreconditionViolated,
                        "no acceptable setpoint found in the requested ranges");
        }
    }
    return out;
}

bool cstr_setpoint_reachable(const CstrParams& params, const Vector& setpoint, const Box& x_abs,
                             const Box& u_abs, double margin) {
    if (setpoint.size() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "CSTR setpoint is (c, T)");
    }
    try {
        const SteadyInput s = steady_input_for(params, setpoint(0), setpoint(1));
        return within(s.Tc, u_abs.lo(0), u_abs.hi(0), margin) &&
               within(s.F, u_abs.lo(1), u_abs.hi(1), margin) &&
               within(s.h, x_abs.lo(2), x_abs.hi(2), margin);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::NonPhysicalState) {
            return false;
        }
        throw;
    }
}

void parallel_for(std::size_t count, std::size_t workers,
                  const std::function<void(std::size_t)>& task) {
    workers = std::max<std::size_t>(1, std::min(workers, count));
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) {
                return;
            }
            try {
                task(i);
            } catch (...) {
                const std::lock_guard<std::mutex> lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
            }
        }
    };
    std::vector<std::thread> threads;
    for (std::size_t w = 0; w < workers; ++w) {
        threads.emplace_back(worker);
    }
    for (auto& th : threads) {
        th.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

} // namespace ofmpc
