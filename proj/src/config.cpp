#include "ofmpc/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include <json.hpp>

namespace ofmpc {

namespace {

using json = nlohmann::json;

constexpr double kInf = std::numeric_limits<double>::infinity();

Error field_error(const std::string& field, const std::string& what) {
    return Error(ErrorCode::ConfigParse, "field '" + field + "': " + what);
}

std::string join(const std::string& parent, const std::string& key) {
    return parent.empty() ? key : parent + "." + key;
}

const json& child(const json& j, const std::string& parent, const std::string& key) {
    if (!j.is_object() || !j.contains(key)) {
        throw field_error(join(parent, key), "missing");
    }
    return j.at(key);
}

double as_number(const json& j, const std::string& field) {
    if (j.is_null()) {
        throw field_error(field, "expected a number, found null");
    }
    if (!j.is_number()) {
        throw field_error(field, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw field_error(field, "must be finite");
    }
    return v;
}

// Bound entries may be null, meaning unbounded.
double as_bound(const json& j, const std::string& field, double if_null) {
    return j.is_null() ? if_null : as_number(j, field);
}

std::size_t as_count(const json& j, const std::string& field) {
    if (!j.is_number_integer() || j.get<long long>() < 0) {
        throw field_error(field, "expected a non-negative integer");
    }
    return j.get<std::size_t>();
}

bool as_bool(const json& j, const std::string& field) {
    if (!j.is_boolean()) {
        throw field_error(field, "expected true or false");
    }
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& field) {
    if (!j.is_string()) {
        throw field_error(field, "expected a string");
    }
    return j.get<std::string>();
}

Vector as_vector(const json& j, const std::string& field) {
    if (!j.is_array()) {
        throw field_error(field, "expected an array of numbers");
    }
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        v(static_cast<Eigen::Index>(i)) = as_number(j[i], field + "[" + std::to_string(i) + "]");
    }
    return v;
}

Matrix as_matrix(const json& j, const std::string& field) {
    if (!j.is_array() || j.empty()) {
        throw field_error(field, "expected a non-empty array of rows");
    }
    const std::size_t rows = j.size();
    if (!j[0].is_array()) {
        throw field_error(field, "expected an array of rows");
    }
    const std::size_t cols = j[0].size();
    Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const std::string row_field = field + "[" + std::to_string(r) + "]";
        if (!j[r].is_array() || j[r].size() != cols) {
            throw field_error(row_field, "expected " + std::to_string(cols) + " entries");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
                as_number(j[r][c], row_field + "[" + std::to_string(c) + "]");
        }
    }
    return m;
}

Vector vector_field(const json& j, const std::string& parent, const std::string& key) {
    return as_vector(child(j, parent, key), join(parent, key));
}

Matrix matrix_field(const json& j, const std::string& parent, const std::string& key) {
    return as_matrix(child(j, parent, key), join(parent, key));
}

Box box_field(const json& j, const std::string& field, std::size_t n) {
    if (!j.is_object()) {
        throw field_error(field, "expected an object with 'lo' and 'hi'");
    }
    Box box{Vector(static_cast<Eigen::Index>(n)), Vector(static_cast<Eigen::Index>(n))};
    for (const char* side : {"lo", "hi"}) {
        const json& arr = child(j, field, side);
        const std::string f = join(field, side);
        if (!arr.is_array() || arr.size() != n) {
            throw field_error(f, "expected " + std::to_string(n) + " entries");
        }
        Vector& v = std::string(side) == "lo" ? box.lo : box.hi;
        for (std::size_t i = 0; i < n; ++i) {
            v(static_cast<Eigen::Index>(i)) =
                as_bound(arr[i], f + "[" + std::to_string(i) + "]", side[0] == 'l' ? -kInf : kInf);
        }
    }
    return box;
}

SetpointSource source_field(const json& j, const std::string& field) {
    if (!j.is_object()) {
        throw field_error(field, "expected an object with 'points', 'linspace' or 'random'");
    }
    SetpointSource src;
    auto read_ranges = [&](const json& spec, const std::string& f) {
        const json& arr = child(spec, f, "ranges");
        if (!arr.is_array() || arr.empty()) {
            throw field_error(join(f, "ranges"), "expected [[lo, hi], ...]");
        }
        for (std::size_t i = 0; i < arr.size(); ++i) {
            const std::string rf = join(f, "ranges") + "[" + std::to_string(i) + "]";
            if (!arr[i].is_array() || arr[i].size() != 2) {
                throw field_error(rf, "expected [lo, hi]");
            }
            const double lo = as_number(arr[i][0], rf);
            const double hi = as_number(arr[i][1], rf);
            if (lo > hi) {
                throw field_error(rf, "lo exceeds hi");
            }
            src.ranges.emplace_back(lo, hi);
        }
    };
    if (j.contains("points")) {
        src.kind = SetpointSource::Kind::Points;
        const json& pts = j.at("points");
        if (!pts.is_array()) {
            throw field_error(join(field, "points"), "expected an array of setpoints");
        }
        for (std::size_t i = 0; i < pts.size(); ++i) {
            src.points.push_back(as_vector(pts[i], join(field, "points") + "[" + std::to_string(i) + "]"));
        }
    } else if (j.contains("linspace")) {
        src.kind = SetpointSource::Kind::Linspace;
        const std::string f = join(field, "linspace");
        src.count = as_count(child(j, field, "linspace").value("count", json()), join(f, "count"));
        read_ranges(j.at("linspace"), f);
    } else if (j.contains("random")) {
        src.kind = SetpointSource::Kind::Random;
        const std::string f = join(field, "random");
        const json& spec = j.at("random");
        src.count = as_count(child(spec, f, "count"), join(f, "count"));
        src.seed = spec.contains("seed") ? as_count(spec.at("seed"), join(f, "seed")) : 0;
        read_ranges(spec, f);
    } else {
        throw field_error(field, "expected one of 'points', 'linspace', 'random'");
    }
    if (j.contains("reachable_only")) {
        src.reachable_only = as_bool(j.at("reachable_only"), join(field, "reachable_only"));
    }
    if (j.contains("repeat")) {
        src.repeat = as_count(j.at("repeat"), join(field, "repeat"));
        if (src.repeat == 0) {
            throw field_error(join(field, "repeat"), "must be at least 1");
        }
    }
    return src;
}

PlantEvent event_field(const json& j, const std::string& field) {
    return {as_string(child(j, field, "parameter"), join(field, "parameter")),
            j.contains("value") ? as_number(j.at("value"), join(field, "value")) : 0.0};
}

SteadyDetection steady_field(const json& j, const std::string& field) {
    SteadyDetection s;
    if (j.contains("window")) {
        s.window = as_count(j.at("window"), join(field, "window"));
    }
    if (j.contains("tol_y")) {
        s.tol_y = as_number(j.at("tol_y"), join(field, "tol_y"));
    }
    if (j.contains("tol_u")) {
        s.tol_u = as_number(j.at("tol_u"), join(field, "tol_u"));
    }
    return s;
}

SweepSpec sweep_field(const json& j, const std::string& field) {
    SweepSpec s;
    if (!j.is_object()) {
        throw field_error(field, "expected an object");
    }
    if (j.contains("setpoints")) {
        s.setpoints = source_field(j.at("setpoints"), join(field, "setpoints"));
    }
    if (j.contains("mode")) {
        s.mode = parse_mode(as_string(j.at("mode"), join(field, "mode")));
    }
    if (j.contains("cap")) {
        s.cap = as_count(j.at("cap"), join(field, "cap"));
    }
    if (j.contains("offset_tolerance")) {
        s.offset_tolerance = as_number(j.at("offset_tolerance"), join(field, "offset_tolerance"));
    }
    if (j.contains("workers")) {
        s.workers = std::max<std::size_t>(1, as_count(j.at("workers"), join(field, "workers")));
    }
    if (j.contains("events")) {
        const json& evs = j.at("events");
        for (std::size_t i = 0; i < evs.size(); ++i) {
            const std::string f = join(field, "events") + "[" + std::to_string(i) + "]";
            s.events.emplace_back(as_count(child(evs[i], f, "before"), join(f, "before")),
                                  event_field(evs[i], f));
        }
    }
    return s;
}

CstrParams cstr_field(const json& j, const std::string& field) {
    CstrParams p;
    const std::pair<const char*, double*> entries[] = {
        {"F0", &p.F0}, {"T0", &p.T0},   {"c0", &p.c0},   {"r", &p.r},
        {"k0", &p.k0}, {"E_over_R", &p.E_over_R}, {"U", &p.U}, {"rho", &p.rho},
        {"Cp", &p.Cp}, {"dH", &p.dH},   {"outlet_factor", &p.outlet_factor}};
    for (const auto& [key, target] : entries) {
        if (j.contains(key)) {
            *target = as_number(j.at(key), join(field, key));
        }
    }
    if (j.contains("substeps")) {
        p.substeps = static_cast<int>(as_count(j.at("substeps"), join(field, "substeps")));
    }
    if (j.contains("mismatch")) {
        const std::string m = as_string(j.at("mismatch"), join(field, "mismatch"));
        if (m == "outlet_flow") {
            p.mismatch = MismatchKind::OutletFlow;
        } else if (m == "outlet_concentration") {
            p.mismatch = MismatchKind::OutletConcentration;
        } else {
            throw field_error(join(field, "mismatch"),
                              "expected 'outlet_flow' or 'outlet_concentration'");
        }
    }
    try {
        p.validate();
    } catch (const Error& e) {
        throw field_error(field, e.what());
    }
    return p;
}

std::size_t line_of(const std::string& text, std::size_t byte) {
    const std::size_t end = std::min(byte, text.size());
    return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(end), '\n'));
}

json parse_json(const std::string& text, const std::filesystem::path& source) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw Error(ErrorCode::ConfigParse, source.string() + ": line " +
                                                std::to_string(line_of(text, e.byte)) + ": " +
                                                e.what());
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::Io, "cannot open " + path.string());
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

// Resolves "extends" chains, merging each file over its base.
json load_merged(const std::filesystem::path& path, std::set<std::filesystem::path>& seen) {
    const auto canonical = std::filesystem::weakly_canonical(path);
    if (!seen.insert(canonical).second) {
        throw Error(ErrorCode::ConfigParse, "circular 'extends' at " + path.string());
    }
    json j = parse_json(read_file(path), path);
    if (j.contains("extends")) {
        const std::filesystem::path base = path.parent_path() / as_string(j.at("extends"), "extends");
        json merged = load_merged(base, seen);
        j.erase("extends");
        merged.merge_patch(j);
        return merged;
    }
    return j;
}

RunConfig build(const json& j, const std::filesystem::path& source) {
    if (!j.is_object()) {
        throw Error(ErrorCode::ConfigParse, "top level must be an object");
    }
    const json& jm = child(j, "", "model");
    LinearModel model = [&] {
        const double dt = jm.contains("dt") ? as_number(jm.at("dt"), "model.dt") : 1.0;
        try {
            return LinearModel(matrix_field(jm, "model", "A"), matrix_field(jm, "model", "B"),
                               matrix_field(jm, "model", "C"), matrix_field(jm, "model", "H"), dt);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ConfigParse) {
                throw;
            }
            throw field_error("model", e.what());
        }
    }();
    const json& jd = child(j, "", "disturbance");
    DisturbanceModel dist = [&] {
        try {
            return DisturbanceModel(matrix_field(jd, "disturbance", "Bd"),
                                    matrix_field(jd, "disturbance", "Cd"));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::ConfigParse) {
                throw;
            }
            throw field_error("disturbance", e.what());
        }
    }();

    const json& jg = child(j, "", "gains");
    EstimatorGains gains{matrix_field(jg, "gains", "Lx"), matrix_field(jg, "gains", "Ld")};
    const std::string convention =
        jg.contains("convention") ? as_string(jg.at("convention"), "gains.convention") : "estimator";
    if (convention == "innovation") {
        // x+ = ... + L (y - y_hat) is the negated form of the internal convention.
        gains.Lx = -gains.Lx;
        gains.Ld = -gains.Ld;
    } else if (convention != "estimator") {
        throw field_error("gains.convention", "expected 'estimator' or 'innovation'");
    }

    const std::size_t nx = model.nx();
    const std::size_t nu = model.nu();
    const json& jo = child(j, "", "operating_point");
    OperatingPoint op{vector_field(jo, "operating_point", "x"),
                      vector_field(jo, "operating_point", "u")};
    if (op.x_ss.size() != static_cast<Eigen::Index>(nx) ||
        op.u_ss.size() != static_cast<Eigen::Index>(nu)) {
        throw field_error("operating_point", "expected n_x state and n_u input values");
    }

    RunConfig cfg{source, std::move(model), std::move(dist), std::move(gains), std::move(op), {}, {}, {}, {}, {}, {}, {}, "out", "run"};

    const json& jc = child(j, "", "ocp");
    cfg.ocp.N = as_count(child(jc, "ocp", "N"), "ocp.N");
    cfg.ocp.Qx = vector_field(jc, "ocp", "Qx");
    cfg.ocp.Qu = vector_field(jc, "ocp", "Qu");
    cfg.ocp.QxN = jc.contains("QxN") ? vector_field(jc, "ocp", "QxN") : cfg.ocp.Qx;
    cfg.x_abs = jc.contains("x_bounds") ? box_field(jc.at("x_bounds"), "ocp.x_bounds", nx)
                                        : Box{Vector::Constant(static_cast<Eigen::Index>(nx), -kInf),
                                              Vector::Constant(static_cast<Eigen::Index>(nx), kInf)};
    cfg.u_abs = jc.contains("u_bounds") ? box_field(jc.at("u_bounds"), "ocp.u_bounds", nu)
                                        : Box{Vector::Constant(static_cast<Eigen::Index>(nu), -kInf),
                                              Vector::Constant(static_cast<Eigen::Index>(nu), kInf)};
    cfg.ocp.x_bounds = {cfg.x_abs.lo - cfg.op.x_ss, cfg.x_abs.hi - cfg.op.x_ss};
    cfg.ocp.u_bounds = {cfg.u_abs.lo - cfg.op.u_ss, cfg.u_abs.hi - cfg.op.u_ss};
    if (jc.contains("terminal_rho") && !jc.at("terminal_rho").is_null()) {
        cfg.ocp.terminal_rho = as_number(jc.at("terminal_rho"), "ocp.terminal_rho");
    }
    try {
        cfg.ocp.validate(nx, nu);
    } catch (const Error& e) {
        throw field_error("ocp", e.what());
    }

    if (j.contains("plant")) {
        const json& jp = j.at("plant");
        const std::string type = jp.contains("type") ? as_string(jp.at("type"), "plant.type") : "cstr";
        if (type == "cstr") {
            cfg.plant.kind = PlantSpec::Kind::Cstr;
            cfg.plant.cstr = cstr_field(jp, "plant");
        } else if (type == "linear") {
            cfg.plant.kind = PlantSpec::Kind::Linear;
            cfg.plant.linear_disturbance =
                jp.contains("disturbance") ? vector_field(jp, "plant", "disturbance")
                                           : Vector(Vector::Zero(static_cast<Eigen::Index>(cfg.dist.nd())));
            if (cfg.plant.linear_disturbance.size() != static_cast<Eigen::Index>(cfg.dist.nd())) {
                throw field_error("plant.disturbance", "expected n_d entries");
            }
        } else {
            throw field_error("plant.type", "expected 'cstr' or 'linear'");
        }
    }

    if (j.contains("scenario")) {
        const json& js = j.at("scenario");
        ScenarioSpec& s = cfg.scenario;
        if (js.contains("mode")) {
            s.cfg.mode = parse_mode(as_string(js.at("mode"), "scenario.mode"));
        }
        if (js.contains("segment")) {
            s.segment = as_count(js.at("segment"), "scenario.segment");
        }
        if (js.contains("duration")) {
            s.duration = as_count(js.at("duration"), "scenario.duration");
        }
        if (js.contains("schedule")) {
            const json& sch = js.at("schedule");
            for (std::size_t i = 0; i < sch.size(); ++i) {
                const std::string f = "scenario.schedule[" + std::to_string(i) + "]";
                s.fixed_schedule.emplace_back(as_count(child(sch[i], f, "start"), join(f, "start")),
                                              vector_field(sch[i], f, "r"));
            }
        }
        if (js.contains("random_schedule")) {
            s.random_schedule = source_field(js.at("random_schedule"), "scenario.random_schedule");
        }
        if (js.contains("events")) {
            const json& evs = js.at("events");
            for (std::size_t i = 0; i < evs.size(); ++i) {
                const std::string f = "scenario.events[" + std::to_string(i) + "]";
                s.cfg.events.push_back({as_count(child(evs[i], f, "time"), join(f, "time")),
                                        event_field(evs[i], f)});
            }
        }
        if (js.contains("harvest")) {
            s.cfg.harvest = as_bool(js.at("harvest"), "scenario.harvest");
        }
        if (js.contains("steady")) {
            s.cfg.steady = steady_field(js.at("steady"), "scenario.steady");
        }
        if (js.contains("seed")) {
            s.cfg.seed = as_count(js.at("seed"), "scenario.seed");
        }
    }

    if (j.contains("sweep")) {
        cfg.sweep = sweep_field(j.at("sweep"), "sweep");
    }

    if (j.contains("grnn")) {
        const json& jn = j.at("grnn");
        GrnnSpec& g = cfg.grnn;
        if (jn.contains("capacity")) {
            g.policy.capacity = as_count(jn.at("capacity"), "grnn.capacity");
        }
        if (jn.contains("sigma")) {
            const json& sg = jn.at("sigma");
            if (sg.is_string()) {
                if (sg.get<std::string>() != "auto") {
                    throw field_error("grnn.sigma", "expected 'auto' or a positive number");
                }
            } else {
                g.policy.sigma = as_number(sg, "grnn.sigma");
                if (!(*g.policy.sigma > 0.0)) {
                    throw field_error("grnn.sigma", "must be positive");
                }
            }
        }
        if (jn.contains("online")) {
            g.policy.online = as_bool(jn.at("online"), "grnn.online");
        }
        if (jn.contains("samples_file")) {
            g.samples_file =
                source.parent_path() / as_string(jn.at("samples_file"), "grnn.samples_file");
        }
        if (jn.contains("training")) {
            g.training = sweep_field(jn.at("training"), "grnn.training");
        }
    }
    cfg.scenario.cfg.grnn = cfg.grnn.policy;

    if (j.contains("output")) {
        const json& jo2 = j.at("output");
        if (jo2.contains("dir")) {
            cfg.output_dir = as_string(jo2.at("dir"), "output.dir");
        }
        if (jo2.contains("prefix")) {
            cfg.output_prefix = as_string(jo2.at("prefix"), "output.prefix");
        }
    }
    return cfg;
}

} // namespace

RunConfig parse_config(const std::string& text, const std::filesystem::path& source) {
    return build(parse_json(text, source), source);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::set<std::filesystem::path> seen;
    return build(load_merged(path, seen), path);
}

bool ConditionReport::all_pass() const {
    return std::all_of(results.begin(), results.end(), [](const auto& r) { return r.pass; });
}

ConditionReport check_conditions(const RunConfig& cfg) {
    ConditionReport report;
    const ObservabilityReport obs = check_augmented_observability(cfg.model, cfg.dist);
    report.results.push_back({"augmented_observability", obs.holds, static_cast<double>(obs.rank),
                              "rank " + std::to_string(obs.rank) + ", required " +
                                  std::to_string(obs.required)});

    double rho = std::numeric_limits<double>::infinity();
    try {
        rho = numerics::spectral_radius(estimator_error_matrix(cfg.model, cfg.dist, cfg.gains));
        report.results.push_back(
            {"estimator_stability", rho < 1.0, rho, "spectral radius of the error matrix"});
    } catch (const Error& e) {
        report.results.push_back({"estimator_stability", false, rho, e.what()});
    }

    if (rho < 1.0) {
        const Matrix m = steady_estimator_matrix(cfg.model, cfg.dist, cfg.gains);
        const Eigen::JacobiSVD<Matrix> svd(m);
        const double smin = svd.singularValues().tail(1)(0);
        const bool ok = check_lemma1_nonsingularity(cfg.model, cfg.dist, cfg.gains);
        report.results.push_back(
            {"steady_estimator_nonsingular", ok, smin, "smallest singular value"});
    } else {
        report.results.push_back({"steady_estimator_nonsingular", false, 0.0,
                                  "not evaluated: estimator is not stable"});
    }

    try {
        const PredictionMatrices pred = build_prediction(cfg.model, cfg.dist, cfg.ocp);
        const Matrix k_un = unconstrained_gain(pred, cfg.ocp);
        const OffsetFreeReport of = check_offset_free_condition(cfg.model, cfg.gains, k_un);
        report.results.push_back({"offset_free_null_space", of.holds, of.residual,
                                  "null(Ld) dimension " + std::to_string(of.null_dim) +
                                      ", tolerance 1e-8"});
    } catch (const Error& e) {
        report.results.push_back({"offset_free_null_space", false,
                                  std::numeric_limits<double>::infinity(), e.what()});
    }
    return report;
}

ControllerSetup make_setup(const RunConfig& cfg) {
    return ControllerSetup(cfg.model, cfg.dist, cfg.gains, cfg.ocp);
}

std::unique_ptr<Plant> make_plant(const RunConfig& cfg) {
    if (cfg.plant.kind == PlantSpec::Kind::Linear) {
        return std::make_unique<LinearPlant>(cfg.model, cfg.dist, cfg.plant.linear_disturbance,
                                             Vector::Zero(static_cast<Eigen::Index>(cfg.model.nx())));
    }
    if (cfg.op.x_ss.size() != 3 || cfg.op.u_ss.size() != 2) {
        throw Error(ErrorCode::ConfigParse, "the CSTR plant needs a (c, T, h) / (T_c, F) operating point");
    }
    return std::make_unique<CstrPlant>(cfg.plant.cstr, cfg.op, PlantState::from_vector(cfg.op.x_ss));
}

Vector to_deviation_setpoint(const RunConfig& cfg, const Vector& absolute) {
    if (absolute.size() != static_cast<Eigen::Index>(cfg.model.nz())) {
        throw Error(ErrorCode::DimensionMismatch, "setpoint must have n_z entries");
    }
    return absolute - cfg.model.H() * cfg.model.C() * cfg.op.x_ss;
}

Vector to_absolute_setpoint(const RunConfig& cfg, const Vector& deviation) {
    return deviation + cfg.model.H() * cfg.model.C() * cfg.op.x_ss;
}

bool setpoint_admissible(const RunConfig& cfg, const ControllerSetup& setup, const Vector& setpoint) {
    constexpr double kMargin = 0.02;
    if (!cstr_setpoint_reachable(cfg.plant.cstr, setpoint, cfg.x_abs, cfg.u_abs, kMargin)) {
        return false;
    }
    const SteadyInput s = steady_input_for(cfg.plant.cstr, setpoint(0), setpoint(1));
    const Vector y_p = Eigen::Vector3d(setpoint(0), setpoint(1), s.h) - cfg.op.x_ss;
    const Vector u = Eigen::Vector2d(s.Tc, s.F) - cfg.op.u_ss;
    const AugmentedEstimate est = setup.estimator.steady_state_from_io(y_p, u);
    const TargetPair pair = setup.target.solve(est.d_hat, to_deviation_setpoint(cfg, setpoint));
    auto inside = [&](const Vector& v, const Box& box) {
        for (Eigen::Index i = 0; i < v.size(); ++i) {
            const double lo = box.lo(i);
            const double hi = box.hi(i);
            const double pad = std::isfinite(hi - lo) ? kMargin * (hi - lo) : 0.0;
            if (v(i) < lo + pad || v(i) > hi - pad) {
                return false;
            }
        }
        return true;
    };
    return inside(pair.x_bar + cfg.op.x_ss, cfg.x_abs) && inside(pair.u_bar + cfg.op.u_ss, cfg.u_abs);
}

std::vector<Vector> resolve_setpoints(const RunConfig& cfg, const SetpointSource& source) {
    const bool can_filter = source.reachable_only && cfg.plant.kind == PlantSpec::Kind::Cstr &&
                            cfg.model.nz() == 2 && cfg.model.nx() == 3;
    std::optional<ControllerSetup> setup;
    if (can_filter) {
        setup.emplace(make_setup(cfg));
    }
    auto reachable = [&](const Vector& sp) { return !can_filter || setpoint_admissible(cfg, *setup, sp); };
    std::vector<Vector> base;
    switch (source.kind) {
    case SetpointSource::Kind::Points:
        for (const Vector& p : source.points) {
            if (reachable(p)) {
                base.push_back(p);
            }
        }
        break;
    case SetpointSource::Kind::Linspace:
        for (std::size_t i = 0; i < source.count; ++i) {
            const double t = source.count > 1 ? static_cast<double>(i) / static_cast<double>(source.count - 1) : 0.0;
            Vector v(static_cast<Eigen::Index>(source.ranges.size()));
            for (std::size_t k = 0; k < source.ranges.size(); ++k) {
                const auto [lo, hi] = source.ranges[k];
                v(static_cast<Eigen::Index>(k)) = lo + t * (hi - lo);
            }
            if (reachable(v)) {
                base.push_back(v);
            }
        }
        break;
    case SetpointSource::Kind::Random:
        base = random_setpoints(source.ranges, source.count, source.seed,
                                can_filter ? std::function<bool(const Vector&)>(reachable)
                                           : std::function<bool(const Vector&)>());
        break;
    }
    std::vector<Vector> out;
    for (std::size_t rep = 0; rep < source.repeat; ++rep) {
        out.insert(out.end(), base.begin(), base.end());
    }
    return out;
}

ScenarioConfig resolve_scenario(const RunConfig& cfg) {
    ScenarioConfig out = cfg.scenario.cfg;
    out.schedule.clear();
    if (cfg.scenario.random_schedule) {
        const auto points = resolve_setpoints(cfg, *cfg.scenario.random_schedule);
        for (std::size_t i = 0; i < points.size(); ++i) {
            out.schedule.push_back({i * cfg.scenario.segment, to_deviation_setpoint(cfg, points[i])});
        }
    } else {
        for (const auto& [start, r] : cfg.scenario.fixed_schedule) {
            out.schedule.push_back({start, to_deviation_setpoint(cfg, r)});
        }
    }
    if (cfg.scenario.duration) {
        out.duration = *cfg.scenario.duration;
    } else {
        out.duration = out.schedule.empty() ? 0 : out.schedule.back().start + cfg.scenario.segment;
    }
    return out;
}

SweepConfig resolve_sweep(const RunConfig& cfg, const SweepSpec& spec) {
    SweepConfig out;
    if (!spec.setpoints) {
        throw Error(ErrorCode::ConfigParse, "sweep needs a 'setpoints' source");
    }
    for (const Vector& p : resolve_setpoints(cfg, *spec.setpoints)) {
        out.setpoints.push_back(to_deviation_setpoint(cfg, p));
    }
    out.mode = spec.mode;
    out.grnn = cfg.grnn.policy;
    out.steady = cfg.scenario.cfg.steady;
    out.cap = spec.cap;
    out.offset_tolerance = spec.offset_tolerance;
    out.events = spec.events;
    return out;
}

std::filesystem::path output_directory(const RunConfig& cfg) {
    if (const char* env = std::getenv("OFMPC_OUT_DIR"); env != nullptr && *env != '\0') {
        return env;
    }
    return cfg.output_dir;
}

SweepResult run_sweep(const RunConfig& cfg, const SweepSpec& spec) {
    const ControllerSetup setup = make_setup(cfg);
    const SweepConfig sweep_cfg = resolve_sweep(cfg, spec);
    const bool split = spec.workers > 1 && sweep_cfg.events.empty() &&
                       sweep_cfg.mode == ControllerMode::Nominal && sweep_cfg.setpoints.size() > 1;
    if (!split) {
        auto plant = make_plant(cfg);
        return sweep(setup, *plant, sweep_cfg);
    }
    const std::size_t chunks = std::min(spec.workers, sweep_cfg.setpoints.size());
    const std::size_t per = (sweep_cfg.setpoints.size() + chunks - 1) / chunks;
    std::vector<SweepResult> parts(chunks);
    parallel_for(chunks, spec.workers, [&](std::size_t c) {
        SweepConfig part = sweep_cfg;
        const auto begin = std::min(c * per, sweep_cfg.setpoints.size());
        const auto end = std::min(begin + per, sweep_cfg.setpoints.size());
        part.setpoints.assign(sweep_cfg.setpoints.begin() + static_cast<std::ptrdiff_t>(begin),
                              sweep_cfg.setpoints.begin() + static_cast<std::ptrdiff_t>(end));
        auto plant = make_plant(cfg);
        parts[c] = sweep(setup, *plant, part);
    });
    SweepResult out;
    for (SweepResult& p : parts) {
        out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
        out.intervals.insert(out.intervals.end(), p.intervals.begin(), p.intervals.end());
    }
    return out;
}

GrnnModel grnn_from_samples(const std::vector<HarvestedSample>& samples, std::size_t nz,
                            std::size_t nd, const GrnnPolicy& policy) {
    GrnnModel model(nz, nd, policy.capacity);
    for (const HarvestedSample& s : samples) {
        model.add_sample(s.r, s.d_ss);
    }
    refit_sigma(model, policy);
    return model;
}

std::optional<TrainedGrnn> build_grnn(const RunConfig& cfg) {
    const std::size_t nz = cfg.model.nz();
    const std::size_t nd = cfg.dist.nd();
    if (cfg.grnn.samples_file) {
        std::ifstream in(*cfg.grnn.samples_file);
        if (!in) {
            throw Error(ErrorCode::Io, "cannot open " + cfg.grnn.samples_file->string());
        }
        const SampleFile file = read_samples(in, nz);
        if (file.nz != nz || file.nd != nd) {
            throw Error(ErrorCode::DimensionMismatch, "sample file dimensions do not match the model");
        }
        GrnnModel model(nz, nd, cfg.grnn.policy.capacity);
        for (const GrnnSample& s : file.samples) {
            model.add_sample(s.input, s.output);
        }
        if (!cfg.grnn.policy.sigma && file.sigma) {
            model.set_sigma(*file.sigma);
        } else {
            refit_sigma(model, cfg.grnn.policy);
        }
        return TrainedGrnn{std::move(model), {}};
    }
    if (cfg.grnn.training) {
        SweepResult result = run_sweep(cfg, *cfg.grnn.training);
        GrnnModel model = result.final_grnn
                              ? *result.final_grnn
                              : grnn_from_samples(result.samples, nz, nd, cfg.grnn.policy);
        refit_sigma(model, cfg.grnn.policy);
        return TrainedGrnn{std::move(model), std::move(result.samples)};
    }
    return std::nullopt;
}

} // namespace ofmpc
