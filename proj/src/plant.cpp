#include "ofmpc/plant.hpp"

#include <cmath>
#include <numbers>

namespace ofmpc {

namespace {

void require_physical(const PlantState& s) {
    if (!(s.c > 0.0) || !(s.T > 0.0) || !(s.h > 0.0) || !std::isfinite(s.c) ||
        !std::isfinite(s.T) || !std::isfinite(s.h)) {
        throw Error(ErrorCode::NonPhysicalState,
                    "c=" + std::to_string(s.c) + " T=" + std::to_string(s.T) +
                        " h=" + std::to_string(s.h));
    }
}

PlantState axpy(const PlantState& s, double a, const Vector& d) {
    return {s.c + a * d(0), s.T + a * d(1), s.h + a * d(2)};
}

double area(const CstrParams& p) { return std::numbers::pi * p.r * p.r; }

double reaction_rate(const CstrParams& p, double c, double T) {
    return p.k0 * std::exp(-p.E_over_R / T) * c;
}

} // namespace

void CstrParams::validate() const {
    const bool positive = F0 > 0 && T0 > 0 && c0 > 0 && r > 0 && k0 > 0 && E_over_R > 0 &&
                          U > 0 && rho > 0 && Cp > 0;
    if (!positive) {
        throw Error(ErrorCode::PreconditionViolated, "CSTR physical parameters must be positive");
    }
    if (!(dH < 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "reaction enthalpy must be negative");
    }
    if (!(outlet_factor > 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "outlet factor must be positive");
    }
    if (substeps < 1) {
        throw Error(ErrorCode::PreconditionViolated, "substeps must be at least 1");
    }
}

Vector PlantState::to_vector() const { return Eigen::Vector3d(c, T, h); }

PlantState PlantState::from_vector(const Vector& v) {
    if (v.size() != 3) {
        throw Error(ErrorCode::DimensionMismatch, "plant state has three components");
    }
    return {v(0), v(1), v(2)};
}

OperatingPoint OperatingPoint::cstr_reference() {
    return {Eigen::Vector3d(0.878, 324.5, 0.659), Eigen::Vector2d(300.0, 0.1)};
}

Vector derivatives(const PlantState& s, const Vector& u, const CstrParams& p) {
    require_physical(s);
    if (u.size() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "CSTR input is (T_c, F)");
    }
    const double tc = u(0);
    const double f = u(1);
    const double a = area(p);
    const double rate = reaction_rate(p, s.c, s.T);

    double dc = p.F0 * (p.c0 - s.c) / (a * s.h) - rate;
    const double dT = p.F0 * (p.T0 - s.T) / (a * s.h) - p.dH / (p.rho * p.Cp) * rate +
                      2.0 * p.U / (p.r * p.rho * p.Cp) * (tc - s.T);
    double dh = 0.0;
    if (p.mismatch == MismatchKind::OutletFlow) {
        dh = (p.F0 - p.outlet_factor * f) / a;
    } else {
        dc -= (p.outlet_factor - 1.0) * f * s.c / (a * s.h);
        dh = (p.F0 - f) / a;
    }
    return Eigen::Vector3d(dc, dT, dh);
}

PlantState rk4_step(const PlantState& s, const Vector& u, const CstrParams& p, double dt) {
    if (!(dt > 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "integration interval must be positive");
    }
    if (p.substeps < 1) {
        throw Error(ErrorCode::PreconditionViolated, "substeps must be at least 1");
    }
    const double h = dt / p.substeps;
    PlantState x = s;
    for (int i = 0; i < p.substeps; ++i) {
        const Vector k1 = derivatives(x, u, p);
        const Vector k2 = derivatives(axpy(x, h / 2, k1), u, p);
        const Vector k3 = derivatives(axpy(x, h / 2, k2), u, p);
        const Vector k4 = derivatives(axpy(x, h, k3), u, p);
        x = axpy(x, h / 6, k1 + 2 * k2 + 2 * k3 + k4);
    }
    require_physical(x);
    return x;
}

Vector measure(const PlantState& s, const OperatingPoint& op) {
    return s.to_vector() - op.x_ss;
}

CstrParams apply_event(const CstrParams& p, const PlantEvent& event) {
    CstrParams out = p;
    const std::string& name = event.parameter;
    if (name == "identity") {
        return out;
    }
    if (name == "F0") {
        out.F0 = event.value;
    } else if (name == "T0") {
        out.T0 = event.value;
    } else if (name == "c0") {
        out.c0 = event.value;
    } else if (name == "r") {
        out.r = event.value;
    } else if (name == "k0") {
        out.k0 = event.value;
    } else if (name == "E_over_R") {
        out.E_over_R = event.value;
    } else if (name == "U") {
        out.U = event.value;
    } else if (name == "rho") {
        out.rho = event.value;
    } else if (name == "Cp") {
        out.Cp = event.value;
    } else if (name == "dH") {
        out.dH = event.value;
    } else if (name == "outlet_factor") {
        out.outlet_factor = event.value;
    } else {
        throw Error(ErrorCode::UnknownEvent, "no plant parameter named '" + name + "'");
    }
    out.validate();
    return out;
}

SteadyInput steady_input_for(const CstrParams& p, double c, double T) {
    if (!(c > 0.0) || !(T > 0.0)) {
        throw Error(ErrorCode::NonPhysicalState, "steady state needs positive c and T");
    }
    const double a = area(p);
    const double rate = reaction_rate(p, c, T);
    SteadyInput out;
    double inflow_term = p.F0 * (p.c0 - c);
    if (p.mismatch == MismatchKind::OutletFlow) {
        out.F = p.F0 / p.outlet_factor;
    } else {
        out.F = p.F0;
        inflow_term -= (p.outlet_factor - 1.0) * out.F * c;
    }
    out.h = inflow_term / (a * rate);
    if (!(out.h > 0.0) || !std::isfinite(out.h)) {
        throw Error(ErrorCode::NonPhysicalState, "no positive level balances the species equation");
    }
    const double heat = p.F0 * (p.T0 - T) / (a * out.h) - p.dH / (p.rho * p.Cp) * rate;
    out.Tc = T - heat * p.r * p.rho * p.Cp / (2.0 * p.U);
    return out;
}

CstrPlant::CstrPlant(CstrParams params, OperatingPoint op, PlantState initial)
    : params_(params), op_(std::move(op)), state_(initial) {
    params_.validate();
    if (op_.x_ss.size() != 3 || op_.u_ss.size() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "CSTR operating point is (c, T, h), (T_c, F)");
    }
    require_physical(state_);
}

Vector CstrPlant::measure() const { return ofmpc::measure(state_, op_); }

void CstrPlant::step(const Vector& u_dev, double dt) {
    if (u_dev.size() != 2) {
        throw Error(ErrorCode::DimensionMismatch, "CSTR input is (T_c, F)");
    }
    state_ = rk4_step(state_, op_.u_ss + u_dev, params_, dt);
}

void CstrPlant::apply_event(const PlantEvent& event) {
    params_ = ofmpc::apply_event(params_, event);
}

std::unique_ptr<Plant> CstrPlant::clone() const { return std::make_unique<CstrPlant>(*this); }

LinearPlant::LinearPlant(const LinearModel& model, const DisturbanceModel& dist, Vector d_true,
                         Vector x0)
    : a_(model.A()),
      b_(model.B()),
      c_(model.C()),
      bd_(dist.Bd()),
      cd_(dist.Cd()),
      d_(std::move(d_true)),
      x_(std::move(x0)) {
    if (d_.size() != bd_.cols() || x_.size() != a_.rows() || bd_.rows() != a_.rows() ||
        cd_.rows() != c_.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "linear plant dimensions are inconsistent");
    }
}

Vector LinearPlant::measure() const { return c_ * x_ + cd_ * d_; }

void LinearPlant::step(const Vector& u_dev, double /*dt*/) {
    if (u_dev.size() != b_.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "linear plant input has wrong length");
    }
    x_ = a_ * x_ + b_ * u_dev + bd_ * d_;
}

void LinearPlant::apply_event(const PlantEvent& event) {
    if (event.parameter == "identity") {
        return;
    }
    const std::string prefix = "disturbance_";
    if (event.parameter.rfind(prefix, 0) == 0) {
        const std::string tail = event.parameter.substr(prefix.size());
        if (!tail.empty() && tail.find_first_not_of("0123456789") == std::string::npos) {
            const auto i = static_cast<Eigen::Index>(std::stoul(tail));
            if (i < d_.size()) {
                d_(i) = event.value;
                return;
            }
        }
    }
    throw Error(ErrorCode::UnknownEvent, "linear plant has no parameter '" + event.parameter + "'");
}

std::unique_ptr<Plant> LinearPlant::clone() const { return std::make_unique<LinearPlant>(*this); }

} // namespace ofmpc
