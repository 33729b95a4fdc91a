#pragma once

#include <memory>
#include <string>

#include "ofmpc/model.hpp"

namespace ofmpc {

/// Which balance the outlet mismatch factor acts on. OutletFlow multiplies F
/// wherever it appears in the dynamics (the level balance); OutletConcentration
/// adds an outlet term (factor - 1) F c / (pi r^2 h) to the species balance.
enum class MismatchKind { OutletFlow, OutletConcentration };

struct CstrParams {
    double F0 = 0.1;        // m^3/min
    double T0 = 350.0;      // K
    double c0 = 1.0;        // kmol/m^3
    double r = 0.219;       // m
    double k0 = 7.2e10;     // 1/min
    double E_over_R = 8750; // K
    double U = 54.94;       // kJ/(min m^2 K)
    double rho = 1000.0;    // kg/m^3
    double Cp = 0.239;      // kJ/(kg K)
    double dH = -5e4;       // kJ/kmol
    double outlet_factor = 1.0;
    MismatchKind mismatch = MismatchKind::OutletFlow;
    int substeps = 20;

    /// Throws PreconditionViolated when a physical parameter is out of range.
    void validate() const;
};

struct PlantState {
    double c = 0.0; // kmol/m^3
    double T = 0.0; // K
    double h = 0.0; // m

    [[nodiscard]] Vector to_vector() const;
    [[nodiscard]] static PlantState from_vector(const Vector& v);
};

/// Linearization point: x_ss = (c, T, h), u_ss = (T_c, F).
struct OperatingPoint {
    Vector x_ss;
    Vector u_ss;

    [[nodiscard]] static OperatingPoint cstr_reference();
};

/// (dc/dt, dT/dt, dh/dt) for absolute inputs u = (T_c, F).
/// Throws NonPhysicalState unless c, T, h are positive and finite.
[[nodiscard]] Vector derivatives(const PlantState& s, const Vector& u, const CstrParams& p);

/// Classical RK4 over dt with p.substeps equal internal steps.
[[nodiscard]] PlantState rk4_step(const PlantState& s, const Vector& u, const CstrParams& p,
                                  double dt);

/// Deviation measurement y_p = state - x_ss.
[[nodiscard]] Vector measure(const PlantState& s, const OperatingPoint& op);

/// A named parameter override. Recognized names: the CstrParams fields
/// (F0, T0, c0, r, k0, E_over_R, U, rho, Cp, dH, outlet_factor) and
/// "identity", which leaves the parameters unchanged.
struct PlantEvent {
    std::string parameter;
    double value = 0.0;
};

/// Throws UnknownEvent for an unrecognized parameter name.
[[nodiscard]] CstrParams apply_event(const CstrParams& p, const PlantEvent& event);

/// Absolute steady inputs and level that hold the plant at (c, T).
struct SteadyInput {
    double Tc = 0.0;
    double F = 0.0;
    double h = 0.0;
};

/// Closed-form equilibrium of the plant for a requested (c, T); the level is
/// the one that balances the species equation at the steady outlet flow.
/// Throws NonPhysicalState when no positive level exists.
[[nodiscard]] SteadyInput steady_input_for(const CstrParams& p, double c, double T);

/// Plant driven by deviation inputs and returning deviation measurements.
class Plant {
public:
    virtual ~Plant() = default;
    [[nodiscard]] virtual Vector measure() const = 0;
    virtual void step(const Vector& u_dev, double dt) = 0;
    virtual void apply_event(const PlantEvent& event) = 0;
    [[nodiscard]] virtual std::unique_ptr<Plant> clone() const = 0;
};

class CstrPlant final : public Plant {
public:
    CstrPlant(CstrParams params, OperatingPoint op, PlantState initial);

    [[nodiscard]] Vector measure() const override;
    void step(const Vector& u_dev, double dt) override;
    void apply_event(const PlantEvent& event) override;
    [[nodiscard]] std::unique_ptr<Plant> clone() const override;

    [[nodiscard]] const PlantState& state() const noexcept { return state_; }
    [[nodiscard]] const CstrParams& params() const noexcept { return params_; }

private:
    CstrParams params_;
    OperatingPoint op_;
    PlantState state_;
};

/// x+ = A x + B u + Bd d_true, y = C x + Cd d_true, in deviation coordinates.
/// Accepts the event "disturbance_<i>" to change component i of d_true.
class LinearPlant final : public Plant {
public:
    LinearPlant(const LinearModel& model, const DisturbanceModel& dist, Vector d_true,
                Vector x0);

    [[nodiscard]] Vector measure() const override;
    void step(const Vector& u_dev, double dt) override;
    void apply_event(const PlantEvent& event) override;
    [[nodiscard]] std::unique_ptr<Plant> clone() const override;

    [[nodiscard]] const Vector& state() const noexcept { return x_; }

private:
    Matrix a_, b_, c_, bd_, cd_;
    Vector d_;
    Vector x_;
};

} // namespace ofmpc
