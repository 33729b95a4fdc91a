#pragma once

#include "ofmpc/model.hpp"

namespace ofmpc {

/// (x_hat, d_hat) in deviation coordinates. In learned mode d_hat holds the
/// supplementary disturbance only.
struct AugmentedEstimate {
    Vector x_hat;
    Vector d_hat;

    [[nodiscard]] static AugmentedEstimate zero(std::size_t nx, std::size_t nd);
    [[nodiscard]] Vector stacked() const;
};

/// Learned, supplementary and combined disturbance; d_total is always the
/// exact sum of the other two.
struct CombinedDisturbance {
    Vector d_learned;
    Vector d_supp;
    Vector d_total;

    [[nodiscard]] static CombinedDisturbance combine(const Vector& learned, const Vector& supp);
};

/// Luenberger estimator on the disturbance-augmented model. The gains are
/// validated for stability at construction.
class Estimator {
public:
    Estimator(const LinearModel& model, const DisturbanceModel& dist, EstimatorGains gains);

    /// [x; d]+ = M_err [x; d] + [B; 0] u - [Lx; Ld] y_p.
    [[nodiscard]] AugmentedEstimate nominal_step(const AugmentedEstimate& est, const Vector& u,
                                                 const Vector& y_p) const;

    /// nominal_step plus the forcing [Bd + Lx Cd; Ld Cd] d_learned.
    [[nodiscard]] AugmentedEstimate learned_step(const AugmentedEstimate& est, const Vector& u,
                                                 const Vector& y_p,
                                                 const Vector& d_learned) const;

    /// Fixed point of nominal_step for constant (u_inf, y_p_inf).
    [[nodiscard]] AugmentedEstimate steady_state_from_io(const Vector& y_p_inf,
                                                         const Vector& u_inf) const;

    [[nodiscard]] const Matrix& error_matrix() const noexcept { return m_err_; }
    [[nodiscard]] const Matrix& learned_forcing() const noexcept { return forcing_; }
    [[nodiscard]] const EstimatorGains& gains() const noexcept { return gains_; }
    [[nodiscard]] std::size_t nx() const noexcept { return nx_; }
    [[nodiscard]] std::size_t nd() const noexcept { return nd_; }

private:
    AugmentedEstimate split(const Vector& stacked) const;
    void check_dims(const AugmentedEstimate& est, const Vector& u, const Vector& y_p) const;

    EstimatorGains gains_;
    Matrix m_err_;
    Matrix b_aug_;
    Matrix l_stack_;
    Matrix forcing_;
    Matrix lemma1_;
    std::size_t nx_;
    std::size_t nd_;
    std::size_t nu_;
    std::size_t ny_;
};

} // namespace ofmpc
