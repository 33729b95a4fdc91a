#include "ofmpc/estimator.hpp"

#include <string>

namespace ofmpc {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

} // namespace

AugmentedEstimate AugmentedEstimate::zero(std::size_t nx, std::size_t nd) {
    return {Vector::Zero(idx(nx)), Vector::Zero(idx(nd))};
}

Vector AugmentedEstimate::stacked() const {
    Vector out(x_hat.size() + d_hat.size());
    out << x_hat, d_hat;
    return out;
}

CombinedDisturbance CombinedDisturbance::combine(const Vector& learned, const Vector& supp) {
    if (learned.size() != supp.size()) {
        throw Error(ErrorCode::DimensionMismatch, "learned and supplementary disturbance sizes differ");
    }
    return {learned, supp, learned + supp};
}

Estimator::Estimator(const LinearModel& model, const DisturbanceModel& dist, EstimatorGains gains)
    : gains_(std::move(gains)),
      nx_(model.nx()),
      nd_(dist.nd()),
      nu_(model.nu()),
      ny_(model.ny()) {
    validate_gains(model, dist, gains_);
    const AugmentedModel aug = augment(model, dist);
    m_err_ = estimator_error_matrix(model, dist, gains_);
    b_aug_ = aug.B;
    l_stack_ = numerics::vcat(gains_.Lx, gains_.Ld);
    forcing_ = numerics::vcat(dist.Bd() + gains_.Lx * dist.Cd(), gains_.Ld * dist.Cd());
    lemma1_ = steady_estimator_matrix(model, dist, gains_);
}

void Estimator::check_dims(const AugmentedEstimate& est, const Vector& u, const Vector& y_p) const {
    if (est.x_hat.size() != idx(nx_) || est.d_hat.size() != idx(nd_)) {
        throw Error(ErrorCode::DimensionMismatch, "estimate has wrong dimensions");
    }
    if (u.size() != idx(nu_)) {
        throw Error(ErrorCode::DimensionMismatch, "u has length " + std::to_string(u.size()));
    }
    if (y_p.size() != idx(ny_)) {
        throw Error(ErrorCode::DimensionMismatch, "y_p has length " + std::to_string(y_p.size()));
    }
}

AugmentedEstimate Estimator::split(const Vector& stacked) const {
    return {stacked.head(idx(nx_)), stacked.tail(idx(nd_))};
}

AugmentedEstimate Estimator::nominal_step(const AugmentedEstimate& est, const Vector& u,
                                          const Vector& y_p) const {
    check_dims(est, u, y_p);
    return split(m_err_ * est.stacked() + b_aug_ * u - l_stack_ * y_p);
}

AugmentedEstimate Estimator::learned_step(const AugmentedEstimate& est, const Vector& u,
                                          const Vector& y_p, const Vector& d_learned) const {
    check_dims(est, u, y_p);
    if (d_learned.size() != idx(nd_)) {
        throw Error(ErrorCode::DimensionMismatch, "learned disturbance has wrong length");
    }
    return split(m_err_ * est.stacked() + b_aug_ * u - l_stack_ * y_p + forcing_ * d_learned);
}

AugmentedEstimate Estimator::steady_state_from_io(const Vector& y_p_inf,
                                                  const Vector& u_inf) const {
    if (y_p_inf.size() != idx(ny_) || u_inf.size() != idx(nu_)) {
        throw Error(ErrorCode::DimensionMismatch, "steady-state I/O has wrong dimensions");
    }
    // (M_err - I) [x; d] = L y - [B; 0] u at the fixed point.
    const Vector rhs = l_stack_ * y_p_inf - b_aug_ * u_inf;
    return split(numerics::solve_linear(lemma1_, rhs));
}

} // namespace ofmpc
