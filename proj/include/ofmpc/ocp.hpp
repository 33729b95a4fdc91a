#pragma once

#include <optional>

#include "ofmpc/model.hpp"
#include "ofmpc/qp.hpp"
#include "ofmpc/target.hpp"

namespace ofmpc {

/// Horizon, diagonal weights and box constraints, all in deviation
/// coordinates. Infinite bounds produce no constraint rows.
struct OcpConfig {
    std::size_t N = 10;
    Vector Qx;
    Vector Qu;
    Vector QxN;
    Box u_bounds;
    Box x_bounds;
    std::optional<double> terminal_rho;

    /// Throws PreconditionViolated or DimensionMismatch.
    void validate(std::size_t nx, std::size_t nu) const;
};

struct PredictionMatrices {
    Matrix Phi;   // [A; A^2; ...; A^N]
    Matrix Psi;   // block lower-triangular A^(i-j) B
    Matrix Psi_d; // block lower-triangular A^(i-j) Bd
    std::size_t N = 0;
    std::size_t nx = 0;
    std::size_t nu = 0;
    std::size_t nd = 0;
};

[[nodiscard]] PredictionMatrices build_prediction(const LinearModel& model,
                                                  const DisturbanceModel& dist,
                                                  const OcpConfig& cfg);

/// Stacked weights diag(Qx, ..., Qx, QxN) and diag(Qu, ..., Qu).
[[nodiscard]] Vector stacked_state_weights(const OcpConfig& cfg);
[[nodiscard]] Vector stacked_input_weights(const OcpConfig& cfg);

/// Hessian Psi' Qx Psi + Qu of the condensed problem.
[[nodiscard]] Matrix condensed_hessian(const PredictionMatrices& pred, const OcpConfig& cfg);

/// Condensed form of the tracking problem with d_hat held over the horizon.
/// The constant term includes the stage cost of the current estimate,
/// ||x_hat - x_bar||^2_Qx. Constraint rows: upper then lower input bounds per
/// step, then upper then lower predicted state bounds for steps 1..N.
[[nodiscard]] CondensedQp condense(const PredictionMatrices& pred, const OcpConfig& cfg,
                                   const Vector& x_hat, const Vector& d_hat,
                                   const TargetPair& tgt);

/// Same as condense but without constraint rows.
[[nodiscard]] CondensedQp condense_unconstrained(const PredictionMatrices& pred,
                                                 const OcpConfig& cfg, const Vector& x_hat,
                                                 const Vector& d_hat, const TargetPair& tgt);

/// First input block of -H^-1 Psi' Qx Phi, so u_0 - u_bar = k (x_hat - x_bar)
/// without active constraints.
[[nodiscard]] Matrix unconstrained_gain(const PredictionMatrices& pred, const OcpConfig& cfg);

/// Optimal objective of the constrained problem. Throws Infeasible.
[[nodiscard]] double value_function(const PredictionMatrices& pred, const OcpConfig& cfg,
                                    const Vector& x_hat, const Vector& d_hat,
                                    const TargetPair& tgt);

/// Objective evaluated by explicit rollout of x+ = A x + B u + Bd d.
[[nodiscard]] double rollout_cost(const LinearModel& model, const DisturbanceModel& dist,
                                  const OcpConfig& cfg, const Vector& x_hat, const Vector& d_hat,
                                  const TargetPair& tgt, const Vector& u_seq);

/// Predicted states x_1..x_N stacked, for a given input sequence.
[[nodiscard]] Vector predict_states(const PredictionMatrices& pred, const Vector& x_hat,
                                    const Vector& d_hat, const Vector& u_seq);

/// ||x_N - x_bar||^2_QxN <= terminal_rho. Throws PreconditionViolated when no
/// terminal_rho is configured.
[[nodiscard]] bool check_terminal_set(const OcpConfig& cfg, const Vector& x_N,
                                      const TargetPair& tgt);

} // namespace ofmpc
