#pragma once

#include <cstddef>
#include <vector>

#include "ofmpc/numerics.hpp"

namespace ofmpc {

/// min u' H u + 2 u' f + c  subject to  A_in u <= b_in.
struct CondensedQp {
    Matrix H;
    Vector f;
    double c = 0.0;
    Matrix A_in;
    Vector b_in;

    [[nodiscard]] double objective(const Vector& u) const;
};

struct QpSolution {
    Vector u_seq;
    /// Indices of the rows of A_in active at the solution, ascending.
    std::vector<std::size_t> active_set;
    /// Multipliers for every row of A_in: 2 (H u + f) + A_in' lambda = 0.
    Vector multipliers;
    double kkt_residual = 0.0;
    double objective = 0.0;
    std::size_t iterations = 0;
};

struct QpOptions {
    double tol_kkt = 1e-8;
    std::size_t max_iterations = 0; // 0 selects 10 * (n + m) + 50
};

/// Dual active-set solver (Goldfarb-Idnani). The violated constraint added at
/// each outer iteration and every blocking constraint that is dropped are
/// chosen by lowest index, so degenerate problems cannot cycle.
/// `warm_start` seeds the active set; rows whose multipliers come out negative
/// are released before iterating. Throws Infeasible, MaxIterations or
/// PreconditionViolated (H not positive definite).
[[nodiscard]] QpSolution solve_qp(const CondensedQp& qp,
                                  const std::vector<std::size_t>& warm_start = {},
                                  const QpOptions& options = {});

/// max of the stationarity, primal feasibility, dual feasibility and
/// complementarity residuals of (u, lambda).
[[nodiscard]] double kkt_residual(const CondensedQp& qp, const Vector& u, const Vector& lambda);

} // namespace ofmpc
