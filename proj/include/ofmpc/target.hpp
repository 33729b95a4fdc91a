#pragma once

#include <string>
#include <vector>

#include "ofmpc/model.hpp"

namespace ofmpc {

struct TargetPair {
    Vector x_bar;
    Vector u_bar;
};

/// Per-variable box [lo, hi] in deviation coordinates.
struct Box {
    Vector lo;
    Vector hi;

    [[nodiscard]] bool contains(const Vector& v, double slack = 0.0) const;
};

struct BoundViolation {
    bool is_state = true; // false for an input bound
    std::size_t index = 0;
    double value = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

/// Steady-state target problem
///   [[A - I, B], [H C, 0]] [x_bar; u_bar] = [-Bd d; r - H Cd d].
/// Square systems are solved by LU, others by the minimum-norm pseudoinverse.
class TargetSolver {
public:
    /// Throws SingularTarget when the target matrix is rank deficient.
    TargetSolver(const LinearModel& model, const DisturbanceModel& dist);

    [[nodiscard]] TargetPair solve(const Vector& d_hat, const Vector& r) const;

    /// Residual ||M [x; u] - rhs||_inf for the given pair.
    [[nodiscard]] double residual(const TargetPair& pair, const Vector& d_hat,
                                  const Vector& r) const;

    /// M^dagger [Bd; H Cd]: a disturbance shift delta moves the target by
    /// -sensitivity * delta.
    [[nodiscard]] const Matrix& disturbance_sensitivity() const noexcept { return sensitivity_; }
    [[nodiscard]] const Matrix& matrix() const noexcept { return m_; }

private:
    [[nodiscard]] Vector rhs(const Vector& d_hat, const Vector& r) const;

    Matrix m_;
    Matrix solve_map_; // inverse or pseudoinverse of m_
    Matrix bd_;
    Matrix hcd_;
    Matrix sensitivity_;
    std::size_t nx_;
    std::size_t nu_;
    std::size_t nd_;
    std::size_t nz_;
};

/// Lists every component of the pair outside the given boxes. Targets are
/// reported, never clipped.
[[nodiscard]] std::vector<BoundViolation> target_violations(const TargetPair& pair,
                                                            const Box& x_box, const Box& u_box);

} // namespace ofmpc
