#pragma once

#include <cstddef>

#include "ofmpc/numerics.hpp"

namespace ofmpc {

/// Discrete linear prediction model x+ = A x + B u, y = C x, z = H y.
/// Construction verifies dimensions, full row rank of H, controllability of
/// (A, B) and observability of (C, A).
class LinearModel {
public:
    LinearModel(Matrix a, Matrix b, Matrix c, Matrix h, double dt = 1.0);

    [[nodiscard]] const Matrix& A() const noexcept { return a_; }
    [[nodiscard]] const Matrix& B() const noexcept { return b_; }
    [[nodiscard]] const Matrix& C() const noexcept { return c_; }
    [[nodiscard]] const Matrix& H() const noexcept { return h_; }
    [[nodiscard]] double dt() const noexcept { return dt_; }

    [[nodiscard]] std::size_t nx() const noexcept { return static_cast<std::size_t>(a_.rows()); }
    [[nodiscard]] std::size_t nu() const noexcept { return static_cast<std::size_t>(b_.cols()); }
    [[nodiscard]] std::size_t ny() const noexcept { return static_cast<std::size_t>(c_.rows()); }
    [[nodiscard]] std::size_t nz() const noexcept { return static_cast<std::size_t>(h_.rows()); }

private:
    Matrix a_, b_, c_, h_;
    double dt_;
};

/// Integrating disturbance model (B_d, C_d). Requires n_d <= n_y.
class DisturbanceModel {
public:
    DisturbanceModel(Matrix bd, Matrix cd);

    [[nodiscard]] const Matrix& Bd() const noexcept { return bd_; }
    [[nodiscard]] const Matrix& Cd() const noexcept { return cd_; }
    [[nodiscard]] std::size_t nd() const noexcept { return static_cast<std::size_t>(bd_.cols()); }

private:
    Matrix bd_, cd_;
};

/// Estimator gains in the sign convention
///   [x; d]+ = A_aug [x; d] + B_aug u + [Lx; Ld](-y + C_aug [x; d]).
struct EstimatorGains {
    Matrix Lx; // n_x x n_y
    Matrix Ld; // n_d x n_y
};

/// [[A, Bd], [0, I]], [B; 0], [C, Cd].
struct AugmentedModel {
    Matrix A;
    Matrix B;
    Matrix C;
    std::size_t nx = 0;
    std::size_t nd = 0;

    /// Selector [I, 0] picking x out of the augmented state.
    [[nodiscard]] Matrix Sx() const;
    /// Selector [0, I] picking d out of the augmented state.
    [[nodiscard]] Matrix Sd() const;
};

/// Throws DimensionMismatch when model and disturbance model are incompatible.
[[nodiscard]] AugmentedModel augment(const LinearModel& model, const DisturbanceModel& dist);

struct ObservabilityReport {
    bool holds = false;
    std::size_t rank = 0;
    std::size_t required = 0;
};

/// Rank test on [[A - I, Bd], [C, Cd]].
[[nodiscard]] ObservabilityReport check_augmented_observability(const LinearModel& model,
                                                                const DisturbanceModel& dist);

/// Estimation error dynamics [[A + Lx C, Bd + Lx Cd], [Ld C, I + Ld Cd]].
[[nodiscard]] Matrix estimator_error_matrix(const LinearModel& model, const DisturbanceModel& dist,
                                            const EstimatorGains& gains);

/// [[A - I + Lx C, Bd + Lx Cd], [Ld C, Ld Cd]], the steady-state estimator map.
[[nodiscard]] Matrix steady_estimator_matrix(const LinearModel& model,
                                             const DisturbanceModel& dist,
                                             const EstimatorGains& gains);

/// Validates gain shapes and estimator stability; throws DimensionMismatch or
/// PreconditionViolated (spectral radius >= 1).
void validate_gains(const LinearModel& model, const DisturbanceModel& dist,
                    const EstimatorGains& gains);

/// Consistency assertion that the steady estimator matrix is nonsingular.
/// Throws PreconditionViolated when the estimator is not stable.
[[nodiscard]] bool check_lemma1_nonsingularity(const LinearModel& model,
                                               const DisturbanceModel& dist,
                                               const EstimatorGains& gains);

struct OffsetFreeReport {
    bool holds = false;
    /// max over null(Ld) basis vectors v of ||H (I - C (I - A - B k)^-1 Lx) v||_inf.
    double residual = 0.0;
    std::size_t null_dim = 0;
};

inline constexpr double kOffsetFreeTolerance = 1e-8;

/// Null-space inclusion N(Ld) in N(H (I - C (I - A - B k_un)^-1 Lx)).
/// Throws SingularClosedLoop when I - A - B k_un is singular.
[[nodiscard]] OffsetFreeReport check_offset_free_condition(const LinearModel& model,
                                                           const EstimatorGains& gains,
                                                           const Matrix& k_un);

} // namespace ofmpc
