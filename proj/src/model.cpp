#include "ofmpc/model.hpp"

#include <string>

namespace ofmpc {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require(bool ok, const std::string& what) {
    if (!ok) {
        throw Error(ErrorCode::DimensionMismatch, what);
    }
}

// [B, AB, ..., A^{n-1}B]
Matrix controllability_matrix(const Matrix& a, const Matrix& b) {
    const Eigen::Index n = a.rows();
    Matrix out(n, n * b.cols());
    Matrix block = b;
    for (Eigen::Index i = 0; i < n; ++i) {
        out.middleCols(i * b.cols(), b.cols()) = block;
        block = a * block;
    }
    return out;
}

} // namespace

LinearModel::LinearModel(Matrix a, Matrix b, Matrix c, Matrix h, double dt)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), h_(std::move(h)), dt_(dt) {
    require(a_.rows() > 0 && a_.rows() == a_.cols(), "A must be square, got " + shape(a_));
    require(b_.rows() == a_.rows() && b_.cols() > 0, "B must be n_x x n_u, got " + shape(b_));
    require(c_.cols() == a_.cols() && c_.rows() > 0, "C must be n_y x n_x, got " + shape(c_));
    require(h_.cols() == c_.rows() && h_.rows() > 0, "H must be n_z x n_y, got " + shape(h_));
    require(numerics::all_finite(a_) && numerics::all_finite(b_) && numerics::all_finite(c_) &&
                numerics::all_finite(h_),
            "model matrices must be finite");
    if (!(dt_ > 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "sampling interval must be positive");
    }
    if (numerics::matrix_rank(h_) != static_cast<std::size_t>(h_.rows())) {
        throw Error(ErrorCode::PreconditionViolated, "H must have full row rank");
    }
    const auto n = static_cast<std::size_t>(a_.rows());
    if (numerics::matrix_rank(controllability_matrix(a_, b_)) != n) {
        throw Error(ErrorCode::PreconditionViolated, "(A, B) is not controllable");
    }
    const Matrix obs = controllability_matrix(a_.transpose(), c_.transpose()).transpose();
    if (numerics::matrix_rank(obs) != n) {
        throw Error(ErrorCode::PreconditionViolated, "(C, A) is not observable");
    }
}

DisturbanceModel::DisturbanceModel(Matrix bd, Matrix cd) : bd_(std::move(bd)), cd_(std::move(cd)) {
    require(bd_.cols() == cd_.cols() && bd_.cols() > 0,
            "Bd and Cd must share n_d columns, got " + shape(bd_) + " and " + shape(cd_));
    require(cd_.cols() <= cd_.rows(), "number of disturbances must not exceed n_y");
    require(numerics::all_finite(bd_) && numerics::all_finite(cd_),
            "disturbance matrices must be finite");
}

Matrix AugmentedModel::Sx() const {
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(nx), static_cast<Eigen::Index>(nx + nd));
    s.leftCols(static_cast<Eigen::Index>(nx)).setIdentity();
    return s;
}

Matrix AugmentedModel::Sd() const {
    Matrix s = Matrix::Zero(static_cast<Eigen::Index>(nd), static_cast<Eigen::Index>(nx + nd));
    s.rightCols(static_cast<Eigen::Index>(nd)).setIdentity();
    return s;
}

AugmentedModel augment(const LinearModel& model, const DisturbanceModel& dist) {
    require(dist.Bd().rows() == model.A().rows(),
            "Bd has " + std::to_string(dist.Bd().rows()) + " rows, expected n_x");
    require(dist.Cd().rows() == model.C().rows(),
            "Cd has " + std::to_string(dist.Cd().rows()) + " rows, expected n_y");
    const Eigen::Index nx = model.A().rows();
    const Eigen::Index nd = dist.Bd().cols();
    const Eigen::Index nu = model.B().cols();

    AugmentedModel out;
    out.nx = static_cast<std::size_t>(nx);
    out.nd = static_cast<std::size_t>(nd);
    out.A = numerics::block2x2(model.A(), dist.Bd(), Matrix::Zero(nd, nx), Matrix::Identity(nd, nd));
    out.B = numerics::vcat(model.B(), Matrix::Zero(nd, nu));
    out.C = numerics::hcat(model.C(), dist.Cd());
    return out;
}

ObservabilityReport check_augmented_observability(const LinearModel& model,
                                                  const DisturbanceModel& dist) {
    const Eigen::Index nx = model.A().rows();
    const Matrix m = numerics::block2x2(model.A() - Matrix::Identity(nx, nx), dist.Bd(),
                                        model.C(), dist.Cd());
    ObservabilityReport report;
    report.rank = numerics::matrix_rank(m);
    report.required = model.nx() + dist.nd();
    report.holds = report.rank == report.required;
    return report;
}

Matrix estimator_error_matrix(const LinearModel& model, const DisturbanceModel& dist,
                              const EstimatorGains& gains) {
    const auto nd = static_cast<Eigen::Index>(dist.nd());
    const Matrix& C = model.C();
    return numerics::block2x2(model.A() + gains.Lx * C, dist.Bd() + gains.Lx * dist.Cd(),
                              gains.Ld * C, Matrix::Identity(nd, nd) + gains.Ld * dist.Cd());
}

Matrix steady_estimator_matrix(const LinearModel& model, const DisturbanceModel& dist,
                               const EstimatorGains& gains) {
    Matrix m = estimator_error_matrix(model, dist, gains);
    m -= Matrix::Identity(m.rows(), m.cols());
    return m;
}

void validate_gains(const LinearModel& model, const DisturbanceModel& dist,
                    const EstimatorGains& gains) {
    require(gains.Lx.rows() == model.A().rows() && gains.Lx.cols() == model.C().rows(),
            "Lx must be n_x x n_y, got " + shape(gains.Lx));
    require(gains.Ld.rows() == static_cast<Eigen::Index>(dist.nd()) &&
                gains.Ld.cols() == model.C().rows(),
            "Ld must be n_d x n_y, got " + shape(gains.Ld));
    const double rho = numerics::spectral_radius(estimator_error_matrix(model, dist, gains));
    if (!(rho < 1.0)) {
        throw Error(ErrorCode::PreconditionViolated,
                    "estimator is not stable (spectral radius " + std::to_string(rho) + ")");
    }
}

bool check_lemma1_nonsingularity(const LinearModel& model, const DisturbanceModel& dist,
                                 const EstimatorGains& gains) {
    validate_gains(model, dist, gains);
    const Matrix m = steady_estimator_matrix(model, dist, gains);
    const Eigen::PartialPivLU<Matrix> lu(m);
    const double scale = m.cwiseAbs().maxCoeff();
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    return scale > 0.0 && min_pivot >= numerics::kPivotTolerance * scale;
}

OffsetFreeReport check_offset_free_condition(const LinearModel& model, const EstimatorGains& gains,
                                             const Matrix& k_un) {
    require(k_un.rows() == model.B().cols() && k_un.cols() == model.A().rows(),
            "k_un must be n_u x n_x, got " + shape(k_un));
    const Eigen::Index nx = model.A().rows();
    const Eigen::Index ny = model.C().rows();
    const Matrix closed = Matrix::Identity(nx, nx) - model.A() - model.B() * k_un;

    Matrix sensitivity;
    try {
        sensitivity = numerics::solve_linear(closed, gains.Lx);
    } catch (const Error& e) {
        if (e.code() == ErrorCode::SingularMatrix) {
            throw Error(ErrorCode::SingularClosedLoop, "I - A - B k_un is singular");
        }
        throw;
    }
    const Matrix map = model.H() * (Matrix::Identity(ny, ny) - model.C() * sensitivity);
    const Matrix basis = numerics::null_space(gains.Ld);

    OffsetFreeReport report;
    report.null_dim = static_cast<std::size_t>(basis.cols());
    report.residual = basis.cols() == 0 ? 0.0 : (map * basis).cwiseAbs().maxCoeff();
    report.holds = report.residual <= kOffsetFreeTolerance;
    return report;
}

} // namespace ofmpc
