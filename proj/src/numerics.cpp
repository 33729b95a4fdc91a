#include "ofmpc/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace ofmpc {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SingularMatrix: return "SingularMatrix";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularTarget: return "SingularTarget";
    case ErrorCode::SingularClosedLoop: return "SingularClosedLoop";
    case ErrorCode::PreconditionViolated: return "PreconditionViolated";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::MaxIterations: return "MaxIterations";
    case ErrorCode::NonPhysicalState: return "NonPhysicalState";
    case ErrorCode::UnknownEvent: return "UnknownEvent";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::CrossCheckFailed: return "CrossCheckFailed";
    case ErrorCode::SteadyNotReached: return "SteadyNotReached";
    case ErrorCode::ConfigParse: return "ConfigParse";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::Io: return "Io";
    }
    return "Unknown";
}

namespace numerics {

namespace {

Eigen::PartialPivLU<Matrix> checked_lu(const Matrix& a) {
    if (a.rows() != a.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "solve_linear: matrix is " +
                                                      std::to_string(a.rows()) + "x" +
                                                      std::to_string(a.cols()));
    }
    if (a.size() == 0) {
        throw Error(ErrorCode::DimensionMismatch, "solve_linear: empty matrix");
    }
    const double scale = a.cwiseAbs().maxCoeff();
    Eigen::PartialPivLU<Matrix> lu(a);
    const double min_pivot = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
    if (!(scale > 0.0) || min_pivot < kPivotTolerance * scale) {
        throw Error(ErrorCode::SingularMatrix,
                    "pivot " + std::to_string(min_pivot) + " below tolerance");
    }
    return lu;
}

Eigen::JacobiSVD<Matrix> svd_of(const Matrix& m, unsigned options) {
    return Eigen::JacobiSVD<Matrix>(m, options);
}

} // namespace

Vector solve_linear(const Matrix& a, const Vector& b) {
    if (b.size() != a.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "solve_linear: rhs length mismatch");
    }
    return checked_lu(a).solve(b);
}

Matrix solve_linear(const Matrix& a, const Matrix& b) {
    if (b.rows() != a.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "solve_linear: rhs rows mismatch");
    }
    return checked_lu(a).solve(b);
}

Matrix pseudoinverse(const Matrix& m, double tol) {
    if (m.size() == 0) {
        return Matrix::Zero(m.cols(), m.rows());
    }
    const auto svd = svd_of(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& s = svd.singularValues();
    const double cutoff = tol * (s.size() > 0 ? s(0) : 0.0);
    Vector inv = Vector::Zero(s.size());
    for (Eigen::Index i = 0; i < s.size(); ++i) {
        if (s(i) > cutoff && s(i) > 0.0) {
            inv(i) = 1.0 / s(i);
        }
    }
    return svd.matrixV() * inv.asDiagonal() * svd.matrixU().transpose();
}

std::size_t matrix_rank(const Matrix& m, double tol) {
    if (m.size() == 0) {
        return 0;
    }
    const auto svd = svd_of(m, 0);
    const Vector& s = svd.singularValues();
    if (s.size() == 0 || s(0) == 0.0) {
        return 0;
    }
    const double cutoff = tol * s(0);
    return static_cast<std::size_t>((s.array() > cutoff).count());
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "spectral_radius: matrix not square");
    }
    if (m.size() == 0) {
        return 0.0;
    }
    Eigen::EigenSolver<Matrix> solver(m, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw Error(ErrorCode::NoConvergence, "spectral_radius: QR iteration did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix null_space(const Matrix& m, double tol) {
    const Eigen::Index n = m.cols();
    if (m.rows() == 0) {
        return Matrix::Identity(n, n);
    }
    const auto svd = svd_of(m, Eigen::ComputeFullV);
    const Vector& s = svd.singularValues();
    const double smax = s.size() > 0 ? s(0) : 0.0;
    Eigen::Index rank = 0;
    if (smax > 0.0) {
        rank = (s.array() > tol * smax).count();
    }
    return svd.matrixV().rightCols(n - rank);
}

Matrix hcat(const Matrix& left, const Matrix& right) {
    if (left.rows() != right.rows()) {
        throw Error(ErrorCode::DimensionMismatch, "hcat: row count mismatch");
    }
    Matrix out(left.rows(), left.cols() + right.cols());
    out << left, right;
    return out;
}

Matrix vcat(const Matrix& top, const Matrix& bottom) {
    if (top.cols() != bottom.cols()) {
        throw Error(ErrorCode::DimensionMismatch, "vcat: column count mismatch");
    }
    Matrix out(top.rows() + bottom.rows(), top.cols());
    out << top, bottom;
    return out;
}

Matrix block2x2(const Matrix& a11, const Matrix& a12, const Matrix& a21, const Matrix& a22) {
    return vcat(hcat(a11, a12), hcat(a21, a22));
}

bool all_finite(const Matrix& m) noexcept { return m.allFinite(); }

Vector repeat(const Vector& v, std::size_t count) {
    Vector out(v.size() * static_cast<Eigen::Index>(count));
    for (std::size_t i = 0; i < count; ++i) {
        out.segment(static_cast<Eigen::Index>(i) * v.size(), v.size()) = v;
    }
    return out;
}

} // namespace numerics
} // namespace ofmpc
