#include "ofmpc/target.hpp"

#include <algorithm>

namespace ofmpc {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void collect(std::vector<BoundViolation>& out, const Vector& v, const Box& box, bool is_state) {
    if (box.lo.size() != v.size() || box.hi.size() != v.size()) {
        throw Error(ErrorCode::DimensionMismatch, "bound box does not match target size");
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (v(i) < box.lo(i) || v(i) > box.hi(i)) {
            out.push_back({is_state, static_cast<std::size_t>(i), v(i), box.lo(i), box.hi(i)});
        }
    }
}

} // namespace

bool Box::contains(const Vector& v, double slack) const {
    if (v.size() != lo.size() || v.size() != hi.size()) {
        return false;
    }
    return ((v.array() >= lo.array() - slack) && (v.array() <= hi.array() + slack)).all();
}

TargetSolver::TargetSolver(const LinearModel& model, const DisturbanceModel& dist)
    : nx_(model.nx()), nu_(model.nu()), nd_(dist.nd()), nz_(model.nz()) {
    if (dist.Bd().rows() != model.A().rows() || dist.Cd().rows() != model.C().rows()) {
        throw Error(ErrorCode::DimensionMismatch, "disturbance model does not match the plant model");
    }
    const Matrix& A = model.A();
    const Matrix hc = model.H() * model.C();
    m_ = numerics::block2x2(A - Matrix::Identity(A.rows(), A.cols()), model.B(), hc,
                            Matrix::Zero(idx(nz_), idx(nu_)));
    bd_ = dist.Bd();
    hcd_ = model.H() * dist.Cd();

    const auto full = static_cast<std::size_t>(std::min(m_.rows(), m_.cols()));
    if (numerics::matrix_rank(m_) < full) {
        throw Error(ErrorCode::SingularTarget, "target matrix is rank deficient");
    }
    if (m_.rows() == m_.cols()) {
        solve_map_ = numerics::solve_linear(m_, Matrix(Matrix::Identity(m_.rows(), m_.cols())));
    } else {
        solve_map_ = numerics::pseudoinverse(m_);
    }
    sensitivity_ = numerics::pseudoinverse(m_) * numerics::vcat(bd_, hcd_);
}

Vector TargetSolver::rhs(const Vector& d_hat, const Vector& r) const {
    if (d_hat.size() != idx(nd_) || r.size() != idx(nz_)) {
        throw Error(ErrorCode::DimensionMismatch, "target inputs have wrong dimensions");
    }
    Vector out(idx(nx_ + nz_));
    out << -bd_ * d_hat, r - hcd_ * d_hat;
    return out;
}

TargetPair TargetSolver::solve(const Vector& d_hat, const Vector& r) const {
    const Vector sol = solve_map_ * rhs(d_hat, r);
    return {sol.head(idx(nx_)), sol.tail(idx(nu_))};
}

double TargetSolver::residual(const TargetPair& pair, const Vector& d_hat, const Vector& r) const {
    Vector stacked(pair.x_bar.size() + pair.u_bar.size());
    stacked << pair.x_bar, pair.u_bar;
    return (m_ * stacked - rhs(d_hat, r)).cwiseAbs().maxCoeff();
}

std::vector<BoundViolation> target_violations(const TargetPair& pair, const Box& x_box,
                                              const Box& u_box) {
    std::vector<BoundViolation> out;
    collect(out, pair.x_bar, x_box, true);
    collect(out, pair.u_bar, u_box, false);
    return out;
}

} // namespace ofmpc
