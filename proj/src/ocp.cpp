#include "ofmpc/ocp.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace ofmpc {

namespace {

Eigen::Index idx(std::size_t n) { return static_cast<Eigen::Index>(n); }

void require_dims(bool ok, const std::string& what) {
    if (!ok) {
        throw Error(ErrorCode::DimensionMismatch, what);
    }
}

struct RowSet {
    std::vector<Vector> rows;
    std::vector<double> rhs;

    void add(const Vector& row, double bound) {
        rows.push_back(row);
        rhs.push_back(bound);
    }
};

} // namespace

void OcpConfig::validate(std::size_t nx, std::size_t nu) const {
    if (N < 1) {
        throw Error(ErrorCode::PreconditionViolated, "horizon must be at least 1");
    }
    require_dims(Qx.size() == idx(nx) && QxN.size() == idx(nx), "state weights must have n_x entries");
    require_dims(Qu.size() == idx(nu), "input weights must have n_u entries");
    require_dims(u_bounds.lo.size() == idx(nu) && u_bounds.hi.size() == idx(nu),
                 "input bounds must have n_u entries");
    require_dims(x_bounds.lo.size() == idx(nx) && x_bounds.hi.size() == idx(nx),
                 "state bounds must have n_x entries");
    if ((Qx.array() < 0.0).any() || (QxN.array() < 0.0).any()) {
        throw Error(ErrorCode::PreconditionViolated, "state weights must be non-negative");
    }
    if ((Qu.array() <= 0.0).any()) {
        throw Error(ErrorCode::PreconditionViolated, "input weights must be positive");
    }
    if ((u_bounds.lo.array() >= u_bounds.hi.array()).any() ||
        (x_bounds.lo.array() >= x_bounds.hi.array()).any()) {
        throw Error(ErrorCode::PreconditionViolated, "every bound needs lo < hi");
    }
    if (terminal_rho && !(*terminal_rho >= 0.0)) {
        throw Error(ErrorCode::PreconditionViolated, "terminal_rho must be non-negative");
    }
}

PredictionMatrices build_prediction(const LinearModel& model, const DisturbanceModel& dist,
                                    const OcpConfig& cfg) {
    require_dims(dist.Bd().rows() == model.A().rows(), "Bd rows must equal n_x");
    if (cfg.N < 1) {
        throw Error(ErrorCode::PreconditionViolated, "horizon must be at least 1");
    }
    PredictionMatrices pred;
    pred.N = cfg.N;
    pred.nx = model.nx();
    pred.nu = model.nu();
    pred.nd = dist.nd();
    const Eigen::Index N = idx(cfg.N);
    const Eigen::Index nx = idx(pred.nx);
    const Eigen::Index nu = idx(pred.nu);
    const Eigen::Index nd = idx(pred.nd);

    // powers[i] = A^i for i = 0..N
    std::vector<Matrix> powers{Matrix::Identity(nx, nx)};
    for (Eigen::Index i = 1; i <= N; ++i) {
        powers.push_back(model.A() * powers.back());
    }
    pred.Phi.resize(N * nx, nx);
    pred.Psi = Matrix::Zero(N * nx, N * nu);
    pred.Psi_d = Matrix::Zero(N * nx, N * nd);
    for (Eigen::Index i = 0; i < N; ++i) {
        pred.Phi.middleRows(i * nx, nx) = powers[static_cast<std::size_t>(i + 1)];
        for (Eigen::Index j = 0; j <= i; ++j) {
            const Matrix& p = powers[static_cast<std::size_t>(i - j)];
            pred.Psi.block(i * nx, j * nu, nx, nu) = p * model.B();
            pred.Psi_d.block(i * nx, j * nd, nx, nd) = p * dist.Bd();
        }
    }
    return pred;
}

Vector stacked_state_weights(const OcpConfig& cfg) {
    Vector w = numerics::repeat(cfg.Qx, cfg.N);
    w.tail(cfg.QxN.size()) = cfg.QxN;
    return w;
}

Vector stacked_input_weights(const OcpConfig& cfg) { return numerics::repeat(cfg.Qu, cfg.N); }

Matrix condensed_hessian(const PredictionMatrices& pred, const OcpConfig& cfg) {
    const Vector qx = stacked_state_weights(cfg);
    Matrix h = pred.Psi.transpose() * qx.asDiagonal() * pred.Psi;
    h.diagonal() += stacked_input_weights(cfg);
    // Symmetrize against round-off so the Cholesky factorization sees an exact
    // symmetric matrix.
    return 0.5 * (h + h.transpose());
}

CondensedQp condense_unconstrained(const PredictionMatrices& pred, const OcpConfig& cfg,
                                   const Vector& x_hat, const Vector& d_hat,
                                   const TargetPair& tgt) {
    require_dims(x_hat.size() == idx(pred.nx) && tgt.x_bar.size() == idx(pred.nx),
                 "state vectors must have n_x entries");
    require_dims(d_hat.size() == idx(pred.nd), "disturbance must have n_d entries");
    require_dims(tgt.u_bar.size() == idx(pred.nu), "target input must have n_u entries");
    require_dims(cfg.N == pred.N && cfg.Qx.size() == idx(pred.nx) && cfg.Qu.size() == idx(pred.nu),
                 "OCP configuration does not match the prediction matrices");
    if (!numerics::all_finite(x_hat) || !numerics::all_finite(d_hat) ||
        !numerics::all_finite(tgt.x_bar) || !numerics::all_finite(tgt.u_bar)) {
        throw Error(ErrorCode::PreconditionViolated, "non-finite input to condense");
    }
    const Vector qx = stacked_state_weights(cfg);
    const Vector qu = stacked_input_weights(cfg);
    const Vector u_bar = numerics::repeat(tgt.u_bar, cfg.N);
    const Vector offset = pred.Phi * x_hat + pred.Psi_d * numerics::repeat(d_hat, cfg.N) -
                          numerics::repeat(tgt.x_bar, cfg.N);
    const Vector dx0 = x_hat - tgt.x_bar;

    CondensedQp qp;
    qp.H = condensed_hessian(pred, cfg);
    qp.f = pred.Psi.transpose() * qx.cwiseProduct(offset) - qu.cwiseProduct(u_bar);
    qp.c = offset.dot(qx.cwiseProduct(offset)) + u_bar.dot(qu.cwiseProduct(u_bar)) +
           dx0.dot(cfg.Qx.cwiseProduct(dx0));
    qp.A_in.resize(0, idx(pred.N * pred.nu));
    qp.b_in.resize(0);
    return qp;
}

CondensedQp condense(const PredictionMatrices& pred, const OcpConfig& cfg, const Vector& x_hat,
                     const Vector& d_hat, const TargetPair& tgt) {
    CondensedQp qp = condense_unconstrained(pred, cfg, x_hat, d_hat, tgt);
    const Eigen::Index nx = idx(pred.nx);
    const Eigen::Index nu = idx(pred.nu);
    const Eigen::Index nvar = idx(pred.N) * nu;
    const Vector base = pred.Phi * x_hat + pred.Psi_d * numerics::repeat(d_hat, cfg.N);

    RowSet set;
    for (Eigen::Index i = 0; i < idx(pred.N); ++i) {
        for (Eigen::Index j = 0; j < nu; ++j) {
            Vector e = Vector::Zero(nvar);
            e(i * nu + j) = 1.0;
            if (std::isfinite(cfg.u_bounds.hi(j))) {
                set.add(e, cfg.u_bounds.hi(j));
            }
            if (std::isfinite(cfg.u_bounds.lo(j))) {
                set.add(-e, -cfg.u_bounds.lo(j));
            }
        }
    }
    for (Eigen::Index i = 0; i < idx(pred.N); ++i) {
        for (Eigen::Index j = 0; j < nx; ++j) {
            const Eigen::Index row = i * nx + j;
            const Vector psi_row = pred.Psi.row(row).transpose();
            if (std::isfinite(cfg.x_bounds.hi(j))) {
                set.add(psi_row, cfg.x_bounds.hi(j) - base(row));
            }
            if (std::isfinite(cfg.x_bounds.lo(j))) {
                set.add(-psi_row, base(row) - cfg.x_bounds.lo(j));
            }
        }
    }
    const auto m = static_cast<Eigen::Index>(set.rows.size());
    qp.A_in.resize(m, nvar);
    qp.b_in.resize(m);
    for (Eigen::Index k = 0; k < m; ++k) {
        qp.A_in.row(k) = set.rows[static_cast<std::size_t>(k)].transpose();
        qp.b_in(k) = set.rhs[static_cast<std::size_t>(k)];
    }
    return qp;
}

Matrix unconstrained_gain(const PredictionMatrices& pred, const OcpConfig& cfg) {
    const Vector qx = stacked_state_weights(cfg);
    const Matrix h = condensed_hessian(pred, cfg);
    const Eigen::LLT<Matrix> llt(h);
    if (llt.info() != Eigen::Success) {
        throw Error(ErrorCode::PreconditionViolated, "condensed Hessian is not positive definite");
    }
    const Matrix full = -llt.solve(pred.Psi.transpose() * qx.asDiagonal() * pred.Phi);
    return full.topRows(idx(pred.nu));
}

double value_function(const PredictionMatrices& pred, const OcpConfig& cfg, const Vector& x_hat,
                      const Vector& d_hat, const TargetPair& tgt) {
    const CondensedQp qp = condense(pred, cfg, x_hat, d_hat, tgt);
    return solve_qp(qp).objective;
}

Vector predict_states(const PredictionMatrices& pred, const Vector& x_hat, const Vector& d_hat,
                      const Vector& u_seq) {
    return pred.Phi * x_hat + pred.Psi_d * numerics::repeat(d_hat, pred.N) + pred.Psi * u_seq;
}

double rollout_cost(const LinearModel& model, const DisturbanceModel& dist, const OcpConfig& cfg,
                    const Vector& x_hat, const Vector& d_hat, const TargetPair& tgt,
                    const Vector& u_seq) {
    const Eigen::Index nu = idx(model.nu());
    require_dims(u_seq.size() == idx(cfg.N) * nu, "input sequence has wrong length");
    Vector x = x_hat;
    double cost = 0.0;
    for (Eigen::Index i = 0; i < idx(cfg.N); ++i) {
        const Vector u = u_seq.segment(i * nu, nu);
        const Vector dx = x - tgt.x_bar;
        const Vector du = u - tgt.u_bar;
        cost += dx.dot(cfg.Qx.cwiseProduct(dx)) + du.dot(cfg.Qu.cwiseProduct(du));
        x = model.A() * x + model.B() * u + dist.Bd() * d_hat;
    }
    const Vector dx = x - tgt.x_bar;
    return cost + dx.dot(cfg.QxN.cwiseProduct(dx));
}

bool check_terminal_set(const OcpConfig& cfg, const Vector& x_N, const TargetPair& tgt) {
    if (!cfg.terminal_rho) {
        throw Error(ErrorCode::PreconditionViolated, "terminal_rho is not configured");
    }
    const Vector dx = x_N - tgt.x_bar;
    return dx.dot(cfg.QxN.cwiseProduct(dx)) <= *cfg.terminal_rho;
}

} // namespace ofmpc
