#include "ofmpc/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ofmpc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Internal form: min 0.5 u'Gu + a'u s.t. n_j'u >= b_j with G = H, a = f,
// n_j = -A_in row j, b_j = -b_in(j). Multipliers mu satisfy Gu + a = N mu.
class DualActiveSet {
public:
    DualActiveSet(const CondensedQp& qp, const QpOptions& options)
        : qp_(qp), options_(options), n_(qp.H.rows()), m_(qp.A_in.rows()), llt_(qp.H) {
        if (llt_.info() != Eigen::Success) {
            throw Error(ErrorCode::PreconditionViolated, "QP Hessian is not positive definite");
        }
        // Ginv n_j for every constraint, reused by all step computations.
        ginv_n_ = llt_.solve(-qp_.A_in.transpose());
        for (Eigen::Index j = 0; j < m_; ++j) {
            const double scale = qp_.A_in.row(j).cwiseAbs().maxCoeff();
            row_scale_.push_back(scale > 0.0 ? scale : 1.0);
        }
    }

    QpSolution run(const std::vector<std::size_t>& warm_start) {
        seed(warm_start);
        const std::size_t cap = options_.max_iterations > 0
                                    ? options_.max_iterations
                                    : static_cast<std::size_t>(10 * (n_ + m_) + 50);
        std::size_t iterations = 0;
        while (true) {
            const Eigen::Index p = first_violated();
            if (p < 0) {
                break;
            }
            add_constraint(p, iterations, cap);
        }
        return finish(iterations);
    }

private:
    double slack(Eigen::Index j) const {
        // n_j'u - b_j = b_in(j) - A_in(j) u, positive when satisfied.
        return qp_.b_in(j) - qp_.A_in.row(j).dot(u_);
    }

    bool violated(Eigen::Index j) const {
        const double tol = 1e-11 * (1.0 + std::abs(qp_.b_in(j)) + row_scale_[static_cast<std::size_t>(j)] * u_.cwiseAbs().maxCoeff());
        return slack(j) < -tol;
    }

    Eigen::Index first_violated() const {
        for (Eigen::Index j = 0; j < m_; ++j) {
            if (!is_active(j) && violated(j)) {
                return j;
            }
        }
        return -1;
    }

    bool is_active(Eigen::Index j) const {
        return std::find(active_.begin(), active_.end(), j) != active_.end();
    }

    Matrix active_normals() const {
        Matrix normals(n_, static_cast<Eigen::Index>(active_.size()));
        for (std::size_t k = 0; k < active_.size(); ++k) {
            normals.col(static_cast<Eigen::Index>(k)) = -qp_.A_in.row(active_[k]).transpose();
        }
        return normals;
    }

    Matrix active_ginv_normals() const {
        Matrix out(n_, static_cast<Eigen::Index>(active_.size()));
        for (std::size_t k = 0; k < active_.size(); ++k) {
            out.col(static_cast<Eigen::Index>(k)) = ginv_n_.col(active_[k]);
        }
        return out;
    }

    // Minimizer over the active constraints treated as equalities, with the
    // corresponding multipliers.
    void solve_equality() {
        const Vector free_min = llt_.solve(-qp_.f);
        if (active_.empty()) {
            u_ = free_min;
            mu_.resize(0);
            return;
        }
        const Matrix normals = active_normals();
        const Matrix gn = active_ginv_normals();
        const Matrix schur = normals.transpose() * gn;
        Vector rhs(static_cast<Eigen::Index>(active_.size()));
        for (std::size_t k = 0; k < active_.size(); ++k) {
            rhs(static_cast<Eigen::Index>(k)) = -qp_.b_in(active_[k]);
        }
        // N'u = b with u = Ginv(N mu - a).
        mu_ = numerics::solve_linear(schur, Vector(rhs - normals.transpose() * free_min));
        u_ = free_min + gn * mu_;
    }

    void seed(const std::vector<std::size_t>& warm_start) {
        active_.clear();
        for (const std::size_t j : warm_start) {
            if (j < static_cast<std::size_t>(m_) && !is_active(static_cast<Eigen::Index>(j))) {
                active_.push_back(static_cast<Eigen::Index>(j));
            }
        }
        std::sort(active_.begin(), active_.end());
        while (true) {
            try {
                solve_equality();
            } catch (const Error&) {
                // Dependent warm-start rows: fall back to a cold start.
                active_.clear();
                solve_equality();
                return;
            }
            if (active_.empty()) {
                return;
            }
            Eigen::Index worst = 0;
            const double min_mu = mu_.minCoeff(&worst);
            if (min_mu >= 0.0) {
                return;
            }
            active_.erase(active_.begin() + worst);
        }
    }

    void drop(std::size_t position) {
        active_.erase(active_.begin() + static_cast<std::ptrdiff_t>(position));
        Vector kept(mu_.size() - 1);
        Eigen::Index w = 0;
        for (Eigen::Index k = 0; k < mu_.size(); ++k) {
            if (k != static_cast<Eigen::Index>(position)) {
                kept(w++) = mu_(k);
            }
        }
        mu_ = kept;
    }

    void add_constraint(Eigen::Index p, std::size_t& iterations, std::size_t cap) {
        const Vector np = -qp_.A_in.row(p).transpose();
        const Vector ginv_np = ginv_n_.col(p);
        const double np_norm = np.dot(ginv_np);
        double mu_p = 0.0;

        while (true) {
            if (++iterations > cap) {
                throw Error(ErrorCode::MaxIterations,
                            "dual active-set exceeded " + std::to_string(cap) + " iterations");
            }
            // Step directions: primal z and dual r for the current active set.
            Vector r = Vector::Zero(static_cast<Eigen::Index>(active_.size()));
            Vector z = ginv_np;
            if (!active_.empty()) {
                const Matrix normals = active_normals();
                const Matrix gn = active_ginv_normals();
                const Matrix schur = normals.transpose() * gn;
                r = numerics::solve_linear(schur, Vector(normals.transpose() * ginv_np));
                z = ginv_np - gn * r;
            }
            const double znp = z.dot(np);
            const bool dependent = znp <= 1e-12 * np_norm;

            // Partial step: largest dual move keeping active multipliers >= 0.
            double t_partial = kInf;
            std::size_t block = 0;
            for (std::size_t k = 0; k < active_.size(); ++k) {
                const double rk = r(static_cast<Eigen::Index>(k));
                if (rk > 0.0) {
                    const double ratio = mu_(static_cast<Eigen::Index>(k)) / rk;
                    if (ratio < t_partial ||
                        (ratio == t_partial && active_[k] < active_[block])) {
                        t_partial = ratio;
                        block = k;
                    }
                }
            }
            const double t_full = dependent ? kInf : -slack(p) / znp;
            const double t = std::min(t_partial, t_full);

            if (!std::isfinite(t)) {
                throw Error(ErrorCode::Infeasible,
                            "constraint " + std::to_string(p) + " cannot be satisfied");
            }
            if (!dependent) {
                u_ += t * z;
            }
            if (mu_.size() > 0) {
                mu_ -= t * r;
            }
            mu_p += t;

            if (!dependent && t_full <= t_partial) {
                active_.push_back(p);
                mu_.conservativeResize(mu_.size() + 1);
                mu_(mu_.size() - 1) = mu_p;
                return;
            }
            drop(block);
        }
    }

    QpSolution finish(std::size_t iterations) {
        QpSolution sol;
        sol.u_seq = u_;
        sol.iterations = iterations;
        sol.multipliers = Vector::Zero(m_);
        for (std::size_t k = 0; k < active_.size(); ++k) {
            sol.multipliers(active_[k]) = 2.0 * mu_(static_cast<Eigen::Index>(k));
            sol.active_set.push_back(static_cast<std::size_t>(active_[k]));
        }
        std::sort(sol.active_set.begin(), sol.active_set.end());
        sol.objective = qp_.objective(u_);
        sol.kkt_residual = kkt_residual(qp_, u_, sol.multipliers);
        return sol;
    }

    const CondensedQp& qp_;
    QpOptions options_;
    Eigen::Index n_;
    Eigen::Index m_;
    Eigen::LLT<Matrix> llt_;
    Matrix ginv_n_;
    std::vector<double> row_scale_;
    std::vector<Eigen::Index> active_;
    Vector u_;
    Vector mu_;
};

} // namespace

double CondensedQp::objective(const Vector& u) const {
    return u.dot(H * u) + 2.0 * u.dot(f) + c;
}

double kkt_residual(const CondensedQp& qp, const Vector& u, const Vector& lambda) {
    const double scale = 1.0 + qp.f.cwiseAbs().maxCoeff() +
                         (qp.H * u).cwiseAbs().maxCoeff();
    Vector grad = 2.0 * (qp.H * u + qp.f);
    double primal = 0.0;
    double dual = 0.0;
    double comp = 0.0;
    if (qp.A_in.rows() > 0) {
        grad += qp.A_in.transpose() * lambda;
        const Vector s = qp.A_in * u - qp.b_in;
        for (Eigen::Index j = 0; j < s.size(); ++j) {
            const double row = 1.0 + std::abs(qp.b_in(j));
            primal = std::max(primal, std::max(0.0, s(j)) / row);
            dual = std::max(dual, std::max(0.0, -lambda(j)));
            comp = std::max(comp, std::abs(lambda(j) * s(j)) / (row * scale));
        }
    }
    const double stationarity = grad.cwiseAbs().maxCoeff() / scale;
    return std::max({stationarity, primal, dual, comp});
}

QpSolution solve_qp(const CondensedQp& qp, const std::vector<std::size_t>& warm_start,
                    const QpOptions& options) {
    const Eigen::Index n = qp.H.rows();
    if (n == 0 || qp.H.cols() != n || qp.f.size() != n) {
        throw Error(ErrorCode::DimensionMismatch, "QP Hessian and gradient sizes differ");
    }
    if (qp.A_in.rows() != qp.b_in.size() || (qp.A_in.rows() > 0 && qp.A_in.cols() != n)) {
        throw Error(ErrorCode::DimensionMismatch, "QP constraint sizes differ");
    }
    DualActiveSet solver(qp, options);
    QpSolution sol = solver.run(warm_start);
    if (sol.kkt_residual > options.tol_kkt) {
        throw Error(ErrorCode::NoConvergence,
                    "KKT residual " + std::to_string(sol.kkt_residual) + " above tolerance");
    }
    return sol;
}

} // namespace ofmpc
