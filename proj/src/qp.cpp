#include "drafto/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/QR>

#include "drafto/errors.hpp"

namespace drafto {

void QpProblem::validate() const {
  const int n = dim();
  if (H.rows() != n || H.cols() != n) throw ConfigError("qp: H must be dim x dim");
  if ((H - H.transpose()).lpNorm<Eigen::Infinity>() > 1e-8 * (1.0 + H.norm())) {
    throw ConfigError("qp: H must be symmetric");
  }
  if (A_eq.rows() != b_eq.size() || (A_eq.rows() > 0 && A_eq.cols() != n)) {
    throw ConfigError("qp: equality block dimensions disagree");
  }
  if (A_ieq.rows() != b_lo.size() || A_ieq.rows() != b_up.size() ||
      (A_ieq.rows() > 0 && A_ieq.cols() != n)) {
    throw ConfigError("qp: inequality block dimensions disagree");
  }
  for (int i = 0; i < b_lo.size(); ++i) {
    if (!(b_lo(i) <= b_up(i))) throw ConfigError("qp: b_lo <= b_up violated");
  }
}

namespace {

constexpr double kSigma = 1e-6;    // primal regularization
constexpr double kAlpha = 1.6;     // over-relaxation
constexpr double kRhoEqScale = 1e3;
constexpr int kRhoAdaptEvery = 25;

struct Workspace {
  Mat C;      // stacked [A_eq; A_ieq]
  Vec l, u;   // stacked bounds (equalities: l = u = b_eq)
  Vec rho;    // per-row penalty
  int m_eq = 0;

  Eigen::LLT<Mat> llt;  // of H2 + sigma I + C' R C (H2 = 2H)

  bool factor(const Mat& H2) {
    Mat K = H2;
    K.diagonal().array() += kSigma;
    if (C.rows() > 0) K.noalias() += C.transpose() * rho.asDiagonal() * C;
    llt.compute(K);
    if (llt.info() != Eigen::Success) {
      // PSD jitter escalation: tiny diagonal lift, then retry.
      K.diagonal().array() += 1e-10 * (1.0 + K.diagonal().maxCoeff());
      llt.compute(K);
    }
    return llt.info() == Eigen::Success;
  }
};

/// OSQP-style primal infeasibility certificate on the dual increment.
bool primal_infeasibility(const Workspace& w, const Vec& dy, double eps) {
  const double dy_inf = dy.lpNorm<Eigen::Infinity>();
  if (dy_inf < eps) return false;
  if ((w.C.transpose() * dy).lpNorm<Eigen::Infinity>() > eps * dy_inf) return false;
  double support = 0.0;
  for (int i = 0; i < dy.size(); ++i) {
    if (dy(i) > 0.0) {
      if (!std::isfinite(w.u(i))) return false;
      support += w.u(i) * dy(i);
    } else if (dy(i) < 0.0) {
      if (!std::isfinite(w.l(i))) return false;
      support += w.l(i) * dy(i);
    }
  }
  return support <= -eps * dy_inf;
}

/// Equality-constrained KKT solve on the detected active set; accepted only
/// if it reproduces a feasible, sign-correct multiplier pair.
bool polish(const QpProblem& p, const Mat& H2, const Vec& q, const Workspace& w, QpSolution& sol,
            double tol) {
  std::vector<int> active_lo, active_up;
  const int m_eq = w.m_eq;
  for (int i = m_eq; i < w.C.rows(); ++i) {
    if (sol.y(i) < -tol) active_lo.push_back(i);
    else if (sol.y(i) > tol) active_up.push_back(i);
  }
  const int n = p.dim();
  const int ma = m_eq + static_cast<int>(active_lo.size() + active_up.size());
  Mat A(ma, n);
  Vec b(ma);
  A.topRows(m_eq) = w.C.topRows(m_eq);
  b.head(m_eq) = w.l.head(m_eq);
  int r = m_eq;
  for (int i : active_lo) {
    A.row(r) = w.C.row(i);
    b(r++) = w.l(i);
  }
  for (int i : active_up) {
    A.row(r) = w.C.row(i);
    b(r++) = w.u(i);
  }

  Mat K = Mat::Zero(n + ma, n + ma);
  K.topLeftCorner(n, n) = H2;
  K.topRightCorner(n, ma) = A.transpose();
  K.bottomLeftCorner(ma, n) = A;
  Vec rhs(n + ma);
  rhs.head(n) = -q;
  rhs.tail(ma) = b;
  Eigen::CompleteOrthogonalDecomposition<Mat> cod(K);
  const Vec xl = cod.solve(rhs);
  const Vec x = xl.head(n);
  const Vec nu = xl.tail(ma);

  // Verify the polished candidate before trusting it.
  if ((A.rows() > 0 ? (A * x - b).lpNorm<Eigen::Infinity>() : 0.0) > 10 * tol) return false;
  const Vec cx = w.C * x;
  for (int i = m_eq; i < w.C.rows(); ++i) {
    if (cx(i) < w.l(i) - 10 * tol || cx(i) > w.u(i) + 10 * tol) return false;
  }
  r = m_eq;
  Vec y = Vec::Zero(w.C.rows());
  y.head(m_eq) = nu.head(m_eq);
  for (int i : active_lo) {
    if (nu(r) > tol) return false;  // lower-active multipliers must be <= 0
    y(i) = nu(r++);
  }
  for (int i : active_up) {
    if (nu(r) < -tol) return false;  // upper-active multipliers must be >= 0
    y(i) = nu(r++);
  }
  const double stat = (H2 * x + q + w.C.transpose() * y).lpNorm<Eigen::Infinity>();
  if (stat > 10 * tol * (1.0 + q.lpNorm<Eigen::Infinity>())) return false;

  sol.x = x;
  sol.y = y;
  sol.primal_residual = (w.C.rows() > 0 ? (cx - cx.cwiseMax(w.l).cwiseMin(w.u)).lpNorm<Eigen::Infinity>() : 0.0);
  sol.dual_residual = stat;
  sol.polished = true;
  return true;
}

}  // namespace

QpSolution solve_qp(const QpProblem& p, double tol, int max_iter,
                    const std::optional<QpWarmStart>& warm) {
  p.validate();
  const int n = p.dim();
  const int m_eq = static_cast<int>(p.A_eq.rows());
  const int m_in = static_cast<int>(p.A_ieq.rows());
  const int m = m_eq + m_in;

  // Internally scale to the 1/2-convention: minimize 1/2 x'(2H)x + (2g)'x.
  const Mat H2 = 2.0 * p.H;
  const Vec q = 2.0 * p.g;

  QpSolution sol;
  if (m == 0) {
    // Unconstrained: exact solve, regularized only if H is not positive
    // definite.
    Eigen::LLT<Mat> llt(H2);
    if (llt.info() == Eigen::Success) {
      sol.x = llt.solve(-q);
    } else {
      Mat K = H2;
      K.diagonal().array() += kSigma;
      sol.x = Eigen::LLT<Mat>(K).solve(-q);
    }
    sol.y = Vec();
    sol.status = QpStatus::Optimal;
    sol.iterations = 0;
    return sol;
  }

  Workspace w;
  w.m_eq = m_eq;
  w.C = Mat(m, n);
  if (m_eq > 0) w.C.topRows(m_eq) = p.A_eq;
  if (m_in > 0) w.C.bottomRows(m_in) = p.A_ieq;
  w.l = Vec(m);
  w.u = Vec(m);
  if (m_eq > 0) {
    w.l.head(m_eq) = p.b_eq;
    w.u.head(m_eq) = p.b_eq;
  }
  if (m_in > 0) {
    w.l.tail(m_in) = p.b_lo;
    w.u.tail(m_in) = p.b_up;
  }

  double rho_base = 0.1;
  auto set_rho = [&]() {
    w.rho = Vec::Constant(m, rho_base);
    w.rho.head(m_eq).array() *= kRhoEqScale;
  };
  set_rho();
  if (!w.factor(H2)) throw ConfigError("qp: KKT factorization failed");

  Vec x = warm ? warm->x : Vec::Zero(n);
  Vec y = (warm && warm->y.size() == m) ? warm->y : Vec::Zero(m);
  Vec z = (w.C * x).cwiseMax(w.l).cwiseMin(w.u);

  sol.status = QpStatus::MaxIter;
  int iter = 0;
  for (iter = 1; iter <= max_iter; ++iter) {
    // x-update (condensed KKT), then over-relaxed z / y updates.
    const Vec rhs = kSigma * x - q + w.C.transpose() * (w.rho.asDiagonal() * z - y);
    const Vec x_tilde = w.llt.solve(rhs);
    const Vec z_tilde = w.C * x_tilde;

    const Vec x_next = kAlpha * x_tilde + (1.0 - kAlpha) * x;
    const Vec z_relax = kAlpha * z_tilde + (1.0 - kAlpha) * z;
    const Vec z_next = (z_relax + w.rho.cwiseInverse().asDiagonal() * y).cwiseMax(w.l).cwiseMin(w.u);
    const Vec y_next = y + w.rho.asDiagonal() * (z_relax - z_next);

    const Vec dy = y_next - y;
    x = x_next;
    z = z_next;
    y = y_next;

    // Convergence check on the true (unrelaxed) residuals.
    const Vec cx = w.C * x;
    const double r_prim = (cx - z).lpNorm<Eigen::Infinity>();
    const double r_dual = (H2 * x + q + w.C.transpose() * y).lpNorm<Eigen::Infinity>();
    const double prim_scale =
        std::max({cx.lpNorm<Eigen::Infinity>(), z.lpNorm<Eigen::Infinity>(), 1.0});
    const double dual_scale = std::max({(H2 * x).lpNorm<Eigen::Infinity>(),
                                        q.lpNorm<Eigen::Infinity>(),
                                        (w.C.transpose() * y).lpNorm<Eigen::Infinity>(), 1.0});
    sol.primal_residual = r_prim;
    sol.dual_residual = r_dual;
    if (r_prim <= tol * prim_scale && r_dual <= tol * dual_scale) {
      sol.status = QpStatus::Optimal;
      break;
    }
    if (primal_infeasibility(w, dy, 1e-6)) {
      sol.status = QpStatus::Infeasible;
      break;
    }
    if (iter % kRhoAdaptEvery == 0) {
      const double num = r_prim / prim_scale;
      const double den = std::max(r_dual / dual_scale, 1e-16);
      const double scale = std::sqrt(num / den);
      const double rho_new = std::clamp(rho_base * scale, 1e-6, 1e6);
      if (rho_new > 5.0 * rho_base || rho_new < rho_base / 5.0) {
        rho_base = rho_new;
        set_rho();
        if (!w.factor(H2)) throw ConfigError("qp: KKT refactorization failed");
      }
    }
  }
  sol.iterations = std::min(iter, max_iter);
  sol.x = x;
  sol.y = y;

  if (sol.status == QpStatus::Optimal) polish(p, H2, q, w, sol, tol);
  return sol;
}

Vec init_trajectory(const BasisSet& basis, const BoundaryLift& lift, VecRef theta0, VecRef thetag,
                    VecRef theta_min, VecRef theta_max, const Mat& Q) {
  const int m = static_cast<int>(theta0.size());
  for (int i = 0; i < m; ++i) {
    if (theta0(i) < theta_min(i) || theta0(i) > theta_max(i) || thetag(i) < theta_min(i) ||
        thetag(i) > theta_max(i)) {
      throw TaskInfeasibleError("endpoint waypoint outside joint limits at joint " +
                                std::to_string(i));
    }
  }
  const BoundaryRows bnd = boundary_rows(basis, lift, theta0, thetag);
  QpProblem p;
  p.H = Q;
  p.g = Vec::Zero(Q.rows());
  p.A_eq = bnd.rows;
  p.b_eq = bnd.rhs;
  p.A_ieq = Mat(0, Q.rows());
  p.b_lo = Vec(0);
  p.b_up = Vec(0);
  const QpSolution sol = solve_qp(p);
  if (sol.status != QpStatus::Optimal) {
    throw TaskInfeasibleError("endpoint-conditioned initialization failed to converge");
  }
  return sol.x;
}

QpSolution repair_step(const Mat& H, const Vec& g, const EqualitySystem& eq,
                       const InequalitySystem& ieq, double lambda_reg, double tol, int max_iter) {
  QpProblem p;
  p.H = H;
  p.H.diagonal().array() += lambda_reg;
  p.g = g;
  p.A_eq = eq.A;
  p.b_eq = eq.b;
  p.A_ieq = ieq.A;
  p.b_lo = ieq.b_lo;
  p.b_up = ieq.b_up;
  return solve_qp(p, tol, max_iter);
}

}  // namespace drafto
