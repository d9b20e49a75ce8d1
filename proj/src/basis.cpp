#include "drafto/basis.hpp"

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "drafto/errors.hpp"

namespace drafto {

namespace {
constexpr double kDomainTol = 1e-9;
}  // namespace

BasisFamily basis_family_from_string(const std::string& name) {
  if (name == "deriv_orthogonal") return BasisFamily::DerivOrthogonal;
  if (name == "shifted_legendre") return BasisFamily::ShiftedLegendre;
  throw ConfigError("unknown basis family: " + name);
}

std::string to_string(BasisFamily family) {
  switch (family) {
    case BasisFamily::DerivOrthogonal: return "deriv_orthogonal";
    case BasisFamily::ShiftedLegendre: return "shifted_legendre";
  }
  return "?";
}

Quadrature gauss_legendre(int n, double a, double b) {
  if (n < 1) throw ConfigError("quadrature needs at least one node");
  if (!(b > a)) throw ConfigError("quadrature interval must have b > a");

  // Golub-Welsch: eigen-decompose the symmetric tridiagonal Jacobi matrix of
  // the Legendre recurrence. Eigenvalues are the nodes on [-1, 1]; weights
  // follow from the first component of each normalized eigenvector.
  Mat J = Mat::Zero(n, n);
  for (int k = 1; k < n; ++k) {
    const double off = k / std::sqrt(4.0 * k * k - 1.0);
    J(k, k - 1) = off;
    J(k - 1, k) = off;
  }
  Eigen::SelfAdjointEigenSolver<Mat> es(J);
  if (es.info() != Eigen::Success) throw ConfigError("quadrature eigensolve failed");

  Quadrature q;
  q.nodes.resize(n);
  q.weights.resize(n);
  const double mid = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  for (int i = 0; i < n; ++i) {
    const double x = es.eigenvalues()(i);     // ascending
    const double v0 = es.eigenvectors()(0, i);
    q.nodes(i) = mid + half * x;
    q.weights(i) = half * 2.0 * v0 * v0;
  }
  return q;
}

std::string Weight::describe() const {
  if (profile) return "custom (scale " + std::to_string(scale) + ")";
  if (scale == 1.0) return "uniform";
  return "uniform (scale " + std::to_string(scale) + ")";
}

BasisSet::BasisSet(BasisFamily family, int order, double horizon, int quad_nodes)
    : family_(family), order_(order), horizon_(horizon) {
  if (order_ < 0) throw ConfigError("basis order must be >= 0");
  if (!(horizon_ > 0.0)) throw ConfigError("horizon must be positive");
  if (quad_nodes <= 0) quad_nodes = 4 * (order_ + 1);
  quad_ = gauss_legendre(quad_nodes, 0.0, horizon_);
}

void BasisSet::check_domain(double t) const {
  if (t < -kDomainTol * horizon_ || t > horizon_ * (1.0 + kDomainTol)) {
    throw ConfigError("basis evaluation outside [0, T]: t = " + std::to_string(t));
  }
}

Vec BasisSet::eval(double t) const {
  check_domain(t);
  Vec phi(size());
  if (family_ == BasisFamily::DerivOrthogonal) {
    phi(0) = t / horizon_;
    for (int n = 1; n <= order_; ++n) {
      const double npi = n * std::numbers::pi;
      phi(n) = horizon_ / npi * std::sin(npi * t / horizon_);
    }
  } else {
    // Shifted Legendre P_n(2t/T - 1) via the three-term recurrence.
    const double x = 2.0 * t / horizon_ - 1.0;
    double pm1 = 1.0, p = x;
    phi(0) = pm1;
    if (order_ >= 1) phi(1) = p;
    for (int n = 2; n <= order_; ++n) {
      const double pn = ((2.0 * n - 1.0) * x * p - (n - 1.0) * pm1) / n;
      pm1 = p;
      p = pn;
      phi(n) = pn;
    }
  }
  return phi;
}

Vec BasisSet::eval_deriv(double t) const {
  check_domain(t);
  Vec dphi(size());
  if (family_ == BasisFamily::DerivOrthogonal) {
    dphi(0) = 1.0 / horizon_;
    for (int n = 1; n <= order_; ++n) {
      const double npi = n * std::numbers::pi;
      dphi(n) = std::cos(npi * t / horizon_);
    }
  } else {
    // d/dt P_n(x(t)) with x = 2t/T - 1, using the derivative recurrence
    // P'_{n+1} = P'_{n-1} + (2n+1) P_n.
    const double x = 2.0 * t / horizon_ - 1.0;
    const double dxdt = 2.0 / horizon_;
    double pm1 = 1.0, p = x;
    double dm1 = 0.0, d = 1.0;
    dphi(0) = 0.0;
    if (order_ >= 1) dphi(1) = d * dxdt;
    for (int n = 2; n <= order_; ++n) {
      const double pn = ((2.0 * n - 1.0) * x * p - (n - 1.0) * pm1) / n;
      const double dn = dm1 + (2.0 * n - 1.0) * p;
      pm1 = p;
      p = pn;
      dm1 = d;
      d = dn;
      dphi(n) = dn * dxdt;
    }
  }
  return dphi;
}

Vec BoundaryLift::value(double t) const {
  if (mode == Mode::Constant) return theta0;
  const double s = t / horizon;
  return (1.0 - s) * theta0 + s * thetag;
}

Vec BoundaryLift::deriv(double t) const {
  (void)t;
  if (mode == Mode::Constant) return Vec::Zero(theta0.size());
  return (thetag - theta0) / horizon;
}

BoundaryLift BoundaryLift::constant(Vec theta0) {
  BoundaryLift l;
  l.mode = Mode::Constant;
  l.theta0 = std::move(theta0);
  return l;
}

BoundaryLift BoundaryLift::linear(Vec theta0, Vec thetag, double horizon) {
  if (theta0.size() != thetag.size()) throw ConfigError("lift endpoints must match in size");
  BoundaryLift l;
  l.mode = Mode::Linear;
  l.theta0 = std::move(theta0);
  l.thetag = std::move(thetag);
  l.horizon = horizon;
  return l;
}

Vec Trajectory::value(double t) const {
  const Vec phi = basis->eval(t);
  const int n = basis->size();
  Vec x(dofs);
  for (int m = 0; m < dofs; ++m) x(m) = phi.dot(psi.segment(m * n, n));
  return x + lift.value(t);
}

Vec Trajectory::velocity(double t) const {
  const Vec dphi = basis->eval_deriv(t);
  const int n = basis->size();
  Vec v(dofs);
  for (int m = 0; m < dofs; ++m) v(m) = dphi.dot(psi.segment(m * n, n));
  return v + lift.deriv(t);
}

namespace {

Mat kron_rows(const Vec& phi, int dofs) {
  const int n = static_cast<int>(phi.size());
  Mat out = Mat::Zero(dofs, dofs * n);
  for (int m = 0; m < dofs; ++m) out.block(m, m * n, 1, n) = phi.transpose();
  return out;
}

}  // namespace

Mat basis_stack(const BasisSet& basis, int dofs, double t) {
  return kron_rows(basis.eval(t), dofs);
}

Mat basis_stack_deriv(const BasisSet& basis, int dofs, double t) {
  return kron_rows(basis.eval_deriv(t), dofs);
}

Mat stack_basis_rows(const BasisSet& basis, int dofs, const std::vector<double>& times) {
  const int n = basis.size();
  Mat out = Mat::Zero(static_cast<int>(times.size()) * dofs, dofs * n);
  for (std::size_t k = 0; k < times.size(); ++k) {
    out.middleRows(static_cast<int>(k) * dofs, dofs) = basis_stack(basis, dofs, times[k]);
  }
  return out;
}

Vec stack_lift(const BoundaryLift& lift, const std::vector<double>& times) {
  const int m = static_cast<int>(lift.theta0.size());
  Vec out(static_cast<int>(times.size()) * m);
  for (std::size_t k = 0; k < times.size(); ++k) {
    out.segment(static_cast<int>(k) * m, m) = lift.value(times[k]);
  }
  return out;
}

SmoothnessMatrix smoothness_matrix(const BasisSet& basis, int dofs, const Weight& w) {
  const int n = basis.size();
  const Quadrature& q = basis.quadrature();
  Mat block = Mat::Zero(n, n);
  for (int i = 0; i < q.nodes.size(); ++i) {
    const double wt = w(q.nodes(i));
    if (!(wt > 0.0)) {
      throw ConfigError("smoothness weight must be strictly positive on (0, T)");
    }
    const Vec dphi = basis.eval_deriv(q.nodes(i));
    block.noalias() += q.weights(i) * wt * dphi * dphi.transpose();
  }
  SmoothnessMatrix out;
  out.dof_block = block;
  out.Q = Mat::Zero(dofs * n, dofs * n);
  for (int m = 0; m < dofs; ++m) out.Q.block(m * n, m * n, n, n) = block;
  out.weight_desc = w.describe();
  return out;
}

}  // namespace drafto
