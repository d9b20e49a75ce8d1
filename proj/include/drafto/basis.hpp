#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "drafto/types.hpp"

namespace drafto {

enum class BasisFamily { DerivOrthogonal, ShiftedLegendre };

BasisFamily basis_family_from_string(const std::string& name);
std::string to_string(BasisFamily family);

/// Gauss-Legendre nodes/weights on [a, b].
struct Quadrature {
  Vec nodes;
  Vec weights;
};

Quadrature gauss_legendre(int n, double a, double b);

/// Positive weight for the smoothness integral. Defaults to w(t) = 1.
struct Weight {
  double scale = 1.0;
  std::function<double(double)> profile;  // optional multiplier on top of scale

  double operator()(double t) const { return profile ? scale * profile(t) : scale; }
  std::string describe() const;
};

/// One-DoF basis: N+1 functions on [0, T].
///
/// DerivOrthogonal: phi_0(t) = t/T, phi_n(t) = (T/(n pi)) sin(n pi t / T).
/// All members vanish at t = 0; only phi_0 is nonzero at t = T. The
/// derivatives are mutually orthogonal on [0, T], so the smoothness matrix
/// is diagonal.
/// ShiftedLegendre: Legendre polynomials mapped to [0, T].
class BasisSet {
 public:
  BasisSet(BasisFamily family, int order, double horizon, int quad_nodes = 0);

  BasisFamily family() const { return family_; }
  int order() const { return order_; }         // N
  int size() const { return order_ + 1; }      // functions per DoF
  double horizon() const { return horizon_; }  // T
  const Quadrature& quadrature() const { return quad_; }

  Vec eval(double t) const;        // phi(t)
  Vec eval_deriv(double t) const;  // phi_dot(t)

 private:
  void check_domain(double t) const;

  BasisFamily family_;
  int order_;
  double horizon_;
  Quadrature quad_;
};

/// Fixed function added to the expansion so that coefficients describe the
/// deviation from a nominal motion. Constant reproduces theta0 at t = 0 by
/// construction; Linear interpolates theta0 -> thetag.
struct BoundaryLift {
  enum class Mode { Constant, Linear };

  Mode mode = Mode::Constant;
  Vec theta0;
  Vec thetag;           // Linear only
  double horizon = 1.0; // Linear only

  Vec value(double t) const;
  Vec deriv(double t) const;

  static BoundaryLift constant(Vec theta0);
  static BoundaryLift linear(Vec theta0, Vec thetag, double horizon);
};

/// The decision variable: stacked per-DoF coefficients plus their context.
struct Trajectory {
  std::shared_ptr<const BasisSet> basis;
  BoundaryLift lift;
  int dofs = 0;
  Vec psi;  // length dofs * (N+1), DoF-major blocks

  int coeff_count() const { return dofs * (basis ? basis->size() : 0); }
  Vec value(double t) const;     // xi(t)
  Vec velocity(double t) const;  // xi_dot(t)
};

/// Basis stack Phi(t) = I_M (x) phi(t)^T, shape M x M(N+1).
Mat basis_stack(const BasisSet& basis, int dofs, double t);
Mat basis_stack_deriv(const BasisSet& basis, int dofs, double t);

/// Rows Phi(t_k) stacked over a time list: (K*M) x M(N+1).
Mat stack_basis_rows(const BasisSet& basis, int dofs, const std::vector<double>& times);
/// Lift values stacked over the same time list: length K*M.
Vec stack_lift(const BoundaryLift& lift, const std::vector<double>& times);

struct SmoothnessMatrix {
  Mat Q;             // M(N+1) x M(N+1), block diagonal across DoFs
  Mat dof_block;     // the repeated (N+1) x (N+1) block
  std::string weight_desc;
};

/// Q_{ij} = int_0^T phi_dot_i phi_dot_j w dt, replicated per DoF block.
SmoothnessMatrix smoothness_matrix(const BasisSet& basis, int dofs, const Weight& w = {});

}  // namespace drafto
