#pragma once

// Bayesian D-objective evaluation with per-node conditioning verdicts.
//
// phi(xi; Q) = sum_l v_l log|M(xi; beta_l)| is evaluated node by node. A node
// whose log-det is numerically trustworthy contributes exactly; a node whose
// information matrix is ill-conditioned contributes its analytic lower/upper
// bounds instead, so the result is a bracket [lower, upper] that always
// contains the true quadrature value. The bracket is degenerate (and flagged
// exact) when no node needed substitution.

#include <functional>
#include <utility>
#include <vector>

#include "bodx/models.hpp"
#include "bodx/quadrature.hpp"

namespace bodx::objective {

// Condition-number floor below which a Cholesky log-det is not trusted.
inline constexpr double kDefaultRcond = 1e-12;

struct ObjectiveBracket {
  double lower = 0.0;
  double upper = 0.0;
  std::vector<int> s_set;  // indices of substituted (ill-conditioned) nodes
  bool exact = true;       // true iff s_set is empty
};

struct PointBounds {
  double lower = 0.0;
  double upper = 0.0;
};

// Analytic per-vector bounds on log|M(xi; beta)|:
//  * GLM-like: log|F'F| + p * [min_i, max_i] log w(eta_i) (weight envelope);
//  * exponential families: exact log-domain value (lower == upper);
//  * compartmental: 4 log theta3 + log|Mtilde(delta,1)| - 6 theta1 [xmax, xmin].
// Throws std::runtime_error("design singular for the base linear model")
// when the design cannot support bounds (collinear base regressors, fewer
// than three distinct positive times, all-zero times).
PointBounds phi_point_bounds(const models::ModelSpec& spec,
                             const models::Design& xi,
                             const models::ParamVector& beta,
                             double rcond_threshold = kDefaultRcond);

// Bracketed quadrature objective. Node loop may run in parallel; the
// reduction is serial in node-index order, so results are bit-identical
// across thread counts. Zero-weight nodes carry no mass and are skipped.
ObjectiveBracket phi(const models::Design& xi, const models::ModelSpec& spec,
                     const quadrature::QuadratureScheme& q,
                     double rcond_threshold = kDefaultRcond);

// log|M(xi; theta)| for one parameter vector: the exact log-det when well
// conditioned, otherwise the midpoint of the analytic bounds. Errors from an
// unsupportable design propagate.
double local_objective(const models::ModelSpec& spec, const models::Design& xi,
                       const models::ParamVector& theta,
                       double rcond_threshold = kDefaultRcond);

// As local_objective, but reports whether the bound midpoint was used.
struct LocalValue {
  double value = 0.0;
  bool substituted = false;
};
LocalValue local_objective_checked(const models::ModelSpec& spec,
                                   const models::Design& xi,
                                   const models::ParamVector& theta,
                                   double rcond_threshold = kDefaultRcond);

// EW criterion: log|sum_i E_Q[w(eta_i)] f(x_i) f'(x_i)| (GLM families only).
double ew_objective(const models::Design& xi, const models::ModelSpec& spec,
                    const quadrature::QuadratureScheme& q,
                    double rcond_threshold = kDefaultRcond);

// An efficiency bracket says nothing useful once it spans almost all of
// [0, 1]; such nodes still contribute their midpoint but their total weight
// is reported so callers can reject the run.
inline bool uninformative_bracket(double lower, double upper) {
  return lower <= 0.02 && upper >= 0.98;
}

struct PsiResult {
  double psi = 0.0;
  double uninformative_mass = 0.0;
};

// Mean local efficiency Psi = sum_l v_l eff(xi; beta_l). The provider
// returns an efficiency bracket per node; each node contributes its bracket
// midpoint (exact nodes have a degenerate bracket).
using EffProvider =
    std::function<std::pair<double, double>(const models::ParamVector&)>;
PsiResult mean_local_efficiency(const models::Design& xi,
                                const models::ModelSpec& spec,
                                const quadrature::QuadratureScheme& q,
                                const EffProvider& eff);

}  // namespace bodx::objective
