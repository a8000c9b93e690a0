#pragma once

// Quadrature schemes over parameter priors for Bayesian design criteria.
//
// Every scheme is a finite probability measure: nodes live in *model*
// coordinates (after any separation-coordinate mapping) and weights are
// nonnegative and sum to one.  Three builders are provided:
//
//  * monte_carlo       — i.i.d. draws, equal weights;
//  * latin_hypercube   — stratified draws, equal weights;
//  * radial_spherical  — a product of a Radau-type radial rule in the
//    Gaussian radius with a degree-5 rule on the sphere (simplex vertices
//    and edge midpoints with their antipodes, under random rotations),
//    transported componentwise through the prior quantile functions.
//    Exact for all polynomials of total degree <= 5 under the standard
//    normal base measure.

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "bodx/models.hpp"
#include "bodx/priors.hpp"

namespace bodx::quadrature {

struct QuadratureScheme {
  std::vector<models::ParamVector> nodes;
  std::vector<double> weights;

  std::size_t size() const { return nodes.size(); }
  int dim() const { return nodes.empty() ? 0 : static_cast<int>(nodes[0].size()); }
};

// Gauss rule for the weight t^alpha e^{-t} on (0, inf); n nodes integrate
// polynomials up to degree 2n-1 exactly.  Weights sum to Gamma(alpha+1).
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_laguerre(int n, double alpha);

// i.i.d. sampling from the prior; weights 1/n.  If `spec` is given, nodes
// are mapped into that model's native parameterization (e.g. separation
// coordinates (theta1, delta) -> (theta1, theta1 + delta)).
QuadratureScheme monte_carlo(const priors::JointPrior& prior, int n,
                             std::uint64_t seed,
                             const models::ModelSpec* spec = nullptr);

// One stratum per node and factor, uniformly jittered; weights 1/n.
QuadratureScheme latin_hypercube(const priors::JointPrior& prior, int n,
                                 std::uint64_t seed,
                                 const models::ModelSpec* spec = nullptr);

// Rotated simplex-orbit sphere rule times a Radau radial rule, pushed
// through the prior quantiles.  Supports 2 <= dim <= 7; the vertex-orbit
// weight is positive below seven parameters and exactly zero at seven.
// Node count: n_rotations * n_radial * (p+1)(p+2) + 1 (center).
QuadratureScheme radial_spherical(const priors::JointPrior& prior,
                                  int n_radial, int n_rotations,
                                  std::uint64_t seed,
                                  const models::ModelSpec* spec = nullptr);

// CSV with header "weight,beta_0,...,beta_{p-1}", one node per row.
void write_scheme_csv(std::ostream& out, const QuadratureScheme& scheme);

}  // namespace bodx::quadrature
