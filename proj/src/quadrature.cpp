#include "bodx/quadrature.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>

#include "bodx/common.hpp"
#include "bodx/linalg.hpp"
#include "bodx/normal.hpp"

namespace bodx::quadrature {

namespace {

double u01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

models::ParamVector map_node(const priors::JointPrior& jp,
                             const models::ModelSpec* spec,
                             const models::ParamVector& draw) {
  if (spec == nullptr) return draw;
  return priors::to_model_params(jp, *spec, draw);
}

// Unit vectors of a regular simplex in R^p: scaled columns of the Helmert
// sum-to-zero basis, so all pairwise inner products are -1/p.
std::vector<models::ParamVector> simplex_vertices(int p) {
  std::vector<models::ParamVector> v(p + 1, models::ParamVector(p, 0.0));
  const double scale = std::sqrt((p + 1.0) / p);
  for (int m = 1; m <= p; ++m) {
    const double c = 1.0 / std::sqrt(m * (m + 1.0));
    for (int k = 0; k <= p; ++k) {
      double h = 0.0;
      if (k < m) h = c;
      if (k == m) h = -m * c;
      v[k][m - 1] = scale * h;
    }
  }
  return v;
}

// Haar-random rotation: modified Gram-Schmidt on a Gaussian matrix (the
// residual norms play the role of a positive-diagonal R factor).
std::vector<double> haar_rotation(int p, std::mt19937_64& rng) {
  std::vector<double> q(static_cast<std::size_t>(p) * p);
  for (double& x : q) x = norm_quantile(u01(rng));
  for (int j = 0; j < p; ++j) {
    for (int k = 0; k < j; ++k) {
      double dot = 0.0;
      for (int i = 0; i < p; ++i) dot += q[i * p + k] * q[i * p + j];
      for (int i = 0; i < p; ++i) q[i * p + j] -= dot * q[i * p + k];
    }
    double norm = 0.0;
    for (int i = 0; i < p; ++i) norm += q[i * p + j] * q[i * p + j];
    norm = std::sqrt(norm);
    require(norm > 1e-12, "degenerate random rotation draw");
    for (int i = 0; i < p; ++i) q[i * p + j] /= norm;
  }
  return q;
}

models::ParamVector transport(const priors::JointPrior& jp,
                              const models::ParamVector& z) {
  models::ParamVector out(z.size());
  for (std::size_t i = 0; i < z.size(); ++i)
    out[i] = jp.components[i].inv_cdf(norm_cdf(z[i]));
  return out;
}

}  // namespace

GaussRule gauss_laguerre(int n, double alpha) {
  require(n >= 1, "gauss_laguerre needs at least one node");
  require(alpha > -1.0, "gauss_laguerre needs alpha > -1");
  linalg::SymMatrix jac(n);
  for (int k = 0; k < n; ++k) {
    jac.set(k, k, 2.0 * k + alpha + 1.0);
    if (k >= 1) jac.set(k, k - 1, std::sqrt(k * (k + alpha)));
  }
  std::vector<double> values, vectors;
  linalg::jacobi_eigen(jac, values, vectors);
  GaussRule rule;
  rule.nodes = values;
  rule.weights.resize(n);
  const double mass = std::exp(std::lgamma(alpha + 1.0));
  for (int j = 0; j < n; ++j) {
    const double q0 = vectors[0 * n + j];
    rule.weights[j] = mass * q0 * q0;
  }
  return rule;
}

QuadratureScheme monte_carlo(const priors::JointPrior& prior, int n,
                             std::uint64_t seed,
                             const models::ModelSpec* spec) {
  require(n >= 1, "monte_carlo needs at least one node");
  QuadratureScheme q;
  q.nodes.reserve(n);
  for (auto& draw : priors::sample(prior, static_cast<std::size_t>(n), seed))
    q.nodes.push_back(map_node(prior, spec, draw));
  q.weights.assign(n, 1.0 / n);
  return q;
}

QuadratureScheme latin_hypercube(const priors::JointPrior& prior, int n,
                                 std::uint64_t seed,
                                 const models::ModelSpec* spec) {
  require(n >= 1, "latin_hypercube needs at least one node");
  const int p = prior.dim();
  std::mt19937_64 rng(seed);
  std::vector<models::ParamVector> draws(n, models::ParamVector(p));
  std::vector<int> perm(n);
  for (int j = 0; j < p; ++j) {
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int i = n - 1; i > 0; --i) {
      const int k = static_cast<int>(rng() % static_cast<std::uint64_t>(i + 1));
      std::swap(perm[i], perm[k]);
    }
    for (int i = 0; i < n; ++i) {
      const double u = (perm[i] + u01(rng)) / n;
      draws[i][j] = prior.components[j].inv_cdf(u);
    }
  }
  QuadratureScheme q;
  q.nodes.reserve(n);
  for (const auto& draw : draws) q.nodes.push_back(map_node(prior, spec, draw));
  q.weights.assign(n, 1.0 / n);
  return q;
}

QuadratureScheme radial_spherical(const priors::JointPrior& prior,
                                  int n_radial, int n_rotations,
                                  std::uint64_t seed,
                                  const models::ModelSpec* spec) {
  const int p = prior.dim();
  require(p >= 2,
          "radial-spherical rule needs at least two parameters; "
          "use monte-carlo or latin-hypercube for one");
  require(p <= 7,
          "spherical orbit weights become negative beyond seven parameters; "
          "use monte-carlo or latin-hypercube");
  require(n_radial >= 1, "radial rule needs at least one shell");
  require(n_rotations >= 1, "need at least one rotation");

  // Sphere part: simplex vertices and normalized edge midpoints, plus
  // antipodes.  Orbit weights follow from exactness on degree-4 even
  // polynomials; the vertex weight carries a factor (7 - p).
  const auto verts = simplex_vertices(p);
  const double wa = p * (7.0 - p) / (2.0 * (p + 1.0) * (p + 1.0) * (p + 2.0));
  const double wb =
      2.0 * (p - 1.0) * (p - 1.0) / (p * (p + 1.0) * (p + 1.0) * (p + 2.0));
  std::vector<models::ParamVector> dirs;
  std::vector<double> dir_w;
  for (const auto& v : verts) {
    dirs.push_back(v);
    dir_w.push_back(wa);
  }
  for (int k = 0; k <= p; ++k)
    for (int l = k + 1; l <= p; ++l) {
      models::ParamVector m(p);
      double norm = 0.0;
      for (int i = 0; i < p; ++i) {
        m[i] = verts[k][i] + verts[l][i];
        norm += m[i] * m[i];
      }
      norm = std::sqrt(norm);
      for (double& x : m) x /= norm;
      dirs.push_back(std::move(m));
      dir_w.push_back(wb);
    }
  const std::size_t half = dirs.size();
  for (std::size_t d = 0; d < half; ++d) {
    models::ParamVector neg = dirs[d];
    for (double& x : neg) x = -x;
    dirs.push_back(std::move(neg));
    dir_w.push_back(dir_w[d]);
  }

  // Radial part in t = r^2/2 ~ Gamma(p/2, 1): a Radau-type rule with a node
  // fixed at the origin.  Interior nodes are the Gauss nodes for the shifted
  // weight t^{p/2} e^{-t}; dividing their weights by t turns them back into
  // a rule for t^{p/2-1} e^{-t}, and the origin absorbs the residual mass.
  const double alpha = 0.5 * p - 1.0;
  const auto inner = gauss_laguerre(n_radial, alpha + 1.0);
  std::vector<double> radii(n_radial), rho(n_radial);
  const double total = std::exp(std::lgamma(alpha + 1.0));
  double interior_mass = 0.0;
  for (int j = 0; j < n_radial; ++j) {
    radii[j] = std::sqrt(2.0 * inner.nodes[j]);
    rho[j] = inner.weights[j] / (inner.nodes[j] * total);
    interior_mass += rho[j];
  }
  require(interior_mass < 1.0 + 1e-9, "radial rule has negative center mass");
  const double rho0 = std::max(0.0, 1.0 - interior_mass);

  std::mt19937_64 rng(seed);
  QuadratureScheme q;
  q.nodes.reserve(static_cast<std::size_t>(n_rotations) * n_radial * dirs.size() + 1);
  models::ParamVector z(p);
  for (int r = 0; r < n_rotations; ++r) {
    const auto rot = haar_rotation(p, rng);
    for (int j = 0; j < n_radial; ++j)
      for (std::size_t d = 0; d < dirs.size(); ++d) {
        for (int i = 0; i < p; ++i) {
          double s = 0.0;
          for (int k2 = 0; k2 < p; ++k2) s += rot[i * p + k2] * dirs[d][k2];
          z[i] = radii[j] * s;
        }
        q.nodes.push_back(map_node(prior, spec, transport(prior, z)));
        q.weights.push_back(rho[j] * dir_w[d] / n_rotations);
      }
  }
  std::fill(z.begin(), z.end(), 0.0);
  q.nodes.push_back(map_node(prior, spec, transport(prior, z)));
  q.weights.push_back(rho0);

  double sum = 0.0;
  for (double w : q.weights) sum += w;
  require(std::abs(sum - 1.0) < 1e-9, "quadrature weights failed to normalize");
  for (double& w : q.weights) w /= sum;
  return q;
}

void write_scheme_csv(std::ostream& out, const QuadratureScheme& scheme) {
  out << "weight";
  for (int j = 0; j < scheme.dim(); ++j) out << ",beta_" << j;
  out << "\n";
  char buf[64];
  for (std::size_t l = 0; l < scheme.size(); ++l) {
    std::snprintf(buf, sizeof(buf), "%.17g", scheme.weights[l]);
    out << buf;
    for (double x : scheme.nodes[l]) {
      std::snprintf(buf, sizeof(buf), "%.17g", x);
      out << "," << buf;
    }
    out << "\n";
  }
}

}  // namespace bodx::quadrature
