#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>
#include <vector>

#include "bodx/common.hpp"
#include "bodx/models.hpp"
#include "bodx/objective.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"

using namespace bodx;
using models::Design;
using models::Link;
using models::ModelSpec;
using models::ParamVector;
using models::Region;
using models::RegionKind;

namespace {

// Extended-precision oracle: w(eta) per link, information matrix, log-det by
// Gaussian elimination. Used only to check the double-precision bound path.
long double wl(Link link, long double eta) {
  switch (link) {
    case Link::Logit: {
      const long double e = expl(-fabsl(eta));
      return e / ((1.0L + e) * (1.0L + e));
    }
    case Link::Probit: {
      const long double phi =
          expl(-eta * eta / 2.0L) / sqrtl(2.0L * 3.14159265358979323846264338327950288L);
      // Both tails through erfcl directly; 1 - Phi(eta) computed as Phi(-eta)
      // so neither factor saturates at 1.
      const long double lo_tail = 0.5L * erfcl(-eta / sqrtl(2.0L));
      const long double hi_tail = 0.5L * erfcl(eta / sqrtl(2.0L));
      return phi * phi / (lo_tail * hi_tail);
    }
    case Link::Log:
      return expl(eta);
  }
  return 0.0L;
}

struct LdOracle {
  long double logdet = 0.0L;
  bool reliable = false;  // pivots resolvable at long-double precision
};

LdOracle ld_logdet(std::vector<long double> m, int p) {
  // Plain Gaussian elimination: for symmetric positive-definite input the
  // diagonal pivots stay positive, and no pivoting keeps the sign exact.
  // When the pivot span exceeds the mantissa, the small pivots are pure
  // cancellation noise, so the result is flagged unreliable and skipped.
  long double acc = 0.0L, piv_min = HUGE_VALL, piv_max = 0.0L;
  for (int k = 0; k < p; ++k) {
    const long double piv = m[k * p + k];
    if (piv <= 0.0L) return {-HUGE_VALL, false};
    piv_min = std::min(piv_min, piv);
    piv_max = std::max(piv_max, piv);
    acc += logl(piv);
    for (int i = k + 1; i < p; ++i) {
      const long double f = m[i * p + k] / piv;
      for (int j = k; j < p; ++j) m[i * p + j] -= f * m[k * p + j];
    }
  }
  return {acc, piv_min / piv_max > 1e-15L};
}

LdOracle glm_oracle_logdet(const ModelSpec& spec, const Design& xi,
                           const ParamVector& beta) {
  const int p = spec.param_dim();
  std::vector<long double> m(static_cast<std::size_t>(p) * p, 0.0L);
  for (int i = 0; i < xi.n(); ++i) {
    const auto f = models::regress(spec, xi.point(i));
    long double eta = 0.0L;
    for (int j = 0; j < p; ++j) eta += static_cast<long double>(f[j]) * beta[j];
    const long double w = wl(spec.effective_link(), eta);
    for (int a = 0; a < p; ++a)
      for (int b = 0; b < p; ++b)
        m[a * p + b] += w * static_cast<long double>(f[a]) * f[b];
  }
  return ld_logdet(std::move(m), p);
}

LdOracle mu_beta_oracle_logdet(const Design& xi, const ParamVector& t) {
  const double mu = t[0], b1 = t[1];
  std::vector<long double> m(4, 0.0L);
  for (int i = 0; i < xi.n(); ++i) {
    const double x = xi.at(i, 0);
    const long double w = wl(Link::Logit, static_cast<long double>(b1) * (x - mu));
    const long double g0 = -b1, g1 = x - mu;
    m[0] += w * g0 * g0;
    m[1] += w * g0 * g1;
    m[2] += w * g1 * g0;
    m[3] += w * g1 * g1;
  }
  return ld_logdet(std::move(m), 2);
}

Design cube_design(int q, std::vector<double> pts) {
  Design d(Region{RegionKind::Cube, q}, static_cast<int>(pts.size()) / q);
  for (int i = 0; i < d.n(); ++i)
    for (int j = 0; j < q; ++j) d.set(i, j, pts[static_cast<std::size_t>(i) * q + j]);
  return d;
}

Design time_design(std::vector<double> pts, double upper = 24.0) {
  Design d(Region{RegionKind::TimeAxis, 1, upper}, static_cast<int>(pts.size()));
  for (int i = 0; i < d.n(); ++i) d.set(i, 0, pts[i]);
  return d;
}

double u01(std::mt19937_64& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

quadrature::QuadratureScheme point_mass(const ParamVector& beta) {
  quadrature::QuadratureScheme q;
  q.nodes = {beta};
  q.weights = {1.0};
  return q;
}

}  // namespace

TEST_CASE("logit bounds at beta = 0 are exact and equal log|F'F| + p log(1/4)") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1});
  const ParamVector beta = {0.0, 0.0, 0.0};
  auto b = objective::phi_point_bounds(spec, xi, beta);
  const double expect = 3.0 * std::log(4.0) + 3.0 * std::log(0.25);  // = 0
  CHECK(b.lower == doctest::Approx(expect).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(expect).epsilon(1e-12));
  CHECK(b.lower == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("glm point bounds sandwich the extended-precision log-det") {
  std::mt19937_64 rng(2024);
  for (Link link : {Link::Logit, Link::Probit, Link::Log}) {
    auto spec = ModelSpec::glm(link, 2, models::parse_terms("1, x1, x2", 2));
    int checked = 0;
    for (int rep = 0; rep < 200; ++rep) {
      Design xi(Region{RegionKind::Cube, 2}, 5);
      for (int i = 0; i < 5; ++i)
        for (int j = 0; j < 2; ++j) xi.set(i, j, 2.0 * u01(rng) - 1.0);
      const double big = link == Link::Probit ? 25.0 : 150.0;
      ParamVector beta = {(2.0 * u01(rng) - 1.0) * (rep % 3 == 0 ? big : 2.0),
                          (2.0 * u01(rng) - 1.0) * 3.0,
                          (2.0 * u01(rng) - 1.0) * 3.0};
      auto b = objective::phi_point_bounds(spec, xi, beta);
      const auto oracle = glm_oracle_logdet(spec, xi, beta);
      if (!oracle.reliable) continue;  // beyond extended-precision resolution
      ++checked;
      const double exact = static_cast<double>(oracle.logdet);
      CHECK(b.lower <= exact + 1e-7);
      CHECK(b.upper >= exact - 1e-7);
    }
    CHECK(checked >= 120);
  }
}

TEST_CASE("location-slope logistic bounds sandwich the oracle") {
  auto spec = ModelSpec::logistic_mu_beta();
  std::mt19937_64 rng(77);
  int checked = 0;
  for (int rep = 0; rep < 200; ++rep) {
    Design xi(Region{RegionKind::Cube, 1}, 4);
    for (int i = 0; i < 4; ++i) xi.set(i, 0, 2.0 * u01(rng) - 1.0);
    ParamVector t = {2.0 * u01(rng) - 1.0,
                     (2.0 * u01(rng) - 1.0) * (rep % 4 == 0 ? 60.0 : 3.0)};
    if (std::abs(t[1]) < 1e-3) t[1] = 1e-3;
    auto b = objective::phi_point_bounds(spec, xi, t);
    const auto oracle = mu_beta_oracle_logdet(xi, t);
    if (!oracle.reliable) continue;
    ++checked;
    const double exact = static_cast<double>(oracle.logdet);
    CHECK(b.lower <= exact + 1e-7);
    CHECK(b.upper >= exact - 1e-7);
  }
  CHECK(checked >= 120);
}

TEST_CASE("exponential point bounds are the exact log information") {
  auto spec = ModelSpec::exponential_beta();
  auto xi = time_design({1.0, 2.0});
  const ParamVector beta = {0.5};
  auto b = objective::phi_point_bounds(spec, xi, beta);
  const double exact = std::log(std::exp(-1.0) + 4.0 * std::exp(-2.0));
  CHECK(b.lower == doctest::Approx(exact).epsilon(1e-12));
  CHECK(b.upper == doctest::Approx(exact).epsilon(1e-12));

  // Far into the tail the direct matrix underflows but the log form stays
  // finite and exact: log(x^2 e^{-2 beta x}) at the dominant point.
  const ParamVector huge = {4000.0};
  auto tail = objective::phi_point_bounds(spec, xi, huge);
  CHECK(tail.lower == doctest::Approx(tail.upper));
  CHECK(tail.lower == doctest::Approx(-2.0 * 4000.0).epsilon(1e-6));
}

TEST_CASE("compartmental point bounds sandwich a well-conditioned log-det") {
  auto spec = ModelSpec::compartmental();
  std::mt19937_64 rng(11);
  auto xi = time_design({0.5, 1.5, 3.0, 7.0, 12.0});
  for (int rep = 0; rep < 200; ++rep) {
    const double t1 = 0.05 + u01(rng);
    const double delta = 0.05 + 2.0 * u01(rng);
    const double t3 = 0.2 + 2.0 * u01(rng);
    const ParamVector theta = {t1, t1 + delta, t3};
    auto b = objective::phi_point_bounds(spec, xi, theta);
    auto ld = linalg::log_det_psd(models::info_matrix(spec, xi, theta), 1e-12);
    if (!ld.ok()) continue;
    CHECK(b.lower <= ld.logdet + 1e-7);
    CHECK(b.upper >= ld.logdet - 1e-7);
  }
}

TEST_CASE("phi with a well-conditioned scheme is exact") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1});
  quadrature::QuadratureScheme q;
  q.nodes = {{0.2, 0.4, -0.3}, {-0.5, 1.0, 0.7}, {1.2, -0.2, 0.1}};
  q.weights = {0.5, 0.25, 0.25};
  auto br = objective::phi(xi, spec, q, 1e-12);
  CHECK(br.exact);
  CHECK(br.s_set.empty());
  double expect = 0.0;
  for (std::size_t l = 0; l < q.nodes.size(); ++l) {
    auto ld = linalg::log_det_psd(models::info_matrix(spec, xi, q.nodes[l]), 1e-12);
    REQUIRE(ld.ok());
    expect += q.weights[l] * ld.logdet;
  }
  CHECK(br.lower == doctest::Approx(expect).epsilon(1e-12));
  CHECK(br.upper == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("single extreme node lands in S and widens the bracket by its bounds") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1});
  // The extreme node gives eta in {0, 260} across the factorial points, so
  // half the runs keep weight 1/4 while the rest underflow: the information
  // matrix is numerically rank-deficient, not merely small.
  quadrature::QuadratureScheme q;
  q.nodes = {{0.2, 0.4, -0.3}, {130.0, 130.0, 0.0}};
  q.weights = {0.75, 0.25};
  auto br = objective::phi(xi, spec, q, 1e-12);
  REQUIRE(br.s_set == std::vector<int>{1});
  CHECK_FALSE(br.exact);
  CHECK(br.lower < br.upper);
  auto good = linalg::log_det_psd(models::info_matrix(spec, xi, q.nodes[0]), 1e-12);
  auto bad = objective::phi_point_bounds(spec, xi, q.nodes[1]);
  CHECK(br.lower ==
        doctest::Approx(0.75 * good.logdet + 0.25 * bad.lower).epsilon(1e-10));
  CHECK(br.upper ==
        doctest::Approx(0.75 * good.logdet + 0.25 * bad.upper).epsilon(1e-10));
}

TEST_CASE("zero-weight nodes are mass-free: excluded from S and the sums") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1});
  quadrature::QuadratureScheme q;
  q.nodes = {{0.2, 0.4, -0.3}, {200.0, 200.0, 0.0}};
  q.weights = {1.0, 0.0};
  auto br = objective::phi(xi, spec, q, 1e-12);
  CHECK(br.exact);
  CHECK(br.s_set.empty());
  auto good = linalg::log_det_psd(models::info_matrix(spec, xi, q.nodes[0]), 1e-12);
  CHECK(br.lower == doctest::Approx(good.logdet));
}

TEST_CASE("point-mass scheme at a well-conditioned vector collapses the bracket") {
  auto spec = ModelSpec::glm(Link::Logit, 1, models::parse_terms("1, x1", 1));
  auto xi = cube_design(1, {-1.0, 1.0});
  const ParamVector beta = {0.3, 0.9};
  auto br = objective::phi(xi, spec, point_mass(beta), 1e-12);
  auto ld = linalg::log_det_psd(models::info_matrix(spec, xi, beta), 1e-12);
  CHECK(br.exact);
  CHECK(br.lower == doctest::Approx(ld.logdet).epsilon(1e-12));
  CHECK(br.upper == doctest::Approx(ld.logdet).epsilon(1e-12));
}

TEST_CASE("a base-singular design is refused with a clear error") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  // x2 == x1 everywhere: the base regressor columns are collinear.
  auto xi = cube_design(2, {0.5, 0.5, -0.2, -0.2, 0.9, 0.9, -1, -1});
  CHECK_THROWS_WITH_AS(
      objective::phi_point_bounds(spec, xi, ParamVector{0.1, 0.2, 0.3}),
      "design singular for the base linear model", std::runtime_error);
  CHECK_THROWS_AS(objective::phi(xi, spec, point_mass({0.1, 0.2, 0.3}), 1e-12),
                  std::runtime_error);

  auto comp = ModelSpec::compartmental();
  auto two_times = time_design({1.0, 2.0, 1.0});
  CHECK_THROWS_WITH_AS(
      objective::phi_point_bounds(comp, two_times, ParamVector{0.1, 1.0, 1.0}),
      "design singular for the base linear model", std::runtime_error);
}

TEST_CASE("widening the ill-conditioned set never narrows the bracket") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1, 0.3, -0.7});
  std::mt19937_64 rng(5);
  quadrature::QuadratureScheme q;
  for (int l = 0; l < 40; ++l) {
    q.nodes.push_back({(2.0 * u01(rng) - 1.0) * 40.0, 2.0 * u01(rng) - 1.0,
                       2.0 * u01(rng) - 1.0});
    q.weights.push_back(1.0 / 40.0);
  }
  double prev_lo = kInf, prev_up = kNegInf;
  std::size_t prev_s = 0;
  for (double thr : {1e-14, 1e-10, 1e-6, 1e-2}) {
    auto br = objective::phi(xi, spec, q, thr);
    if (prev_lo != kInf) {
      CHECK(br.lower <= prev_lo + 1e-9);
      CHECK(br.upper >= prev_up - 1e-9);
      CHECK(br.s_set.size() >= prev_s);
    }
    prev_lo = br.lower;
    prev_up = br.upper;
    prev_s = br.s_set.size();
  }
}

TEST_CASE("mean-lifetime phi equals rate phi shifted by the log-moment term") {
  auto theta_spec = ModelSpec::exponential_theta();
  auto beta_spec = ModelSpec::exponential_beta();
  auto xi = time_design({0.5, 2.0, 5.0});
  priors::JointPrior jp;
  jp.components = {priors::Prior1D::lognormal(0.3, 0.8)};
  jp.labels = {"theta"};
  auto q_theta = quadrature::monte_carlo(jp, 64, 31);
  quadrature::QuadratureScheme q_beta = q_theta;
  double log_moment = 0.0;
  for (std::size_t l = 0; l < q_theta.nodes.size(); ++l) {
    q_beta.nodes[l][0] = 1.0 / q_theta.nodes[l][0];
    log_moment += q_theta.weights[l] * std::log(q_theta.nodes[l][0]);
  }
  auto bt = objective::phi(xi, theta_spec, q_theta, 1e-12);
  auto bb = objective::phi(xi, beta_spec, q_beta, 1e-12);
  CHECK(bt.lower == doctest::Approx(bb.lower - 4.0 * log_moment).epsilon(1e-10));
  CHECK(bt.upper == doctest::Approx(bb.upper - 4.0 * log_moment).epsilon(1e-10));
}

TEST_CASE("EW objective at a point mass equals the local log-det") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1});
  const ParamVector beta = {0.4, -0.7, 0.2};
  auto ld = linalg::log_det_psd(models::info_matrix(spec, xi, beta), 1e-12);
  CHECK(objective::ew_objective(xi, spec, point_mass(beta)) ==
        doctest::Approx(ld.logdet).epsilon(1e-12));
}

TEST_CASE("EW under sign-symmetric intercept uncertainty is a scaled base det") {
  auto spec = ModelSpec::glm(Link::Logit, 2, models::parse_terms("1, x1, x2", 2));
  auto xi = cube_design(2, {1, 1, 1, -1, -1, 1, -1, -1});
  quadrature::QuadratureScheme q;
  q.nodes = {{1.7, 0.0, 0.0}, {-1.7, 0.0, 0.0}};
  q.weights = {0.5, 0.5};
  // eta = +-1.7 at every design point, so E w is one constant: the EW matrix
  // is (E w) F'F exactly.
  const double ew = models::glm_weight(Link::Logit, 1.7);
  const double expect = 3.0 * std::log(ew) + 3.0 * std::log(4.0);
  CHECK(objective::ew_objective(xi, spec, q) ==
        doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("mean local efficiency averages midpoints and reports dead mass") {
  auto spec = ModelSpec::glm(Link::Logit, 1, models::parse_terms("1, x1", 1));
  auto xi = cube_design(1, {-1.0, 1.0});
  quadrature::QuadratureScheme q;
  q.nodes = {{0.0, 1.0}, {1.0, 1.0}, {50.0, 1.0}};
  q.weights = {0.5, 0.3, 0.2};
  auto provider = [](const ParamVector& beta) -> std::pair<double, double> {
    if (beta[0] > 10.0) return {0.0, 1.0};  // uninformative bracket
    const double v = 1.0 / (1.0 + std::abs(beta[0]));
    return {v, v};
  };
  auto r = objective::mean_local_efficiency(xi, spec, q, provider);
  CHECK(r.psi == doctest::Approx(0.5 * 1.0 + 0.3 * 0.5 + 0.2 * 0.5).epsilon(1e-12));
  CHECK(r.uninformative_mass == doctest::Approx(0.2).epsilon(1e-12));
}

TEST_CASE("conditional extreme-probability averages drift downward (heavy prior)") {
  // Under a heavy-tailed intercept conditioned to be large while the other
  // coefficients concentrate near zero, the average of log min(pi, 1-pi)
  // over growing conditional samples trends down without bound.
  auto g2 = priors::gelman_prior(2);
  const auto& b0 = g2.components[0];
  const auto& b1 = g2.components[1];
  const double delta = 0.25;
  const std::vector<std::size_t> sizes = {100, 10000, 1000000};
  int drop_end = 0, monotone = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    const double u_lo0 = b0.cdf(1.0);
    const double u_lo1 = b1.cdf(-delta), u_hi1 = b1.cdf(delta);
    double sum = 0.0;
    std::size_t done = 0;
    std::vector<double> t_at;
    for (std::size_t n : sizes) {
      for (; done < n; ++done) {
        const double beta0 = b0.inv_cdf(u_lo0 + u01(rng) * (1.0 - u_lo0));
        const double beta1 = b1.inv_cdf(u_lo1 + u01(rng) * (u_hi1 - u_lo1));
        double s = 0.0;
        for (double x : {-1.0, 1.0}) {
          const double eta = beta0 + beta1 * x;
          s += -(std::abs(eta) + log1p_exp(-std::abs(eta)));
        }
        sum += 0.5 * s;
      }
      t_at.push_back(sum / static_cast<double>(done));
    }
    if (t_at.back() < t_at.front()) ++drop_end;
    if (t_at[1] < t_at[0] && t_at[2] < t_at[1]) ++monotone;
  }
  CHECK(drop_end >= 9);
  CHECK(monotone >= 7);
}
