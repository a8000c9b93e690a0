// The parallel kernels must be bit-identical to the serial reference: every
// kernel writes per-index slots and reduces serially in index order, so
// forcing the serial path must reproduce the parallel results exactly.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdint>
#include <numeric>
#include <vector>

#include "bodx/common.hpp"
#include "bodx/diagnostics.hpp"
#include "bodx/models.hpp"
#include "bodx/objective.hpp"
#include "bodx/optimizer.hpp"
#include "bodx/parallel.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"

using namespace bodx;

namespace {

// Restores the forced-serial flag on scope exit so test order cannot leak.
struct SerialGuard {
  explicit SerialGuard(bool serial) { par::set_serial(serial); }
  ~SerialGuard() { par::set_serial(false); }
};

models::ModelSpec logit_spec() {
  return models::ModelSpec::glm(models::Link::Logit, 2,
                                models::parse_terms("1, x1, x2, x1*x2", 2));
}

priors::JointPrior logit_prior() {
  priors::JointPrior jp;
  jp.components = {priors::Prior1D::normal(0.5, 1.0),
                   priors::Prior1D::normal(1.0, 0.8),
                   priors::Prior1D::normal(-0.5, 0.8),
                   priors::Prior1D::normal(0.0, 0.5)};
  jp.labels = {"b0", "b1", "b2", "b12"};
  return jp;
}

models::Design fixed_design(const models::Region& region) {
  models::Design xi(region, 6);
  const double pts[6][2] = {{-1, -1}, {1, -1},    {-1, 1},
                            {1, 1},   {0.3, -0.7}, {-0.4, 0.8}};
  for (int i = 0; i < 6; ++i)
    for (int j = 0; j < 2; ++j) xi.set(i, j, pts[i][j]);
  return xi;
}

}  // namespace

TEST_CASE("thread budget is at least one") {
  CHECK(par::max_threads() >= 1);
}

TEST_CASE("for_index covers every index exactly once") {
  const std::size_t n = 1000;
  std::vector<int> hits(n, 0);
  par::for_index(n, [&](std::size_t i) { ++hits[i]; });
  CHECK(std::accumulate(hits.begin(), hits.end(), 0) == 1000);
  CHECK(*std::min_element(hits.begin(), hits.end()) == 1);
}

TEST_CASE("serial flag round-trips") {
  CHECK_FALSE(par::serial_forced());
  {
    SerialGuard g(true);
    CHECK(par::serial_forced());
  }
  CHECK_FALSE(par::serial_forced());
}

TEST_CASE("objective bracket is bit-identical across execution modes") {
  const auto spec = logit_spec();
  const auto prior = logit_prior();
  const auto q = quadrature::monte_carlo(prior, 500, 42, &spec);
  const auto xi = fixed_design(spec.natural_region() == models::RegionKind::Cube
                                   ? models::Region{models::RegionKind::Cube, 2}
                                   : models::Region{});

  objective::ObjectiveBracket serial, parallel;
  {
    SerialGuard g(true);
    serial = objective::phi(xi, spec, q);
  }
  {
    SerialGuard g(false);
    parallel = objective::phi(xi, spec, q);
  }
  CHECK(serial.lower == parallel.lower);
  CHECK(serial.upper == parallel.upper);
  CHECK(serial.s_set == parallel.s_set);
  CHECK(serial.exact == parallel.exact);
}

TEST_CASE("divergence probe is bit-identical across execution modes") {
  const auto spec = logit_spec();
  const auto prior = logit_prior();
  const auto xi = fixed_design({models::RegionKind::Cube, 2});
  const std::vector<std::size_t> sizes{50, 100, 200};

  diagnostics::ProbeReport serial, parallel;
  {
    SerialGuard g(true);
    serial = diagnostics::divergence_probe(spec, prior, xi, sizes, 7);
  }
  {
    SerialGuard g(false);
    parallel = diagnostics::divergence_probe(spec, prior, xi, sizes, 7);
  }
  CHECK(serial.estimates == parallel.estimates);
  CHECK(serial.standard_errors == parallel.standard_errors);
  CHECK(serial.slope == parallel.slope);
  CHECK(serial.n_substituted == parallel.n_substituted);
}

TEST_CASE("multistart search is bit-identical across execution modes") {
  const auto spec = logit_spec();
  const auto prior = logit_prior();
  const auto q = quadrature::monte_carlo(prior, 60, 11, &spec);
  optimizer::SearchSettings s;
  s.n_starts = 6;
  s.max_passes = 3;
  s.grid_points = 9;
  s.refine_iters = 8;
  s.seed = 123;
  const auto fn = [&](const models::Design& xi) {
    return objective::phi(xi, spec, q).lower;
  };
  const models::Region region{models::RegionKind::Cube, 2};

  optimizer::SearchResult serial, parallel;
  {
    SerialGuard g(true);
    serial = optimizer::coordinate_exchange(fn, region, 5, s);
  }
  {
    SerialGuard g(false);
    parallel = optimizer::coordinate_exchange(fn, region, 5, s);
  }
  CHECK(serial.best_value == parallel.best_value);
  REQUIRE(serial.best.n() == parallel.best.n());
  for (int i = 0; i < serial.best.n(); ++i)
    for (int j = 0; j < serial.best.q(); ++j)
      CHECK(serial.best.at(i, j) == parallel.best.at(i, j));
  REQUIRE(serial.trace.size() == parallel.trace.size());
  for (std::size_t k = 0; k < serial.trace.size(); ++k) {
    CHECK(serial.trace[k].start_objective == parallel.trace[k].start_objective);
    CHECK(serial.trace[k].final_objective == parallel.trace[k].final_objective);
  }
}
