// Timings for the OpenMP kernels against the serial reference path.
// Three representative workloads: the quadrature-node objective sweep, the
// Monte Carlo divergence probe, and the multistart design search. Each
// prints serial/parallel wall time and the speedup; checksums guard against
// dead-code elimination and double as a same-result check.

#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

#include "bodx/diagnostics.hpp"
#include "bodx/models.hpp"
#include "bodx/objective.hpp"
#include "bodx/optimizer.hpp"
#include "bodx/parallel.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"

using namespace bodx;

namespace {

double time_ms(const std::function<double()>& fn, double& checksum) {
  const auto t0 = std::chrono::steady_clock::now();
  checksum = fn();
  const auto t1 = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(t1 - t0).count();
}

void run_case(const char* name, const std::function<double()>& fn) {
  double cs_serial = 0.0, cs_parallel = 0.0;
  par::set_serial(true);
  const double ms_serial = time_ms(fn, cs_serial);
  par::set_serial(false);
  const double ms_parallel = time_ms(fn, cs_parallel);
  std::printf("%-18s %10.1f ms %10.1f ms   x%.2f   %s\n", name, ms_serial,
              ms_parallel, ms_serial / ms_parallel,
              cs_serial == cs_parallel ? "bit-identical" : "MISMATCH");
}

}  // namespace

int main() {
  const int q = 3;
  const auto spec = models::ModelSpec::glm(
      models::Link::Logit,
      q, models::parse_terms("1, x1, x2, x3, x1*x2, x1*x3, x2*x3", q));
  priors::JointPrior prior;
  const double locs[7] = {-1.0, 2.0, 1.0, -1.0, 0.5, 0.5, 0.5};
  for (int j = 0; j < 7; ++j) {
    prior.components.push_back(priors::Prior1D::normal(locs[j], 1.4142135623730951));
    prior.labels.push_back("beta" + std::to_string(j));
  }
  const models::Region region{models::RegionKind::Cube, q};

  std::printf("threads available: %d (cap with BODX_THREADS)\n",
              par::max_threads());
  std::printf("%-18s %13s %13s %8s\n", "kernel", "serial", "parallel",
              "speedup");

  // Quadrature sweep: one bracket evaluation over many nodes, repeated.
  const auto scheme = quadrature::monte_carlo(prior, 4000, 2024, &spec);
  models::Design xi(region, 16);
  {
    std::uint64_t s = 99;
    for (int i = 0; i < xi.n(); ++i)
      for (int j = 0; j < xi.q(); ++j) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        xi.set(i, j, -1.0 + 2.0 * static_cast<double>(s >> 11) / 9007199254740992.0);
      }
  }
  run_case("phi sweep", [&] {
    double acc = 0.0;
    for (int rep = 0; rep < 20; ++rep) {
      const auto br = objective::phi(xi, spec, scheme);
      acc += br.lower + br.upper;
    }
    return acc;
  });

  // Probe accumulation: seeded Monte Carlo draws with running means.
  run_case("divergence probe", [&] {
    const auto rep = diagnostics::divergence_probe(
        spec, prior, xi, {2000, 4000, 8000, 16000}, 7);
    double acc = rep.slope;
    for (const double e : rep.estimates) acc += e;
    return acc;
  });

  // Multistart search: independent starts in parallel.
  const auto small_scheme = quadrature::monte_carlo(prior, 300, 11, &spec);
  run_case("multistart search", [&] {
    optimizer::SearchSettings s;
    s.n_starts = 8;
    s.max_passes = 2;
    s.grid_points = 11;
    s.refine_iters = 10;
    s.seed = 5;
    const auto res = optimizer::coordinate_exchange(
        [&](const models::Design& d) {
          return objective::phi(d, spec, small_scheme).lower;
        },
        region, 12, s);
    return res.best_value;
  });
  return 0;
}
