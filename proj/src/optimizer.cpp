#include "bodx/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>

#include "bodx/common.hpp"
#include "bodx/objective.hpp"
#include "bodx/parallel.hpp"

namespace bodx::optimizer {

namespace {

double safe_eval(const DesignObjective& obj, const models::Design& xi) {
  try {
    const double v = obj(xi);
    return std::isnan(v) ? kNegInf : v;
  } catch (...) {
    return kNegInf;
  }
}

void validate(const models::Region& region, int n, const SearchSettings& s) {
  require(region.q >= 1, "region must have at least one factor");
  require(region.kind == models::RegionKind::Cube || region.time_upper > 0.0,
          "time-axis region needs a positive upper bound");
  require(n >= 1, "design needs at least one run");
  require(s.n_starts >= 1, "n_starts must be >= 1");
  require(s.max_passes >= 1, "max_passes must be >= 1");
  require(s.grid_points >= 2, "grid_points must be >= 2");
  require(s.refine_iters >= 1, "refine_iters must be >= 1");
  require(s.tol > 0.0, "tol must be > 0");
}

// Best value of the objective as a function of coordinate (run, j) alone:
// a uniform grid over the coordinate's interval, then golden-section
// iterations inside the best grid cell. The design is mutated during the
// scan and restored before returning.
struct CoordinateBest {
  double c = 0.0;
  double value = kNegInf;
};

CoordinateBest search_coordinate(const DesignObjective& obj,
                                 models::Design& xi, int run, int j,
                                 const SearchSettings& s) {
  const double lo = xi.region().lo(j);
  const double hi = xi.region().hi(j);
  const double saved = xi.at(run, j);

  CoordinateBest best;
  auto probe = [&](double c) {
    c = std::clamp(c, lo, hi);
    xi.set(run, j, c);
    const double v = safe_eval(obj, xi);
    if (v > best.value) {
      best.value = v;
      best.c = c;
    }
    return v;
  };

  const int g = s.grid_points;
  const double h = (hi - lo) / (g - 1);
  for (int k = 0; k < g; ++k) probe(lo + h * k);

  // Golden-section refinement around the best grid point; the tracked best
  // only ever improves, so a flat or hostile objective cannot lose the grid
  // winner.
  double a = std::max(lo, best.c - h);
  double b = std::min(hi, best.c + h);
  constexpr double kGolden = 0.6180339887498949;  // (sqrt(5) - 1) / 2
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = probe(x1);
  double f2 = probe(x2);
  for (int it = 0; it < s.refine_iters; ++it) {
    if (f1 < f2) {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = probe(x2);
    } else {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = probe(x1);
    }
  }

  xi.set(run, j, saved);
  return best;
}

void run_start(const DesignObjective& obj, const models::Region& region, int n,
               const SearchSettings& s, int start_idx, models::Design& out,
               StartTrace& trace) {
  std::mt19937_64 rng(s.seed + static_cast<std::uint64_t>(start_idx));
  models::Design xi(region, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < region.q; ++j) {
      std::uniform_real_distribution<double> u(region.lo(j), region.hi(j));
      xi.set(i, j, u(rng));
    }

  double current = safe_eval(obj, xi);
  trace.start_objective = current;

  for (int pass = 0; pass < s.max_passes; ++pass) {
    bool improved = false;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < region.q; ++j) {
        const auto cand = search_coordinate(obj, xi, i, j, s);
        if (cand.value > current + s.tol) {
          xi.set(i, j, cand.c);
          current = cand.value;
          improved = true;
        }
      }
    if (!improved) break;
  }

  trace.final_objective = current;
  out = xi;
}

}  // namespace

SearchResult coordinate_exchange(const DesignObjective& objective,
                                 const models::Region& region, int n,
                                 const SearchSettings& settings) {
  validate(region, n, settings);

  const auto n_starts = static_cast<std::size_t>(settings.n_starts);
  std::vector<models::Design> designs(n_starts);
  std::vector<StartTrace> traces(n_starts);
  std::vector<unsigned char> failed(n_starts, 0);

  par::for_index(n_starts, [&](std::size_t s) {
    try {
      run_start(objective, region, n, settings, static_cast<int>(s),
                designs[s], traces[s]);
    } catch (...) {
      failed[s] = 1;  // objective errors are already absorbed; this is rare
    }
  });
  for (std::size_t s = 0; s < n_starts; ++s)
    if (failed[s])
      run_start(objective, region, n, settings, static_cast<int>(s),
                designs[s], traces[s]);

  // Reduce in start order so the winner is independent of thread count.
  std::size_t best = 0;
  for (std::size_t s = 1; s < n_starts; ++s)
    if (traces[s].final_objective > traces[best].final_objective) best = s;

  SearchResult result;
  result.best = designs[best];
  result.best_value = traces[best].final_objective;
  result.trace = std::move(traces);
  return result;
}

SearchResult local_d_optimal(const models::ModelSpec& spec,
                             const models::ParamVector& theta, int n,
                             const SearchSettings& settings) {
  models::Region region;
  region.kind = spec.natural_region();
  region.q = spec.q;
  return local_d_optimal(spec, theta, n, settings, region);
}

SearchResult local_d_optimal(const models::ModelSpec& spec,
                             const models::ParamVector& theta, int n,
                             const SearchSettings& settings,
                             const models::Region& region) {
  models::validate_params(spec, theta);
  require(region.q == spec.q, "region dimension must match the model");
  auto obj = [&spec, &theta](const models::Design& xi) {
    return objective::local_objective(spec, xi, theta);
  };
  return coordinate_exchange(obj, region, n, settings);
}

}  // namespace bodx::optimizer
