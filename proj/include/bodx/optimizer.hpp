#ifndef BODX_OPTIMIZER_HPP
#define BODX_OPTIMIZER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "bodx/models.hpp"

// Multistart coordinate-exchange search for exact n-point designs. The engine
// is objective-agnostic: anything that maps a design to a real number can be
// maximized (local log-determinants, Bayesian bracket endpoints,
// expected-weight surrogates). An objective that throws or returns NaN
// disqualifies that candidate (treated as -infinity) instead of aborting the
// search.
namespace bodx::optimizer {

// Knobs for the multistart coordinate exchange. All counts must be positive
// (grid_points needs at least two points to span an interval) and tol must be
// strictly positive.
struct SearchSettings {
  int n_starts = 20;       // independent random starts
  int max_passes = 50;     // full sweeps over all n*q coordinates per start
  int grid_points = 21;    // uniform grid for each 1-D coordinate search
  int refine_iters = 30;   // golden-section iterations around the best cell
  std::uint64_t seed = 1;  // start s draws from seed + s, so start sets nest
  double tol = 1e-9;       // required improvement; ties keep the incumbent
};

struct StartTrace {
  double start_objective = 0.0;
  double final_objective = 0.0;
};

struct SearchResult {
  models::Design best;
  double best_value = 0.0;
  std::vector<StartTrace> trace;  // one entry per start, in start order
};

using DesignObjective = std::function<double(const models::Design&)>;

// Maximize `objective` over exact n-point designs on `region`. Starts run in
// parallel; the winner is reduced in start order, so results do not depend on
// the thread count.
SearchResult coordinate_exchange(const DesignObjective& objective,
                                 const models::Region& region, int n,
                                 const SearchSettings& settings);

// Local D-optimal design: coordinate exchange on the single-parameter
// log-determinant (with its bound-midpoint fallback when the direct
// determinant lies beyond double precision). The region defaults to the
// family's natural one: the centered unit cube, or [0, 24] on the time axis.
SearchResult local_d_optimal(const models::ModelSpec& spec,
                             const models::ParamVector& theta, int n,
                             const SearchSettings& settings);
SearchResult local_d_optimal(const models::ModelSpec& spec,
                             const models::ParamVector& theta, int n,
                             const SearchSettings& settings,
                             const models::Region& region);

}  // namespace bodx::optimizer

#endif
