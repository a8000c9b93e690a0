#ifndef BODX_EFFICIENCY_HPP
#define BODX_EFFICIENCY_HPP

#include <cstdint>
#include <mutex>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "bodx/linalg.hpp"
#include "bodx/models.hpp"
#include "bodx/objective.hpp"
#include "bodx/optimizer.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"

// Local and Bayesian D-efficiency with bound brackets, the Gaussian-process
// efficiency emulator, the per-coordinate efficiency profile pipeline, and
// the truncated-prior collapse experiment.
namespace bodx::efficiency {

// Local D-efficiency eff = {|M(xi)| / |M(xi*)|}^{1/p} of a design at one
// parameter vector. When both determinants carry a conditioning certificate
// the bracket is degenerate (exact == true); otherwise the ends combine the
// analytic envelope bounds at xi with searched maxima of the lower and upper
// envelopes, and exact stays false. Always within [0, 1] after clamping.
struct EfficiencyBracket {
  double lower = 0.0;
  double upper = 1.0;
  bool exact = false;
};

struct LocalEffSettings {
  optimizer::SearchSettings search{.n_starts = 10};  // reduced budget
  double rcond = objective::kDefaultRcond;
};

// Per-beta search results shared across efficiency evaluations: the value of
// the locally optimal design and, when that optimum lacks a conditioning
// certificate, the searched maxima of the two envelope bounds. One cache
// serves one (model, region, n, settings) context; the key is the exact
// parameter vector. Safe for concurrent use.
class LocalOptCache {
 public:
  struct Entry {
    double logdet = 0.0;     // log|M(xi*; beta)| when reliable
    bool reliable = false;   // conditioning certificate at the found optimum
    double phi_l_max = 0.0;  // searched max of the lower envelope bound
    double phi_u_max = 0.0;  // searched max of the upper envelope bound
  };

  Entry get_or_compute(const models::ModelSpec& spec,
                       const models::Region& region, int n,
                       const models::ParamVector& beta,
                       const LocalEffSettings& settings);
  std::size_t size() const;

 private:
  struct VecHash {
    std::size_t operator()(const models::ParamVector& v) const;
  };
  mutable std::mutex mu_;
  std::unordered_map<models::ParamVector, Entry, VecHash> map_;
};

EfficiencyBracket local_eff(const models::Design& xi,
                            const models::ModelSpec& spec,
                            const models::ParamVector& beta,
                            const LocalEffSettings& settings = {},
                            LocalOptCache* cache = nullptr);

// Quadrature lower bound on the Bayesian D-efficiency of xi_l: the lower
// bracket end at xi_l minus the upper bracket end at xi_u (the searched
// maximizer of the upper objective), exponentiated per parameter and clamped
// to at most one. With xi_l == xi_u and no substituted nodes this is exactly
// one.
double bayes_eff_lower_bound(const models::Design& xi_l,
                             const models::Design& xi_u,
                             const models::ModelSpec& spec,
                             const quadrature::QuadratureScheme& q,
                             double rcond_threshold = objective::kDefaultRcond);

// Gaussian-process interpolator of efficiency over parameter vectors:
// anisotropic squared-exponential kernel, constant mean fitted by
// generalized least squares, nugget floored at 1e-8. Hyperparameters by
// multistart maximization of the log marginal likelihood. Duplicate training
// inputs are dropped (first kept) and counted.
struct Emulator {
  std::vector<models::ParamVector> x;  // deduplicated training inputs
  std::vector<double> y;
  std::vector<double> lengthscale;  // one per input dimension
  double signal_var = 1.0;
  double nugget = 1e-8;
  double mean = 0.0;
  std::vector<double> alpha;  // K^{-1} (y - mean)
  linalg::DenseChol chol;
  std::size_t n_dropped_duplicates = 0;
  double log_marginal = 0.0;

  int dim() const { return x.empty() ? 0 : static_cast<int>(x[0].size()); }
};

struct Prediction {
  double mean = 0.0;
  double sd = 0.0;
};

// Multistart budget for the hyperparameter fit (smaller than design search).
optimizer::SearchSettings emulator_search_defaults();

Emulator fit_emulator(const std::vector<models::ParamVector>& inputs,
                      const std::vector<double>& outputs,
                      const optimizer::SearchSettings& search =
                          emulator_search_defaults());

// Predictive mean (clamped to [0,1]: outputs are efficiencies) and standard
// deviation.
Prediction predict(const Emulator& em, const models::ParamVector& beta);

// Gaussian kernel density estimate with Silverman bandwidth, reflected at
// the [0,1] boundaries, evaluated on a uniform grid over [0,1].
void kde_unit_interval(std::span<const double> samples, int grid,
                       std::vector<double>& xs, std::vector<double>& density);

struct CoordinateProfile {
  int coord = 0;
  std::string label;
  std::vector<double> beta, mean, q10, q90;
};

struct ProfileSettings {
  optimizer::SearchSettings search{.n_starts = 10};
  double rcond = objective::kDefaultRcond;
  int grid_points = 21;   // per-coordinate grid over the central 98% interval
  int mc_draws = 2000;    // conditional Monte Carlo draws per grid point
  int kde_draws = 10000;  // prior draws behind the marginal density
  int kde_grid = 201;
  std::uint64_t seed = 1;
  std::string out_dir;  // when nonempty: profile_coord_<j>.csv,
                        // marginal_kde.csv, profile.svg
};

struct ProfileReport {
  std::size_t n_nodes = 0;
  std::size_t n_dropped_uninformative = 0;  // brackets spanning ~[0,1]
  std::size_t n_trained = 0;
  Emulator emulator;
  std::vector<CoordinateProfile> coords;
  std::vector<double> kde_eff, kde_density;
  std::vector<double> marginal_eff;  // predicted efficiency per prior draw
  double q25 = 0.0, q75 = 0.0;
  double modal_eff = 0.0;
  double p_below_02 = 0.0;
};

// Figure-style robustness profile of one design: per-node local efficiency
// brackets over the quadrature scheme, an emulator trained on the
// informative nodes (error when fewer than 5 * p remain), conditional
// mean/quantile curves per coordinate, and the marginal efficiency density.
ProfileReport efficiency_profile(const models::Design& xi,
                                 const models::ModelSpec& spec,
                                 const priors::JointPrior& prior,
                                 const quadrature::QuadratureScheme& q,
                                 const ProfileSettings& settings);

// Collapse of relative Bayesian efficiency under truncated uniform lifetime
// priors U(eps, a): the fixed single-run design at a/2 is compared against
// the moving single-run design at x_eps = -1/log(eps). The relative
// efficiency exp{phi(fixed) - phi(moving)} tends to zero as eps does; the
// returned rows preserve the input epsilon order.
struct CollapseRow {
  double epsilon = 0.0;
  double x_point = 0.0;  // comparison design point -1/log(eps)
  double phi_design = 0.0;
  double phi_comparison = 0.0;
  double relative_efficiency = 0.0;
};
std::vector<CollapseRow> epsilon_collapse_experiment(
    double a, const std::vector<double>& epsilons, int n_grid = 20000);

}  // namespace bodx::efficiency

#endif
