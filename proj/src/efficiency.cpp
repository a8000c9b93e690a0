#include "bodx/efficiency.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bodx/common.hpp"
#include "bodx/parallel.hpp"
#include "bodx/report.hpp"

namespace bodx::efficiency {

namespace {

using models::Design;
using models::ModelSpec;
using models::ParamVector;
using models::Region;

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// Quantile of an ascending-sorted sample by linear interpolation.
double quantile_sorted(const std::vector<double>& v, double u) {
  const std::size_t n = v.size();
  if (n == 1) return v[0];
  const double pos = u * static_cast<double>(n - 1);
  const std::size_t i =
      std::min(static_cast<std::size_t>(pos), n - 2);
  const double frac = pos - static_cast<double>(i);
  return v[i] + (v[i + 1] - v[i]) * frac;
}

// Best achievable log|M| for one parameter vector: the exact value when the
// searched optimum is well conditioned at settings.rcond, otherwise separate
// maxima of the analytic lower and upper point bounds. The structural
// base-model check inside the bounds always uses the default bar, so a
// caller-loosened rcond only widens the bracket, never aborts it.
LocalOptCache::Entry compute_entry(const ModelSpec& spec, const Region& region,
                                   int n, const ParamVector& beta,
                                   const LocalEffSettings& settings) {
  LocalOptCache::Entry entry;
  auto found = optimizer::local_d_optimal(spec, beta, n, settings.search,
                                          region);
  if (!models::info_saturated(spec, found.best, beta)) {
    const auto ld = linalg::log_det_psd(
        models::info_matrix(spec, found.best, beta), settings.rcond);
    if (ld.ok()) {
      entry.reliable = true;
      entry.logdet = ld.logdet;
      entry.phi_l_max = entry.phi_u_max = ld.logdet;
      return entry;
    }
  }
  auto bound_objective = [&](bool upper) {
    return [&spec, &beta, upper](const Design& d) {
      const auto pb = objective::phi_point_bounds(spec, d, beta);
      return upper ? pb.upper : pb.lower;
    };
  };
  entry.reliable = false;
  entry.phi_u_max = optimizer::coordinate_exchange(bound_objective(true),
                                                   region, n, settings.search)
                        .best_value;
  entry.phi_l_max = optimizer::coordinate_exchange(bound_objective(false),
                                                   region, n, settings.search)
                        .best_value;
  return entry;
}

}  // namespace

std::size_t LocalOptCache::VecHash::operator()(
    const models::ParamVector& v) const {
  std::uint64_t h = 0x9E3779B97F4A7C15ULL ^ v.size();
  for (double d : v) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, sizeof bits);
    h = mix64(h ^ bits);
  }
  return static_cast<std::size_t>(h);
}

LocalOptCache::Entry LocalOptCache::get_or_compute(
    const models::ModelSpec& spec, const models::Region& region, int n,
    const models::ParamVector& beta, const LocalEffSettings& settings) {
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = map_.find(beta);
    if (it != map_.end()) return it->second;
  }
  // Computed outside the lock: the search is deterministic, so a concurrent
  // duplicate computation produces the same entry and the first insert wins.
  Entry entry = compute_entry(spec, region, n, beta, settings);
  std::lock_guard<std::mutex> lock(mu_);
  return map_.emplace(beta, entry).first->second;
}

std::size_t LocalOptCache::size() const {
  std::lock_guard<std::mutex> lock(mu_);
  return map_.size();
}

EfficiencyBracket local_eff(const models::Design& xi,
                            const models::ModelSpec& spec,
                            const models::ParamVector& beta,
                            const LocalEffSettings& settings,
                            LocalOptCache* cache) {
  models::validate_params(spec, beta);
  require(xi.q() == spec.q, "design and model disagree on factor count");
  require(xi.n() >= 1, "design needs at least one run");
  const double p = static_cast<double>(spec.param_dim());

  // Numerator: log|M(xi; beta)| exactly when trustworthy, else its bounds.
  double num_lo = 0.0, num_hi = 0.0;
  bool xi_exact = false;
  if (!models::info_saturated(spec, xi, beta)) {
    const auto ld = linalg::log_det_psd(models::info_matrix(spec, xi, beta),
                                        settings.rcond);
    if (ld.ok()) {
      num_lo = num_hi = ld.logdet;
      xi_exact = true;
    }
  }
  if (!xi_exact) {
    try {
      const auto pb = objective::phi_point_bounds(spec, xi, beta);
      num_lo = pb.lower;
      num_hi = pb.upper;
    } catch (const std::runtime_error&) {
      // The base linear model is singular at xi, so |M(xi; beta)| is exactly
      // zero and so is the efficiency, no matter the denominator.
      return {0.0, 0.0, true};
    }
  }

  const LocalOptCache::Entry entry =
      cache ? cache->get_or_compute(spec, xi.region(), xi.n(), beta, settings)
            : compute_entry(spec, xi.region(), xi.n(), beta, settings);
  const double den_lo = entry.reliable ? entry.logdet : entry.phi_l_max;
  const double den_hi = entry.reliable ? entry.logdet : entry.phi_u_max;

  EfficiencyBracket bracket;
  bracket.exact = xi_exact && entry.reliable;
  bracket.lower = clamp01(std::exp((num_lo - den_hi) / p));
  bracket.upper = clamp01(std::exp((num_hi - den_lo) / p));
  return bracket;
}

double bayes_eff_lower_bound(const models::Design& xi_l,
                             const models::Design& xi_u,
                             const models::ModelSpec& spec,
                             const quadrature::QuadratureScheme& q,
                             double rcond_threshold) {
  const double p = static_cast<double>(spec.param_dim());
  const auto bl = objective::phi(xi_l, spec, q, rcond_threshold);
  const auto bu = objective::phi(xi_u, spec, q, rcond_threshold);
  return std::min(1.0, std::exp((bl.lower - bu.upper) / p));
}

// ---------------------------------------------------------------------------
// Gaussian-process efficiency emulator
// ---------------------------------------------------------------------------

namespace {

// Log-space hyperparameter box: anisotropic lengthscales spanning 5% to 20x
// each input range, signal variance around the output variance, and a nugget
// from the interpolation floor up to a small fraction of the variance.
struct HyperRanges {
  std::vector<double> ls_lo, ls_hi;
  double sv_lo = 0.0, sv_hi = 0.0;
  double ng_lo = 0.0, ng_hi = 0.0;
};

HyperRanges hyper_ranges(const std::vector<ParamVector>& x,
                         const std::vector<double>& y) {
  const std::size_t d = x[0].size();
  HyperRanges r;
  r.ls_lo.reserve(d);
  r.ls_hi.reserve(d);
  for (std::size_t j = 0; j < d; ++j) {
    double lo = x[0][j], hi = x[0][j];
    for (const auto& v : x) {
      lo = std::min(lo, v[j]);
      hi = std::max(hi, v[j]);
    }
    double span = hi - lo;
    if (!(span > 0.0)) span = 1.0;
    r.ls_lo.push_back(std::log(0.05 * span));
    r.ls_hi.push_back(std::log(20.0 * span));
  }
  const double n = static_cast<double>(y.size());
  const double mean = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double var = 0.0;
  for (double v : y) var += (v - mean) * (v - mean);
  var /= n;
  r.sv_lo = std::log(std::max(1e-8, 1e-4 * var));
  r.sv_hi = std::log(std::max(1e-6, 100.0 * var));
  r.ng_lo = std::log(1e-8);
  // Keep the cap small: training outputs are deterministic bracket
  // midpoints, so the nugget is a factorization stabilizer, not noise.
  r.ng_hi = std::log(std::max(1e-5, 1e-4 * var));
  return r;
}

struct HyperPoint {
  std::vector<double> lengthscale;
  double signal_var = 1.0;
  double nugget = 1e-8;
};

double unmap_log(double u, double lo, double hi) {
  return std::exp(lo + (u + 1.0) * 0.5 * (hi - lo));  // u in [-1, 1]
}

HyperPoint hyper_point(const Design& dsn, const HyperRanges& r) {
  const int d = static_cast<int>(r.ls_lo.size());
  HyperPoint h;
  h.lengthscale.reserve(d);
  for (int j = 0; j < d; ++j)
    h.lengthscale.push_back(unmap_log(dsn.at(0, j), r.ls_lo[j], r.ls_hi[j]));
  h.signal_var = unmap_log(dsn.at(0, d), r.sv_lo, r.sv_hi);
  h.nugget = unmap_log(dsn.at(0, d + 1), r.ng_lo, r.ng_hi);
  return h;
}

double sq_kernel(const ParamVector& a, const ParamVector& b,
                 const std::vector<double>& ls, double signal_var) {
  double s = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    const double t = (a[m] - b[m]) / ls[m];
    s += t * t;
  }
  return signal_var * std::exp(-0.5 * s);
}

std::vector<double> kernel_matrix(const std::vector<ParamVector>& x,
                                  const HyperPoint& h) {
  const std::size_t n = x.size();
  std::vector<double> k(n * n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      const double v = sq_kernel(x[i], x[j], h.lengthscale, h.signal_var);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
    k[i * n + i] += h.nugget;
  }
  return k;
}

struct MarginalFit {
  bool ok = false;
  double lml = kNegInf;
  double mean = 0.0;
  std::vector<double> alpha;
  linalg::DenseChol chol;
};

// Log marginal likelihood with the constant mean profiled out by generalized
// least squares: m = (1'K^{-1}y)/(1'K^{-1}1), alpha = K^{-1}(y - m).
MarginalFit marginal_fit(const std::vector<ParamVector>& x,
                         const std::vector<double>& y, const HyperPoint& h) {
  MarginalFit fit;
  const std::size_t n = x.size();
  auto chol =
      linalg::DenseChol::factor(kernel_matrix(x, h), static_cast<int>(n), 0.0);
  if (!chol.ok()) return fit;
  const std::vector<double> ones(n, 1.0);
  const auto s1 = chol.solve(ones);
  const auto sy = chol.solve(y);
  const double d1 = std::inner_product(ones.begin(), ones.end(), s1.begin(),
                                       0.0);
  const double dy = std::inner_product(ones.begin(), ones.end(), sy.begin(),
                                       0.0);
  if (!(d1 > 0.0) || !std::isfinite(d1) || !std::isfinite(dy)) return fit;
  fit.mean = dy / d1;
  fit.alpha.resize(n);
  for (std::size_t i = 0; i < n; ++i) fit.alpha[i] = sy[i] - fit.mean * s1[i];
  double quad = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    quad += (y[i] - fit.mean) * fit.alpha[i];
  fit.lml = -0.5 * quad - 0.5 * chol.logdet() -
            0.5 * static_cast<double>(n) * std::log(2.0 * kPi);
  if (!std::isfinite(fit.lml)) return fit;
  fit.ok = true;
  fit.chol = std::move(chol);
  return fit;
}

}  // namespace

optimizer::SearchSettings emulator_search_defaults() {
  optimizer::SearchSettings s;
  s.n_starts = 8;
  s.max_passes = 20;
  s.grid_points = 13;
  s.refine_iters = 20;
  s.seed = 1;
  s.tol = 1e-7;
  return s;
}

Emulator fit_emulator(const std::vector<models::ParamVector>& inputs,
                      const std::vector<double>& outputs,
                      const optimizer::SearchSettings& search) {
  require(inputs.size() == outputs.size(),
          "training inputs and outputs must pair up");
  require(!inputs.empty(), "emulator needs training data");
  const std::size_t d = inputs[0].size();
  require(d >= 1, "training inputs need at least one coordinate");
  for (const auto& v : inputs)
    require(v.size() == d, "training inputs must share one dimension");
  for (double v : outputs)
    require(std::isfinite(v) && v >= -1e-12 && v <= 1.0 + 1e-12,
            "training outputs must be efficiencies in [0, 1]");

  Emulator em;
  em.x.reserve(inputs.size());
  em.y.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    bool seen = false;
    for (const auto& kept : em.x) {
      if (kept == inputs[i]) {
        seen = true;
        break;
      }
    }
    if (seen) {
      ++em.n_dropped_duplicates;
      continue;
    }
    em.x.push_back(inputs[i]);
    em.y.push_back(clamp01(outputs[i]));
  }
  require(em.x.size() >= 5,
          "emulator needs at least five distinct training points");

  const auto ranges = hyper_ranges(em.x, em.y);
  const auto objective = [&](const Design& dsn) {
    return marginal_fit(em.x, em.y, hyper_point(dsn, ranges)).lml;
  };
  const Region region{models::RegionKind::Cube, static_cast<int>(d) + 2};
  const auto found = optimizer::coordinate_exchange(objective, region, 1,
                                                    search);

  const auto best = hyper_point(found.best, ranges);
  auto fit = marginal_fit(em.x, em.y, best);
  if (!fit.ok)
    throw std::runtime_error("emulator hyperparameter fit failed");
  em.lengthscale = best.lengthscale;
  em.signal_var = best.signal_var;
  em.nugget = best.nugget;
  em.mean = fit.mean;
  em.alpha = std::move(fit.alpha);
  em.chol = std::move(fit.chol);
  em.log_marginal = fit.lml;
  return em;
}

Prediction predict(const Emulator& em, const models::ParamVector& beta) {
  require(static_cast<int>(beta.size()) == em.dim(),
          "prediction point has the wrong dimension");
  const std::size_t n = em.x.size();
  std::vector<double> k(n);
  for (std::size_t i = 0; i < n; ++i)
    k[i] = sq_kernel(beta, em.x[i], em.lengthscale, em.signal_var);
  double mean = em.mean;
  for (std::size_t i = 0; i < n; ++i) mean += k[i] * em.alpha[i];
  const auto kk = em.chol.solve(k);
  const double quad = std::inner_product(k.begin(), k.end(), kk.begin(), 0.0);
  Prediction out;
  out.mean = clamp01(mean);
  out.sd = std::sqrt(std::max(0.0, em.signal_var + em.nugget - quad));
  return out;
}

void kde_unit_interval(std::span<const double> samples, int grid,
                       std::vector<double>& xs, std::vector<double>& density) {
  require(!samples.empty(), "density estimate needs samples");
  require(grid >= 2, "density grid needs at least two points");
  const std::size_t n = samples.size();
  const double dn = static_cast<double>(n);
  double mean = 0.0;
  for (double s : samples) mean += s;
  mean /= dn;
  double var = 0.0;
  for (double s : samples) var += (s - mean) * (s - mean);
  var /= dn;
  std::vector<double> sorted(samples.begin(), samples.end());
  std::sort(sorted.begin(), sorted.end());
  const double iqr =
      quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);

  // Silverman's rule with guards for degenerate spreads.
  double spread = std::sqrt(var);
  if (iqr > 0.0) spread = std::min(spread, iqr / 1.34);
  if (!(spread > 0.0)) spread = 1e-3;
  const double h = std::max(0.9 * spread * std::pow(dn, -0.2), 1e-4);

  xs.assign(grid, 0.0);
  density.assign(grid, 0.0);
  const double norm = 1.0 / (dn * h * std::sqrt(2.0 * kPi));
  for (int g = 0; g < grid; ++g) {
    const double x = static_cast<double>(g) / (grid - 1);
    double acc = 0.0;
    for (double s : samples) {
      // Reflect mass that falls outside [0, 1] back in at both edges.
      for (double center : {s, -s, 2.0 - s}) {
        const double t = (x - center) / h;
        if (t > -8.0 && t < 8.0) acc += std::exp(-0.5 * t * t);
      }
    }
    xs[g] = x;
    density[g] = acc * norm;
  }
}

ProfileReport efficiency_profile(const models::Design& xi,
                                 const models::ModelSpec& spec,
                                 const priors::JointPrior& prior,
                                 const quadrature::QuadratureScheme& q,
                                 const ProfileSettings& settings) {
  const int p = spec.param_dim();
  require(prior.dim() == p, "prior dimension must match the model");
  require(q.size() > 0 && q.dim() == p,
          "quadrature scheme dimension must match the model");
  require(settings.grid_points >= 2, "profile grid needs at least two points");
  require(settings.mc_draws >= 1 && settings.kde_draws >= 1,
          "profile needs at least one draw");
  require(settings.kde_grid >= 2, "density grid needs at least two points");

  ProfileReport rep;
  rep.n_nodes = q.size();

  LocalEffSettings eff_settings;
  eff_settings.search = settings.search;
  eff_settings.rcond = settings.rcond;

  // Per-node efficiency brackets; nodes are independent, reductions below
  // run serially in index order.
  std::vector<EfficiencyBracket> brackets(q.size());
  std::atomic<std::int64_t> first_error{-1};
  par::for_index(q.size(), [&](std::size_t l) {
    try {
      brackets[l] = local_eff(xi, spec, q.nodes[l], eff_settings, nullptr);
    } catch (...) {
      std::int64_t expected = -1;
      first_error.compare_exchange_strong(expected,
                                          static_cast<std::int64_t>(l));
    }
  });
  if (first_error.load() >= 0) {
    // Re-run the first failing node serially so its error propagates.
    const auto l = static_cast<std::size_t>(first_error.load());
    brackets[l] = local_eff(xi, spec, q.nodes[l], eff_settings, nullptr);
  }

  std::vector<ParamVector> train_x;
  std::vector<double> train_y;
  train_x.reserve(q.size());
  train_y.reserve(q.size());
  for (std::size_t l = 0; l < q.size(); ++l) {
    const auto& b = brackets[l];
    if (objective::uninformative_bracket(b.lower, b.upper)) {
      ++rep.n_dropped_uninformative;
      continue;
    }
    train_x.push_back(q.nodes[l]);
    train_y.push_back(clamp01(0.5 * (b.lower + b.upper)));
  }
  rep.n_trained = train_x.size();
  if (rep.n_trained < static_cast<std::size_t>(5 * p))
    throw std::runtime_error(
        "too few trainable nodes for the efficiency emulator: need at least "
        "five per parameter");

  auto em_search = emulator_search_defaults();
  em_search.seed = derive_seed(settings.seed, "emulator-fit");
  rep.emulator = fit_emulator(train_x, train_y, em_search);

  // Conditional profiles: sweep one prior coordinate over its central 98%
  // interval while the rest follow the prior.
  rep.coords.resize(p);
  for (int j = 0; j < p; ++j) {
    auto& cp = rep.coords[j];
    cp.coord = j;
    cp.label = (j < static_cast<int>(prior.labels.size()) &&
                !prior.labels[j].empty())
                   ? prior.labels[j]
                   : "beta" + std::to_string(j);
    const auto& comp = prior.components[j];
    const double lo = comp.inv_cdf(0.01);
    const double hi = comp.inv_cdf(0.99);
    const auto draws = priors::sample(
        prior, settings.mc_draws,
        derive_seed(settings.seed, "profile-coord-" + std::to_string(j)));
    const int g = settings.grid_points;
    cp.beta.assign(g, 0.0);
    cp.mean.assign(g, 0.0);
    cp.q10.assign(g, 0.0);
    cp.q90.assign(g, 0.0);
    par::for_index(static_cast<std::size_t>(g), [&](std::size_t gi) {
      const double bj =
          lo + (hi - lo) * static_cast<double>(gi) / (g - 1);
      std::vector<double> vals(draws.size());
      for (std::size_t i = 0; i < draws.size(); ++i) {
        ParamVector v = draws[i];
        v[j] = bj;
        vals[i] =
            predict(rep.emulator, priors::to_model_params(prior, spec, v))
                .mean;
      }
      double m = 0.0;
      for (double v : vals) m += v;
      std::sort(vals.begin(), vals.end());
      cp.beta[gi] = bj;
      cp.mean[gi] = m / static_cast<double>(vals.size());
      cp.q10[gi] = quantile_sorted(vals, 0.10);
      cp.q90[gi] = quantile_sorted(vals, 0.90);
    });
  }

  // Marginal efficiency distribution under the full prior.
  const auto marginal_draws =
      priors::sample(prior, settings.kde_draws,
                     derive_seed(settings.seed, "profile-marginal"));
  rep.marginal_eff.assign(marginal_draws.size(), 0.0);
  par::for_index(marginal_draws.size(), [&](std::size_t i) {
    rep.marginal_eff[i] =
        predict(rep.emulator,
                priors::to_model_params(prior, spec, marginal_draws[i]))
            .mean;
  });
  kde_unit_interval(rep.marginal_eff, settings.kde_grid, rep.kde_eff,
                    rep.kde_density);

  auto sorted = rep.marginal_eff;
  std::sort(sorted.begin(), sorted.end());
  rep.q25 = quantile_sorted(sorted, 0.25);
  rep.q75 = quantile_sorted(sorted, 0.75);
  std::size_t below = 0;
  for (double v : sorted) {
    if (v < 0.2) ++below;
  }
  rep.p_below_02 = static_cast<double>(below) /
                   static_cast<double>(sorted.size());
  std::size_t mode_idx = 0;
  for (std::size_t i = 1; i < rep.kde_density.size(); ++i)
    if (rep.kde_density[i] > rep.kde_density[mode_idx]) mode_idx = i;
  rep.modal_eff = rep.kde_eff[mode_idx];

  if (!settings.out_dir.empty()) report::write_profile_files(rep, settings.out_dir);
  return rep;
}

// ---------------------------------------------------------------------------
// Truncated-prior collapse experiment
// ---------------------------------------------------------------------------

std::vector<CollapseRow> epsilon_collapse_experiment(
    double a, const std::vector<double>& epsilons, int n_grid) {
  require(std::isfinite(a) && a > 0.0, "upper endpoint must be positive");
  require(!epsilons.empty(), "need at least one truncation point");
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    require(epsilons[i] > 0.0 && epsilons[i] < a && epsilons[i] < 1.0,
            "each truncation point must lie in (0, min(a, 1))");
    if (i > 0)
      require(epsilons[i] < epsilons[i - 1],
              "truncation points must decrease strictly");
  }
  require(n_grid >= 10, "integration grid too coarse");
  const int m = n_grid + (n_grid % 2);  // Simpson needs an even panel count

  const auto spec = ModelSpec::exponential_theta();
  std::vector<double> x_points;
  x_points.reserve(epsilons.size());
  double x_high = a / 2.0;
  for (double eps : epsilons) {
    const double x = -1.0 / std::log(eps);
    x_points.push_back(x);
    x_high = std::max(x_high, x);
  }
  const Region region{models::RegionKind::TimeAxis, 1, x_high + 1.0};
  const auto point_design = [&](double x) {
    Design d(region, 1);
    d.set(0, 0, x);
    return d;
  };

  // phi(xi; U(eps, a)) by composite Simpson in u = log theta, where the
  // one-parameter family objective is exact and smooth:
  //   (1/(a-eps)) * Int_{log eps}^{log a} log|M(xi; e^u)| e^u du.
  const auto phi_uniform = [&](const Design& d, double eps) {
    const double u_lo = std::log(eps);
    const double u_hi = std::log(a);
    const double h = (u_hi - u_lo) / m;
    const auto f = [&](double u) {
      const double theta = std::exp(u);
      return objective::phi_point_bounds(spec, d, {theta}).lower * theta;
    };
    double s = f(u_lo) + f(u_hi);
    for (int k = 1; k < m; ++k)
      s += f(u_lo + h * k) * (k % 2 != 0 ? 4.0 : 2.0);
    return s * h / 3.0 / (a - eps);
  };

  const Design xi = point_design(a / 2.0);
  std::vector<CollapseRow> rows;
  rows.reserve(epsilons.size());
  for (std::size_t i = 0; i < epsilons.size(); ++i) {
    CollapseRow row;
    row.epsilon = epsilons[i];
    row.x_point = x_points[i];
    row.phi_design = phi_uniform(xi, row.epsilon);
    row.phi_comparison = phi_uniform(point_design(row.x_point), row.epsilon);
    row.relative_efficiency = std::exp(row.phi_design - row.phi_comparison);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace bodx::efficiency
