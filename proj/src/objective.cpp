#include "bodx/objective.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "bodx/common.hpp"
#include "bodx/linalg.hpp"
#include "bodx/parallel.hpp"

namespace bodx::objective {

namespace {

using models::Design;
using models::ModelSpec;
using models::ParamVector;

void throw_base_singular() {
  throw std::runtime_error("design singular for the base linear model");
}

// Design-level state shared by every node of a phi evaluation.
struct BoundContext {
  // GLM-like
  std::vector<std::vector<double>> f;  // regressors per design point
  double log_base = 0.0;               // log|F'F| of the base linear model
  int p_eff = 0;                       // determinant power for the weights
  // exponential families: log(x_i^2) and x_i for positive times
  std::vector<double> log_x2, times;
  // compartmental
  double xmax = 0.0, xmin_pos = 0.0;
};

int distinct_positive_times(const Design& xi) {
  std::vector<double> t;
  for (int i = 0; i < xi.n(); ++i)
    if (xi.at(i, 0) > 0.0) t.push_back(xi.at(i, 0));
  std::sort(t.begin(), t.end());
  t.erase(std::unique(t.begin(), t.end()), t.end());
  return static_cast<int>(t.size());
}

BoundContext make_context(const ModelSpec& spec, const Design& xi,
                          double rcond_threshold) {
  BoundContext ctx;
  switch (spec.family) {
    case ModelSpec::Family::ExponentialBeta:
    case ModelSpec::Family::ExponentialTheta: {
      for (int i = 0; i < xi.n(); ++i) {
        const double x = xi.at(i, 0);
        if (x > 0.0) {
          ctx.log_x2.push_back(2.0 * std::log(x));
          ctx.times.push_back(x);
        }
      }
      if (ctx.times.empty()) throw_base_singular();
      break;
    }
    case ModelSpec::Family::Compartmental: {
      if (distinct_positive_times(xi) < 3) throw_base_singular();
      ctx.xmax = models::x_max(xi);
      ctx.xmin_pos = models::x_min_positive(xi);
      break;
    }
    case ModelSpec::Family::Glm:
    case ModelSpec::Family::LogisticMuBeta: {
      auto base = models::model_matrix(spec, xi);
      auto ld = linalg::log_det_psd(base, rcond_threshold);
      if (!ld.ok()) throw_base_singular();
      ctx.log_base = ld.logdet;
      ctx.p_eff = base.dim();
      ctx.f.reserve(xi.n());
      for (int i = 0; i < xi.n(); ++i)
        ctx.f.push_back(models::regress(spec, xi.point(i)));
      break;
    }
  }
  return ctx;
}

// Exact log information for the one-parameter exponential families,
// evaluated in the log domain so extreme rates stay finite or cleanly -inf.
double exponential_log_info(const BoundContext& ctx, double rate) {
  std::vector<double> terms(ctx.times.size());
  for (std::size_t i = 0; i < ctx.times.size(); ++i)
    terms[i] = ctx.log_x2[i] - 2.0 * rate * ctx.times[i];
  return log_sum_exp(terms);
}

PointBounds bounds_in_context(const BoundContext& ctx, const ModelSpec& spec,
                              const Design& xi, const ParamVector& beta) {
  switch (spec.family) {
    case ModelSpec::Family::ExponentialBeta: {
      const double v = exponential_log_info(ctx, beta[0]);
      return {v, v};
    }
    case ModelSpec::Family::ExponentialTheta: {
      const double v =
          -4.0 * std::log(beta[0]) + exponential_log_info(ctx, 1.0 / beta[0]);
      return {v, v};
    }
    case ModelSpec::Family::Compartmental: {
      const double theta1 = beta[0], delta = beta[1] - beta[0], theta3 = beta[2];
      const double core = 4.0 * std::log(theta3) +
                          models::compartmental_mtilde_logdet(delta, xi);
      return {core - 6.0 * theta1 * ctx.xmax, core - 6.0 * theta1 * ctx.xmin_pos};
    }
    case ModelSpec::Family::Glm:
    case ModelSpec::Family::LogisticMuBeta: {
      const models::Link link = spec.effective_link();
      double min_lw = kInf, max_lw = kNegInf;
      for (const auto& f : ctx.f) {
        double eta = 0.0;
        if (spec.family == ModelSpec::Family::LogisticMuBeta) {
          eta = beta[1] * (f[1] - beta[0]);
        } else {
          for (std::size_t j = 0; j < f.size(); ++j) eta += f[j] * beta[j];
        }
        const double lw = models::glm_log_weight(link, eta);
        min_lw = std::min(min_lw, lw);
        max_lw = std::max(max_lw, lw);
      }
      double shift = 0.0;
      if (spec.family == ModelSpec::Family::LogisticMuBeta)
        shift = 2.0 * std::log(std::abs(beta[1]));
      return {shift + ctx.log_base + ctx.p_eff * min_lw,
              shift + ctx.log_base + ctx.p_eff * max_lw};
    }
  }
  return {kNegInf, kInf};
}

// Saturated unit weights floor the info matrix instead of underflowing it,
// so its determinant can look well conditioned while being wrong; such nodes
// must take the bound path. Uses the context's cached regressors.
bool node_saturated(const BoundContext& ctx, const ModelSpec& spec,
                    const ParamVector& beta) {
  if (spec.family != ModelSpec::Family::Glm &&
      spec.family != ModelSpec::Family::LogisticMuBeta)
    return false;
  const models::Link link = spec.effective_link();
  for (const auto& f : ctx.f) {
    double eta = 0.0;
    if (spec.family == ModelSpec::Family::LogisticMuBeta) {
      eta = beta[1] * (f[1] - beta[0]);
    } else {
      for (std::size_t j = 0; j < f.size(); ++j) eta += f[j] * beta[j];
    }
    if (models::glm_weight_saturated(link, eta)) return true;
  }
  return false;
}

}  // namespace

PointBounds phi_point_bounds(const ModelSpec& spec, const Design& xi,
                             const ParamVector& beta, double rcond_threshold) {
  models::validate_params(spec, beta);
  const auto ctx = make_context(spec, xi, rcond_threshold);
  return bounds_in_context(ctx, spec, xi, beta);
}

ObjectiveBracket phi(const Design& xi, const ModelSpec& spec,
                     const quadrature::QuadratureScheme& q,
                     double rcond_threshold) {
  require(q.size() > 0, "empty quadrature scheme");
  const auto ctx = make_context(spec, xi, rcond_threshold);
  const std::size_t n = q.size();
  std::vector<double> lo(n, 0.0), up(n, 0.0);
  std::vector<unsigned char> ill(n, 0);
  std::atomic<long> first_error{-1};

  par::for_index(n, [&](std::size_t l) {
    if (q.weights[l] == 0.0) return;  // mass-free node
    try {
      linalg::LogDetResult ld = linalg::LogDetResult::ill(0.0);
      if (!node_saturated(ctx, spec, q.nodes[l]))
        ld = linalg::log_det_psd(models::info_matrix(spec, xi, q.nodes[l]),
                                 rcond_threshold);
      if (ld.ok()) {
        lo[l] = up[l] = ld.logdet;
      } else {
        auto b = bounds_in_context(ctx, spec, xi, q.nodes[l]);
        lo[l] = b.lower;
        up[l] = b.upper;
        ill[l] = 1;
      }
    } catch (...) {
      long expected = -1;
      first_error.compare_exchange_strong(expected, static_cast<long>(l));
    }
  });
  if (first_error.load() >= 0) {
    // Re-run the failing node serially so the original exception propagates.
    const std::size_t l = static_cast<std::size_t>(first_error.load());
    linalg::log_det_psd(models::info_matrix(spec, xi, q.nodes[l]),
                        rcond_threshold);
    throw std::runtime_error("objective evaluation failed on a node");
  }

  ObjectiveBracket out;
  for (std::size_t l = 0; l < n; ++l) {
    if (q.weights[l] == 0.0) continue;
    out.lower += q.weights[l] * lo[l];
    out.upper += q.weights[l] * up[l];
    if (ill[l]) out.s_set.push_back(static_cast<int>(l));
  }
  out.exact = out.s_set.empty();
  return out;
}

LocalValue local_objective_checked(const ModelSpec& spec, const Design& xi,
                                   const ParamVector& theta,
                                   double rcond_threshold) {
  if (!models::info_saturated(spec, xi, theta)) {
    auto ld = linalg::log_det_psd(models::info_matrix(spec, xi, theta),
                                  rcond_threshold);
    if (ld.ok()) return {ld.logdet, false};
  }
  const auto b = phi_point_bounds(spec, xi, theta, rcond_threshold);
  return {0.5 * (b.lower + b.upper), true};
}

double local_objective(const ModelSpec& spec, const Design& xi,
                       const ParamVector& theta, double rcond_threshold) {
  return local_objective_checked(spec, xi, theta, rcond_threshold).value;
}

double ew_objective(const Design& xi, const ModelSpec& spec,
                    const quadrature::QuadratureScheme& q,
                    double rcond_threshold) {
  require(spec.family == ModelSpec::Family::Glm,
          "EW criterion requires a GLM");
  require(q.size() > 0, "empty quadrature scheme");
  const int n = xi.n();
  std::vector<double> mean_w(n, 0.0);
  par::for_index(static_cast<std::size_t>(n), [&](std::size_t i) {
    const auto f = models::regress(spec, xi.point(i));
    double acc = 0.0;
    for (std::size_t l = 0; l < q.size(); ++l) {
      double eta = 0.0;
      for (std::size_t j = 0; j < f.size(); ++j) eta += f[j] * q.nodes[l][j];
      acc += q.weights[l] * models::glm_weight(spec.link, eta);
    }
    mean_w[i] = acc;
  });
  const int p = spec.param_dim();
  linalg::SymMatrix m(p);
  for (int i = 0; i < n; ++i) {
    const auto f = models::regress(spec, xi.point(i));
    for (int a = 0; a < p; ++a)
      for (int b = 0; b <= a; ++b) m.add(a, b, mean_w[i] * f[a] * f[b]);
  }
  auto ld = linalg::log_det_psd(m, rcond_threshold);
  if (!ld.ok())
    throw std::runtime_error("EW information matrix is ill-conditioned");
  return ld.logdet;
}

PsiResult mean_local_efficiency(const Design& xi, const ModelSpec& spec,
                                const quadrature::QuadratureScheme& q,
                                const EffProvider& eff) {
  (void)xi;
  (void)spec;
  const std::size_t n = q.size();
  std::vector<double> mid(n, 0.0);
  std::vector<unsigned char> dead(n, 0);
  par::for_index(n, [&](std::size_t l) {
    if (q.weights[l] == 0.0) return;
    const auto [lo, up] = eff(q.nodes[l]);
    mid[l] = 0.5 * (lo + up);
    dead[l] = uninformative_bracket(lo, up) ? 1 : 0;
  });
  PsiResult r;
  for (std::size_t l = 0; l < n; ++l) {
    if (q.weights[l] == 0.0) continue;
    r.psi += q.weights[l] * mid[l];
    if (dead[l]) r.uninformative_mass += q.weights[l];
  }
  return r;
}

}  // namespace bodx::objective
