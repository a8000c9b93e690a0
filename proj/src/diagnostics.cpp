#include "bodx/diagnostics.hpp"

#include <atomic>
#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "bodx/common.hpp"
#include "bodx/objective.hpp"
#include "bodx/parallel.hpp"

namespace bodx::diagnostics {

using models::Design;
using models::Link;
using models::ModelSpec;
using priors::Flag;
using priors::JointPrior;
using priors::MomentFlags;
using priors::Prior1D;

namespace {

bool yes(Flag f) { return f == Flag::Yes; }
bool no(Flag f) { return f == Flag::No; }

Verdict singular(std::string rule) {
  Verdict v;
  v.kind = VerdictKind::Singular;
  v.rule = std::move(rule);
  return v;
}

Verdict nonsingular(std::string rule) {
  Verdict v;
  v.kind = VerdictKind::NonSingular;
  v.rule = std::move(rule);
  return v;
}

std::string comp_name(const JointPrior& jp, int j) {
  if (j < static_cast<int>(jp.labels.size()) && !jp.labels[j].empty())
    return jp.labels[j];
  return "component " + std::to_string(j);
}

bool support_contains_zero(const MomentFlags& f) {
  return f.support_lo <= 0.0 && f.support_hi >= 0.0;
}

// The default weakly-informative logistic prior shape: Cauchy(0, 10) on the
// coefficient that fired the rule, Cauchy(0, 2.5) on every other one. The
// check is order-free so permuting components keeps the citation.
bool default_weakly_informative(const JointPrior& jp, int heavy) {
  const auto& h = jp.components[heavy];
  if (h.family != priors::Family::Cauchy || h.loc != 0.0 || h.scale != 10.0)
    return false;
  for (int k = 0; k < jp.dim(); ++k) {
    if (k == heavy) continue;
    const auto& c = jp.components[k];
    if (c.family != priors::Family::Cauchy || c.loc != 0.0 || c.scale != 2.5)
      return false;
  }
  return true;
}

void require_nonnegative_support(const JointPrior& jp, const char* what) {
  for (int j = 0; j < jp.dim(); ++j) {
    if (jp.components[j].support_lo() < 0.0)
      throw std::invalid_argument(std::string(what) +
                                  " parameters are non-negative, but the "
                                  "prior on " +
                                  comp_name(jp, j) + " extends below zero");
  }
}

Verdict diagnose_exponential(const ModelSpec& spec, const JointPrior& jp) {
  require_nonnegative_support(
      jp, spec.family == ModelSpec::Family::ExponentialBeta
              ? "exponential decay rate"
              : "exponential mean-lifetime");
  const auto& p = jp.components[0];
  const auto f = priors::moment_flags(p);

  if (spec.family == ModelSpec::Family::ExponentialBeta) {
    // Non-singular exactly when the rate has a finite mean.
    return yes(f.mean_abs_finite) ? nonsingular("Prop 1") : singular("Prop 1");
  }
  // Lifetime parameterization: singular exactly when E(1/theta) or
  // E|log theta| diverges. The uniform family anchored at zero is the
  // canonical instance and keeps its own citation.
  if (no(f.expected_inverse_finite) || no(f.expected_log_finite)) {
    const bool uniform_from_zero =
        p.family == priors::Family::Uniform && p.a == 0.0;
    return singular(uniform_from_zero ? "Cor 1" : "Prop 2");
  }
  return nonsingular("Prop 2");
}

Verdict diagnose_compartmental(const JointPrior& jp) {
  require_nonnegative_support(jp, "compartmental");
  const auto f1 = priors::moment_flags(jp.components[0]);
  const auto f3 = priors::moment_flags(jp.components[2]);

  Verdict v;  // Inconclusive unless a singularity rule fires

  // Standing hypothesis: the upper log tail of theta3 must integrate. The
  // moment fact covers both tails at once, so a diverging flag cannot be
  // attributed to one tail and the whole rule is withheld.
  if (no(f3.expected_log_finite)) {
    v.missing.push_back(
        "theta3: E|log theta3| diverges, so the upper-tail hypothesis of the "
        "singularity rule (Prop 3) cannot be certified");
    return v;
  }

  if (no(f1.mean_abs_finite)) return singular("Prop 3");

  // theta3's lower log tail: with the standing hypothesis certified above,
  // a finite E|log theta3| also clears the near-zero condition, so that
  // branch of the rule definitively does not fire.

  if (jp.delta_coords()) {
    const auto f2 = priors::moment_flags(jp.components[1]);
    if (no(f2.expected_log_finite)) {
      v.missing.push_back(
          "delta: E|log delta| diverges, but the singularity rule needs the "
          "near-zero tail specifically and the two tails cannot be separated");
    }
  } else {
    v.missing.push_back(
        "delta = theta2 - theta1: log-integrability near zero is undecidable "
        "for a prior specified on (theta1, theta2, theta3); specify "
        "(theta1, delta, theta3) with an independent delta to decide it");
  }
  v.missing.push_back(
      "no non-singularity criterion exists for the compartmental family; "
      "use the divergence probe");
  return v;
}

Verdict diagnose_glm(const ModelSpec& spec, const JointPrior& jp) {
  const int p = spec.param_dim();
  std::vector<MomentFlags> fl;
  fl.reserve(static_cast<std::size_t>(p));
  for (int j = 0; j < p; ++j)
    fl.push_back(priors::moment_flags(jp.components[j]));

  const Link link = spec.link;
  Verdict v;  // Inconclusive unless a rule fires

  if (link == Link::Logit || link == Link::Probit) {
    // Singularity first: a heavy coefficient on a regressor bounded away
    // from zero, with upper-tail mass, while every other coefficient can
    // concentrate near zero. Heavy means an infinite mean for the logit
    // weight and an infinite second moment for the probit weight; within
    // the prior registry, that plus mass above one implies the conditional
    // upper-tail moment in the rule diverges.
    const bool probit = link == Link::Probit;
    for (int j = 0; j < p; ++j) {
      const bool heavy = probit ? no(fl[j].second_moment_finite)
                                : no(fl[j].mean_abs_finite);
      if (!heavy) continue;
      const std::string name = comp_name(jp, j);
      const char* rule = probit ? "Prop 6" : "Prop 4";
      if (priors::prob_above(jp.components[j], 1.0) <= 0.0) {
        v.missing.push_back(name + ": heavy-tailed with no mass above 1; " +
                            rule + " needs positive upper-tail mass");
        continue;
      }
      if (!spec.terms[j].constant()) {
        v.missing.push_back(name + ": heavy tail multiplies regressor " +
                            spec.terms[j].name() +
                            ", which vanishes somewhere on the region, so " +
                            rule + " cannot cover every design");
        continue;
      }
      bool companions = true;
      for (int k = 0; k < p && companions; ++k) {
        if (k == j) continue;
        if (!support_contains_zero(fl[k])) {
          v.missing.push_back(comp_name(jp, k) +
                              ": support excludes a neighborhood of zero, "
                              "blocking the concentration condition of " +
                              rule);
          companions = false;
        }
      }
      if (!companions) continue;
      if (probit)
        return singular(default_weakly_informative(jp, j) ? "Cor 3"
                                                          : "Prop 6");
      return singular(default_weakly_informative(jp, j) ? "Cor 2" : "Prop 4");
    }

    // Non-singularity: every coefficient tame enough for the weight bound.
    bool all_tame = true;
    for (int j = 0; j < p; ++j) {
      const bool tame =
          probit ? yes(fl[j].second_moment_finite) : yes(fl[j].mean_abs_finite);
      if (!tame) {
        v.missing.push_back(std::string(probit ? "Thm 2" : "Thm 1") +
                            " needs a finite " +
                            (probit ? "second moment" : "mean") +
                            " for every coefficient; " + comp_name(jp, j) +
                            " fails it");
        all_tame = false;
      }
    }
    if (all_tame) return nonsingular(probit ? "Thm 2" : "Thm 1");
    return v;
  }

  // Log link (Poisson regression).
  for (int j = 0; j < p; ++j) {
    if (!no(fl[j].mean_abs_finite)) continue;
    const std::string name = comp_name(jp, j);
    if (fl[j].support_hi > 0.0) {
      v.missing.push_back(name +
                          ": heavy-tailed but not supported on the negative "
                          "axis; the singularity rule (Poisson Prop) needs a "
                          "negative-only heavy coefficient");
      continue;
    }
    if (priors::prob_below(jp.components[j], -1.0) <= 0.0) {
      v.missing.push_back(name +
                          ": no mass below -1; Poisson Prop needs positive "
                          "lower-tail mass");
      continue;
    }
    if (!spec.terms[j].constant()) {
      v.missing.push_back(name + ": heavy tail multiplies regressor " +
                          spec.terms[j].name() +
                          ", which vanishes somewhere on the region, so "
                          "Poisson Prop cannot cover every design");
      continue;
    }
    bool others_fine = true;
    for (int k = 0; k < p && others_fine; ++k) {
      if (k == j) continue;
      if (!yes(fl[k].mean_abs_finite)) {
        v.missing.push_back("Poisson Prop needs finite means for all other "
                            "coefficients; " +
                            comp_name(jp, k) + " has an infinite mean");
        others_fine = false;
      } else if (!support_contains_zero(fl[k])) {
        v.missing.push_back(comp_name(jp, k) +
                            ": support excludes a neighborhood of zero, "
                            "blocking the concentration condition of "
                            "Poisson Prop");
        others_fine = false;
      }
    }
    if (!others_fine) continue;
    const auto& h = jp.components[j];
    const bool negative_half_cauchy =
        h.family == priors::Family::HalfCauchy && h.sign < 0;
    return singular(negative_half_cauchy ? "Poisson Cor" : "Poisson Prop");
  }

  bool all_means = true;
  for (int j = 0; j < p; ++j) {
    if (!yes(fl[j].mean_abs_finite)) {
      v.missing.push_back("Thm 3 needs a finite mean for every coefficient; " +
                          comp_name(jp, j) + " fails it");
      all_means = false;
    }
  }
  if (all_means) return nonsingular("Thm 3");
  return v;
}

Verdict diagnose_mu_beta(const JointPrior& jp) {
  const auto f_mu = priors::moment_flags(jp.components[0]);
  const auto f_b = priors::moment_flags(jp.components[1]);
  Verdict v;
  // Under independent components E|mu beta1| = E|mu| E|beta1|, so the three
  // conditions reduce to finite means plus an integrable log of the slope.
  bool ok = true;
  if (!yes(f_mu.mean_abs_finite)) {
    v.missing.push_back("Prop 7 needs E|mu beta1| finite; " +
                        comp_name(jp, 0) + " has an infinite mean");
    ok = false;
  }
  if (!yes(f_b.mean_abs_finite)) {
    v.missing.push_back("Prop 7 needs E|beta1| finite; " + comp_name(jp, 1) +
                        " has an infinite mean");
    ok = false;
  }
  if (!priors::log_abs_moment_finite(jp.components[1])) {
    v.missing.push_back("Prop 7 needs E log|beta1| > -infinity; " +
                        comp_name(jp, 1) + " concentrates too much at zero");
    ok = false;
  }
  if (ok) return nonsingular("Prop 7");
  v.missing.push_back(
      "no singularity criterion exists for the location-slope "
      "parameterization; use the divergence probe");
  return v;
}

}  // namespace

Verdict diagnose(const ModelSpec& spec, const JointPrior& prior) {
  if (prior.dim() != spec.param_dim())
    throw std::invalid_argument(
        "prior has " + std::to_string(prior.dim()) +
        " components but the model has " + std::to_string(spec.param_dim()) +
        " parameters");
  switch (spec.family) {
    case ModelSpec::Family::ExponentialBeta:
    case ModelSpec::Family::ExponentialTheta:
      return diagnose_exponential(spec, prior);
    case ModelSpec::Family::Compartmental:
      return diagnose_compartmental(prior);
    case ModelSpec::Family::Glm:
      return diagnose_glm(spec, prior);
    case ModelSpec::Family::LogisticMuBeta:
      return diagnose_mu_beta(prior);
  }
  throw std::logic_error("unknown model family");
}

ProbeReport divergence_probe(const ModelSpec& spec, const JointPrior& prior,
                             const Design& xi,
                             const std::vector<std::size_t>& sizes,
                             std::uint64_t seed) {
  if (sizes.empty())
    throw std::invalid_argument("divergence probe needs at least one size");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0 || (i > 0 && sizes[i] <= sizes[i - 1]))
      throw std::invalid_argument(
          "divergence probe sizes must be strictly increasing");
  }
  if (prior.dim() != spec.param_dim())
    throw std::invalid_argument(
        "prior has " + std::to_string(prior.dim()) +
        " components but the model has " + std::to_string(spec.param_dim()) +
        " parameters");

  const std::size_t total = sizes.back();
  const auto draws = priors::sample(prior, total, seed);
  std::vector<double> vals(total, 0.0);
  std::vector<unsigned char> subst(total, 0);
  std::atomic<long long> first_error{-1};

  auto eval_one = [&](std::size_t l) {
    const auto theta = priors::to_model_params(prior, spec, draws[l]);
    const auto lv = objective::local_objective_checked(spec, xi, theta);
    vals[l] = lv.value;
    subst[l] = lv.substituted ? 1 : 0;
  };

  par::for_index(total, [&](std::size_t l) {
    try {
      eval_one(l);
    } catch (...) {
      long long expected = -1;
      first_error.compare_exchange_strong(expected,
                                          static_cast<long long>(l));
    }
  });
  if (first_error.load() >= 0) {
    // Re-run the failing draw serially so the original exception propagates.
    eval_one(static_cast<std::size_t>(first_error.load()));
    throw std::runtime_error("divergence probe failed on a draw");
  }

  ProbeReport r;
  r.sizes = sizes;
  double sum = 0.0, sumsq = 0.0;
  std::size_t k = 0;
  for (std::size_t s : sizes) {
    for (; k < s; ++k) {
      sum += vals[k];
      sumsq += vals[k] * vals[k];
    }
    const double n = static_cast<double>(s);
    const double mean = sum / n;
    const double var = std::max(0.0, sumsq / n - mean * mean);
    r.estimates.push_back(mean);
    r.standard_errors.push_back(std::sqrt(var / n));
  }
  for (unsigned char c : subst) r.n_substituted += c;
  r.decreasing = sizes.size() >= 2;
  for (std::size_t i = 1; i < r.estimates.size(); ++i)
    if (!(r.estimates[i] < r.estimates[i - 1])) r.decreasing = false;
  if (sizes.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double m = static_cast<double>(sizes.size());
    for (std::size_t i = 0; i < sizes.size(); ++i) {
      const double x = std::log(static_cast<double>(sizes[i]));
      sx += x;
      sy += r.estimates[i];
      sxx += x * x;
      sxy += x * r.estimates[i];
    }
    r.slope = (m * sxy - sx * sy) / (m * sxx - sx * sx);
  }
  return r;
}

}  // namespace bodx::diagnostics
