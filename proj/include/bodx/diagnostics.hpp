#ifndef BODX_DIAGNOSTICS_HPP
#define BODX_DIAGNOSTICS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bodx/models.hpp"
#include "bodx/priors.hpp"

// Singularity screening for (model, prior) pairs, plus an empirical
// divergence probe.
//
// diagnose applies the rulebook of decidable conditions: each rule reads the
// analytic moment facts of the prior components (never samples) and certifies
// either that every design has objective -infinity (Singular), that designs
// with a finite objective exist (NonSingular), or that no implemented rule
// decides the pair (Inconclusive, with the unresolved conditions listed).
// Rules carry the short citation names used throughout the CLI rulebook
// ("Prop 1", "Thm 2", "Poisson Cor", ...).
namespace bodx::diagnostics {

enum class VerdictKind { Singular, NonSingular, Inconclusive };

struct Verdict {
  VerdictKind kind = VerdictKind::Inconclusive;
  std::string rule;                  // rulebook citation; set unless Inconclusive
  std::vector<std::string> missing;  // unresolved conditions when Inconclusive
};

// Decide singularity of the prior for this model from the component moment
// facts. Decisive singularity rules run first, then decisive non-singularity
// rules. Throws std::invalid_argument when the component count does not
// match the parameter dimension or a component's support leaves the
// parameter's domain (rates, lifetimes and compartmental parameters must be
// non-negative).
Verdict diagnose(const models::ModelSpec& spec,
                 const priors::JointPrior& prior);

// Empirical witness for the geometric-mean-zero property: nested running
// means of log|M(xi; theta)| over one seeded draw stream, reported at each
// requested size together with the standard error of the mean at that size.
// Ill-conditioned draws contribute the midpoint of their analytic bounds and
// are counted. A diverging expectation drags the estimates down without
// bound as the size grows; a finite one stabilizes them.
struct ProbeReport {
  std::vector<std::size_t> sizes;
  std::vector<double> estimates;        // running mean at each size
  std::vector<double> standard_errors;  // sd of first-N values / sqrt(N)
  double slope = 0.0;       // least-squares slope of estimate vs log N
  bool decreasing = false;  // estimates strictly decreasing across sizes
  std::size_t n_substituted = 0;  // draws that used analytic bounds
};

ProbeReport divergence_probe(const models::ModelSpec& spec,
                             const priors::JointPrior& prior,
                             const models::Design& xi,
                             const std::vector<std::size_t>& sizes,
                             std::uint64_t seed);

}  // namespace bodx::diagnostics

#endif
