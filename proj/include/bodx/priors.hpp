#ifndef BODX_PRIORS_HPP
#define BODX_PRIORS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bodx/models.hpp"

// One-dimensional prior families, their analytic moment-finiteness facts, and
// independent products over model parameters. Sampling goes through the
// quantile function, so draws are deterministic per seed and marginally exact
// by construction.
namespace bodx::priors {

enum class Family { Normal, LogNormal, Uniform, Cauchy, HalfCauchy, StudentT };

enum class Flag { Yes, No, NotApplicable };

struct Prior1D {
  Family family = Family::Normal;
  double loc = 0.0;    // Normal/Cauchy/StudentT location; LogNormal log-mean
  double scale = 1.0;  // sd for Normal, log-sd for LogNormal, scale otherwise
  double a = 0.0, b = 1.0;  // Uniform endpoints
  double df = 1.0;          // StudentT degrees of freedom
  int sign = +1;            // HalfCauchy: +1 right half, -1 left half

  static Prior1D normal(double loc, double sd);
  static Prior1D lognormal(double log_loc, double log_sd);
  static Prior1D uniform(double a, double b);
  static Prior1D cauchy(double loc, double scale);
  static Prior1D half_cauchy(double scale, int sign);
  static Prior1D student_t(double df, double loc, double scale);

  double cdf(double x) const;
  double inv_cdf(double u) const;  // u in the open interval (0,1)
  double pdf(double x) const;
  double support_lo() const;
  double support_hi() const;
  std::string describe() const;
};

// Analytic moment-finiteness facts. expected_log_finite and
// expected_inverse_finite are statements about positive-support priors
// (E|log X| and E(1/X)); they are NotApplicable when the support includes
// zero or negative values.
struct MomentFlags {
  Flag mean_abs_finite = Flag::NotApplicable;
  Flag second_moment_finite = Flag::NotApplicable;
  Flag expected_log_finite = Flag::NotApplicable;
  Flag expected_inverse_finite = Flag::NotApplicable;
  double support_lo = 0.0;
  double support_hi = 0.0;
};

MomentFlags moment_flags(const Prior1D& p);
const char* flag_name(Flag f);

// Whether E|log|X|| is finite: true for every registry family (bounded
// density near zero, polynomial or faster tails). Kept as a named fact so
// rule code reads as the condition it checks.
bool log_abs_moment_finite(const Prior1D& p);

// Tail masses P(X > c) / P(X < c), exact zeros off the support.
double prob_above(const Prior1D& p, double c);
double prob_below(const Prior1D& p, double c);

// Independent product prior over the model's parameter order. Labels name
// the coordinates; a compartmental prior over (theta1, delta, theta3) is
// declared by labeling the second coordinate "delta".
struct JointPrior {
  std::vector<Prior1D> components;
  std::vector<std::string> labels;

  int dim() const { return static_cast<int>(components.size()); }
  bool delta_coords() const {
    return labels.size() == 3 && labels[1] == "delta";
  }
};

// n quantile-transported draws from an mt19937_64 stream seeded with `seed`.
std::vector<models::ParamVector> sample(const JointPrior& jp, std::size_t n,
                                        std::uint64_t seed);

// Map a draw in prior coordinates to model coordinates: identity except for
// compartmental separation coordinates, where (theta1, delta, theta3)
// becomes (theta1, theta1 + delta, theta3).
models::ParamVector to_model_params(const JointPrior& jp,
                                    const models::ModelSpec& spec,
                                    const models::ParamVector& draw);

// Weakly informative default for logistic coefficients: Cauchy(0, 10) on the
// intercept, Cauchy(0, 2.5) on every other coefficient, independent.
JointPrior gelman_prior(int p);

}  // namespace bodx::priors

#endif
