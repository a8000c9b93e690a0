#include "bodx/priors.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "bodx/common.hpp"
#include "bodx/normal.hpp"

namespace bodx::priors {

namespace {

// Regularized incomplete beta via the standard continued fraction (Lentz).
double betacf(double a, double b, double x) {
  const int max_it = 400;
  const double eps = 3e-16, fpmin = 1e-300;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < fpmin) d = fpmin;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= max_it; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < fpmin) d = fpmin;
    c = 1.0 + aa / c;
    if (std::abs(c) < fpmin) c = fpmin;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < eps) break;
  }
  return h;
}

double reg_inc_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double lbeta = std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
  const double bt = std::exp(a * std::log(x) + b * std::log1p(-x) - lbeta);
  if (x < (a + 1.0) / (a + b + 2.0)) return bt * betacf(a, b, x) / a;
  return 1.0 - bt * betacf(b, a, 1.0 - x) / b;
}

// Standardized Student-t CDF/pdf.
double t_cdf(double df, double z) {
  const double x = df / (df + z * z);
  const double half_tail = 0.5 * reg_inc_beta(df / 2.0, 0.5, x);
  return z >= 0.0 ? 1.0 - half_tail : half_tail;
}

double t_pdf(double df, double z) {
  const double lg = std::lgamma((df + 1.0) / 2.0) - std::lgamma(df / 2.0) -
                    0.5 * std::log(df * kPi);
  return std::exp(lg - 0.5 * (df + 1.0) * std::log1p(z * z / df));
}

// Quantile of the standardized t: bisection in atan(z/sqrt(df)) space (which
// covers the whole axis uniformly), then Newton polish.
double t_quantile(double df, double u) {
  const bool flip = u > 0.5;
  const double uu = flip ? 1.0 - u : u;
  if (uu == 0.5) return 0.0;
  double vlo = -kPi / 2.0, vhi = 0.0;
  for (int it = 0; it < 90; ++it) {
    const double v = 0.5 * (vlo + vhi);
    const double z = std::sqrt(df) * std::tan(v);
    if (t_cdf(df, z) < uu)
      vlo = v;
    else
      vhi = v;
  }
  double z = std::sqrt(df) * std::tan(0.5 * (vlo + vhi));
  for (int it = 0; it < 4; ++it) {
    const double f = t_cdf(df, z), g = t_pdf(df, z);
    if (!(g > 0.0)) break;
    const double step = (f - uu) / g;
    if (!std::isfinite(step)) break;
    z -= step;
  }
  return flip ? -z : z;
}

// Stable Cauchy CDF: reciprocal form beyond |z| = 1 avoids the pi/2
// cancellation in the tails.
double cauchy_cdf_std(double z) {
  if (std::abs(z) <= 1.0) return 0.5 + std::atan(z) / kPi;
  const double w = std::atan(1.0 / std::abs(z)) / kPi;
  return z > 0.0 ? 1.0 - w : w;
}

// Half-Cauchy on the positive axis.
double half_cauchy_cdf_std(double z) {
  if (z <= 0.0) return 0.0;
  if (z <= 1.0) return 2.0 / kPi * std::atan(z);
  return 1.0 - 2.0 / kPi * std::atan(1.0 / z);
}

}  // namespace

Prior1D Prior1D::normal(double loc, double sd) {
  require(sd > 0.0 && std::isfinite(sd) && std::isfinite(loc),
          "normal prior needs finite loc and sd > 0");
  Prior1D p;
  p.family = Family::Normal;
  p.loc = loc;
  p.scale = sd;
  return p;
}

Prior1D Prior1D::lognormal(double log_loc, double log_sd) {
  require(log_sd > 0.0 && std::isfinite(log_sd) && std::isfinite(log_loc),
          "lognormal prior needs finite log-loc and log-sd > 0");
  Prior1D p;
  p.family = Family::LogNormal;
  p.loc = log_loc;
  p.scale = log_sd;
  return p;
}

Prior1D Prior1D::uniform(double a, double b) {
  require(std::isfinite(a) && std::isfinite(b) && a < b,
          "uniform prior needs a < b");
  Prior1D p;
  p.family = Family::Uniform;
  p.a = a;
  p.b = b;
  return p;
}

Prior1D Prior1D::cauchy(double loc, double scale) {
  require(scale > 0.0 && std::isfinite(scale) && std::isfinite(loc),
          "cauchy prior needs finite loc and scale > 0");
  Prior1D p;
  p.family = Family::Cauchy;
  p.loc = loc;
  p.scale = scale;
  return p;
}

Prior1D Prior1D::half_cauchy(double scale, int sign) {
  require(scale > 0.0 && std::isfinite(scale), "half-cauchy needs scale > 0");
  require(sign == 1 || sign == -1, "half-cauchy sign must be +1 or -1");
  Prior1D p;
  p.family = Family::HalfCauchy;
  p.scale = scale;
  p.sign = sign;
  return p;
}

Prior1D Prior1D::student_t(double df, double loc, double scale) {
  require(df > 0.0 && std::isfinite(df), "student-t needs df > 0");
  require(scale > 0.0 && std::isfinite(scale) && std::isfinite(loc),
          "student-t needs finite loc and scale > 0");
  Prior1D p;
  p.family = Family::StudentT;
  p.df = df;
  p.loc = loc;
  p.scale = scale;
  return p;
}

double Prior1D::cdf(double x) const {
  switch (family) {
    case Family::Normal:
      return norm_cdf((x - loc) / scale);
    case Family::LogNormal:
      return x <= 0.0 ? 0.0 : norm_cdf((std::log(x) - loc) / scale);
    case Family::Uniform:
      if (x <= a) return 0.0;
      if (x >= b) return 1.0;
      return (x - a) / (b - a);
    case Family::Cauchy:
      return cauchy_cdf_std((x - loc) / scale);
    case Family::HalfCauchy:
      return sign > 0 ? half_cauchy_cdf_std(x / scale)
                      : 1.0 - half_cauchy_cdf_std(-x / scale);
    case Family::StudentT:
      return t_cdf(df, (x - loc) / scale);
  }
  return 0.0;
}

double Prior1D::inv_cdf(double u) const {
  require(u > 0.0 && u < 1.0, "inv_cdf needs u strictly inside (0,1)");
  switch (family) {
    case Family::Normal:
      return loc + scale * norm_quantile(u);
    case Family::LogNormal:
      return std::exp(loc + scale * norm_quantile(u));
    case Family::Uniform:
      return a + (b - a) * u;
    case Family::Cauchy: {
      // tan form flips sign of precision in the tails; use the half with the
      // smaller argument.
      if (u < 0.5) return loc - scale / std::tan(kPi * u);
      if (u > 0.5) return loc + scale / std::tan(kPi * (1.0 - u));
      return loc;
    }
    case Family::HalfCauchy: {
      // Each branch keeps the small probability in the tan argument, so both
      // tails come out with full relative precision.
      if (sign > 0)
        return u < 0.5 ? scale * std::tan(kPi * u / 2.0)
                       : scale / std::tan(kPi * (1.0 - u) / 2.0);
      return u <= 0.5 ? -scale / std::tan(kPi * u / 2.0)
                      : -scale * std::tan(kPi * (1.0 - u) / 2.0);
    }
    case Family::StudentT:
      return loc + scale * t_quantile(df, u);
  }
  return 0.0;
}

double Prior1D::pdf(double x) const {
  switch (family) {
    case Family::Normal:
      return norm_pdf((x - loc) / scale) / scale;
    case Family::LogNormal:
      return x <= 0.0 ? 0.0 : norm_pdf((std::log(x) - loc) / scale) / (scale * x);
    case Family::Uniform:
      return (x < a || x > b) ? 0.0 : 1.0 / (b - a);
    case Family::Cauchy: {
      const double z = (x - loc) / scale;
      return 1.0 / (kPi * scale * (1.0 + z * z));
    }
    case Family::HalfCauchy: {
      const double z = sign > 0 ? x / scale : -x / scale;
      if (z < 0.0) return 0.0;
      return 2.0 / (kPi * scale * (1.0 + z * z));
    }
    case Family::StudentT:
      return t_pdf(df, (x - loc) / scale) / scale;
  }
  return 0.0;
}

double Prior1D::support_lo() const {
  switch (family) {
    case Family::LogNormal:
      return 0.0;
    case Family::Uniform:
      return a;
    case Family::HalfCauchy:
      return sign > 0 ? 0.0 : -kInf;
    default:
      return -kInf;
  }
}

double Prior1D::support_hi() const {
  switch (family) {
    case Family::Uniform:
      return b;
    case Family::HalfCauchy:
      return sign > 0 ? kInf : 0.0;
    default:
      return kInf;
  }
}

std::string Prior1D::describe() const {
  std::ostringstream s;
  switch (family) {
    case Family::Normal:
      s << "normal(loc=" << loc << ", sd=" << scale << ")";
      break;
    case Family::LogNormal:
      s << "lognormal(log-loc=" << loc << ", log-sd=" << scale << ")";
      break;
    case Family::Uniform:
      s << "uniform(" << a << ", " << b << ")";
      break;
    case Family::Cauchy:
      s << "cauchy(loc=" << loc << ", scale=" << scale << ")";
      break;
    case Family::HalfCauchy:
      s << (sign > 0 ? "half-cauchy(+" : "half-cauchy(-") << ", scale=" << scale
        << ")";
      break;
    case Family::StudentT:
      s << "student-t(df=" << df << ", loc=" << loc << ", scale=" << scale << ")";
      break;
  }
  return s.str();
}

MomentFlags moment_flags(const Prior1D& p) {
  MomentFlags f;
  f.support_lo = p.support_lo();
  f.support_hi = p.support_hi();
  const bool positive = f.support_lo >= 0.0;
  switch (p.family) {
    case Family::Normal:
      f.mean_abs_finite = Flag::Yes;
      f.second_moment_finite = Flag::Yes;
      break;
    case Family::LogNormal:
      f.mean_abs_finite = Flag::Yes;
      f.second_moment_finite = Flag::Yes;
      f.expected_log_finite = Flag::Yes;      // log X is normal
      f.expected_inverse_finite = Flag::Yes;  // E(1/X) = exp(-loc + scale^2/2)
      break;
    case Family::Uniform:
      f.mean_abs_finite = Flag::Yes;
      f.second_moment_finite = Flag::Yes;
      if (positive) {
        f.expected_log_finite = Flag::Yes;  // |log| integrable down to 0
        f.expected_inverse_finite = p.a > 0.0 ? Flag::Yes : Flag::No;
      }
      break;
    case Family::Cauchy:
      f.mean_abs_finite = Flag::No;
      f.second_moment_finite = Flag::No;
      break;
    case Family::HalfCauchy:
      f.mean_abs_finite = Flag::No;
      f.second_moment_finite = Flag::No;
      if (positive) {
        f.expected_log_finite = Flag::Yes;
        f.expected_inverse_finite = Flag::No;  // density positive at zero
      }
      break;
    case Family::StudentT:
      f.mean_abs_finite = p.df > 1.0 ? Flag::Yes : Flag::No;
      f.second_moment_finite = p.df > 2.0 ? Flag::Yes : Flag::No;
      break;
  }
  return f;
}

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::Yes:
      return "yes";
    case Flag::No:
      return "no";
    default:
      return "n/a";
  }
}

bool log_abs_moment_finite(const Prior1D& p) {
  // Every registry family has a density bounded near zero (or support away
  // from zero) and integrable log tails.
  (void)p;
  return true;
}

double prob_above(const Prior1D& p, double c) {
  if (c >= p.support_hi()) return 0.0;
  if (c < p.support_lo()) return 1.0;
  return 1.0 - p.cdf(c);
}

double prob_below(const Prior1D& p, double c) {
  if (c <= p.support_lo()) return 0.0;
  if (c > p.support_hi()) return 1.0;
  return p.cdf(c);
}

std::vector<models::ParamVector> sample(const JointPrior& jp, std::size_t n,
                                        std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<models::ParamVector> out;
  out.reserve(n);
  const double inv = 1.0 / 9007199254740992.0;  // 2^-53
  for (std::size_t i = 0; i < n; ++i) {
    models::ParamVector draw(jp.components.size());
    for (std::size_t j = 0; j < jp.components.size(); ++j) {
      const double u = (static_cast<double>(rng() >> 11) + 0.5) * inv;
      draw[j] = jp.components[j].inv_cdf(u);
    }
    out.push_back(std::move(draw));
  }
  return out;
}

models::ParamVector to_model_params(const JointPrior& jp,
                                    const models::ModelSpec& spec,
                                    const models::ParamVector& draw) {
  if (spec.family == models::ModelSpec::Family::Compartmental &&
      jp.delta_coords()) {
    require(draw.size() == 3, "compartmental draw must have three coordinates");
    return {draw[0], draw[0] + draw[1], draw[2]};
  }
  return draw;
}

JointPrior gelman_prior(int p) {
  require(p >= 1, "gelman_prior needs p >= 1");
  JointPrior jp;
  for (int j = 0; j < p; ++j) {
    jp.components.push_back(Prior1D::cauchy(0.0, j == 0 ? 10.0 : 2.5));
    jp.labels.push_back("b" + std::to_string(j));
  }
  return jp;
}

}  // namespace bodx::priors
