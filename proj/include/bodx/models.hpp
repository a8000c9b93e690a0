#ifndef BODX_MODELS_HPP
#define BODX_MODELS_HPP

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "bodx/linalg.hpp"

// Model families and their Fisher information matrices. All weight and
// information computations have a log-domain form alongside the direct one:
// the direct form is allowed to underflow (that is what the conditioning
// verdict in linalg catches), the log form is exact and feeds the analytic
// bound path.
namespace bodx::models {

enum class Link { Logit, Probit, Log };
enum class RegionKind { Cube, TimeAxis };

// Design region: the centered unit cube, or an initial segment [0, upper] of
// the time axis.
struct Region {
  RegionKind kind = RegionKind::Cube;
  int q = 1;
  double time_upper = 24.0;

  double lo(int) const { return kind == RegionKind::Cube ? -1.0 : 0.0; }
  double hi(int) const { return kind == RegionKind::Cube ? 1.0 : time_upper; }
};

// Exact n-point design, points stored row-major.
class Design {
 public:
  Design() = default;
  Design(Region region, int n)
      : region_(region), n_(n), x_(static_cast<std::size_t>(n) * region.q, 0.0) {}

  const Region& region() const { return region_; }
  int n() const { return n_; }
  int q() const { return region_.q; }
  double at(int run, int j) const { return x_[static_cast<std::size_t>(run) * q() + j]; }
  void set(int run, int j, double v) { x_[static_cast<std::size_t>(run) * q() + j] = v; }
  std::span<const double> point(int run) const {
    return {x_.data() + static_cast<std::size_t>(run) * q(), static_cast<std::size_t>(q())};
  }

 private:
  Region region_;
  int n_ = 0;
  std::vector<double> x_;
};

// Parameter vectors are plain ordered doubles; the order is fixed by the
// family (see ModelSpec::param_dim) and checked by validate_params.
using ParamVector = std::vector<double>;

// Monomial regressor: product over factors of x_j^exponents[j].
struct RegressorTerm {
  std::vector<int> exponents;
  bool constant() const;
  std::string name() const;
};

// Comma-separated monomials, e.g. "1, x1, x2, x1*x2, x2^2" with q factors.
std::vector<RegressorTerm> parse_terms(const std::string& text, int q);

struct ModelSpec {
  enum class Family {
    ExponentialBeta,    // E(y) = exp(-beta x), rate parameterization
    ExponentialTheta,   // E(y) = exp(-x/theta), mean-lifetime parameterization
    Compartmental,      // E(y) = theta3 (exp(-theta1 x) - exp(-theta2 x))
    Glm,                // h(E y) = f(x)' beta with monomial regressors
    LogisticMuBeta,     // logit(E y) = beta1 (x - mu)
  };

  Family family = Family::Glm;
  Link link = Link::Logit;           // Glm only
  int q = 1;                         // number of design factors
  std::vector<RegressorTerm> terms;  // Glm only

  static ModelSpec exponential_beta();
  static ModelSpec exponential_theta();
  static ModelSpec compartmental();
  static ModelSpec glm(Link link, int q, std::vector<RegressorTerm> terms);
  static ModelSpec logistic_mu_beta();

  int param_dim() const;
  RegionKind natural_region() const;
  bool is_glm_like() const {
    return family == Family::Glm || family == Family::LogisticMuBeta;
  }
  Link effective_link() const {
    return family == Family::LogisticMuBeta ? Link::Logit : link;
  }
};

void validate_params(const ModelSpec& spec, const ParamVector& theta);

// Regressor vector f(x). Glm evaluates its monomials; the location-slope
// logistic family reports its base (1, x).
std::vector<double> regress(const ModelSpec& spec, std::span<const double> x);

// GLM unit information weight w(eta) and its exact log. The direct weight is
// clamped to a tiny positive floor once the exact value underflows;
// glm_weight_saturated reports when that guard (or the log-link cap at
// |eta| = 700) is active.
double glm_weight(Link link, double eta);
double glm_log_weight(Link link, double eta);
bool glm_weight_saturated(Link link, double eta);

// Linear predictor eta(x; theta) for the GLM-like families.
double linear_predictor(const ModelSpec& spec, const ParamVector& theta,
                        std::span<const double> x);

// Fisher information matrix M(xi; theta).
linalg::SymMatrix info_matrix(const ModelSpec& spec, const Design& xi,
                              const ParamVector& theta);

// True when any design point's unit weight hit the underflow guard (or the
// log-link cap) at theta, so determinants of info_matrix there reflect the
// floored weights rather than the exact values and must not be trusted.
// Always false for the non-GLM families, whose information is exact.
bool info_saturated(const ModelSpec& spec, const Design& xi,
                    const ParamVector& theta);

// Base linear-model matrix F'F (GLM-like: the regressors; exponential: f = x).
linalg::SymMatrix model_matrix(const ModelSpec& spec, const Design& xi);

// Compartmental base matrix Mtilde(delta, 1): the information with the
// exp(-2 theta1 x) point factors removed and theta3 = 1. Rank-1 per point.
linalg::SymMatrix compartmental_mtilde(double delta, const Design& xi);

// log |Mtilde(delta, 1)| via the Cauchy-Binet sum of squared 3x3 minors in
// extended precision: immune to the cancellation that makes the assembled
// matrix numerically rank-deficient for small delta. -inf when fewer than
// three distinct positive times.
double compartmental_mtilde_logdet(double delta, const Design& xi);

// Largest time, and smallest strictly positive time (-1 if none).
double x_max(const Design& xi);
double x_min_positive(const Design& xi);

// Design CSV: header run,x1,...,xq; coordinates at six decimals. Reading
// clips rounding-level overshoots (<= 1e-6) and rejects anything further
// outside the region.
void write_design_csv(std::ostream& out, const Design& d);
Design read_design_csv(std::istream& in, const Region& region);

}  // namespace bodx::models

#endif
