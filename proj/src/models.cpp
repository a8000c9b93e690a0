#include "bodx/models.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "bodx/common.hpp"
#include "bodx/normal.hpp"

namespace bodx::models {

namespace {

constexpr double kLogLinkCap = 700.0;  // exp stays finite, matrices stay finite
constexpr double kWeightFloor = 1e-300;

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double probit_log_weight(double eta) {
  const double t = std::abs(eta);
  // log w = 2 log phi(eta) - log Phi(eta) - log Phi(-eta)
  const double log_phi2 = -t * t - std::log(2.0 * kPi);
  const double lo = log_norm_cdf(-t);
  double hi;  // log Phi(t) = log(1 - Phi(-t))
  if (lo < -40.0) {
    hi = 0.0;  // Phi(-t) below 4e-18: log1p indistinguishable from 0
  } else {
    hi = std::log1p(-std::exp(lo));
  }
  return log_phi2 - lo - hi;
}

void add_outer(linalg::SymMatrix& m, std::span<const double> f, double w) {
  const int p = m.dim();
  for (int i = 0; i < p; ++i)
    for (int j = 0; j <= i; ++j) m.add(i, j, w * f[i] * f[j]);
}

}  // namespace

bool RegressorTerm::constant() const {
  return std::all_of(exponents.begin(), exponents.end(),
                     [](int e) { return e == 0; });
}

std::string RegressorTerm::name() const {
  if (constant()) return "1";
  std::string s;
  for (std::size_t j = 0; j < exponents.size(); ++j) {
    if (exponents[j] == 0) continue;
    if (!s.empty()) s += "*";
    s += "x" + std::to_string(j + 1);
    if (exponents[j] > 1) s += "^" + std::to_string(exponents[j]);
  }
  return s;
}

std::vector<RegressorTerm> parse_terms(const std::string& text, int q) {
  require(q >= 1, "parse_terms: need at least one factor");
  std::vector<RegressorTerm> terms;
  std::string token;
  std::istringstream in(text);
  while (std::getline(in, token, ',')) {
    token = trim(token);
    if (token.empty()) throw std::invalid_argument("empty regressor term");
    RegressorTerm term;
    term.exponents.assign(q, 0);
    if (token != "1") {
      std::istringstream factors(token);
      std::string factor;
      while (std::getline(factors, factor, '*')) {
        factor = trim(factor);
        int power = 1;
        const auto caret = factor.find('^');
        if (caret != std::string::npos) {
          power = std::stoi(factor.substr(caret + 1));
          factor = trim(factor.substr(0, caret));
        }
        if (factor.size() < 2 || factor[0] != 'x' || power < 1)
          throw std::invalid_argument("bad regressor factor: " + factor);
        const int idx = std::stoi(factor.substr(1));
        if (idx < 1 || idx > q)
          throw std::invalid_argument("regressor factor out of range: " + factor);
        term.exponents[idx - 1] += power;
      }
    }
    terms.push_back(std::move(term));
  }
  if (terms.empty()) throw std::invalid_argument("no regressor terms");
  return terms;
}

ModelSpec ModelSpec::exponential_beta() {
  ModelSpec s;
  s.family = Family::ExponentialBeta;
  s.q = 1;
  return s;
}

ModelSpec ModelSpec::exponential_theta() {
  ModelSpec s;
  s.family = Family::ExponentialTheta;
  s.q = 1;
  return s;
}

ModelSpec ModelSpec::compartmental() {
  ModelSpec s;
  s.family = Family::Compartmental;
  s.q = 1;
  return s;
}

ModelSpec ModelSpec::glm(Link link, int q, std::vector<RegressorTerm> terms) {
  require(!terms.empty(), "glm: need regressor terms");
  for (const auto& t : terms)
    require(static_cast<int>(t.exponents.size()) == q,
            "glm: term arity does not match factor count");
  ModelSpec s;
  s.family = Family::Glm;
  s.link = link;
  s.q = q;
  s.terms = std::move(terms);
  return s;
}

ModelSpec ModelSpec::logistic_mu_beta() {
  ModelSpec s;
  s.family = Family::LogisticMuBeta;
  s.q = 1;
  return s;
}

int ModelSpec::param_dim() const {
  switch (family) {
    case Family::ExponentialBeta:
    case Family::ExponentialTheta:
      return 1;
    case Family::Compartmental:
      return 3;
    case Family::Glm:
      return static_cast<int>(terms.size());
    case Family::LogisticMuBeta:
      return 2;
  }
  return 0;
}

RegionKind ModelSpec::natural_region() const {
  switch (family) {
    case Family::Glm:
    case Family::LogisticMuBeta:
      return RegionKind::Cube;
    default:
      return RegionKind::TimeAxis;
  }
}

void validate_params(const ModelSpec& spec, const ParamVector& theta) {
  require(static_cast<int>(theta.size()) == spec.param_dim(),
          "parameter dimension does not match the model family");
  for (double v : theta)
    require(std::isfinite(v), "parameter vector has non-finite entries");
  switch (spec.family) {
    case ModelSpec::Family::ExponentialBeta:
      require(theta[0] > 0.0, "exponential rate must be positive");
      break;
    case ModelSpec::Family::ExponentialTheta:
      require(theta[0] > 0.0, "exponential mean lifetime must be positive");
      break;
    case ModelSpec::Family::Compartmental:
      require(theta[0] > 0.0 && theta[1] > theta[0] && theta[2] > 0.0,
              "compartmental parameters need theta2 > theta1 > 0, theta3 > 0");
      break;
    default:
      break;
  }
}

std::vector<double> regress(const ModelSpec& spec, std::span<const double> x) {
  if (spec.family == ModelSpec::Family::LogisticMuBeta) {
    require(x.size() == 1, "location-slope logistic is one-dimensional");
    return {1.0, x[0]};
  }
  require(spec.family == ModelSpec::Family::Glm,
          "regress: model has no fixed regressors");
  require(static_cast<int>(x.size()) == spec.q, "point arity mismatch");
  std::vector<double> f;
  f.reserve(spec.terms.size());
  for (const auto& term : spec.terms) {
    double v = 1.0;
    for (int j = 0; j < spec.q; ++j)
      for (int e = 0; e < term.exponents[j]; ++e) v *= x[j];
    f.push_back(v);
  }
  return f;
}

double glm_log_weight(Link link, double eta) {
  const double t = std::abs(eta);
  switch (link) {
    case Link::Logit:
      // w = exp(-|eta|) expit(|eta|)^2
      return -t - 2.0 * log1p_exp(-t);
    case Link::Probit:
      return probit_log_weight(eta);
    case Link::Log:
      return eta;
  }
  return kNegInf;
}

double glm_weight(Link link, double eta) {
  if (link == Link::Log)
    return std::exp(std::clamp(eta, -kLogLinkCap, kLogLinkCap));
  const double w = std::exp(glm_log_weight(link, eta));
  return w > 0.0 ? w : kWeightFloor;
}

bool glm_weight_saturated(Link link, double eta) {
  if (link == Link::Log) return std::abs(eta) > kLogLinkCap;
  return !(std::exp(glm_log_weight(link, eta)) > 0.0);
}

double linear_predictor(const ModelSpec& spec, const ParamVector& theta,
                        std::span<const double> x) {
  validate_params(spec, theta);
  if (spec.family == ModelSpec::Family::LogisticMuBeta)
    return theta[1] * (x[0] - theta[0]);
  require(spec.family == ModelSpec::Family::Glm,
          "linear_predictor: not a GLM-like model");
  const auto f = regress(spec, x);
  double eta = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) eta += theta[i] * f[i];
  return eta;
}

linalg::SymMatrix info_matrix(const ModelSpec& spec, const Design& xi,
                              const ParamVector& theta) {
  validate_params(spec, theta);
  linalg::SymMatrix m(spec.param_dim());
  switch (spec.family) {
    case ModelSpec::Family::ExponentialBeta:
    case ModelSpec::Family::ExponentialTheta: {
      const bool rate = spec.family == ModelSpec::Family::ExponentialBeta;
      const double beta = rate ? theta[0] : 1.0 / theta[0];
      const double log_jac = rate ? 0.0 : -4.0 * std::log(theta[0]);
      double s = 0.0;
      for (int i = 0; i < xi.n(); ++i) {
        const double x = xi.at(i, 0);
        if (x <= 0.0) continue;  // zero-information time
        // exp(2 log x - 2 beta x - [4 log theta]) evaluated in log form so a
        // huge rate underflows to 0 instead of producing inf/inf.
        s += std::exp(2.0 * std::log(x) - 2.0 * beta * x + log_jac);
      }
      m.set(0, 0, s);
      break;
    }
    case ModelSpec::Family::Compartmental: {
      const double th1 = theta[0], delta = theta[1] - theta[0], th3 = theta[2];
      for (int i = 0; i < xi.n(); ++i) {
        const double x = xi.at(i, 0);
        const double s = std::exp(-2.0 * th1 * x);
        const double ed = std::exp(-delta * x);
        const double g = -std::expm1(-delta * x);  // 1 - exp(-delta x)
        m.add(0, 0, s * x * x * th3 * th3);
        m.add(1, 0, -s * x * x * th3 * th3 * ed);
        m.add(1, 1, s * x * x * th3 * th3 * ed * ed);
        m.add(2, 0, -s * x * th3 * g);
        m.add(2, 1, s * x * th3 * ed * g);
        m.add(2, 2, s * g * g);
      }
      break;
    }
    case ModelSpec::Family::Glm: {
      for (int i = 0; i < xi.n(); ++i) {
        const auto f = regress(spec, xi.point(i));
        double eta = 0.0;
        for (std::size_t k = 0; k < f.size(); ++k) eta += theta[k] * f[k];
        add_outer(m, f, glm_weight(spec.link, eta));
      }
      break;
    }
    case ModelSpec::Family::LogisticMuBeta: {
      const double mu = theta[0], b1 = theta[1];
      for (int i = 0; i < xi.n(); ++i) {
        const double x = xi.at(i, 0);
        const double grad[2] = {-b1, x - mu};  // d eta / d (mu, beta1)
        add_outer(m, grad, glm_weight(Link::Logit, b1 * (x - mu)));
      }
      break;
    }
  }
  return m;
}

bool info_saturated(const ModelSpec& spec, const Design& xi,
                    const ParamVector& theta) {
  validate_params(spec, theta);
  if (spec.family != ModelSpec::Family::Glm &&
      spec.family != ModelSpec::Family::LogisticMuBeta)
    return false;
  const Link link = spec.effective_link();
  for (int i = 0; i < xi.n(); ++i) {
    const double eta = linear_predictor(spec, theta, xi.point(i));
    if (glm_weight_saturated(link, eta)) return true;
  }
  return false;
}

linalg::SymMatrix model_matrix(const ModelSpec& spec, const Design& xi) {
  switch (spec.family) {
    case ModelSpec::Family::Glm:
    case ModelSpec::Family::LogisticMuBeta: {
      linalg::SymMatrix m(spec.family == ModelSpec::Family::Glm
                              ? static_cast<int>(spec.terms.size())
                              : 2);
      for (int i = 0; i < xi.n(); ++i)
        add_outer(m, regress(spec, xi.point(i)), 1.0);
      return m;
    }
    case ModelSpec::Family::ExponentialBeta:
    case ModelSpec::Family::ExponentialTheta: {
      linalg::SymMatrix m(1);
      double s = 0.0;
      for (int i = 0; i < xi.n(); ++i) s += xi.at(i, 0) * xi.at(i, 0);
      m.set(0, 0, s);
      return m;
    }
    case ModelSpec::Family::Compartmental:
      throw std::invalid_argument(
          "model_matrix: compartmental uses its own base matrix");
  }
  throw std::invalid_argument("model_matrix: unknown family");
}

linalg::SymMatrix compartmental_mtilde(double delta, const Design& xi) {
  require(delta > 0.0, "compartmental separation must be positive");
  linalg::SymMatrix m(3);
  for (int i = 0; i < xi.n(); ++i) {
    const double x = xi.at(i, 0);
    const double u[3] = {x, -x * std::exp(-delta * x), std::expm1(-delta * x)};
    add_outer(m, u, 1.0);
  }
  return m;
}

double compartmental_mtilde_logdet(double delta, const Design& xi) {
  require(delta > 0.0, "compartmental separation must be positive");
  const int n = xi.n();
  std::vector<std::array<long double, 3>> u;
  u.reserve(n);
  for (int i = 0; i < n; ++i) {
    const long double x = xi.at(i, 0);
    u.push_back({x, -x * std::exp(-delta * static_cast<double>(x)),
                 std::expm1(-delta * static_cast<double>(x))});
  }
  // |sum u u^T| = sum over triples of squared 3x3 minors: every summand is
  // non-negative, so no cancellation across points survives.
  long double s = 0.0L;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      for (int k = j + 1; k < n; ++k) {
        const auto &a = u[i], &b = u[j], &c = u[k];
        const long double det = a[0] * (b[1] * c[2] - b[2] * c[1]) -
                                a[1] * (b[0] * c[2] - b[2] * c[0]) +
                                a[2] * (b[0] * c[1] - b[1] * c[0]);
        s += det * det;
      }
  if (s <= 0.0L) return kNegInf;
  return static_cast<double>(std::log(s));
}

double x_max(const Design& xi) {
  double m = 0.0;
  for (int i = 0; i < xi.n(); ++i) m = std::max(m, xi.at(i, 0));
  return m;
}

double x_min_positive(const Design& xi) {
  double m = kInf;
  for (int i = 0; i < xi.n(); ++i)
    if (xi.at(i, 0) > 0.0) m = std::min(m, xi.at(i, 0));
  return std::isfinite(m) ? m : -1.0;
}

void write_design_csv(std::ostream& out, const Design& d) {
  out << "run";
  for (int j = 1; j <= d.q(); ++j) out << ",x" << j;
  out << "\n";
  char buf[64];
  for (int i = 0; i < d.n(); ++i) {
    out << (i + 1);
    for (int j = 0; j < d.q(); ++j) {
      std::snprintf(buf, sizeof buf, ",%.6f", d.at(i, j));
      out << buf;
    }
    out << "\n";
  }
}

Design read_design_csv(std::istream& in, const Region& region) {
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("empty design CSV");
  if (line.rfind("run", 0) != 0)
    throw std::invalid_argument("design CSV must start with a run,x1,... header");
  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    line = trim(line);
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    bool first = true;
    while (std::getline(ls, cell, ',')) {
      if (first) {
        first = false;
        continue;  // run index column
      }
      row.push_back(std::stod(cell));
    }
    if (static_cast<int>(row.size()) != region.q)
      throw std::invalid_argument("design CSV row arity mismatch");
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::invalid_argument("design CSV has no runs");
  Design d(region, static_cast<int>(rows.size()));
  const double slack = 1e-6;
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (int j = 0; j < region.q; ++j) {
      double v = rows[i][j];
      if (v < region.lo(j) - slack || v > region.hi(j) + slack)
        throw std::invalid_argument("design point outside the region");
      v = std::clamp(v, region.lo(j), region.hi(j));
      d.set(static_cast<int>(i), j, v);
    }
  return d;
}

}  // namespace bodx::models
