#include "bodx/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bodx/common.hpp"

namespace bodx::config {

namespace {

[[noreturn]] void fail(int line, const std::string& msg) {
  std::ostringstream os;
  os << "config";
  if (line > 0) os << " line " << line;
  os << ": " << msg;
  throw std::invalid_argument(os.str());
}

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

struct Entry {
  std::string value;
  int line = 0;
};

struct Block {
  std::string kind;
  std::string label;
  int line = 0;
  std::vector<std::pair<std::string, Entry>> kv;

  const Entry* find(const std::string& key) const {
    for (const auto& [k, e] : kv)
      if (k == key) return &e;
    return nullptr;
  }
};

// Pulls typed values out of one block and insists every key was consumed.
class KeyReader {
 public:
  explicit KeyReader(const Block& b) : b_(b) {}

  std::optional<std::string> get(const std::string& key) {
    const Entry* e = b_.find(key);
    if (!e) return std::nullopt;
    used_.insert(key);
    return e->value;
  }

  std::string need(const std::string& key) {
    auto v = get(key);
    if (!v) fail(b_.line, "[" + b_.kind + "] needs the key '" + key + "'");
    return *v;
  }

  void finish() {
    for (const auto& [k, e] : b_.kv)
      if (!used_.count(k))
        fail(e.line, "unknown key '" + k + "' in [" + b_.kind + "]");
  }

  int line_of(const std::string& key) const {
    const Entry* e = b_.find(key);
    return e ? e->line : b_.line;
  }

 private:
  const Block& b_;
  std::set<std::string> used_;
};

double to_double(const std::string& key, const std::string& v, int line) {
  const std::string t = trim(v);
  double out = 0.0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    fail(line, "key '" + key + "': '" + t + "' is not a number");
  return out;
}

long long to_ll(const std::string& key, const std::string& v, int line) {
  const std::string t = trim(v);
  long long out = 0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    fail(line, "key '" + key + "': '" + t + "' is not an integer");
  return out;
}

int to_int(const std::string& key, const std::string& v, int line) {
  const long long out = to_ll(key, v, line);
  if (out < -(1LL << 31) || out > (1LL << 31))
    fail(line, "key '" + key + "': value out of range");
  return static_cast<int>(out);
}

std::uint64_t to_u64(const std::string& key, const std::string& v, int line) {
  const std::string t = trim(v);
  std::uint64_t out = 0;
  const auto* end = t.data() + t.size();
  const auto res = std::from_chars(t.data(), end, out);
  if (res.ec != std::errc{} || res.ptr != end)
    fail(line, "key '" + key + "': '" + t + "' is not a non-negative integer");
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& v,
                            int line) {
  std::vector<double> out;
  std::string item;
  std::istringstream in(v);
  while (std::getline(in, item, ',')) {
    const std::string t = trim(item);
    if (t.empty()) fail(line, "key '" + key + "': empty list entry");
    out.push_back(to_double(key, t, line));
  }
  if (out.empty()) fail(line, "key '" + key + "': empty list");
  return out;
}

std::vector<Block> tokenize(std::istream& in) {
  std::vector<Block> blocks;
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    if (const auto hash = raw.find('#'); hash != std::string::npos)
      raw.erase(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      const std::string inner = trim(line.substr(1, line.size() - 2));
      if (inner.empty()) fail(line_no, "empty section header");
      Block b;
      b.line = line_no;
      const auto sp = inner.find_first_of(" \t");
      if (sp == std::string::npos) {
        b.kind = inner;
      } else {
        b.kind = inner.substr(0, sp);
        b.label = trim(inner.substr(sp));
      }
      blocks.push_back(std::move(b));
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(line_no, "expected 'key = value', got '" + line + "'");
    if (blocks.empty()) fail(line_no, "key-value pair before any [section]");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (value.empty()) fail(line_no, "key '" + key + "' has no value");
    if (blocks.back().find(key))
      fail(line_no, "duplicate key '" + key + "' in [" + blocks.back().kind +
                        "]");
    blocks.back().kv.emplace_back(key, Entry{value, line_no});
  }
  return blocks;
}

// --- block assembly ---------------------------------------------------------

// Exactly one of sd | var, returned as a standard deviation.
double read_spread(KeyReader& r, int block_line) {
  const auto sd = r.get("sd");
  const auto var = r.get("var");
  if (sd && var) fail(block_line, "give either 'sd' or 'var', not both");
  if (sd) {
    const double v = to_double("sd", *sd, r.line_of("sd"));
    if (!(v > 0.0)) fail(r.line_of("sd"), "'sd' must be positive");
    return v;
  }
  if (var) {
    const double v = to_double("var", *var, r.line_of("var"));
    if (!(v > 0.0)) fail(r.line_of("var"), "'var' must be positive");
    return std::sqrt(v);
  }
  fail(block_line, "prior needs 'sd' or 'var'");
}

priors::Prior1D read_prior(const Block& b) {
  KeyReader r(b);
  const std::string family = r.need("family");
  priors::Prior1D p;
  if (family == "normal") {
    const double loc = to_double("loc", r.need("loc"), r.line_of("loc"));
    p = priors::Prior1D::normal(loc, read_spread(r, b.line));
  } else if (family == "lognormal") {
    const double loc = to_double("loc", r.need("loc"), r.line_of("loc"));
    p = priors::Prior1D::lognormal(loc, read_spread(r, b.line));
  } else if (family == "uniform") {
    const double a = to_double("a", r.need("a"), r.line_of("a"));
    const double bb = to_double("b", r.need("b"), r.line_of("b"));
    if (!(bb > a)) fail(b.line, "uniform needs b > a");
    p = priors::Prior1D::uniform(a, bb);
  } else if (family == "cauchy") {
    const double loc = to_double("loc", r.need("loc"), r.line_of("loc"));
    const double scale =
        to_double("scale", r.need("scale"), r.line_of("scale"));
    if (!(scale > 0.0)) fail(r.line_of("scale"), "'scale' must be positive");
    p = priors::Prior1D::cauchy(loc, scale);
  } else if (family == "half_cauchy") {
    const double scale =
        to_double("scale", r.need("scale"), r.line_of("scale"));
    if (!(scale > 0.0)) fail(r.line_of("scale"), "'scale' must be positive");
    int sign = +1;
    if (const auto s = r.get("sign")) {
      sign = to_int("sign", *s, r.line_of("sign"));
      if (sign != 1 && sign != -1)
        fail(r.line_of("sign"), "'sign' must be 1 or -1");
    }
    p = priors::Prior1D::half_cauchy(scale, sign);
  } else if (family == "student_t") {
    const double df = to_double("df", r.need("df"), r.line_of("df"));
    if (!(df > 0.0)) fail(r.line_of("df"), "'df' must be positive");
    const double loc = to_double("loc", r.need("loc"), r.line_of("loc"));
    const double scale =
        to_double("scale", r.need("scale"), r.line_of("scale"));
    if (!(scale > 0.0)) fail(r.line_of("scale"), "'scale' must be positive");
    p = priors::Prior1D::student_t(df, loc, scale);
  } else {
    fail(b.line, "unknown prior family '" + family + "'");
  }
  r.finish();
  return p;
}

models::ModelSpec read_model(const Block& b, double& time_upper) {
  KeyReader r(b);
  const std::string family = r.need("family");
  models::ModelSpec spec;
  if (family == "glm") {
    const std::string link_name = r.need("link");
    models::Link link;
    if (link_name == "logit")
      link = models::Link::Logit;
    else if (link_name == "probit")
      link = models::Link::Probit;
    else if (link_name == "log")
      link = models::Link::Log;
    else
      fail(r.line_of("link"), "unknown link '" + link_name + "'");
    int q = 1;
    if (const auto f = r.get("factors")) {
      q = to_int("factors", *f, r.line_of("factors"));
      if (q < 1) fail(r.line_of("factors"), "'factors' must be >= 1");
    }
    const std::string terms = r.need("terms");
    try {
      spec = models::ModelSpec::glm(link, q, models::parse_terms(terms, q));
    } catch (const std::invalid_argument& e) {
      fail(r.line_of("terms"), e.what());
    }
  } else if (family == "exponential_beta") {
    spec = models::ModelSpec::exponential_beta();
  } else if (family == "exponential_theta") {
    spec = models::ModelSpec::exponential_theta();
  } else if (family == "compartmental") {
    spec = models::ModelSpec::compartmental();
  } else if (family == "logistic_mu_beta") {
    spec = models::ModelSpec::logistic_mu_beta();
  } else {
    fail(b.line, "unknown model family '" + family + "'");
  }

  const bool time_region =
      spec.natural_region() == models::RegionKind::TimeAxis;
  if (const auto reg = r.get("region")) {
    const std::string want = time_region ? "time" : "cube";
    if (*reg != "cube" && *reg != "time")
      fail(r.line_of("region"), "region must be 'cube' or 'time'");
    if (*reg != want)
      fail(r.line_of("region"),
           "family '" + family + "' designs on the " + want + " region");
  }
  if (const auto tu = r.get("time_upper")) {
    if (!time_region)
      fail(r.line_of("time_upper"),
           "'time_upper' applies only to time-region families");
    time_upper = to_double("time_upper", *tu, r.line_of("time_upper"));
    if (!(time_upper > 0.0))
      fail(r.line_of("time_upper"), "'time_upper' must be positive");
  }
  r.finish();
  return spec;
}

void read_quadrature(const Block& b, QuadratureConfig& qc) {
  KeyReader r(b);
  const std::string method = r.need("method");
  if (method == "radial_spherical") {
    qc.method = QuadMethod::RadialSpherical;
    qc.n_radial = to_int("n_radial", r.need("n_radial"), r.line_of("n_radial"));
    qc.n_rotations =
        to_int("n_rotations", r.need("n_rotations"), r.line_of("n_rotations"));
    if (qc.n_radial < 1 || qc.n_rotations < 1)
      fail(b.line, "radial_spherical needs n_radial >= 1 and n_rotations >= 1");
  } else if (method == "monte_carlo" || method == "latin_hypercube") {
    qc.method = method == "monte_carlo" ? QuadMethod::MonteCarlo
                                        : QuadMethod::LatinHypercube;
    qc.n = to_int("n", r.need("n"), r.line_of("n"));
    if (qc.n < 1) fail(r.line_of("n"), "'n' must be >= 1");
  } else {
    fail(r.line_of("method"), "unknown quadrature method '" + method + "'");
  }
  if (const auto s = r.get("seed")) {
    qc.has_seed = true;
    qc.seed = to_u64("seed", *s, r.line_of("seed"));
  }
  r.finish();
}

void read_search(const Block& b, optimizer::SearchSettings& s) {
  KeyReader r(b);
  if (const auto v = r.get("starts"))
    s.n_starts = to_int("starts", *v, r.line_of("starts"));
  if (const auto v = r.get("max_passes"))
    s.max_passes = to_int("max_passes", *v, r.line_of("max_passes"));
  if (const auto v = r.get("grid_points"))
    s.grid_points = to_int("grid_points", *v, r.line_of("grid_points"));
  if (const auto v = r.get("refine_iters"))
    s.refine_iters = to_int("refine_iters", *v, r.line_of("refine_iters"));
  if (const auto v = r.get("tol"))
    s.tol = to_double("tol", *v, r.line_of("tol"));
  if (s.n_starts < 1 || s.max_passes < 1 || s.grid_points < 2 ||
      s.refine_iters < 1 || !(s.tol > 0.0))
    fail(b.line, "search settings out of range");
  r.finish();
}

void read_run(const Block& b, RunConfig& cfg) {
  KeyReader r(b);
  if (const auto v = r.get("seed"))
    cfg.seed = to_u64("seed", *v, r.line_of("seed"));
  if (const auto v = r.get("n")) {
    cfg.n_runs = to_int("n", *v, r.line_of("n"));
    if (cfg.n_runs < 1) fail(r.line_of("n"), "'n' must be >= 1");
  }
  if (const auto v = r.get("objective")) {
    try {
      cfg.objective = parse_objective(*v);
    } catch (const std::invalid_argument& e) {
      fail(r.line_of("objective"), e.what());
    }
  }
  const auto theta = r.get("theta");
  if (cfg.objective == Objective::Local) {
    if (!theta)
      fail(b.line, "the local objective needs a 'theta' vector");
    cfg.theta = to_list("theta", *theta, r.line_of("theta"));
    if (static_cast<int>(cfg.theta.size()) != cfg.model.param_dim())
      fail(r.line_of("theta"),
           "'theta' must list one value per model parameter");
    try {
      models::validate_params(cfg.model, cfg.theta);
    } catch (const std::invalid_argument& e) {
      fail(r.line_of("theta"), e.what());
    }
  } else if (theta) {
    fail(r.line_of("theta"), "'theta' applies only to the local objective");
  }
  if (const auto v = r.get("max_uninformative_mass")) {
    cfg.max_uninformative_mass =
        to_double("max_uninformative_mass", *v,
                  r.line_of("max_uninformative_mass"));
    if (!(cfg.max_uninformative_mass >= 0.0 &&
          cfg.max_uninformative_mass <= 1.0))
      fail(r.line_of("max_uninformative_mass"), "must lie in [0, 1]");
  }
  r.finish();
}

void read_output(const Block& b, RunConfig& cfg) {
  KeyReader r(b);
  if (const auto v = r.get("dir")) cfg.out_dir = *v;
  if (const auto v = r.get("design")) cfg.design_file = *v;
  if (cfg.out_dir.empty() || cfg.design_file.empty())
    fail(b.line, "output paths must be non-empty");
  r.finish();
}

}  // namespace

const char* quad_method_name(QuadMethod m) {
  switch (m) {
    case QuadMethod::RadialSpherical:
      return "radial_spherical";
    case QuadMethod::MonteCarlo:
      return "monte_carlo";
    case QuadMethod::LatinHypercube:
      return "latin_hypercube";
  }
  return "?";
}

const char* objective_name(Objective o) {
  switch (o) {
    case Objective::BayesLower:
      return "bayes-lower";
    case Objective::BayesUpper:
      return "bayes-upper";
    case Objective::Local:
      return "local";
    case Objective::Ew:
      return "ew";
    case Objective::Psi:
      return "psi";
  }
  return "?";
}

Objective parse_objective(const std::string& name) {
  if (name == "bayes-lower") return Objective::BayesLower;
  if (name == "bayes-upper") return Objective::BayesUpper;
  if (name == "local") return Objective::Local;
  if (name == "ew") return Objective::Ew;
  if (name == "psi") return Objective::Psi;
  throw std::invalid_argument(
      "unknown objective '" + name +
      "' (expected bayes-lower, bayes-upper, local, ew, or psi)");
}

RunConfig parse_config(std::istream& in) {
  const auto blocks = tokenize(in);

  const Block* model_block = nullptr;
  const Block* quad_block = nullptr;
  const Block* search_block = nullptr;
  const Block* run_block = nullptr;
  const Block* output_block = nullptr;
  std::vector<const Block*> prior_blocks;

  const auto claim = [](const Block*& slot, const Block& b) {
    if (slot) fail(b.line, "duplicate [" + b.kind + "] section");
    slot = &b;
  };
  for (const auto& b : blocks) {
    if (b.kind == "prior") {
      prior_blocks.push_back(&b);
      continue;
    }
    if (!b.label.empty())
      fail(b.line, "[" + b.kind + "] does not take a label");
    if (b.kind == "model")
      claim(model_block, b);
    else if (b.kind == "quadrature")
      claim(quad_block, b);
    else if (b.kind == "search")
      claim(search_block, b);
    else if (b.kind == "run")
      claim(run_block, b);
    else if (b.kind == "output")
      claim(output_block, b);
    else
      fail(b.line, "unknown section [" + b.kind + "]");
  }
  if (!model_block) fail(0, "missing [model] section");
  if (prior_blocks.empty()) fail(0, "missing [prior] sections");

  RunConfig cfg;
  cfg.model = read_model(*model_block, cfg.time_upper);

  for (std::size_t i = 0; i < prior_blocks.size(); ++i) {
    const Block& b = *prior_blocks[i];
    const std::string label =
        b.label.empty() ? "beta" + std::to_string(i) : b.label;
    for (const auto& seen : cfg.prior.labels)
      if (seen == label)
        fail(b.line, "duplicate prior label '" + label + "'");
    cfg.prior.labels.push_back(label);
    cfg.prior.components.push_back(read_prior(b));
  }
  if (cfg.prior.dim() != cfg.model.param_dim())
    fail(prior_blocks.back()->line,
         "model has " + std::to_string(cfg.model.param_dim()) +
             " parameters but " + std::to_string(cfg.prior.dim()) +
             " priors are given");

  if (quad_block) read_quadrature(*quad_block, cfg.quadrature);
  if (search_block) read_search(*search_block, cfg.search);
  if (run_block) read_run(*run_block, cfg);
  if (output_block) read_output(*output_block, cfg);

  // One top-level seed; every stochastic path gets a split stream.
  cfg.search.seed = derive_seed(cfg.seed, "search");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  return parse_config(in);
}

quadrature::QuadratureScheme build_quadrature(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.quadrature.has_seed
                                 ? cfg.quadrature.seed
                                 : derive_seed(cfg.seed, "quadrature");
  switch (cfg.quadrature.method) {
    case QuadMethod::MonteCarlo:
      return quadrature::monte_carlo(cfg.prior, cfg.quadrature.n, seed,
                                     &cfg.model);
    case QuadMethod::LatinHypercube:
      return quadrature::latin_hypercube(cfg.prior, cfg.quadrature.n, seed,
                                         &cfg.model);
    case QuadMethod::RadialSpherical:
      return quadrature::radial_spherical(cfg.prior, cfg.quadrature.n_radial,
                                          cfg.quadrature.n_rotations, seed,
                                          &cfg.model);
  }
  throw std::logic_error("unhandled quadrature method");
}

}  // namespace bodx::config
