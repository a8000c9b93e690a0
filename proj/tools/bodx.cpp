// bodx — Bayesian D-optimal design toolkit.
//
// Subcommands: diagnose, design, evaluate, profile, compare, quadrature.
// Exit codes: 0 success / non-singular verdict; 1 malformed config or I/O
// error; 2 singular verdict (diagnose); 3 inconclusive verdict (diagnose);
// 4 refusal to run a design-family command under a singular prior without
// --force. All randomness flows from one top-level seed through documented
// purpose strings, so identical config + seed gives byte-identical outputs.

#include <atomic>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "bodx/common.hpp"
#include "bodx/config.hpp"
#include "bodx/diagnostics.hpp"
#include "bodx/efficiency.hpp"
#include "bodx/models.hpp"
#include "bodx/objective.hpp"
#include "bodx/optimizer.hpp"
#include "bodx/parallel.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"
#include "bodx/report.hpp"

namespace {

using json = nlohmann::json;
using namespace bodx;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitSingular = 2;
constexpr int kExitInconclusive = 3;
constexpr int kExitRefused = 4;

const char* verdict_name(diagnostics::VerdictKind k) {
  switch (k) {
    case diagnostics::VerdictKind::Singular:
      return "singular";
    case diagnostics::VerdictKind::NonSingular:
      return "non-singular";
    default:
      return "inconclusive";
  }
}

// ---------------------------------------------------------------------------
// Shared option plumbing

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  bool force = false;
};

config::RunConfig load_run_config(const CommonOpts& o) {
  config::RunConfig cfg = config::load_config(o.config_path);
  if (o.seed) {
    cfg.seed = *o.seed;
    cfg.search.seed = derive_seed(cfg.seed, "search");
  }
  return cfg;
}

std::vector<double> parse_theta_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      while (used < item.size() &&
             (item[used] == ' ' || item[used] == '\t'))
        ++used;
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw std::invalid_argument("--theta: '" + item + "' is not a number");
    }
  }
  if (out.empty()) throw std::invalid_argument("--theta: empty list");
  return out;
}

// ---------------------------------------------------------------------------
// Design CSV I/O. Header row "x1,...,xq" (or "t" on the time axis); data rows
// hold q comma-separated coordinates. The reader tolerates a missing header.

void write_design_csv(const std::string& path, const models::Design& xi) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out.precision(12);
  const bool time_axis = xi.region().kind == models::RegionKind::TimeAxis;
  for (int j = 0; j < xi.q(); ++j) {
    if (j) out << ',';
    if (time_axis && xi.q() == 1)
      out << 't';
    else
      out << 'x' << (j + 1);
  }
  out << '\n';
  for (int i = 0; i < xi.n(); ++i) {
    for (int j = 0; j < xi.q(); ++j) {
      if (j) out << ',';
      out << xi.at(i, j);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

models::Design read_design_csv(const std::string& path,
                               const models::Region& region) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read design file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<double> row;
    std::istringstream cells(line);
    std::string cell;
    bool numeric = true;
    while (std::getline(cells, cell, ',')) {
      try {
        std::size_t used = 0;
        const double v = std::stod(cell, &used);
        while (used < cell.size() &&
               (cell[used] == ' ' || cell[used] == '\t'))
          ++used;
        if (used != cell.size()) throw std::invalid_argument(cell);
        row.push_back(v);
      } catch (const std::exception&) {
        numeric = false;
        break;
      }
    }
    if (!numeric) {
      if (rows.empty() && line_no == 1) continue;  // header row
      throw std::invalid_argument(path + " line " + std::to_string(line_no) +
                                  ": non-numeric design entry");
    }
    if (static_cast<int>(row.size()) != region.q)
      throw std::invalid_argument(
          path + " line " + std::to_string(line_no) + ": expected " +
          std::to_string(region.q) + " coordinates, got " +
          std::to_string(row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty())
    throw std::invalid_argument(path + ": no design rows");
  models::Design xi(region, static_cast<int>(rows.size()));
  for (int i = 0; i < xi.n(); ++i)
    for (int j = 0; j < xi.q(); ++j) xi.set(i, j, rows[i][j]);
  return xi;
}

// ---------------------------------------------------------------------------
// Run metadata: one JSON line to stdout and to <out_dir>/<name>. No
// wall-clock fields, so reruns are byte-identical.

void emit_meta(const config::RunConfig& cfg, const json& meta,
               const std::string& file_name) {
  std::cout << meta.dump() << '\n';
  std::filesystem::create_directories(cfg.out_dir);
  const std::string path =
      (std::filesystem::path(cfg.out_dir) / file_name).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << meta.dump() << '\n';
}

// Design-family commands refuse singular priors unless forced.
// Returns true when the command may proceed.
bool singular_gate(const config::RunConfig& cfg, bool force,
                   diagnostics::Verdict& verdict) {
  verdict = diagnostics::diagnose(cfg.model, cfg.prior);
  if (verdict.kind != diagnostics::VerdictKind::Singular) return true;
  if (force) return true;
  std::cerr << "bodx: the prior is singular for this model (rule "
            << verdict.rule
            << "); every design has objective -inf. Pass --force to proceed "
               "anyway.\n";
  return false;
}

void meta_add_verdict(json& meta, const diagnostics::Verdict& v, bool force) {
  meta["verdict"] = verdict_name(v.kind);
  if (!v.rule.empty()) meta["rule"] = v.rule;
  meta["force"] = force;
}

// ---------------------------------------------------------------------------
// Objective wiring shared by design and compare.

struct ObjectiveBundle {
  optimizer::DesignObjective fn;
  bool needs_quadrature = true;
};

ObjectiveBundle make_objective(const config::RunConfig& cfg,
                               config::Objective obj,
                               const quadrature::QuadratureScheme* q,
                               efficiency::LocalOptCache* cache) {
  const models::ModelSpec& spec = cfg.model;
  switch (obj) {
    case config::Objective::BayesLower:
      return {[&spec, q](const models::Design& xi) {
                return objective::phi(xi, spec, *q).lower;
              },
              true};
    case config::Objective::BayesUpper:
      return {[&spec, q](const models::Design& xi) {
                return objective::phi(xi, spec, *q).upper;
              },
              true};
    case config::Objective::Local: {
      const models::ParamVector theta = cfg.theta;
      return {[&spec, theta](const models::Design& xi) {
                return objective::local_objective(spec, xi, theta);
              },
              false};
    }
    case config::Objective::Ew:
      return {[&spec, q](const models::Design& xi) {
                return objective::ew_objective(xi, spec, *q);
              },
              true};
    case config::Objective::Psi: {
      return {[&spec, q, cache](const models::Design& xi) {
                efficiency::LocalEffSettings es;
                const auto eff = [&](const models::ParamVector& beta) {
                  const auto b =
                      efficiency::local_eff(xi, spec, beta, es, cache);
                  return std::pair<double, double>(b.lower, b.upper);
                };
                return objective::mean_local_efficiency(xi, spec, *q, eff)
                    .psi;
              },
              true};
    }
  }
  throw std::logic_error("unhandled objective");
}

// Local-efficiency brackets for every quadrature node, in node order.
// Parallel over nodes; the first error is re-thrown.
std::vector<efficiency::EfficiencyBracket> node_brackets(
    const models::Design& xi, const models::ModelSpec& spec,
    const quadrature::QuadratureScheme& q,
    const efficiency::LocalEffSettings& es, efficiency::LocalOptCache& cache) {
  const int n = static_cast<int>(q.size());
  std::vector<efficiency::EfficiencyBracket> out(
      static_cast<std::size_t>(n));
  std::atomic<long long> first_error{-1};
  par::for_index(n, [&](int l) {
    if (first_error.load(std::memory_order_relaxed) >= 0) return;
    try {
      out[static_cast<std::size_t>(l)] =
          efficiency::local_eff(xi, spec, q.nodes[l], es, &cache);
    } catch (...) {
      long long want = -1;
      first_error.compare_exchange_strong(want, l);
    }
  });
  if (const long long bad = first_error.load(); bad >= 0)
    efficiency::local_eff(xi, spec, q.nodes[static_cast<std::size_t>(bad)],
                          es, &cache);  // rethrows serially
  return out;
}

// ---------------------------------------------------------------------------
// diagnose

int cmd_diagnose(const CommonOpts& opts) {
  const config::RunConfig cfg = load_run_config(opts);
  const diagnostics::Verdict v = diagnostics::diagnose(cfg.model, cfg.prior);

  std::cout << "verdict: " << verdict_name(v.kind) << '\n';
  if (!v.rule.empty()) std::cout << "rule: " << v.rule << '\n';
  for (const auto& m : v.missing) std::cout << "unresolved: " << m << '\n';

  std::cout << std::left << std::setw(12) << "component" << std::setw(34)
            << "prior" << std::setw(10) << "E|X|" << std::setw(10) << "E[X^2]"
            << std::setw(10) << "E[logX]" << std::setw(10) << "E[1/X]"
            << '\n';
  json comps = json::array();
  for (int j = 0; j < cfg.prior.dim(); ++j) {
    const auto& comp = cfg.prior.components[static_cast<std::size_t>(j)];
    const auto f = priors::moment_flags(comp);
    std::cout << std::left << std::setw(12) << cfg.prior.labels[j]
              << std::setw(34) << comp.describe() << std::setw(10)
              << priors::flag_name(f.mean_abs_finite) << std::setw(10)
              << priors::flag_name(f.second_moment_finite) << std::setw(10)
              << priors::flag_name(f.expected_log_finite) << std::setw(10)
              << priors::flag_name(f.expected_inverse_finite) << '\n';
    comps.push_back({{"label", cfg.prior.labels[j]},
                     {"prior", comp.describe()},
                     {"mean_abs_finite", priors::flag_name(f.mean_abs_finite)},
                     {"second_moment_finite",
                      priors::flag_name(f.second_moment_finite)},
                     {"expected_log_finite",
                      priors::flag_name(f.expected_log_finite)},
                     {"expected_inverse_finite",
                      priors::flag_name(f.expected_inverse_finite)}});
  }
  json meta{{"command", "diagnose"},
            {"verdict", verdict_name(v.kind)},
            {"rule", v.rule},
            {"missing", v.missing},
            {"components", comps}};
  std::cout << meta.dump() << '\n';

  switch (v.kind) {
    case diagnostics::VerdictKind::NonSingular:
      return kExitOk;
    case diagnostics::VerdictKind::Singular:
      return kExitSingular;
    default:
      return kExitInconclusive;
  }
}

// ---------------------------------------------------------------------------
// design

struct DesignOpts {
  CommonOpts common;
  std::optional<std::string> objective;
  std::optional<int> n_runs;
  std::optional<int> starts;
  std::optional<std::string> theta;
  std::string out_path;  // empty: <out_dir>/<design_file>
  std::string trace_path;
};

int cmd_design(const DesignOpts& o) {
  config::RunConfig cfg = load_run_config(o.common);
  if (o.objective) cfg.objective = config::parse_objective(*o.objective);
  if (o.n_runs) cfg.n_runs = *o.n_runs;
  if (o.starts) cfg.search.n_starts = *o.starts;
  if (o.theta) cfg.theta = parse_theta_list(*o.theta);
  if (cfg.n_runs < 1 || cfg.search.n_starts < 1)
    throw std::invalid_argument("--n and --starts must be >= 1");
  if (cfg.objective == config::Objective::Local) {
    if (cfg.theta.empty())
      throw std::invalid_argument(
          "the local objective needs theta (config [run] or --theta)");
    if (static_cast<int>(cfg.theta.size()) != cfg.model.param_dim())
      throw std::invalid_argument(
          "theta must list one value per model parameter");
    models::validate_params(cfg.model, cfg.theta);
  } else if (o.theta) {
    throw std::invalid_argument("--theta applies only to --objective local");
  }

  diagnostics::Verdict verdict;
  if (!singular_gate(cfg, o.common.force, verdict)) return kExitRefused;

  quadrature::QuadratureScheme q;
  const bool needs_q = cfg.objective != config::Objective::Local;
  if (needs_q) q = config::build_quadrature(cfg);
  efficiency::LocalOptCache cache;
  const ObjectiveBundle bundle =
      make_objective(cfg, cfg.objective, needs_q ? &q : nullptr, &cache);

  const optimizer::SearchResult res = optimizer::coordinate_exchange(
      bundle.fn, cfg.region(), cfg.n_runs, cfg.search);

  std::filesystem::create_directories(cfg.out_dir);
  const std::string design_path =
      o.out_path.empty()
          ? (std::filesystem::path(cfg.out_dir) / cfg.design_file).string()
          : o.out_path;
  write_design_csv(design_path, res.best);

  if (!o.trace_path.empty()) {
    std::ofstream tr(o.trace_path);
    if (!tr) throw std::runtime_error("cannot write " + o.trace_path);
    tr.precision(12);
    tr << "start,start_objective,final_objective\n";
    for (std::size_t s = 0; s < res.trace.size(); ++s)
      tr << s << ',' << res.trace[s].start_objective << ','
         << res.trace[s].final_objective << '\n';
  }

  json meta{{"command", "design"},
            {"objective", config::objective_name(cfg.objective)},
            {"n", cfg.n_runs},
            {"starts", cfg.search.n_starts},
            {"seed", cfg.seed},
            {"design", design_path},
            {"best_value", res.best_value}};
  meta_add_verdict(meta, verdict, o.common.force);
  if (needs_q) {
    const objective::ObjectiveBracket br =
        objective::phi(res.best, cfg.model, q);
    meta["n_nodes"] = q.size();
    meta["lower"] = br.lower;
    meta["upper"] = br.upper;
    meta["n_substituted"] = br.s_set.size();
    meta["exact"] = br.exact;
    std::cout << "phi(best) in [" << br.lower << ", " << br.upper << "], "
              << br.s_set.size() << " of " << q.size()
              << " nodes substituted\n";
  } else {
    const objective::LocalValue lv =
        objective::local_objective_checked(cfg.model, res.best, cfg.theta);
    meta["lower"] = lv.value;
    meta["upper"] = lv.value;
    meta["n_substituted"] = lv.substituted ? 1 : 0;
    meta["exact"] = !lv.substituted;
    std::cout << "log|M(best; theta)| = " << lv.value << '\n';
  }
  emit_meta(cfg, meta, "design_meta.json");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOpts {
  CommonOpts common;
  std::string design_path;
};

int cmd_evaluate(const EvaluateOpts& o) {
  const config::RunConfig cfg = load_run_config(o.common);
  diagnostics::Verdict verdict;
  if (!singular_gate(cfg, o.common.force, verdict)) return kExitRefused;

  const models::Design xi = read_design_csv(o.design_path, cfg.region());
  const quadrature::QuadratureScheme q = config::build_quadrature(cfg);
  const objective::ObjectiveBracket br = objective::phi(xi, cfg.model, q);

  std::cout << "phi in [" << br.lower << ", " << br.upper << "], "
            << br.s_set.size() << " of " << q.size()
            << " nodes substituted\n";
  json meta{{"command", "evaluate"},
            {"design", o.design_path},
            {"n", xi.n()},
            {"lower", br.lower},
            {"upper", br.upper},
            {"exact", br.exact},
            {"n_substituted", br.s_set.size()},
            {"rcond_threshold", objective::kDefaultRcond},
            {"seed", cfg.seed},
            {"n_nodes", q.size()}};
  meta_add_verdict(meta, verdict, o.common.force);
  emit_meta(cfg, meta, "evaluate_meta.json");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// profile

struct ProfileOpts {
  CommonOpts common;
  std::string design_path;
  std::optional<int> starts;
  std::optional<int> grid;
  std::optional<int> draws;
  std::optional<int> kde_draws;
};

int cmd_profile(const ProfileOpts& o) {
  const config::RunConfig cfg = load_run_config(o.common);
  diagnostics::Verdict verdict;
  if (!singular_gate(cfg, o.common.force, verdict)) return kExitRefused;

  const models::Design xi = read_design_csv(o.design_path, cfg.region());
  const quadrature::QuadratureScheme q = config::build_quadrature(cfg);

  efficiency::ProfileSettings ps;
  ps.seed = cfg.seed;
  ps.out_dir = cfg.out_dir;
  if (o.starts) ps.search.n_starts = *o.starts;
  if (o.grid) ps.grid_points = *o.grid;
  if (o.draws) ps.mc_draws = *o.draws;
  if (o.kde_draws) ps.kde_draws = *o.kde_draws;
  if (ps.search.n_starts < 1 || ps.grid_points < 2 || ps.mc_draws < 1 ||
      ps.kde_draws < 2)
    throw std::invalid_argument("profile budget options out of range");

  const efficiency::ProfileReport rep =
      efficiency::efficiency_profile(xi, cfg.model, cfg.prior, q, ps);

  std::cout << "trained " << rep.n_trained << " of " << rep.n_nodes
            << " nodes (" << rep.n_dropped_uninformative
            << " uninformative); efficiency quartiles [" << rep.q25 << ", "
            << rep.q75 << "], mode " << rep.modal_eff << ", P(eff<0.2) = "
            << rep.p_below_02 << '\n';
  json meta{{"command", "profile"},
            {"design", o.design_path},
            {"n_nodes", rep.n_nodes},
            {"n_dropped_uninformative", rep.n_dropped_uninformative},
            {"n_trained", rep.n_trained},
            {"q25", rep.q25},
            {"q75", rep.q75},
            {"modal_eff", rep.modal_eff},
            {"p_below_02", rep.p_below_02},
            {"seed", cfg.seed},
            {"out_dir", cfg.out_dir}};
  meta_add_verdict(meta, verdict, o.common.force);
  emit_meta(cfg, meta, "profile_meta.json");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// compare: search a design per objective, then score each design by its mean
// emulator-predicted efficiency over one shared set of prior draws.

struct CompareOpts {
  CommonOpts common;
  bool with_psi = false;
  std::optional<int> n_runs;
  std::optional<int> starts;
  int draws = 4000;
};

int cmd_compare(const CompareOpts& o) {
  config::RunConfig cfg = load_run_config(o.common);
  if (o.n_runs) cfg.n_runs = *o.n_runs;
  if (o.starts) cfg.search.n_starts = *o.starts;
  if (cfg.n_runs < 1 || cfg.search.n_starts < 1 || o.draws < 1)
    throw std::invalid_argument("--n, --starts and --draws must be >= 1");

  diagnostics::Verdict verdict;
  if (!singular_gate(cfg, o.common.force, verdict)) return kExitRefused;

  const quadrature::QuadratureScheme q = config::build_quadrature(cfg);
  std::vector<config::Objective> objectives{config::Objective::BayesLower,
                                            config::Objective::Ew};
  if (o.with_psi) objectives.push_back(config::Objective::Psi);

  // One draw set scores every candidate, so the comparison is paired.
  std::vector<models::ParamVector> draws = priors::sample(
      cfg.prior, static_cast<std::size_t>(o.draws),
      derive_seed(cfg.seed, "compare-draws"));
  for (auto& d : draws) d = priors::to_model_params(cfg.prior, cfg.model, d);

  efficiency::LocalOptCache cache;  // local optima shared across designs
  const efficiency::LocalEffSettings es;
  optimizer::SearchSettings efit = efficiency::emulator_search_defaults();
  efit.seed = derive_seed(cfg.seed, "compare-emulator");

  std::filesystem::create_directories(cfg.out_dir);
  json table = json::array();
  std::cout << std::left << std::setw(14) << "objective" << std::setw(18)
            << "phi_lower" << std::setw(18) << "phi_upper" << std::setw(18)
            << "mean_pred_eff" << '\n';
  for (const config::Objective obj : objectives) {
    const std::string name = config::objective_name(obj);
    optimizer::SearchSettings s = cfg.search;
    s.seed = derive_seed(cfg.seed, "search-" + name);
    const ObjectiveBundle bundle = make_objective(cfg, obj, &q, &cache);
    const optimizer::SearchResult res =
        optimizer::coordinate_exchange(bundle.fn, cfg.region(), cfg.n_runs, s);

    std::string file = "design_" + name + ".csv";
    for (auto& c : file)
      if (c == '-') c = '_';
    const std::string path =
        (std::filesystem::path(cfg.out_dir) / file).string();
    write_design_csv(path, res.best);

    const auto brackets = node_brackets(res.best, cfg.model, q, es, cache);
    std::vector<models::ParamVector> train_x;
    std::vector<double> train_y;
    for (std::size_t l = 0; l < brackets.size(); ++l) {
      if (objective::uninformative_bracket(brackets[l].lower,
                                           brackets[l].upper))
        continue;
      train_x.push_back(q.nodes[l]);
      train_y.push_back(0.5 * (brackets[l].lower + brackets[l].upper));
    }
    const efficiency::Emulator em =
        efficiency::fit_emulator(train_x, train_y, efit);
    double mean_eff = 0.0;
    for (const auto& d : draws) mean_eff += efficiency::predict(em, d).mean;
    mean_eff /= static_cast<double>(draws.size());

    const objective::ObjectiveBracket br =
        objective::phi(res.best, cfg.model, q);
    std::cout << std::left << std::setw(14) << name << std::setw(18)
              << br.lower << std::setw(18) << br.upper << std::setw(18)
              << mean_eff << '\n';
    table.push_back({{"objective", name},
                     {"design", path},
                     {"lower", br.lower},
                     {"upper", br.upper},
                     {"n_substituted", br.s_set.size()},
                     {"mean_predicted_efficiency", mean_eff},
                     {"n_trained", train_x.size()}});
  }

  json meta{{"command", "compare"}, {"seed", cfg.seed},
            {"n", cfg.n_runs},     {"n_nodes", q.size()},
            {"draws", o.draws},    {"results", table}};
  meta_add_verdict(meta, verdict, o.common.force);
  emit_meta(cfg, meta, "compare_meta.json");
  return kExitOk;
}

// ---------------------------------------------------------------------------
// quadrature: materialize the scheme a config describes.

struct QuadratureOpts {
  CommonOpts common;
  std::string out_path;  // empty: CSV to stdout
};

int cmd_quadrature(const QuadratureOpts& o) {
  const config::RunConfig cfg = load_run_config(o.common);
  const quadrature::QuadratureScheme q = config::build_quadrature(cfg);
  if (o.out_path.empty()) {
    quadrature::write_scheme_csv(std::cout, q);
    return kExitOk;
  }
  std::ofstream out(o.out_path);
  if (!out) throw std::runtime_error("cannot write " + o.out_path);
  quadrature::write_scheme_csv(out, q);
  double weight_sum = 0.0;
  for (const double w : q.weights) weight_sum += w;
  json meta{{"command", "quadrature"},
            {"method", config::quad_method_name(cfg.quadrature.method)},
            {"n_nodes", q.size()},
            {"dim", q.dim()},
            {"weight_sum", weight_sum},
            {"seed", cfg.quadrature.has_seed ? cfg.quadrature.seed : cfg.seed},
            {"seed_pinned", cfg.quadrature.has_seed},
            {"out", o.out_path}};
  std::cout << meta.dump() << '\n';
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"bodx: Bayesian D-optimal design under parameter uncertainty"};
  app.require_subcommand(1);

  const auto add_common = [](CLI::App* sub, CommonOpts& c, bool gated) {
    sub->add_option("config", c.config_path, "run configuration file")
        ->required();
    sub->add_option("--seed", c.seed, "override the top-level seed");
    if (gated)
      sub->add_flag("--force", c.force,
                    "proceed despite a singular-prior verdict");
  };

  CommonOpts diag_opts;
  CLI::App* diag = app.add_subcommand(
      "diagnose", "classify the prior as singular / non-singular");
  add_common(diag, diag_opts, false);

  DesignOpts design_opts;
  CLI::App* design =
      app.add_subcommand("design", "search for an optimal exact design");
  add_common(design, design_opts.common, true);
  design->add_option("--objective", design_opts.objective,
                     "bayes-lower|bayes-upper|local|ew|psi");
  design->add_option("--n", design_opts.n_runs, "number of design runs");
  design->add_option("--starts", design_opts.starts, "multistart count");
  design->add_option("--theta", design_opts.theta,
                     "parameter vector for the local objective");
  design->add_option("--out", design_opts.out_path, "design CSV path");
  design->add_option("--trace", design_opts.trace_path,
                     "per-start trace CSV path");

  EvaluateOpts eval_opts;
  CLI::App* eval = app.add_subcommand(
      "evaluate", "bracket the Bayesian objective of a stored design");
  add_common(eval, eval_opts.common, true);
  eval->add_option("--design", eval_opts.design_path, "design CSV to score")
      ->required();

  ProfileOpts prof_opts;
  CLI::App* prof = app.add_subcommand(
      "profile", "efficiency profile of a stored design over the prior");
  add_common(prof, prof_opts.common, true);
  prof->add_option("--design", prof_opts.design_path, "design CSV to profile")
      ->required();
  prof->add_option("--starts", prof_opts.starts,
                   "multistart count for per-node local optima");
  prof->add_option("--grid", prof_opts.grid, "points per coordinate grid");
  prof->add_option("--draws", prof_opts.draws,
                   "Monte Carlo draws per grid point");
  prof->add_option("--kde-draws", prof_opts.kde_draws,
                   "prior draws behind the marginal density");

  CompareOpts cmp_opts;
  CLI::App* cmp = app.add_subcommand(
      "compare", "rank objectives by mean predicted efficiency");
  add_common(cmp, cmp_opts.common, true);
  cmp->add_flag("--with-psi", cmp_opts.with_psi,
                "also run the mean-local-efficiency objective");
  cmp->add_option("--n", cmp_opts.n_runs, "number of design runs");
  cmp->add_option("--starts", cmp_opts.starts, "multistart count");
  cmp->add_option("--draws", cmp_opts.draws,
                  "prior draws for the efficiency score");

  QuadratureOpts quad_opts;
  CLI::App* quad = app.add_subcommand(
      "quadrature", "materialize the quadrature scheme as CSV");
  add_common(quad, quad_opts.common, false);
  quad->add_option("--out", quad_opts.out_path,
                   "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    std::cout.precision(12);
    if (app.got_subcommand(diag)) return cmd_diagnose(diag_opts);
    if (app.got_subcommand(design)) return cmd_design(design_opts);
    if (app.got_subcommand(eval)) return cmd_evaluate(eval_opts);
    if (app.got_subcommand(prof)) return cmd_profile(prof_opts);
    if (app.got_subcommand(cmp)) return cmd_compare(cmp_opts);
    if (app.got_subcommand(quad)) return cmd_quadrature(quad_opts);
    std::cerr << "bodx: no subcommand selected\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "bodx: error: " << e.what() << '\n';
    return kExitError;
  }
}
