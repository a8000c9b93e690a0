#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>
#include <stdexcept>
#include <string>

#include "bodx/common.hpp"
#include "bodx/config.hpp"
#include "bodx/models.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"

using namespace bodx;

namespace {

config::RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return config::parse_config(in);
}

const std::string kFactorialConfig = R"cfg(
# two-factor logistic screening fixture
[model]
family = glm
link = logit
factors = 3
terms = 1, x1, x2, x3, x1*x2, x1*x3, x2*x3

[prior beta0]
family = normal
loc = -1
var = 2

[prior beta1]
family = normal
loc = 2
var = 2

[prior beta2]
family = normal
loc = 1
var = 2

[prior beta3]
family = normal
loc = -1
var = 2

[prior beta12]
family = normal
loc = 0.5
var = 2

[prior beta13]
family = normal
loc = 0.5
var = 2

[prior beta23]
family = normal
loc = 0.5
var = 2

[quadrature]
method = radial_spherical
n_radial = 5
n_rotations = 4

[search]
starts = 20
max_passes = 40
grid_points = 21
refine_iters = 30
tol = 1e-9

[run]
seed = 20240817
n = 16
objective = bayes-lower

[output]
dir = out
design = screen.csv
)cfg";

}  // namespace

TEST_CASE("a full GLM config parses into the expected run") {
  const auto cfg = parse(kFactorialConfig);
  CHECK(cfg.model.family == models::ModelSpec::Family::Glm);
  CHECK(cfg.model.link == models::Link::Logit);
  CHECK(cfg.model.q == 3);
  REQUIRE(cfg.model.terms.size() == 7);
  CHECK(cfg.model.param_dim() == 7);
  CHECK(cfg.region().kind == models::RegionKind::Cube);

  REQUIRE(cfg.prior.dim() == 7);
  CHECK(cfg.prior.labels[0] == "beta0");
  CHECK(cfg.prior.labels[6] == "beta23");
  CHECK(cfg.prior.components[0].family == priors::Family::Normal);
  CHECK(cfg.prior.components[0].loc == -1.0);
  // var = 2 is a variance: sd = sqrt(2)
  CHECK(cfg.prior.components[0].scale ==
        doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(cfg.prior.components[4].loc == 0.5);

  CHECK(cfg.quadrature.method == config::QuadMethod::RadialSpherical);
  CHECK(cfg.quadrature.n_radial == 5);
  CHECK(cfg.quadrature.n_rotations == 4);
  CHECK(!cfg.quadrature.has_seed);

  CHECK(cfg.search.n_starts == 20);
  CHECK(cfg.search.max_passes == 40);
  CHECK(cfg.search.grid_points == 21);
  CHECK(cfg.search.refine_iters == 30);
  CHECK(cfg.search.tol == 1e-9);
  // The search stream is split off the run seed, never left at a default.
  CHECK(cfg.search.seed == derive_seed(20240817, "search"));

  CHECK(cfg.seed == 20240817);
  CHECK(cfg.n_runs == 16);
  CHECK(cfg.objective == config::Objective::BayesLower);
  CHECK(cfg.out_dir == "out");
  CHECK(cfg.design_file == "screen.csv");
}

TEST_CASE("defaults fill everything outside model and priors") {
  const auto cfg = parse(R"cfg(
[model]
family = exponential_theta

[prior theta]
family = uniform
a = 0
b = 1
)cfg");
  CHECK(cfg.model.family == models::ModelSpec::Family::ExponentialTheta);
  CHECK(cfg.model.param_dim() == 1);
  CHECK(cfg.region().kind == models::RegionKind::TimeAxis);
  CHECK(cfg.region().time_upper == 24.0);
  CHECK(cfg.prior.components[0].family == priors::Family::Uniform);
  CHECK(cfg.prior.components[0].a == 0.0);
  CHECK(cfg.prior.components[0].b == 1.0);
  CHECK(cfg.quadrature.method == config::QuadMethod::MonteCarlo);
  CHECK(cfg.quadrature.n == 1000);
  CHECK(cfg.seed == 1);
  CHECK(cfg.n_runs == 8);
  CHECK(cfg.objective == config::Objective::BayesLower);
  CHECK(cfg.max_uninformative_mass == 0.05);
  CHECK(cfg.out_dir == ".");
  CHECK(cfg.design_file == "design.csv");
  CHECK(cfg.search.n_starts == 20);  // optimizer default
}

TEST_CASE("time_upper flows into the region") {
  const auto cfg = parse(R"cfg(
[model]
family = exponential_beta
region = time
time_upper = 10

[prior beta]
family = lognormal
loc = 0
sd = 0.5
)cfg");
  CHECK(cfg.region().kind == models::RegionKind::TimeAxis);
  CHECK(cfg.region().time_upper == 10.0);
  CHECK(cfg.prior.components[0].family == priors::Family::LogNormal);
  CHECK(cfg.prior.components[0].scale == 0.5);
}

TEST_CASE("compartmental separation coordinates parse by label") {
  const auto cfg = parse(R"cfg(
[model]
family = compartmental

[prior theta1]
family = uniform
a = 0.01884
b = 0.09884

[prior delta]
family = uniform
a = 0.25
b = 0.5

[prior theta3]
family = uniform
a = 10
b = 30
)cfg");
  CHECK(cfg.model.family == models::ModelSpec::Family::Compartmental);
  REQUIRE(cfg.prior.dim() == 3);
  CHECK(cfg.prior.delta_coords());
  const models::ParamVector draw = {0.05, 0.3, 20.0};
  const auto mapped = priors::to_model_params(cfg.prior, cfg.model, draw);
  CHECK(mapped[1] == doctest::Approx(0.35));
}

TEST_CASE("every prior family round-trips through its keys") {
  const auto cfg = parse(R"cfg(
[model]
family = glm
link = probit
factors = 1
terms = 1, x1, x1^2, x1^3, x1^4, x1^5

[prior a]
family = normal
loc = 0
sd = 1.5

[prior b]
family = cauchy
loc = 0
scale = 2.5

[prior c]
family = half_cauchy
scale = 3
sign = -1

[prior d]
family = student_t
df = 4
loc = 1
scale = 0.5

[prior e]
family = uniform
a = -2
b = 2

[prior f]
family = lognormal
loc = -1
var = 4
)cfg");
  REQUIRE(cfg.prior.dim() == 6);
  CHECK(cfg.prior.components[0].family == priors::Family::Normal);
  CHECK(cfg.prior.components[0].scale == 1.5);
  CHECK(cfg.prior.components[1].family == priors::Family::Cauchy);
  CHECK(cfg.prior.components[1].scale == 2.5);
  CHECK(cfg.prior.components[2].family == priors::Family::HalfCauchy);
  CHECK(cfg.prior.components[2].sign == -1);
  CHECK(cfg.prior.components[3].family == priors::Family::StudentT);
  CHECK(cfg.prior.components[3].df == 4.0);
  CHECK(cfg.prior.components[3].loc == 1.0);
  CHECK(cfg.prior.components[4].family == priors::Family::Uniform);
  CHECK(cfg.prior.components[5].family == priors::Family::LogNormal);
  CHECK(cfg.prior.components[5].scale == 2.0);  // var 4 -> sd 2 on the log
}

TEST_CASE("local objective carries its theta vector") {
  const auto cfg = parse(R"cfg(
[model]
family = exponential_beta

[prior beta]
family = uniform
a = 0.1
b = 2

[run]
seed = 7
n = 1
objective = local
theta = 0.8
)cfg");
  CHECK(cfg.objective == config::Objective::Local);
  REQUIRE(cfg.theta.size() == 1);
  CHECK(cfg.theta[0] == 0.8);
}

TEST_CASE("objective names round-trip") {
  using config::Objective;
  for (auto o : {Objective::BayesLower, Objective::BayesUpper,
                 Objective::Local, Objective::Ew, Objective::Psi}) {
    CHECK(config::parse_objective(config::objective_name(o)) == o);
  }
  CHECK_THROWS_AS(config::parse_objective("maximin"), std::invalid_argument);
}

TEST_CASE("quadrature schemes build deterministically from the run seed") {
  const std::string text = R"cfg(
[model]
family = glm
link = logit
factors = 1
terms = 1, x1

[prior b0]
family = normal
loc = 0
sd = 1

[prior b1]
family = normal
loc = 1
sd = 0.5

[quadrature]
method = latin_hypercube
n = 64

[run]
seed = 99
)cfg";
  const auto cfg1 = parse(text);
  const auto cfg2 = parse(text);
  const auto q1 = config::build_quadrature(cfg1);
  const auto q2 = config::build_quadrature(cfg2);
  REQUIRE(q1.size() == 64);
  REQUIRE(q2.size() == 64);
  CHECK(q1.nodes == q2.nodes);
  CHECK(q1.weights == q2.weights);
  // Matches the library call with the derived stream.
  const auto direct = quadrature::latin_hypercube(
      cfg1.prior, 64, derive_seed(99, "quadrature"), &cfg1.model);
  CHECK(q1.nodes == direct.nodes);
}

TEST_CASE("a pinned quadrature seed overrides the derived stream") {
  const auto cfg = parse(R"cfg(
[model]
family = glm
link = logit
factors = 1
terms = 1, x1

[prior b0]
family = normal
loc = 0
sd = 1

[prior b1]
family = normal
loc = 1
sd = 0.5

[quadrature]
method = monte_carlo
n = 32
seed = 424242
)cfg");
  REQUIRE(cfg.quadrature.has_seed);
  const auto q = config::build_quadrature(cfg);
  const auto direct = quadrature::monte_carlo(cfg.prior, 32, 424242,
                                              &cfg.model);
  CHECK(q.nodes == direct.nodes);
}

TEST_CASE("comments, blank lines, and spacing are tolerated") {
  const auto cfg = parse(
      "\n"
      "# leading comment\n"
      "[model]\n"
      "family=exponential_theta   # trailing comment\n"
      "\n"
      "[prior theta]  \n"
      "  family   =    uniform\n"
      "a=0.5\n"
      "b = 1.5\n");
  CHECK(cfg.model.family == models::ModelSpec::Family::ExponentialTheta);
  CHECK(cfg.prior.components[0].a == 0.5);
  CHECK(cfg.prior.components[0].b == 1.5);
}

TEST_CASE("malformed configs are rejected with invalid_argument") {
  const std::string model_1f = "[model]\nfamily = exponential_theta\n";
  const std::string prior_u = "[prior t]\nfamily = uniform\na = 0\nb = 1\n";

  // structural problems
  CHECK_THROWS_AS(parse(""), std::invalid_argument);
  CHECK_THROWS_AS(parse("[model]\nfamily = glm\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse(prior_u), std::invalid_argument);  // no [model]
  CHECK_THROWS_AS(parse("key = 1\n" + model_1f + prior_u),
                  std::invalid_argument);  // key before any block
  CHECK_THROWS_AS(parse(model_1f + "[model]\nfamily = exponential_theta\n" +
                        prior_u),
                  std::invalid_argument);  // duplicate [model]
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[mystery]\nx = 1\n"),
                  std::invalid_argument);  // unknown section
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\nseed\n"),
                  std::invalid_argument);  // line without '='
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\nseed = 1\nseed = 2\n"),
                  std::invalid_argument);  // duplicate key
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\nwibble = 1\n"),
                  std::invalid_argument);  // unknown key

  // model block problems
  CHECK_THROWS_AS(parse("[model]\nfamily = nonesuch\n" + prior_u),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      parse("[model]\nfamily = glm\nterms = 1, x1\n[prior a]\nfamily = "
            "normal\nloc = 0\nsd = 1\n[prior b]\nfamily = normal\nloc = "
            "0\nsd = 1\n"),
      std::invalid_argument);  // glm without link
  CHECK_THROWS_AS(
      parse("[model]\nfamily = glm\nlink = logit\n[prior a]\nfamily = "
            "normal\nloc = 0\nsd = 1\n"),
      std::invalid_argument);  // glm without terms
  CHECK_THROWS_AS(
      parse("[model]\nfamily = exponential_theta\nterms = 1, x1\n" + prior_u),
      std::invalid_argument);  // terms on a non-GLM family
  CHECK_THROWS_AS(
      parse("[model]\nfamily = exponential_theta\nregion = cube\n" + prior_u),
      std::invalid_argument);  // region contradicts the family
  CHECK_THROWS_AS(
      parse("[model]\nfamily = glm\nlink = laplace\nterms = 1, x1\n" +
            prior_u + prior_u),
      std::invalid_argument);  // unknown link

  // prior block problems
  CHECK_THROWS_AS(parse(model_1f + prior_u + prior_u),
                  std::invalid_argument);  // count != param_dim
  CHECK_THROWS_AS(parse(model_1f + "[prior t]\nfamily = normal\nloc = 0\n"),
                  std::invalid_argument);  // normal without spread
  CHECK_THROWS_AS(
      parse(model_1f + "[prior t]\nfamily = normal\nloc = 0\nsd = 1\nvar = "
                       "1\n"),
      std::invalid_argument);  // sd and var together
  CHECK_THROWS_AS(
      parse(model_1f + "[prior t]\nfamily = normal\nloc = 0\nsd = -1\n"),
      std::invalid_argument);  // negative sd
  CHECK_THROWS_AS(
      parse(model_1f + "[prior t]\nfamily = uniform\na = 1\nb = 1\n"),
      std::invalid_argument);  // empty interval
  CHECK_THROWS_AS(
      parse(model_1f + "[prior t]\nfamily = cauchy\nloc = 0\nvar = 1\n"),
      std::invalid_argument);  // var has no meaning for cauchy
  CHECK_THROWS_AS(
      parse(model_1f + "[prior t]\nfamily = half_cauchy\nscale = 1\nsign = "
                       "2\n"),
      std::invalid_argument);  // sign must be +1 or -1
  CHECK_THROWS_AS(parse(model_1f + "[prior t]\nfamily = pareto\na = 1\n"),
                  std::invalid_argument);  // unknown family

  // run block problems
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\nseed = kitten\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\nobjective = local\n"),
                  std::invalid_argument);  // local without theta
  CHECK_THROWS_AS(
      parse(model_1f + prior_u + "[run]\nobjective = local\ntheta = 1, 2\n"),
      std::invalid_argument);  // theta length != param_dim
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\nn = 0\n"),
                  std::invalid_argument);
  CHECK_THROWS_AS(parse(model_1f + prior_u + "[run]\ntheta = 1\n"),
                  std::invalid_argument);  // theta without local objective

  // quadrature block problems
  CHECK_THROWS_AS(
      parse(model_1f + prior_u + "[quadrature]\nmethod = sobol\nn = 8\n"),
      std::invalid_argument);
  CHECK_THROWS_AS(
      parse(model_1f + prior_u + "[quadrature]\nmethod = monte_carlo\nn = "
                                 "0\n"),
      std::invalid_argument);
  CHECK_THROWS_AS(parse(model_1f + prior_u +
                        "[quadrature]\nmethod = monte_carlo\nn = 8\nn_radial "
                        "= 3\n"),
                  std::invalid_argument);  // radial keys on a sampling method
  CHECK_THROWS_AS(parse(model_1f + prior_u +
                        "[quadrature]\nmethod = radial_spherical\nn = 8\n"),
                  std::invalid_argument);  // n on the radial method

  // duplicate prior labels
  CHECK_THROWS_AS(
      parse("[model]\nfamily = glm\nlink = logit\nterms = 1, x1\n"
            "[prior same]\nfamily = normal\nloc = 0\nsd = 1\n"
            "[prior same]\nfamily = normal\nloc = 0\nsd = 1\n"),
      std::invalid_argument);
}

TEST_CASE("load_config reports missing files as invalid") {
  CHECK_THROWS_AS(config::load_config("/nonexistent/bodx.cfg"),
                  std::invalid_argument);
}
