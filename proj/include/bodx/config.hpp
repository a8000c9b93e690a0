#ifndef BODX_CONFIG_HPP
#define BODX_CONFIG_HPP

#include <cstdint>
#include <iosfwd>
#include <string>

#include "bodx/models.hpp"
#include "bodx/optimizer.hpp"
#include "bodx/priors.hpp"
#include "bodx/quadrature.hpp"

// Run configuration: one structured text file of flat key-value blocks.
//
//   [model]            family, link, factors, terms, region, time_upper
//   [prior <label>]    one block per parameter, in parameter order:
//                      family, loc, sd|var, scale, a, b, df, sign
//   [quadrature]       method, n | n_radial + n_rotations, seed (optional)
//   [search]           starts, max_passes, grid_points, refine_iters, tol
//   [run]              seed, n, objective, theta, max_uninformative_mass
//   [output]           dir, design
//
// Keys are lowercase; `#` starts a comment; unknown sections or keys are
// errors. Every stochastic path derives its stream from the single [run]
// seed via derive_seed(seed, purpose); the optional [quadrature] seed pins
// just the scheme's stream.
namespace bodx::config {

enum class QuadMethod { RadialSpherical, MonteCarlo, LatinHypercube };
enum class Objective { BayesLower, BayesUpper, Local, Ew, Psi };

const char* quad_method_name(QuadMethod m);
const char* objective_name(Objective o);
Objective parse_objective(const std::string& name);

struct QuadratureConfig {
  QuadMethod method = QuadMethod::MonteCarlo;
  int n = 1000;           // monte_carlo / latin_hypercube draws
  int n_radial = 3;       // radial_spherical radial nodes
  int n_rotations = 1;    // radial_spherical rotations
  bool has_seed = false;  // stream pinned by the block instead of derived
  std::uint64_t seed = 0;
};

struct RunConfig {
  models::ModelSpec model;
  double time_upper = 24.0;  // TimeAxis region bound
  priors::JointPrior prior;
  QuadratureConfig quadrature;
  optimizer::SearchSettings search;  // seed derived from the run seed
  std::uint64_t seed = 1;
  int n_runs = 8;
  Objective objective = Objective::BayesLower;
  models::ParamVector theta;  // local objective's parameter vector
  double max_uninformative_mass = 0.05;
  std::string out_dir = ".";
  std::string design_file = "design.csv";

  models::Region region() const {
    return {model.natural_region(), model.q, time_upper};
  }
};

// Parse and validate; throws std::invalid_argument naming the offending
// line or key on any malformed input.
RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::string& path);

// The scheme the config names, in model coordinates. Its stream is
// derive_seed(cfg.seed, "quadrature") unless the block pins one.
quadrature::QuadratureScheme build_quadrature(const RunConfig& cfg);

}  // namespace bodx::config

#endif
