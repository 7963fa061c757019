#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "plap/autonomous.hpp"
#include "plap/bvp_solver.hpp"
#include "plap/diagnostics.hpp"
#include "plap/limit_profile.hpp"
#include "plap/potential.hpp"
#include "plap/weight.hpp"

namespace plap {

/// Line-oriented configuration:
///
///   # comment
///   p = 2
///   potential = allen_cahn          # allen_cahn | pendulum | custom
///   weight = 1 + 0.5*sin(2*pi*x)    # or: weight_samples = file.csv (x,a rows)
///   epsilons = 0.05, 0.025, 0.0125
///   [support]
///   s = 0.1
///   t = 0.4
///   type = interior                 # interior | right_end | left_end
///
/// Repeated [support] sections add intervals in order. Unknown keys,
/// duplicate keys and malformed values raise ParseError with line/column.
struct ScenarioConfig {
  double p = 2.0;
  std::string potential = "allen_cahn";
  // custom potential: expressions in u plus the declared constants
  std::string custom_w, custom_w_prime;
  double c_minus1 = 0.0, c_zero = 0.0, c_one = 0.0, w_zero = 0.0;

  std::string weight;          // expression in x
  std::string weight_samples;  // path to x,a samples (relative to the config file)
  std::string base_dir = ".";

  std::vector<SupportInterval> support;
  double support_rel_tol = 1e-8;
  bool support_exact = false;

  std::vector<double> epsilons;
  std::vector<int> counts;  // empty: from the zero density
  double h0 = 0.0;          // 0: detected
  double cells_per_eps = 384.0;
  int profile_nodes = 2001;
  int timemap_nodes = 200;
  int table_nodes = 256;
  double log_margin_constant = 1.0;

  // check tolerances
  double tol_el = 1e-4;
  double tol_neumann = 1e-8;
  double tol_junction = 1e-5;
  double tol_energy_residual = 1e-4;
  double tol_energy_error = 0.05;  // fraction of W_0 at the smallest eps
  double tol_uniqueness = 1e-8;
  double tol_layer_k2 = 0.2;
  double tol_profile = 1e-6;  // three-point residual of the profile ODE

  std::string output_dir = "out";
  std::string text;  // raw file contents, for the manifest hash
};

ScenarioConfig parse_config(const std::string& text, const std::string& base_dir = ".");
ScenarioConfig load_config(const std::string& path);

/// Built objects shared by all subcommands. Validation happens here.
struct Scenario {
  ScenarioConfig cfg;
  PExponent P{2.0};
  DoubleWellPotential Wd;
  WeightFunction a;
  TimeMapTable table;  // at a = 1
  SupportSpec A;
  std::vector<Block> blocks;  // interior support intervals

  explicit Scenario(const ScenarioConfig& cfg);
};

/// One row of the verification table.
struct CheckResult {
  std::string check;
  double target = 0.0, value = 0.0, tol = 0.0;
  bool pass = false;
};

/// Solution samples as written to and read back from CSV.
struct SolutionData {
  double eps = 0.0;
  Eigen::VectorXd x, u, uprime;
  struct Junction {
    int j = 0;
    double tau = 0.0, left = 0.0, right = 0.0, m = 0.0;
  };
  std::vector<Junction> junctions;
  std::vector<std::pair<double, double>> windows;  // per block, from the solver
  std::vector<int> counts;
};

SolutionData solution_data(const BVPSolution& sol);

/// Checks on one solution (Euler-Lagrange and energy residuals, Neumann ends,
/// junction matching, zero counts per block, distance to the limit profile,
/// minimizer uniqueness from random starts) and on the eps-sweep.
std::vector<CheckResult> verify_solutions(const Scenario& sc, const std::vector<SolutionData>& sols,
                                          std::uint64_t seed);

struct RunOptions {
  std::string out_dir;  // overrides the config output_dir when set
  unsigned jobs = 1;
  std::uint64_t seed = 0;
};

/// Runs timemap | profile | solve | verify | sweep, writing CSVs and a
/// manifest.json to the output directory. Throws on failure.
void run(const std::string& subcommand, const Scenario& sc, const RunOptions& opt,
         std::ostream& log);

/// Exit status for the current exception: 2 parse, 3 validation, 4 numerical.
int exit_code_for_current_exception(std::ostream& err);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace plap
