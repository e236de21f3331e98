// Copyright 2026 The trinoon Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TRINOON_LP_HPP
#define TRINOON_LP_HPP

#include <array>
#include <functional>
#include <memory>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "trinoon/triangle.hpp"

namespace trinoon::lp {

using json = nlohmann::json;
using real = long double;

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double width() const { return hi - lo; }
  double mid() const { return 0.5 * (lo + hi); }
};

// Probabilities of the left subsets of alpha, beta, gamma. A point split has
// degenerate intervals.
struct LemmaOneSplit {
  std::array<Interval, 3> box;

  static LemmaOneSplit point(double a, double b, double g) {
    return {{Interval{a, a}, Interval{b, b}, Interval{g, g}}};
  }
  bool is_point() const {
    return box[0].lo == box[0].hi && box[1].lo == box[1].hi && box[2].lo == box[2].hi;
  }
};

enum class RowKind { Equality, LessEqual };
enum class RowTag { C0, C1, C2, C3 };

struct Row {
  RowKind kind = RowKind::Equality;
  std::vector<std::pair<int, real>> coeffs;
  real rhs = 0;
  RowTag tag = RowTag::C0;
};

const char *tag_name(RowTag t);

// Variables x >= 0, rows as listed. upper[j] is a bound every feasible point
// satisfies: 0 marks a fixed variable, 1 follows from the normalization rows.
struct LpInstance {
  std::vector<std::string> chi;
  std::string ostar;
  int num_vars = 0;
  std::vector<Row> rows;
  std::vector<real> upper;
  LemmaOneSplit split;
  bool relaxed = false;

  int n() const { return static_cast<int>(chi.size()); }
  // s: 0 = L, 1 = R
  int q_index(int i, int j, int k, int s) const;
  // w: 0 = A, 1 = B, 2 = C
  int r_index(int i, int j, int k, int w) const;
  bool fixed_zero(int var) const { return upper[var] == 0; }
};

struct Feasible {
  std::vector<double> x;
};
struct Infeasible {
  // One multiplier per row; LessEqual multipliers are non-negative.
  std::vector<double> y;
};
struct SolverFailure {
  std::string reason;
};
using FeasibilityResult = std::variant<Feasible, Infeasible, SolverFailure>;

// Backend contract for feasibility solves.
class LpSolver {
 public:
  virtual ~LpSolver() = default;
  virtual std::string name() const = 0;
  virtual FeasibilityResult solve(const LpInstance &inst) const = 0;
};

struct SimplexOptions {
  double feas_tol = 1e-9;
  double pivot_tol = 1e-9;
  double opt_tol = 1e-9;
  int refactor_every = 64;
  long max_iterations = 200000;
};

// Two phase revised simplex with a dense basis inverse.
class SimplexSolver : public LpSolver {
 public:
  explicit SimplexSolver(SimplexOptions opt = {}) : opt_(opt) {}
  std::string name() const override { return "revised-simplex"; }
  FeasibilityResult solve(const LpInstance &inst) const override;

 private:
  SimplexOptions opt_;
};

const LpSolver &default_solver();

class PremiseViolation : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Interval lemma1_interval(double p_ostar);

bool check_lemma1_support(const triangle::TriangleDistribution &dist,
                          const std::string &ostar, double eps = 1e-10);

LpInstance build_lp(const triangle::TriangleDistribution &dist,
                    const std::string &ostar, const LemmaOneSplit &split);

FeasibilityResult solve_feasibility(const LpInstance &inst,
                                    const LpSolver &solver = default_solver());

struct FarkasCheck {
  bool ok = false;
  // Lower bound of y^T A x over the variable box minus y^T b, y scaled to
  // unit max norm.
  double margin = 0.0;
  std::string reason;
};
FarkasCheck check_farkas(const LpInstance &inst, const std::vector<double> &y);
bool verify_farkas(const LpInstance &inst, const std::vector<double> &y);

// Largest row residual of a candidate point.
double max_violation(const LpInstance &inst, const std::vector<double> &x);

struct ExactMode {};
struct GridMode {
  int M = 8;
  // Feasible cells are bisected along every axis up to this depth.
  int refine_levels = 2;
};
using SplitMode = std::variant<ExactMode, GridMode>;

enum class Verdict { CertifiedNonlocal, Inconclusive };

struct CellResult {
  std::array<Interval, 3> box;
  std::string status;  // infeasible | feasible | failure
  bool dual_verified = false;
  double margin = 0.0;
  int level = 0;
};

struct OstarResult {
  std::string ostar;
  bool admissible = false;
  std::string note;
  double p_ostar = 0.0;
  Interval band;
  bool certified = false;
  bool solver_failure = false;
  std::vector<CellResult> cells;
};

struct Certificate {
  json params = json::object();
  std::vector<std::string> ostars;
  std::string mode;  // exact | grid
  int grid_M = 0;
  int refine_levels = 0;
  double eps = 1e-10;
  Verdict verdict = Verdict::Inconclusive;
  bool solver_failure = false;
  std::vector<OstarResult> per_ostar;
};

struct CertifyOptions {
  double eps = 1e-10;
  // exact mode accepts |p(o*) - 1/4| below this
  double rigid_tol = 1e-9;
  // Stop at the first o* that certifies.
  bool stop_at_first = false;
};

Certificate certify_nonlocality(const triangle::TriangleDistribution &dist,
                                const std::vector<std::string> &ostars,
                                const SplitMode &mode,
                                const CertifyOptions &opt = {},
                                const LpSolver &solver = default_solver());

json to_json(const Certificate &c);
std::string verdict_name(Verdict v);

struct ScanPoint {
  json params;
  Certificate cert;
  std::string error;
};

// Evaluates certify_nonlocality on each point; errors are recorded per point.
std::vector<ScanPoint> scan_parameters(
    const std::vector<json> &grid,
    const std::function<triangle::TriangleDistribution(const json &)> &make,
    const std::vector<std::string> &ostars, const SplitMode &mode,
    const CertifyOptions &opt = {}, int threads = 1);

}  // namespace trinoon::lp

#endif  // TRINOON_LP_HPP
