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

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "trinoon/lp.hpp"

namespace trinoon::lp {

namespace {

struct Entry {
  int row;
  double val;
};

FeasibilityResult phase_one(const LpInstance &inst, const SimplexOptions &opt_) {
  const int m = static_cast<int>(inst.rows.size());
  if (m == 0) return Feasible{std::vector<double>(inst.num_vars, 0.0)};

  // Columns: active structurals, then one slack per inequality row, then
  // one artificial per row that needs it.
  std::vector<int> col_var;
  std::vector<int> var_col(inst.num_vars, -1);
  for (int j = 0; j < inst.num_vars; ++j)
    if (!inst.fixed_zero(j)) {
      var_col[j] = static_cast<int>(col_var.size());
      col_var.push_back(j);
    }
  const int ns = static_cast<int>(col_var.size());
  std::vector<std::vector<Entry>> cols(ns);
  Eigen::VectorXd b(m);
  std::vector<double> sign(m, 1.0);
  for (int i = 0; i < m; ++i) {
    const auto &r = inst.rows[i];
    sign[i] = r.rhs < 0 ? -1.0 : 1.0;
    b(i) = sign[i] * static_cast<double>(r.rhs);
    for (const auto &[j, c] : r.coeffs) {
      const int col = var_col[j];
      if (col < 0 || c == 0) continue;
      cols[col].push_back({i, sign[i] * static_cast<double>(c)});
    }
  }
  std::vector<int> basis(m, -1);
  std::vector<double> cost;
  cost.assign(ns, 0.0);
  for (int i = 0; i < m; ++i) {
    if (inst.rows[i].kind == RowKind::LessEqual) {
      cols.push_back({{i, sign[i]}});
      cost.push_back(0.0);
      if (sign[i] > 0) basis[i] = static_cast<int>(cols.size()) - 1;
    }
  }
  // Every row gets an artificial so a singular basis can be repaired.
  const int first_art = static_cast<int>(cols.size());
  for (int i = 0; i < m; ++i) {
    cols.push_back({{i, 1.0}});
    cost.push_back(1.0);
    if (basis[i] < 0) basis[i] = first_art + i;
  }
  const int ncols = static_cast<int>(cols.size());
  std::vector<char> in_basis(ncols, 0);
  for (int i = 0; i < m; ++i) in_basis[basis[i]] = 1;

  const double bscale = 1.0 + b.cwiseAbs().maxCoeff();
  Eigen::MatrixXd Binv = Eigen::MatrixXd::Identity(m, m);
  Eigen::VectorXd xB = b;
  Eigen::VectorXd cB(m);

  auto basis_matrix = [&]() {
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(m, m);
    for (int i = 0; i < m; ++i)
      for (const auto &e : cols[basis[i]]) B(e.row, i) = e.val;
    return B;
  };
  // Swaps dependent basis columns for the artificials of the rows they
  // leave uncovered. Redundant equality rows make this necessary.
  auto repair = [&]() -> bool {
    Eigen::FullPivLU<Eigen::MatrixXd> lu(basis_matrix());
    lu.setThreshold(1e-11);
    const int rank = static_cast<int>(lu.rank());
    if (rank == m) return true;
    const auto &P = lu.permutationP().indices();
    const auto &Q = lu.permutationQ().indices();
    std::vector<int> row_at(m);
    for (int j = 0; j < m; ++j) row_at[P[j]] = j;
    for (int k = rank; k < m; ++k) {
      in_basis[basis[Q[k]]] = 0;
      basis[Q[k]] = first_art + row_at[k];
      in_basis[basis[Q[k]]] = 1;
    }
    return true;
  };
  auto refactor = [&]() -> bool {
    for (int attempt = 0; attempt < 2; ++attempt) {
      Eigen::PartialPivLU<Eigen::MatrixXd> lu(basis_matrix());
      const auto &U = lu.matrixLU();
      const double umax = U.diagonal().cwiseAbs().maxCoeff();
      const double umin = U.diagonal().cwiseAbs().minCoeff();
      if (std::isfinite(umax) && umin > 1e-11 * umax) {
        Binv = lu.inverse();
        xB = Binv * b;
        if (!xB.allFinite() || xB.minCoeff() < -1e3 * opt_.feas_tol * bscale) return false;
        for (int i = 0; i < m; ++i)
          if (xB(i) < 0) xB(i) = 0;
        return true;
      }
      repair();
    }
    return false;
  };

  long iter = 0;
  int since_refactor = 0;
  int degenerate_run = 0;
  bool bland = false;
  Eigen::VectorXd y(m), w(m);
  for (;;) {
    if (++iter > opt_.max_iterations)
      return SolverFailure{"iteration limit reached"};
    for (int i = 0; i < m; ++i) cB(i) = cost[basis[i]];
    y.noalias() = Binv.transpose() * cB;

    // Pricing.
    int q = -1;
    double best = -opt_.opt_tol;
    for (int j = 0; j < ncols; ++j) {
      if (in_basis[j]) continue;
      if (j >= first_art) continue;  // artificials never re-enter
      double d = cost[j];
      for (const auto &e : cols[j]) d -= y(e.row) * e.val;
      if (bland) {
        if (d < -opt_.opt_tol) {
          q = j;
          break;
        }
      } else if (d < best) {
        best = d;
        q = j;
      }
    }
    if (q < 0) break;

    w.setZero();
    for (const auto &e : cols[q]) w.noalias() += e.val * Binv.col(e.row);

    // Ratio test, Harris style unless anti-cycling is active. Pivots are
    // judged relative to the largest entry of the column.
    int r = -1;
    const double ptol = opt_.pivot_tol * std::max(1.0, w.cwiseAbs().maxCoeff());
    if (bland) {
      double tmin = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i) {
        if (w(i) <= ptol) continue;
        const double t = std::max(0.0, xB(i)) / w(i);
        if (t < tmin - 1e-15 || (t <= tmin + 1e-15 && r >= 0 && basis[i] < basis[r])) {
          tmin = t;
          r = i;
        }
      }
    } else {
      double tmax = std::numeric_limits<double>::infinity();
      for (int i = 0; i < m; ++i)
        if (w(i) > ptol)
          tmax = std::min(tmax, (std::max(0.0, xB(i)) + opt_.feas_tol) / w(i));
      double wbest = 0.0;
      for (int i = 0; i < m; ++i)
        if (w(i) > ptol && std::max(0.0, xB(i)) / w(i) <= tmax && w(i) > wbest) {
          wbest = w(i);
          r = i;
        }
    }
    if (r < 0) return SolverFailure{"unbounded phase one direction"};

    const double theta = std::max(0.0, xB(r)) / w(r);
    if (theta < 1e-12) {
      if (++degenerate_run > 50) bland = true;
    } else {
      degenerate_run = 0;
      bland = false;
    }
    xB.noalias() -= theta * w;
    xB(r) = theta;
    for (int i = 0; i < m; ++i)
      if (xB(i) < 0 && xB(i) > -opt_.feas_tol) xB(i) = 0;

    // Pivot the basis inverse.
    const double piv = w(r);
    Binv.row(r) /= piv;
    for (int i = 0; i < m; ++i) {
      if (i == r || w(i) == 0.0) continue;
      Binv.row(i).noalias() -= w(i) * Binv.row(r);
    }
    in_basis[basis[r]] = 0;
    basis[r] = q;
    in_basis[q] = 1;

    if (++since_refactor >= opt_.refactor_every) {
      since_refactor = 0;
      if (!refactor()) return SolverFailure{"singular basis"};
    }
  }
  if (!refactor()) return SolverFailure{"singular basis"};
  double obj = 0.0;
  for (int i = 0; i < m; ++i) obj += cost[basis[i]] * std::max(0.0, xB(i));

  if (obj <= opt_.feas_tol * bscale) {
    std::vector<double> x(inst.num_vars, 0.0);
    for (int i = 0; i < m; ++i)
      if (basis[i] < ns) x[col_var[basis[i]]] = std::max(0.0, xB(i));
    const double viol = max_violation(inst, x);
    if (viol > 1e-9)
      return SolverFailure{"feasible point violates rows by " + std::to_string(viol)};
    return Feasible{std::move(x)};
  }
  // Phase one optimum is positive: its duals give the certificate.
  for (int i = 0; i < m; ++i) cB(i) = cost[basis[i]];
  y.noalias() = Binv.transpose() * cB;
  std::vector<double> z(m);
  double zmax = 0.0;
  for (int i = 0; i < m; ++i) {
    z[i] = -y(i) * sign[i];
    if (inst.rows[i].kind == RowKind::LessEqual && z[i] < 0) z[i] = 0.0;
    zmax = std::max(zmax, std::abs(z[i]));
  }
  if (zmax == 0.0) return SolverFailure{"empty dual certificate"};
  for (double &v : z) v /= zmax;
  return Infeasible{std::move(z)};
}

}  // namespace

FeasibilityResult SimplexSolver::solve(const LpInstance &inst) const {
  auto r = phase_one(inst, opt_);
  if (!std::holds_alternative<SolverFailure>(r)) return r;
  // Nearly parallel relaxed rows can make the updated inverse drift into a
  // singular basis. Retry refactoring at every pivot with a stricter pivot
  // threshold; this is slow but rare.
  SimplexOptions careful = opt_;
  careful.refactor_every = 1;
  careful.pivot_tol = std::max(opt_.pivot_tol, 1e-7);
  auto again = phase_one(inst, careful);
  if (!std::holds_alternative<SolverFailure>(again)) return again;
  return SolverFailure{std::get<SolverFailure>(r).reason + "; retry: " + std::get<SolverFailure>(again).reason};
}

const LpSolver &default_solver() {
  static const SimplexSolver s;
  return s;
}

FeasibilityResult solve_feasibility(const LpInstance &inst, const LpSolver &solver) {
  return solver.solve(inst);
}

}  // namespace trinoon::lp
