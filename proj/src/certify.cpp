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

#include <algorithm>
#include <cmath>
#include <deque>
#include <thread>

#include "trinoon/lp.hpp"

namespace trinoon::lp {

namespace {

using Box = std::array<Interval, 3>;

Box point_box(double a, double b, double g) {
  return {Interval{a, a}, Interval{b, b}, Interval{g, g}};
}

std::array<Box, 8> bisect(const Box &b) {
  std::array<Box, 8> out;
  for (int m = 0; m < 8; ++m)
    for (int ax = 0; ax < 3; ++ax) {
      const double mid = b[ax].mid();
      out[m][ax] = (m >> ax) & 1 ? Interval{mid, b[ax].hi} : Interval{b[ax].lo, mid};
    }
  return out;
}

struct Outcome {
  std::string status;
  bool verified = false;
  double margin = 0.0;
};

Outcome run_lp(const triangle::TriangleDistribution &dist, const std::string &ostar,
               const LemmaOneSplit &split, const LpSolver &solver) {
  const LpInstance inst = build_lp(dist, ostar, split);
  const FeasibilityResult res = solver.solve(inst);
  if (std::holds_alternative<Feasible>(res)) return {"feasible", false, 0.0};
  if (const auto *inf = std::get_if<Infeasible>(&res)) {
    const FarkasCheck fc = check_farkas(inst, inf->y);
    // An unverified dual is not a certificate; treat the cell as open.
    return {fc.ok ? "infeasible" : "unverified", fc.ok, fc.margin};
  }
  return {"failure", false, 0.0};
}

void certify_one(const triangle::TriangleDistribution &dist, OstarResult &res,
                 const SplitMode &mode, const CertifyOptions &opt,
                 const LpSolver &solver) {
  const std::string &o = res.ostar;
  for (int p = 0; p < 3; ++p)
    if (!dist.has_label(p, o)) {
      res.note = "label not in alphabet";
      return;
    }
  res.p_ostar = triangle::party_marginal(dist, 0, o);
  if (!check_lemma1_support(dist, o, opt.eps)) {
    res.note = "premise fails: o* occurs at two parties or marginals differ";
    return;
  }
  if (res.p_ostar > 0.25 + 1e-12) {
    res.note = "p(o*) exceeds 1/4";
    return;
  }
  if (res.p_ostar < opt.eps) {
    res.note = "p(o*) is zero";
    return;
  }
  res.band = lemma1_interval(res.p_ostar);
  const bool rigid = std::abs(res.p_ostar - 0.25) <= opt.rigid_tol;
  res.admissible = true;

  auto record = [&](const Box &box, const Outcome &oc, int level) {
    res.cells.push_back({box, oc.status, oc.verified, oc.margin, level});
    if (oc.status == "failure") res.solver_failure = true;
  };

  if (rigid) {
    // Rigid split; grid and exact mode reduce to the same single LP.
    const Outcome oc = run_lp(dist, o, LemmaOneSplit::point(0.5, 0.5, 0.5), solver);
    record(point_box(0.5, 0.5, 0.5), oc, 0);
    res.certified = oc.verified;
    return;
  }
  if (std::holds_alternative<ExactMode>(mode)) {
    res.note = "exact mode needs p(o*) = 1/4";
    res.admissible = false;
    return;
  }
  const auto &g = std::get<GridMode>(mode);
  if (g.M < 1) throw std::invalid_argument("grid size must be positive");

  // A feasible pointwise LP anywhere in the band rules out a certificate.
  auto point_feasible = [&](const Box &b) {
    const Outcome oc =
        run_lp(dist, o, LemmaOneSplit::point(b[0].mid(), b[1].mid(), b[2].mid()), solver);
    if (oc.status == "feasible") {
      record(point_box(b[0].mid(), b[1].mid(), b[2].mid()), oc, -1);
      return true;
    }
    return false;
  };
  const Box full = {res.band, res.band, res.band};
  if (point_feasible(full)) return;

  std::deque<std::pair<Box, int>> work;
  const double w = res.band.width() / g.M;
  for (int i = 0; i < g.M; ++i)
    for (int j = 0; j < g.M; ++j)
      for (int k = 0; k < g.M; ++k) {
        auto edge = [&](int t) {
          return Interval{res.band.lo + t * w, t + 1 == g.M ? res.band.hi : res.band.lo + (t + 1) * w};
        };
        work.push_back({{edge(i), edge(j), edge(k)}, 0});
      }
  while (!work.empty()) {
    auto [box, level] = work.front();
    work.pop_front();
    const Outcome oc = run_lp(dist, o, LemmaOneSplit{box}, solver);
    record(box, oc, level);
    if (oc.verified) continue;
    if (oc.status == "failure") return;
    if (level >= g.refine_levels || point_feasible(box)) return;
    for (const auto &sub : bisect(box)) work.push_back({sub, level + 1});
  }
  res.certified = true;
}

}  // namespace

std::string verdict_name(Verdict v) {
  return v == Verdict::CertifiedNonlocal ? "nonlocal" : "inconclusive";
}

Certificate certify_nonlocality(const triangle::TriangleDistribution &dist,
                                const std::vector<std::string> &ostars,
                                const SplitMode &mode, const CertifyOptions &opt,
                                const LpSolver &solver) {
  Certificate cert;
  cert.params = dist.meta;
  cert.ostars = ostars;
  cert.eps = opt.eps;
  if (const auto *g = std::get_if<GridMode>(&mode)) {
    cert.mode = "grid";
    cert.grid_M = g->M;
    cert.refine_levels = g->refine_levels;
  } else {
    cert.mode = "exact";
  }
  for (const auto &o : ostars) {
    OstarResult r;
    r.ostar = o;
    certify_one(dist, r, mode, opt, solver);
    cert.solver_failure = cert.solver_failure || r.solver_failure;
    const bool ok = r.certified;
    cert.per_ostar.push_back(std::move(r));
    if (ok) {
      cert.verdict = Verdict::CertifiedNonlocal;
      if (opt.stop_at_first) break;
    }
  }
  return cert;
}

json to_json(const Certificate &c) {
  json cells = json::array();
  json per = json::array();
  for (const auto &r : c.per_ostar) {
    json rc = json::array();
    for (const auto &cell : r.cells) {
      json box = json::array();
      for (const auto &iv : cell.box) box.push_back({iv.lo, iv.hi});
      json e = {{"box", box},
                {"status", cell.status},
                {"dual_verified", cell.dual_verified},
                {"ostar", r.ostar},
                {"level", cell.level}};
      if (cell.dual_verified) e["margin"] = cell.margin;
      cells.push_back(e);
    }
    per.push_back({{"ostar", r.ostar},
                   {"admissible", r.admissible},
                   {"note", r.note},
                   {"p_ostar", r.p_ostar},
                   {"band", {r.band.lo, r.band.hi}},
                   {"certified", r.certified},
                   {"cells_evaluated", r.cells.size()}});
  }
  return {{"params", c.params},
          {"ostar", c.ostars},
          {"mode", c.mode},
          {"grid_M", c.grid_M},
          {"refine_levels", c.refine_levels},
          {"support_eps", c.eps},
          {"solver", default_solver().name()},
          {"verdict", verdict_name(c.verdict)},
          {"solver_failure", c.solver_failure},
          {"per_ostar", per},
          {"cells", cells}};
}

std::vector<ScanPoint> scan_parameters(
    const std::vector<json> &grid,
    const std::function<triangle::TriangleDistribution(const json &)> &make,
    const std::vector<std::string> &ostars, const SplitMode &mode,
    const CertifyOptions &opt, int threads) {
  std::vector<ScanPoint> out(grid.size());
  auto work = [&](std::size_t i) {
    out[i].params = grid[i];
    try {
      out[i].cert = certify_nonlocality(make(grid[i]), ostars, mode, opt);
    } catch (const std::exception &e) {
      out[i].error = e.what();
    }
  };
  const int nt = std::max(1, std::min<int>(threads, static_cast<int>(grid.size())));
  if (nt <= 1) {
    for (std::size_t i = 0; i < grid.size(); ++i) work(i);
    return out;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < nt; ++t)
    pool.emplace_back([&, t] {
      for (std::size_t i = t; i < grid.size(); i += nt) work(i);
    });
  for (auto &th : pool) th.join();
  return out;
}

}  // namespace trinoon::lp
