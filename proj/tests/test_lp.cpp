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

#include <doctest.h>

#include <chrono>
#include <cmath>
#include <numbers>
#include <random>

#include "trinoon/finite_local.hpp"
#include "trinoon/lp.hpp"
#include "trinoon/triangle.hpp"

using namespace trinoon::lp;
namespace tri = trinoon::triangle;

namespace {

constexpr double kPi = std::numbers::pi;

tri::TriangleDistribution noiseless(double t) {
  return tri::build_triangle_distribution(tri::TiltedNoon{}, {t, kPi / 2, tri::Detector::PNRD},
                                          tri::NoNoise{}, tri::coarse_graining_by_name("pnrd5"));
}

LemmaOneSplit half() { return LemmaOneSplit::point(0.5, 0.5, 0.5); }

// Three symbols per source with left set {0}. The null outcome appears
// exactly when the first input is symbol 0 and the second is symbol 1, so
// part of each W region carries other outcomes and the r variables are
// nonzero.
tri::FiniteLocalModel three_symbol_model(std::mt19937_64 &rng) {
  std::array<std::vector<double>, 3> w;
  std::array<std::vector<std::string>, 3> al;
  std::array<std::vector<std::vector<int>>, 3> table;
  std::uniform_int_distribution<int> pick(1, 2);
  for (int p = 0; p < 3; ++p) {
    w[p] = {0.5, 0.3, 0.2};
    al[p] = {"0", "x", "y"};
    table[p].assign(3, std::vector<int>(3));
    for (int f = 0; f < 3; ++f)
      for (int s = 0; s < 3; ++s) table[p][f][s] = (f == 0 && s == 1) ? 0 : pick(rng);
  }
  return tri::deterministic_model(w, al, table);
}

// q and r as defined by the cube picture, computed by enumeration.
std::vector<double> induced_assignment(const tri::FiniteLocalModel &m, const LpInstance &inst) {
  std::vector<double> x(inst.num_vars, 0.0);
  auto chi = [&](const std::string &l) {
    for (int i = 0; i < inst.n(); ++i)
      if (inst.chi[i] == l) return i;
    return -1;
  };
  const double aL = m.weights[0][0], bL = m.weights[1][0], gL = m.weights[2][0];
  const double V = aL * bL * gL + (1 - aL) * (1 - bL) * (1 - gL);
  for (std::size_t al = 0; al < 3; ++al)
    for (std::size_t be = 0; be < 3; ++be)
      for (std::size_t ga = 0; ga < 3; ++ga) {
        double w = m.weights[0][al] * m.weights[1][be] * m.weights[2][ga];
        auto label = [&](int p, std::size_t f, std::size_t s) {
          const auto &r = m.response[p][f][s];
          int k = static_cast<int>(std::max_element(r.begin(), r.end()) - r.begin());
          return chi(m.alphabets[p][k]);
        };
        int i = label(0, be, ga), j = label(1, ga, al), k = label(2, al, be);
        if (i < 0 || j < 0 || k < 0) continue;
        bool La = al == 0, Lb = be == 0, Lg = ga == 0;
        if (La && Lb && Lg) x[inst.q_index(i, j, k, 0)] += w / V;
        else if (!La && !Lb && !Lg) x[inst.q_index(i, j, k, 1)] += w / V;
        else if (Lb && !Lg) x[inst.r_index(i, j, k, 0)] += w;
        else if (Lg && !La) x[inst.r_index(i, j, k, 1)] += w;
        else x[inst.r_index(i, j, k, 2)] += w;
      }
  return x;
}

LpInstance toy() {
  LpInstance inst;
  inst.num_vars = 1;
  inst.rows.push_back({RowKind::Equality, {{0, 1.0L}}, -1.0L, RowTag::C0});
  inst.upper = {1.0L};
  return inst;
}

}  // namespace

TEST_CASE("lemma interval") {
  auto a = lemma1_interval(0.25);
  CHECK(a.lo == 0.5);
  CHECK(a.hi == 0.5);
  auto b = lemma1_interval(0.0);
  CHECK(b.lo == 0.0);
  CHECK(b.hi == 1.0);
  auto c = lemma1_interval(3.0 / 16);
  CHECK(c.lo == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(c.hi == doctest::Approx(0.75).epsilon(1e-15));
  CHECK_NOTHROW(lemma1_interval(0.25 + 1e-13));
  CHECK_THROWS_AS(lemma1_interval(0.26), PremiseViolation);
}

TEST_CASE("premise support check") {
  CHECK(check_lemma1_support(noiseless(0.8), "0"));
  auto full = [](double eta) {
    return tri::build_triangle_distribution(tri::TiltedNoon{}, {0.82, kPi / 2, tri::Detector::PNRD},
                                            tri::FullLoss{eta}, tri::coarse_graining_by_name("lpnoise7"));
  };
  CHECK_FALSE(check_lemma1_support(full(0.9), "0"));
  CHECK(check_lemma1_support(full(0.99), "4"));
}

TEST_CASE("rigid instance structure") {
  auto inst = build_lp(noiseless(0.9), "0", half());
  CHECK(inst.num_vars == 320);
  CHECK(inst.n() == 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k)
        for (int w = 0; w < 3; ++w) CHECK(inst.fixed_zero(inst.r_index(i, j, k, w)));
  for (const auto &row : inst.rows)
    for (const auto &[v, c] : row.coeffs) {
      CHECK(v >= 0);
      CHECK(v < inst.num_vars);
    }
}

TEST_CASE("build_lp rejects bad splits") {
  auto d = noiseless(0.9);
  CHECK_THROWS(build_lp(d, "0", LemmaOneSplit::point(0.6, 0.5, 0.5)));
  auto full = tri::build_triangle_distribution(tri::TiltedNoon{}, {0.82, kPi / 2, tri::Detector::PNRD},
                                               tri::FullLoss{0.9}, tri::coarse_graining_by_name("lpnoise7"));
  CHECK_THROWS(build_lp(full, "0", half()));
}

TEST_CASE("local model assignment satisfies every row") {
  std::mt19937_64 rng(17);
  for (int rep = 0; rep < 10; ++rep) {
    auto m = three_symbol_model(rng);
    auto d = m.distribution();
    REQUIRE(check_lemma1_support(d, "0"));
    auto inst = build_lp(d, "0", half());
    auto x = induced_assignment(m, inst);
    double rmass = 0;
    for (int v = 2 * 8; v < inst.num_vars; ++v) rmass += x[v];
    CHECK(rmass > 0.0);
    CHECK(max_violation(inst, x) < 1e-12);
    // The relaxed rows on a cell around the true split hold as well.
    LemmaOneSplit cell{{Interval{0.45, 0.55}, Interval{0.45, 0.55}, Interval{0.45, 0.55}}};
    auto relaxed = build_lp(d, "0", cell);
    CHECK(relaxed.relaxed);
    CHECK(max_violation(relaxed, induced_assignment(m, relaxed)) < 1e-12);
  }
}

TEST_CASE("toy infeasible instance") {
  auto inst = toy();
  auto res = solve_feasibility(inst);
  REQUIRE(std::holds_alternative<Infeasible>(res));
  auto y = std::get<Infeasible>(res).y;
  CHECK(verify_farkas(inst, y));
  CHECK_FALSE(verify_farkas(inst, std::vector<double>(y.size(), 0.0)));
  auto flipped = y;
  flipped[0] = -flipped[0];
  CHECK_FALSE(verify_farkas(inst, flipped));
  CHECK_THROWS(verify_farkas(inst, std::vector<double>(3, 1.0)));
}

TEST_CASE("noiseless instances") {
  auto t0 = std::chrono::steady_clock::now();
  auto inf = build_lp(noiseless(0.9), "0", half());
  auto r = solve_feasibility(inf);
  REQUIRE(std::holds_alternative<Infeasible>(r));
  CHECK(verify_farkas(inf, std::get<Infeasible>(r).y));
  auto flipped = std::get<Infeasible>(r).y;
  for (auto &v : flipped) v = -v;
  CHECK_FALSE(verify_farkas(inf, flipped));

  auto fea = build_lp(noiseless(0.70), "0", half());
  auto f = solve_feasibility(fea);
  REQUIRE(std::holds_alternative<Feasible>(f));
  CHECK(max_violation(fea, std::get<Feasible>(f).x) < 1e-9);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 2.0);
}

TEST_CASE("certify examples") {
  auto c = certify_nonlocality(noiseless(0.99), {"0", "4"}, ExactMode{});
  CHECK(c.verdict == Verdict::CertifiedNonlocal);
  for (const auto &o : c.per_ostar) {
    CHECK(o.certified);
    for (const auto &cell : o.cells)
      if (cell.status == "infeasible") CHECK(cell.dual_verified);
  }
  auto single = tri::build_triangle_distribution(tri::TiltedNoon{}, {0.97, kPi / 2, tri::Detector::PNRD},
                                                 tri::SingleLoss{0.92}, tri::coarse_graining_by_name("lpnoise7"));
  CHECK(certify_nonlocality(single, {"0"}, ExactMode{}).verdict == Verdict::CertifiedNonlocal);
  for (double eta : {0.9, 0.99}) {
    auto click = tri::build_triangle_distribution(tri::TiltedNoon{}, {0.9, kPi / 2, tri::Detector::ClickNoClick},
                                                  tri::FullLoss{eta}, tri::coarse_graining_by_name("click4"));
    auto cc = certify_nonlocality(click, {"0"}, GridMode{2, 0});
    CHECK(cc.verdict == Verdict::Inconclusive);
    CHECK_FALSE(cc.per_ostar[0].admissible);
  }
  auto j = to_json(c);
  for (const char *k : {"params", "ostar", "mode", "grid_M", "verdict", "per_ostar"}) CHECK(j.contains(k));
  CHECK(j["verdict"] == "nonlocal");
}

TEST_CASE("grid and exact agree on rigid splits") {
  for (double t : {0.7, 0.9}) {
    auto d = noiseless(t);
    auto e = certify_nonlocality(d, {"0"}, ExactMode{});
    auto g = certify_nonlocality(d, {"0"}, GridMode{8, 2});
    CHECK(e.verdict == g.verdict);
  }
}

TEST_CASE("relaxation is sound on random points of a cell") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(0, 1);
  int feasible_points = 0;
  for (int rep = 0; rep < 4; ++rep) {
    auto m = tri::random_premise_model(rng, 3, {"0", "x", "y"}, "0", rep % 2 == 0);
    auto d = m.distribution();
    double p = tri::party_marginal(d, 0, "0");
    if (!check_lemma1_support(d, "0") || p >= 0.25 - 1e-6 || p <= 1e-6) continue;
    auto band = lemma1_interval(p);
    double w = band.width() / 4;
    LemmaOneSplit cell{{Interval{0.5 - w, 0.5 + w}, Interval{0.5 - w, 0.5 + w}, Interval{0.5 - w, 0.5 + w}}};
    bool relaxed_feasible = std::holds_alternative<Feasible>(solve_feasibility(build_lp(d, "0", cell)));
    for (int k = 0; k < 25; ++k) {
      auto pt = LemmaOneSplit::point(0.5 - w + 2 * w * u(rng), 0.5 - w + 2 * w * u(rng),
                                     0.5 - w + 2 * w * u(rng));
      auto r = solve_feasibility(build_lp(d, "0", pt));
      REQUIRE_FALSE(std::holds_alternative<SolverFailure>(r));
      if (std::holds_alternative<Feasible>(r)) {
        ++feasible_points;
        CHECK(relaxed_feasible);
      }
    }
  }
  CHECK(feasible_points > 0);
}

TEST_CASE("threshold sweep changes verdict once") {
  std::vector<json> grid;
  for (int k = 0; k <= 50; ++k) grid.push_back({{"t", 0.70 + 0.005 * k}});
  auto pts = scan_parameters(grid, [](const json &p) { return noiseless(p.at("t").get<double>()); },
                             {"0"}, ExactMode{});
  REQUIRE(pts.size() == grid.size());
  int changes = 0;
  double flip = -1;
  for (std::size_t k = 1; k < pts.size(); ++k)
    if (pts[k].cert.verdict != pts[k - 1].cert.verdict) {
      ++changes;
      flip = pts[k].params.at("t").get<double>();
    }
  CHECK(changes == 1);
  CHECK(flip == doctest::Approx(0.765).epsilon(1e-9));
  CHECK(pts[0].cert.verdict == Verdict::Inconclusive);
  CHECK(scan_parameters({}, [](const json &) { return noiseless(0.9); }, {"0"}, ExactMode{}).empty());
}

TEST_CASE("sweep records per point errors") {
  std::vector<json> grid{{{"t", 0.9}}, {{"t", 2.0}}};
  auto pts = scan_parameters(grid, [](const json &p) {
    double t = p.at("t").get<double>();
    if (t > 1) throw std::invalid_argument("t outside [0,1]");
    return noiseless(t);
  }, {"0"}, ExactMode{});
  CHECK(pts[0].error.empty());
  CHECK_FALSE(pts[1].error.empty());
}

TEST_CASE("local models are never certified") {
  std::mt19937_64 rng(5);
  for (int rep = 0; rep < 30; ++rep) {
    auto m = tri::random_premise_model(rng, 2 + rep % 3, {"0", "x", "y", "z"}, "0", rep % 2 == 0);
    auto d = m.distribution();
    if (!check_lemma1_support(d, "0")) continue;
    double p = tri::party_marginal(d, 0, "0");
    SplitMode mode = std::abs(p - 0.25) < 1e-9 ? SplitMode{ExactMode{}} : SplitMode{GridMode{2, 1}};
    CHECK(certify_nonlocality(d, {"0"}, mode).verdict == Verdict::Inconclusive);
  }
}
