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
#include <stdexcept>

#include "trinoon/lp.hpp"

namespace trinoon::lp {

namespace {

constexpr real kWiden = 1e-15L;

struct RI {
  real lo, hi;
};

RI widen(RI x) {
  return {x.lo - std::fabs(x.lo) * kWiden - 1e-300L,
          x.hi + std::fabs(x.hi) * kWiden + 1e-300L};
}

RI mul_nonneg(RI a, RI b) { return {a.lo * b.lo, a.hi * b.hi}; }
RI neg(RI a) { return {-a.hi, -a.lo}; }
RI comp(RI a) { return {1 - a.hi, 1 - a.lo}; }

// Exact range of the multilinear V over the box, from its eight vertices.
RI v_range(const LemmaOneSplit &s) {
  real lo = 1e9L, hi = -1e9L;
  for (int m = 0; m < 8; ++m) {
    const real a = (m & 1) ? s.box[0].hi : s.box[0].lo;
    const real b = (m & 2) ? s.box[1].hi : s.box[1].lo;
    const real g = (m & 4) ? s.box[2].hi : s.box[2].lo;
    const real v = a * b * g + (1 - a) * (1 - b) * (1 - g);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  return {lo, hi};
}

// Builds the row sum c_j x_j = b with interval data. Degenerate data gives
// one equality; otherwise the sound pair sum lo_j x_j <= b_hi and
// sum hi_j x_j >= b_lo.
void emit(std::vector<Row> &rows, RowTag tag,
          const std::vector<std::pair<int, RI>> &c, RI b, bool relaxed) {
  bool degenerate = !relaxed && b.lo == b.hi;
  if (degenerate)
    for (const auto &e : c) degenerate = degenerate && e.second.lo == e.second.hi;
  if (degenerate) {
    Row r{RowKind::Equality, {}, b.lo, tag};
    for (const auto &[j, v] : c) r.coeffs.push_back({j, v.lo});
    rows.push_back(std::move(r));
    return;
  }
  Row lo{RowKind::LessEqual, {}, b.hi, tag};
  Row hi{RowKind::LessEqual, {}, -b.lo, tag};
  for (const auto &[j, v] : c) {
    lo.coeffs.push_back({j, v.lo});
    hi.coeffs.push_back({j, -v.hi});
  }
  rows.push_back(std::move(lo));
  rows.push_back(std::move(hi));
}

}  // namespace

const char *tag_name(RowTag t) {
  switch (t) {
    case RowTag::C0: return "C0";
    case RowTag::C1: return "C1";
    case RowTag::C2: return "C2";
    case RowTag::C3: return "C3";
  }
  return "?";
}

int LpInstance::q_index(int i, int j, int k, int s) const {
  const int nn = n();
  return ((i * nn + j) * nn + k) * 2 + s;
}

int LpInstance::r_index(int i, int j, int k, int w) const {
  const int nn = n();
  return 2 * nn * nn * nn + ((i * nn + j) * nn + k) * 3 + w;
}

Interval lemma1_interval(double p_ostar) {
  if (p_ostar < 0.0) throw std::invalid_argument("negative probability");
  if (p_ostar > 0.25 + 1e-12)
    throw PremiseViolation("p(o*) exceeds 1/4; the lemma does not apply");
  // Rounding in p(o*) near 1/4 would open a band of width ~sqrt(ulp).
  if (std::abs(p_ostar - 0.25) <= 1e-12) return {0.5, 0.5};
  const double h = 0.5 * std::sqrt(std::max(0.0, 1.0 - 4.0 * p_ostar));
  return {0.5 - h, 0.5 + h};
}

bool check_lemma1_support(const triangle::TriangleDistribution &dist,
                          const std::string &ostar, double eps) {
  for (int p = 0; p < 3; ++p)
    if (!dist.has_label(p, ostar)) return false;
  using triangle::pair_marginal;
  using triangle::party_marginal;
  if (pair_marginal(dist, 0, ostar, 1, ostar) >= eps) return false;
  if (pair_marginal(dist, 1, ostar, 2, ostar) >= eps) return false;
  if (pair_marginal(dist, 0, ostar, 2, ostar) >= eps) return false;
  const double pa = party_marginal(dist, 0, ostar);
  const double pb = party_marginal(dist, 1, ostar);
  const double pc = party_marginal(dist, 2, ostar);
  return std::abs(pa - pb) < eps && std::abs(pb - pc) < eps && std::abs(pa - pc) < eps;
}

LpInstance build_lp(const triangle::TriangleDistribution &dist,
                    const std::string &ostar, const LemmaOneSplit &split) {
  if (dist.alphabets[0] != dist.alphabets[1] || dist.alphabets[1] != dist.alphabets[2])
    throw std::invalid_argument("all parties must share one alphabet");
  if (!check_lemma1_support(dist, ostar))
    throw PremiseViolation("o* = '" + ostar + "' fails the lemma premise");
  for (const auto &iv : split.box) {
    if (!(iv.lo > 0.0 && iv.hi < 1.0 && iv.lo <= iv.hi))
      throw std::invalid_argument("split must lie strictly inside (0,1)");
  }
  const double p_o = triangle::party_marginal(dist, 0, ostar);
  const Interval band = lemma1_interval(p_o);
  for (const auto &iv : split.box)
    if (iv.lo < band.lo - 1e-12 || iv.hi > band.hi + 1e-12)
      throw std::invalid_argument("split outside the lemma band");

  LpInstance inst;
  inst.ostar = ostar;
  for (const auto &l : dist.alphabets[0])
    if (l != ostar) inst.chi.push_back(l);
  const int n = inst.n();
  const int o = dist.label_index(0, ostar);
  std::vector<int> chi_idx;
  for (int l = 0; l < static_cast<int>(dist.size(0)); ++l)
    if (l != o) chi_idx.push_back(l);
  inst.num_vars = 5 * n * n * n;
  inst.upper.assign(inst.num_vars, 1.0L);
  inst.split = split;
  inst.relaxed = !split.is_point();
  const bool relaxed = inst.relaxed;

  auto iv = [&](const Interval &x) { return RI{x.lo, x.hi}; };
  auto fix = [&](RI x) { return relaxed ? widen(x) : x; };
  const RI aL = iv(split.box[0]), bL = iv(split.box[1]), gL = iv(split.box[2]);
  const RI aR = comp(aL), bR = comp(bL), gR = comp(gL);
  const RI V = v_range(split);
  const RI one{1, 1};

  // Marginals.
  const real pA = triangle::party_marginal(dist, 0, ostar);
  const real pB = triangle::party_marginal(dist, 1, ostar);
  const real pC = triangle::party_marginal(dist, 2, ostar);
  auto pair = [&](int p1, int l1, int p2, int l2) -> real {
    real s = 0;
    for (std::size_t a = 0; a < dist.size(0); ++a)
      for (std::size_t b = 0; b < dist.size(1); ++b)
        for (std::size_t c = 0; c < dist.size(2); ++c) {
          const int idx[3] = {static_cast<int>(a), static_cast<int>(b), static_cast<int>(c)};
          if (idx[p1] == l1 && idx[p2] == l2) s += dist.p(a, b, c);
        }
    return s;
  };

  auto &rows = inst.rows;
  // C0: normalization of q.
  {
    Row r{RowKind::Equality, {}, 1, RowTag::C0};
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k)
          for (int s = 0; s < 2; ++s) r.coeffs.push_back({inst.q_index(i, j, k, s), 1});
    rows.push_back(std::move(r));
  }
  // C1: V (qL + qR) + rA + rB + rC = p(i,j,k).
  const RI Vf = fix(V);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const real pv = dist.p(chi_idx[i], chi_idx[j], chi_idx[k]);
        std::vector<std::pair<int, RI>> c = {{inst.q_index(i, j, k, 0), Vf},
                                             {inst.q_index(i, j, k, 1), Vf}};
        for (int w = 0; w < 3; ++w) c.push_back({inst.r_index(i, j, k, w), one});
        emit(rows, RowTag::C1, c, {pv, pv}, relaxed);
      }
  // C2: total r mass per party.
  const RI c2[3] = {mul_nonneg(bL, gR), mul_nonneg(gL, aR), mul_nonneg(aL, bR)};
  const real pw[3] = {pA, pB, pC};
  for (int w = 0; w < 3; ++w) {
    RI rhs = fix(RI{c2[w].lo - pw[w], c2[w].hi - pw[w]});
    if (!relaxed && std::fabs(rhs.lo) <= 1e-9L) {
      // Rigid split: the r block of this party is empty.
      rhs = {0, 0};
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
          for (int k = 0; k < n; ++k) inst.upper[inst.r_index(i, j, k, w)] = 0;
    }
    std::vector<std::pair<int, RI>> c;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        for (int k = 0; k < n; ++k) c.push_back({inst.r_index(i, j, k, w), one});
    emit(rows, RowTag::C2, c, rhs, relaxed);
  }
  // C3: marginal consistency, one family per party.
  struct Fam {
    RI xL, xR;
    int party, wminus, wplus, p_minus, p_plus;
  };
  // Party A: -aL r(B) + aR r(C) = aL p(a, b=o*) - aR p(a, c=o*), etc.
  const Fam fams[3] = {{aL, aR, 0, 1, 2, 1, 2}, {bL, bR, 1, 2, 0, 2, 0}, {gL, gR, 2, 0, 1, 0, 1}};
  for (const auto &f : fams) {
    const RI qL = fix(mul_nonneg(f.xR, V));
    const RI qR = fix(neg(mul_nonneg(f.xL, V)));
    const RI rm = fix(neg(f.xL));
    const RI rp = fix(f.xR);
    for (int x = 0; x < n; ++x) {
      const real P1 = pair(f.party, chi_idx[x], f.p_minus, o);
      const real P2 = pair(f.party, chi_idx[x], f.p_plus, o);
      const RI rhs = fix(RI{f.xL.lo * (P1 + P2) - P2, f.xL.hi * (P1 + P2) - P2});
      std::vector<std::pair<int, RI>> c;
      for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v) {
          int t[3];
          t[f.party] = x;
          t[(f.party + 1) % 3] = u;
          t[(f.party + 2) % 3] = v;
          c.push_back({inst.q_index(t[0], t[1], t[2], 0), qL});
          c.push_back({inst.q_index(t[0], t[1], t[2], 1), qR});
          c.push_back({inst.r_index(t[0], t[1], t[2], f.wminus), rm});
          c.push_back({inst.r_index(t[0], t[1], t[2], f.wplus), rp});
        }
      emit(rows, RowTag::C3, c, rhs, relaxed);
    }
  }
  return inst;
}

double max_violation(const LpInstance &inst, const std::vector<double> &x) {
  double worst = 0.0;
  for (int j = 0; j < inst.num_vars; ++j) {
    worst = std::max(worst, -x[j]);
    if (inst.fixed_zero(j)) worst = std::max(worst, std::fabs(x[j]));
  }
  for (const auto &r : inst.rows) {
    real s = 0;
    for (const auto &[j, c] : r.coeffs) s += c * x[j];
    const double d = static_cast<double>(s - r.rhs);
    worst = std::max(worst, r.kind == RowKind::Equality ? std::fabs(d) : d);
  }
  return worst;
}

}  // namespace trinoon::lp
