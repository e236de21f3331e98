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

#include "trinoon/triangle.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace trinoon::triangle {

using fock::cplx;
using fock::Ensemble;
using fock::Occupation;
using fock::PureStateVec;

namespace {

constexpr double kClipTol = 1e-12;

void check_unit(double x, const char *what) {
  if (!(x >= 0.0 && x <= 1.0))
    throw std::invalid_argument(std::string(what) + " outside [0,1]");
}

PureStateVec two_mode(std::initializer_list<std::pair<Occupation, cplx>> terms) {
  PureStateVec s(2);
  for (const auto &[o, a] : terms) s.add(o, a);
  s.prune();
  return s;
}

// Party readouts ordered by total photon number, then left count descending.
std::vector<std::pair<int, int>> party_outputs(int max_total) {
  std::vector<std::pair<int, int>> out;
  for (int tot = 0; tot <= max_total; ++tot)
    for (int l = tot; l >= 0; --l) out.push_back({l, tot - l});
  return out;
}

std::string click_label(int l, int r) {
  if (l > 0 && r > 0) return "LR";
  if (l > 0) return "L";
  if (r > 0) return "R";
  return "0";
}

const std::vector<std::string> &click_alphabet() {
  static const std::vector<std::string> a = {"0", "L", "R", "LR"};
  return a;
}

json source_json(const SourceSpec &s) {
  return std::visit(
      [](const auto &v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TiltedNoon>)
          return {{"kind", "tilted"}, {"N", v.N}, {"lambda0sq", v.lambda0 * v.lambda0}};
        else if constexpr (std::is_same_v<T, DephasedNoon>)
          return {{"kind", "dephased"}, {"N", v.N}, {"d", v.d}};
        else
          return {{"kind", "spdc"}, {"Q", v.Q}};
      },
      s);
}

json noise_json(const NoiseSpec &n) {
  return std::visit(
      [](const auto &v) -> json {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, NoNoise>)
          return {{"kind", "none"}};
        else if constexpr (std::is_same_v<T, FullLoss>)
          return {{"kind", "full"}, {"eta", v.eta}};
        else
          return {{"kind", "single"}, {"eta", v.eta}};
      },
      n);
}

Ensemble noisy_source(const SourceSpec &source, const NoiseSpec &noise) {
  Ensemble src = make_source(source);
  if (!std::holds_alternative<NoNoise>(noise)) {
    const auto ch = make_loss_channel(noise, source_max_photons(source));
    src = fock::apply_kraus_channel(src, ch, 0);
    src = fock::apply_kraus_channel(src, ch, 1);
  }
  return fock::compress(src);
}

json base_meta(const SourceSpec &source, const MeasurementSpec &meas,
               const NoiseSpec &noise) {
  const int k = source_max_photons(source);
  return {{"source", source_json(source)},
          {"noise", noise_json(noise)},
          {"t", meas.t},
          {"phi", meas.phi},
          {"detector", detector_name(meas.detector)},
          {"truncation", {{"per_mode", k}, {"per_party", 2 * k}}},
          {"wiring", kWiring},
          {"seedless", true}};
}

void clip_and_check(TriangleDistribution &d) {
  for (double &x : d.probs) {
    if (x < 0.0 && x >= -kClipTol) x = 0.0;
    if (x < 0.0) throw std::runtime_error("negative probability");
  }
}

}  // namespace

int TriangleDistribution::label_index(int party, const std::string &label) const {
  const auto &al = alphabets.at(party);
  auto it = std::find(al.begin(), al.end(), label);
  if (it == al.end())
    throw std::out_of_range("unknown label '" + label + "' for party " +
                            std::to_string(party));
  return static_cast<int>(it - al.begin());
}

bool TriangleDistribution::has_label(int party, const std::string &label) const {
  const auto &al = alphabets.at(party);
  return std::find(al.begin(), al.end(), label) != al.end();
}

double TriangleDistribution::prob(const std::string &a, const std::string &b,
                                  const std::string &c) const {
  return p(label_index(0, a), label_index(1, b), label_index(2, c));
}

double TriangleDistribution::total() const {
  double s = 0.0;
  for (double x : probs) s += x;
  return s;
}

TriangleDistribution TriangleDistribution::zeros(
    std::array<std::vector<std::string>, 3> al) {
  TriangleDistribution d;
  d.alphabets = std::move(al);
  d.probs.assign(d.alphabets[0].size() * d.alphabets[1].size() *
                     d.alphabets[2].size(),
                 0.0);
  return d;
}

std::string count_label(int left, int right) {
  return "(" + std::to_string(left) + "," + std::to_string(right) + ")";
}

bool parse_count_label(const std::string &s, int &left, int &right) {
  if (s.size() < 5 || s.front() != '(' || s.back() != ')') return false;
  auto comma = s.find(',');
  if (comma == std::string::npos) return false;
  try {
    std::size_t p1 = 0, p2 = 0;
    const std::string a = s.substr(1, comma - 1);
    const std::string b = s.substr(comma + 1, s.size() - comma - 2);
    left = std::stoi(a, &p1);
    right = std::stoi(b, &p2);
    return p1 == a.size() && p2 == b.size() && left >= 0 && right >= 0;
  } catch (const std::exception &) {
    return false;
  }
}

int source_max_photons(const SourceSpec &spec) {
  return std::visit(
      [](const auto &v) -> int {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, SpdcHeralded>)
          return 4;
        else
          return v.N;
      },
      spec);
}

Ensemble make_source(const SourceSpec &spec) {
  return std::visit(
      [](const auto &v) -> Ensemble {
        using T = std::decay_t<decltype(v)>;
        if constexpr (std::is_same_v<T, TiltedNoon>) {
          if (v.N < 1) throw std::invalid_argument("N must be at least 1");
          check_unit(v.lambda0, "lambda0");
          const double l1 = std::sqrt(std::max(0.0, 1.0 - v.lambda0 * v.lambda0));
          return Ensemble::pure(two_mode({{{0, v.N}, v.lambda0}, {{v.N, 0}, l1}}));
        } else if constexpr (std::is_same_v<T, DephasedNoon>) {
          if (v.N < 1) throw std::invalid_argument("N must be at least 1");
          check_unit(v.d, "d");
          const double s = std::sqrt(0.5);
          Ensemble e;
          if (v.d < 1.0)
            e.branches.push_back({1.0 - v.d, two_mode({{{0, v.N}, s}, {{v.N, 0}, s}})});
          if (v.d > 0.0) {
            e.branches.push_back({v.d / 2, two_mode({{{0, v.N}, 1.0}})});
            e.branches.push_back({v.d / 2, two_mode({{{v.N, 0}, 1.0}})});
          }
          return e;
        } else {
          if (!(v.Q >= 0.0 && v.Q < 1.0))
            throw std::invalid_argument("Q outside [0,1)");
          // Heralded arms (1-Q)|1> + Q|2>, combined on a balanced splitter.
          // phi = pi/2 gives the + relative sign of the ideal N00N state.
          Ensemble e;
          const double w[3] = {0.0, 1.0 - v.Q, v.Q};
          double total = 0.0;
          for (int m = 1; m <= 2; ++m)
            for (int n = 1; n <= 2; ++n) total += w[m] * w[n];
          for (int m = 1; m <= 2; ++m) {
            for (int n = 1; n <= 2; ++n) {
              const double wt = w[m] * w[n] / total;
              if (wt <= 0.0) continue;
              PureStateVec s = fock::apply_two_mode_unitary(
                  PureStateVec::basis({m, n}), 0.5, std::numbers::pi / 2, {0, 1});
              e.branches.push_back({wt, s});
            }
          }
          return e;
        }
      },
      spec);
}

fock::KrausChannel make_loss_channel(const NoiseSpec &noise, int cap) {
  fock::KrausChannel ch;
  for (int n = 0; n <= cap; ++n) ch.support.insert(n);
  if (std::holds_alternative<NoNoise>(noise)) {
    fock::SparseOp id;
    for (int n = 0; n <= cap; ++n) id[{n, n}] = 1.0;
    ch.operators.push_back(id);
    return ch;
  }
  if (const auto *f = std::get_if<FullLoss>(&noise)) {
    check_unit(f->eta, "eta");
    // E_k |n> = sqrt(C(n,k) eta^(n-k) (1-eta)^k) |n-k>
    for (int k = 0; k <= cap; ++k) {
      fock::SparseOp op;
      for (int n = k; n <= cap; ++n) {
        double c = 1.0;
        for (int i = 1; i <= k; ++i) c = c * (n - k + i) / i;
        const double a = std::sqrt(c * std::pow(f->eta, n - k) * std::pow(1.0 - f->eta, k));
        if (a > 0.0) op[{n - k, n}] = a;
      }
      if (!op.empty()) ch.operators.push_back(op);
    }
    return ch;
  }
  const auto &s = std::get<SingleLoss>(noise);
  check_unit(s.eta, "eta");
  // At most one photon lost per mode: E0 = eta^(n/2), E1 = sqrt(1-eta^n) a.
  fock::SparseOp e0, e1;
  for (int n = 0; n <= cap; ++n) {
    e0[{n, n}] = std::pow(s.eta, 0.5 * n);
    if (n >= 1) {
      const double a = std::sqrt(std::max(0.0, 1.0 - std::pow(s.eta, n)));
      if (a > 0.0) e1[{n - 1, n}] = a;
    }
  }
  ch.operators.push_back(e0);
  if (!e1.empty()) ch.operators.push_back(e1);
  return ch;
}

TriangleDistribution build_raw_distribution(const SourceSpec &source,
                                            const MeasurementSpec &meas,
                                            const NoiseSpec &noise) {
  check_unit(meas.t, "t");
  const Ensemble src = noisy_source(source, noise);
  const int k = source_max_photons(source);
  const int max_total = 2 * k;
  const auto outs = party_outputs(max_total);
  const int P = static_cast<int>(outs.size());
  std::map<std::pair<int, int>, int> out_index;
  for (int i = 0; i < P; ++i) out_index[outs[i]] = i;

  // Splitter tables indexed by input (m, n).
  struct Term {
    int out;
    cplx amp;
  };
  std::vector<std::vector<Term>> table((k + 1) * (k + 1));
  for (int m = 0; m <= k; ++m) {
    for (int n = 0; n <= k; ++n) {
      for (const auto &[o, a] :
           fock::beamsplitter_amplitudes(m, n, meas.t, meas.phi, max_total))
        table[m * (k + 1) + n].push_back({out_index.at({o[0], o[1]}), a});
    }
  }
  struct Amp {
    int first, second;
    cplx a;
  };
  std::vector<std::pair<double, std::vector<Amp>>> br;
  for (const auto &b : src.branches) {
    std::vector<Amp> v;
    for (const auto &[o, a] : b.state.amplitudes) v.push_back({o[0], o[1], a});
    br.push_back({b.weight, std::move(v)});
  }

  std::vector<double> pr(static_cast<std::size_t>(P) * P * P, 0.0);
  std::unordered_map<int, cplx> acc;
  for (const auto &[wa, xa] : br) {      // alpha: (B2, C1)
    for (const auto &[wb, yb] : br) {    // beta: (C2, A1)
      for (const auto &[wg, zg] : br) {  // gamma: (A2, B1)
        acc.clear();
        for (const auto &x : xa) {
          for (const auto &y : yb) {
            const cplx xy = x.a * y.a;
            const auto &tc = table[x.second * (k + 1) + y.first];
            for (const auto &z : zg) {
              const cplx xyz = xy * z.a;
              const auto &ta = table[y.second * (k + 1) + z.first];
              const auto &tb = table[z.second * (k + 1) + x.first];
              for (const auto &ea : ta)
                for (const auto &eb : tb) {
                  const cplx ab = xyz * ea.amp * eb.amp;
                  const int key = (ea.out * P + eb.out) * P;
                  for (const auto &ec : tc) acc[key + ec.out] += ab * ec.amp;
                }
            }
          }
        }
        const double w = wa * wb * wg;
        for (const auto &[key, a] : acc) pr[key] += w * std::norm(a);
      }
    }
  }

  TriangleDistribution d;
  if (meas.detector == Detector::PNRD) {
    std::vector<std::string> al;
    for (const auto &[l, r] : outs) al.push_back(count_label(l, r));
    d = TriangleDistribution::zeros({al, al, al});
    d.probs = pr;
  } else {
    const auto &al = click_alphabet();
    d = TriangleDistribution::zeros({al, al, al});
    std::vector<int> ci(P);
    for (int i = 0; i < P; ++i)
      ci[i] = static_cast<int>(
          std::find(al.begin(), al.end(), click_label(outs[i].first, outs[i].second)) -
          al.begin());
    for (int a = 0; a < P; ++a)
      for (int b = 0; b < P; ++b)
        for (int c = 0; c < P; ++c)
          d.at(ci[a], ci[b], ci[c]) += pr[(a * P + b) * P + c];
  }
  clip_and_check(d);
  d.meta = base_meta(source, meas, noise);
  d.meta["coarse"] = "raw";
  return d;
}

TriangleDistribution build_raw_distribution_reference(const SourceSpec &source,
                                                      const MeasurementSpec &meas,
                                                      const NoiseSpec &noise) {
  const Ensemble src = noisy_source(source, noise);
  const int k = source_max_photons(source);
  const int max_total = 2 * k;
  // Place each source on its two transmission modes of the six-mode space.
  auto place = [](const Ensemble &e, int first, int second) {
    Ensemble out;
    for (const auto &b : e.branches) {
      PureStateVec s(6);
      for (const auto &[o, a] : b.state.amplitudes) {
        Occupation occ(6, 0);
        occ[first] = o[0];
        occ[second] = o[1];
        s.add(occ, a);
      }
      out.branches.push_back({b.weight, s});
    }
    return out;
  };
  const Ensemble ea = place(src, 3, 4), eb = place(src, 5, 0), eg = place(src, 1, 2);
  std::map<std::vector<int>, double> counts;
  for (const auto &x : ea.branches) {
    for (const auto &y : eb.branches) {
      for (const auto &z : eg.branches) {
        PureStateVec s(6);
        for (const auto &[ox, ax] : x.state.amplitudes)
          for (const auto &[oy, ay] : y.state.amplitudes)
            for (const auto &[oz, az] : z.state.amplitudes) {
              Occupation o(6);
              for (int i = 0; i < 6; ++i) o[i] = ox[i] + oy[i] + oz[i];
              s.add(o, ax * ay * az);
            }
        for (int p = 0; p < 3; ++p)
          s = fock::apply_two_mode_unitary(s, meas.t, meas.phi, {2 * p, 2 * p + 1},
                                           max_total);
        Ensemble one;
        one.branches.push_back({x.weight * y.weight * z.weight, s});
        for (const auto &[key, v] : fock::measure_occupations(one, {0, 1, 2, 3, 4, 5}))
          counts[key] += v;
      }
    }
  }
  const auto outs = party_outputs(max_total);
  std::vector<std::string> al;
  if (meas.detector == Detector::PNRD)
    for (const auto &[l, r] : outs) al.push_back(count_label(l, r));
  else
    al = click_alphabet();
  TriangleDistribution d = TriangleDistribution::zeros({al, al, al});
  for (const auto &[key, v] : counts) {
    std::array<int, 3> idx;
    for (int p = 0; p < 3; ++p) {
      const std::string lab = meas.detector == Detector::PNRD
                                  ? count_label(key[2 * p], key[2 * p + 1])
                                  : click_label(key[2 * p], key[2 * p + 1]);
      idx[p] = d.label_index(p, lab);
    }
    d.at(idx[0], idx[1], idx[2]) += v;
  }
  clip_and_check(d);
  d.meta = base_meta(source, meas, noise);
  d.meta["coarse"] = "raw";
  d.meta["path"] = "reference";
  return d;
}

TriangleDistribution build_triangle_distribution(const SourceSpec &source,
                                                 const MeasurementSpec &meas,
                                                 const NoiseSpec &noise,
                                                 const CoarseGraining &cg) {
  return coarse_grain(build_raw_distribution(source, meas, noise), cg);
}

TriangleDistribution closed_form_distribution(double t, double phi,
                                              double lambda0) {
  check_unit(t, "t");
  check_unit(lambda0, "lambda0");
  const double l0 = lambda0;
  const double l1 = std::sqrt(std::max(0.0, 1.0 - l0 * l0));
  const cplx ph = std::polar(1.0, -2.0 * phi);
  // Index 0,1,2 stands for 2_{-1}, 2_0, 2_1.
  const cplx u[3] = {ph * t, -ph * std::sqrt(2.0 * t * (1.0 - t)), ph * (1.0 - t)};
  const double v[3] = {std::abs(u[2]), std::abs(u[1]), std::abs(u[0])};
  const std::vector<std::string> al = {"0", "2_-1", "2_0", "2_1", "4"};
  TriangleDistribution d = TriangleDistribution::zeros({al, al, al});
  const double l02 = l0 * l0, l12 = l1 * l1;
  for (int i = 0; i < 3; ++i) {
    const double pu = l02 * l02 * l12 * std::norm(u[i]);
    const double pv = l02 * l12 * l12 * v[i] * v[i];
    // (2_i, 4, 0) and its cyclic images
    d.at(1 + i, 4, 0) = pu;
    d.at(0, 1 + i, 4) = pu;
    d.at(4, 0, 1 + i) = pu;
    // (2_i, 0, 4) and its cyclic images
    d.at(1 + i, 0, 4) = pv;
    d.at(4, 1 + i, 0) = pv;
    d.at(0, 4, 1 + i) = pv;
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        d.at(1 + i, 1 + j, 1 + k) =
            std::norm(l02 * l0 * u[i] * u[j] * u[k] + l12 * l1 * v[i] * v[j] * v[k]);
  d.meta = {{"source", {{"kind", "tilted"}, {"N", 2}, {"lambda0sq", l02}}},
            {"noise", {{"kind", "none"}}},
            {"t", t},
            {"phi", phi},
            {"detector", "pnrd"},
            {"coarse", "pnrd5"},
            {"wiring", kWiring},
            {"path", "closed_form"},
            {"seedless", true}};
  return d;
}

TriangleDistribution coarse_grain(const TriangleDistribution &dist,
                                  const CoarseGraining &cg) {
  std::array<std::vector<std::string>, 3> al;
  std::array<std::vector<int>, 3> to;
  for (int p = 0; p < 3; ++p) {
    al[p] = cg.labels;
    for (const auto &lab : dist.alphabets[p]) {
      auto img = cg.map ? cg.map(lab) : std::optional<std::string>(lab);
      if (!img) {
        to[p].push_back(-1);
        continue;
      }
      auto it = std::find(al[p].begin(), al[p].end(), *img);
      if (it == al[p].end()) {
        if (!cg.labels.empty())
          throw std::invalid_argument("coarse graining '" + cg.name +
                                      "' maps outside its alphabet");
        al[p].push_back(*img);
        it = al[p].end() - 1;
      }
      to[p].push_back(static_cast<int>(it - al[p].begin()));
    }
  }
  TriangleDistribution out = TriangleDistribution::zeros(al);
  for (std::size_t a = 0; a < dist.size(0); ++a)
    for (std::size_t b = 0; b < dist.size(1); ++b)
      for (std::size_t c = 0; c < dist.size(2); ++c) {
        const double v = dist.p(a, b, c);
        if (v == 0.0) continue;
        if (to[0][a] < 0 || to[1][b] < 0 || to[2][c] < 0) {
          if (v > 1e-14)
            throw std::invalid_argument(
                "coarse graining '" + cg.name + "' is not defined on reachable outcome (" +
                dist.alphabets[0][a] + "," + dist.alphabets[1][b] + "," +
                dist.alphabets[2][c] + ")");
          continue;
        }
        out.at(to[0][a], to[1][b], to[2][c]) += v;
      }
  out.meta = dist.meta;
  out.meta["coarse"] = cg.name;
  return out;
}

std::vector<std::string> coarse_graining_names() {
  return {"raw", "pnrd5", "lpnoise7", "click4", "pairs4"};
}

CoarseGraining coarse_graining_by_name(const std::string &name) {
  CoarseGraining cg;
  cg.name = name;
  if (name == "raw" || name == "identity") {
    cg.map = [](const std::string &s) { return std::optional<std::string>(s); };
    return cg;
  }
  if (name == "pnrd5") {
    cg.labels = {"0", "2_-1", "2_0", "2_1", "4"};
    cg.map = [](const std::string &s) -> std::optional<std::string> {
      int l, r;
      if (!parse_count_label(s, l, r)) return std::nullopt;
      if (l + r == 0) return "0";
      if (l + r == 4) return "4";
      if (l + r == 2) return l == 2 ? "2_-1" : (l == 1 ? "2_0" : "2_1");
      return std::nullopt;
    };
    return cg;
  }
  if (name == "lpnoise7") {
    cg.labels = {"0", "(1,0)", "(0,1)", "(2,0)", "(1,1)", "(0,2)", "4"};
    cg.map = [](const std::string &s) -> std::optional<std::string> {
      int l, r;
      if (!parse_count_label(s, l, r)) return std::nullopt;
      if (l + r >= 3) return "4";
      if (l + r == 0) return "0";
      return s;
    };
    return cg;
  }
  if (name == "click4") {
    cg.labels = click_alphabet();
    cg.map = [](const std::string &s) -> std::optional<std::string> {
      int l, r;
      if (parse_count_label(s, l, r)) return click_label(l, r);
      const auto &al = click_alphabet();
      if (std::find(al.begin(), al.end(), s) != al.end()) return s;
      return std::nullopt;
    };
    return cg;
  }
  if (name == "pairs4") {
    cg.labels = {"(2,0)", "(1,1)", "(0,2)", "Rest"};
    cg.map = [](const std::string &s) -> std::optional<std::string> {
      int l, r;
      if (!parse_count_label(s, l, r)) return std::nullopt;
      if (l + r == 2) return s;
      return "Rest";
    };
    return cg;
  }
  throw std::invalid_argument("unknown coarse graining '" + name + "'");
}

TriangleDistribution augment_with_failure_bits(const TriangleDistribution &dist,
                                               std::array<double, 3> h) {
  for (double x : h)
    if (!(x > 0.0 && x <= 1.0))
      throw std::invalid_argument("heralding probability outside (0,1]");
  std::array<std::vector<std::string>, 3> al;
  for (int p = 0; p < 3; ++p) {
    for (const auto &l : dist.alphabets[p]) al[p].push_back(l + "/F0");
    al[p].push_back("0/F1");
    al[p].push_back("0/F2");
  }
  TriangleDistribution out = TriangleDistribution::zeros(al);
  const std::size_t na = dist.size(0), nb = dist.size(1), nc = dist.size(2);
  const std::size_t f1a = na, f2a = na + 1, f1b = nb, f2b = nb + 1, f1c = nc,
                    f2c = nc + 1;
  const auto [ha, hb, hg] = h;
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t c = 0; c < nc; ++c) out.at(a, b, c) = ha * hb * hg * dist.p(a, b, c);
  // One failed source: both adjacent parties report F1 and the null
  // outcome; the opposite party keeps its marginal.
  std::vector<double> ma(na, 0.0), mb(nb, 0.0), mc(nc, 0.0);
  for (std::size_t a = 0; a < na; ++a)
    for (std::size_t b = 0; b < nb; ++b)
      for (std::size_t c = 0; c < nc; ++c) {
        ma[a] += dist.p(a, b, c);
        mb[b] += dist.p(a, b, c);
        mc[c] += dist.p(a, b, c);
      }
  for (std::size_t a = 0; a < na; ++a) out.at(a, f1b, f1c) += (1 - ha) * hb * hg * ma[a];
  for (std::size_t b = 0; b < nb; ++b) out.at(f1a, b, f1c) += ha * (1 - hb) * hg * mb[b];
  for (std::size_t c = 0; c < nc; ++c) out.at(f1a, f1b, c) += ha * hb * (1 - hg) * mc[c];
  // Two failed sources: the party adjacent to both sees F2.
  out.at(f1a, f1b, f2c) += (1 - ha) * (1 - hb) * hg;
  out.at(f2a, f1b, f1c) += ha * (1 - hb) * (1 - hg);
  out.at(f1a, f2b, f1c) += (1 - ha) * hb * (1 - hg);
  out.at(f2a, f2b, f2c) += (1 - ha) * (1 - hb) * (1 - hg);
  out.meta = dist.meta;
  out.meta["failure_bits"] = {{"h", {ha, hb, hg}}};
  return out;
}

double party_marginal(const TriangleDistribution &dist, int party,
                      const std::string &label) {
  const int li = dist.label_index(party, label);
  double s = 0.0;
  for (std::size_t a = 0; a < dist.size(0); ++a)
    for (std::size_t b = 0; b < dist.size(1); ++b)
      for (std::size_t c = 0; c < dist.size(2); ++c) {
        const std::size_t idx[3] = {a, b, c};
        if (static_cast<int>(idx[party]) == li) s += dist.p(a, b, c);
      }
  return s;
}

double pair_marginal(const TriangleDistribution &dist, int p1,
                     const std::string &l1, int p2, const std::string &l2) {
  if (p1 == p2) throw std::invalid_argument("pair marginal needs two parties");
  const int i1 = dist.label_index(p1, l1), i2 = dist.label_index(p2, l2);
  double s = 0.0;
  for (std::size_t a = 0; a < dist.size(0); ++a)
    for (std::size_t b = 0; b < dist.size(1); ++b)
      for (std::size_t c = 0; c < dist.size(2); ++c) {
        const std::size_t idx[3] = {a, b, c};
        if (static_cast<int>(idx[p1]) == i1 && static_cast<int>(idx[p2]) == i2)
          s += dist.p(a, b, c);
      }
  return s;
}

TriangleDistribution rotate_parties(const TriangleDistribution &dist) {
  TriangleDistribution out =
      TriangleDistribution::zeros({dist.alphabets[1], dist.alphabets[2], dist.alphabets[0]});
  for (std::size_t a = 0; a < dist.size(0); ++a)
    for (std::size_t b = 0; b < dist.size(1); ++b)
      for (std::size_t c = 0; c < dist.size(2); ++c) out.at(b, c, a) = dist.p(a, b, c);
  out.meta = dist.meta;
  return out;
}

std::string source_name(const SourceSpec &s) {
  return source_json(s)["kind"].get<std::string>();
}
std::string noise_name(const NoiseSpec &n) {
  return noise_json(n)["kind"].get<std::string>();
}
std::string detector_name(Detector d) {
  return d == Detector::PNRD ? "pnrd" : "click";
}

json to_json(const TriangleDistribution &d) {
  json probs = json::array();
  for (std::size_t a = 0; a < d.size(0); ++a)
    for (std::size_t b = 0; b < d.size(1); ++b)
      for (std::size_t c = 0; c < d.size(2); ++c) {
        const double v = d.p(a, b, c);
        if (v == 0.0) continue;
        probs.push_back({{"a", d.alphabets[0][a]},
                         {"b", d.alphabets[1][b]},
                         {"c", d.alphabets[2][c]},
                         {"p", v}});
      }
  return {{"meta", d.meta},
          {"alphabets", {d.alphabets[0], d.alphabets[1], d.alphabets[2]}},
          {"probs", probs}};
}

TriangleDistribution from_json(const json &j) {
  const auto &al = j.at("alphabets");
  if (!al.is_array() || al.size() != 3)
    throw std::invalid_argument("distribution needs three alphabets");
  TriangleDistribution d = TriangleDistribution::zeros(
      {al[0].get<std::vector<std::string>>(), al[1].get<std::vector<std::string>>(),
       al[2].get<std::vector<std::string>>()});
  for (const auto &e : j.at("probs")) {
    d.at(d.label_index(0, e.at("a").get<std::string>()),
         d.label_index(1, e.at("b").get<std::string>()),
         d.label_index(2, e.at("c").get<std::string>())) = e.at("p").get<double>();
  }
  if (j.contains("meta")) d.meta = j.at("meta");
  return d;
}

void write_distribution(const TriangleDistribution &d, const std::string &path) {
  std::ofstream f(path);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_json(d).dump(1) << "\n";
}

TriangleDistribution read_distribution(const std::string &path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot read " + path);
  return from_json(json::parse(f));
}

}  // namespace trinoon::triangle
