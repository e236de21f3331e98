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

#include "trinoon/finite_local.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace trinoon::triangle {

void FiniteLocalModel::validate() const {
  for (int s = 0; s < 3; ++s) {
    double w = 0.0;
    for (double x : weights[s]) {
      if (x < 0.0) throw std::invalid_argument("negative source weight");
      w += x;
    }
    if (std::abs(w - 1.0) > 1e-12)
      throw std::invalid_argument("source weights do not sum to 1");
  }
  for (int p = 0; p < 3; ++p) {
    const auto [f, g] = kInputs[p];
    if (response[p].size() != weights[f].size())
      throw std::invalid_argument("response table has wrong first dimension");
    for (const auto &row : response[p]) {
      if (row.size() != weights[g].size())
        throw std::invalid_argument("response table has wrong second dimension");
      for (const auto &dist : row) {
        if (dist.size() != alphabets[p].size())
          throw std::invalid_argument("response length differs from alphabet");
        double s = std::accumulate(dist.begin(), dist.end(), 0.0);
        if (std::abs(s - 1.0) > 1e-12)
          throw std::invalid_argument("response is not normalized");
      }
    }
  }
}

TriangleDistribution FiniteLocalModel::distribution() const {
  validate();
  TriangleDistribution d = TriangleDistribution::zeros(alphabets);
  const auto &wa = weights[0], &wb = weights[1], &wg = weights[2];
  for (std::size_t x = 0; x < wa.size(); ++x)
    for (std::size_t y = 0; y < wb.size(); ++y)
      for (std::size_t z = 0; z < wg.size(); ++z) {
        const double w = wa[x] * wb[y] * wg[z];
        if (w == 0.0) continue;
        const auto &ra = response[0][y][z];
        const auto &rb = response[1][z][x];
        const auto &rc = response[2][x][y];
        for (std::size_t a = 0; a < ra.size(); ++a) {
          if (ra[a] == 0.0) continue;
          for (std::size_t b = 0; b < rb.size(); ++b) {
            if (rb[b] == 0.0) continue;
            const double wab = w * ra[a] * rb[b];
            for (std::size_t c = 0; c < rc.size(); ++c) d.at(a, b, c) += wab * rc[c];
          }
        }
      }
  d.meta = {{"source", {{"kind", "finite_local"}}}, {"seedless", true}};
  return d;
}

FiniteLocalModel deterministic_model(
    std::array<std::vector<double>, 3> weights,
    std::array<std::vector<std::string>, 3> alphabets,
    const std::array<std::vector<std::vector<int>>, 3> &table) {
  FiniteLocalModel m;
  m.weights = std::move(weights);
  m.alphabets = std::move(alphabets);
  for (int p = 0; p < 3; ++p) {
    m.response[p].resize(table[p].size());
    for (std::size_t i = 0; i < table[p].size(); ++i)
      for (int lab : table[p][i]) {
        std::vector<double> e(m.alphabets[p].size(), 0.0);
        e.at(lab) = 1.0;
        m.response[p][i].push_back(e);
      }
  }
  m.validate();
  return m;
}

FiniteLocalModel lift_with_failures(const FiniteLocalModel &m,
                                    std::array<double, 3> h) {
  FiniteLocalModel out;
  for (int s = 0; s < 3; ++s) {
    for (double w : m.weights[s]) out.weights[s].push_back(h[s] * w);
    out.weights[s].push_back(1.0 - h[s]);
  }
  for (int p = 0; p < 3; ++p) {
    for (const auto &l : m.alphabets[p]) out.alphabets[p].push_back(l + "/F0");
    out.alphabets[p].push_back("0/F1");
    out.alphabets[p].push_back("0/F2");
    const auto [f, g] = FiniteLocalModel::kInputs[p];
    const std::size_t nf = m.weights[f].size(), ng = m.weights[g].size();
    const std::size_t nl = out.alphabets[p].size();
    out.response[p].assign(nf + 1, std::vector<std::vector<double>>(ng + 1));
    for (std::size_t i = 0; i <= nf; ++i)
      for (std::size_t j = 0; j <= ng; ++j) {
        std::vector<double> r(nl, 0.0);
        const int failed = (i == nf) + (j == ng);
        if (failed == 0)
          std::copy(m.response[p][i][j].begin(), m.response[p][i][j].end(), r.begin());
        else
          r[nl - 3 + failed] = 1.0;
        out.response[p][i][j] = r;
      }
  }
  return out;
}

FiniteLocalModel random_premise_model(std::mt19937_64 &rng, int symbols,
                                      const std::vector<std::string> &alphabet,
                                      const std::string &ostar,
                                      bool deterministic) {
  if (symbols < 2) throw std::invalid_argument("need at least two symbols");
  const auto it = std::find(alphabet.begin(), alphabet.end(), ostar);
  if (it == alphabet.end()) throw std::invalid_argument("o* not in alphabet");
  const int o = static_cast<int>(it - alphabet.begin());
  const int nl = static_cast<int>(alphabet.size());
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::gamma_distribution<double> gam(1.0, 1.0);

  std::vector<double> w(symbols);
  double sw = 0.0;
  for (double &x : w) sw += (x = gam(rng) + 1e-3);
  for (double &x : w) x /= sw;
  // Left set: a random non-empty proper subset.
  std::vector<bool> left(symbols);
  do {
    for (int i = 0; i < symbols; ++i) left[i] = unif(rng) < 0.5;
  } while (std::all_of(left.begin(), left.end(), [](bool b) { return b; }) ||
           std::none_of(left.begin(), left.end(), [](bool b) { return b; }));

  std::vector<std::vector<std::vector<double>>> table(
      symbols, std::vector<std::vector<double>>(symbols));
  for (int x = 0; x < symbols; ++x)
    for (int y = 0; y < symbols; ++y) {
      const bool allowed = left[x] && !left[y];
      std::vector<double> r(nl, 0.0);
      if (deterministic) {
        int lab;
        do {
          lab = static_cast<int>(unif(rng) * nl) % nl;
        } while (lab == o && !allowed);
        r[lab] = 1.0;
      } else {
        double s = 0.0;
        for (int l = 0; l < nl; ++l) {
          if (l == o && !allowed) continue;
          s += (r[l] = gam(rng));
        }
        for (double &v : r) v /= s;
      }
      table[x][y] = r;
    }
  FiniteLocalModel m;
  for (int s = 0; s < 3; ++s) {
    m.weights[s] = w;
    m.alphabets[s] = alphabet;
    m.response[s] = table;
  }
  return m;
}

FiniteLocalModel token_counting_model() {
  // Symbol 0 sends the token to the party reading the source first,
  // symbol 1 to the party reading it second.
  std::array<std::vector<std::vector<int>>, 3> table;
  for (int p = 0; p < 3; ++p) {
    table[p].assign(2, std::vector<int>(2));
    for (int x = 0; x < 2; ++x)
      for (int y = 0; y < 2; ++y) table[p][x][y] = (x == 0) + (y == 1);
  }
  const std::vector<std::string> al = {"0", "1", "2"};
  return deterministic_model({std::vector<double>{0.5, 0.5}, {0.5, 0.5}, {0.5, 0.5}},
                             {al, al, al}, table);
}

}  // namespace trinoon::triangle
