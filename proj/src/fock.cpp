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

#include "trinoon/fock.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <string>

namespace trinoon::fock {

namespace {

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

double sqrt_factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= std::sqrt(static_cast<double>(i));
  return r;
}

cplx ipow(cplx z, int e) {
  cplx r = 1.0;
  for (int i = 0; i < e; ++i) r *= z;
  return r;
}

}  // namespace

PureStateVec PureStateVec::vacuum(int modes) {
  PureStateVec s(modes);
  s.amplitudes[Occupation(modes, 0)] = 1.0;
  return s;
}

PureStateVec PureStateVec::basis(const Occupation &occ) {
  PureStateVec s(static_cast<int>(occ.size()));
  s.amplitudes[occ] = 1.0;
  return s;
}

void PureStateVec::add(const Occupation &occ, cplx amp) {
  if (static_cast<int>(occ.size()) != mode_count)
    throw std::invalid_argument("occupation length does not match mode count");
  amplitudes[occ] += amp;
}

void PureStateVec::prune() {
  for (auto it = amplitudes.begin(); it != amplitudes.end();) {
    if (std::abs(it->second) < kPruneTol)
      it = amplitudes.erase(it);
    else
      ++it;
  }
}

double PureStateVec::norm_sq() const {
  double s = 0.0;
  for (const auto &[occ, a] : amplitudes) s += std::norm(a);
  return s;
}

int PureStateVec::max_count() const {
  int m = 0;
  for (const auto &[occ, a] : amplitudes)
    for (int c : occ) m = std::max(m, c);
  return m;
}

double Ensemble::total_weight() const {
  double s = 0.0;
  for (const auto &b : branches) s += b.weight * b.state.norm_sq();
  return s;
}

Ensemble Ensemble::pure(PureStateVec psi) {
  Ensemble e;
  e.branches.push_back({1.0, std::move(psi)});
  return e;
}

double KrausChannel::completeness_error() const {
  double err = 0.0;
  for (int i : support) {
    for (int j : support) {
      cplx s = 0.0;
      for (const auto &op : operators) {
        // (E^dag E)_{ij} = sum_o conj(E_{o,i}) E_{o,j}
        for (const auto &[key, c] : op) {
          if (key.second != i) continue;
          auto it = op.find({key.first, j});
          if (it != op.end()) s += std::conj(c) * it->second;
        }
      }
      err = std::max(err, std::abs(s - (i == j ? 1.0 : 0.0)));
    }
  }
  return err;
}

std::map<Occupation, cplx> beamsplitter_amplitudes(int m, int n, double t,
                                                   double phi, int n_max) {
  if (m < 0 || n < 0) throw std::invalid_argument("negative photon count");
  if (m + n > n_max)
    throw TruncationError("beamsplitter input exceeds truncation cap " +
                          std::to_string(n_max));
  if (t < 0.0 || t > 1.0) throw std::invalid_argument("t outside [0,1]");
  const cplx u = std::sqrt(t);
  const cplx l = std::polar(std::sqrt(1.0 - t), -phi);
  const cplx lc = std::conj(l);
  const double pre = 1.0 / (sqrt_factorial(m) * sqrt_factorial(n));
  std::map<Occupation, cplx> out;
  for (int k = 0; k <= m; ++k) {
    for (int q = 0; q <= n; ++q) {
      const int left = k + q, right = m + n - k - q;
      double c = binom(m, k) * binom(n, q) * sqrt_factorial(right) *
                 sqrt_factorial(left) * pre;
      if ((m - k) % 2) c = -c;
      cplx a = c * ipow(u, k + n - q) * ipow(l, m - k) * ipow(lc, q);
      out[{left, right}] += a;
    }
  }
  for (auto it = out.begin(); it != out.end();) {
    if (std::abs(it->second) < kPruneTol)
      it = out.erase(it);
    else
      ++it;
  }
  return out;
}

PureStateVec apply_two_mode_unitary(const PureStateVec &state, double t,
                                    double phi, std::pair<int, int> modes,
                                    int n_max) {
  const auto [i, j] = modes;
  if (i < 0 || j < 0 || i >= state.mode_count || j >= state.mode_count)
    throw std::out_of_range("mode index out of range");
  if (i == j) throw std::invalid_argument("mode indices must differ");
  std::map<std::pair<int, int>, std::map<Occupation, cplx>> cache;
  PureStateVec out(state.mode_count);
  for (const auto &[occ, a] : state.amplitudes) {
    auto key = std::make_pair(occ[i], occ[j]);
    auto it = cache.find(key);
    if (it == cache.end())
      it = cache
               .emplace(key, beamsplitter_amplitudes(key.first, key.second, t,
                                                     phi, n_max))
               .first;
    for (const auto &[o, c] : it->second) {
      Occupation occ2 = occ;
      occ2[i] = o[0];
      occ2[j] = o[1];
      out.amplitudes[occ2] += a * c;
    }
  }
  out.prune();
  return out;
}

Ensemble apply_kraus_channel(const Ensemble &ens, const KrausChannel &ch,
                             int mode) {
  Ensemble out;
  for (const auto &br : ens.branches) {
    if (mode < 0 || mode >= br.state.mode_count)
      throw std::out_of_range("mode index out of range");
    for (const auto &[occ, a] : br.state.amplitudes)
      if (!ch.support.count(occ[mode]))
        throw UnsupportedInput("photon count " + std::to_string(occ[mode]) +
                               " outside channel support");
    for (const auto &op : ch.operators) {
      PureStateVec s(br.state.mode_count);
      for (const auto &[occ, a] : br.state.amplitudes) {
        for (const auto &[key, c] : op) {
          if (key.second != occ[mode]) continue;
          Occupation occ2 = occ;
          occ2[mode] = key.first;
          s.amplitudes[occ2] += c * a;
        }
      }
      s.prune();
      if (!s.amplitudes.empty()) out.branches.push_back({br.weight, s});
    }
  }
  return out;
}

std::map<std::vector<int>, double> measure_occupations(
    const Ensemble &ens, const std::vector<int> &modes) {
  std::map<std::vector<int>, double> out;
  for (const auto &br : ens.branches) {
    for (const auto &[occ, a] : br.state.amplitudes) {
      std::vector<int> key;
      key.reserve(modes.size());
      for (int m : modes) {
        if (m < 0 || m >= br.state.mode_count)
          throw std::out_of_range("mode index out of range");
        key.push_back(occ[m]);
      }
      out[key] += br.weight * std::norm(a);
    }
  }
  return out;
}

PureStateVec tensor(const PureStateVec &a, const PureStateVec &b) {
  PureStateVec out(a.mode_count + b.mode_count);
  for (const auto &[oa, x] : a.amplitudes) {
    for (const auto &[ob, y] : b.amplitudes) {
      Occupation o = oa;
      o.insert(o.end(), ob.begin(), ob.end());
      out.amplitudes[o] += x * y;
    }
  }
  out.prune();
  return out;
}

Ensemble tensor(const Ensemble &a, const Ensemble &b) {
  Ensemble out;
  for (const auto &x : a.branches)
    for (const auto &y : b.branches)
      out.branches.push_back({x.weight * y.weight, tensor(x.state, y.state)});
  return out;
}

Ensemble compress(const Ensemble &ens, double tol) {
  std::map<Occupation, int> index;
  for (const auto &br : ens.branches)
    for (const auto &[occ, a] : br.state.amplitudes) index.emplace(occ, 0);
  int d = 0;
  std::vector<Occupation> basis;
  for (auto &[occ, i] : index) {
    i = d++;
    basis.push_back(occ);
  }
  Ensemble out;
  if (d == 0) return out;
  Eigen::MatrixXcd rho = Eigen::MatrixXcd::Zero(d, d);
  for (const auto &br : ens.branches) {
    Eigen::VectorXcd v = Eigen::VectorXcd::Zero(d);
    for (const auto &[occ, a] : br.state.amplitudes) v(index[occ]) = a;
    rho += br.weight * v * v.adjoint();
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(rho);
  const int modes = ens.mode_count();
  for (int k = d - 1; k >= 0; --k) {
    const double lam = es.eigenvalues()(k);
    if (lam <= tol) continue;
    PureStateVec s(modes);
    for (int i = 0; i < d; ++i) s.amplitudes[basis[i]] = es.eigenvectors()(i, k);
    s.prune();
    out.branches.push_back({lam, s});
  }
  return out;
}

}  // namespace trinoon::fock
