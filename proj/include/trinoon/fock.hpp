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

#ifndef TRINOON_FOCK_HPP
#define TRINOON_FOCK_HPP

#include <complex>
#include <map>
#include <set>
#include <stdexcept>
#include <utility>
#include <vector>

namespace trinoon::fock {

using cplx = std::complex<double>;

// Photon counts per mode.
using Occupation = std::vector<int>;

constexpr int kDefaultCap = 4;
constexpr double kPruneTol = 1e-14;

class TruncationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class UnsupportedInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PureStateVec {
  int mode_count = 0;
  std::map<Occupation, cplx> amplitudes;

  PureStateVec() = default;
  explicit PureStateVec(int modes) : mode_count(modes) {}

  static PureStateVec vacuum(int modes);
  static PureStateVec basis(const Occupation &occ);

  // Adds amp to the coefficient of occ.
  void add(const Occupation &occ, cplx amp);
  // Drops amplitudes with magnitude below kPruneTol.
  void prune();
  double norm_sq() const;
  int max_count() const;
};

struct Branch {
  double weight = 0.0;
  PureStateVec state;
};

struct Ensemble {
  std::vector<Branch> branches;

  int mode_count() const {
    return branches.empty() ? 0 : branches.front().state.mode_count;
  }
  // Sum of weight times squared norm over branches.
  double total_weight() const;
  static Ensemble pure(PureStateVec psi);
};

// Single mode operator as sparse map (out_count, in_count) -> coefficient.
using SparseOp = std::map<std::pair<int, int>, cplx>;

struct KrausChannel {
  std::vector<SparseOp> operators;
  std::set<int> support;

  // Largest entrywise deviation of sum_k E_k^dag E_k from the identity,
  // restricted to the support.
  double completeness_error() const;
};

// Output amplitudes of |m n> through a beamsplitter with transmissivity t and
// phase phi. Keys are two-mode output occupations.
std::map<Occupation, cplx> beamsplitter_amplitudes(int m, int n, double t,
                                                   double phi,
                                                   int n_max = kDefaultCap);

PureStateVec apply_two_mode_unitary(const PureStateVec &state, double t,
                                    double phi, std::pair<int, int> modes,
                                    int n_max = kDefaultCap);

Ensemble apply_kraus_channel(const Ensemble &ens, const KrausChannel &ch,
                             int mode);

std::map<std::vector<int>, double> measure_occupations(
    const Ensemble &ens, const std::vector<int> &modes);

// Tensor product; modes of b follow the modes of a.
PureStateVec tensor(const PureStateVec &a, const PureStateVec &b);
Ensemble tensor(const Ensemble &a, const Ensemble &b);

// Re-expresses the ensemble by the eigen-decomposition of its density
// operator. Same state, at most dim(support) orthogonal branches.
Ensemble compress(const Ensemble &ens, double tol = 1e-15);

}  // namespace trinoon::fock

#endif  // TRINOON_FOCK_HPP
