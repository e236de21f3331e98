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

#ifndef TRINOON_TRIANGLE_HPP
#define TRINOON_TRIANGLE_HPP

#include <array>
#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <json.hpp>

#include "trinoon/fock.hpp"

namespace trinoon::triangle {

using json = nlohmann::json;

struct TiltedNoon {
  int N = 2;
  double lambda0 = 0.70710678118654752;
};
struct DephasedNoon {
  int N = 2;
  double d = 0.0;
};
struct SpdcHeralded {
  double Q = 0.0;
};
using SourceSpec = std::variant<TiltedNoon, DephasedNoon, SpdcHeralded>;

struct NoNoise {};
struct FullLoss {
  double eta = 1.0;
};
struct SingleLoss {
  double eta = 1.0;
};
using NoiseSpec = std::variant<NoNoise, FullLoss, SingleLoss>;

enum class Detector { PNRD, ClickNoClick };

struct MeasurementSpec {
  double t = 0.5;
  double phi = 0.0;
  Detector detector = Detector::PNRD;
};

// Maps a per-party readout label to a coarse label. Labels without an image
// must carry no probability mass.
struct CoarseGraining {
  std::string name;
  // Output alphabet order. Empty means keep the input alphabet order.
  std::vector<std::string> labels;
  std::function<std::optional<std::string>(const std::string &)> map;
};

// Fixed mode order: A1 A2 B1 B2 C1 C2. Source alpha feeds (B2, C1), beta
// feeds (C2, A1), gamma feeds (A2, B1). Party X measures (X1, X2).
constexpr const char *kWiring =
    "modes A1,A2,B1,B2,C1,C2; alpha->(B2,C1) beta->(C2,A1) gamma->(A2,B1); "
    "party X beamsplitter on (X1,X2)";

class PremiseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TriangleDistribution {
  std::array<std::vector<std::string>, 3> alphabets;
  // Row-major over (a, b, c).
  std::vector<double> probs;
  json meta = json::object();

  std::size_t size(int party) const { return alphabets[party].size(); }
  std::size_t index(std::size_t a, std::size_t b, std::size_t c) const {
    return (a * alphabets[1].size() + b) * alphabets[2].size() + c;
  }
  double p(std::size_t a, std::size_t b, std::size_t c) const {
    return probs[index(a, b, c)];
  }
  double &at(std::size_t a, std::size_t b, std::size_t c) {
    return probs[index(a, b, c)];
  }
  // Throws std::out_of_range for an unknown label.
  int label_index(int party, const std::string &label) const;
  bool has_label(int party, const std::string &label) const;
  double prob(const std::string &a, const std::string &b,
              const std::string &c) const;
  double total() const;

  static TriangleDistribution zeros(std::array<std::vector<std::string>, 3> al);
};

// Raw PNRD label of a readout.
std::string count_label(int left, int right);
// Parses "(l,r)"; returns false on anything else.
bool parse_count_label(const std::string &s, int &left, int &right);

fock::Ensemble make_source(const SourceSpec &spec);
// Largest photon number a source can put on one of its modes.
int source_max_photons(const SourceSpec &spec);

// Kraus operators for a loss model, defined on counts 0..cap.
fock::KrausChannel make_loss_channel(const NoiseSpec &noise, int cap = 4);

// Readout before coarse graining: "(l,r)" for PNRD, "0","L","R","LR" for
// click detectors.
TriangleDistribution build_raw_distribution(const SourceSpec &source,
                                            const MeasurementSpec &meas,
                                            const NoiseSpec &noise);

// Same readout through the generic six-mode fock path. Slow; used to
// cross-check the production path.
TriangleDistribution build_raw_distribution_reference(
    const SourceSpec &source, const MeasurementSpec &meas,
    const NoiseSpec &noise);

TriangleDistribution build_triangle_distribution(const SourceSpec &source,
                                                 const MeasurementSpec &meas,
                                                 const NoiseSpec &noise,
                                                 const CoarseGraining &cg);

TriangleDistribution closed_form_distribution(double t, double phi,
                                              double lambda0);

TriangleDistribution coarse_grain(const TriangleDistribution &dist,
                                  const CoarseGraining &cg);

// Names: raw, pnrd5, lpnoise7, click4, pairs4.
CoarseGraining coarse_graining_by_name(const std::string &name);
std::vector<std::string> coarse_graining_names();

TriangleDistribution augment_with_failure_bits(const TriangleDistribution &dist,
                                               std::array<double, 3> h);

double party_marginal(const TriangleDistribution &dist, int party,
                      const std::string &label);
// Probability that party p1 shows l1 and party p2 shows l2.
double pair_marginal(const TriangleDistribution &dist, int p1,
                     const std::string &l1, int p2, const std::string &l2);

// Rotates parties: new (a,b,c) = old (b,c,a) as tensors.
TriangleDistribution rotate_parties(const TriangleDistribution &dist);

// Helper for the tilted-source hardware parameter.
inline double lambda0_from_c(double c) { return c / std::sqrt(c * c + 1.0); }

std::string source_name(const SourceSpec &s);
std::string noise_name(const NoiseSpec &n);
std::string detector_name(Detector d);

// File interchange.
json to_json(const TriangleDistribution &d);
TriangleDistribution from_json(const json &j);
void write_distribution(const TriangleDistribution &d, const std::string &path);
TriangleDistribution read_distribution(const std::string &path);

}  // namespace trinoon::triangle

#endif  // TRINOON_TRIANGLE_HPP
