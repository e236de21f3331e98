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

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "trinoon/finite_local.hpp"
#include "trinoon/triangle.hpp"

using namespace trinoon::triangle;
namespace fock = trinoon::fock;

namespace {

constexpr double kPi = std::numbers::pi;

double max_diff(const TriangleDistribution &x, const TriangleDistribution &y) {
  REQUIRE(x.alphabets == y.alphabets);
  double m = 0;
  for (std::size_t i = 0; i < x.probs.size(); ++i)
    m = std::max(m, std::abs(x.probs[i] - y.probs[i]));
  return m;
}

TriangleDistribution noiseless(double t, double phi, const std::string &cg = "pnrd5",
                               double l0sq = 0.5) {
  return build_triangle_distribution(TiltedNoon{2, std::sqrt(l0sq)}, {t, phi, Detector::PNRD},
                                     NoNoise{}, coarse_graining_by_name(cg));
}

}  // namespace

TEST_CASE("sources") {
  SUBCASE("balanced N00N") {
    auto e = make_source(TiltedNoon{2, std::sqrt(0.5)});
    REQUIRE(e.branches.size() == 1);
    const auto &a = e.branches[0].state.amplitudes;
    CHECK(std::abs(a.at({0, 2}) - fock::cplx(std::sqrt(0.5), 0)) < 1e-15);
    CHECK(std::abs(a.at({2, 0}) - fock::cplx(std::sqrt(0.5), 0)) < 1e-15);
  }
  SUBCASE("fully dephased") {
    auto e = make_source(DephasedNoon{2, 1.0});
    auto p = fock::measure_occupations(e, {0, 1});
    CHECK(p[{0, 2}] == doctest::Approx(0.5));
    CHECK(p[{2, 0}] == doctest::Approx(0.5));
    for (const auto &br : e.branches) CHECK(br.state.amplitudes.size() == 1);
  }
  SUBCASE("heralded source at Q=0 is the balanced N00N state") {
    auto e = fock::compress(make_source(SpdcHeralded{0.0}));
    REQUIRE(e.branches.size() == 1);
    const auto &a = e.branches[0].state.amplitudes;
    CHECK(a.size() == 2);
    auto r = a.at({0, 2}) / a.at({2, 0});
    CHECK(std::abs(r - fock::cplx(1, 0)) < 1e-12);
    CHECK(std::abs(e.total_weight() - 1.0) < 1e-12);
  }
  SUBCASE("normalization and range checks") {
    for (double q : {0.0, 0.006785, 0.2})
      CHECK(std::abs(make_source(SpdcHeralded{q}).total_weight() - 1) < 1e-12);
    CHECK_THROWS(make_source(TiltedNoon{2, 1.5}));
    CHECK_THROWS(make_source(DephasedNoon{2, -0.1}));
    CHECK_THROWS(make_source(SpdcHeralded{1.0}));
  }
}

TEST_CASE("loss channel weights from two photons") {
  auto two = fock::Ensemble::pure(fock::PureStateVec::basis({2}));
  auto full = fock::measure_occupations(
      fock::apply_kraus_channel(two, make_loss_channel(FullLoss{0.9}), 0), {0});
  CHECK(full[{2}] == doctest::Approx(0.81).epsilon(1e-13));
  CHECK(full[{1}] == doctest::Approx(0.18).epsilon(1e-13));
  CHECK(full[{0}] == doctest::Approx(0.01).epsilon(1e-13));
  for (double eta : {0.0, 0.3, 0.9}) {
    auto single = fock::measure_occupations(
        fock::apply_kraus_channel(two, make_loss_channel(SingleLoss{eta}), 0), {0});
    CHECK(single[{2}] == doctest::Approx(eta * eta).epsilon(1e-13));
    CHECK(single[{1}] == doctest::Approx(1 - eta * eta).epsilon(1e-13));
    CHECK(single.count({0}) == 0);
  }
}

TEST_CASE("noiseless distribution") {
  auto d = noiseless(0.75, kPi / 2);
  CHECK(std::abs(d.total() - 1) < 1e-12);
  for (int p = 0; p < 3; ++p) CHECK(party_marginal(d, p, "0") == doctest::Approx(0.25).epsilon(1e-13));
  // (1/8)|u_1|^2 with u_1 = (1-t) e^{-2i phi}
  CHECK(d.prob("0", "2_1", "4") == doctest::Approx(0.0078125).epsilon(1e-12));
  CHECK(d.meta.at("wiring") == kWiring);
}

TEST_CASE("closed forms") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 5; ++rep) {
    double t = u(rng), phi = 2 * kPi * u(rng), l0sq = u(rng);
    auto sim = noiseless(t, phi, "pnrd5", l0sq);
    auto cf = closed_form_distribution(t, phi, std::sqrt(l0sq));
    CHECK(max_diff(sim, cf) < 1e-10);
    double l1sq = 1 - l0sq, mass = 0;
    for (const char *a : {"2_-1", "2_0", "2_1"})
      for (const char *b : {"2_-1", "2_0", "2_1"})
        for (const char *c : {"2_-1", "2_0", "2_1"}) mass += cf.prob(a, b, c);
    CHECK(mass == doctest::Approx(std::pow(l0sq, 3) + std::pow(l1sq, 3)).epsilon(1e-12));
  }
  auto t1 = closed_form_distribution(1.0, 0.4, std::sqrt(0.5));
  for (std::size_t b = 0; b < 5; ++b)
    for (std::size_t c = 0; c < 5; ++c) CHECK(t1.p(2, b, c) == 0.0);
}

TEST_CASE("fully dephased sources give the classical mixture") {
  const double t = 0.75;
  auto d = build_triangle_distribution(DephasedNoon{2, 1.0}, {t, kPi / 2, Detector::PNRD},
                                       NoNoise{}, coarse_graining_by_name("pnrd5"));
  const double u[3] = {t, std::sqrt(2 * t * (1 - t)), 1 - t};  // |u_-1|, |u_0|, |u_1|
  const char *lab[3] = {"2_-1", "2_0", "2_1"};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        double uu = u[i] * u[j] * u[k], vv = u[2 - i] * u[2 - j] * u[2 - k];
        CHECK(d.prob(lab[i], lab[j], lab[k]) ==
              doctest::Approx((uu * uu + vv * vv) / 8).epsilon(1e-12));
      }
}

TEST_CASE("coarse grainings") {
  auto raw = build_raw_distribution(TiltedNoon{2, 0.6}, {0.6, 0.3, Detector::PNRD}, FullLoss{0.7});
  SUBCASE("identity") { CHECK(max_diff(coarse_grain(raw, coarse_graining_by_name("raw")), raw) == 0.0); }
  SUBCASE("click pattern from counts") {
    auto via_counts = coarse_grain(raw, coarse_graining_by_name("click4"));
    auto direct = build_triangle_distribution(TiltedNoon{2, 0.6}, {0.6, 0.3, Detector::ClickNoClick},
                                              FullLoss{0.7}, coarse_graining_by_name("click4"));
    CHECK(max_diff(via_counts, direct) < 1e-14);
    // Oracle: sum every raw cell by its click pattern.
    auto click = [](const std::string &s) {
      int l, r;
      REQUIRE(parse_count_label(s, l, r));
      return std::string(l == 0 && r == 0 ? "0" : l > 0 && r > 0 ? "LR" : l > 0 ? "L" : "R");
    };
    double worst = 0;
    for (const auto &a : via_counts.alphabets[0])
      for (const auto &b : via_counts.alphabets[1])
        for (const auto &c : via_counts.alphabets[2]) {
          double s = 0;
          for (std::size_t x = 0; x < raw.size(0); ++x)
            for (std::size_t y = 0; y < raw.size(1); ++y)
              for (std::size_t z = 0; z < raw.size(2); ++z)
                if (click(raw.alphabets[0][x]) == a && click(raw.alphabets[1][y]) == b &&
                    click(raw.alphabets[2][z]) == c)
                  s += raw.p(x, y, z);
          worst = std::max(worst, std::abs(s - via_counts.prob(a, b, c)));
        }
    CHECK(worst < 1e-15);
  }
  SUBCASE("noise coarse graining buckets three or more photons") {
    auto lp = coarse_grain(raw, coarse_graining_by_name("lpnoise7"));
    CHECK(lp.alphabets[0].size() == 7);
    CHECK(std::abs(lp.total() - raw.total()) < 1e-14);
    double three_plus = 0;
    for (std::size_t x = 0; x < raw.size(0); ++x) {
      int l, r;
      parse_count_label(raw.alphabets[0][x], l, r);
      if (l + r >= 3)
        for (std::size_t y = 0; y < raw.size(1); ++y)
          for (std::size_t z = 0; z < raw.size(2); ++z) three_plus += raw.p(x, y, z);
    }
    CHECK(party_marginal(lp, 0, "4") == doctest::Approx(three_plus).epsilon(1e-13));
  }
  SUBCASE("partial mapping is rejected") {
    CHECK_THROWS(coarse_grain(raw, coarse_graining_by_name("pnrd5")));
    CHECK_THROWS(coarse_graining_by_name("nope"));
  }
}

TEST_CASE("premise pattern of the null outcome") {
  auto zz = [](const TriangleDistribution &d) {
    return std::max({pair_marginal(d, 0, "0", 1, "0"), pair_marginal(d, 1, "0", 2, "0"),
                     pair_marginal(d, 0, "0", 2, "0")});
  };
  CHECK(zz(noiseless(0.8, 1.0, "lpnoise7")) < 1e-12);
  for (double eta : {0.5, 0.9}) {
    auto s = build_triangle_distribution(TiltedNoon{}, {0.8, 1.0, Detector::PNRD}, SingleLoss{eta},
                                         coarse_graining_by_name("lpnoise7"));
    CHECK(zz(s) < 1e-12);
    CHECK(party_marginal(s, 0, "0") == doctest::Approx(0.25).epsilon(1e-12));
    auto f = build_triangle_distribution(TiltedNoon{}, {0.8, 1.0, Detector::PNRD}, FullLoss{eta},
                                         coarse_graining_by_name("lpnoise7"));
    CHECK(zz(f) > 1e-6);
  }
}

TEST_CASE("symmetry and noise limits") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 3; ++rep) {
    MeasurementSpec m{u(rng), 2 * kPi * u(rng), Detector::PNRD};
    auto cg = coarse_graining_by_name("raw");
    auto none = build_triangle_distribution(SpdcHeralded{0.01}, m, NoNoise{}, cg);
    CHECK(max_diff(rotate_parties(none), none) < 1e-10);
    CHECK(max_diff(build_triangle_distribution(SpdcHeralded{0.01}, m, FullLoss{1.0}, cg), none) < 1e-12);
    CHECK(max_diff(build_triangle_distribution(SpdcHeralded{0.01}, m, SingleLoss{1.0}, cg), none) < 1e-12);
    auto noisy = build_triangle_distribution(DephasedNoon{2, 0.3}, m, FullLoss{0.6}, cg);
    CHECK(max_diff(rotate_parties(noisy), noisy) < 1e-10);
    // Raw alphabets differ with the source truncation; compare on lpnoise7.
    auto five = coarse_graining_by_name("lpnoise7");
    auto tilted = build_triangle_distribution(TiltedNoon{}, m, FullLoss{0.6}, five);
    auto spdc = build_triangle_distribution(SpdcHeralded{0.0}, m, FullLoss{0.6}, five);
    CHECK(max_diff(tilted, spdc) < 1e-10);
  }
}

TEST_CASE("fast path agrees with the generic six mode path") {
  for (auto noise : {NoiseSpec{NoNoise{}}, NoiseSpec{FullLoss{0.8}}, NoiseSpec{SingleLoss{0.7}}}) {
    auto ref = build_raw_distribution_reference(SpdcHeralded{0.05}, {0.6, 0.3, Detector::PNRD}, noise);
    auto fast = build_raw_distribution(SpdcHeralded{0.05}, {0.6, 0.3, Detector::PNRD}, noise);
    CHECK(max_diff(ref, fast) < 1e-12);
  }
}

TEST_CASE("normalization across settings") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0, 1);
  for (int rep = 0; rep < 6; ++rep) {
    std::vector<SourceSpec> sources{TiltedNoon{2, u(rng)}, DephasedNoon{2, u(rng)},
                                    SpdcHeralded{0.1 * u(rng)}};
    std::vector<NoiseSpec> noises{NoNoise{}, FullLoss{u(rng)}, SingleLoss{u(rng)}};
    for (const auto &s : sources)
      for (const auto &n : noises)
        for (auto det : {Detector::PNRD, Detector::ClickNoClick}) {
          auto d = build_raw_distribution(s, {u(rng), 6 * u(rng), det}, n);
          CHECK(std::abs(d.total() - 1) < 1e-10);
          for (double p : d.probs) CHECK(p >= 0.0);
        }
  }
}

TEST_CASE("marginals") {
  auto d = TriangleDistribution::zeros({{{"x", "y"}, {"x", "y"}, {"x", "y"}}});
  for (auto &p : d.probs) p = 0.125;
  CHECK(party_marginal(d, 1, "y") == doctest::Approx(0.5));
  CHECK_THROWS(party_marginal(d, 0, "z"));
}

TEST_CASE("failure bit augmentation") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  auto d = noiseless(0.8, 1.2);
  SUBCASE("h = 1 appends F0") {
    auto a = augment_with_failure_bits(d, {1, 1, 1});
    for (std::size_t x = 0; x < d.size(0); ++x)
      for (std::size_t y = 0; y < d.size(1); ++y)
        for (std::size_t z = 0; z < d.size(2); ++z)
          CHECK(a.prob(d.alphabets[0][x] + "/F0", d.alphabets[1][y] + "/F0",
                       d.alphabets[2][z] + "/F0") == d.p(x, y, z));
    CHECK(std::abs(a.total() - 1) < 1e-12);
  }
  SUBCASE("block mass and conditional block") {
    std::array<double, 3> h{0.3 + 0.7 * u(rng), 0.3 + 0.7 * u(rng), 0.3 + 0.7 * u(rng)};
    auto a = augment_with_failure_bits(d, h);
    double block = 0, worst = 0;
    for (std::size_t x = 0; x < d.size(0); ++x)
      for (std::size_t y = 0; y < d.size(1); ++y)
        for (std::size_t z = 0; z < d.size(2); ++z) {
          double v = a.prob(d.alphabets[0][x] + "/F0", d.alphabets[1][y] + "/F0",
                            d.alphabets[2][z] + "/F0");
          block += v;
          worst = std::max(worst, std::abs(v / (h[0] * h[1] * h[2]) - d.p(x, y, z)));
        }
    CHECK(block == doctest::Approx(h[0] * h[1] * h[2]).epsilon(1e-13));
    CHECK(worst < 1e-15);
    CHECK(std::abs(a.total() - 1) < 1e-12);
  }
  SUBCASE("local model lifts to the augmented distribution") {
    auto m = token_counting_model();
    std::array<double, 3> h{0.7, 0.3, 1.0};
    auto lifted = lift_with_failures(m, h).distribution();
    auto aug = augment_with_failure_bits(m.distribution(), h);
    CHECK(max_diff(lifted, aug) < 1e-14);
  }
}

TEST_CASE("file round trip is exact") {
  auto d = build_triangle_distribution(SpdcHeralded{0.006785}, {0.75, kPi / 2, Detector::ClickNoClick},
                                       FullLoss{0.61}, coarse_graining_by_name("click4"));
  const char *path = "triangle_roundtrip.json";
  write_distribution(d, path);
  auto back = read_distribution(path);
  std::remove(path);
  CHECK(back.alphabets == d.alphabets);
  CHECK(back.probs == d.probs);
  CHECK(back.meta == d.meta);
  CHECK(d.meta.at("source").at("kind") == "spdc");
}

TEST_CASE("tilt helper") {
  CHECK(lambda0_from_c(1.0) == doctest::Approx(std::sqrt(0.5)));
  CHECK(lambda0_from_c(0.0) == 0.0);
}
