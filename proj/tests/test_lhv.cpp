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
#include <limits>
#include <numbers>
#include <random>

#include "trinoon/finite_local.hpp"
#include "trinoon/lhv.hpp"
#include "trinoon/triangle.hpp"

using namespace trinoon::lhv;
namespace tri = trinoon::triangle;

namespace {

VectorXd as_vector(const tri::TriangleDistribution &d) {
  return Eigen::Map<const VectorXd>(d.probs.data(), static_cast<Eigen::Index>(d.probs.size()));
}

TrainSchedule short_schedule(int batches, int n) {
  TrainSchedule s;
  Phase kl;
  kl.loss = LossKind::KL;
  kl.epochs = 3;
  kl.batches_per_epoch = batches;
  kl.batch_size = n;
  Phase l2 = kl;
  l2.loss = LossKind::L2;
  l2.step_size = 0.1;
  s.phases = {kl, l2};
  s.eval_points = 24;
  return s;
}

// Depth 1, width 2: hidden units are sign detectors of the two inputs and
// the output counts tokens, as in the token counting model.
ResponseModel token_counting_net() {
  auto m = init_model(2, 1, {3, 3, 3}, 0);
  m.theta.setZero();
  const double K = 1e4, M = 200;
  for (int p = 0; p < 3; ++p) {
    const auto &h = m.layers[p][0];
    m.theta[static_cast<Eigen::Index>(h.w_offset + 0)] = K;      // W(0,0)
    m.theta[static_cast<Eigen::Index>(h.w_offset + 3)] = K;      // W(1,1)
    const auto &o = m.layers[p][1];
    auto W = [&](int r, int c) -> double & {
      return m.theta[static_cast<Eigen::Index>(o.w_offset + static_cast<std::size_t>(c) * o.rows + r)];
    };
    // tokens = [x < 1/2] + [y >= 1/2]; h0 = sign(x - 1/2), h1 = sign(y - 1/2)
    W(0, 0) = M;  W(0, 1) = -M;  m.theta[static_cast<Eigen::Index>(o.b_offset + 0)] = -M;
    W(2, 0) = -M; W(2, 1) = M;   m.theta[static_cast<Eigen::Index>(o.b_offset + 2)] = -M;
  }
  return m;
}

}  // namespace

TEST_CASE("initialization") {
  auto a = init_model(40, 3, {4, 4, 4}, 7);
  auto b = init_model(40, 3, {4, 4, 4}, 7);
  auto c = init_model(40, 3, {4, 4, 4}, 8);
  CHECK(a.theta == b.theta);
  CHECK(a.digest() == b.digest());
  CHECK(a.digest() != c.digest());
  for (int p = 0; p < 3; ++p) {
    CHECK(a.layers[p].size() == 4);
    CHECK(a.layers[p].back().rows == 4);
    CHECK(a.response(p, 0.2, 0.9).size() == 4);
  }
  // Weight variance close to 2 / fan_in on the 40x40 layers.
  const auto &L = a.layers[0][1];
  double s = 0;
  for (std::size_t k = 0; k < 1600; ++k) s += std::pow(a.theta[static_cast<Eigen::Index>(L.w_offset + k)], 2);
  CHECK(s / 1600 == doctest::Approx(2.0 / 40).epsilon(0.15));
  CHECK_THROWS_AS(init_model(0, 3, {4, 4, 4}, 1), ShapeError);
}

TEST_CASE("outputs are distributions") {
  auto m = init_model(30, 2, {4, 5, 3}, 3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0, 1);
  MatrixXd in(2, 10000);
  for (Eigen::Index k = 0; k < in.cols(); ++k) in.col(k) << u(rng), u(rng);
  for (int p = 0; p < 3; ++p) {
    MatrixXd out = m.response_batch(p, in);
    CHECK(out.minCoeff() >= 0.0);
    CHECK((out.colwise().sum().array() - 1.0).abs().maxCoeff() < 1e-7);
  }
  auto phat = forward(m, stratified_batch(9, rng));
  CHECK(std::abs(phat.sum() - 1) < 1e-7);
  CHECK(phat.size() == 60);
}

TEST_CASE("forward") {
  SUBCASE("constant model gives a point mass") {
    auto m = init_model(5, 2, {4, 4, 4}, 1);
    for (int p = 0; p < 3; ++p) {
      const auto &o = m.layers[p].back();
      for (int r = 0; r < o.rows; ++r)
        for (int c = 0; c < o.cols; ++c) m.theta[static_cast<Eigen::Index>(o.w_offset + c * o.rows + r)] = 0;
      m.theta[static_cast<Eigen::Index>(o.b_offset)] = 60;
    }
    std::vector<Triple> batch{{0.1, 0.5, 0.9}, {0.3, 0.3, 0.3}};
    auto p = forward(m, batch);
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p.tail(63).maxCoeff() < 1e-20);
  }
  SUBCASE("single triple is a product") {
    auto m = init_model(6, 2, {2, 3, 4}, 5);
    Triple t{0.2, 0.7, 0.4};
    auto p = forward(m, std::vector<Triple>{t});
    auto a = m.response(0, t[1], t[2]), b = m.response(1, t[2], t[0]), c = m.response(2, t[0], t[1]);
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 4; ++k) CHECK(p[(i * 3 + j) * 4 + k] == doctest::Approx(a[i] * b[j] * c[k]).epsilon(1e-14));
  }
  SUBCASE("product batch equals the list of its triples") {
    auto m = init_model(6, 2, {2, 3, 4}, 5);
    std::mt19937_64 rng(2);
    auto pb = stratified_batch(4, rng);
    std::vector<Triple> list;
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j)
        for (int k = 0; k < 4; ++k) list.push_back({pb.alpha[i], pb.beta[j], pb.gamma[k]});
    CHECK((forward(m, pb) - forward(m, list)).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("hand wired token counting") {
    auto net = token_counting_net();
    auto target = as_vector(tri::token_counting_model().distribution());
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> u(0, 1);
    const int B = 20000;
    std::vector<Triple> batch(B);
    for (auto &t : batch) t = {u(rng), u(rng), u(rng)};
    auto p = forward(net, batch);
    CHECK((p - target).cwiseAbs().maxCoeff() < 5.0 / std::sqrt(B));
    CHECK((quadrature(net, 40) - target).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK_THROWS_AS(forward(init_model(3, 1, {2, 2, 2}, 1), std::vector<Triple>{}), ShapeError);
}

TEST_CASE("estimator converges to the quadrature") {
  auto m = init_model(20, 2, {3, 3, 3}, 11);
  auto exact = quadrature(m, 200);
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 1);
  auto err = [&](int B) {
    double s = 0;
    for (int rep = 0; rep < 8; ++rep) {
      std::vector<Triple> batch(B);
      for (auto &t : batch) t = {u(rng), u(rng), u(rng)};
      s += (forward(m, batch) - exact).norm();
    }
    return s / 8;
  };
  double e1 = err(500), e2 = err(8000);
  CHECK(e2 < e1 / 2.5);
  CHECK(e2 < 3.0 / std::sqrt(8000.0));
}

TEST_CASE("losses") {
  VectorXd p(4), q(4), d0 = VectorXd::Zero(4), d1 = VectorXd::Zero(4);
  p << 0.9 * 0.9, 0.9 * 0.1, 0.1 * 0.9, 0.1 * 0.1;
  q << 0.25, 0.25, 0.25, 0.25;
  d0[0] = 1;
  d1[3] = 1;
  CHECK(loss(p, p, LossKind::KL) == 0.0);
  CHECK(loss(p, p, LossKind::L2) == 0.0);
  CHECK(loss(d0, d1, LossKind::L2) == doctest::Approx(std::sqrt(2.0)));
  double kl_pq = 0, kl_qp = 0;
  for (int k = 0; k < 4; ++k) {
    kl_pq += p[k] * std::log(p[k] / q[k]);
    kl_qp += q[k] * std::log(q[k] / p[k]);
  }
  CHECK(loss(q, p, LossKind::KL) == doctest::Approx(kl_pq).epsilon(1e-14));
  CHECK(loss(p, q, LossKind::KL) == doctest::Approx(kl_qp).epsilon(1e-14));
  CHECK(std::abs(kl_pq - kl_qp) > 0.05);
  // p_hat floored at 1e-12
  CHECK(loss(d1, d0, LossKind::KL) == doctest::Approx(std::log(1e12)));
  CHECK_THROWS_AS(loss(p, VectorXd::Zero(3), LossKind::L2), ShapeError);
}

TEST_CASE("gradient checks") {
  std::mt19937_64 rng(3);
  auto target = as_vector(tri::token_counting_model().distribution());
  SUBCASE("linear single layer") {
    auto m = init_model(3, 1, {3, 3, 3}, 2, Activation::Identity);
    GradCheckOptions o;
    o.step = 1e-3;
    CHECK(finite_diff_check(m, target, o) < 1e-8);
  }
  SUBCASE("width 30 depth 2") {
    auto m = init_model(30, 2, {3, 3, 3}, 4);
    CHECK(finite_diff_check(m, target, {}) < 1e-4);
    GradCheckOptions o;
    o.loss = LossKind::L2;
    CHECK(finite_diff_check(m, target, o) < 1e-4);
  }
  SUBCASE("sign flipped layer is caught") {
    auto m = init_model(30, 2, {3, 3, 3}, 4);
    GradCheckOptions o;
    o.n_params = static_cast<int>(m.num_params());
    o.mutate = [](const ResponseModel &mm, VectorXd &g) {
      const auto &L = mm.layers[1][1];
      for (std::size_t k = L.w_offset; k < L.b_offset + L.rows; ++k) g[static_cast<Eigen::Index>(k)] *= -1;
    };
    CHECK(finite_diff_check(m, target, o) > 1.0);
  }
}

TEST_CASE("training") {
  SUBCASE("recovers a distribution of its own family") {
    auto frozen = init_model(8, 2, {3, 3, 3}, 99);
    VectorXd target = quadrature(frozen, 24);
    auto start = init_model(20, 2, {3, 3, 3}, 1);
    auto r = train(start, target, short_schedule(150, 10), 5);
    CHECK_FALSE(r.diverged);
    CHECK(r.best_distance < 0.01);
    CHECK(r.best_distance < r.initial_distance);
    CHECK(r.trace.size() == 6);
    CHECK(euclidean(forward(r.model, midpoint_batch(24)), target) == doctest::Approx(r.best_distance));
  }
  SUBCASE("zero epochs keep the initial model") {
    auto m = init_model(5, 1, {3, 3, 3}, 2);
    auto s = short_schedule(10, 4);
    for (auto &p : s.phases) p.epochs = 0;
    VectorXd target = VectorXd::Constant(27, 1.0 / 27);
    auto r = train(m, target, s, 1);
    CHECK(r.best_distance == r.initial_distance);
    CHECK(r.model.theta == m.theta);
    CHECK(r.trace.empty());
  }
  SUBCASE("first epoch tried twice") {
    auto m = init_model(5, 1, {3, 3, 3}, 2);
    auto s = short_schedule(20, 4);
    s.phases[0].first_epoch_tries = 2;
    VectorXd target = VectorXd::Constant(27, 1.0 / 27);
    auto r = train(m, target, s, 1);
    CHECK(r.trace.size() == 6);
  }
  SUBCASE("divergence is reported") {
    auto m = init_model(5, 1, {3, 3, 3}, 2);
    auto s = short_schedule(20, 4);
    s.phases[0].optimizer = OptimizerKind::Sgd;
    s.phases[0].step_size = std::numeric_limits<double>::infinity();
    VectorXd target = VectorXd::Constant(27, 1.0 / 27);
    auto r = train(m, target, s, 1);
    CHECK(r.diverged);
    CHECK_FALSE(r.reason.empty());
  }
  SUBCASE("bad schedule") {
    TrainSchedule s;
    CHECK_THROWS_AS(s.validate(), ShapeError);
    s = short_schedule(1, 0);
    CHECK_THROWS_AS(s.validate(), ShapeError);
  }
}

TEST_CASE("search") {
  auto target = tri::token_counting_model().distribution();
  SearchConfig cfg;
  cfg.width = 6;
  cfg.depth = 1;
  cfg.schedule = short_schedule(15, 5);
  auto seeds = restart_seeds(42, 4);
  CHECK(restart_seeds(42, 2) == std::vector<std::uint64_t>(seeds.begin(), seeds.begin() + 2));

  auto r1 = search(target, 1, cfg, 42);
  auto one = init_model(6, 1, {3, 3, 3}, seeds[0]);
  auto direct = train(one, as_vector(target), cfg.schedule, seeds[0] ^ 0x5DEECE66DULL);
  CHECK(r1.best_distance == direct.best_distance);

  auto r2 = search(target, 2, cfg, 42);
  auto r4 = search(target, 4, cfg, 42, 2);
  CHECK(r4.best_distance <= r2.best_distance);
  for (int k = 0; k < 2; ++k) CHECK(r4.restarts[k].final_distance == r2.restarts[k].final_distance);
  auto r4b = search(target, 4, cfg, 42, 3);
  for (int k = 0; k < 4; ++k) {
    CHECK(r4.restarts[k].trace == r4b.restarts[k].trace);
    CHECK(r4.restarts[k].digest == r4b.restarts[k].digest);
  }
  double m = 1e9;
  for (const auto &r : r4.restarts) m = std::min(m, r.final_distance);
  CHECK(r4.best_distance == m);
  auto j = trinoon::lhv::to_json(r4, target.meta);
  for (const char *k : {"target_meta", "config", "restarts", "best_distance"}) CHECK(j.contains(k));
  CHECK(j["restarts"][0].contains("trace"));
  CHECK_THROWS(search(target, 0, cfg, 1));

  SearchConfig bad = cfg;
  bad.schedule.phases[0].optimizer = OptimizerKind::Sgd;
  bad.schedule.phases[0].step_size = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(search(target, 2, bad, 1), AllDiverged);
}

TEST_CASE("schedules") {
  auto p = full_schedule();
  CHECK(p.total_epochs() == 24);
  CHECK(p.phases[0].first_epoch_tries == 2);
  CHECK(p.phases[0].optimizer == OptimizerKind::Adadelta);
  CHECK(p.phases[1].optimizer == OptimizerKind::Sgd);
  CHECK(p.phases[2].loss == LossKind::L2);
  CHECK(p.phases[3].epochs == 16);
  CHECK(p.phases[0].batches_per_epoch == 5000);
  auto d = desk_schedule();
  CHECK(d.phases[0].batches_per_epoch == 500);
  CHECK(d.phases[0].batch_size * d.phases[0].batch_size * d.phases[0].batch_size == 8000);
  auto back = schedule_from_json(to_json(d));
  CHECK(trinoon::lhv::to_json(back) == trinoon::lhv::to_json(d));
}
