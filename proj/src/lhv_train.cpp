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

#include <cmath>
#include <limits>
#include <thread>

#include "trinoon/lhv.hpp"

namespace trinoon::lhv {

const char *loss_name(LossKind k) { return k == LossKind::KL ? "kl" : "l2"; }
const char *optimizer_name(OptimizerKind k) {
  return k == OptimizerKind::Adadelta ? "adadelta" : "sgd";
}

void TrainSchedule::validate() const {
  if (phases.empty()) throw ShapeError("schedule has no phases");
  if (eval_points < 1) throw ShapeError("eval_points must be >= 1");
  for (const auto &p : phases) {
    if (p.batch_size < 1) throw ShapeError("batch_size must be >= 1");
    if (p.epochs < 0 || p.batches_per_epoch < 0)
      throw ShapeError("negative epoch or batch count");
    if (p.first_epoch_tries < 1) throw ShapeError("first_epoch_tries must be >= 1");
  }
}

int TrainSchedule::total_epochs() const {
  int n = 0;
  for (const auto &p : phases) n += p.epochs;
  return n;
}

TrainSchedule full_schedule(int batches_per_epoch, int batch_size) {
  auto phase = [&](LossKind l, OptimizerKind o, int epochs, double step) {
    Phase p;
    p.loss = l;
    p.optimizer = o;
    p.epochs = epochs;
    p.batches_per_epoch = batches_per_epoch;
    p.batch_size = batch_size;
    p.step_size = step;
    return p;
  };
  TrainSchedule s;
  s.phases.push_back(phase(LossKind::KL, OptimizerKind::Adadelta, 1, 1.0));
  s.phases.back().first_epoch_tries = 2;
  s.phases.push_back(phase(LossKind::KL, OptimizerKind::Sgd, 5, 0.5));
  s.phases.push_back(phase(LossKind::L2, OptimizerKind::Adadelta, 2, 0.1));
  s.phases.push_back(phase(LossKind::L2, OptimizerKind::Sgd, 16, 0.05));
  return s;
}

TrainSchedule desk_schedule() { return full_schedule(500, 20); }

json to_json(const TrainSchedule &s) {
  json phases = json::array();
  for (const auto &p : s.phases)
    phases.push_back({{"loss", loss_name(p.loss)},
                      {"optimizer", optimizer_name(p.optimizer)},
                      {"epochs", p.epochs},
                      {"batches_per_epoch", p.batches_per_epoch},
                      {"batch_size", p.batch_size},
                      {"triples_per_batch", p.batch_size * p.batch_size * p.batch_size},
                      {"step_size", p.step_size},
                      {"rho", p.rho},
                      {"epsilon", p.epsilon},
                      {"first_epoch_tries", p.first_epoch_tries}});
  return {{"phases", phases}, {"eval_points", s.eval_points}};
}

TrainSchedule schedule_from_json(const json &j) {
  TrainSchedule s;
  s.eval_points = j.value("eval_points", s.eval_points);
  for (const auto &e : j.at("phases")) {
    Phase p;
    std::string l = e.value("loss", "kl"), o = e.value("optimizer", "adadelta");
    if (l == "kl") p.loss = LossKind::KL;
    else if (l == "l2") p.loss = LossKind::L2;
    else throw ShapeError("unknown loss: " + l);
    if (o == "adadelta") p.optimizer = OptimizerKind::Adadelta;
    else if (o == "sgd") p.optimizer = OptimizerKind::Sgd;
    else throw ShapeError("unknown optimizer: " + o);
    p.epochs = e.value("epochs", p.epochs);
    p.batches_per_epoch = e.value("batches_per_epoch", p.batches_per_epoch);
    p.batch_size = e.value("batch_size", p.batch_size);
    p.step_size = e.value("step_size", p.optimizer == OptimizerKind::Sgd ? 0.05 : 1.0);
    p.rho = e.value("rho", p.rho);
    p.epsilon = e.value("epsilon", p.epsilon);
    p.first_epoch_tries = e.value("first_epoch_tries", p.first_epoch_tries);
    s.phases.push_back(p);
  }
  s.validate();
  return s;
}

namespace {

struct OptState {
  VectorXd sq_grad, sq_step;
};

void step(const Phase &ph, VectorXd &theta, const VectorXd &g, OptState &st) {
  if (ph.optimizer == OptimizerKind::Sgd) {
    theta -= ph.step_size * g;
    return;
  }
  st.sq_grad = ph.rho * st.sq_grad + (1.0 - ph.rho) * g.cwiseAbs2();
  VectorXd delta = ((st.sq_step.array() + ph.epsilon).sqrt() /
                    (st.sq_grad.array() + ph.epsilon).sqrt() * g.array())
                       .matrix();
  st.sq_step = ph.rho * st.sq_step + (1.0 - ph.rho) * delta.cwiseAbs2();
  theta -= ph.step_size * delta;
}

void run_epoch(const Phase &ph, ResponseModel &m, const VectorXd &target,
               OptState &st, std::mt19937_64 &rng) {
  VectorXd g;
  for (int b = 0; b < ph.batches_per_epoch; ++b) {
    ProductBatch batch = stratified_batch(ph.batch_size, rng);
    double l = loss_and_gradient(m, batch, target, ph.loss, g);
    if (!std::isfinite(l) || !g.allFinite())
      throw Divergence("non-finite loss or gradient");
    step(ph, m.theta, g, st);
  }
  if (!m.theta.allFinite()) throw Divergence("non-finite parameters");
}

}  // namespace

TrainResult train(const ResponseModel &model, const VectorXd &target,
                  const TrainSchedule &schedule, std::uint64_t seed) {
  schedule.validate();
  const auto n = static_cast<Eigen::Index>(model.outputs[0]) * model.outputs[1] *
                 model.outputs[2];
  if (target.size() != n) throw ShapeError("target does not match model outputs");

  std::mt19937_64 rng(seed);
  const ProductBatch eval = midpoint_batch(schedule.eval_points);
  auto distance = [&](const ResponseModel &m) {
    return euclidean(forward(m, eval), target);
  };

  TrainResult res;
  res.model = model;
  res.initial_distance = distance(model);
  res.best_distance = res.initial_distance;
  ResponseModel cur = model;
  auto record = [&](double d) {
    res.trace.push_back(d);
    if (d < res.best_distance) {
      res.best_distance = d;
      res.model = cur;
    }
  };

  try {
    for (const auto &ph : schedule.phases) {
      OptState st{VectorXd::Zero(cur.theta.size()), VectorXd::Zero(cur.theta.size())};
      for (int e = 0; e < ph.epochs; ++e) {
        if (e == 0 && ph.first_epoch_tries > 1) {
          const ResponseModel start = cur;
          const OptState start_state = st;
          ResponseModel keep;
          OptState keep_state;
          double keep_d = std::numeric_limits<double>::infinity();
          for (int t = 0; t < ph.first_epoch_tries; ++t) {
            cur = start;
            st = start_state;
            run_epoch(ph, cur, target, st, rng);
            double d = distance(cur);
            if (d < keep_d) {
              keep_d = d;
              keep = cur;
              keep_state = st;
            }
          }
          cur = keep;
          st = keep_state;
          record(keep_d);
          continue;
        }
        run_epoch(ph, cur, target, st, rng);
        record(distance(cur));
      }
    }
  } catch (const Divergence &e) {
    res.diverged = true;
    res.reason = e.what();
  }
  return res;
}

std::vector<std::uint64_t> restart_seeds(std::uint64_t master_seed, int restarts) {
  std::vector<std::uint64_t> out;
  std::uint64_t state = master_seed;
  for (int r = 0; r < restarts; ++r) out.push_back(splitmix64(state));
  return out;
}

SearchResult search(const triangle::TriangleDistribution &target, int restarts,
                    const SearchConfig &config, std::uint64_t master_seed,
                    int threads) {
  if (restarts < 1) throw ShapeError("restarts must be >= 1");
  config.schedule.validate();
  const std::array<int, 3> outputs{static_cast<int>(target.size(0)),
                                   static_cast<int>(target.size(1)),
                                   static_cast<int>(target.size(2))};
  const VectorXd p = Eigen::Map<const VectorXd>(
      target.probs.data(), static_cast<Eigen::Index>(target.probs.size()));

  SearchResult out;
  out.config = config;
  out.master_seed = master_seed;
  const auto seeds = restart_seeds(master_seed, restarts);
  out.restarts.resize(seeds.size());

  auto work = [&](std::size_t r) {
    RestartResult &rr = out.restarts[r];
    rr.seed = seeds[r];
    try {
      ResponseModel m = init_model(config.width, config.depth, outputs, seeds[r],
                                   config.activation);
      TrainResult tr = train(m, p, config.schedule, seeds[r] ^ 0x5DEECE66DULL);
      rr.final_distance = tr.best_distance;
      rr.trace = std::move(tr.trace);
      rr.diverged = tr.diverged;
      rr.reason = tr.reason;
      rr.digest = tr.model.digest();
    } catch (const std::exception &e) {
      rr.diverged = true;
      rr.reason = e.what();
      rr.final_distance = std::numeric_limits<double>::infinity();
    }
  };
  threads = std::max(1, std::min(threads, restarts));
  if (threads == 1) {
    for (std::size_t r = 0; r < seeds.size(); ++r) work(r);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t r = static_cast<std::size_t>(w); r < seeds.size();
             r += static_cast<std::size_t>(threads))
          work(r);
      });
    for (auto &t : pool) t.join();
  }

  // A restart that diverged late still reports its best recorded model.
  out.best_distance = std::numeric_limits<double>::infinity();
  for (std::size_t r = 0; r < out.restarts.size(); ++r) {
    const auto &rr = out.restarts[r];
    if (rr.digest.empty()) continue;
    if (rr.final_distance < out.best_distance) {
      out.best_distance = rr.final_distance;
      out.best_restart = static_cast<int>(r);
      out.best_digest = rr.digest;
    }
  }
  bool any_ok = false;
  for (const auto &rr : out.restarts) any_ok = any_ok || !rr.diverged;
  if (!any_ok) throw AllDiverged("all restarts diverged");
  return out;
}

json to_json(const SearchConfig &c) {
  return {{"width", c.width},
          {"depth", c.depth},
          {"activation", c.activation == Activation::Tanh ? "tanh" : "identity"},
          {"init", "normal(0, 2/fan_in) weights, zero biases"},
          {"input_scaling", "2x-1"},
          {"schedule", to_json(c.schedule)}};
}

json to_json(const SearchResult &r, const json &target_meta) {
  json rs = json::array();
  for (const auto &x : r.restarts) {
    json e = {{"seed", x.seed}, {"trace", x.trace}, {"diverged", x.diverged},
              {"digest", x.digest}};
    e["final_distance"] = std::isfinite(x.final_distance) ? json(x.final_distance)
                                                          : json(nullptr);
    if (!x.reason.empty()) e["reason"] = x.reason;
    rs.push_back(e);
  }
  return {{"target_meta", target_meta},
          {"config", to_json(r.config)},
          {"master_seed", r.master_seed},
          {"restarts", rs},
          {"best_restart", r.best_restart},
          {"best_digest", r.best_digest},
          {"best_distance", r.best_distance}};
}

}  // namespace trinoon::lhv
