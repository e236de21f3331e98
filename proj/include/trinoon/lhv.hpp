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

#ifndef TRINOON_LHV_HPP
#define TRINOON_LHV_HPP

#include <array>
#include <cstdint>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "trinoon/triangle.hpp"

namespace trinoon::lhv {

using json = nlohmann::json;
using Eigen::MatrixXd;
using Eigen::VectorXd;

enum class Activation { Tanh, Identity };
enum class LossKind { KL, L2 };
enum class OptimizerKind { Adadelta, Sgd };

struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Three perceptrons, one per party, packed into a single parameter vector.
// Party A reads (beta, gamma), B reads (gamma, alpha), C reads (alpha, beta).
// Inputs in [0,1] are mapped to [-1,1] before the first layer.
struct ResponseModel {
  int width = 40;
  int depth = 3;
  std::array<int, 3> outputs{};
  std::uint64_t seed = 0;
  Activation activation = Activation::Tanh;
  VectorXd theta;

  struct Layer {
    std::size_t w_offset;
    std::size_t b_offset;
    int rows;
    int cols;
  };
  // layers[party] lists hidden layers followed by the output layer.
  std::array<std::vector<Layer>, 3> layers;

  std::size_t num_params() const { return static_cast<std::size_t>(theta.size()); }
  // Response distribution of one party for a single input pair.
  VectorXd response(int party, double x, double y) const;
  // Columns are inputs (2 x m); returns outputs x m.
  MatrixXd response_batch(int party, const MatrixXd &inputs) const;
  // FNV-1a over the raw parameter bytes, as 16 hex digits.
  std::string digest() const;
};

ResponseModel init_model(int width, int depth, std::array<int, 3> outputs,
                         std::uint64_t seed,
                         Activation activation = Activation::Tanh);

using Triple = std::array<double, 3>;  // (alpha, beta, gamma)

// Batch mean of pA(a|b,g) pB(b|g,a) pC(c|a,b), row-major over (a,b,c).
VectorXd forward(const ResponseModel &m, const std::vector<Triple> &batch);

// Hidden values per source; the batch is every triple of the product, so a
// product batch of n values per source holds n^3 triples.
struct ProductBatch {
  VectorXd alpha, beta, gamma;
  std::size_t triples() const {
    return static_cast<std::size_t>(alpha.size() * beta.size() * gamma.size());
  }
};

// One jittered point in each of n equal strata per source.
ProductBatch stratified_batch(int n, std::mt19937_64 &rng);
// Midpoints of n equal strata.
ProductBatch midpoint_batch(int n);

VectorXd forward(const ResponseModel &m, const ProductBatch &batch);

double loss(const VectorXd &p_hat, const VectorXd &p_target, LossKind kind);
// Gradient of loss with respect to p_hat.
VectorXd loss_gradient(const VectorXd &p_hat, const VectorXd &p_target,
                       LossKind kind);
double euclidean(const VectorXd &p, const VectorXd &q);

// Loss and its gradient with respect to theta on a product batch.
double loss_and_gradient(const ResponseModel &m, const ProductBatch &batch,
                         const VectorXd &p_target, LossKind kind,
                         VectorXd &grad);

struct Phase {
  LossKind loss = LossKind::KL;
  OptimizerKind optimizer = OptimizerKind::Adadelta;
  int epochs = 1;
  int batches_per_epoch = 500;
  // Hidden values per source; a batch holds batch_size^3 triples.
  int batch_size = 20;
  double step_size = 1.0;
  double rho = 0.95;
  double epsilon = 1e-6;
  // The first epoch of the phase is run this many times from the same
  // starting point and the best outcome is kept.
  int first_epoch_tries = 1;
};

struct TrainSchedule {
  std::vector<Phase> phases;
  int eval_points = 47;  // midpoint grid per source for the reported distance

  void validate() const;
  int total_epochs() const;
};

// Adadelta on KL (first epoch twice), SGD on KL up to epoch 6, two epochs of
// Adadelta on L2, then 16 epochs of SGD on L2.
TrainSchedule full_schedule(int batches_per_epoch = 5000, int batch_size = 20);
TrainSchedule desk_schedule();

json to_json(const TrainSchedule &s);
TrainSchedule schedule_from_json(const json &j);
const char *loss_name(LossKind k);
const char *optimizer_name(OptimizerKind k);

struct TrainResult {
  ResponseModel model;  // parameters at the smallest recorded distance
  double initial_distance = 0.0;
  double best_distance = 0.0;
  std::vector<double> trace;  // per-epoch distance on the evaluation grid
  bool diverged = false;
  std::string reason;
};

struct Divergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

TrainResult train(const ResponseModel &model, const VectorXd &target,
                  const TrainSchedule &schedule, std::uint64_t seed);

struct SearchConfig {
  int width = 40;
  int depth = 3;
  Activation activation = Activation::Tanh;
  TrainSchedule schedule = desk_schedule();
};

struct RestartResult {
  std::uint64_t seed = 0;
  double final_distance = 0.0;
  std::vector<double> trace;
  bool diverged = false;
  std::string reason;
  std::string digest;
};

struct SearchResult {
  double best_distance = 0.0;
  int best_restart = -1;
  std::string best_digest;
  std::vector<RestartResult> restarts;
  SearchConfig config;
  std::uint64_t master_seed = 0;
};

struct AllDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Restart seeds are the first `restarts` outputs of splitmix64 seeded with
// master_seed, so a run with more restarts extends a shorter one.
std::vector<std::uint64_t> restart_seeds(std::uint64_t master_seed, int restarts);

SearchResult search(const triangle::TriangleDistribution &target, int restarts,
                    const SearchConfig &config, std::uint64_t master_seed,
                    int threads = 1);

json to_json(const SearchConfig &c);
json to_json(const SearchResult &r, const json &target_meta);

// Finite differences on sampled parameters against the analytic gradient.
// The hook, if set, may alter the analytic gradient before comparison.
struct GradCheckOptions {
  int n_params = 50;
  double step = 1e-5;
  LossKind loss = LossKind::KL;
  int batch_size = 6;
  std::uint64_t seed = 7;
  std::function<void(const ResponseModel &, VectorXd &)> mutate;
};
double finite_diff_check(const ResponseModel &m, const VectorXd &target,
                         const GradCheckOptions &opt = {});

// Exact distribution of the model as a midpoint quadrature on n^3 cells.
VectorXd quadrature(const ResponseModel &m, int n);

std::uint64_t splitmix64(std::uint64_t &state);

}  // namespace trinoon::lhv

#endif  // TRINOON_LHV_HPP
