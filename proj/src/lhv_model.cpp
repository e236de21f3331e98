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
#include <cstring>
#include <numeric>

#include <fmt/format.h>

#include "trinoon/lhv.hpp"

namespace trinoon::lhv {

std::uint64_t splitmix64(std::uint64_t &state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

ResponseModel init_model(int width, int depth, std::array<int, 3> outputs,
                         std::uint64_t seed, Activation activation) {
  if (width < 1 || depth < 1) throw ShapeError("width and depth must be >= 1");
  for (int o : outputs)
    if (o < 1) throw ShapeError("empty output alphabet");
  ResponseModel m;
  m.width = width;
  m.depth = depth;
  m.outputs = outputs;
  m.seed = seed;
  m.activation = activation;
  std::size_t off = 0;
  for (int p = 0; p < 3; ++p) {
    int in = 2;
    for (int l = 0; l <= depth; ++l) {
      int out = l < depth ? width : outputs[p];
      ResponseModel::Layer L{off, off + static_cast<std::size_t>(out) * in, out, in};
      off = L.b_offset + out;
      m.layers[p].push_back(L);
      in = out;
    }
  }
  m.theta = VectorXd::Zero(static_cast<Eigen::Index>(off));
  std::mt19937_64 rng(seed);
  for (int p = 0; p < 3; ++p)
    for (const auto &L : m.layers[p]) {
      std::normal_distribution<double> nd(0.0, std::sqrt(2.0 / L.cols));
      for (std::size_t k = 0; k < static_cast<std::size_t>(L.rows) * L.cols; ++k)
        m.theta[static_cast<Eigen::Index>(L.w_offset + k)] = nd(rng);
    }
  return m;
}

namespace {

using CMap = Eigen::Map<const MatrixXd>;
using Map = Eigen::Map<MatrixXd>;
using CVMap = Eigen::Map<const VectorXd>;
using VMap = Eigen::Map<VectorXd>;

struct Cache {
  std::vector<MatrixXd> h;  // h[0] is the scaled input, h[l+1] after layer l
  MatrixXd probs;
};

// Eigen's double tanh is scalar; the exp form vectorizes.
void tanh_inplace(MatrixXd &z) {
  z = (1.0 - 2.0 / ((2.0 * z.array()).exp() + 1.0)).matrix();
}

void softmax_columns(MatrixXd &z) {
  for (Eigen::Index j = 0; j < z.cols(); ++j) {
    auto col = z.col(j);
    col.array() -= col.maxCoeff();
    col = col.array().exp().matrix();
    col /= col.sum();
  }
}

void party_forward(const ResponseModel &m, int p, const MatrixXd &inputs,
                   Cache &c) {
  const auto &layers = m.layers[p];
  c.h.resize(layers.size());
  c.h[0] = inputs.array() * 2.0 - 1.0;
  const double *th = m.theta.data();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const auto &L = layers[l];
    CMap W(th + L.w_offset, L.rows, L.cols);
    CVMap b(th + L.b_offset, L.rows);
    MatrixXd z = W * c.h[l];
    z.colwise() += b;
    if (l + 1 < layers.size()) {
      if (m.activation == Activation::Tanh) tanh_inplace(z);
      c.h[l + 1] = std::move(z);
    } else {
      softmax_columns(z);
      c.probs = std::move(z);
    }
  }
}

// Accumulates d(loss)/d(theta) for party p given d(loss)/d(probs).
void party_backward(const ResponseModel &m, int p, const Cache &c,
                    const MatrixXd &g_probs, VectorXd &grad) {
  const auto &layers = m.layers[p];
  const double *th = m.theta.data();
  MatrixXd dz = c.probs.array() *
                (g_probs.rowwise() -
                 (c.probs.array() * g_probs.array()).colwise().sum().matrix())
                    .array();
  for (std::size_t l = layers.size(); l-- > 0;) {
    const auto &L = layers[l];
    Map gW(grad.data() + L.w_offset, L.rows, L.cols);
    VMap gb(grad.data() + L.b_offset, L.rows);
    gW.noalias() += dz * c.h[l].transpose();
    gb += dz.rowwise().sum();
    if (l == 0) break;
    CMap W(th + L.w_offset, L.rows, L.cols);
    MatrixXd dh = W.transpose() * dz;
    if (m.activation == Activation::Tanh)
      dh.array() *= 1.0 - c.h[l].array().square();
    dz = std::move(dh);
  }
}

struct ProductCache {
  Cache a, b, c;
  std::vector<MatrixXd> pb_by_alpha;  // [i] is outputs_B x n_gamma
};

MatrixXd pair_inputs(const VectorXd &x, const VectorXd &y) {
  MatrixXd in(2, x.size() * y.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    for (Eigen::Index j = 0; j < y.size(); ++j) {
      in(0, i * y.size() + j) = x[i];
      in(1, i * y.size() + j) = y[j];
    }
  return in;
}

void check_batch(const ProductBatch &batch) {
  if (batch.alpha.size() == 0 || batch.beta.size() == 0 ||
      batch.gamma.size() == 0)
    throw ShapeError("empty hidden batch");
}

// Returns p_hat as an (nc x na*nb) matrix, column a*nb+b.
MatrixXd product_forward(const ResponseModel &m, const ProductBatch &batch,
                         ProductCache &pc) {
  check_batch(batch);
  const Eigen::Index na = batch.alpha.size(), nb = batch.beta.size(),
                     ng = batch.gamma.size();
  party_forward(m, 0, pair_inputs(batch.beta, batch.gamma), pc.a);
  party_forward(m, 1, pair_inputs(batch.gamma, batch.alpha), pc.b);
  party_forward(m, 2, pair_inputs(batch.alpha, batch.beta), pc.c);
  const int oa = m.outputs[0], ob = m.outputs[1], oc = m.outputs[2];
  pc.pb_by_alpha.assign(static_cast<std::size_t>(na), MatrixXd(ob, ng));
  for (Eigen::Index k = 0; k < ng; ++k)
    for (Eigen::Index i = 0; i < na; ++i)
      pc.pb_by_alpha[i].col(k) = pc.b.probs.col(k * na + i);
  MatrixXd out = MatrixXd::Zero(oc, oa * ob);
  MatrixXd t(ob, oa);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) {
      t.noalias() = pc.pb_by_alpha[i] * pc.a.probs.middleCols(j * ng, ng).transpose();
      out.noalias() += pc.c.probs.col(i * nb + j) *
                       Eigen::Map<const Eigen::RowVectorXd>(t.data(), oa * ob);
    }
  out /= static_cast<double>(na * nb * ng);
  return out;
}

VectorXd flatten(const MatrixXd &m) {
  return Eigen::Map<const VectorXd>(m.data(), m.size());
}

}  // namespace

MatrixXd ResponseModel::response_batch(int party, const MatrixXd &inputs) const {
  Cache c;
  party_forward(*this, party, inputs, c);
  return c.probs;
}

VectorXd ResponseModel::response(int party, double x, double y) const {
  MatrixXd in(2, 1);
  in << x, y;
  return response_batch(party, in).col(0);
}

std::string ResponseModel::digest() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  const auto *bytes = reinterpret_cast<const unsigned char *>(theta.data());
  for (std::size_t k = 0; k < num_params() * sizeof(double); ++k) {
    h ^= bytes[k];
    h *= 0x100000001b3ULL;
  }
  return fmt::format("{:016x}", h);
}

VectorXd forward(const ResponseModel &m, const std::vector<Triple> &batch) {
  if (batch.empty()) throw ShapeError("empty hidden batch");
  const auto n = static_cast<Eigen::Index>(batch.size());
  MatrixXd ia(2, n), ib(2, n), ic(2, n);
  for (Eigen::Index s = 0; s < n; ++s) {
    const auto &[al, be, ga] = batch[s];
    ia.col(s) << be, ga;
    ib.col(s) << ga, al;
    ic.col(s) << al, be;
  }
  MatrixXd pa = m.response_batch(0, ia), pb = m.response_batch(1, ib),
           pc = m.response_batch(2, ic);
  const int oa = m.outputs[0], ob = m.outputs[1], oc = m.outputs[2];
  VectorXd out = VectorXd::Zero(oa * ob * oc);
  for (Eigen::Index s = 0; s < n; ++s)
    for (int a = 0; a < oa; ++a)
      for (int b = 0; b < ob; ++b) {
        double w = pa(a, s) * pb(b, s);
        for (int c = 0; c < oc; ++c) out[(a * ob + b) * oc + c] += w * pc(c, s);
      }
  return out / static_cast<double>(n);
}

VectorXd forward(const ResponseModel &m, const ProductBatch &batch) {
  ProductCache pc;
  return flatten(product_forward(m, batch, pc));
}

ProductBatch stratified_batch(int n, std::mt19937_64 &rng) {
  if (n < 1) throw ShapeError("batch size must be >= 1");
  std::uniform_real_distribution<double> u(0.0, 1.0);
  ProductBatch b{VectorXd(n), VectorXd(n), VectorXd(n)};
  for (VectorXd *v : {&b.alpha, &b.beta, &b.gamma})
    for (int i = 0; i < n; ++i) (*v)[i] = (i + u(rng)) / n;
  return b;
}

ProductBatch midpoint_batch(int n) {
  if (n < 1) throw ShapeError("batch size must be >= 1");
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = (i + 0.5) / n;
  return {v, v, v};
}

VectorXd quadrature(const ResponseModel &m, int n) {
  return forward(m, midpoint_batch(n));
}

namespace {
constexpr double kFloor = 1e-12;

void check_shapes(const VectorXd &p, const VectorXd &q) {
  if (p.size() != q.size())
    throw ShapeError(fmt::format("distribution sizes differ: {} vs {}",
                                 p.size(), q.size()));
}
}  // namespace

double euclidean(const VectorXd &p, const VectorXd &q) {
  check_shapes(p, q);
  return (p - q).norm();
}

double loss(const VectorXd &p_hat, const VectorXd &p_target, LossKind kind) {
  check_shapes(p_hat, p_target);
  if (kind == LossKind::L2) return (p_hat - p_target).norm();
  double s = 0.0;
  for (Eigen::Index k = 0; k < p_hat.size(); ++k)
    if (p_target[k] > 0.0)
      s += p_target[k] * std::log(p_target[k] / std::max(p_hat[k], kFloor));
  return s;
}

VectorXd loss_gradient(const VectorXd &p_hat, const VectorXd &p_target,
                       LossKind kind) {
  check_shapes(p_hat, p_target);
  VectorXd g = VectorXd::Zero(p_hat.size());
  if (kind == LossKind::L2) {
    double d = (p_hat - p_target).norm();
    if (d > 0.0) g = (p_hat - p_target) / d;
    return g;
  }
  for (Eigen::Index k = 0; k < p_hat.size(); ++k)
    if (p_target[k] > 0.0 && p_hat[k] > kFloor) g[k] = -p_target[k] / p_hat[k];
  return g;
}

double loss_and_gradient(const ResponseModel &m, const ProductBatch &batch,
                         const VectorXd &p_target, LossKind kind,
                         VectorXd &grad) {
  ProductCache pc;
  MatrixXd out = product_forward(m, batch, pc);
  VectorXd p_hat = flatten(out);
  double value = loss(p_hat, p_target, kind);
  VectorXd gp = loss_gradient(p_hat, p_target, kind);

  const Eigen::Index na = batch.alpha.size(), nb = batch.beta.size(),
                     ng = batch.gamma.size();
  const int oa = m.outputs[0], ob = m.outputs[1], oc = m.outputs[2];
  MatrixXd G = Eigen::Map<const MatrixXd>(gp.data(), oc, oa * ob) /
               static_cast<double>(na * nb * ng);
  MatrixXd ga = MatrixXd::Zero(oa, nb * ng);
  MatrixXd gc(oc, na * nb);
  std::vector<MatrixXd> gb_by_alpha(static_cast<std::size_t>(na),
                                    MatrixXd::Zero(ob, ng));
  MatrixXd t(ob, oa), ht(ob, oa);
  for (Eigen::Index i = 0; i < na; ++i)
    for (Eigen::Index j = 0; j < nb; ++j) {
      auto paj = pc.a.probs.middleCols(j * ng, ng);
      t.noalias() = pc.pb_by_alpha[i] * paj.transpose();
      gc.col(i * nb + j).noalias() =
          G * Eigen::Map<const VectorXd>(t.data(), oa * ob);
      Eigen::Map<VectorXd>(ht.data(), oa * ob).noalias() =
          G.transpose() * pc.c.probs.col(i * nb + j);
      ga.middleCols(j * ng, ng).noalias() += ht.transpose() * pc.pb_by_alpha[i];
      gb_by_alpha[i].noalias() += ht * paj;
    }
  MatrixXd gb(ob, ng * na);
  for (Eigen::Index k = 0; k < ng; ++k)
    for (Eigen::Index i = 0; i < na; ++i)
      gb.col(k * na + i) = gb_by_alpha[i].col(k);

  grad = VectorXd::Zero(m.theta.size());
  party_backward(m, 0, pc.a, ga, grad);
  party_backward(m, 1, pc.b, gb, grad);
  party_backward(m, 2, pc.c, gc, grad);
  return value;
}

double finite_diff_check(const ResponseModel &m, const VectorXd &target,
                         const GradCheckOptions &opt) {
  std::mt19937_64 rng(opt.seed);
  ProductBatch batch = stratified_batch(opt.batch_size, rng);
  VectorXd grad;
  loss_and_gradient(m, batch, target, opt.loss, grad);
  if (opt.mutate) opt.mutate(m, grad);

  std::vector<std::size_t> idx(m.num_params());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min<std::size_t>(idx.size(), static_cast<std::size_t>(opt.n_params)));

  ResponseModel probe = m;
  auto loss_at = [&](Eigen::Index e, double x) {
    probe.theta[e] = x;
    return loss(forward(probe, batch), target, opt.loss);
  };
  double worst = 0.0;
  for (std::size_t k : idx) {
    const auto e = static_cast<Eigen::Index>(k);
    const double x0 = m.theta[e], h = opt.step;
    // Five point stencil, truncation error O(h^4).
    double fd = (8.0 * (loss_at(e, x0 + h) - loss_at(e, x0 - h)) -
                 (loss_at(e, x0 + 2 * h) - loss_at(e, x0 - 2 * h))) /
                (12.0 * h);
    probe.theta[e] = x0;
    double scale = std::max({std::abs(fd), std::abs(grad[e]), 1e-6});
    worst = std::max(worst, std::abs(fd - grad[e]) / scale);
  }
  return worst;
}

}  // namespace trinoon::lhv
