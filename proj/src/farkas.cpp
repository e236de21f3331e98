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

#include <gmpxx.h>

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "trinoon/lp.hpp"

namespace trinoon::lp {

namespace {

// Exact value of a finite long double.
mpq_class exact(real x) {
  if (x == 0) return mpq_class(0);
  if (!std::isfinite(x)) throw std::domain_error("non-finite coefficient");
  int e = 0;
  const real m = std::frexp(x, &e);  // |m| in [0.5, 1)
  const real scaled = std::ldexp(std::fabs(m), 64);
  const auto hi = static_cast<std::uint64_t>(std::ldexp(scaled, -32));
  const auto lo = static_cast<std::uint64_t>(scaled - std::ldexp(static_cast<real>(hi), 32));
  mpz_class z(static_cast<unsigned long>(hi));
  z <<= 32;
  z += static_cast<unsigned long>(lo);
  mpq_class q(z);
  const int shift = e - 64;
  if (shift > 0)
    mpz_mul_2exp(q.get_num_mpz_t(), q.get_num_mpz_t(), shift);
  else if (shift < 0)
    mpz_mul_2exp(q.get_den_mpz_t(), q.get_den_mpz_t(), -shift);
  q.canonicalize();
  return m < 0 ? mpq_class(-q) : q;
}

}  // namespace

FarkasCheck check_farkas(const LpInstance &inst, const std::vector<double> &y) {
  if (y.size() != inst.rows.size())
    throw std::invalid_argument("dual length differs from row count");
  FarkasCheck out;
  double ymax = 0.0;
  for (double v : y) {
    if (!std::isfinite(v)) {
      out.reason = "non-finite multiplier";
      return out;
    }
    ymax = std::max(ymax, std::abs(v));
  }
  if (ymax == 0.0) {
    out.reason = "zero multiplier vector";
    return out;
  }
  std::vector<mpq_class> s(inst.num_vars);
  mpq_class yb = 0;
  const mpq_class scale = mpq_class(1) / mpq_class(ymax);
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] == 0.0) continue;
    const auto &row = inst.rows[i];
    if (row.kind == RowKind::LessEqual && y[i] < 0.0) {
      out.reason = "negative multiplier on an inequality row";
      return out;
    }
    const mpq_class yi = mpq_class(y[i]) * scale;
    yb += yi * exact(row.rhs);
    for (const auto &[j, c] : row.coeffs) s[j] += yi * exact(c);
  }
  // Smallest value of s.x over 0 <= x <= upper.
  mpq_class lower = 0;
  for (int j = 0; j < inst.num_vars; ++j) {
    if (sgn(s[j]) >= 0) continue;
    const real u = inst.upper[j];
    if (!std::isfinite(u)) {
      out.reason = "unbounded variable with negative combined coefficient";
      return out;
    }
    lower += s[j] * exact(u);
  }
  const mpq_class margin = lower - yb;
  out.margin = margin.get_d();
  out.ok = margin > mpq_class("1/1000000000000");
  if (!out.ok) out.reason = "combination does not separate (margin " + std::to_string(out.margin) + ")";
  return out;
}

bool verify_farkas(const LpInstance &inst, const std::vector<double> &y) {
  return check_farkas(inst, y).ok;
}

}  // namespace trinoon::lp
