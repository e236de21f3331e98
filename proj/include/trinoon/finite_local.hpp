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

#ifndef TRINOON_FINITE_LOCAL_HPP
#define TRINOON_FINITE_LOCAL_HPP

#include <array>
#include <random>
#include <string>
#include <vector>

#include "trinoon/triangle.hpp"

namespace trinoon::triangle {

// Triangle local model with finitely many hidden symbols per source.
// Source order alpha, beta, gamma. Party A reads (beta, gamma), B reads
// (gamma, alpha), C reads (alpha, beta).
struct FiniteLocalModel {
  std::array<std::vector<double>, 3> weights;
  std::array<std::vector<std::string>, 3> alphabets;
  // response[party][first][second] is a distribution over the party alphabet.
  std::array<std::vector<std::vector<std::vector<double>>>, 3> response;

  static constexpr std::array<std::array<int, 2>, 3> kInputs = {
      {{1, 2}, {2, 0}, {0, 1}}};

  void validate() const;
  TriangleDistribution distribution() const;
};

// Deterministic responses given as label indices.
FiniteLocalModel deterministic_model(
    std::array<std::vector<double>, 3> weights,
    std::array<std::vector<std::string>, 3> alphabets,
    const std::array<std::vector<std::vector<int>>, 3> &table);

// Appends a failure symbol of weight 1-h to each source; a party that sees a
// failure symbol answers null with F1 or F2.
FiniteLocalModel lift_with_failures(const FiniteLocalModel &m,
                                    std::array<double, 3> h);

// Random model where the distinguished label can only occur when the
// party's first source lies in its left set and the second in its right
// set. Same weights and response rule at every party, so the model is
// cyclically symmetric and the premise of the lemma holds exactly.
FiniteLocalModel random_premise_model(std::mt19937_64 &rng, int symbols,
                                      const std::vector<std::string> &alphabet,
                                      const std::string &ostar,
                                      bool deterministic);

// Each source sends one token to one of its two parties with probability
// 1/2; each party outputs how many tokens arrived.
FiniteLocalModel token_counting_model();

}  // namespace trinoon::triangle

#endif  // TRINOON_FINITE_LOCAL_HPP
