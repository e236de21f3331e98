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

#ifndef TRINOON_CLI_HPP
#define TRINOON_CLI_HPP

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "trinoon/triangle.hpp"

namespace trinoon::cli {

using json = nlohmann::json;

enum ExitCode { kOk = 0, kInvalidConfig = 2, kComputeFailure = 3 };

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Radians, or a multiple of pi written as "pi", "pi/2", "3*pi/4", "-pi/2".
double parse_angle(const std::string &s);

struct Sweep {
  std::string name;
  std::vector<double> values;
};
// "name=start:stop:step"; the stop value is included when the last grid
// point lands within half a step of it. start > stop gives no values.
// "name=v1,v2,..." lists the values directly.
Sweep parse_sweep(const std::string &s);

// Physical parameters that generate a distribution.
struct GenParams {
  std::string source = "tilted";  // tilted | dephased | spdc
  int N = 2;
  double lambda0sq = 0.5;
  double d = 0.0;
  double Q = 0.0;
  double t = 0.75;
  double phi = 1.5707963267948966;
  std::string noise = "none";  // none | full:ETA | single:ETA
  std::string detector = "pnrd";
  std::string coarse;  // empty picks pnrd5 or click4
  // Applies one sweep variable: t, phi, eta, lambda0sq, d, Q.
  void set(const std::string &name, double value);
  json to_json() const;
};

triangle::TriangleDistribution generate(const GenParams &g);

// Turns a JSON object into flags placed before the user's own arguments.
// Keys the user also passes on the command line are dropped.
std::vector<std::string> expand_config(const json &config,
                                       const std::vector<std::string> &user_args);

// args excludes the program name. Returns the process exit code.
int run(const std::vector<std::string> &args, std::ostream &out,
        std::ostream &err);

}  // namespace trinoon::cli

#endif  // TRINOON_CLI_HPP
