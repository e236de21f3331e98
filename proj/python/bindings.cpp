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

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "trinoon/cli.hpp"
#include "trinoon/lhv.hpp"
#include "trinoon/lp.hpp"
#include "trinoon/triangle.hpp"

namespace py = pybind11;
namespace tri = trinoon::triangle;
namespace lp = trinoon::lp;
namespace lhv = trinoon::lhv;
namespace cli = trinoon::cli;

namespace {

// Structured results cross the boundary as JSON text; the Python side
// turns them into dicts.

py::array_t<double> probs_array(const tri::TriangleDistribution &d) {
  std::vector<py::ssize_t> shape{static_cast<py::ssize_t>(d.size(0)), static_cast<py::ssize_t>(d.size(1)),
                                 static_cast<py::ssize_t>(d.size(2))};
  py::array_t<double> a(shape);
  std::copy(d.probs.begin(), d.probs.end(), a.mutable_data());
  return a;
}

tri::TriangleDistribution from_parts(const std::array<std::vector<std::string>, 3> &alphabets,
                                     py::array_t<double, py::array::c_style | py::array::forcecast> probs,
                                     const std::string &meta) {
  auto d = tri::TriangleDistribution::zeros(alphabets);
  if (static_cast<std::size_t>(probs.size()) != d.probs.size())
    throw std::invalid_argument("probability array does not match the alphabets");
  std::copy(probs.data(), probs.data() + probs.size(), d.probs.begin());
  d.meta = nlohmann::json::parse(meta);
  return d;
}

lp::SplitMode split_mode(const std::string &mode, int M, int refine) {
  if (mode == "exact") return lp::ExactMode{};
  if (mode == "grid") return lp::GridMode{M, refine};
  throw std::invalid_argument("mode must be exact or grid");
}

}  // namespace

PYBIND11_MODULE(_trinoon, m) {
  m.doc() = "Triangle network photonic distributions, LP certificates and local model search";

  py::class_<tri::TriangleDistribution>(m, "Distribution")
      .def_property_readonly("alphabets", [](const tri::TriangleDistribution &d) { return d.alphabets; })
      .def_property_readonly("probs", &probs_array)
      .def_property_readonly("meta_json", [](const tri::TriangleDistribution &d) { return d.meta.dump(); })
      .def("prob", &tri::TriangleDistribution::prob, py::arg("a"), py::arg("b"), py::arg("c"))
      .def("total", &tri::TriangleDistribution::total)
      .def("marginal",
           [](const tri::TriangleDistribution &d, int party, const std::string &label) {
             return tri::party_marginal(d, party, label);
           },
           py::arg("party"), py::arg("label"))
      .def("to_json", [](const tri::TriangleDistribution &d) { return tri::to_json(d).dump(); })
      .def("__repr__", [](const tri::TriangleDistribution &d) {
        std::ostringstream s;
        s << "<Distribution " << d.size(0) << "x" << d.size(1) << "x" << d.size(2) << ">";
        return s.str();
      });

  m.def("_from_parts", &from_parts, py::arg("alphabets"), py::arg("probs"), py::arg("meta") = "{}");
  m.def("_from_json", [](const std::string &text) { return tri::from_json(nlohmann::json::parse(text)); });
  m.def("read_distribution", &tri::read_distribution, py::arg("path"));
  m.def("write_distribution", &tri::write_distribution, py::arg("dist"), py::arg("path"));

  m.def(
      "generate",
      [](const std::string &source, double t, const std::string &phi, const std::string &noise,
         const std::string &detector, const std::string &coarse, double lambda0sq, double d, double Q, int N) {
        cli::GenParams g;
        g.source = source;
        g.t = t;
        g.phi = cli::parse_angle(phi);
        g.noise = noise;
        g.detector = detector;
        g.coarse = coarse;
        g.lambda0sq = lambda0sq;
        g.d = d;
        g.Q = Q;
        g.N = N;
        return cli::generate(g);
      },
      py::arg("source") = "tilted", py::arg("t") = 0.75, py::arg("phi") = "pi/2", py::arg("noise") = "none",
      py::arg("detector") = "pnrd", py::arg("coarse") = "", py::arg("lambda0sq") = 0.5, py::arg("d") = 0.0,
      py::arg("Q") = 0.0, py::arg("N") = 2);
  m.def("closed_form", &tri::closed_form_distribution, py::arg("t"), py::arg("phi"), py::arg("lambda0"));
  m.def("coarse_graining_names", &tri::coarse_graining_names);
  m.def("augment_with_failure_bits", &tri::augment_with_failure_bits, py::arg("dist"), py::arg("h"));

  m.def("lemma1_interval", [](double p) {
    auto iv = lp::lemma1_interval(p);
    return std::make_pair(iv.lo, iv.hi);
  });
  m.def(
      "_certify",
      [](const tri::TriangleDistribution &d, const std::vector<std::string> &ostars, const std::string &mode,
         int M, int refine) {
        py::gil_scoped_release release;
        return lp::to_json(lp::certify_nonlocality(d, ostars, split_mode(mode, M, refine))).dump();
      },
      py::arg("dist"), py::arg("ostars"), py::arg("mode") = "exact", py::arg("M") = 8, py::arg("refine") = 2);

  m.def(
      "_search",
      [](const tri::TriangleDistribution &d, int restarts, std::uint64_t seed, int width, int depth,
         const std::string &schedule, int threads) {
        lhv::SearchConfig cfg;
        cfg.width = width;
        cfg.depth = depth;
        cfg.schedule = schedule.empty() ? lhv::desk_schedule()
                                        : lhv::schedule_from_json(nlohmann::json::parse(schedule));
        py::gil_scoped_release release;
        return lhv::to_json(lhv::search(d, restarts, cfg, seed, threads), d.meta).dump();
      },
      py::arg("dist"), py::arg("restarts") = 10, py::arg("seed") = 1, py::arg("width") = 40, py::arg("depth") = 3,
      py::arg("schedule") = "", py::arg("threads") = 1);
  m.def("_desk_schedule", [] { return lhv::to_json(lhv::desk_schedule()).dump(); });
  m.def("_full_schedule", [] { return lhv::to_json(lhv::full_schedule()).dump(); });

  m.def(
      "gradient_check",
      [](int width, int depth, std::array<int, 3> outputs, std::uint64_t seed, const tri::TriangleDistribution &d,
         int n_params) {
        auto model = lhv::init_model(width, depth, outputs, seed);
        lhv::GradCheckOptions o;
        o.n_params = n_params;
        Eigen::Map<const Eigen::VectorXd> p(d.probs.data(), static_cast<Eigen::Index>(d.probs.size()));
        return lhv::finite_diff_check(model, p, o);
      },
      py::arg("width"), py::arg("depth"), py::arg("outputs"), py::arg("seed"), py::arg("target"),
      py::arg("n_params") = 50);

  m.def(
      "run_cli",
      [](const std::vector<std::string> &args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::run(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));

  py::register_exception<lp::PremiseViolation>(m, "PremiseViolation", PyExc_ValueError);
  py::register_exception<lhv::AllDiverged>(m, "AllDiverged", PyExc_RuntimeError);
  py::register_exception<cli::ConfigError>(m, "ConfigError", PyExc_ValueError);
}
