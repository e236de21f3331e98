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

#include "trinoon/cli.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <ostream>
#include <regex>
#include <set>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "trinoon/lhv.hpp"
#include "trinoon/lp.hpp"

namespace trinoon::cli {

namespace tri = trinoon::triangle;

double parse_angle(const std::string &raw) {
  std::string s;
  for (char c : raw)
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  static const std::regex pi_form(R"(^([+-]?)(?:([0-9.]+)\*?)?pi(?:/([0-9.]+))?$)");
  std::smatch m;
  if (std::regex_match(s, m, pi_form)) {
    double v = std::numbers::pi;
    if (m[2].matched) v *= std::stod(m[2]);
    if (m[3].matched) v /= std::stod(m[3]);
    return m[1] == "-" ? -v : v;
  }
  try {
    std::size_t pos = 0;
    double v = std::stod(s, &pos);
    if (pos == s.size() && std::isfinite(v)) return v;
  } catch (const std::exception &) {
  }
  throw ConfigError("bad angle: " + raw);
}

Sweep parse_sweep(const std::string &s) {
  static const std::regex list_form(R"(^([A-Za-z_][A-Za-z0-9_]*)=([^:]+(?:,[^:,]+)+)$)");
  std::smatch lm;
  if (std::regex_match(s, lm, list_form)) {
    Sweep out;
    out.name = lm[1];
    std::string body = lm[2];
    std::size_t pos = 0;
    while (pos <= body.size()) {
      auto comma = body.find(',', pos);
      if (comma == std::string::npos) comma = body.size();
      out.values.push_back(parse_angle(body.substr(pos, comma - pos)));
      pos = comma + 1;
    }
    return out;
  }
  static const std::regex form(R"(^([A-Za-z_][A-Za-z0-9_]*)=([^:]+):([^:]+):([^:]+)$)");
  std::smatch m;
  if (!std::regex_match(s, m, form))
    throw ConfigError("sweep must look like name=start:stop:step, got " + s);
  Sweep out;
  out.name = m[1];
  double a, b, h;
  try {
    a = parse_angle(m[2]);
    b = parse_angle(m[3]);
    h = parse_angle(m[4]);
  } catch (const ConfigError &) {
    throw ConfigError("bad number in sweep " + s);
  }
  if (!(h > 0.0)) throw ConfigError("sweep step must be positive: " + s);
  if (a > b) return out;
  const auto count = static_cast<long>(std::floor((b - a) / h + 0.5)) + 1;
  if (count > 1000000) throw ConfigError("sweep too long: " + s);
  for (long k = 0; k < count; ++k) out.values.push_back(a + static_cast<double>(k) * h);
  return out;
}

void GenParams::set(const std::string &name, double value) {
  if (name == "t") t = value;
  else if (name == "phi") phi = value;
  else if (name == "lambda0sq") lambda0sq = value;
  else if (name == "d") d = value;
  else if (name == "Q") Q = value;
  else if (name == "eta") {
    auto colon = noise.find(':');
    if (colon == std::string::npos)
      throw ConfigError("eta sweep needs --noise full:ETA or single:ETA");
    noise = noise.substr(0, colon) + ":" + fmt::format("{}", value);
  } else {
    throw ConfigError("unknown sweep variable: " + name);
  }
}

json GenParams::to_json() const {
  return {{"source", source}, {"N", N},       {"lambda0sq", lambda0sq},
          {"d", d},           {"Q", Q},       {"t", t},
          {"phi", phi},       {"noise", noise}, {"detector", detector},
          {"coarse", coarse}};
}

namespace {

tri::NoiseSpec parse_noise(const std::string &s) {
  if (s == "none") return tri::NoNoise{};
  auto colon = s.find(':');
  if (colon == std::string::npos) throw ConfigError("noise must be none, full:ETA or single:ETA");
  std::string kind = s.substr(0, colon);
  double eta;
  try {
    eta = std::stod(s.substr(colon + 1));
  } catch (const std::exception &) {
    throw ConfigError("bad eta in noise " + s);
  }
  if (!(eta >= 0.0 && eta <= 1.0)) throw ConfigError("eta must lie in [0,1]");
  if (kind == "full") return tri::FullLoss{eta};
  if (kind == "single") return tri::SingleLoss{eta};
  throw ConfigError("unknown noise kind: " + kind);
}

}  // namespace

tri::TriangleDistribution generate(const GenParams &g) {
  tri::SourceSpec src;
  if (g.source == "tilted") {
    if (!(g.lambda0sq >= 0.0 && g.lambda0sq <= 1.0))
      throw ConfigError("lambda0sq must lie in [0,1]");
    src = tri::TiltedNoon{g.N, std::sqrt(g.lambda0sq)};
  } else if (g.source == "dephased") {
    if (!(g.d >= 0.0 && g.d <= 1.0)) throw ConfigError("d must lie in [0,1]");
    src = tri::DephasedNoon{g.N, g.d};
  } else if (g.source == "spdc") {
    if (!(g.Q >= 0.0 && g.Q <= 1.0)) throw ConfigError("Q must lie in [0,1]");
    src = tri::SpdcHeralded{g.Q};
  } else {
    throw ConfigError("unknown source: " + g.source);
  }
  if (!(g.t >= 0.0 && g.t <= 1.0)) throw ConfigError("t must lie in [0,1]");
  tri::Detector det;
  if (g.detector == "pnrd") det = tri::Detector::PNRD;
  else if (g.detector == "click") det = tri::Detector::ClickNoClick;
  else throw ConfigError("detector must be pnrd or click");
  std::string coarse = g.coarse.empty()
                           ? (det == tri::Detector::PNRD ? "pnrd5" : "click4")
                           : g.coarse;
  tri::CoarseGraining cg;
  try {
    cg = tri::coarse_graining_by_name(coarse);
  } catch (const std::exception &e) {
    throw ConfigError(e.what());
  }
  try {
    return tri::build_triangle_distribution(src, {g.t, g.phi, det},
                                            parse_noise(g.noise), cg);
  } catch (const ConfigError &) {
    throw;
  } catch (const std::invalid_argument &e) {
    throw ConfigError(e.what());
  }
}

std::vector<std::string> expand_config(const json &config,
                                       const std::vector<std::string> &user_args) {
  if (!config.is_object()) throw ConfigError("config file must hold a JSON object");
  std::set<std::string> given;
  for (const auto &a : user_args)
    if (a.rfind("--", 0) == 0) given.insert(a.substr(2, a.find('=') - 2));
  auto scalar = [](const json &v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number_integer()) return std::to_string(v.get<long long>());
    if (v.is_number_unsigned()) return std::to_string(v.get<unsigned long long>());
    if (v.is_number()) return fmt::format("{}", v.get<double>());
    throw ConfigError("unsupported config value: " + v.dump());
  };
  std::vector<std::string> out;
  for (auto it = config.begin(); it != config.end(); ++it) {
    const std::string &key = it.key();
    const json &v = it.value();
    if (given.count(key)) continue;
    std::string flag = "--" + key;
    if (v.is_boolean()) {
      if (v.get<bool>()) out.push_back(flag);
    } else if (v.is_array()) {
      for (const auto &e : v) {
        out.push_back(flag);
        out.push_back(scalar(e));
      }
    } else {
      out.push_back(flag);
      out.push_back(scalar(v));
    }
  }
  return out;
}

namespace {

struct Common {
  GenParams gen;
  std::string phi_text;
  std::string in_path;
  std::string out_path;
  std::string config_path;
  int threads = 0;
};

constexpr auto kLast = CLI::MultiOptionPolicy::TakeLast;

void add_gen_options(CLI::App *app, Common &c) {
  app->add_option("--config", c.config_path, "JSON file with the same keys as the flags");
  app->add_option("--source", c.gen.source, "tilted | dephased | spdc")->multi_option_policy(kLast);
  app->add_option("--N", c.gen.N, "photon number of the N00N state")->multi_option_policy(kLast);
  app->add_option("--lambda0sq", c.gen.lambda0sq, "weight of |0N> in the tilted state")->multi_option_policy(kLast);
  app->add_option("--d", c.gen.d, "dephasing weight")->multi_option_policy(kLast);
  app->add_option("--Q", c.gen.Q, "two-photon admixture of the heralded source")->multi_option_policy(kLast);
  app->add_option("--t", c.gen.t, "beamsplitter transmittivity")->multi_option_policy(kLast);
  app->add_option("--phi", c.phi_text, "beamsplitter phase in radians, pi/2 accepted")->multi_option_policy(kLast);
  app->add_option("--noise", c.gen.noise, "none | full:ETA | single:ETA")->multi_option_policy(kLast);
  app->add_option("--detector", c.gen.detector, "pnrd | click")->multi_option_policy(kLast);
  app->add_option("--coarse", c.gen.coarse, "coarse graining name")->multi_option_policy(kLast);
  app->add_option("--in", c.in_path, "read the distribution from a file")->multi_option_policy(kLast);
  app->add_option("--out", c.out_path, "output file")->multi_option_policy(kLast);
  app->add_option("--threads", c.threads, "worker threads, 0 means all cores")->multi_option_policy(kLast);
}

int resolve_threads(int t) {
  if (t > 0) return t;
  return std::max(1u, std::thread::hardware_concurrency());
}

void finish_gen(Common &c) {
  if (!c.phi_text.empty()) c.gen.phi = parse_angle(c.phi_text);
}

void write_text(const std::string &path, const std::string &text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open " + path + " for writing");
  f << text;
  if (!f) throw std::runtime_error("write failed: " + path);
}

std::string csv_num(double v) {
  if (!std::isfinite(v)) return "";
  return fmt::format("{}", v);
}

tri::TriangleDistribution load_target(const Common &c) {
  if (!c.in_path.empty()) {
    try {
      return tri::read_distribution(c.in_path);
    } catch (const std::exception &e) {
      throw ConfigError(std::string("cannot read distribution: ") + e.what());
    }
  }
  return generate(c.gen);
}

json resolved(const std::string &cmd, const Common &c, json extra) {
  json j = {{"subcommand", cmd}, {"threads", resolve_threads(c.threads)}};
  if (c.in_path.empty()) j["generator"] = c.gen.to_json();
  else j["in"] = c.in_path;
  for (auto it = extra.begin(); it != extra.end(); ++it) j[it.key()] = it.value();
  return j;
}

std::vector<std::string> default_ostars(const tri::TriangleDistribution &d) {
  std::vector<std::string> out;
  for (const char *l : {"0", "4"})
    if (d.has_label(0, l)) out.push_back(l);
  return out;
}

std::vector<json> sweep_grid(const std::vector<std::string> &specs) {
  std::vector<json> grid{json::object()};
  for (const auto &s : specs) {
    Sweep sw = parse_sweep(s);
    std::vector<json> next;
    for (const auto &g : grid)
      for (double v : sw.values) {
        json e = g;
        e[sw.name] = v;
        next.push_back(e);
      }
    grid = std::move(next);
  }
  return grid;
}

GenParams with_point(const GenParams &base, const json &point) {
  GenParams g = base;
  for (auto it = point.begin(); it != point.end(); ++it)
    g.set(it.key(), it.value().get<double>());
  return g;
}

// ---- dist ----------------------------------------------------------------

int cmd_dist(Common &c, std::ostream &out) {
  finish_gen(c);
  auto d = generate(c.gen);
  d.meta["config"] = resolved("dist", c, json::object());
  if (c.out_path.empty()) throw ConfigError("--out is required");
  tri::write_distribution(d, c.out_path);
  out << fmt::format("wrote {} ({}x{}x{})\n", c.out_path, d.size(0), d.size(1), d.size(2));
  out << fmt::format("normalization residual {:.3e}\n", std::abs(1.0 - d.total()));
  for (const auto &l : d.alphabets[0])
    out << fmt::format("p({}) A {:.12f} B {:.12f} C {:.12f}\n", l,
                       tri::party_marginal(d, 0, l), tri::party_marginal(d, 1, l),
                       tri::party_marginal(d, 2, l));
  return kOk;
}

// ---- certify -------------------------------------------------------------

struct CertifyArgs {
  std::vector<std::string> ostars;
  std::string mode = "exact";
  int M = 8;
  int refine = 2;
  std::vector<std::string> sweeps;
  std::string csv_path;
  double eps = 1e-10;
};

lp::SplitMode split_mode(const CertifyArgs &a) {
  if (a.mode == "exact") return lp::ExactMode{};
  if (a.mode == "grid") {
    if (a.M < 1 || a.refine < 0) throw ConfigError("grid needs M >= 1 and refine >= 0");
    return lp::GridMode{a.M, a.refine};
  }
  throw ConfigError("mode must be exact or grid");
}

void print_certificate(const lp::Certificate &cert, std::ostream &out) {
  out << fmt::format("{:<6} {:<10} {:>12} {:>23} {:>10} {}\n", "o*", "admissible",
                     "p(o*)", "band", "cells", "certified");
  for (const auto &r : cert.per_ostar) {
    std::size_t infeasible = 0;
    for (const auto &cell : r.cells) infeasible += cell.status == "infeasible";
    out << fmt::format("{:<6} {:<10} {:>12.9f} [{:.9f},{:.9f}] {:>4}/{:<5} {}{}\n", r.ostar,
                       r.admissible ? "yes" : "no", r.p_ostar, r.band.lo, r.band.hi,
                       infeasible, r.cells.size(), r.certified ? "yes" : "no",
                       r.note.empty() ? "" : "  (" + r.note + ")");
  }
  out << "verdict: " << lp::verdict_name(cert.verdict)
      << (cert.solver_failure ? " (solver failure)" : "") << "\n";
}

bool premise_only(const lp::Certificate &cert) {
  if (cert.per_ostar.empty()) return false;
  for (const auto &r : cert.per_ostar)
    if (r.admissible) return false;
  return true;
}

int cmd_certify(Common &c, CertifyArgs &a, std::ostream &out, std::ostream &err) {
  finish_gen(c);
  const auto mode = split_mode(a);
  lp::CertifyOptions opt;
  opt.eps = a.eps;
  json extra = {{"mode", a.mode}, {"M", a.M}, {"refine", a.refine},
                {"ostar", a.ostars}, {"sweep", a.sweeps}};

  if (!a.sweeps.empty()) {
    if (!c.in_path.empty()) throw ConfigError("--sweep needs generator parameters, not --in");
    auto grid = sweep_grid(a.sweeps);
    std::vector<std::string> names;
    for (const auto &s : a.sweeps) names.push_back(parse_sweep(s).name);
    auto make = [&](const json &p) { return generate(with_point(c.gen, p)); };
    std::vector<std::string> ostars = a.ostars;
    if (ostars.empty()) ostars = {"0", "4"};
    auto points = lp::scan_parameters(grid, make, ostars, mode, opt,
                                      resolve_threads(c.threads));
    std::string csv;
    for (const auto &n : names) csv += n + ",";
    csv += "verdict,certified_ostar,solver_failure,error\n";
    bool failure = false;
    json results = json::array();
    for (const auto &pt : points) {
      std::string row;
      for (const auto &n : names) row += csv_num(pt.params.at(n).get<double>()) + ",";
      std::string which;
      for (const auto &r : pt.cert.per_ostar)
        if (r.certified) which += (which.empty() ? "" : ";") + r.ostar;
      bool fail = pt.cert.solver_failure;
      failure = failure || fail;
      std::string verdict = pt.error.empty() ? lp::verdict_name(pt.cert.verdict) : "error";
      std::string error = pt.error;
      std::replace(error.begin(), error.end(), ',', ';');
      std::replace(error.begin(), error.end(), '\n', ' ');
      row += verdict + "," + which + "," + (fail ? "1" : "0") + "," + error + "\n";
      csv += row;
      json e = pt.error.empty() ? lp::to_json(pt.cert) : json{{"error", pt.error}};
      e["params"] = pt.params;
      results.push_back(e);
      out << row << std::flush;
    }
    if (!a.csv_path.empty()) write_text(a.csv_path, csv);
    if (!c.out_path.empty())
      write_text(c.out_path,
                 json{{"config", resolved("certify", c, extra)}, {"points", results}}.dump(1) + "\n");
    if (failure) {
      err << "solver failure at one or more sweep points\n";
      return kComputeFailure;
    }
    return kOk;
  }

  auto d = load_target(c);
  std::vector<std::string> ostars = a.ostars.empty() ? default_ostars(d) : a.ostars;
  auto cert = lp::certify_nonlocality(d, ostars, mode, opt);
  print_certificate(cert, out);
  json j = lp::to_json(cert);
  j["config"] = resolved("certify", c, extra);
  j["target_meta"] = d.meta;
  if (!c.out_path.empty()) write_text(c.out_path, j.dump(1) + "\n");
  if (cert.solver_failure) {
    err << "solver failure\n";
    return kComputeFailure;
  }
  if (!a.ostars.empty() && premise_only(cert)) {
    for (const auto &r : cert.per_ostar)
      err << fmt::format("premise violation: o*={} p(o*)={:.9f}: {}; the lemma may not be used with this outcome\n",
                         r.ostar, r.p_ostar, r.note);
    return kInvalidConfig;
  }
  return kOk;
}

// ---- scan ----------------------------------------------------------------

struct ScanArgs {
  std::string param = "t";
  double lo = 0.0, hi = 1.0, tol = 1e-3;
};

int cmd_scan(Common &c, CertifyArgs &a, ScanArgs &s, std::ostream &out, std::ostream &err) {
  finish_gen(c);
  const auto mode = split_mode(a);
  lp::CertifyOptions opt;
  opt.eps = a.eps;
  if (!(s.lo < s.hi) || !(s.tol > 0.0)) throw ConfigError("scan needs lo < hi and tol > 0");
  GenParams probe = c.gen;
  probe.set(s.param, s.lo);  // rejects unknown names early
  json evals = json::array();
  bool failure = false;
  auto verdict_at = [&](double v) {
    GenParams g = c.gen;
    g.set(s.param, v);
    auto d = generate(g);
    auto ostars = a.ostars.empty() ? default_ostars(d) : a.ostars;
    auto cert = lp::certify_nonlocality(d, ostars, mode, opt);
    failure = failure || cert.solver_failure;
    bool nl = cert.verdict == lp::Verdict::CertifiedNonlocal;
    evals.push_back({{"value", v}, {"verdict", lp::verdict_name(cert.verdict)}});
    out << fmt::format("{}={:.9f} {}\n", s.param, v, lp::verdict_name(cert.verdict));
    return nl;
  };
  double lo = s.lo, hi = s.hi;
  bool vlo = verdict_at(lo), vhi = verdict_at(hi);
  json result = {{"config", resolved("scan", c, {{"param", s.param}, {"lo", s.lo},
                                                 {"hi", s.hi}, {"tol", s.tol},
                                                 {"mode", a.mode}, {"M", a.M},
                                                 {"refine", a.refine}, {"ostar", a.ostars}})}};
  if (vlo == vhi) {
    out << "no verdict change between the endpoints\n";
    result["flip"] = nullptr;
  } else {
    while (hi - lo > s.tol) {
      double mid = 0.5 * (lo + hi);
      (verdict_at(mid) == vlo ? lo : hi) = mid;
    }
    out << fmt::format("verdict changes in [{:.9f}, {:.9f}]\n", lo, hi);
    result["flip"] = {lo, hi};
  }
  result["evaluations"] = evals;
  if (!c.out_path.empty()) write_text(c.out_path, result.dump(1) + "\n");
  if (failure) {
    err << "solver failure during scan\n";
    return kComputeFailure;
  }
  return kOk;
}

// ---- search --------------------------------------------------------------

struct SearchArgs {
  int restarts = 10;
  std::uint64_t seed = 1;
  int width = 40;
  int depth = 3;
  std::string schedule = "desk";
  std::string schedule_file;
  int batches_per_epoch = 0;
  int batch_size = 0;
  int eval_points = 0;
  std::vector<std::string> sweeps;
  std::string csv_path;
  std::string trace_csv;
};

lhv::SearchConfig search_config(const SearchArgs &a) {
  lhv::SearchConfig sc;
  if (a.width < 1 || a.depth < 1) throw ConfigError("width and depth must be >= 1");
  if (a.restarts < 1) throw ConfigError("restarts must be >= 1");
  sc.width = a.width;
  sc.depth = a.depth;
  if (!a.schedule_file.empty()) {
    std::ifstream f(a.schedule_file);
    if (!f) throw ConfigError("cannot read " + a.schedule_file);
    try {
      sc.schedule = lhv::schedule_from_json(json::parse(f));
    } catch (const std::exception &e) {
      throw ConfigError(std::string("bad schedule file: ") + e.what());
    }
  } else if (a.schedule == "desk") {
    sc.schedule = lhv::desk_schedule();
  } else if (a.schedule == "full") {
    sc.schedule = lhv::full_schedule();
  } else {
    throw ConfigError("schedule must be desk or full");
  }
  for (auto &p : sc.schedule.phases) {
    if (a.batches_per_epoch > 0) p.batches_per_epoch = a.batches_per_epoch;
    if (a.batch_size > 0) p.batch_size = a.batch_size;
  }
  if (a.eval_points > 0) sc.schedule.eval_points = a.eval_points;
  return sc;
}

std::string trace_rows(const lhv::SearchResult &r, const std::string &prefix) {
  std::string s;
  for (std::size_t k = 0; k < r.restarts.size(); ++k)
    for (std::size_t e = 0; e < r.restarts[k].trace.size(); ++e)
      s += fmt::format("{}{},{},{}\n", prefix, k, e + 1, r.restarts[k].trace[e]);
  return s;
}

int cmd_search(Common &c, SearchArgs &a, std::ostream &out, std::ostream &err) {
  finish_gen(c);
  const auto sc = search_config(a);
  const int threads = resolve_threads(c.threads);
  json extra = {{"restarts", a.restarts}, {"seed", a.seed}, {"sweep", a.sweeps},
                {"search", lhv::to_json(sc)}};

  std::vector<json> grid{json::object()};
  std::vector<std::string> names;
  if (!a.sweeps.empty()) {
    if (!c.in_path.empty()) throw ConfigError("--sweep needs generator parameters, not --in");
    grid = sweep_grid(a.sweeps);
    for (const auto &s : a.sweeps) names.push_back(parse_sweep(s).name);
  }

  json reports = json::array();
  std::string csv, trace;
  for (const auto &n : names) csv += n + ",";
  csv += "best_distance,median_distance,restarts,diverged\n";
  for (const auto &n : names) trace += n + ",";
  trace += "restart,epoch,distance\n";
  bool all_failed = false;
  for (const auto &pt : grid) {
    auto target = a.sweeps.empty() ? load_target(c) : generate(with_point(c.gen, pt));
    std::string prefix;
    for (const auto &n : names) prefix += csv_num(pt.at(n).get<double>()) + ",";
    try {
      auto res = lhv::search(target, a.restarts, sc, a.seed, threads);
      json rep = lhv::to_json(res, target.meta);
      rep["params"] = pt;
      reports.push_back(rep);
      std::vector<double> finals;
      int diverged = 0;
      for (const auto &r : res.restarts) {
        if (std::isfinite(r.final_distance)) finals.push_back(r.final_distance);
        diverged += r.diverged;
      }
      std::sort(finals.begin(), finals.end());
      double median = finals.empty() ? NAN : finals[finals.size() / 2];
      std::string row = fmt::format("{}{},{},{},{}\n", prefix, csv_num(res.best_distance),
                                    csv_num(median), a.restarts, diverged);
      csv += row;
      out << row << std::flush;
      trace += trace_rows(res, prefix);
    } catch (const lhv::AllDiverged &e) {
      all_failed = true;
      reports.push_back({{"params", pt}, {"error", e.what()}});
      err << "all restarts diverged" << (pt.empty() ? "" : " at " + pt.dump()) << "\n";
    }
  }
  if (!c.out_path.empty()) {
    json doc = a.sweeps.empty() ? reports.at(0) : json{{"points", reports}};
    doc["config"] = resolved("search", c, extra);
    write_text(c.out_path, doc.dump(1) + "\n");
  }
  if (!a.csv_path.empty()) write_text(a.csv_path, csv);
  if (!a.trace_csv.empty()) write_text(a.trace_csv, trace);
  return all_failed ? kComputeFailure : kOk;
}

std::vector<std::string> with_config(std::vector<std::string> args) {
  // The config path is taken from the user's arguments before parsing so
  // its values can be placed ahead of them.
  std::string path;
  std::size_t sub = args.empty() ? 0 : 1;
  for (std::size_t k = 0; k < args.size(); ++k) {
    if (args[k] == "--config" && k + 1 < args.size()) path = args[k + 1];
    else if (args[k].rfind("--config=", 0) == 0) path = args[k].substr(9);
  }
  if (path.empty()) return args;
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot read config " + path);
  json cfg;
  try {
    cfg = json::parse(f);
  } catch (const std::exception &e) {
    throw ConfigError(std::string("bad config file: ") + e.what());
  }
  std::vector<std::string> user(args.begin() + static_cast<long>(sub), args.end());
  auto pre = expand_config(cfg, user);
  std::vector<std::string> out(args.begin(), args.begin() + static_cast<long>(sub));
  out.insert(out.end(), pre.begin(), pre.end());
  out.insert(out.end(), user.begin(), user.end());
  return out;
}

}  // namespace

int run(const std::vector<std::string> &args_in, std::ostream &out,
        std::ostream &err) {
  CLI::App app{"Triangle-network nonlocality tools", "trinoon"};
  app.require_subcommand(1);
  Common common;
  CertifyArgs cert;
  ScanArgs scan;
  SearchArgs srch;

  auto *dist = app.add_subcommand("dist", "write a distribution file");
  add_gen_options(dist, common);

  auto add_cert = [&](CLI::App *s) {
    add_gen_options(s, common);
    s->add_option("--ostar", cert.ostars, "distinguished outcome (repeatable)");
    s->add_option("--mode", cert.mode, "exact | grid")->multi_option_policy(kLast);
    s->add_option("--M", cert.M, "grid cells per axis")->multi_option_policy(kLast);
    s->add_option("--refine", cert.refine, "bisection depth for feasible cells")->multi_option_policy(kLast);
    s->add_option("--eps", cert.eps, "support threshold for the premise")->multi_option_policy(kLast);
  };
  auto *certify = app.add_subcommand("certify", "run the linear program");
  add_cert(certify);
  certify->add_option("--sweep", cert.sweeps, "name=start:stop:step (repeatable)");
  certify->add_option("--csv", cert.csv_path, "region CSV for sweeps")->multi_option_policy(kLast);

  auto *scn = app.add_subcommand("scan", "bisect the verdict along one parameter");
  add_cert(scn);
  scn->add_option("--param", scan.param, "t, phi, eta, lambda0sq, d or Q")->multi_option_policy(kLast);
  scn->add_option("--lo", scan.lo)->multi_option_policy(kLast);
  scn->add_option("--hi", scan.hi)->multi_option_policy(kLast);
  scn->add_option("--tol", scan.tol)->multi_option_policy(kLast);

  auto *search = app.add_subcommand("search", "train local models against a target");
  add_gen_options(search, common);
  search->add_option("--restarts", srch.restarts)->multi_option_policy(kLast);
  search->add_option("--seed", srch.seed, "master seed")->multi_option_policy(kLast);
  search->add_option("--width", srch.width)->multi_option_policy(kLast);
  search->add_option("--depth", srch.depth)->multi_option_policy(kLast);
  search->add_option("--schedule", srch.schedule, "desk | full")->multi_option_policy(kLast);
  search->add_option("--schedule-file", srch.schedule_file)->multi_option_policy(kLast);
  search->add_option("--batches-per-epoch", srch.batches_per_epoch)->multi_option_policy(kLast);
  search->add_option("--batch-size", srch.batch_size, "hidden values per source")->multi_option_policy(kLast);
  search->add_option("--eval-points", srch.eval_points)->multi_option_policy(kLast);
  search->add_option("--sweep", srch.sweeps, "name=start:stop:step (repeatable)");
  search->add_option("--csv", srch.csv_path, "summary CSV")->multi_option_policy(kLast);
  search->add_option("--trace-csv", srch.trace_csv)->multi_option_policy(kLast);

  try {
    auto args = with_config(args_in);
    std::reverse(args.begin(), args.end());
    app.parse(args);
  } catch (const CLI::ParseError &e) {
    if (e.get_exit_code() == 0) {
      out << app.help();
      return kOk;
    }
    err << e.what() << "\n";
    return kInvalidConfig;
  } catch (const ConfigError &e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  }

  try {
    if (dist->parsed()) return cmd_dist(common, out);
    if (certify->parsed()) return cmd_certify(common, cert, out, err);
    if (scn->parsed()) return cmd_scan(common, cert, scan, out, err);
    if (search->parsed()) return cmd_search(common, srch, out, err);
  } catch (const ConfigError &e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const lp::PremiseViolation &e) {
    err << "premise violation: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::invalid_argument &e) {
    err << "invalid configuration: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const std::exception &e) {
    err << "error: " << e.what() << "\n";
    return kComputeFailure;
  }
  return kInvalidConfig;
}

}  // namespace trinoon::cli
