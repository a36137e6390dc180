#pragma once

// Run configuration: a JSON document with the sections below. Every key is
// optional; unknown keys are rejected so that typos do not pass silently.
//
//   experiment   solve-elliptic | solve-nse | sweep | existence-ratio | stability | hodge
//   seed, threads
//   problem      family (elliptic | nse), preset, horizon, forcing_shift [x, y]
//   loss         boundary_term (l2 | h12), alpha, beta, lambda, mu, m_tilde, modes, penalty_in_objective
//   architecture widths, activation, weight_bound (number or "inf")
//   optimizer    method, lr, lr_min, schedule, beta1, beta2, adam_eps, max_iterations, target,
//                restarts, resample_every
//   sampler      interior {kind, order, count}, boundary {kind, order, count}, time {kind, nodes}
//   errors       order, time_nodes, gradient_grid, gradient_time_nodes
//   targets      list of loss levels for sweeps
//   existence    eps (list of H^2 fitting levels)
//   stability    deltas (list of forcing offsets along (1, 0))
//   hodge        grid, source (preset | checkpoint), field, checkpoint, time

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pinncert/dnn.hpp"
#include "pinncert/error.hpp"
#include "pinncert/geometry.hpp"
#include "pinncert/optimize.hpp"

namespace pinncert::harness {

using nlohmann::json;

enum class Experiment { solve_elliptic, solve_nse, sweep, existence_ratio, stability, hodge };

inline std::string to_string(Experiment e) {
  switch (e) {
    case Experiment::solve_elliptic: return "solve-elliptic";
    case Experiment::solve_nse: return "solve-nse";
    case Experiment::sweep: return "sweep";
    case Experiment::existence_ratio: return "existence-ratio";
    case Experiment::stability: return "stability";
    case Experiment::hodge: return "hodge";
  }
  return "?";
}

inline Experiment parse_experiment(const std::string& s) {
  for (auto e : {Experiment::solve_elliptic, Experiment::solve_nse, Experiment::sweep, Experiment::existence_ratio,
                 Experiment::stability, Experiment::hodge})
    if (to_string(e) == s) return e;
  throw ConfigError("unknown experiment '" + s + "'");
}

inline optimize::OptimizerConfig default_optimizer() {
  optimize::OptimizerConfig o;
  o.lr = 1e-2;
  o.max_iterations = 20000;
  return o;
}

struct RunConfig {
  Experiment experiment = Experiment::solve_elliptic;
  std::uint64_t seed = 0;
  int threads = 1;

  std::string family = "elliptic";
  std::string preset = "poisson";
  double horizon = 0.25;
  std::vector<double> forcing_shift{0.0, 0.0};

  std::string boundary_term = "l2";
  double alpha = 1.0, beta = 1.0, lambda = 1e-2, mu = 0.0;
  std::optional<double> m_tilde;  // default: twice the H^2 norm of the exact solution
  int modes = -1;
  bool penalty_in_objective = false;

  std::vector<int> widths;
  dnn::Activation activation = dnn::Activation::tanh;

  optimize::OptimizerConfig optimizer = default_optimizer();
  bool target_given = false;      // otherwise the family default (1e-4 elliptic, 1e-1 NSE)
  bool iterations_given = false;  // otherwise 20000 elliptic, 40000 NSE

  geometry::InteriorRule interior{geometry::RuleKind::gauss_legendre, 16, 1024};
  geometry::BoundaryRule boundary{geometry::RuleKind::trapezoid, 16, 0};
  geometry::RuleKind time_kind = geometry::RuleKind::gauss_legendre;
  int time_nodes = 8;

  int error_order = 24;
  int error_time_nodes = 8;
  int gradient_grid = 64;
  int gradient_time_nodes = 4;

  std::vector<double> targets;
  std::vector<double> existence_eps{0.2, 0.1, 0.05};
  std::vector<double> deltas{0.0, 1e-2, 1e-1};

  int grid = 128;
  std::string hodge_source = "preset";
  std::string hodge_field = "mixed";
  std::string checkpoint;
  double hodge_time = 0.0;

  bool is_nse() const { return family == "nse"; }

  /// Fills family-dependent defaults and checks ranges.
  void finalize() {
    require(family == "elliptic" || family == "nse", "problem.family must be 'elliptic' or 'nse'");
    if (experiment == Experiment::solve_nse || experiment == Experiment::stability) {
      require(family == "nse" || preset == "poisson", "experiment '" + to_string(experiment) + "' needs the nse family");
      if (family != "nse") preset = "mms-stream";
      family = "nse";
    }
    if (experiment == Experiment::solve_elliptic || experiment == Experiment::existence_ratio)
      require(family == "elliptic", "experiment '" + to_string(experiment) + "' needs the elliptic family");
    if (is_nse() && preset == "poisson") preset = "mms-stream";
    if (widths.empty()) widths = is_nse() ? std::vector<int>{3, 32, 32, 3} : std::vector<int>{2, 32, 32, 1};
    if (boundary.count == 0) boundary.count = is_nse() ? 64 : (boundary_term == "h12" ? 256 : 128);
    if (targets.empty())
      targets = is_nse() ? std::vector<double>{10.0, 1.0, 1e-1, 1e-2, 1e-3} : std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4};
    std::sort(targets.begin(), targets.end(), std::greater<>());
    if (!target_given) optimizer.target = is_nse() ? 1e-1 : 1e-4;
    target_given = true;
    if (!iterations_given) optimizer.max_iterations = is_nse() ? 40000 : 20000;
    iterations_given = true;
    optimizer.seed = seed;
    validate();
    if (is_nse())
      require(preset == "mms-stream", "unknown NSE preset '" + preset + "' (mms-stream)");
    else
      require(preset == "poisson" || preset == "variable-a" || preset == "reaction" || preset == "poisson-disk",
              "unknown elliptic preset '" + preset + "' (poisson, variable-a, reaction, poisson-disk)");
  }

  void validate() const {
    require(boundary_term == "l2" || boundary_term == "h12", "loss.boundary_term must be 'l2' or 'h12'");
    require(alpha > 0.0 && beta > 0.0 && lambda > 0.0 && mu >= 0.0, "loss weights must be positive (mu >= 0)");
    require(!m_tilde || *m_tilde > 0.0, "loss.m_tilde must be positive");
    require(horizon > 0.0, "problem.horizon must be positive");
    require(forcing_shift.size() == 2, "problem.forcing_shift must have two entries");
    require(threads >= 1, "threads must be >= 1");
    require(widths.size() >= 2, "architecture.widths needs at least two entries");
    if (is_nse())
      require(widths.front() == 3 && widths.back() == 3, "NSE networks map (x, y, t) to (u1, u2, p)");
    else
      require(widths.front() == 2 && widths.back() == 1, "elliptic networks map (x, y) to u");
    optimizer.validate();
    require(interior.order >= 1 && interior.count >= 1 && boundary.order >= 1 && boundary.count >= 4,
            "sampler sizes must be positive");
    require(time_nodes >= 1, "sampler.time.nodes must be >= 1");
    require(error_order >= 1 && error_time_nodes >= 1 && gradient_time_nodes >= 1, "error rule sizes must be positive");
    for (double t : targets) require(t > 0.0, "targets must be positive");
    for (double e : existence_eps) require(e > 0.0, "existence.eps entries must be positive");
    for (double d : deltas) require(d >= 0.0, "stability.deltas must be nonnegative");
    require(grid >= 16 && grid % 4 == 0, "hodge.grid must be a multiple of 4, at least 16");
    require(gradient_grid >= 8 && gradient_grid % 2 == 0, "errors.gradient_grid must be even, at least 8");
    require(hodge_source == "preset" || hodge_source == "checkpoint", "hodge.source must be 'preset' or 'checkpoint'");
    require(hodge_source != "checkpoint" || !checkpoint.empty(), "hodge.checkpoint is required for source 'checkpoint'");
  }

  json to_json() const {
    const auto rule = [](const auto& r) {
      return json{{"kind", geometry::to_string(r.kind)}, {"order", r.order}, {"count", r.count}};
    };
    auto opt = optimizer.to_json();
    opt.erase("seed");
    opt.erase("weight_bound");
    return {{"experiment", to_string(experiment)},
            {"seed", seed},
            {"problem", {{"family", family}, {"preset", preset}, {"horizon", horizon}, {"forcing_shift", forcing_shift}}},
            {"loss",
             {{"boundary_term", boundary_term},
              {"alpha", alpha},
              {"beta", beta},
              {"lambda", lambda},
              {"mu", mu},
              {"m_tilde", m_tilde ? json(*m_tilde) : json(nullptr)},
              {"modes", modes},
              {"penalty_in_objective", penalty_in_objective}}},
            {"architecture",
             {{"widths", widths},
              {"activation", dnn::to_string(activation)},
              {"weight_bound", std::isinf(optimizer.bound.half_width) ? json("inf") : json(optimizer.bound.half_width)}}},
            {"optimizer", opt},
            {"sampler",
             {{"interior", rule(interior)},
              {"boundary", rule(boundary)},
              {"time", {{"kind", geometry::to_string(time_kind)}, {"nodes", time_nodes}}}}},
            {"errors",
             {{"order", error_order},
              {"time_nodes", error_time_nodes},
              {"gradient_grid", gradient_grid},
              {"gradient_time_nodes", gradient_time_nodes}}},
            {"targets", targets},
            {"existence", {{"eps", existence_eps}}},
            {"stability", {{"deltas", deltas}}},
            {"hodge",
             {{"grid", grid}, {"source", hodge_source}, {"field", hodge_field}, {"checkpoint", checkpoint}, {"time", hodge_time}}}};
  }
};

namespace detail {

inline void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  require(j.is_object(), where + " must be an object");
  for (const auto& [k, v] : j.items())
    require(allowed.count(k) > 0, "unknown key '" + k + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

inline void read_interior(const json& j, geometry::InteriorRule& r, const std::string& where) {
  check_keys(j, {"kind", "order", "count"}, where);
  if (j.contains("kind")) r.kind = geometry::parse_rule_kind(j.at("kind").get<std::string>());
  read(j, "order", r.order);
  read(j, "count", r.count);
}

inline void read_boundary(const json& j, geometry::BoundaryRule& r, const std::string& where) {
  check_keys(j, {"kind", "order", "count"}, where);
  if (j.contains("kind")) r.kind = geometry::parse_rule_kind(j.at("kind").get<std::string>());
  read(j, "order", r.order);
  read(j, "count", r.count);
}

}  // namespace detail

/// Parses a configuration document; `experiment` (when given) overrides the file's field.
inline RunConfig parse_config(const json& j, std::optional<Experiment> experiment = std::nullopt) {
  using detail::check_keys;
  using detail::read;
  RunConfig c;
  try {
    check_keys(j, {"experiment", "seed", "threads", "problem", "loss", "architecture", "optimizer", "sampler", "errors",
                   "targets", "existence", "stability", "hodge"},
               "config");
    if (j.contains("experiment")) c.experiment = parse_experiment(j.at("experiment").get<std::string>());
    if (experiment) c.experiment = *experiment;
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      check_keys(p, {"family", "preset", "horizon", "forcing_shift"}, "problem");
      read(p, "family", c.family);
      read(p, "preset", c.preset);
      read(p, "horizon", c.horizon);
      read(p, "forcing_shift", c.forcing_shift);
    }
    if (j.contains("loss")) {
      const auto& l = j.at("loss");
      check_keys(l, {"boundary_term", "alpha", "beta", "lambda", "mu", "m_tilde", "modes", "penalty_in_objective"},
                 "loss");
      read(l, "boundary_term", c.boundary_term);
      read(l, "alpha", c.alpha);
      read(l, "beta", c.beta);
      read(l, "lambda", c.lambda);
      read(l, "mu", c.mu);
      if (l.contains("m_tilde") && !l.at("m_tilde").is_null()) c.m_tilde = l.at("m_tilde").get<double>();
      read(l, "modes", c.modes);
      read(l, "penalty_in_objective", c.penalty_in_objective);
    }
    if (j.contains("architecture")) {
      const auto& a = j.at("architecture");
      check_keys(a, {"widths", "activation", "weight_bound"}, "architecture");
      read(a, "widths", c.widths);
      if (a.contains("activation")) c.activation = dnn::parse_activation(a.at("activation").get<std::string>());
      if (a.contains("weight_bound")) {
        const auto& b = a.at("weight_bound");
        c.optimizer.bound = b.is_string() && b.get<std::string>() == "inf" ? dnn::WeightBound::unbounded()
                                                                           : dnn::WeightBound{b.get<double>()};
      }
    }
    if (j.contains("optimizer")) {
      const auto& o = j.at("optimizer");
      check_keys(o, {"method", "lr", "lr_min", "schedule", "beta1", "beta2", "adam_eps", "max_iterations", "target",
                     "restarts", "resample_every"},
                 "optimizer");
      auto& cfg = c.optimizer;
      if (o.contains("method")) cfg.method = optimize::parse_method(o.at("method").get<std::string>());
      if (o.contains("schedule")) cfg.schedule = optimize::parse_schedule(o.at("schedule").get<std::string>());
      read(o, "lr", cfg.lr);
      read(o, "lr_min", cfg.lr_min);
      read(o, "beta1", cfg.beta1);
      read(o, "beta2", cfg.beta2);
      read(o, "adam_eps", cfg.adam_eps);
      read(o, "max_iterations", cfg.max_iterations);
      read(o, "target", cfg.target);
      c.target_given = o.contains("target");
      c.iterations_given = o.contains("max_iterations");
      read(o, "restarts", cfg.restarts);
      read(o, "resample_every", cfg.resample_every);
    }
    if (j.contains("sampler")) {
      const auto& s = j.at("sampler");
      check_keys(s, {"interior", "boundary", "time"}, "sampler");
      if (s.contains("interior")) detail::read_interior(s.at("interior"), c.interior, "sampler.interior");
      if (s.contains("boundary")) detail::read_boundary(s.at("boundary"), c.boundary, "sampler.boundary");
      if (s.contains("time")) {
        const auto& t = s.at("time");
        check_keys(t, {"kind", "nodes"}, "sampler.time");
        if (t.contains("kind")) c.time_kind = geometry::parse_rule_kind(t.at("kind").get<std::string>());
        read(t, "nodes", c.time_nodes);
      }
    }
    if (j.contains("errors")) {
      const auto& e = j.at("errors");
      check_keys(e, {"order", "time_nodes", "gradient_grid", "gradient_time_nodes"}, "errors");
      read(e, "order", c.error_order);
      read(e, "time_nodes", c.error_time_nodes);
      read(e, "gradient_grid", c.gradient_grid);
      read(e, "gradient_time_nodes", c.gradient_time_nodes);
    }
    read(j, "targets", c.targets);
    if (j.contains("existence")) {
      check_keys(j.at("existence"), {"eps"}, "existence");
      read(j.at("existence"), "eps", c.existence_eps);
    }
    if (j.contains("stability")) {
      check_keys(j.at("stability"), {"deltas"}, "stability");
      read(j.at("stability"), "deltas", c.deltas);
    }
    if (j.contains("hodge")) {
      const auto& h = j.at("hodge");
      check_keys(h, {"grid", "source", "field", "checkpoint", "time"}, "hodge");
      read(h, "grid", c.grid);
      read(h, "source", c.hodge_source);
      read(h, "field", c.hodge_field);
      read(h, "checkpoint", c.checkpoint);
      read(h, "time", c.hodge_time);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  c.finalize();
  return c;
}

inline RunConfig load_config(const std::string& path, std::optional<Experiment> experiment = std::nullopt) {
  std::ifstream in(path);
  require(static_cast<bool>(in), "cannot read config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path + " is not valid JSON: " + e.what());
  }
  return parse_config(j, experiment);
}

}  // namespace pinncert::harness
