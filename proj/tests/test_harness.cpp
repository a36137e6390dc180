#include <gtest/gtest.h>

#include <atomic>
#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "pinncert/harness/experiments.hpp"

using namespace pinncert;
using namespace pinncert::harness;

namespace {

// tiny NSE setup so that end-to-end runs take well under a second
json small_nse() {
  return {{"problem", {{"family", "nse"}}},
          {"architecture", {{"widths", {3, 6, 3}}}},
          {"optimizer", {{"max_iterations", 5}}},
          {"sampler", {{"interior", {{"order", 4}}}, {"boundary", {{"count", 16}}}, {"time", {{"nodes", 2}}}}},
          {"errors", {{"order", 6}, {"time_nodes", 2}, {"gradient_grid", 16}, {"gradient_time_nodes", 2}}},
          {"targets", {1e3, 5e2, 2e2}}};
}

json small_elliptic() {
  return {{"architecture", {{"widths", {2, 8, 1}}}},
          {"optimizer", {{"max_iterations", 200}}},
          {"sampler", {{"interior", {{"order", 8}}}}},
          {"errors", {{"order", 10}}}};
}

}  // namespace

TEST(Config, FamilyDefaults) {
  const auto e = parse_config(json::object());
  EXPECT_EQ(e.experiment, Experiment::solve_elliptic);
  EXPECT_EQ(e.widths, (std::vector<int>{2, 32, 32, 1}));
  EXPECT_EQ(e.boundary.count, 128);
  EXPECT_EQ(e.optimizer.target, 1e-4);
  EXPECT_EQ(e.targets, (std::vector<double>{1e-1, 1e-2, 1e-3, 1e-4}));
  EXPECT_EQ(e.horizon, 0.25);

  const auto n = parse_config(json::object(), Experiment::solve_nse);
  EXPECT_TRUE(n.is_nse());
  EXPECT_EQ(n.preset, "mms-stream");
  EXPECT_EQ(n.widths, (std::vector<int>{3, 32, 32, 3}));
  EXPECT_EQ(n.optimizer.target, 1e-1);
  EXPECT_EQ(n.optimizer.max_iterations, 40000);
  EXPECT_EQ(e.optimizer.max_iterations, 20000);
  EXPECT_EQ(n.boundary.count, 64);

  const auto h = parse_config({{"loss", {{"boundary_term", "h12"}}}, {"targets", {1e-3, 1e-1}}});
  EXPECT_EQ(h.boundary.count, 256);
  EXPECT_EQ(h.targets, (std::vector<double>{1e-1, 1e-3}));

  const auto s = parse_config({{"seed", 9}, {"optimizer", {{"target", 0.5}}}}, Experiment::stability);
  EXPECT_EQ(s.optimizer.seed, 9u);
  EXPECT_EQ(s.optimizer.target, 0.5);
}

TEST(Config, RejectsBadInput) {
  EXPECT_THROW(parse_config({{"optimiser", json::object()}}), ConfigError);
  EXPECT_THROW(parse_config({{"optimizer", {{"lr", "fast"}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"optimizer", {{"lr", -1.0}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"experiment", "train"}}), ConfigError);
  EXPECT_THROW(parse_config({{"problem", {{"family", "heat"}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"architecture", {{"widths", {3, 8, 1}}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"sampler", {{"interior", {{"kind", "sobol"}}}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"targets", {0.1, -1.0}}}), ConfigError);
  EXPECT_THROW(parse_config({{"hodge", {{"grid", 30}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"hodge", {{"source", "checkpoint"}}}}), ConfigError);
  EXPECT_THROW(parse_config({{"problem", {{"family", "nse"}}}}, Experiment::existence_ratio), ConfigError);
  EXPECT_THROW(load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
  auto c = parse_config({{"seed", 4},
                         {"architecture", {{"weight_bound", "inf"}, {"activation", "sigmoid"}}},
                         {"loss", {{"m_tilde", 7.0}, {"mu", 0.5}}},
                         {"optimizer", {{"schedule", "constant"}, {"method", "gd"}}}},
                        Experiment::sweep);
  const auto j = c.to_json();
  EXPECT_EQ(parse_config(j).to_json().dump(), j.dump());
  EXPECT_TRUE(std::isinf(parse_config(j).optimizer.bound.half_width));
}

TEST(Harness, ParallelForVisitsEveryIndexAndRethrows) {
  for (int threads : {1, 3}) {
    std::vector<std::atomic<int>> hits(10);
    parallel_for(10, threads, [&](int i) { hits[static_cast<std::size_t>(i)]++; });
    for (const auto& h : hits) EXPECT_EQ(h.load(), 1);
    EXPECT_THROW(parallel_for(5, threads,
                              [](int i) {
                                if (i == 3) throw NumericalError("boom");
                              }),
                 NumericalError);
  }
}

TEST(Harness, PresetsPassSelfTestAndExactErrorsVanish) {
  for (const std::string preset : {"poisson", "variable-a", "reaction", "poisson-disk"}) {
    const auto c = parse_config({{"problem", {{"preset", preset}}}});
    const auto p = elliptic_problem(c);
    for (const auto& [name, err] : compute_true_error(p.exact_field(), p, c)) EXPECT_LE(err, 1e-12) << preset << name;
    EXPECT_GT(exact_h2(p, c), 1.0);
  }
  const auto c = parse_config(json::object(), Experiment::solve_nse);
  const auto p = nse_problem(c);
  EXPECT_LE(compute_true_error(p.exact_field(), p, c).at("L4L2"), 1e-12);
  EXPECT_NO_THROW(nse_problem(c, 0.1));
  EXPECT_THROW(parse_config({{"problem", {{"preset", "nope"}}}}, Experiment::solve_elliptic), ConfigError);
  EXPECT_THROW(elliptic_problem(parse_config({{"problem", {{"preset", "nope"}}}})), ConfigError);
}

TEST(Harness, SolveEllipticReportAndRecertify) {
  auto c = parse_config(small_elliptic(), Experiment::solve_elliptic);
  const auto r = run_solve_elliptic(c);
  for (const auto* f : {"trace.csv", "certificate.json", "network.json"}) EXPECT_TRUE(r.files.count(f)) << f;
  EXPECT_EQ(r.report["experiment"], "solve-elliptic");
  EXPECT_FALSE(r.report["train"].contains("wall_seconds"));
  EXPECT_EQ(r.report["checks"].size(), r.checks.size());
  EXPECT_EQ(recertify(r.report).dump(2) + "\n", r.files.at("certificate.json"));
  const auto eps = r.report["certificate"]["epsilon"].get<double>();
  EXPECT_DOUBLE_EQ(eps * eps, r.report["train"]["achieved"].get<double>());
  EXPECT_THROW(recertify(json{{"experiment", "hodge"}, {"config", c.to_json()}}), ConfigError);
  EXPECT_THROW(recertify(json{{"experiment", "solve-elliptic"}}), ConfigError);
}

TEST(Harness, EllipticSweepRows) {
  auto j = small_elliptic();
  j["architecture"]["widths"] = {2, 16, 1};
  j["targets"] = {1.0, 0.3, 0.1};
  j["optimizer"]["max_iterations"] = 3000;
  const auto r = run_sweep(parse_config(j, Experiment::sweep));
  ASSERT_EQ(r.report["sweep"].size(), 3u);
  EXPECT_TRUE(r.check("targets_met").pass) << r.check("targets_met").detail;
  EXPECT_FALSE(r.report["calibration"]["L2"].is_null());
  EXPECT_FALSE(r.report["calibration"]["H1"].is_null());
  const auto& csv = r.files.at("sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  const auto certs = json::parse(r.files.at("certificate.json"));
  EXPECT_EQ(certs.size(), 3u);
  EXPECT_FALSE(certs[0]["bounds"][0]["fitted_C"].is_null());
  EXPECT_EQ(recertify(r.report).dump(), certs.dump());
}

TEST(Harness, NseRunsAndUnmetTargetsAreRecorded) {
  const auto r = run_sweep(parse_config(small_nse(), Experiment::sweep));
  EXPECT_GT(r.report["penalty_floor"].get<double>(), 0.0);
  ASSERT_EQ(r.report["sweep"].size(), 3u);
  for (const auto& pt : r.report["sweep"])
    if (!pt["target_met"].get<bool>()) {
      EXPECT_TRUE(pt["errors"].empty());
    }
  EXPECT_TRUE(r.check("gradient_part_synthetic_slope").pass);

  const auto s = run_solve_nse(parse_config(small_nse(), Experiment::solve_nse));
  EXPECT_EQ(s.report["certificate"]["kind"], "NSE");
  EXPECT_GT(s.report["errors"]["L4L2"].get<double>(), 0.0);
}

TEST(Harness, StabilityIdenticalRunsAgreeExactly) {
  auto j = small_nse();
  j["stability"] = {{"deltas", {0.0, 0.5}}};
  for (int threads : {1, 2}) {
    j["threads"] = threads;
    const auto r = run_stability(parse_config(j, Experiment::stability));
    EXPECT_EQ(r.report["pairs"][0]["distance"].get<double>(), 0.0);
    EXPECT_GT(r.report["pairs"][1]["distance"].get<double>(), 0.0);
    EXPECT_TRUE(r.check("identical_runs_agree").pass);
    EXPECT_TRUE(r.check("single_constant_bound").pass);
  }
}

TEST(Harness, ExistenceRatio) {
  auto j = small_elliptic();
  j["architecture"]["widths"] = {2, 16, 1};
  j["optimizer"]["max_iterations"] = 3000;
  j["existence"] = {{"eps", {0.5, 0.3}}};
  const auto r = run_existence_ratio(parse_config(j, Experiment::existence_ratio));
  EXPECT_EQ(r.report["points"].size(), 2u);
  for (const auto& p : r.report["points"]) {
    EXPECT_LE(p["eps"].get<double>(), p["eps_target"].get<double>());
    // training and error quadratures differ
    EXPECT_NEAR(p["h2_error"].get<double>(), p["eps"].get<double>(), 1e-2 * p["eps"].get<double>());
  }
}

TEST(Harness, HodgePresetsAndCheckpointSource) {
  const auto mixed = run_hodge(parse_config({{"hodge", {{"grid", 32}}}}, Experiment::hodge));
  EXPECT_TRUE(mixed.check("reconstruction").pass);
  EXPECT_TRUE(mixed.check("orthogonality").pass);
  for (const auto* f : {"field.csv", "u_h.csv", "v1.csv", "v2.csv"}) EXPECT_TRUE(mixed.files.count(f)) << f;
  EXPECT_THROW(run_hodge(parse_config({{"hodge", {{"field", "spiral"}}}}, Experiment::hodge)), ConfigError);

  const auto path = (std::filesystem::temp_directory_path() / "pinncert_hodge_ckpt.json").string();
  dnn::save_checkpoint({dnn::init_network({3, 6, 3}, 2, {}), 2, {}}, path);
  const auto r = run_hodge(
      parse_config({{"hodge", {{"grid", 32}, {"source", "checkpoint"}, {"checkpoint", path}, {"time", 0.1}}}},
                   Experiment::hodge));
  EXPECT_TRUE(r.check("reconstruction").pass);
  EXPECT_FALSE(r.report.contains("div_shrink"));
  std::filesystem::remove(path);
}

TEST(Harness, PerturbedExactFieldScaling) {
  const auto c = parse_config({{"errors", {{"gradient_grid", 16}, {"gradient_time_nodes", 2}}}}, Experiment::solve_nse);
  const auto p = nse_problem(c);
  const double a = gradient_part_norm(perturbed_exact(p, 1e-1), c), b = gradient_part_norm(perturbed_exact(p, 1e-2), c);
  EXPECT_NEAR(a / b, std::sqrt(10.0), 0.1);
}

TEST(Harness, ReportsAreReproducible) {
  const auto c = parse_config(small_nse(), Experiment::sweep);
  EXPECT_EQ(run(c).report.dump(), run(c).report.dump());
  const auto e = parse_config(small_elliptic(), Experiment::solve_elliptic);
  const auto a = run(e), b = run(e);
  EXPECT_EQ(a.report.dump(), b.report.dump());
  EXPECT_EQ(a.files, b.files);
}
