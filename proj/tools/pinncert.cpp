#include <malloc.h>

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "pinncert/harness/experiments.hpp"

namespace fs = std::filesystem;
using namespace pinncert;
using namespace pinncert::harness;

namespace {

struct Options {
  std::string config;
  std::string out = ".";
  std::string report;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  bool check = false;
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ConfigError("cannot write " + path.string());
  os << text;
}

RunConfig configure(const Options& o, Experiment e) {
  RunConfig c = o.config.empty() ? parse_config(json::object(), e) : load_config(o.config, e);
  if (o.seed) c.seed = *o.seed;
  if (o.threads) c.threads = *o.threads;
  c.finalize();
  return c;
}

int run_experiment(const Options& o, Experiment e) {
  const auto cfg = configure(o, e);
  fs::create_directories(o.out);
  const auto r = run(cfg);
  write_file(fs::path(o.out) / "report.json", r.report.dump(2) + "\n");
  for (const auto& [name, text] : r.files) write_file(fs::path(o.out) / name, text);
  for (const auto& c : r.checks) std::cout << (c.pass ? "PASS " : "FAIL ") << c.name << ": " << c.detail << "\n";
  std::cout << "wrote " << (fs::path(o.out) / "report.json").string() << "\n";
  return o.check && !r.all_pass() ? 4 : 0;
}

int run_certify(const Options& o) {
  const auto path = o.report.empty() ? (fs::path(o.out) / "report.json").string() : o.report;
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read report " + path);
  json report;
  try {
    report = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("report " + path + " is not valid JSON: " + e.what());
  }
  const auto cert = recertify(report);
  fs::create_directories(o.out);
  write_file(fs::path(o.out) / "certificate.json", cert.dump(2) + "\n");
  std::cout << cert.dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  // training allocates and frees many mid-sized buffers; keep them off mmap
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);

  CLI::App app{"Loss-based error certificates for neural PDE solvers"};
  app.require_subcommand(1);
  Options o;
  const auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON run configuration");
    sub->add_option("--out", o.out, "output directory")->capture_default_str();
    sub->add_option_function<std::uint64_t>("--seed", [&](const std::uint64_t& s) { o.seed = s; }, "override the seed");
    sub->add_option_function<int>("--threads", [&](const int& t) { o.threads = t; }, "worker threads");
    sub->add_flag("--check", o.check, "exit with status 4 when an acceptance check fails");
  };
  std::optional<Experiment> chosen;
  for (auto e : {Experiment::solve_elliptic, Experiment::solve_nse, Experiment::sweep, Experiment::existence_ratio,
                 Experiment::stability, Experiment::hodge}) {
    auto* sub = app.add_subcommand(to_string(e), "run the " + to_string(e) + " experiment");
    add_common(sub);
    sub->callback([&chosen, e] { chosen = e; });
  }
  auto* cert = app.add_subcommand("certify", "re-derive certificates from a saved report");
  cert->add_option("--report", o.report, "report.json to read (default: <out>/report.json)");
  add_common(cert);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  try {
    if (chosen) return run_experiment(o, *chosen);
    return run_certify(o);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const fs::filesystem_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}
