// stochtrig: convergence-rate studies, diagnostics and single trajectories for the
// stochastic trigonometric FEM scheme.
//
// Exit codes: 0 success, 1 compute or check failure, 2 usage or configuration error.

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "stochtrig/stochtrig.hpp"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;
using namespace stochtrig;

namespace {

constexpr int kOk = 0;
constexpr int kFailure = 1;
constexpr int kUsage = 2;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_given = false;
  int threads = 0;
  bool json_output = false;
  std::vector<std::string> overrides;
};

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  return static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
}

config::ConfigMap load_config(const CommonOptions& opts) {
  if (opts.config_path.empty()) throw DomainError("config: --config is required");
  config::ConfigMap map = config::load_file(opts.config_path);
  for (const auto& o : opts.overrides) config::assign(map, o, "--set: ");
  if (opts.seed_given) map["seed"] = std::to_string(opts.seed);
  return map;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw NumericalError("cannot write " + path.string());
  out << content;
  if (!out) throw NumericalError("write failed for " + path.string());
}

json experiment_json(const analysis::ExperimentConfig& c) {
  const bool spatial = c.kind == analysis::StudyKind::spatial;
  return {{"study", spatial ? "spatial" : "temporal"},
          {"problem", c.semilinear ? "semilinear" : "linear"},
          {"reference", c.reference == analysis::ReferenceKind::exact ? "exact" : "numerical"},
          {"theta", c.theta},
          {"s", c.s},
          {"levels", c.levels},
          {"ref_level", c.ref_level},
          {spatial ? "fixed_k" : "fixed_h", c.fixed_other},
          {"n_samples", c.n_samples},
          {"seed", c.seed},
          {"J", c.J},
          {"T", c.T},
          {"correlated_noise", c.correlated_noise},
          {"operator_ordering", c.ordering == schemes::OperatorOrdering::project_then_multiply
                                    ? "project_then_multiply"
                                    : "multiply_then_project"},
          {"noise_scale", c.noise_amplitude}};
}

json fit_json(const analysis::RegressionResult& fit) {
  return {{"slope", fit.slope}, {"intercept", fit.intercept}, {"ci95", fit.ci}};
}

int run_rate(const CommonOptions& opts, analysis::StudyKind kind) {
  const std::string started = utc_now();
  const config::ConfigMap map = load_config(opts);
  const analysis::ExperimentConfig cfg = config::to_experiment(map, kind);
  const int threads = resolve_threads(opts.threads);
  const bool spatial = kind == analysis::StudyKind::spatial;
  const std::string stem = spatial ? "spatial" : "temporal";

  fs::create_directories(opts.out_dir);
  const analysis::ErrorTable table =
      spatial ? analysis::spatial_study(cfg, threads) : analysis::temporal_study(cfg, threads);

  std::ostringstream csv, chart;
  analysis::write_csv(table, csv);
  svg::write_rate_chart(table, spatial ? "h" : "k", chart);
  const fs::path csv_path = fs::path(opts.out_dir) / (stem + ".csv");
  const fs::path svg_path = fs::path(opts.out_dir) / (stem + ".svg");
  const fs::path manifest_path = fs::path(opts.out_dir) / "manifest.json";
  write_file(csv_path, csv.str());
  write_file(svg_path, chart.str());

  int excluded = 0;
  for (const auto& row : table.rows) excluded += row.n_excluded;
  json manifest = {{"artifact_version", std::string(kVersion)},
                   {"command", stem + "-rate"},
                   {"config_file", opts.config_path},
                   {"overrides", opts.overrides},
                   {"config", experiment_json(cfg)},
                   {"threads", threads},
                   {"started", started},
                   {"finished", utc_now()},
                   {"outputs", {{"csv", csv_path.string()}, {"svg", svg_path.string()}}},
                   {"fit", {{"re", fit_json(table.fit_re)}, {"im", fit_json(table.fit_im)},
                            {"combined", fit_json(table.fit_combined)}}},
                   {"excluded_samples", excluded}};
  write_file(manifest_path, manifest.dump(2) + "\n");

  if (opts.json_output) {
    std::cout << manifest.dump(2) << "\n";
  } else {
    std::cout << csv.str();
    std::cout << std::fixed << std::setprecision(3) << "slope u1 " << table.fit_re.slope << " +- " << table.fit_re.ci
              << ", u2 " << table.fit_im.slope << " +- " << table.fit_im.ci << ", combined "
              << table.fit_combined.slope << "\n";
    if (excluded > 0) std::cout << "excluded samples (blowup): " << excluded << "\n";
    std::cout << "wrote " << csv_path.string() << ", " << svg_path.string() << ", " << manifest_path.string() << "\n";
  }
  return kOk;
}

int run_diagnostics(const CommonOptions& opts, bool inject_fault) {
  diagnostics::Options d;
  if (opts.seed_given) d.seed = opts.seed;
  if (inject_fault) d.fault = fem::RotationFault::flip_sine_sign;
  const auto results = diagnostics::run_all(d);
  bool all = true;
  for (const auto& r : results) all = all && r.passed;

  if (opts.json_output) {
    json report = json::array();
    for (const auto& r : results)
      report.push_back({{"name", r.name}, {"passed", r.passed}, {"value", r.value}, {"threshold", r.threshold},
                        {"detail", r.detail}});
    std::cout << json{{"passed", all}, {"checks", report}}.dump(2) << "\n";
  } else {
    for (const auto& r : results)
      std::cout << (r.passed ? "PASS  " : "FAIL  ") << std::left << std::setw(28) << r.name << std::setw(14)
                << std::setprecision(6) << r.value << r.detail << "\n";
    if (!all) {
      std::cout << "failed:";
      for (const auto& r : results)
        if (!r.passed) std::cout << " [" << r.name << "]";
      std::cout << "\n";
    }
  }
  return all ? kOk : kFailure;
}

int run_single_path(const CommonOptions& opts, const std::string& dump, const std::string& path_dump) {
  const config::ConfigMap map = load_config(opts);
  const config::SinglePathConfig cfg = config::to_single_path(map);
  const schemes::ModelProblem problem = cfg.problem();
  const schemes::Discretization disc(fem::Mesh(analysis::cells_for(cfg.h)), cfg.J);
  const int steps = analysis::steps_for(cfg.k, cfg.T);
  const noise::PathTable path = noise::sample_path(problem.noise, cfg.T, steps, cfg.seed, 0);
  const auto states = schemes::run_trajectory(problem, disc, path, schemes::TrajectoryOutput::all_states);

  const fs::path csv_path = dump.empty() ? fs::path(opts.out_dir) / "single_path.csv" : fs::path(dump);
  if (csv_path.has_parent_path()) fs::create_directories(csv_path.parent_path());
  std::ostringstream csv;
  csv << "t,x,u1,u2\n";
  const auto fmt = [](double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
  };
  const fem::Mesh& mesh = disc.mesh();
  for (const double t : cfg.snapshots) {
    const auto n = static_cast<std::size_t>(std::lround(t / cfg.k));
    const auto& u = states.at(n).pair;
    for (int i = 1; i <= mesh.num_interior(); ++i)
      csv << fmt(t) << ',' << fmt(mesh.node(i)) << ',' << fmt(u.re.values[i - 1]) << ',' << fmt(u.im.values[i - 1])
          << '\n';
  }
  write_file(csv_path, csv.str());
  if (!path_dump.empty()) {
    std::ostringstream bin;
    noise::write_path_dump(path, bin);
    write_file(path_dump, bin.str());
  }
  if (opts.json_output)
    std::cout << json{{"csv", csv_path.string()}, {"snapshots", cfg.snapshots}, {"nodes", mesh.num_interior()}}.dump(2)
              << "\n";
  else
    std::cout << "wrote " << csv_path.string() << " (" << cfg.snapshots.size() << " snapshots x "
              << mesh.num_interior() << " nodes)\n";
  return kOk;
}

void add_common(CLI::App* cmd, CommonOptions& opts, bool needs_config) {
  auto* cfg = cmd->add_option("--config", opts.config_path, "configuration file (key = value lines)");
  if (needs_config) cfg->required();
  cmd->add_option("--seed", opts.seed, "override the seed")->each([&](const std::string&) { opts.seed_given = true; });
  cmd->add_option("--threads", opts.threads, "worker threads (default: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_flag("--json", opts.json_output, "machine-readable output on stdout");
  cmd->add_option("--set", opts.overrides, "override a config key, e.g. --set n_samples=50");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Strong convergence studies for the stochastic trigonometric FEM scheme"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);

  CommonOptions opts;
  bool inject_fault = false;
  std::string dump, path_dump;

  auto* spatial = app.add_subcommand("spatial-rate", "strong error vs mesh width h");
  add_common(spatial, opts, true);
  auto* temporal = app.add_subcommand("temporal-rate", "strong error vs time step k");
  add_common(temporal, opts, true);
  auto* diag = app.add_subcommand("diagnostics", "run the property battery");
  add_common(diag, opts, false);
  diag->add_flag("--inject-fault", inject_fault)->group("");
  auto* single = app.add_subcommand("single-path", "simulate one trajectory and write nodal snapshots");
  add_common(single, opts, true);
  single->add_option("--dump", dump, "snapshot CSV path (default: OUT/single_path.csv)");
  single->add_option("--path-dump", path_dump, "also write the Brownian increments as a binary table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (*spatial) return run_rate(opts, analysis::StudyKind::spatial);
    if (*temporal) return run_rate(opts, analysis::StudyKind::temporal);
    if (*diag) return run_diagnostics(opts, inject_fault);
    if (*single) return run_single_path(opts, dump, path_dump);
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "failure: " << e.what() << "\n";
    return kFailure;
  }
  return kUsage;
}
