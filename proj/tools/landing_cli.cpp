// Benchmark CLI for the landing optimizer. Each subcommand builds its
// problem from the seed, runs the requested methods, prints a summary, and
// optionally writes a trace CSV.
//
// Exit codes: 0 success, 1 configuration error, 2 divergence when
// --fail-on-diverge is set.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "landing/harness.hpp"
#include "landing/kernels.hpp"

namespace {

struct GlobalOpts {
  std::string config_path;
  std::uint64_t seed = 0;
  std::string out_path;
  std::string precision = "fp64";
  std::string methods;  // empty = per-experiment default
  bool fail_on_diverge = false;
  std::vector<std::string> overrides;  // key=value, applied over the file
};

landing::ConfigMap load_config(const GlobalOpts& g) {
  landing::ConfigMap cfg;
  if (!g.config_path.empty())
    cfg = landing::ConfigMap::parse_file(g.config_path);
  for (const std::string& kv : g.overrides) {
    const std::size_t eq = kv.find('=');
    if (eq == std::string::npos || eq == 0)
      throw landing::ConfigError("--set expects key=value, got: " + kv);
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

std::vector<std::string> method_list(const GlobalOpts& g,
                                     const std::string& fallback) {
  return landing::split_list(g.methods.empty() ? fallback : g.methods);
}

void print_summary(const std::string& title,
                   const std::vector<landing::ExperimentSummaryLine>& lines) {
  std::cout << title << "\n";
  for (const auto& line : lines)
    std::cout << "  " << line.label << ": " << line.text << "\n";
}

template <typename T>
int finish(const landing::ExperimentResult<T>& result, const GlobalOpts& g) {
  if (!g.out_path.empty()) landing::write_trace_csv(result.traces, g.out_path);
  if (g.fail_on_diverge && result.any_diverged()) return 2;
  return 0;
}

template <typename T>
int run_procrustes(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  const auto methods = method_list(
      g, "landing,rgd-exponential,rgd-projection,rgd-cayley,rgd-qr");
  auto result = landing::experiment_procrustes<T>(cfg, g.seed, methods);
  print_summary("procrustes", result.summary);
  return finish(result, g);
}

template <typename T>
int run_ortho_step(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  auto outcomes = landing::experiment_ortho_step<T>(cfg, g.seed);
  if (!g.out_path.empty()) {
    std::ofstream out(g.out_path);
    if (!out) throw std::runtime_error("cannot write: " + g.out_path);
    out << "method,gamma,seed,residual_in,residual_out\n";
    for (const auto& o : outcomes)
      out << o.method << ',' << landing::format_real17(double(o.gamma)) << ','
          << o.seed << ',' << landing::format_real17(double(o.residual_in))
          << ',' << landing::format_real17(double(o.residual_out)) << "\n";
  }
  // Median output/input ratio per (method, gamma).
  std::map<std::pair<std::string, double>, std::vector<double>> groups;
  for (const auto& o : outcomes)
    groups[{o.method, double(o.gamma)}].push_back(double(o.residual_out) /
                                                  double(o.residual_in));
  std::cout << "ortho-step median residual ratios\n";
  for (auto& [key, ratios] : groups) {
    std::sort(ratios.begin(), ratios.end());
    std::cout << "  " << key.first << " gamma=" << key.second << ": "
              << ratios[ratios.size() / 2] << "\n";
  }
  return 0;
}

template <typename T>
int run_plam(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  auto result = landing::experiment_plam<T>(cfg, g.seed);
  print_summary("plam", result.summary);
  if (!g.out_path.empty()) landing::write_trace_csv(result.traces, g.out_path);
  if (g.fail_on_diverge) {
    // Only landing traces count: PLAM diverging is the expected outcome here.
    for (const auto& t : result.traces)
      if (t.method.rfind("landing/", 0) == 0 &&
          t.final_status == landing::RunStatus::Diverged)
        return 2;
  }
  return 0;
}

template <typename T>
int run_distill(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  const auto methods = method_list(g, "landing,momentum-landing");
  auto result = landing::experiment_distill<T>(cfg, g.seed, methods);
  print_summary("distill", result.summary);
  return finish(result, g);
}

template <typename T>
int run_stiefel(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  const auto methods = method_list(g, "landing,rgd-projection,rgd-qr");
  auto result = landing::experiment_stiefel<T>(cfg, g.seed, methods);
  print_summary("stiefel", result.summary);
  return finish(result, g);
}

template <typename T>
int run_safe_rule(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  auto report = landing::experiment_safe_rule<T>(cfg, g.seed);
  std::cout << "safe-rule-stress trials=" << report.trials
            << " violations=" << report.violations
            << " worst_ratio=" << report.worst_ratio << "\n";
  return report.violations == 0 ? 0 : 2;
}

template <typename T>
int run_schedules(const GlobalOpts& g) {
  landing::ConfigMap cfg = load_config(g);
  auto report = landing::experiment_schedules<T>(cfg, g.seed);
  std::cout << "schedule-rates min_grad_sq="
            << landing::format_real17(double(report.min_grad_sq))
            << " final_penalty="
            << landing::format_real17(double(report.final_penalty)) << "\n";
  if (!g.out_path.empty())
    landing::write_trace_csv(std::vector<landing::RunTrace<T>>{report.trace},
                             g.out_path);
  return 0;
}

template <int (*Fp32)(const GlobalOpts&), int (*Fp64)(const GlobalOpts&)>
int dispatch(const GlobalOpts& g) {
  if (g.precision == "fp32") return Fp32(g);
  if (g.precision == "fp64") return Fp64(g);
  throw landing::ConfigError("precision must be fp32 or fp64");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Benchmarks for retraction-free optimization on orthogonal "
               "manifolds (landing method)"};
  app.require_subcommand(1);

  GlobalOpts g;
  app.add_option("--config", g.config_path, "key=value config file");
  app.add_option("--seed", g.seed, "master RNG seed");
  app.add_option("--out", g.out_path, "output CSV path");
  app.add_option("--precision", g.precision, "fp32 or fp64")
      ->check(CLI::IsMember({"fp32", "fp64"}));
  app.add_option("--methods", g.methods, "comma-separated method list");
  app.add_flag("--fail-on-diverge", g.fail_on_diverge,
               "exit 2 if any run diverges");
  app.add_option("--set", g.overrides,
                 "config override key=value (repeatable)");

  auto* procrustes = app.add_subcommand(
      "procrustes", "orthogonal Procrustes benchmark (landing vs retractions)");
  auto* ortho_step = app.add_subcommand(
      "ortho-step", "single-step orthogonalization error sweep");
  auto* plam = app.add_subcommand(
      "plam", "projected-Lagrangian fragility on 2x2 instances");
  auto* distill = app.add_subcommand(
      "distill", "teacher-student distillation with orthogonal weights");
  auto* stiefel =
      app.add_subcommand("stiefel", "nearest-Stiefel-point benchmark");
  auto* safe_rule = app.add_subcommand(
      "safe-rule-stress", "randomized stress test of the safe step-size rule");
  auto* schedules = app.add_subcommand(
      "schedule-rates", "decreasing step-size schedule convergence");

  // Let `procrustes --seed 0` work: global flags after the subcommand fall
  // through to the parent parser.
  for (CLI::App* sub : app.get_subcommands(nullptr)) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (procrustes->parsed())
      return dispatch<run_procrustes<float>, run_procrustes<double>>(g);
    if (ortho_step->parsed())
      return dispatch<run_ortho_step<float>, run_ortho_step<double>>(g);
    if (plam->parsed()) return dispatch<run_plam<float>, run_plam<double>>(g);
    if (distill->parsed())
      return dispatch<run_distill<float>, run_distill<double>>(g);
    if (stiefel->parsed())
      return dispatch<run_stiefel<float>, run_stiefel<double>>(g);
    if (safe_rule->parsed())
      return dispatch<run_safe_rule<float>, run_safe_rule<double>>(g);
    if (schedules->parsed())
      return dispatch<run_schedules<float>, run_schedules<double>>(g);
  } catch (const landing::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
