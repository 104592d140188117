#pragma once

// Experiment plumbing: key=value config files, trace CSV output with a fixed
// schema, a bounded parallel-for, and the experiment runners behind the CLI.

#include <algorithm>
#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "landing/optimize.hpp"
#include "landing/problems.hpp"

namespace landing {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// key=value lines, '#' comments, blank lines ignored. Every key must be
// consumed by the experiment; leftovers are schema errors.
class ConfigMap {
 public:
  ConfigMap() = default;

  static ConfigMap parse_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_text(ss.str(), path);
  }

  static ConfigMap parse_text(const std::string& text,
                              const std::string& origin = "<inline>") {
    ConfigMap cfg;
    std::istringstream in(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      const std::size_t hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      const auto strip = [](std::string s) {
        const char* ws = " \t\r\n";
        const std::size_t b = s.find_first_not_of(ws);
        if (b == std::string::npos) return std::string();
        return s.substr(b, s.find_last_not_of(ws) - b + 1);
      };
      line = strip(line);
      if (line.empty()) continue;
      const std::size_t eq = line.find('=');
      if (eq == std::string::npos)
        throw ConfigError(origin + ":" + std::to_string(lineno) +
                          ": expected key=value");
      const std::string key = strip(line.substr(0, eq));
      const std::string value = strip(line.substr(eq + 1));
      if (key.empty())
        throw ConfigError(origin + ":" + std::to_string(lineno) + ": empty key");
      cfg.values_[key] = value;
    }
    return cfg;
  }

  void set(const std::string& key, const std::string& value) {
    values_[key] = value;
  }
  bool has(const std::string& key) const { return values_.count(key) != 0; }

  std::string get_string(const std::string& key, const std::string& fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
  }

  double get_real(const std::string& key, double fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(it->second.c_str(), &end);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
      throw ConfigError("config key '" + key + "': not a number: '" +
                        it->second + "'");
    return v;
  }

  long long get_int(const std::string& key, long long fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    char* end = nullptr;
    errno = 0;
    const long long v = std::strtoll(it->second.c_str(), &end, 10);
    if (errno != 0 || end == it->second.c_str() || *end != '\0')
      throw ConfigError("config key '" + key + "': not an integer: '" +
                        it->second + "'");
    return v;
  }

  bool get_bool(const std::string& key, bool fallback) {
    used_.insert(key);
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    if (it->second == "true" || it->second == "1") return true;
    if (it->second == "false" || it->second == "0") return false;
    throw ConfigError("config key '" + key + "': not a boolean: '" +
                      it->second + "'");
  }

  // Call after all get_* lookups; any key never asked for is a schema error.
  void check_consumed() const {
    std::vector<std::string> unknown;
    for (const auto& [key, value] : values_)
      if (!used_.count(key)) unknown.push_back(key);
    if (!unknown.empty()) {
      std::string msg = "unknown config key(s):";
      for (const std::string& k : unknown) msg += " " + k;
      throw ConfigError(msg);
    }
  }

 private:
  std::map<std::string, std::string> values_;
  mutable std::set<std::string> used_;
};

// ---------------------------------------------------------------------------
// CSV

inline constexpr const char* kTraceCsvHeader =
    "method,iter,time_s,f,ortho_err,grad_norm,dist_opt,eta,status";

inline std::string format_real17(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

template <typename T>
void write_trace_csv(const std::vector<RunTrace<T>>& traces,
                     const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << kTraceCsvHeader << "\n";
  for (const RunTrace<T>& trace : traces)
    for (const TraceRow<T>& row : trace.rows)
      out << trace.method << ',' << row.iter << ','
          << format_real17(row.time_s) << ',' << format_real17(double(row.f))
          << ',' << format_real17(double(row.ortho_err)) << ','
          << format_real17(double(row.grad_norm)) << ','
          << format_real17(double(row.dist_opt)) << ','
          << format_real17(double(row.eta)) << ',' << to_string(row.status)
          << "\n";
  if (!out) throw std::runtime_error("write failed: " + path);
}

struct ParsedTraceRow {
  std::string method;
  std::size_t iter;
  double time_s, f, ortho_err, grad_norm, dist_opt, eta;
  std::string status;
};

inline std::vector<ParsedTraceRow> read_trace_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read: " + path);
  std::string line;
  if (!std::getline(in, line) ||
      (line != kTraceCsvHeader && line != std::string(kTraceCsvHeader) + "\r"))
    throw std::runtime_error("bad trace CSV header in " + path);
  std::vector<ParsedTraceRow> rows;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t pos = 0;
    while (true) {
      const std::size_t comma = line.find(',', pos);
      fields.push_back(line.substr(pos, comma - pos));
      if (comma == std::string::npos) break;
      pos = comma + 1;
    }
    if (fields.size() != 9)
      throw std::runtime_error("bad trace CSV row in " + path);
    ParsedTraceRow r;
    r.method = fields[0];
    r.iter = std::strtoull(fields[1].c_str(), nullptr, 10);
    r.time_s = std::strtod(fields[2].c_str(), nullptr);
    r.f = std::strtod(fields[3].c_str(), nullptr);
    r.ortho_err = std::strtod(fields[4].c_str(), nullptr);
    r.grad_norm = std::strtod(fields[5].c_str(), nullptr);
    r.dist_opt = std::strtod(fields[6].c_str(), nullptr);
    r.eta = std::strtod(fields[7].c_str(), nullptr);
    r.status = fields[8];
    rows.push_back(std::move(r));
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Parallel runs. LANDING_THREADS caps concurrency (0 or unset = hardware).

inline std::size_t thread_budget() {
  if (const char* env = std::getenv("LANDING_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<std::size_t>(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : hw;
}

// Runs jobs[i]() with bounded concurrency; results land wherever the job
// writes them, so output order is independent of scheduling.
inline void run_parallel(const std::vector<std::function<void()>>& jobs) {
  const std::size_t workers = std::min(thread_budget(), jobs.size());
  if (workers <= 1) {
    for (const auto& job : jobs) job();
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w)
    pool.emplace_back([&, w] {
      try {
        for (std::size_t i = w; i < jobs.size(); i += workers) jobs[i]();
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  for (std::thread& t : pool) t.join();
  for (const std::exception_ptr& e : errors)
    if (e) std::rethrow_exception(e);
}

// ---------------------------------------------------------------------------
// Method-name parsing shared by experiments and the CLI.

inline MethodSpec parse_method(const std::string& name) {
  if (name == "landing") return {Method::Landing};
  if (name == "momentum-landing") return {Method::MomentumLanding};
  if (name == "stochastic-landing") return {Method::StochasticLanding};
  if (name == "plam") return {Method::PLAM};
  if (name == "penalty-gd") return {Method::PenaltyGD};
  if (name == "rgd-exponential") return {Method::RGD, RetractionKind::Exponential};
  if (name == "rgd-projection") return {Method::RGD, RetractionKind::Projection};
  if (name == "rgd-cayley") return {Method::RGD, RetractionKind::Cayley};
  if (name == "rgd-qr") return {Method::RGD, RetractionKind::QR};
  throw ConfigError("unknown method name: " + name);
}

inline std::vector<std::string> split_list(const std::string& csv) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos <= csv.size()) {
    const std::size_t comma = csv.find(',', pos);
    std::string item = csv.substr(pos, comma - pos);
    if (!item.empty()) out.push_back(std::move(item));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  if (out.empty()) throw ConfigError("empty method list");
  return out;
}

// ---------------------------------------------------------------------------
// Experiments. Each returns the traces it wrote so callers (CLI, tests) can
// inspect final statuses.

struct ExperimentSummaryLine {
  std::string label;
  std::string text;
};

template <typename T>
struct ExperimentResult {
  std::vector<RunTrace<T>> traces;
  std::vector<ExperimentSummaryLine> summary;

  bool any_diverged() const {
    for (const RunTrace<T>& t : traces)
      if (t.final_status == RunStatus::Diverged) return true;
    return false;
  }
};

// Orthogonal Procrustes benchmark: landing vs. the four retraction-based
// gradient descents (plus any other requested method) on one instance.
template <typename T>
ExperimentResult<T> experiment_procrustes(ConfigMap& cfg, std::uint64_t seed,
                                          const std::vector<std::string>& methods) {
  const std::size_t p = static_cast<std::size_t>(cfg.get_int("p", 40));
  const double eta = cfg.get_real("eta", 0.1);
  const double lambda = cfg.get_real("lambda", 1.0);
  const double eps = cfg.get_real("eps", 0.5);
  const std::size_t max_iter =
      static_cast<std::size_t>(cfg.get_int("max_iter", 5000));
  const std::string instance = cfg.get_string("instance", "conditioned");
  const double scale = cfg.get_real("scale", 1.0);
  const double gamma = cfg.get_real("gamma", 0.1);
  const double grad_tol = cfg.get_real("grad_tol", 1e-9);
  const double residual_tol = cfg.get_real("residual_tol", 1e-11);
  const std::size_t stride =
      static_cast<std::size_t>(cfg.get_int("trace_stride", 1));
  cfg.check_consumed();

  Rng prng = Rng::child(seed, 0);
  ProcrustesProblem<T> problem =
      instance == "gaussian"
          ? ProcrustesProblem<T>::gaussian(prng, p, static_cast<T>(scale))
      : instance == "conditioned" ? ProcrustesProblem<T>::conditioned(prng, p)
                                  : throw ConfigError(
                                        "instance must be gaussian|conditioned");

  OptimizerConfig<T> oc;
  oc.lambda = static_cast<T>(lambda);
  oc.eps = static_cast<T>(eps);
  oc.gamma = static_cast<T>(gamma);
  oc.schedule = StepSchedule<T>::constant(static_cast<T>(eta));
  oc.max_iter = max_iter;

  RunOptions<T> opts;
  opts.optimum = problem.optimum();
  opts.stop = ConvergenceTest<T>{static_cast<T>(residual_tol) * tol_factor<T>(),
                                 static_cast<T>(grad_tol) * tol_factor<T>()};
  opts.trace_stride = stride;

  ExperimentResult<T> result;
  result.traces.resize(methods.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t m = 0; m < methods.size(); ++m)
    jobs.push_back([&, m] {
      MethodSpec spec = parse_method(methods[m]);
      Rng rng = Rng::child(seed, 1 + m);
      result.traces[m] = run(problem.handle(), problem.matched_start(), oc,
                             spec, ManifoldKind::Orthogonal, rng, opts);
    });
  run_parallel(jobs);

  for (const RunTrace<T>& t : result.traces) {
    const TraceRow<T>& last = t.rows.back();
    std::ostringstream os;
    os << "status=" << to_string(t.final_status) << " iters=" << last.iter
       << " dist_opt=" << format_real17(double(last.dist_opt))
       << " ortho_err=" << format_real17(double(last.ortho_err));
    result.summary.push_back({t.method, os.str()});
  }
  return result;
}

// One-step orthogonalization sweep over the skew scale gamma; summary rows
// only (per-seed ratios), no iteration traces.
template <typename T>
struct OrthoStepOutcome {
  std::string method;
  T gamma;
  std::uint64_t seed;
  T residual_in;
  T residual_out;
};

template <typename T>
std::vector<OrthoStepOutcome<T>> experiment_ortho_step(ConfigMap& cfg,
                                                       std::uint64_t seed) {
  const std::size_t p = static_cast<std::size_t>(cfg.get_int("p", 100));
  const double sigma = cfg.get_real("sigma", 1e-4);
  const double eta = cfg.get_real("eta", 0.3);
  const double lambda = cfg.get_real("lambda", 1.0);
  const std::size_t seeds = static_cast<std::size_t>(cfg.get_int("seeds", 50));
  const std::string gammas_str =
      cfg.get_string("gammas", "1e-6,1e-5,1e-4,1e-3,1e-2,1e-1,1");
  const std::string methods_str =
      cfg.get_string("step_methods", "landing,exponential,projection,cayley,qr");
  cfg.check_consumed();

  std::vector<T> gammas;
  for (const std::string& g : split_list(gammas_str))
    gammas.push_back(static_cast<T>(std::strtod(g.c_str(), nullptr)));
  std::vector<OrthoStepMethod> methods;
  for (const std::string& m : split_list(methods_str)) {
    if (m == "landing") methods.push_back(OrthoStepMethod::Landing);
    else if (m == "exponential") methods.push_back(OrthoStepMethod::Exponential);
    else if (m == "projection") methods.push_back(OrthoStepMethod::Projection);
    else if (m == "cayley") methods.push_back(OrthoStepMethod::Cayley);
    else if (m == "qr") methods.push_back(OrthoStepMethod::QR);
    else throw ConfigError("unknown single-step method: " + m);
  }

  std::vector<OrthoStepOutcome<T>> out(methods.size() * gammas.size() * seeds);
  std::vector<std::function<void()>> jobs;
  for (std::size_t mi = 0; mi < methods.size(); ++mi)
    for (std::size_t gi = 0; gi < gammas.size(); ++gi)
      for (std::size_t si = 0; si < seeds; ++si) {
        const std::size_t slot = (mi * gammas.size() + gi) * seeds + si;
        jobs.push_back([&, mi, gi, si, slot] {
          // Same (gamma, seed) draw for every method: the stream id ignores mi.
          Rng rng = Rng::child(seed, gi * 1000 + si);
          SingleStepResult<T> r = single_step_experiment<T>(
              p, static_cast<T>(sigma), gammas[gi], static_cast<T>(eta),
              static_cast<T>(lambda), methods[mi], rng);
          out[slot] = {to_string(methods[mi]), gammas[gi], si, r.residual_in,
                       r.residual_out};
        });
      }
  run_parallel(jobs);
  return out;
}

// PLAM vs. landing on tiny random Procrustes instances.
template <typename T>
ExperimentResult<T> experiment_plam(ConfigMap& cfg, std::uint64_t seed) {
  const std::size_t p = static_cast<std::size_t>(cfg.get_int("p", 2));
  const std::size_t instances =
      static_cast<std::size_t>(cfg.get_int("instances", 10));
  const double eta = cfg.get_real("eta", 1e-3);
  const double lambda = cfg.get_real("lambda", 1.0);
  const std::size_t plam_iter =
      static_cast<std::size_t>(cfg.get_int("plam_max_iter", 2000000));
  const std::size_t landing_iter =
      static_cast<std::size_t>(cfg.get_int("landing_max_iter", 500000));
  const std::size_t stride =
      static_cast<std::size_t>(cfg.get_int("trace_stride", 1000));
  cfg.check_consumed();

  ExperimentResult<T> result;
  result.traces.resize(2 * instances);
  std::vector<std::function<void()>> jobs;
  for (std::size_t i = 0; i < instances; ++i)
    jobs.push_back([&, i] {
      Rng prng = Rng::child(seed, i);
      ProcrustesProblem<T> problem = ProcrustesProblem<T>::gaussian(
          prng, p, T(1), ProcrustesProblem<T>::Form::Left);
      RunOptions<T> opts;
      opts.optimum = problem.optimum();
      opts.trace_stride = stride;

      OptimizerConfig<T> pc;
      pc.lambda = static_cast<T>(lambda);
      pc.schedule = StepSchedule<T>::constant(static_cast<T>(eta));
      pc.max_iter = plam_iter;
      Rng r1 = Rng::child(seed, 1000 + i);
      RunTrace<T> pt = run(problem.handle(), Matrix<T>::identity(p), pc,
                           MethodSpec{Method::PLAM}, ManifoldKind::Orthogonal,
                           r1, opts);
      pt.method = "plam/" + std::to_string(i);

      OptimizerConfig<T> lc = pc;
      lc.max_iter = landing_iter;
      RunOptions<T> lopts = opts;
      lopts.stop = ConvergenceTest<T>{T(1e-8) * tol_factor<T>(),
                                      T(1e-6) * tol_factor<T>()};
      Rng r2 = Rng::child(seed, 2000 + i);
      RunTrace<T> lt = run(problem.handle(), Matrix<T>::identity(p), lc,
                           MethodSpec{Method::Landing}, ManifoldKind::Orthogonal,
                           r2, lopts);
      lt.method = "landing/" + std::to_string(i);

      result.traces[2 * i] = std::move(pt);
      result.traces[2 * i + 1] = std::move(lt);
    });
  run_parallel(jobs);

  for (std::size_t i = 0; i < instances; ++i) {
    std::ostringstream os;
    os << "plam=" << to_string(result.traces[2 * i].final_status)
       << " landing=" << to_string(result.traces[2 * i + 1].final_status);
    result.summary.push_back({"instance " + std::to_string(i), os.str()});
  }
  return result;
}

// Teacher-student distillation with layer-wise landing steps; reports
// iterations until the loss falls below `threshold` times the initial loss.
template <typename T>
ExperimentResult<T> experiment_distill(ConfigMap& cfg, std::uint64_t seed,
                                       const std::vector<std::string>& methods) {
  typename DistillationProblem<T>::Config pc;
  if (cfg.get_bool("full_scale", false))
    pc = DistillationProblem<T>::Config::full_scale();
  pc.width = static_cast<std::size_t>(cfg.get_int("p", pc.width));
  pc.depth = static_cast<std::size_t>(cfg.get_int("depth", pc.depth));
  pc.batch = static_cast<std::size_t>(cfg.get_int("batch", pc.batch));
  pc.teacher_bias_scale =
      static_cast<T>(cfg.get_real("bias_scale", double(pc.teacher_bias_scale)));
  const double eta = cfg.get_real("eta", 0.5);
  const double lambda = cfg.get_real("lambda", 1.0);
  const double eps = cfg.get_real("eps", 0.5);
  const double gamma = cfg.get_real("gamma", 0.1);
  const std::size_t max_iter =
      static_cast<std::size_t>(cfg.get_int("max_iter", 2000));
  const double threshold = cfg.get_real("threshold", 0.1);
  const std::size_t stride =
      static_cast<std::size_t>(cfg.get_int("trace_stride", 10));
  cfg.check_consumed();

  ExperimentResult<T> result;
  result.traces.resize(methods.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t m = 0; m < methods.size(); ++m)
    jobs.push_back([&, m] {
      MethodSpec spec = parse_method(methods[m]);
      if (spec.method != Method::Landing &&
          spec.method != Method::MomentumLanding)
        throw ConfigError("distill supports landing and momentum-landing only");

      Rng prng = Rng::child(seed, 10 + m);  // same stream id would share
      Rng teacher_rng = Rng::child(seed, 0);
      DistillationProblem<T> problem(teacher_rng, pc);
      DistillTrainState<T> state(problem.initial_student(prng));

      OptimizerConfig<T> oc;
      oc.lambda = static_cast<T>(lambda);
      oc.eps = static_cast<T>(eps);
      oc.gamma = spec.method == Method::MomentumLanding ? static_cast<T>(gamma)
                                                        : T(0);
      oc.schedule = StepSchedule<T>::constant(static_cast<T>(eta));

      RunTrace<T> trace;
      trace.method = spec.name();
      const auto t0 = std::chrono::steady_clock::now();
      T initial_loss = T(0);
      for (std::size_t k = 0; k < max_iter; ++k) {
        DistillStepResult<T> r = distill_landing_step(problem, state, oc, prng);
        if (k == 0) initial_loss = r.loss;
        if (k % stride == 0 || r.loss <= static_cast<T>(threshold) * initial_loss) {
          TraceRow<T> row;
          row.iter = k;
          row.time_s = std::chrono::duration<double>(
                           std::chrono::steady_clock::now() - t0)
                           .count();
          row.f = r.loss;
          row.ortho_err = r.max_residual;
          row.grad_norm = r.grad_norm;
          row.dist_opt = std::numeric_limits<T>::quiet_NaN();
          row.eta = static_cast<T>(eta);
          row.status = RunStatus::Running;
          trace.rows.push_back(row);
        }
        if (r.loss <= static_cast<T>(threshold) * initial_loss) {
          trace.rows.back().status = RunStatus::Converged;
          trace.final_status = RunStatus::Converged;
          break;
        }
      }
      if (trace.final_status != RunStatus::Converged)
        trace.final_status = RunStatus::Budget;
      result.traces[m] = std::move(trace);
    });
  run_parallel(jobs);

  for (const RunTrace<T>& t : result.traces) {
    std::ostringstream os;
    os << "status=" << to_string(t.final_status)
       << " iters_to_threshold=" << t.rows.back().iter
       << " final_loss=" << format_real17(double(t.rows.back().f))
       << " max_ortho_err=" << format_real17(double([&] {
            T m = T(0);
            for (const TraceRow<T>& r : t.rows) m = std::max(m, r.ortho_err);
            return m;
          }()));
    result.summary.push_back({t.method, os.str()});
  }
  return result;
}

// Nearest-Stiefel-point benchmark using the factored O(n p^2) landing path.
template <typename T>
ExperimentResult<T> experiment_stiefel(ConfigMap& cfg, std::uint64_t seed,
                                       const std::vector<std::string>& methods) {
  const std::size_t n = static_cast<std::size_t>(cfg.get_int("n", 100));
  const std::size_t p = static_cast<std::size_t>(cfg.get_int("p", 10));
  const double eta = cfg.get_real("eta", 0.01);
  const double lambda = cfg.get_real("lambda", 1.0);
  const double eps = cfg.get_real("eps", 0.5);
  const std::size_t max_iter =
      static_cast<std::size_t>(cfg.get_int("max_iter", 3000));
  const std::size_t stride =
      static_cast<std::size_t>(cfg.get_int("trace_stride", 1));
  cfg.check_consumed();

  Rng prng = Rng::child(seed, 0);
  StiefelProcrustes<T> problem = StiefelProcrustes<T>::gaussian(prng, n, p);

  OptimizerConfig<T> oc;
  oc.lambda = static_cast<T>(lambda);
  oc.eps = static_cast<T>(eps);
  oc.schedule = StepSchedule<T>::constant(static_cast<T>(eta));
  oc.max_iter = max_iter;

  RunOptions<T> opts;
  opts.optimum = problem.optimum();
  opts.stop = ConvergenceTest<T>{T(1e-10) * tol_factor<T>(),
                                 T(1e-8) * tol_factor<T>()};
  opts.trace_stride = stride;

  // Start at the top p rows of the identity frame.
  Matrix<T> x0(n, p);
  for (std::size_t j = 0; j < p; ++j) x0(j, j) = T(1);

  ExperimentResult<T> result;
  result.traces.resize(methods.size());
  std::vector<std::function<void()>> jobs;
  for (std::size_t m = 0; m < methods.size(); ++m)
    jobs.push_back([&, m] {
      MethodSpec spec = parse_method(methods[m]);
      Rng rng = Rng::child(seed, 1 + m);
      result.traces[m] = run(problem.handle(), x0, oc, spec,
                             ManifoldKind::Stiefel, rng, opts);
    });
  run_parallel(jobs);

  for (const RunTrace<T>& t : result.traces) {
    const TraceRow<T>& last = t.rows.back();
    std::ostringstream os;
    os << "status=" << to_string(t.final_status) << " iters=" << last.iter
       << " dist_opt=" << format_real17(double(last.dist_opt));
    result.summary.push_back({t.method, os.str()});
  }
  return result;
}

// Randomized stress test of the safe step-size rule: many single steps from
// random points inside the safe region must stay inside it.
struct SafeRuleStressReport {
  std::size_t trials = 0;
  std::size_t violations = 0;
  double worst_ratio = 0.0;  // max over trials of ||Delta_new|| / eps
};

template <typename T>
SafeRuleStressReport experiment_safe_rule(ConfigMap& cfg, std::uint64_t seed) {
  const std::size_t trials =
      static_cast<std::size_t>(cfg.get_int("trials", 10000));
  const double eps = cfg.get_real("eps", 0.5);
  const double lambda = cfg.get_real("lambda", 1.0);
  const std::size_t pmax = static_cast<std::size_t>(cfg.get_int("pmax", 12));
  cfg.check_consumed();

  SafeRuleStressReport report;
  report.trials = trials;
  Rng rng = Rng::child(seed, 0);
  for (std::size_t t = 0; t < trials; ++t) {
    const std::size_t p = 2 + rng.index(pmax - 1);
    Matrix<T> q = random_orthogonal<T>(rng, p);
    // Random point with ||Delta|| = u * eps: scale a perturbation until the
    // residual matches the drawn target.
    const T target = static_cast<T>(rng.uniform()) * static_cast<T>(eps);
    Matrix<T> dir = random_gaussian<T>(rng, p, p);
    dir *= T(1) / std::max(frob_norm(dir), T(1e-30));
    T lo = T(0), hi = T(1);
    auto residual_at = [&](T s) {
      Matrix<T> x = add_scaled(q, s, dir);
      return ortho_residual(x, ManifoldKind::Orthogonal);
    };
    while (residual_at(hi) < target && hi < T(64)) hi *= T(2);
    for (int it = 0; it < 60; ++it) {
      const T mid = (lo + hi) / T(2);
      (residual_at(mid) < target ? lo : hi) = mid;
    }
    Matrix<T> x = add_scaled(q, (lo + hi) / T(2), dir);

    const T scale = static_cast<T>(std::exp(2.0 * rng.normal()));
    Matrix<T> a = random_skew<T>(rng, p, scale);
    const T anorm = frob_norm(a);
    const T d = ortho_residual(x, ManifoldKind::Orthogonal);
    const T eta_star =
        safe_step_bound(anorm, d, static_cast<T>(eps), static_cast<T>(lambda));
    const T eta = static_cast<T>(rng.uniform()) * eta_star;
    Matrix<T> f =
        add_scaled(a, static_cast<T>(lambda), gram_defect(x, ManifoldKind::Orthogonal));
    Matrix<T> fx = f * x;
    Matrix<T> xn = add_scaled(std::move(x), -eta, fx);
    const double ratio =
        double(ortho_residual(xn, ManifoldKind::Orthogonal)) / eps;
    report.worst_ratio = std::max(report.worst_ratio, ratio);
    if (ratio > 1.0 + 1e-12 * double(tol_factor<T>())) ++report.violations;
  }
  return report;
}

// Decreasing-schedule run: power-decay steps on Procrustes, tracking the
// running minimum of ||psi||^2.
template <typename T>
struct ScheduleReport {
  RunTrace<T> trace;
  T min_grad_sq = std::numeric_limits<T>::infinity();
  T final_penalty = T(0);
};

template <typename T>
ScheduleReport<T> experiment_schedules(ConfigMap& cfg, std::uint64_t seed) {
  const std::size_t p = static_cast<std::size_t>(cfg.get_int("p", 10));
  const double c = cfg.get_real("c", 0.1);
  const double alpha = cfg.get_real("alpha", 2.0 / 3.0);
  const double lambda = cfg.get_real("lambda", 1.0);
  const double eps = cfg.get_real("eps", 0.5);
  const std::size_t max_iter =
      static_cast<std::size_t>(cfg.get_int("max_iter", 100000));
  const std::size_t stride =
      static_cast<std::size_t>(cfg.get_int("trace_stride", 100));
  cfg.check_consumed();

  Rng prng = Rng::child(seed, 0);
  ProcrustesProblem<T> problem = ProcrustesProblem<T>::conditioned(prng, p);

  OptimizerConfig<T> oc;
  oc.lambda = static_cast<T>(lambda);
  oc.eps = static_cast<T>(eps);
  oc.schedule =
      StepSchedule<T>::power_decay(static_cast<T>(c), static_cast<T>(alpha));
  oc.max_iter = max_iter;

  ScheduleReport<T> report;
  OptimizerState<T> state(problem.matched_start());
  RunTrace<T> trace;
  trace.method = "landing";
  const auto t0 = std::chrono::steady_clock::now();
  for (std::size_t k = 0; k < max_iter; ++k) {
    StepInfo<T> info = landing_step(problem.handle(), state, oc);
    report.min_grad_sq =
        std::min(report.min_grad_sq, info.grad_norm * info.grad_norm);
    if (k % stride == 0 || k + 1 == max_iter) {
      TraceRow<T> row;
      row.iter = k + 1;
      row.time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
              .count();
      row.f = problem.value(state.x);
      row.ortho_err = ortho_residual(state.x, ManifoldKind::Orthogonal);
      row.grad_norm = info.grad_norm;
      row.dist_opt = frob_norm(state.x - problem.optimum());
      row.eta = info.eta_used;
      row.status = RunStatus::Running;
      trace.rows.push_back(row);
    }
  }
  trace.final_status = RunStatus::Budget;
  trace.rows.back().status = RunStatus::Budget;
  report.final_penalty = penalty(state.x, ManifoldKind::Orthogonal);
  report.trace = std::move(trace);
  return report;
}

}  // namespace landing
