#pragma once

// The landing algorithm: field, safe step-size rule, deterministic /
// momentum / stochastic steps, step schedules, and the PLAM and penalty
// baselines, plus the experiment run driver.

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "landing/geometry.hpp"
#include "landing/retraction.hpp"
#include "landing/rng.hpp"

namespace landing {

struct SafeRegionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class StepScheduleKind { Constant, PowerDecay };

// Constant eta, or eta_k = c * k^{-alpha} with alpha in (1/2, 1).
template <typename T>
struct StepSchedule {
  StepScheduleKind kind = StepScheduleKind::Constant;
  T c = T(1);
  T alpha = T(0);

  static StepSchedule constant(T eta) {
    if (eta <= T(0)) throw std::invalid_argument("schedule: eta > 0");
    return {StepScheduleKind::Constant, eta, T(0)};
  }
  static StepSchedule power_decay(T c, T alpha) {
    if (c <= T(0)) throw std::invalid_argument("schedule: c > 0");
    if (!(alpha > T(0.5) && alpha < T(1)))
      throw std::invalid_argument("schedule: alpha in (1/2, 1)");
    return {StepScheduleKind::PowerDecay, c, alpha};
  }

  // k is the 0-based iteration counter; the decay uses k+1.
  T at(std::size_t k) const {
    if (kind == StepScheduleKind::Constant) return c;
    return c * std::pow(static_cast<T>(k + 1), -alpha);
  }
};

template <typename T>
struct OptimizerConfig {
  T lambda = T(1);
  T eps = T(0.5);
  StepSchedule<T> schedule = StepSchedule<T>::constant(T(0.1));
  T gamma = T(0);  // momentum mixing factor; 0 = off, buffer frozen at 0
  std::size_t max_iter = 1000;
  // Eq-literal ordering uses the pre-update buffer in the X update; this
  // flag switches to the freshly mixed buffer instead.
  bool momentum_use_updated_buffer = false;

  void validate() const {
    if (lambda <= T(0)) throw std::invalid_argument("config: lambda > 0");
    if (!(eps > T(0) && eps < T(1)))
      throw std::invalid_argument("config: eps in (0, 1)");
    if (gamma < T(0) || gamma > T(1))
      throw std::invalid_argument("config: gamma in [0, 1]");
  }
};

template <typename T>
struct OptimizerState {
  Matrix<T> x;
  Matrix<T> momentum;  // skew buffer, zero-initialized
  std::size_t k = 0;

  explicit OptimizerState(Matrix<T> x0)
      : x(std::move(x0)), momentum(x.rows(), x.rows()) {}
};

// Lambda(X) = psi(X) X + lambda grad N(X); three matrix products beyond the
// Euclidean gradient in the square case, O(n p^2) on Stiefel.
template <typename T>
Matrix<T> landing_field_from_egrad(const Matrix<T>& egrad, const Matrix<T>& x,
                                   T lambda, ManifoldKind kind) {
  if (kind == ManifoldKind::Orthogonal) {
    Matrix<T> f = skew_part(multiply_nt(egrad, x));
    f = add_scaled(std::move(f), lambda, gram_defect(x, kind));
    return f * x;
  }
  Matrix<T> f = stiefel_riemannian_gradient_from_egrad(egrad, x);
  f = add_scaled(std::move(f), lambda, x * gram_defect(x, kind));
  return f;
}

template <typename T>
Matrix<T> landing_field(const ProblemHandle<T>& problem, const Matrix<T>& x,
                        T lambda, ManifoldKind kind = ManifoldKind::Orthogonal) {
  if (lambda <= T(0)) throw std::invalid_argument("landing_field: lambda > 0");
  return landing_field_from_egrad(problem.egrad(x), x, lambda, kind);
}

// Largest step keeping ||Delta|| <= eps after one landing step, given
// a = ||psi|| and d = ||Delta||. Returns +inf at a stationary feasible
// point (a = d = 0).
template <typename T>
T safe_step_size(T a, T d, T eps, T lambda) {
  if (a < T(0) || d < T(0)) throw std::invalid_argument("safe_step_size");
  if (d > eps)
    throw SafeRegionError("safe_step_size: iterate escaped the safe region");
  const T alpha = T(2) * lambda * d - T(2) * a * d - T(2) * lambda * d * d;
  const T beta = a * a + lambda * lambda * d * d * d +
                 T(2) * lambda * a * d * d + a * a * d;
  if (beta == T(0)) return std::numeric_limits<T>::infinity();
  return (alpha + std::sqrt(alpha * alpha + T(4) * beta * (eps - d))) /
         (T(2) * beta);
}

// The eta* formula's derivation bounds the residual by d - alpha*eta +
// beta*eta^2, which is only valid while the contraction coefficient
// 1 - 2*eta*lambda stays nonnegative. The formula alone can return huge
// steps when a and d are both small, and those steps do escape the
// eps-tube; the usable safe step is the formula value capped at
// 1/(2*lambda). All step functions use this bound.
template <typename T>
T safe_step_bound(T a, T d, T eps, T lambda) {
  return std::min(safe_step_size(a, d, eps, lambda),
                  T(1) / (T(2) * lambda));
}

template <typename T>
struct StepInfo {
  T eta_used = T(0);
  T grad_norm = T(0);  // a fed to the safe rule
  T residual = T(0);   // d before the step
};

namespace detail {

template <typename T>
StepInfo<T> apply_landing_update(OptimizerState<T>& state,
                                 const Matrix<T>& field, T a,
                                 const OptimizerConfig<T>& config,
                                 ManifoldKind kind) {
  const T d = ortho_residual(state.x, kind);
  const T eta_star = safe_step_bound(a, d, config.eps, config.lambda);
  const T eta = std::min(config.schedule.at(state.k), eta_star);
  state.x = add_scaled(std::move(state.x), -eta, field);
  ++state.k;
  return {eta, a, d};
}

}  // namespace detail

// One step of Algorithm "landing with safe step-size":
//   eta = min(schedule(k), eta*),  X <- X - eta Lambda(X).
template <typename T>
StepInfo<T> landing_step(const ProblemHandle<T>& problem,
                         OptimizerState<T>& state,
                         const OptimizerConfig<T>& config,
                         ManifoldKind kind = ManifoldKind::Orthogonal) {
  Matrix<T> egrad = problem.egrad(state.x);
  T a;
  Matrix<T> field(1, 1);
  if (kind == ManifoldKind::Orthogonal) {
    Matrix<T> psi = relative_gradient_from_egrad(egrad, state.x);
    a = frob_norm(psi);
    Matrix<T> f = add_scaled(std::move(psi), config.lambda,
                             gram_defect(state.x, kind));
    field = f * state.x;
  } else {
    a = stiefel_relative_grad_norm_from_egrad(egrad, state.x);
    field = landing_field_from_egrad(egrad, state.x, config.lambda, kind);
  }
  return detail::apply_landing_update(state, field, a, config, kind);
}

// Momentum variant:
//   A_{k+1} = (1 - gamma) A_k + gamma psi(X_k)
//   X_{k+1} = X_k - eta (A X_k + lambda grad N(X_k))
// where A is the pre-update buffer A_k unless configured otherwise.
template <typename T>
StepInfo<T> momentum_landing_step(const ProblemHandle<T>& problem,
                                  OptimizerState<T>& state,
                                  const OptimizerConfig<T>& config,
                                  ManifoldKind kind = ManifoldKind::Orthogonal) {
  if (kind != ManifoldKind::Stiefel && !state.x.square())
    throw std::invalid_argument("momentum_landing_step: square X");
  if (kind == ManifoldKind::Stiefel)
    throw std::invalid_argument(
        "momentum_landing_step: orthogonal manifold only");
  Matrix<T> psi = relative_gradient(problem, state.x);
  Matrix<T> prev = state.momentum;
  state.momentum *= (T(1) - config.gamma);
  state.momentum = add_scaled(std::move(state.momentum), config.gamma, psi);
  const Matrix<T>& used =
      config.momentum_use_updated_buffer ? state.momentum : prev;
  const T a = frob_norm(used);
  Matrix<T> f = add_scaled(used, config.lambda, gram_defect(state.x, kind));
  Matrix<T> field = f * state.x;
  return detail::apply_landing_update(state, field, a, config, kind);
}

// Stochastic variant: one uniformly sampled per-sample gradient.
template <typename T>
StepInfo<T> stochastic_landing_step(const ProblemHandle<T>& problem,
                                    OptimizerState<T>& state,
                                    const OptimizerConfig<T>& config, Rng& rng,
                                    ManifoldKind kind = ManifoldKind::Orthogonal) {
  if (!problem.stoch_egrad)
    throw std::invalid_argument(
        "stochastic_landing_step: problem has no stochastic gradient");
  if (kind == ManifoldKind::Stiefel)
    throw std::invalid_argument(
        "stochastic_landing_step: orthogonal manifold only");
  const std::size_t i = rng.index(problem.n_samples);
  Matrix<T> psi =
      relative_gradient_from_egrad(problem.stoch_egrad(state.x, i), state.x);
  const T a = frob_norm(psi);
  Matrix<T> f =
      add_scaled(std::move(psi), config.lambda, gram_defect(state.x, kind));
  Matrix<T> field = f * state.x;
  return detail::apply_landing_update(state, field, a, config, kind);
}

// PLAM baseline field (no safe rule, faithful to the baseline):
//   Lambda_plam(X) = grad_f(X) - Sym(grad_f(X) X^T) X + lambda Delta X.
template <typename T>
Matrix<T> plam_field(const ProblemHandle<T>& problem, const Matrix<T>& x,
                     T lambda) {
  Matrix<T> g = problem.egrad(x);
  Matrix<T> f = g - sym_part(multiply_nt(g, x)) * x;
  f = add_scaled(std::move(f), lambda,
                 gram_defect(x, ManifoldKind::Orthogonal) * x);
  return f;
}

template <typename T>
StepInfo<T> plam_step(const ProblemHandle<T>& problem, OptimizerState<T>& state,
                      T eta, T lambda) {
  Matrix<T> psi = relative_gradient(problem, state.x);
  const T a = frob_norm(psi);
  const T d = ortho_residual(state.x, ManifoldKind::Orthogonal);
  Matrix<T> field = plam_field(problem, state.x, lambda);
  state.x = add_scaled(std::move(state.x), -eta, field);
  ++state.k;
  return {eta, a, d};
}

// Euclidean gradient descent on the penalized objective f + lambda N.
template <typename T>
StepInfo<T> penalty_gd_step(const ProblemHandle<T>& problem,
                            OptimizerState<T>& state, T eta, T lambda) {
  Matrix<T> g = problem.egrad(state.x);
  Matrix<T> psi = relative_gradient_from_egrad(g, state.x);
  const T a = frob_norm(psi);
  const T d = ortho_residual(state.x, ManifoldKind::Orthogonal);
  Matrix<T> step = add_scaled(
      std::move(g), lambda, penalty_gradient(state.x, ManifoldKind::Orthogonal));
  state.x = add_scaled(std::move(state.x), -eta, step);
  ++state.k;
  return {eta, a, d};
}

// ---------------------------------------------------------------------------
// Run driver

enum class Method {
  Landing,
  MomentumLanding,
  StochasticLanding,
  RGD,
  PLAM,
  PenaltyGD,
};

struct MethodSpec {
  Method method = Method::Landing;
  RetractionKind retraction = RetractionKind::QR;  // for RGD

  std::string name() const {
    switch (method) {
      case Method::Landing: return "landing";
      case Method::MomentumLanding: return "momentum-landing";
      case Method::StochasticLanding: return "stochastic-landing";
      case Method::RGD: return std::string("rgd-") + to_string(retraction);
      case Method::PLAM: return "plam";
      case Method::PenaltyGD: return "penalty-gd";
    }
    return "?";
  }
};

enum class RunStatus { Running, Converged, Diverged, Budget };

inline const char* to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Running: return "running";
    case RunStatus::Converged: return "converged";
    case RunStatus::Diverged: return "diverged";
    case RunStatus::Budget: return "budget";
  }
  return "?";
}

template <typename T>
struct TraceRow {
  std::size_t iter;
  double time_s;
  T f;
  T ortho_err;
  T grad_norm;
  T dist_opt;  // NaN when no optimum oracle is given
  T eta;
  RunStatus status;
};

template <typename T>
struct RunTrace {
  std::string method;
  std::vector<TraceRow<T>> rows;
  RunStatus final_status = RunStatus::Budget;
};

template <typename T>
struct ConvergenceTest {
  T residual_tol;   // on ||Delta||
  T grad_tol;       // on ||psi||
};

template <typename T>
struct RunOptions {
  std::optional<Matrix<T>> optimum;          // for the dist_opt column
  std::optional<ConvergenceTest<T>> stop;    // early stop when both tolerances met
  double max_seconds = std::numeric_limits<double>::infinity();
  std::size_t trace_stride = 1;              // record every k-th row
  T blowup_norm = T(1e8);
};

// Iterates `method` from X0 until the iteration/time budget, recording one
// trace row per recorded iterate (the row at index 0 is X0 itself).
template <typename T>
RunTrace<T> run(const ProblemHandle<T>& problem, const Matrix<T>& x0,
                const OptimizerConfig<T>& config, MethodSpec method,
                ManifoldKind kind, Rng& rng,
                const RunOptions<T>& options = {}) {
  config.validate();
  RunTrace<T> trace;
  trace.method = method.name();
  OptimizerState<T> state(x0);

  const auto t0 = std::chrono::steady_clock::now();
  auto now_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
        .count();
  };

  T last_eta = T(0);
  RunStatus status = RunStatus::Running;

  auto grad_norm_now = [&]() -> T {
    if (method.method == Method::MomentumLanding)
      return frob_norm(state.momentum);
    if (kind == ManifoldKind::Stiefel)
      return stiefel_relative_grad_norm(problem, state.x);
    return frob_norm(relative_gradient(problem, state.x));
  };

  auto record = [&](RunStatus row_status) {
    TraceRow<T> row;
    row.iter = state.k;
    row.time_s = now_s();
    row.f = problem.value(state.x);
    row.ortho_err = ortho_residual(state.x, kind);
    row.grad_norm = grad_norm_now();
    row.dist_opt = options.optimum
                       ? frob_norm(state.x - *options.optimum)
                       : std::numeric_limits<T>::quiet_NaN();
    row.eta = last_eta;
    row.status = row_status;
    trace.rows.push_back(row);
    return row;
  };

  for (;;) {
    if (state.k % options.trace_stride == 0) {
      TraceRow<T> row = record(RunStatus::Running);
      if (options.stop && row.ortho_err <= options.stop->residual_tol &&
          row.grad_norm <= options.stop->grad_tol) {
        status = RunStatus::Converged;
        trace.rows.back().status = status;
        break;
      }
    }
    if (state.k >= config.max_iter || now_s() > options.max_seconds) {
      status = RunStatus::Budget;
      break;
    }

    StepInfo<T> info;
    switch (method.method) {
      case Method::Landing:
        info = landing_step(problem, state, config, kind);
        break;
      case Method::MomentumLanding:
        info = momentum_landing_step(problem, state, config, kind);
        break;
      case Method::StochasticLanding:
        info = stochastic_landing_step(problem, state, config, rng, kind);
        break;
      case Method::RGD: {
        const T eta = config.schedule.at(state.k);
        Matrix<T> next =
            kind == ManifoldKind::Orthogonal
                ? riemannian_gd_step(problem, state.x, eta, method.retraction)
                : stiefel_gd_step(problem, state.x, eta, method.retraction);
        info.residual = ortho_residual(state.x, kind);
        info.grad_norm = T(0);
        info.eta_used = eta;
        state.x = std::move(next);
        ++state.k;
        break;
      }
      case Method::PLAM:
        info = plam_step(problem, state, config.schedule.at(state.k),
                         config.lambda);
        break;
      case Method::PenaltyGD:
        info = penalty_gd_step(problem, state, config.schedule.at(state.k),
                               config.lambda);
        break;
    }
    last_eta = info.eta_used;

    if (!state.x.all_finite() || frob_norm(state.x) > options.blowup_norm) {
      status = RunStatus::Diverged;
      break;
    }
  }

  if (status != RunStatus::Converged) {
    if (status == RunStatus::Diverged) {
      // Final row reports the diverged iterate's metrics when finite.
      TraceRow<T> row;
      row.iter = state.k;
      row.time_s = now_s();
      row.f = std::numeric_limits<T>::quiet_NaN();
      row.ortho_err = state.x.all_finite()
                          ? ortho_residual(state.x, kind)
                          : std::numeric_limits<T>::infinity();
      row.grad_norm = std::numeric_limits<T>::quiet_NaN();
      row.dist_opt = std::numeric_limits<T>::quiet_NaN();
      row.eta = last_eta;
      row.status = RunStatus::Diverged;
      trace.rows.push_back(row);
    } else if (trace.rows.empty() || trace.rows.back().iter != state.k) {
      record(status);
    } else {
      trace.rows.back().status = status;
    }
  }
  trace.final_status = status;
  return trace;
}

}  // namespace landing
