#pragma once

// Concrete objectives with known optima: orthogonal Procrustes, a 2x2
// objective on which the projected-Lagrangian baseline blows up, a
// teacher-student tanh network, and nearest-Stiefel-point. Plus the
// single-step orthogonalization experiment.

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "landing/geometry.hpp"
#include "landing/linalg.hpp"
#include "landing/optimize.hpp"
#include "landing/retraction.hpp"
#include "landing/rng.hpp"

namespace landing {

// Orthogonal Procrustes over O_p, in either translation form:
//   Right: f(X) = ||X A - B||^2, optimum X* = polar(B A^T)
//   Left:  f(X) = ||A X - B||^2, optimum X* = polar(A^T B)
template <typename T>
class ProcrustesProblem {
 public:
  enum class Form { Right, Left };

  ProcrustesProblem(Matrix<T> a, Matrix<T> b, Form form = Form::Right)
      : form_(form), a_(std::move(a)), b_(std::move(b)), xstar_(1, 1) {
    if (!a_.square() || !b_.square() || a_.rows() != b_.rows())
      throw std::invalid_argument("procrustes: square A, B of equal size");
    xstar_ = form_ == Form::Right ? polar_factor(multiply_nt(b_, a_))
                                  : polar_factor(multiply_tn(a_, b_));
    fstar_ = value(xstar_);
    const T psi_norm = frob_norm(relative_gradient_from_egrad(egrad(xstar_), xstar_));
    if (psi_norm > T(1e-9) * tol_factor<T>() * std::max(T(1), frob_norm(a_)))
      throw std::runtime_error("procrustes: optimum oracle failed validation");
  }

  static ProcrustesProblem gaussian(Rng& rng, std::size_t p, T scale = T(1),
                                    Form form = Form::Right) {
    Matrix<T> a = random_gaussian<T>(rng, p, p);
    Matrix<T> b = random_gaussian<T>(rng, p, p);
    a *= scale;
    b *= scale;
    return ProcrustesProblem(std::move(a), std::move(b), form);
  }

  // A and B with singular values drawn uniformly from [lo, hi]; keeps
  // sigma_min(B A^T) away from zero so the optimum is well separated.
  static ProcrustesProblem conditioned(Rng& rng, std::size_t p, T lo = T(0.5),
                                       T hi = T(1.5)) {
    return ProcrustesProblem(random_conditioned(rng, p, lo, hi),
                             random_conditioned(rng, p, lo, hi));
  }

  std::size_t dim() const { return a_.rows(); }
  const Matrix<T>& a() const { return a_; }
  const Matrix<T>& b() const { return b_; }
  const Matrix<T>& optimum() const { return xstar_; }
  T optimal_value() const { return fstar_; }

  T value(const Matrix<T>& x) const {
    return frob_norm_sq((form_ == Form::Right ? x * a_ : a_ * x) - b_);
  }

  Matrix<T> egrad(const Matrix<T>& x) const {
    if (form_ == Form::Right) return T(2) * multiply_nt(x * a_ - b_, a_);
    return T(2) * multiply_tn(a_, a_ * x - b_);
  }

  Matrix<T> ehess_vec(const Matrix<T>&, const Matrix<T>& e) const {
    if (form_ == Form::Right) return T(2) * multiply_nt(e * a_, a_);
    return T(2) * multiply_tn(a_, a_ * e);
  }

  ProblemHandle<T> handle() const {
    ProblemHandle<T> h;
    h.value = [this](const Matrix<T>& x) { return value(x); };
    h.egrad = [this](const Matrix<T>& x) { return egrad(x); };
    h.ehess_vec = [this](const Matrix<T>& x, const Matrix<T>& e) {
      return ehess_vec(x, e);
    };
    return h;
  }

  // Identity start, sign-flipped in one column when det(X*) < 0 so that the
  // start and the optimum sit in the same connected component (retractions
  // preserve the determinant sign).
  Matrix<T> matched_start() const {
    Matrix<T> x0 = Matrix<T>::identity(dim());
    if (determinant(xstar_) < T(0)) x0(0, 0) = T(-1);
    return x0;
  }

  static Matrix<T> random_conditioned(Rng& rng, std::size_t p, T lo, T hi) {
    Matrix<T> u = random_orthogonal<T>(rng, p);
    Matrix<T> v = random_orthogonal<T>(rng, p);
    for (std::size_t j = 0; j < p; ++j) {
      const T s = lo + (hi - lo) * static_cast<T>(rng.uniform());
      for (std::size_t i = 0; i < p; ++i) u(i, j) *= s;
    }
    return multiply_nt(u, v);
  }

  Form form() const { return form_; }

 private:
  Form form_;
  Matrix<T> a_, b_, xstar_;
  T fstar_ = T(0);
};

// f(X) = ||alpha X - B||^2 with B = diag(1, 0) on O_2: the projected
// Lagrangian field has spurious attractors here while the landing field
// does not.
template <typename T>
class PlamCounterexample {
 public:
  explicit PlamCounterexample(T alpha) : alpha_(alpha), b_(2, 2) {
    if (alpha <= T(0)) throw std::invalid_argument("counterexample: alpha > 0");
    b_(0, 0) = T(1);
  }

  T value(const Matrix<T>& x) const {
    return frob_norm_sq(add_scaled(alpha_ * x, T(-1), b_));
  }

  Matrix<T> egrad(const Matrix<T>& x) const {
    return T(2) * alpha_ * add_scaled(alpha_ * x, T(-1), b_);
  }

  ProblemHandle<T> handle() const {
    ProblemHandle<T> h;
    h.value = [this](const Matrix<T>& x) { return value(x); };
    h.egrad = [this](const Matrix<T>& x) { return egrad(x); };
    return h;
  }

  T alpha() const { return alpha_; }
  const Matrix<T>& b() const { return b_; }

 private:
  T alpha_;
  Matrix<T> b_;
};

// ---------------------------------------------------------------------------
// Teacher-student distillation: depth-D tanh network with square orthogonal
// weights, loss E_x ||student(x) - teacher(x)||^2 (batch mean). Only the
// weights live on the manifold; biases are plain parameters.

template <typename T>
struct MlpParams {
  std::vector<Matrix<T>> weights;          // D matrices, p x p
  std::vector<std::vector<T>> biases;      // D vectors of length p
};

template <typename T>
struct MlpGrads {
  T loss = T(0);
  std::vector<Matrix<T>> d_weights;
  std::vector<std::vector<T>> d_biases;
};

template <typename T>
class DistillationProblem {
 public:
  struct Config {
    std::size_t width = 32;
    std::size_t depth = 4;
    std::size_t batch = 64;
    T teacher_bias_scale = T(0.1);
    static Config full_scale() { return {100, 10, 256, T(0.1)}; }
  };

  DistillationProblem(Rng& rng, Config config = {}) : config_(config) {
    if (config.width == 0 || config.depth == 0 || config.batch == 0)
      throw std::invalid_argument("distillation: positive dimensions");
    const std::size_t p = config.width;
    for (std::size_t l = 0; l < config.depth; ++l) {
      teacher_.weights.push_back(random_orthogonal<T>(rng, p));
      std::vector<T> b(p);
      for (T& v : b)
        v = config.teacher_bias_scale * static_cast<T>(rng.normal());
      teacher_.biases.push_back(std::move(b));
    }
  }

  const Config& config() const { return config_; }
  const MlpParams<T>& teacher() const { return teacher_; }

  // Random orthogonal weights, zero biases.
  MlpParams<T> initial_student(Rng& rng) const {
    MlpParams<T> s;
    for (std::size_t l = 0; l < config_.depth; ++l) {
      s.weights.push_back(random_orthogonal<T>(rng, config_.width));
      s.biases.emplace_back(config_.width, T(0));
    }
    return s;
  }

  // Batch of standard-normal inputs, one column per sample.
  Matrix<T> sample_batch(Rng& rng) const {
    return random_gaussian<T>(rng, config_.width, config_.batch);
  }

  // Forward pass x <- tanh(W x + b), returning all activations (input first).
  static std::vector<Matrix<T>> forward(const MlpParams<T>& params,
                                        const Matrix<T>& input) {
    std::vector<Matrix<T>> acts;
    acts.reserve(params.weights.size() + 1);
    acts.push_back(input);
    for (std::size_t l = 0; l < params.weights.size(); ++l) {
      Matrix<T> z = params.weights[l] * acts.back();
      for (std::size_t i = 0; i < z.rows(); ++i)
        for (std::size_t j = 0; j < z.cols(); ++j)
          z(i, j) = std::tanh(z(i, j) + params.biases[l][i]);
      acts.push_back(std::move(z));
    }
    return acts;
  }

  // Batch-mean squared output gap and its reverse-mode gradients with
  // respect to every student weight and bias.
  MlpGrads<T> loss_and_grads(const MlpParams<T>& student,
                             const Matrix<T>& input) const {
    const std::vector<Matrix<T>> acts = forward(student, input);
    const std::vector<Matrix<T>> teacher_acts = forward(teacher_, input);
    const T batch = static_cast<T>(input.cols());
    const std::size_t depth = student.weights.size();

    MlpGrads<T> out;
    Matrix<T> diff = acts.back() - teacher_acts.back();
    out.loss = frob_norm_sq(diff) / batch;

    Matrix<T> g = (T(2) / batch) * diff;  // d loss / d activation
    out.d_weights.resize(depth, Matrix<T>(1, 1));
    out.d_biases.resize(depth);
    for (std::size_t l = depth; l-- > 0;) {
      // d tanh(z) = 1 - tanh(z)^2, with tanh(z) = the stored activation
      Matrix<T> gz = g;
      const Matrix<T>& act = acts[l + 1];
      for (std::size_t i = 0; i < gz.size(); ++i)
        gz.data()[i] *= T(1) - act.data()[i] * act.data()[i];
      out.d_weights[l] = multiply_nt(gz, acts[l]);
      std::vector<T> db(gz.rows(), T(0));
      for (std::size_t i = 0; i < gz.rows(); ++i)
        for (std::size_t j = 0; j < gz.cols(); ++j) db[i] += gz(i, j);
      out.d_biases[l] = std::move(db);
      if (l > 0) g = multiply_tn(student.weights[l], gz);
    }
    return out;
  }

 private:
  Config config_;
  MlpParams<T> teacher_;
};

// One landing (or momentum-landing) training step applied layer-wise:
// each weight takes a safe-clipped landing step, biases take a plain
// gradient step at the unclipped rate.
template <typename T>
struct DistillTrainState {
  MlpParams<T> params;
  std::vector<Matrix<T>> momentum;  // skew buffer per layer

  explicit DistillTrainState(MlpParams<T> p0) : params(std::move(p0)) {
    for (const Matrix<T>& w : params.weights)
      momentum.emplace_back(w.rows(), w.rows());
  }
};

template <typename T>
struct DistillStepResult {
  T loss = T(0);
  T max_residual = T(0);   // max over layers of ||W W^T - I|| after the step
  T grad_norm = T(0);      // root-sum-square of per-layer ||psi||
};

template <typename T>
DistillStepResult<T> distill_landing_step(const DistillationProblem<T>& problem,
                                          DistillTrainState<T>& state,
                                          const OptimizerConfig<T>& config,
                                          Rng& rng) {
  const Matrix<T> batch = problem.sample_batch(rng);
  MlpGrads<T> grads = problem.loss_and_grads(state.params, batch);
  DistillStepResult<T> result;
  result.loss = grads.loss;

  const T eta = config.schedule.at(0);
  T psi_sq = T(0);
  for (std::size_t l = 0; l < state.params.weights.size(); ++l) {
    Matrix<T>& w = state.params.weights[l];
    Matrix<T> dir = relative_gradient_from_egrad(grads.d_weights[l], w);
    if (config.gamma > T(0)) {
      Matrix<T>& buf = state.momentum[l];
      Matrix<T> prev = buf;
      buf *= (T(1) - config.gamma);
      buf = add_scaled(std::move(buf), config.gamma, dir);
      dir = config.momentum_use_updated_buffer ? buf : std::move(prev);
    }
    Matrix<T> d = gram_defect(w, ManifoldKind::Orthogonal);
    const T dn = frob_norm(d);
    const T a = frob_norm(dir);
    const T e = std::min(eta, safe_step_bound(a, dn, config.eps, config.lambda));
    Matrix<T> f = add_scaled(std::move(dir), config.lambda, d);
    Matrix<T> fw = f * w;
    w = add_scaled(std::move(w), -e, fw);
    psi_sq += a * a;
    result.max_residual =
        std::max(result.max_residual, ortho_residual(w, ManifoldKind::Orthogonal));
  }
  for (std::size_t l = 0; l < state.params.biases.size(); ++l)
    for (std::size_t i = 0; i < state.params.biases[l].size(); ++i)
      state.params.biases[l][i] -= eta * grads.d_biases[l][i];

  result.grad_norm = std::sqrt(psi_sq);
  return result;
}

// ---------------------------------------------------------------------------
// Nearest Stiefel point: f(X) = ||X - B||^2 over n x p frames, optimum
// X* = polar(B).

template <typename T>
class StiefelProcrustes {
 public:
  explicit StiefelProcrustes(Matrix<T> b) : b_(std::move(b)), xstar_(1, 1) {
    if (b_.rows() < b_.cols())
      throw std::invalid_argument("stiefel_procrustes: need rows >= cols");
    xstar_ = polar_factor(b_);  // throws RankDeficiencyError if B is not full rank
    // Validate via the factored gradient matrix: the trace-based norm formula
    // cancels catastrophically near a critical point and would turn this
    // check into rounding-noise roulette.
    const T g =
        frob_norm(stiefel_riemannian_gradient_from_egrad(egrad(xstar_), xstar_));
    if (g > T(1e-9) * tol_factor<T>() * std::max(T(1), frob_norm(b_)))
      throw std::runtime_error("stiefel_procrustes: optimum oracle failed");
  }

  static StiefelProcrustes gaussian(Rng& rng, std::size_t n, std::size_t p) {
    return StiefelProcrustes(random_gaussian<T>(rng, n, p));
  }

  const Matrix<T>& b() const { return b_; }
  const Matrix<T>& optimum() const { return xstar_; }

  T value(const Matrix<T>& x) const { return frob_norm_sq(x - b_); }
  Matrix<T> egrad(const Matrix<T>& x) const { return T(2) * (x - b_); }

  ProblemHandle<T> handle() const {
    ProblemHandle<T> h;
    h.value = [this](const Matrix<T>& x) { return value(x); };
    h.egrad = [this](const Matrix<T>& x) { return egrad(x); };
    return h;
  }

 private:
  Matrix<T> b_, xstar_;
};

// ---------------------------------------------------------------------------
// Single-step orthogonalization: start from X = I + E with E ~ N(0, sigma^2)
// entrywise, move along a random skew direction of scale gamma, and report
// how one update changes ||X X^T - I||.

enum class OrthoStepMethod { Landing, Exponential, Projection, Cayley, QR };

inline const char* to_string(OrthoStepMethod m) {
  switch (m) {
    case OrthoStepMethod::Landing: return "landing";
    case OrthoStepMethod::Exponential: return "exponential";
    case OrthoStepMethod::Projection: return "projection";
    case OrthoStepMethod::Cayley: return "cayley";
    case OrthoStepMethod::QR: return "qr";
  }
  return "?";
}

template <typename T>
struct SingleStepResult {
  T residual_in = T(0);
  T residual_out = T(0);
};

template <typename T>
SingleStepResult<T> single_step_experiment(std::size_t p, T sigma, T gamma,
                                           T eta, T lambda,
                                           OrthoStepMethod method, Rng& rng) {
  Matrix<T> x = Matrix<T>::identity(p);
  if (sigma > T(0)) x += sigma * random_gaussian<T>(rng, p, p);
  Matrix<T> a = random_skew<T>(rng, p, gamma);
  SingleStepResult<T> result;
  result.residual_in = ortho_residual(x, ManifoldKind::Orthogonal);

  Matrix<T> out(1, 1);
  if (method == OrthoStepMethod::Landing) {
    Matrix<T> f = add_scaled(a, lambda, gram_defect(x, ManifoldKind::Orthogonal));
    Matrix<T> fx = f * x;
    out = add_scaled(std::move(x), -eta, fx);
  } else {
    a *= eta;
    const RetractionKind kind =
        method == OrthoStepMethod::Exponential ? RetractionKind::Exponential
        : method == OrthoStepMethod::Projection ? RetractionKind::Projection
        : method == OrthoStepMethod::Cayley ? RetractionKind::Cayley
                                            : RetractionKind::QR;
    out = retract(kind, x, a);
  }
  result.residual_out = ortho_residual(out, ManifoldKind::Orthogonal);
  return result;
}

}  // namespace landing
