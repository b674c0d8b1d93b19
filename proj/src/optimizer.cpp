#include "loft/optimizer.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace loft {

namespace {

void validate(const OptimizerConfig& c) {
  require(c.lr > 0.0, "optimizer: lr must be positive");
  require(c.weight_decay >= 0.0, "optimizer: weight decay must be non-negative");
  require(c.beta1 >= 0.0 && c.beta1 < 1.0, "optimizer: beta1 must lie in [0, 1)");
  require(c.beta2 >= 0.0 && c.beta2 < 1.0, "optimizer: beta2 must lie in [0, 1)");
  require(c.epsilon > 0.0, "optimizer: epsilon must be positive");
  require(c.steps >= 0, "optimizer: steps must be non-negative");
}

constexpr double kPi = 3.14159265358979323846;

// Core update given the ambient objective gradient at u. Weight decay enters
// here (G += wd * U before projection), matching the fit loop and adam_step.
std::pair<StiefelPoint, OptimizerState> step_with_grad(const StiefelPoint& u,
                                                       const OptimizerState& state,
                                                       const Matrix& objective_grad,
                                                       const OptimizerConfig& config) {
  Matrix ambient = objective_grad;
  if (config.weight_decay != 0.0) ambient.noalias() += config.weight_decay * u.mat();
  const TangentVector grad = tangent_project(u, ambient);

  const auto t = state.step + 1;
  OptimizerState next;
  next.step = t;
  // Transport the first moment to the current tangent space before mixing.
  next.first_moment = config.beta1 * tangent_project(u, state.first_moment).xi +
                      (1.0 - config.beta1) * grad.xi;
  next.second_moment = config.beta2 * state.second_moment +
                       (1.0 - config.beta2) * grad.xi.cwiseProduct(grad.xi);

  const double bias1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bias2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  const double lr_t = schedule_lr(config, static_cast<int>(t));
  const Matrix step_dir =
      (-lr_t * (next.first_moment.array() / bias1) /
       ((next.second_moment.array() / bias2).sqrt() + config.epsilon))
          .matrix();

  StiefelPoint moved = retract_qr(u, TangentVector{step_dir});
  return {std::move(moved), std::move(next)};
}

}  // namespace

OptimizerState OptimizerState::zero(Index d, Index s) {
  return {0, Matrix::Zero(d, s), Matrix::Zero(d, s)};
}

double schedule_lr(const OptimizerConfig& config, int step) {
  require(step >= 1, "schedule_lr: steps are 1-based");
  if (config.schedule == Schedule::kConstant) return config.lr;
  const double horizon = std::max(config.steps, 1);
  return config.lr * 0.5 * (1.0 + std::cos(kPi * (step - 1) / horizon));
}

std::pair<StiefelPoint, OptimizerState> adam_step(const StiefelPoint& u,
                                                  const OptimizerState& state,
                                                  const ObjectiveInputs& inputs,
                                                  const OptimizerConfig& config) {
  validate(config);
  require(state.first_moment.rows() == u.d() && state.first_moment.cols() == u.s() &&
              state.second_moment.rows() == u.d() && state.second_moment.cols() == u.s(),
          "adam_step: moment buffers must match the point shape");
  return step_with_grad(u, state, euclid_grad(u, inputs, config.terms), config);
}

FitResult fit(const ObjectiveInputs& inputs, Index s, const OptimizerConfig& config) {
  validate(config);
  require(s >= 1 && s <= inputs.dim(), "fit: expected 1 <= s <= dim");

  StiefelPoint u = config.init == InitKind::kPca
                       ? pca_init(inputs.sigma_rm(), s)
                       : random_stiefel(inputs.dim(), s, config.seed);
  OptimizerState state = OptimizerState::zero(inputs.dim(), s);

  // One combined value+gradient evaluation per iterate: the value recorded for
  // step t and the gradient driving step t+1 come from the same pass.
  ObjectiveEval eval = eval_objective_with_grad(u.mat(), inputs, config.terms);
  const ObjectiveValue initial = eval.value;
  StiefelPoint best = u;
  ObjectiveValue best_value = initial;
  int best_step = 0;

  FitTrace trace;
  trace.steps.reserve(static_cast<std::size_t>(config.steps));
  using Clock = std::chrono::steady_clock;

  for (int t = 1; t <= config.steps; ++t) {
    const auto started = Clock::now();
    if (!eval.grad.allFinite()) {
      std::ostringstream msg;
      msg << "fit: non-finite gradient at step " << t;
      throw FitAbortedError(msg.str(), std::move(trace));
    }
    FitStepRecord rec;
    rec.step = t;
    rec.grad_norm = tangent_project(u, eval.grad).xi.norm();

    try {
      auto [next_u, next_state] = step_with_grad(u, state, eval.grad, config);
      u = std::move(next_u);
      state = std::move(next_state);
    } catch (const DegenerateDirectionError& e) {
      std::ostringstream msg;
      msg << "fit: retraction failed at step " << t << ": " << e.what();
      throw FitAbortedError(msg.str(), std::move(trace));
    }

    eval = eval_objective_with_grad(u.mat(), inputs, config.terms);
    rec.value = eval.value;
    rec.ortho_residual = u.ortho_residual();
    rec.wall_seconds = std::chrono::duration<double>(Clock::now() - started).count();
    trace.steps.push_back(rec);
    if (!std::isfinite(rec.value.total)) {
      std::ostringstream msg;
      msg << "fit: non-finite objective at step " << t;
      throw FitAbortedError(msg.str(), std::move(trace));
    }

    if (rec.value.total < best_value.total) {
      best = u;
      best_value = rec.value;
      best_step = t;
    }
  }

  return FitResult{std::move(best), std::move(trace), initial, best_value, best_step};
}

}  // namespace loft
