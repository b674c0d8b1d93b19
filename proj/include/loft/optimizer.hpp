#pragma once

#include "loft/objective.hpp"

#include <cstdint>
#include <vector>

namespace loft {

enum class Schedule { kConstant, kCosine };
enum class InitKind { kPca, kRandom };

struct OptimizerConfig {
  double lr = 1.0;
  double weight_decay = 0.05;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int steps = 50;
  Schedule schedule = Schedule::kConstant;
  InitKind init = InitKind::kPca;
  std::uint64_t seed = 0;
  TermSelection terms = TermSelection::kBoth;
};

/// Adam moment buffers; `step` counts completed steps and drives the bias
/// correction, so a fresh state must start at zero with zero moments.
struct OptimizerState {
  std::int64_t step = 0;
  Matrix first_moment;
  Matrix second_moment;

  static OptimizerState zero(Index d, Index s);
};

struct FitStepRecord {
  int step = 0;
  ObjectiveValue value;
  double grad_norm = 0.0;
  double ortho_residual = 0.0;
  double wall_seconds = 0.0;
};

struct FitTrace {
  std::vector<FitStepRecord> steps;
};

struct FitResult {
  StiefelPoint point;
  FitTrace trace;
  ObjectiveValue initial_value;
  ObjectiveValue best_value;
  int best_step = 0;  // 0 means the initialization was never improved on
};

/// Raised when fit aborts mid-run (non-finite objective or a failed
/// retraction); carries the trace of the steps that did complete.
struct FitAbortedError : NumericalFailureError {
  FitAbortedError(const std::string& msg, FitTrace partial)
      : NumericalFailureError(msg), trace(std::move(partial)) {}
  FitTrace trace;
};

/// Learning rate for 1-based step t under the configured schedule.
double schedule_lr(const OptimizerConfig& config, int step);

/// One Riemannian Adam step: Euclidean gradient plus weight decay, projected
/// to the tangent space; moments with projection-based transport of the first
/// moment; update -lr_t * mhat / (sqrt(vhat) + eps) followed by QR retraction.
std::pair<StiefelPoint, OptimizerState> adam_step(const StiefelPoint& u,
                                                  const OptimizerState& state,
                                                  const ObjectiveInputs& inputs,
                                                  const OptimizerConfig& config);

/// Full fit loop from the configured initialization; returns the iterate with
/// the lowest recorded objective (the initialization counts) and a per-step
/// trace of length steps.
FitResult fit(const ObjectiveInputs& inputs, Index s, const OptimizerConfig& config);

}  // namespace loft
