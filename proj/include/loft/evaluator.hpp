#pragma once

#include "loft/stiefel.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace loft {

using Labels = std::vector<std::uint32_t>;

/// Multinomial linear classifier: logits = z W^T + b, W is C x d.
struct LinearHead {
  Matrix w;
  Vector b;

  Index classes() const { return w.rows(); }
  Index dim() const { return w.cols(); }
};

struct ProbeConfig {
  int epochs = 500;
  double lr = 0.1;
};

/// The five-entry summary the reports are built from; all accuracies and the
/// attack score are percentages in [0, 100].
struct MetricsTable {
  double acc_rm_train = 0.0;
  double acc_fg_train = 0.0;
  double acc_rm_test = 0.0;
  double acc_fg_test = 0.0;
  std::optional<double> mia;
};

struct MiaResult {
  double score = 0.0;       // percent of forgetting samples at or above tau
  double threshold = 0.0;   // the calibrated confidence threshold
  double calib_accuracy = 0.0;  // percent member/nonmember accuracy at tau
};

/// Full-batch softmax-regression training from zero initialization;
/// deterministic for fixed inputs. Labels must cover every class 0..C-1.
LinearHead probe_train(const Matrix& features, const Labels& labels,
                       const ProbeConfig& config = {});

/// Raw logits, optionally through the projector (z -> U U^T z first).
Matrix head_logits(const LinearHead& head, const Matrix& features,
                   const std::optional<StiefelPoint>& projector = std::nullopt);

/// Percent of rows whose argmax logit matches the label; argmax ties resolve
/// to the lowest class index.
double accuracy(const LinearHead& head, const Matrix& features, const Labels& labels,
                const std::optional<StiefelPoint>& projector = std::nullopt);

/// Confidence-thresholded membership attack: the threshold on max-softmax
/// confidence is chosen to maximize member/nonmember accuracy on the
/// calibration sets (largest threshold on ties), then the score is the percent
/// of forgetting samples at or above it.
MiaResult mia_score(const LinearHead& head, const Matrix& forget_features,
                    const Matrix& calib_member, const Matrix& calib_nonmember,
                    const std::optional<StiefelPoint>& projector = std::nullopt);

/// Mean absolute difference over the five table entries; both tables must
/// carry an attack score.
double avg_gap(const MetricsTable& candidate, const MetricsTable& reference);

/// Folds the projector into the head: W' = W U U^T, bias unchanged, so the
/// absorbed head on raw features equals the original head on projected ones.
LinearHead absorb(const LinearHead& head, const StiefelPoint& u);

}  // namespace loft
