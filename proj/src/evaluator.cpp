#include "loft/evaluator.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace loft {

namespace {

// Row-wise softmax with the usual max-shift for stability.
Matrix softmax_rows(const Matrix& logits) {
  Matrix probs(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    const double shift = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - shift).exp();
    probs.row(i) = e / e.sum();
  }
  return probs;
}

void check_labelled(const Matrix& features, const Labels& labels, const char* who) {
  require(features.rows() >= 1, std::string(who) + ": features must be non-empty");
  require(static_cast<Index>(labels.size()) == features.rows(),
          std::string(who) + ": one label per feature row required");
  require_finite(features, who);
}

Index infer_classes(const Labels& labels, const char* who) {
  std::uint32_t top = 0;
  for (auto l : labels) top = std::max(top, l);
  const Index c = static_cast<Index>(top) + 1;
  require(c >= 2, std::string(who) + ": at least two classes required");
  std::vector<bool> seen(static_cast<std::size_t>(c), false);
  for (auto l : labels) seen[l] = true;
  for (Index k = 0; k < c; ++k)
    if (!seen[static_cast<std::size_t>(k)]) {
      std::ostringstream msg;
      msg << who << ": class " << k << " has no samples";
      throw InvalidInputError(msg.str());
    }
  return c;
}

// Max-softmax confidence per row.
Vector confidences(const LinearHead& head, const Matrix& features,
                   const std::optional<StiefelPoint>& projector) {
  const Matrix probs = softmax_rows(head_logits(head, features, projector));
  return probs.rowwise().maxCoeff();
}

void check_head(const LinearHead& head) {
  require(head.classes() >= 2 && head.dim() >= 1,
          "evaluator: head must map at least one feature to at least two classes");
  require(head.b.size() == head.classes(),
          "evaluator: bias length must match the class count");
  require_finite(head.w, "head weights");
  require_finite(head.b, "head bias");
}

}  // namespace

LinearHead probe_train(const Matrix& features, const Labels& labels,
                       const ProbeConfig& config) {
  check_labelled(features, labels, "probe_train");
  require(config.epochs >= 1, "probe_train: epochs must be at least 1");
  require(config.lr > 0.0, "probe_train: lr must be positive");
  const Index n = features.rows();
  const Index d = features.cols();
  const Index c = infer_classes(labels, "probe_train");

  Matrix onehot = Matrix::Zero(n, c);
  for (Index i = 0; i < n; ++i) onehot(i, static_cast<Index>(labels[i])) = 1.0;

  LinearHead head{Matrix::Zero(c, d), Vector::Zero(c)};
  const double inv_n = 1.0 / static_cast<double>(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const Matrix probs = softmax_rows(
        (features * head.w.transpose()).rowwise() + head.b.transpose());
    const Matrix delta = probs - onehot;
    head.w.noalias() -= config.lr * inv_n * (delta.transpose() * features);
    head.b.noalias() -= config.lr * inv_n * delta.colwise().sum().transpose();
  }
  require_finite(head.w, "probe_train: diverged weights");
  return head;
}

Matrix head_logits(const LinearHead& head, const Matrix& features,
                   const std::optional<StiefelPoint>& projector) {
  check_head(head);
  require(features.cols() == head.dim(),
          "head_logits: feature dimension must match the head");
  require_finite(features, "head_logits");
  if (projector) {
    require(projector->d() == head.dim(),
            "head_logits: projector dimension must match the head");
    const Matrix projected = (features * projector->mat()) * projector->mat().transpose();
    return (projected * head.w.transpose()).rowwise() + head.b.transpose();
  }
  return (features * head.w.transpose()).rowwise() + head.b.transpose();
}

double accuracy(const LinearHead& head, const Matrix& features, const Labels& labels,
                const std::optional<StiefelPoint>& projector) {
  check_labelled(features, labels, "accuracy");
  const Matrix logits = head_logits(head, features, projector);
  const Index n = logits.rows();
  Index hits = 0;
  for (Index i = 0; i < n; ++i) {
    Index arg = 0;
    for (Index j = 1; j < logits.cols(); ++j)
      if (logits(i, j) > logits(i, arg)) arg = j;
    if (arg == static_cast<Index>(labels[i])) ++hits;
  }
  return 100.0 * static_cast<double>(hits) / static_cast<double>(n);
}

MiaResult mia_score(const LinearHead& head, const Matrix& forget_features,
                    const Matrix& calib_member, const Matrix& calib_nonmember,
                    const std::optional<StiefelPoint>& projector) {
  require(calib_member.rows() >= 1 && calib_nonmember.rows() >= 1,
          "mia_score: both calibration sets must be non-empty");
  const Vector fg = confidences(head, forget_features, projector);
  const Vector member = confidences(head, calib_member, projector);
  const Vector nonmember = confidences(head, calib_nonmember, projector);

  // Rule: member iff confidence >= tau. Candidates are every observed
  // calibration confidence plus a sentinel above all of them (classify
  // everything as nonmember); the best accuracy wins, largest tau on ties.
  std::set<double> candidates(member.begin(), member.end());
  candidates.insert(nonmember.begin(), nonmember.end());
  candidates.insert(2.0);

  const double total = static_cast<double>(member.size() + nonmember.size());
  double best_tau = 0.0;
  double best_acc = -1.0;
  for (double tau : candidates) {
    const auto flagged = (member.array() >= tau).count();
    const auto cleared = (nonmember.array() < tau).count();
    const double acc = static_cast<double>(flagged + cleared) / total;
    if (acc >= best_acc) {
      best_acc = acc;
      best_tau = tau;
    }
  }

  MiaResult result;
  result.threshold = best_tau;
  result.calib_accuracy = 100.0 * best_acc;
  result.score = 100.0 * static_cast<double>((fg.array() >= best_tau).count()) /
                 static_cast<double>(fg.size());
  return result;
}

double avg_gap(const MetricsTable& candidate, const MetricsTable& reference) {
  require(candidate.mia.has_value() && reference.mia.has_value(),
          "avg_gap: both tables must carry an attack score");
  const double gaps[] = {
      std::abs(candidate.acc_rm_train - reference.acc_rm_train),
      std::abs(candidate.acc_fg_train - reference.acc_fg_train),
      std::abs(candidate.acc_rm_test - reference.acc_rm_test),
      std::abs(candidate.acc_fg_test - reference.acc_fg_test),
      std::abs(*candidate.mia - *reference.mia)};
  double sum = 0.0;
  for (double g : gaps) sum += g;
  return sum / 5.0;
}

LinearHead absorb(const LinearHead& head, const StiefelPoint& u) {
  check_head(head);
  require(u.d() == head.dim(), "absorb: projector dimension must match the head");
  return LinearHead{(head.w * u.mat()) * u.mat().transpose(), head.b};
}

}  // namespace loft
