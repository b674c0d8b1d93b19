#pragma once

#include "loft/evaluator.hpp"
#include "loft/matcore.hpp"
#include "loft/stiefel.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace loft {

/// Row-per-sample feature block with optional class labels.
struct FeatureMatrix {
  Matrix values;
  std::optional<Labels> labels;

  Index n() const { return values.rows(); }
  Index d() const { return values.cols(); }
};

enum class CsvHeader { kAuto, kYes, kNo };

enum class Regime { kPretrained, kExact };

/// Recipe for the synthetic two-split corpora. `exact` mimics features of a
/// model trained from scratch on the remaining classes (sharply low-rank
/// remaining covariance, forgetting energy concentrated off its principal
/// subspace); `pretrained` draws both splits from one shared cluster model so
/// their spectra and reconstruction profiles agree.
struct SyntheticScenario {
  Regime regime = Regime::kExact;
  Index d = 32;
  int classes = 6;
  int per_class = 300;
  std::vector<int> forget_classes;
  std::uint64_t seed = 0;
  Index top_dim = 8;
  double noise_scale = 1.0;
};

// --- binary formats ---------------------------------------------------------
// FMAT1\n  u32 rows, u32 cols, u8 flags (bit0: labels), rows*cols f32
//          row-major, then rows u32 labels if flagged. All integers and floats
//          little-endian.
// FPRJ1\n  same layout as FMAT without labels; holds a projector factor U.
// FCOV1\n  u32 dim, dim*dim f64 row-major, f64 trace, u64 sample count,
//          dim f64 mean.
// Head     FMAT-layout weight matrix (C x d, no labels) with C f32 bias
//          values appended.
// Readers reject malformed input with a FormatError naming the byte offset.

void write_fmat(const std::string& path, const FeatureMatrix& features);
FeatureMatrix read_fmat(const std::string& path);

void write_fprj(const std::string& path, const StiefelPoint& u);
StiefelPoint read_fprj(const std::string& path);

void write_fcov(const std::string& path, const CovarianceSummary& cov);
CovarianceSummary read_fcov(const std::string& path);

void write_head(const std::string& path, const LinearHead& head);
LinearHead read_head(const std::string& path);

/// CSV reader with RFC-style quoting. The label column may be named (header
/// required) or given as a 0-based index; every other cell must be numeric.
/// Errors name the 1-based line a record starts on.
FeatureMatrix read_csv(const std::string& path, CsvHeader header = CsvHeader::kAuto,
                       const std::optional<std::string>& label_column = std::nullopt);

/// Deterministic synthetic corpora: (remaining split, forgetting split), rows
/// grouped by ascending class id, labels attached.
std::pair<FeatureMatrix, FeatureMatrix> synth(const SyntheticScenario& scenario);

/// Sample-count-weighted pooling of per-round covariances, with the cross-round
/// mean correction; exact for covariances computed with centering on.
CovarianceSummary merge_covariances(const std::vector<CovarianceSummary>& parts);

/// FNV-1a 64-bit digest of a file's bytes, as 16 hex characters.
std::string file_digest(const std::string& path);

}  // namespace loft
