#include "loft/dataio.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

namespace loft {

namespace {

constexpr char kMagicFmat[] = "FMAT1\n";
constexpr char kMagicFprj[] = "FPRJ1\n";
constexpr char kMagicFcov[] = "FCOV1\n";
constexpr std::size_t kMagicLen = 6;

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw IoError(path + ": read failed");
  return std::move(buf).str();
}

void spill(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.flush();
  if (!out) throw IoError(path + ": write failed");
}

// --- little-endian packing --------------------------------------------------

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& out, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(out, bits);
}

void put_f64(std::string& out, double v) {
  std::uint64_t bits;
  std::memcpy(&bits, &v, 8);
  put_u64(out, bits);
}

float checked_f32(double v, const char* what) {
  const float narrowed = static_cast<float>(v);
  if (!std::isfinite(narrowed)) {
    std::ostringstream msg;
    msg << what << ": value " << v << " does not fit in an f32 payload";
    throw InvalidInputError(msg.str());
  }
  return narrowed;
}

class ByteReader {
 public:
  ByteReader(std::string buf, std::string path)
      : buf_(std::move(buf)), path_(std::move(path)) {}

  std::size_t pos() const { return pos_; }

  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    std::ostringstream msg;
    msg << path_ << ": " << what << " at byte offset " << at;
    throw FormatError(msg.str());
  }

  void need(std::size_t n, const char* what) {
    if (pos_ + n > buf_.size()) fail(std::string("truncated ") + what, pos_);
  }

  void expect_magic(const char* magic) {
    if (buf_.size() < kMagicLen || std::memcmp(buf_.data(), magic, kMagicLen) != 0)
      fail("bad magic", 0);
    pos_ = kMagicLen;
  }

  std::uint8_t u8(const char* what) {
    need(1, what);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }

  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i)
      v |= static_cast<std::uint32_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<std::uint8_t>(buf_[pos_ + i])) << (8 * i);
    pos_ += 8;
    return v;
  }

  float f32(const char* what) {
    const std::uint32_t bits = u32(what);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
  }

  double f64(const char* what) {
    const std::uint64_t bits = u64(what);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
  }

  void expect_eof() const {
    if (pos_ != buf_.size()) fail("unexpected trailing bytes", pos_);
  }

 private:
  std::string buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

// Shared FMAT-layout block: header, f32 payload, optional labels.
struct MatBlock {
  Matrix values;
  std::optional<Labels> labels;
};

MatBlock read_mat_block(ByteReader& r, bool allow_labels) {
  const std::size_t rows_at = r.pos();
  const std::uint32_t rows = r.u32("row count");
  const std::uint32_t cols = r.u32("column count");
  if (rows == 0) r.fail("zero rows", rows_at);
  if (cols == 0) r.fail("zero columns", rows_at + 4);
  const std::size_t flags_at = r.pos();
  const std::uint8_t flags = r.u8("flags byte");
  if (flags & ~std::uint8_t{1}) r.fail("unknown flag bits", flags_at);
  if ((flags & 1) && !allow_labels) r.fail("labels are not allowed here", flags_at);

  MatBlock block;
  block.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  const std::size_t count = static_cast<std::size_t>(rows) * cols;
  r.need(count * 4, "matrix payload");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    const float v = r.f32("matrix payload");
    if (!std::isfinite(v)) r.fail("non-finite matrix entry", at);
    block.values(static_cast<Index>(i / cols), static_cast<Index>(i % cols)) = v;
  }
  if (flags & 1) {
    Labels labels(rows);
    r.need(static_cast<std::size_t>(rows) * 4, "label payload");
    for (std::uint32_t i = 0; i < rows; ++i) labels[i] = r.u32("label payload");
    block.labels = std::move(labels);
  }
  return block;
}

void write_mat_block(std::string& out, const char* magic, const Matrix& values,
                     const std::optional<Labels>& labels, const char* what) {
  require(values.rows() >= 1 && values.cols() >= 1,
          std::string(what) + ": refusing to write an empty matrix");
  require_finite(values, what);
  require(values.rows() <= 0xffffffffLL && values.cols() <= 0xffffffffLL,
          std::string(what) + ": dimensions exceed the u32 header fields");
  if (labels)
    require(static_cast<Index>(labels->size()) == values.rows(),
            std::string(what) + ": label count must match the row count");

  out.append(magic, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(values.rows()));
  put_u32(out, static_cast<std::uint32_t>(values.cols()));
  out.push_back(labels ? char(1) : char(0));
  for (Index i = 0; i < values.rows(); ++i)
    for (Index j = 0; j < values.cols(); ++j)
      put_f32(out, checked_f32(values(i, j), what));
  if (labels)
    for (auto l : *labels) put_u32(out, l);
}

}  // namespace

void write_fmat(const std::string& path, const FeatureMatrix& features) {
  std::string out;
  write_mat_block(out, kMagicFmat, features.values, features.labels, "write_fmat");
  spill(path, out);
}

FeatureMatrix read_fmat(const std::string& path) {
  ByteReader r(slurp(path), path);
  r.expect_magic(kMagicFmat);
  MatBlock block = read_mat_block(r, /*allow_labels=*/true);
  r.expect_eof();
  return FeatureMatrix{std::move(block.values), std::move(block.labels)};
}

void write_fprj(const std::string& path, const StiefelPoint& u) {
  std::string out;
  write_mat_block(out, kMagicFprj, u.mat(), std::nullopt, "write_fprj");
  spill(path, out);
}

StiefelPoint read_fprj(const std::string& path) {
  ByteReader r(slurp(path), path);
  r.expect_magic(kMagicFprj);
  MatBlock block = read_mat_block(r, /*allow_labels=*/false);
  r.expect_eof();
  return StiefelPoint(block.values);  // re-validates orthonormality
}

void write_fcov(const std::string& path, const CovarianceSummary& cov) {
  require(cov.dim() <= 0xffffffffLL, "write_fcov: dimension exceeds the u32 header");
  require(cov.mean.size() == cov.dim(), "write_fcov: mean length must match dim");
  require(cov.samples >= 1, "write_fcov: sample count must be positive");
  require_finite(cov.mean, "write_fcov mean");

  std::string out;
  out.append(kMagicFcov, kMagicLen);
  put_u32(out, static_cast<std::uint32_t>(cov.dim()));
  const Matrix& sigma = cov.sigma.mat();
  for (Index i = 0; i < sigma.rows(); ++i)
    for (Index j = 0; j < sigma.cols(); ++j) put_f64(out, sigma(i, j));
  put_f64(out, cov.trace);
  put_u64(out, cov.samples);
  for (Index i = 0; i < cov.mean.size(); ++i) put_f64(out, cov.mean(i));
  spill(path, out);
}

CovarianceSummary read_fcov(const std::string& path) {
  ByteReader r(slurp(path), path);
  r.expect_magic(kMagicFcov);
  const std::size_t dim_at = r.pos();
  const std::uint32_t dim = r.u32("dimension");
  if (dim == 0) r.fail("zero dimension", dim_at);

  Matrix sigma(static_cast<Index>(dim), static_cast<Index>(dim));
  const std::size_t count = static_cast<std::size_t>(dim) * dim;
  r.need(count * 8, "covariance payload");
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t at = r.pos();
    const double v = r.f64("covariance payload");
    if (!std::isfinite(v)) r.fail("non-finite covariance entry", at);
    sigma(static_cast<Index>(i / dim), static_cast<Index>(i % dim)) = v;
  }
  const std::size_t trace_at = r.pos();
  const double stored_trace = r.f64("trace");
  const std::uint64_t samples = r.u64("sample count");
  if (samples == 0) r.fail("zero sample count", trace_at + 8);
  Vector mean(static_cast<Index>(dim));
  for (std::uint32_t i = 0; i < dim; ++i) {
    const std::size_t at = r.pos();
    const double v = r.f64("mean payload");
    if (!std::isfinite(v)) r.fail("non-finite mean entry", at);
    mean(static_cast<Index>(i)) = v;
  }
  r.expect_eof();

  SymmetricMatrix sym(sigma);
  if (std::abs(stored_trace - sym.trace()) > 1e-9 * (1.0 + std::abs(sym.trace())))
    r.fail("stored trace disagrees with the matrix diagonal", trace_at);
  return CovarianceSummary{std::move(sym), stored_trace, samples, std::move(mean)};
}

void write_head(const std::string& path, const LinearHead& head) {
  require(head.classes() >= 2, "write_head: at least two classes required");
  require(head.b.size() == head.classes(),
          "write_head: bias length must match the class count");
  require_finite(head.b, "write_head bias");
  std::string out;
  write_mat_block(out, kMagicFmat, head.w, std::nullopt, "write_head");
  for (Index i = 0; i < head.b.size(); ++i)
    put_f32(out, checked_f32(head.b(i), "write_head bias"));
  spill(path, out);
}

LinearHead read_head(const std::string& path) {
  ByteReader r(slurp(path), path);
  r.expect_magic(kMagicFmat);
  MatBlock block = read_mat_block(r, /*allow_labels=*/false);
  const Index classes = block.values.rows();
  Vector bias(classes);
  for (Index i = 0; i < classes; ++i) {
    const std::size_t at = r.pos();
    const float v = r.f32("bias payload");
    if (!std::isfinite(v)) r.fail("non-finite bias entry", at);
    bias(i) = v;
  }
  r.expect_eof();
  if (classes < 2) r.fail("head needs at least two classes", kMagicLen);
  return LinearHead{std::move(block.values), std::move(bias)};
}

// --- CSV ---------------------------------------------------------------------

namespace {

struct RawCsv {
  std::vector<std::vector<std::string>> records;
  std::vector<std::size_t> start_lines;  // 1-based physical line of each record
};

[[noreturn]] void csv_fail(const std::string& path, std::size_t line,
                           const std::string& what) {
  std::ostringstream msg;
  msg << path << ": line " << line << ": " << what;
  throw FormatError(msg.str());
}

RawCsv parse_csv(const std::string& text, const std::string& path) {
  RawCsv out;
  std::vector<std::string> record;
  std::string field;
  bool in_quotes = false;
  bool field_was_quoted = false;
  std::size_t line = 1;
  std::size_t record_line = 1;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    field_was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    out.records.push_back(std::move(record));
    out.start_lines.push_back(record_line);
    record.clear();
    record_line = line;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field.push_back(c);
      }
      continue;
    }
    switch (c) {
      case '"':
        if (!field.empty() || field_was_quoted)
          csv_fail(path, line, "stray quote inside an unquoted field");
        in_quotes = true;
        field_was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (i + 1 < text.size() && text[i + 1] == '\n') break;  // CRLF: handled at \n
        csv_fail(path, line, "bare carriage return");
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        field.push_back(c);
    }
  }
  if (in_quotes) csv_fail(path, record_line, "unterminated quoted field");
  // A final record without a trailing newline still counts; a trailing newline
  // leaves one empty field here, which is not a record.
  if (!(record.empty() && field.empty() && !field_was_quoted)) end_record();
  return out;
}

std::string trimmed(const std::string& s) {
  std::size_t a = 0;
  std::size_t b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

bool parse_double(const std::string& cell, double& out) {
  const std::string t = trimmed(cell);
  if (t.empty()) return false;
  char* end = nullptr;
  out = std::strtod(t.c_str(), &end);
  return end == t.c_str() + t.size() && std::isfinite(out);
}

bool parse_label(const std::string& cell, std::uint32_t& out) {
  const std::string t = trimmed(cell);
  if (t.empty() || t[0] == '-') return false;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(t.c_str(), &end, 10);
  if (end != t.c_str() + t.size() || v > 0xffffffffULL) return false;
  out = static_cast<std::uint32_t>(v);
  return true;
}

}  // namespace

FeatureMatrix read_csv(const std::string& path, CsvHeader header,
                       const std::optional<std::string>& label_column) {
  const RawCsv raw = parse_csv(slurp(path), path);
  if (raw.records.empty()) throw FormatError(path + ": no records");

  bool has_header = false;
  switch (header) {
    case CsvHeader::kYes:
      has_header = true;
      break;
    case CsvHeader::kNo:
      has_header = false;
      break;
    case CsvHeader::kAuto: {
      has_header = false;
      for (const auto& cell : raw.records.front()) {
        double ignored;
        if (!parse_double(cell, ignored)) {
          has_header = true;
          break;
        }
      }
      break;
    }
  }

  const std::size_t width = raw.records.front().size();
  const std::size_t first_data = has_header ? 1 : 0;
  if (raw.records.size() <= first_data)
    throw FormatError(path + ": no data rows");

  std::optional<std::size_t> label_idx;
  if (label_column) {
    if (has_header) {
      const auto& names = raw.records.front();
      for (std::size_t j = 0; j < names.size(); ++j)
        if (trimmed(names[j]) == *label_column) label_idx = j;
    }
    if (!label_idx) {
      std::uint32_t idx;
      if (parse_label(*label_column, idx) && idx < width)
        label_idx = idx;
      else
        throw InvalidInputError(path + ": label column '" + *label_column +
                                "' not found");
    }
  }
  if (label_idx && width < 2)
    throw InvalidInputError(path + ": no feature columns besides the label");

  const std::size_t rows = raw.records.size() - first_data;
  const std::size_t cols = width - (label_idx ? 1 : 0);
  FeatureMatrix out;
  out.values.resize(static_cast<Index>(rows), static_cast<Index>(cols));
  Labels labels;
  if (label_idx) labels.reserve(rows);

  for (std::size_t r = first_data; r < raw.records.size(); ++r) {
    const auto& record = raw.records[r];
    const std::size_t at_line = raw.start_lines[r];
    if (record.size() != width) {
      std::ostringstream msg;
      msg << "expected " << width << " fields but found " << record.size();
      csv_fail(path, at_line, msg.str());
    }
    Index col = 0;
    for (std::size_t j = 0; j < record.size(); ++j) {
      if (label_idx && j == *label_idx) {
        std::uint32_t label;
        if (!parse_label(record[j], label))
          csv_fail(path, at_line, "field " + std::to_string(j + 1) +
                                      " is not a non-negative integer label");
        labels.push_back(label);
      } else {
        double v;
        if (!parse_double(record[j], v))
          csv_fail(path, at_line,
                   "field " + std::to_string(j + 1) + " is not a finite number");
        out.values(static_cast<Index>(r - first_data), col++) = v;
      }
    }
  }
  if (label_idx) out.labels = std::move(labels);
  return out;
}

// --- synthetic corpora -------------------------------------------------------

namespace {

// Frozen generator constants; scenario.noise_scale multiplies every sigma.
struct ExactParams {
  double mean_rm = 4.0;      // remaining class-mean magnitude, on top dirs
  double mean_out = 5.0;     // forgetting class-mean magnitude, off-subspace
  double leak = 3.5;         // forgetting alignment inside the top subspace
  double sigma_top = 1.0;    // remaining variance on the top subspace
  double sigma_floor = 0.1;  // ambient noise everywhere else
  double sigma_fg_top = 0.3; // forgetting noise across the whole top subspace
  double sigma_fg_out = 0.5; // forgetting noise on its own off-subspace dir
};

struct PretrainedParams {
  double mean = 0.15;        // class-mean magnitude, inside the top subspace
  double sigma_top = 1.0;    // leading noise scale
  double decay = 0.9;        // geometric decay across the top subspace
  double sigma_floor = 0.12; // ambient noise outside it
};

void validate(const SyntheticScenario& sc) {
  require(sc.d >= 4, "synth: dimension must be at least 4");
  require(sc.classes >= 2 && sc.classes <= 4096, "synth: classes must lie in [2, 4096]");
  require(sc.per_class >= 1, "synth: per_class must be positive");
  require(sc.noise_scale > 0.0, "synth: noise_scale must be positive");
  require(!sc.forget_classes.empty(), "synth: at least one forgetting class required");
  require(static_cast<int>(sc.forget_classes.size()) < sc.classes,
          "synth: at least one remaining class required");
  std::vector<int> sorted = sc.forget_classes;
  std::sort(sorted.begin(), sorted.end());
  require(std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end(),
          "synth: duplicate forgetting class");
  require(sorted.front() >= 0 && sorted.back() < sc.classes,
          "synth: forgetting class out of range");
  const Index n_fg = static_cast<Index>(sc.forget_classes.size());
  require(sc.top_dim >= n_fg + 1 && sc.top_dim + n_fg <= sc.d,
          "synth: need forget_count + 1 <= top_dim <= d - forget_count");
}

}  // namespace

std::pair<FeatureMatrix, FeatureMatrix> synth(const SyntheticScenario& sc) {
  validate(sc);
  std::mt19937_64 rng(sc.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const Index d = sc.d;
  const Index k = sc.top_dim;
  const int c = sc.classes;

  std::vector<int> forget = sc.forget_classes;
  std::sort(forget.begin(), forget.end());
  const Index n_fg = static_cast<Index>(forget.size());
  std::vector<bool> is_fg(static_cast<std::size_t>(c), false);
  for (int f : forget) is_fg[static_cast<std::size_t>(f)] = true;
  std::vector<Index> fg_rank(static_cast<std::size_t>(c), -1);
  std::vector<Index> rm_rank(static_cast<std::size_t>(c), -1);
  {
    Index fi = 0, ri = 0;
    for (int cls = 0; cls < c; ++cls)
      (is_fg[static_cast<std::size_t>(cls)] ? fg_rank : rm_rank)[static_cast<std::size_t>(cls)] =
          (is_fg[static_cast<std::size_t>(cls)] ? fi++ : ri++);
  }

  // Random orthogonal frame; samples are assembled in its coordinates and
  // rotated once at the end.
  Matrix g(d, d);
  for (Index i = 0; i < d; ++i)
    for (Index j = 0; j < d; ++j) g(i, j) = gauss(rng);
  const Matrix q = thin_qr(g).first;

  // Per-class mean coefficients and noise scales, in frame coordinates.
  Matrix mean_coef = Matrix::Zero(c, d);
  Matrix sigma_coef(c, d);
  const double ns = sc.noise_scale;

  if (sc.regime == Regime::kExact) {
    const ExactParams p;
    const Index free_dirs = k - n_fg;
    for (int cls = 0; cls < c; ++cls) {
      if (is_fg[static_cast<std::size_t>(cls)]) {
        const Index rank = fg_rank[static_cast<std::size_t>(cls)];
        mean_coef(cls, k + rank) = p.mean_out;
        mean_coef(cls, k - 1 - rank) = p.leak;
        for (Index j = 0; j < k; ++j) sigma_coef(cls, j) = p.sigma_fg_top * ns;
        for (Index j = k; j < d; ++j) sigma_coef(cls, j) = p.sigma_floor * ns;
        sigma_coef(cls, k + rank) = p.sigma_fg_out * ns;
      } else {
        const Index rank = rm_rank[static_cast<std::size_t>(cls)];
        const double sign = (rank / free_dirs) % 2 == 0 ? 1.0 : -1.0;
        mean_coef(cls, rank % free_dirs) = sign * p.mean_rm;
        for (Index j = 0; j < k; ++j) sigma_coef(cls, j) = p.sigma_top * ns;
        for (Index j = k; j < d; ++j) sigma_coef(cls, j) = p.sigma_floor * ns;
      }
    }
    // Zero-sum means within each split so both splits stay globally centered.
    Eigen::RowVectorXd rm_mean = Eigen::RowVectorXd::Zero(d);
    Eigen::RowVectorXd fg_mean = Eigen::RowVectorXd::Zero(d);
    for (int cls = 0; cls < c; ++cls)
      (is_fg[static_cast<std::size_t>(cls)] ? fg_mean : rm_mean) += mean_coef.row(cls);
    rm_mean /= static_cast<double>(c - n_fg);
    fg_mean /= static_cast<double>(n_fg);
    for (int cls = 0; cls < c; ++cls)
      mean_coef.row(cls) -= is_fg[static_cast<std::size_t>(cls)] ? fg_mean : rm_mean;
  } else {
    const PretrainedParams p;
    for (int cls = 0; cls < c; ++cls) {
      Eigen::RowVectorXd dir = Eigen::RowVectorXd::Zero(d);
      for (Index j = 0; j < k; ++j) dir(j) = gauss(rng);
      dir /= dir.norm();
      mean_coef.row(cls) = p.mean * dir;
      for (Index j = 0; j < k; ++j)
        sigma_coef(cls, j) = p.sigma_top * std::pow(p.decay, static_cast<double>(j)) * ns;
      for (Index j = k; j < d; ++j) sigma_coef(cls, j) = p.sigma_floor * ns;
    }
    const Eigen::RowVectorXd overall = mean_coef.colwise().mean();
    mean_coef.rowwise() -= overall;
  }

  const Index rm_rows = static_cast<Index>(c - n_fg) * sc.per_class;
  const Index fg_rows = n_fg * sc.per_class;
  Matrix rm_coef(rm_rows, d);
  Matrix fg_coef(fg_rows, d);
  Labels rm_labels;
  Labels fg_labels;
  rm_labels.reserve(static_cast<std::size_t>(rm_rows));
  fg_labels.reserve(static_cast<std::size_t>(fg_rows));

  Index rm_at = 0, fg_at = 0;
  for (int cls = 0; cls < c; ++cls) {
    const bool fg = is_fg[static_cast<std::size_t>(cls)];
    Matrix& dst = fg ? fg_coef : rm_coef;
    Index& at = fg ? fg_at : rm_at;
    for (int i = 0; i < sc.per_class; ++i, ++at) {
      for (Index j = 0; j < d; ++j)
        dst(at, j) = mean_coef(cls, j) + sigma_coef(cls, j) * gauss(rng);
      (fg ? fg_labels : rm_labels).push_back(static_cast<std::uint32_t>(cls));
    }
  }

  FeatureMatrix rm{rm_coef * q.transpose(), std::move(rm_labels)};
  FeatureMatrix fg{fg_coef * q.transpose(), std::move(fg_labels)};
  return {std::move(rm), std::move(fg)};
}

CovarianceSummary merge_covariances(const std::vector<CovarianceSummary>& parts) {
  require(!parts.empty(), "merge_covariances: at least one covariance required");
  const Index d = parts.front().dim();
  std::uint64_t total = 0;
  for (const auto& part : parts) {
    require(part.dim() == d, "merge_covariances: all parts must share one dimension");
    require(part.mean.size() == d, "merge_covariances: mean length must match dim");
    require(part.samples >= 1, "merge_covariances: sample counts must be positive");
    total += part.samples;
  }

  Vector mean = Vector::Zero(d);
  for (const auto& part : parts)
    mean += (static_cast<double>(part.samples) / static_cast<double>(total)) * part.mean;

  Matrix pooled = Matrix::Zero(d, d);
  for (const auto& part : parts) {
    const double w = static_cast<double>(part.samples) / static_cast<double>(total);
    pooled.noalias() += w * part.sigma.mat();
    pooled.noalias() += w * (part.mean * part.mean.transpose());
  }
  pooled.noalias() -= mean * mean.transpose();

  SymmetricMatrix sym(pooled);
  const double tr = sym.trace();
  return CovarianceSummary{std::move(sym), tr, total, std::move(mean)};
}

std::string file_digest(const std::string& path) {
  const std::string bytes = slurp(path);
  std::uint64_t h = 14695981039346656037ULL;
  for (char ch : bytes) {
    h ^= static_cast<unsigned char>(ch);
    h *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << h;
  return out.str();
}

}  // namespace loft
