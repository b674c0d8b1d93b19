#include "loft/dataio.hpp"

#include "loft/analysis.hpp"

#include "doctest.h"
#include "test_support.hpp"

#include <cmath>
#include <cstring>
#include <string>

using namespace loft;
using loft::testing::gaussian;
using loft::testing::TempDir;

namespace {

void put_u32(std::string& s, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_f32(std::string& s, float v) {
  std::uint32_t bits;
  std::memcpy(&bits, &v, 4);
  put_u32(s, bits);
}

// The 31-byte reference encoding of [[1, 2], [3, 4]] without labels.
std::string fmat_2x2_bytes() {
  std::string s = "FMAT1\n";
  put_u32(s, 2);
  put_u32(s, 2);
  s.push_back('\0');  // flags: no labels
  for (float v : {1.0f, 2.0f, 3.0f, 4.0f}) put_f32(s, v);
  return s;
}

FeatureMatrix labelled_features(std::uint64_t seed) {
  FeatureMatrix f;
  f.values = gaussian(5, 3, seed);
  f.labels = Labels{4, 0, 0, 2, 1};
  return f;
}

}  // namespace

TEST_CASE("feature matrix: a hand-assembled file decodes to known values") {
  TempDir tmp;
  const std::string path = tmp.write("hand.fmat", fmat_2x2_bytes());
  const FeatureMatrix f = read_fmat(path);
  CHECK(f.n() == 2);
  CHECK(f.d() == 2);
  CHECK_FALSE(f.labels.has_value());
  CHECK(f.values(0, 0) == 1.0);
  CHECK(f.values(0, 1) == 2.0);
  CHECK(f.values(1, 0) == 3.0);
  CHECK(f.values(1, 1) == 4.0);
}

TEST_CASE("feature matrix: writer emits the reference bytes") {
  TempDir tmp;
  FeatureMatrix f;
  f.values.resize(2, 2);
  f.values << 1, 2, 3, 4;
  write_fmat(tmp.file("out.fmat"), f);
  CHECK(tmp.slurp("out.fmat") == fmat_2x2_bytes());
}

TEST_CASE("feature matrix: roundtrip with labels") {
  TempDir tmp;
  const FeatureMatrix f = labelled_features(3);
  write_fmat(tmp.file("l.fmat"), f);
  const FeatureMatrix back = read_fmat(tmp.file("l.fmat"));
  REQUIRE(back.labels.has_value());
  CHECK(*back.labels == *f.labels);
  // storage is f32, so roundtrip holds to single precision
  CHECK((back.values - f.values).cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("feature matrix: malformed files name the byte offset") {
  TempDir tmp;
  const std::string good = fmat_2x2_bytes();

  const std::string empty = tmp.write("empty.fmat", "");
  CHECK_THROWS_WITH_AS(read_fmat(empty),
                       doctest::Contains("at byte offset 0"), FormatError);

  const std::string magic = tmp.write("magic.fmat", "FXXX1\n" + good.substr(6));
  CHECK_THROWS_WITH_AS(read_fmat(magic), doctest::Contains("bad magic"), FormatError);

  // cut inside the payload: the reader reports where the f32 read began
  const std::string cut = tmp.write("cut.fmat", good.substr(0, 17));
  CHECK_THROWS_WITH_AS(read_fmat(cut),
                       doctest::Contains("at byte offset 15"), FormatError);

  const std::string extra = tmp.write("extra.fmat", good + "x");
  CHECK_THROWS_WITH_AS(read_fmat(extra),
                       doctest::Contains("unexpected trailing bytes"), FormatError);

  std::string zero_rows = good;
  zero_rows[6] = zero_rows[7] = zero_rows[8] = zero_rows[9] = '\0';
  CHECK_THROWS_WITH_AS(read_fmat(tmp.write("zr.fmat", zero_rows)),
                       doctest::Contains("zero rows"), FormatError);

  std::string bad_flags = good;
  bad_flags[14] = 2;
  CHECK_THROWS_WITH_AS(read_fmat(tmp.write("bf.fmat", bad_flags)),
                       doctest::Contains("unknown flag bits"), FormatError);

  std::string nan_payload = good;
  nan_payload[15] = nan_payload[16] = nan_payload[17] = nan_payload[18] =
      static_cast<char>(0xff);
  CHECK_THROWS_WITH_AS(read_fmat(tmp.write("nan.fmat", nan_payload)),
                       doctest::Contains("non-finite matrix entry"), FormatError);

  CHECK_THROWS_AS(read_fmat(tmp.file("missing.fmat")), IoError);
}

TEST_CASE("projector: roundtrip at single precision, bad frames rejected") {
  TempDir tmp;
  const StiefelPoint u = random_stiefel(6, 2, 44);
  write_fprj(tmp.file("u.fprj"), u);
  const StiefelPoint back = read_fprj(tmp.file("u.fprj"));
  CHECK((back.mat() - u.mat()).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK(back.ortho_residual() <= 1e-6);

  // same byte layout, but the stored factor is nowhere near orthonormal
  std::string bytes = "FPRJ1\n";
  put_u32(bytes, 2);
  put_u32(bytes, 2);
  bytes.push_back('\0');
  for (float v : {1.0f, 2.0f, 3.0f, 4.0f}) put_f32(bytes, v);
  CHECK_THROWS_AS(read_fprj(tmp.write("bad.fprj", bytes)), InvalidInputError);

  // labels are a feature-matrix concept; the flag is rejected here
  std::string flagged = bytes;
  flagged[14] = 1;
  CHECK_THROWS_WITH_AS(read_fprj(tmp.write("fl.fprj", flagged)),
                       doctest::Contains("labels are not allowed"), FormatError);

  CHECK_THROWS_WITH_AS(read_fprj(tmp.write("wrong.fprj", fmat_2x2_bytes())),
                       doctest::Contains("bad magic"), FormatError);
}

TEST_CASE("covariance summary: exact double-precision roundtrip") {
  TempDir tmp;
  const Matrix z = gaussian(40, 5, 17);
  const CovarianceSummary cov = covariance(z);
  write_fcov(tmp.file("c.fcov"), cov);
  const CovarianceSummary back = read_fcov(tmp.file("c.fcov"));
  CHECK((back.sigma.mat() - cov.sigma.mat()).norm() == 0.0);
  CHECK(back.trace == cov.trace);
  CHECK(back.samples == cov.samples);
  CHECK((back.mean - cov.mean).norm() == 0.0);
}

TEST_CASE("covariance summary: stored trace must match the diagonal") {
  TempDir tmp;
  const CovarianceSummary cov = covariance(gaussian(30, 3, 18));
  write_fcov(tmp.file("c.fcov"), cov);
  std::string bytes = tmp.slurp("c.fcov");
  // trace field sits right after the 6-byte magic, u32 dim, and 9 doubles
  const std::size_t trace_at = 6 + 4 + 9 * 8;
  const double wrong = cov.trace + 1.0;
  std::memcpy(bytes.data() + trace_at, &wrong, 8);
  CHECK_THROWS_WITH_AS(read_fcov(tmp.write("bad.fcov", bytes)),
                       doctest::Contains("stored trace disagrees"), FormatError);

  std::string truncated = bytes.substr(0, bytes.size() - 4);
  CHECK_THROWS_WITH_AS(read_fcov(tmp.write("cut.fcov", truncated)),
                       doctest::Contains("truncated"), FormatError);
}

TEST_CASE("linear head: roundtrip and class floor") {
  TempDir tmp;
  LinearHead head{gaussian(3, 4, 19), Vector(3)};
  head.b << 0.25, -1.5, 0.0;
  write_head(tmp.file("h.head"), head);
  const LinearHead back = read_head(tmp.file("h.head"));
  CHECK(back.classes() == 3);
  CHECK(back.dim() == 4);
  CHECK((back.w - head.w).cwiseAbs().maxCoeff() <= 1e-6);
  CHECK((back.b - head.b).cwiseAbs().maxCoeff() <= 1e-6);

  std::string bytes = "FMAT1\n";
  put_u32(bytes, 1);  // a single row: one class
  put_u32(bytes, 2);
  bytes.push_back('\0');
  put_f32(bytes, 1.0f);
  put_f32(bytes, 2.0f);
  put_f32(bytes, 0.5f);  // its bias
  CHECK_THROWS_WITH_AS(read_head(tmp.write("one.head", bytes)),
                       doctest::Contains("at least two classes"), FormatError);
}

TEST_CASE("csv: plain numeric table without a header") {
  TempDir tmp;
  const std::string path = tmp.write("t.csv", "1,2\n3.5,-4e2\n");
  const FeatureMatrix f = read_csv(path);
  CHECK(f.n() == 2);
  CHECK(f.d() == 2);
  CHECK_FALSE(f.labels.has_value());
  CHECK(f.values(1, 0) == 3.5);
  CHECK(f.values(1, 1) == -400.0);
}

TEST_CASE("csv: header auto-detection and forcing") {
  TempDir tmp;
  const std::string with = tmp.write("h.csv", "alpha,beta\n1,2\n");
  CHECK(read_csv(with).n() == 1);

  const std::string numeric = tmp.write("n.csv", "1,2\n3,4\n");
  CHECK(read_csv(numeric, CsvHeader::kYes).n() == 1);
  CHECK(read_csv(numeric, CsvHeader::kNo).n() == 2);
  CHECK_THROWS_WITH_AS(read_csv(with, CsvHeader::kNo),
                       doctest::Contains("line 1"), FormatError);
}

TEST_CASE("csv: label column by name and by index") {
  TempDir tmp;
  const std::string named =
      tmp.write("named.csv", "x,y,label\n1,2,0\n3,4,1\n5,6,0\n");
  const FeatureMatrix by_name = read_csv(named, CsvHeader::kAuto, "label");
  REQUIRE(by_name.labels.has_value());
  CHECK(*by_name.labels == Labels{0, 1, 0});
  CHECK(by_name.d() == 2);
  CHECK(by_name.values(2, 1) == 6.0);

  const std::string bare = tmp.write("bare.csv", "7,0\n8,1\n");
  const FeatureMatrix by_index = read_csv(bare, CsvHeader::kAuto, "1");
  REQUIRE(by_index.labels.has_value());
  CHECK(*by_index.labels == Labels{0, 1});
  CHECK(by_index.values(1, 0) == 8.0);

  CHECK_THROWS_AS(read_csv(named, CsvHeader::kAuto, "nope"), InvalidInputError);

  // pointing the label index at a float column is a format error
  const std::string floats = tmp.write("f.csv", "1.5,2\n2.5,3\n");
  CHECK_THROWS_WITH_AS(read_csv(floats, CsvHeader::kAuto, "0"),
                       doctest::Contains("not a non-negative integer label"),
                       FormatError);
}

TEST_CASE("csv: quoting, escapes, and embedded newlines") {
  TempDir tmp;
  const std::string path = tmp.write(
      "q.csv", "\"the \"\"label\"\"\",\"a,b\"\n3,\"1.5\"\n");
  const FeatureMatrix f = read_csv(path, CsvHeader::kAuto, "the \"label\"");
  REQUIRE(f.labels.has_value());
  CHECK(*f.labels == Labels{3});
  CHECK(f.values(0, 0) == 1.5);

  // a quoted newline in the header shifts the line numbering of later errors
  const std::string multiline =
      tmp.write("m.csv", "\"a\nx\",b\n1,2\n7\n");
  CHECK_THROWS_WITH_AS(read_csv(multiline),
                       doctest::Contains("line 4: expected 2 fields but found 1"),
                       FormatError);
}

TEST_CASE("csv: structural errors") {
  TempDir tmp;
  CHECK_THROWS_WITH_AS(read_csv(tmp.write("e.csv", "")),
                       doctest::Contains("no records"), FormatError);
  CHECK_THROWS_WITH_AS(read_csv(tmp.write("ho.csv", "a,b\n"), CsvHeader::kAuto),
                       doctest::Contains("no data rows"), FormatError);
  CHECK_THROWS_WITH_AS(read_csv(tmp.write("sq.csv", "a\"b,1\n")),
                       doctest::Contains("stray quote"), FormatError);
  CHECK_THROWS_WITH_AS(read_csv(tmp.write("uq.csv", "\"abc\n1,2\n")),
                       doctest::Contains("unterminated quoted field"), FormatError);
  CHECK_THROWS_WITH_AS(read_csv(tmp.write("cr.csv", "1,2\r3,4\n")),
                       doctest::Contains("bare carriage return"), FormatError);
  CHECK_THROWS_WITH_AS(read_csv(tmp.write("inf.csv", "1,2\n1,inf\n")),
                       doctest::Contains("line 2: field 2 is not a finite number"),
                       FormatError);
  CHECK_THROWS_AS(read_csv(tmp.write("lb.csv", "3\n4\n"), CsvHeader::kAuto, "0"),
                  InvalidInputError);

  const std::string crlf = tmp.write("crlf.csv", "1,2\r\n3,4\r\n");
  CHECK(read_csv(crlf).n() == 2);
}

TEST_CASE("csv: negative labels are rejected") {
  TempDir tmp;
  const std::string path = tmp.write("neg.csv", "x,label\n1,-2\n");
  CHECK_THROWS_WITH_AS(read_csv(path, CsvHeader::kAuto, "label"),
                       doctest::Contains("not a non-negative integer label"),
                       FormatError);
}

TEST_CASE("synthetic corpora: shapes, labels, and determinism") {
  SyntheticScenario scenario;
  scenario.d = 16;
  scenario.classes = 5;
  scenario.per_class = 20;
  scenario.forget_classes = {1, 3};
  scenario.top_dim = 6;
  scenario.seed = 9;

  const auto [rm, fg] = synth(scenario);
  CHECK(rm.n() == 3 * 20);
  CHECK(fg.n() == 2 * 20);
  CHECK(rm.d() == 16);
  CHECK(fg.d() == 16);
  REQUIRE(rm.labels.has_value());
  REQUIRE(fg.labels.has_value());
  CHECK((*rm.labels)[0] == 0);
  CHECK((*rm.labels)[20] == 2);
  CHECK((*rm.labels)[40] == 4);
  CHECK((*fg.labels)[0] == 1);
  CHECK((*fg.labels)[20] == 3);

  const auto [rm2, fg2] = synth(scenario);
  CHECK((rm2.values - rm.values).norm() == 0.0);
  CHECK((fg2.values - fg.values).norm() == 0.0);

  scenario.seed = 10;
  const auto [rm3, fg3] = synth(scenario);
  CHECK((rm3.values - rm.values).norm() > 1e-3);
  (void)fg3;
}

TEST_CASE("synthetic corpora: scenario validation") {
  SyntheticScenario s;
  s.forget_classes = {1};
  CHECK_NOTHROW(synth(s));

  SyntheticScenario bad = s;
  bad.forget_classes = {};
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.forget_classes = {6};
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.forget_classes = {1, 1};
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.d = 3;
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.classes = 1;
  bad.forget_classes = {0};
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.top_dim = bad.d;
  CHECK_THROWS_AS(synth(bad), InvalidInputError);  // no room outside the subspace
  bad = s;
  bad.top_dim = 1;
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.noise_scale = 0.0;
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
  bad = s;
  bad.per_class = 0;
  CHECK_THROWS_AS(synth(bad), InvalidInputError);
}

TEST_CASE("exact regime: remaining energy is low-rank, forgetting energy escapes it") {
  SyntheticScenario sc;
  sc.forget_classes = {1, 4};
  for (std::uint64_t seed : {0, 3, 7}) {
    sc.seed = seed;
    const auto [rm, fg] = synth(sc);
    const CovarianceSummary cov_rm = covariance(rm.values);
    CHECK(select_dim(cov_rm, 0.95) == sc.top_dim);
    const SeparabilityReport sep =
        separability_report(rm.values, fg.values, sc.top_dim);
    CHECK(sep.error_ratio >= 3.0);
    CHECK(sep.forget.mean >= 2.0);
    CHECK(sep.remain.mean <= 1.0);
  }
}

TEST_CASE("pretrained regime: both splits share one reconstruction profile") {
  SyntheticScenario sc;
  sc.regime = Regime::kPretrained;
  sc.forget_classes = {1, 4};
  sc.seed = 7;
  const auto [rm, fg] = synth(sc);
  const SeparabilityReport sep =
      separability_report(rm.values, fg.values, sc.top_dim);
  CHECK(sep.error_ratio >= 0.9);
  CHECK(sep.error_ratio <= 1.1);
  const double trace_rm = covariance(rm.values).trace;
  const double trace_fg = covariance(fg.values).trace;
  CHECK(std::abs(trace_rm - trace_fg) <= 0.1 * trace_rm);
}

TEST_CASE("merging covariances reproduces the pooled statistics") {
  const Matrix a = gaussian(30, 4, 60);
  const Matrix b = (gaussian(50, 4, 61).array() + 0.8).matrix();  // shifted mean
  const Matrix c = 2.0 * gaussian(20, 4, 62);

  Matrix all(100, 4);
  all << a, b, c;
  const CovarianceSummary direct = covariance(all);
  const CovarianceSummary merged =
      merge_covariances({covariance(a), covariance(b), covariance(c)});

  CHECK(merged.samples == 100);
  CHECK((merged.mean - direct.mean).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK((merged.sigma.mat() - direct.sigma.mat()).cwiseAbs().maxCoeff() <= 1e-12);
  CHECK(merged.trace == doctest::Approx(direct.trace).epsilon(1e-12));

  const CovarianceSummary one = merge_covariances({covariance(a)});
  CHECK((one.sigma.mat() - covariance(a).sigma.mat()).norm() <= 1e-14);

  CHECK_THROWS_AS(merge_covariances({}), InvalidInputError);
  CHECK_THROWS_AS(merge_covariances({covariance(a), covariance(gaussian(5, 3, 1))}),
                  InvalidInputError);
}

TEST_CASE("file digests are stable and content-sensitive") {
  TempDir tmp;
  CHECK(file_digest(tmp.write("empty", "")) == "cbf29ce484222325");
  CHECK(file_digest(tmp.write("hello", "hello")) == "a430d84680aabd0b");
  CHECK(file_digest(tmp.write("hello2", "hello\n")) == "a9bc80cca21f28b3");
  CHECK(file_digest(tmp.write("again", "hello")) ==
        file_digest(tmp.file("hello")));
  CHECK_THROWS_AS(file_digest(tmp.file("missing")), IoError);
}
