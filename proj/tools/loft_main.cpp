#include "loft/analysis.hpp"
#include "loft/dataio.hpp"
#include "loft/evaluator.hpp"
#include "loft/optimizer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <Eigen/Core>

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

using json = nlohmann::ordered_json;
using namespace loft;

constexpr int kExitUsage = 2;
constexpr int kExitIo = 1;
constexpr int kExitNumerical = 3;

double now_seconds() {
  using Clock = std::chrono::steady_clock;
  static const auto start = Clock::now();
  return std::chrono::duration<double>(Clock::now() - start).count();
}

bool file_has_magic(const std::string& path, const char* magic) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path + ": cannot open for reading");
  char head[6] = {};
  in.read(head, 6);
  return in.gcount() == 6 && std::memcmp(head, magic, 6) == 0;
}

json file_entry(const std::string& path) {
  return json{{"path", path}, {"digest", file_digest(path)}};
}

json objective_json(const ObjectiveValue& v) {
  json out{{"j", v.total}, {"j_fg", v.j_fg}, {"j_rm", v.j_rm}};
  if (v.j_fgp) out["j_fgp"] = *v.j_fgp;
  return out;
}

void write_json(const std::string& path, const json& j) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path + ": cannot open for writing");
  out << j.dump(2) << "\n";
  if (!out) throw IoError(path + ": write failed");
}

// --- cov ----------------------------------------------------------------

struct CovArgs {
  std::string features;
  std::vector<std::string> merge;
  std::string out;
  std::string center = "on";
  std::string csv_header = "auto";
  std::string label_column;
};

int run_cov(const CovArgs& args) {
  CovarianceSummary cov = [&] {
    if (!args.merge.empty()) {
      std::vector<CovarianceSummary> parts;
      parts.reserve(args.merge.size());
      for (const auto& path : args.merge) parts.push_back(read_fcov(path));
      return merge_covariances(parts);
    }
    FeatureMatrix features;
    if (file_has_magic(args.features, "FMAT1\n")) {
      features = read_fmat(args.features);
    } else {
      const CsvHeader header = args.csv_header == "yes"  ? CsvHeader::kYes
                               : args.csv_header == "no" ? CsvHeader::kNo
                                                         : CsvHeader::kAuto;
      features = read_csv(args.features, header,
                          args.label_column.empty()
                              ? std::nullopt
                              : std::optional<std::string>(args.label_column));
    }
    return covariance(features.values, args.center == "on");
  }();

  write_fcov(args.out, cov);
  std::printf("n=%llu d=%lld trace=%.17g\n",
              static_cast<unsigned long long>(cov.samples),
              static_cast<long long>(cov.dim()), cov.trace);
  return 0;
}

// --- fit ----------------------------------------------------------------

struct FitArgs {
  std::string cov_rm;
  std::string cov_fg;
  std::string cov_fgp;
  std::string out;
  std::string report;
  int dim = 0;
  double variance_fraction = 0.0;
  OptimizerConfig config;
  std::string schedule = "constant";
  std::string init = "pca";
  std::string ablate = "none";
};

int run_fit(const FitArgs& args) {
  const double t0 = now_seconds();
  OptimizerConfig config = args.config;
  config.schedule = args.schedule == "cosine" ? Schedule::kCosine : Schedule::kConstant;
  config.init = args.init == "random" ? InitKind::kRandom : InitKind::kPca;
  if (args.ablate == "rm") config.terms = TermSelection::kForgetOnly;
  if (args.ablate == "fg") config.terms = TermSelection::kRemainOnly;

  const CovarianceSummary cov_rm = read_fcov(args.cov_rm);
  const CovarianceSummary cov_fg = read_fcov(args.cov_fg);
  std::optional<CovarianceSummary> cov_fgp;
  if (!args.cov_fgp.empty()) cov_fgp = read_fcov(args.cov_fgp);

  ObjectiveInputs inputs(
      cov_fg.sigma, cov_rm.sigma,
      cov_fgp ? std::optional<SymmetricMatrix>(cov_fgp->sigma) : std::nullopt);

  Index s;
  if (args.dim > 0 && args.variance_fraction > 0.0) {
    std::cerr << "warning: both --dim and --variance-fraction given; using --dim\n";
    s = args.dim;
  } else if (args.dim > 0) {
    s = args.dim;
  } else {
    const double fraction = args.variance_fraction > 0.0 ? args.variance_fraction : 0.95;
    s = select_dim(cov_rm, fraction);
  }

  FitResult result = [&] {
    try {
      return fit(inputs, s, config);
    } catch (const FitAbortedError& e) {
      for (const auto& rec : e.trace.steps)
        std::fprintf(stdout, "step %4d  J=%.9e  J_fg=%.9e  J_rm=%.9e  grad=%.3e\n",
                     rec.step, rec.value.total, rec.value.j_fg, rec.value.j_rm,
                     rec.grad_norm);
      throw;
    }
  }();

  for (const auto& rec : result.trace.steps) {
    if (rec.value.j_fgp)
      std::fprintf(stdout,
                   "step %4d  J=%.9e  J_fg=%.9e  J_rm=%.9e  J_fgp=%.9e  grad=%.3e  lr=%.4g\n",
                   rec.step, rec.value.total, rec.value.j_fg, rec.value.j_rm,
                   *rec.value.j_fgp, rec.grad_norm, schedule_lr(config, rec.step));
    else
      std::fprintf(stdout, "step %4d  J=%.9e  J_fg=%.9e  J_rm=%.9e  grad=%.3e  lr=%.4g\n",
                   rec.step, rec.value.total, rec.value.j_fg, rec.value.j_rm,
                   rec.grad_norm, schedule_lr(config, rec.step));
  }
  std::fprintf(stdout, "fit: d=%lld s=%lld params=%lld best_step=%d J=%.9e\n",
               static_cast<long long>(inputs.dim()), static_cast<long long>(s),
               static_cast<long long>(inputs.dim() * s), result.best_step,
               result.best_value.total);

  write_fprj(args.out, result.point);

  json report;
  report["schema"] = 1;
  report["command"] = "fit";
  report["dim"] = inputs.dim();
  report["proj_dim"] = s;
  report["param_count"] = inputs.dim() * s;
  report["config"] = {{"steps", config.steps},
                      {"lr", config.lr},
                      {"weight_decay", config.weight_decay},
                      {"beta1", config.beta1},
                      {"beta2", config.beta2},
                      {"epsilon", config.epsilon},
                      {"schedule", args.schedule},
                      {"init", args.init},
                      {"seed", config.seed},
                      {"ablate", args.ablate}};
  report["inputs"] = {{"cov_rm", file_entry(args.cov_rm)},
                      {"cov_fg", file_entry(args.cov_fg)}};
  if (!args.cov_fgp.empty()) report["inputs"]["cov_fgp"] = file_entry(args.cov_fgp);
  report["objective"] = {
      {"initial", objective_json(result.initial_value)},
      {"best", objective_json(result.best_value)},
      {"best_step", result.best_step},
      {"final", objective_json(result.trace.steps.empty()
                                   ? result.initial_value
                                   : result.trace.steps.back().value)}};
  json trace = json::array();
  for (const auto& rec : result.trace.steps) {
    json entry = objective_json(rec.value);
    entry["step"] = rec.step;
    entry["grad_norm"] = rec.grad_norm;
    entry["ortho_residual"] = rec.ortho_residual;
    trace.push_back(std::move(entry));
  }
  report["trace"] = std::move(trace);
  report["output"] = {{"projector", file_entry(args.out)}};
  report["wall_seconds"] = now_seconds() - t0;

  const std::string report_path = args.report.empty() ? args.out + ".json" : args.report;
  write_json(report_path, report);
  return 0;
}

// --- analyze --------------------------------------------------------------

struct AnalyzeArgs {
  std::string cov;
  std::string features;
  std::string projector;
  std::string remain;
  std::string forget;
  int top_k = 12;
  int dim = 0;
  double variance_fraction = 0.95;
  std::string json_out;
  std::string csv_out;
};

int run_analyze(const AnalyzeArgs& args) {
  json out;
  out["schema"] = 1;
  out["command"] = "analyze";

  const bool cov_mode = !args.cov.empty();
  const bool recon_mode = !args.features.empty() || !args.projector.empty();
  const bool split_mode = !args.remain.empty() || !args.forget.empty();
  if (cov_mode + recon_mode + split_mode != 1)
    throw CLI::ValidationError(
        "analyze",
        "pick exactly one mode: --cov, --features with --projector, or --remain with --forget");

  if (cov_mode) {
    const CovarianceSummary cov = read_fcov(args.cov);
    const SpectrumReport report = spectrum(cov, args.top_k);
    const Index suggested = select_dim(cov, args.variance_fraction);
    std::printf("d=%lld trace=%.9g suggested_s(%.2f)=%lld\n",
                static_cast<long long>(cov.dim()), report.trace,
                args.variance_fraction, static_cast<long long>(suggested));
    for (Index i = 0; i < report.normalized.size(); ++i)
      std::printf("lambda[%2lld]/lambda[0]=%.6f  cumulative=%.6f\n",
                  static_cast<long long>(i + 1), report.normalized(i),
                  report.cumulative(i));
    out["input"] = file_entry(args.cov);
    out["trace"] = report.trace;
    out["normalized"] = std::vector<double>(
        report.normalized.begin(), report.normalized.end());
    out["cumulative"] = std::vector<double>(
        report.cumulative.begin(), report.cumulative.end());
    out["suggested_s"] = suggested;
    out["variance_fraction"] = args.variance_fraction;
  } else if (recon_mode) {
    if (args.features.empty() || args.projector.empty())
      throw CLI::ValidationError("analyze",
                                 "reconstruction mode needs --features and --projector");
    const FeatureMatrix features = read_fmat(args.features);
    const StiefelPoint u = read_fprj(args.projector);
    const Vector mean = features.values.colwise().mean().transpose();
    const ReconstructionReport report =
        reconstruction_errors(u, features.values, mean);
    std::printf("n=%lld d=%lld s=%lld mean_e=%.9g median_e=%.9g max_e=%.9g\n",
                static_cast<long long>(features.n()),
                static_cast<long long>(features.d()), static_cast<long long>(u.s()),
                report.mean, report.median, report.max);
    out["features"] = file_entry(args.features);
    out["projector"] = file_entry(args.projector);
    out["reconstruction"] = {{"mean", report.mean},
                             {"median", report.median},
                             {"max", report.max},
                             {"n", report.errors.size()}};
    if (!args.csv_out.empty()) {
      std::ofstream csv(args.csv_out, std::ios::trunc);
      if (!csv) throw IoError(args.csv_out + ": cannot open for writing");
      csv << "index,error\n";
      for (Index i = 0; i < report.errors.size(); ++i)
        csv << i << "," << std::setprecision(17) << report.errors(i) << "\n";
      if (!csv) throw IoError(args.csv_out + ": write failed");
    }
  } else {
    if (args.remain.empty() || args.forget.empty())
      throw CLI::ValidationError("analyze",
                                 "separability mode needs --remain and --forget");
    const FeatureMatrix remain = read_fmat(args.remain);
    const FeatureMatrix forget = read_fmat(args.forget);
    Index s = args.dim;
    if (s <= 0)
      s = select_dim(covariance(remain.values, true), args.variance_fraction);
    const SeparabilityReport report =
        separability_report(remain.values, forget.values, s);
    std::printf(
        "s=%lld remain_mean_e=%.9g forget_mean_e=%.9g ratio=%.6g forget_projected_mean=%.9g\n",
        static_cast<long long>(report.s), report.remain.mean, report.forget.mean,
        report.error_ratio, report.forget_projected_mean);
    out["remain"] = file_entry(args.remain);
    out["forget"] = file_entry(args.forget);
    out["s"] = report.s;
    out["remain_reconstruction"] = {{"mean", report.remain.mean},
                                    {"median", report.remain.median},
                                    {"max", report.remain.max}};
    out["forget_reconstruction"] = {{"mean", report.forget.mean},
                                    {"median", report.forget.median},
                                    {"max", report.forget.max}};
    out["forget_projected"] = {{"mean", report.forget_projected_mean},
                               {"max", report.forget_projected_max}};
    out["error_ratio"] = report.error_ratio;
  }

  if (!args.json_out.empty()) write_json(args.json_out, out);
  return 0;
}

// --- eval -----------------------------------------------------------------

struct EvalArgs {
  std::string head;
  std::string projector;
  std::string rm_train;
  std::string fg_train;
  std::string rm_test;
  std::string fg_test;
  std::string calib_member;
  std::string calib_nonmember;
  std::string reference;
  std::string json_out;
};

FeatureMatrix read_labelled(const std::string& path, const char* what) {
  FeatureMatrix features = read_fmat(path);
  if (!features.labels)
    throw InvalidInputError(path + std::string(": ") + what +
                            " requires labels in the feature file");
  return features;
}

int run_eval(const EvalArgs& args) {
  const double t0 = now_seconds();
  const LinearHead head = read_head(args.head);
  std::optional<StiefelPoint> projector;
  if (!args.projector.empty()) projector = read_fprj(args.projector);

  const FeatureMatrix rm_train = read_labelled(args.rm_train, "eval");
  const FeatureMatrix fg_train = read_labelled(args.fg_train, "eval");
  const FeatureMatrix rm_test = read_labelled(args.rm_test, "eval");
  const FeatureMatrix fg_test = read_labelled(args.fg_test, "eval");

  MetricsTable table;
  table.acc_rm_train = accuracy(head, rm_train.values, *rm_train.labels, projector);
  table.acc_fg_train = accuracy(head, fg_train.values, *fg_train.labels, projector);
  table.acc_rm_test = accuracy(head, rm_test.values, *rm_test.labels, projector);
  table.acc_fg_test = accuracy(head, fg_test.values, *fg_test.labels, projector);

  std::optional<MiaResult> mia;
  if (!args.calib_member.empty() || !args.calib_nonmember.empty()) {
    if (args.calib_member.empty() || args.calib_nonmember.empty())
      throw CLI::ValidationError("eval",
                                 "--calib-member and --calib-nonmember go together");
    const FeatureMatrix member = read_fmat(args.calib_member);
    const FeatureMatrix nonmember = read_fmat(args.calib_nonmember);
    mia = mia_score(head, fg_train.values, member.values, nonmember.values, projector);
    table.mia = mia->score;
  }

  std::printf("%-12s %10s %10s %10s %10s %10s\n", "", "Acc_rm_tr", "Acc_fg_tr",
              "Acc_rm_te", "Acc_fg_te", "MIA");
  if (table.mia)
    std::printf("%-12s %10.2f %10.2f %10.2f %10.2f %10.2f\n", "candidate",
                table.acc_rm_train, table.acc_fg_train, table.acc_rm_test,
                table.acc_fg_test, *table.mia);
  else
    std::printf("%-12s %10.2f %10.2f %10.2f %10.2f %10s\n", "candidate",
                table.acc_rm_train, table.acc_fg_train, table.acc_rm_test,
                table.acc_fg_test, "-");

  json out;
  out["schema"] = 1;
  out["command"] = "eval";
  out["metrics"] = {{"acc_rm_train", table.acc_rm_train},
                    {"acc_fg_train", table.acc_fg_train},
                    {"acc_rm_test", table.acc_rm_test},
                    {"acc_fg_test", table.acc_fg_test}};
  if (table.mia) {
    out["metrics"]["mia"] = *table.mia;
    out["mia_threshold"] = mia->threshold;
    out["mia_calib_accuracy"] = mia->calib_accuracy;
  }

  if (!args.reference.empty()) {
    std::ifstream in(args.reference);
    if (!in) throw IoError(args.reference + ": cannot open for reading");
    json ref_json;
    try {
      in >> ref_json;
    } catch (const json::exception& e) {
      throw FormatError(args.reference + ": " + e.what());
    }
    if (!ref_json.contains("metrics"))
      throw FormatError(args.reference + ": missing 'metrics' object");
    const json& m = ref_json["metrics"];
    MetricsTable reference;
    try {
      reference.acc_rm_train = m.at("acc_rm_train").get<double>();
      reference.acc_fg_train = m.at("acc_fg_train").get<double>();
      reference.acc_rm_test = m.at("acc_rm_test").get<double>();
      reference.acc_fg_test = m.at("acc_fg_test").get<double>();
      if (m.contains("mia")) reference.mia = m.at("mia").get<double>();
    } catch (const json::exception& e) {
      throw FormatError(args.reference + ": " + e.what());
    }
    if (table.mia)
      std::printf("%-12s %10.2f %10.2f %10.2f %10.2f %10.2f\n", "reference",
                  reference.acc_rm_train, reference.acc_fg_train,
                  reference.acc_rm_test, reference.acc_fg_test,
                  reference.mia ? *reference.mia : 0.0);
    const double gap = avg_gap(table, reference);
    std::printf("avg_gap=%.6f\n", gap);
    out["reference"] = file_entry(args.reference);
    out["avg_gap"] = gap;
  }

  out["inputs"] = {{"head", file_entry(args.head)},
                   {"rm_train", file_entry(args.rm_train)},
                   {"fg_train", file_entry(args.fg_train)},
                   {"rm_test", file_entry(args.rm_test)},
                   {"fg_test", file_entry(args.fg_test)}};
  if (!args.projector.empty()) out["inputs"]["projector"] = file_entry(args.projector);
  if (!args.calib_member.empty()) {
    out["inputs"]["calib_member"] = file_entry(args.calib_member);
    out["inputs"]["calib_nonmember"] = file_entry(args.calib_nonmember);
  }
  out["wall_seconds"] = now_seconds() - t0;
  if (!args.json_out.empty()) write_json(args.json_out, out);
  return 0;
}

// --- absorb -----------------------------------------------------------------

struct AbsorbArgs {
  std::string head;
  std::string projector;
  std::string out;
};

int run_absorb(const AbsorbArgs& args) {
  const LinearHead head = read_head(args.head);
  const StiefelPoint u = read_fprj(args.projector);
  const LinearHead folded = absorb(head, u);
  write_head(args.out, folded);
  std::printf("absorbed: classes=%lld d=%lld s=%lld -> %s\n",
              static_cast<long long>(head.classes()),
              static_cast<long long>(head.dim()), static_cast<long long>(u.s()),
              args.out.c_str());
  return 0;
}

// --- synth --------------------------------------------------------------

struct SynthArgs {
  std::string regime = "exact";
  int d = 32;
  int classes = 6;
  int per_class = 300;
  std::string forget = "4,5";
  std::uint64_t seed = 0;
  int top_dim = 8;
  double noise_scale = 1.0;
  std::string out_rm;
  std::string out_fg;
};

int run_synth(const SynthArgs& args) {
  SyntheticScenario scenario;
  scenario.regime = args.regime == "pretrained" ? Regime::kPretrained : Regime::kExact;
  scenario.d = args.d;
  scenario.classes = args.classes;
  scenario.per_class = args.per_class;
  scenario.seed = args.seed;
  scenario.top_dim = args.top_dim;
  scenario.noise_scale = args.noise_scale;

  std::stringstream list(args.forget);
  std::string token;
  while (std::getline(list, token, ',')) {
    if (token.empty()) continue;
    try {
      scenario.forget_classes.push_back(std::stoi(token));
    } catch (const std::exception&) {
      throw InvalidInputError("synth: bad class id '" + token + "' in --forget");
    }
  }

  const auto [rm, fg] = synth(scenario);
  write_fmat(args.out_rm, rm);
  write_fmat(args.out_fg, fg);
  std::printf("remain: n=%lld d=%lld -> %s\nforget: n=%lld d=%lld -> %s\n",
              static_cast<long long>(rm.n()), static_cast<long long>(rm.d()),
              args.out_rm.c_str(), static_cast<long long>(fg.n()),
              static_cast<long long>(fg.d()), args.out_fg.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  int threads = 1;
  if (const char* env = std::getenv("LOFT_THREADS")) {
    char* end = nullptr;
    const long parsed = std::strtol(env, &end, 10);
    if (end && *end == '\0' && parsed >= 1) threads = static_cast<int>(parsed);
  }
  Eigen::setNbThreads(threads);

  CLI::App app{
      "loft: projection-based class forgetting for frozen linear-readout models"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "loft 1.0.0");
  app.footer("Set LOFT_THREADS to change the dense-algebra thread count (default 1).");

  CovArgs cov_args;
  auto* cov = app.add_subcommand("cov", "Estimate a feature covariance (FCOV output)");
  auto* cov_features = cov->add_option("--features", cov_args.features,
                                       "FMAT or CSV feature file");
  auto* cov_merge = cov->add_option("--merge", cov_args.merge,
                                    "FCOV files to pool (sample-count weighted)");
  cov->add_option("--out", cov_args.out, "output FCOV path")->required();
  cov->add_option("--center", cov_args.center, "subtract the sample mean (on|off)")
      ->check(CLI::IsMember({"on", "off"}))
      ->capture_default_str();
  cov->add_option("--csv-header", cov_args.csv_header,
                  "CSV header handling (auto|yes|no)")
      ->check(CLI::IsMember({"auto", "yes", "no"}))
      ->capture_default_str();
  cov->add_option("--label-column", cov_args.label_column,
                  "CSV column (name or 0-based index) holding labels to drop");
  cov_features->excludes(cov_merge);
  cov_merge->excludes(cov_features);

  FitArgs fit_args;
  auto* fitcmd = app.add_subcommand("fit", "Fit a projector to covariance inputs");
  fitcmd->add_option("--cov-rm", fit_args.cov_rm, "remaining-split FCOV")->required();
  fitcmd->add_option("--cov-fg", fit_args.cov_fg, "forgetting-split FCOV")->required();
  fitcmd->add_option("--cov-fgp", fit_args.cov_fgp,
                     "pooled previously-forgotten FCOV (continual rounds)");
  fitcmd->add_option("--out", fit_args.out, "output FPRJ path")->required();
  fitcmd->add_option("--report", fit_args.report,
                     "JSON report path (default: <out>.json)");
  fitcmd->add_option("--dim", fit_args.dim, "projection dimension s")
      ->check(CLI::PositiveNumber);
  fitcmd->add_option("--variance-fraction", fit_args.variance_fraction,
                     "pick s by explained variance of the remaining covariance "
                     "(default 0.95)")
      ->check(CLI::Range(1e-12, 1.0));
  fitcmd->add_option("--steps", fit_args.config.steps, "optimizer steps")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fitcmd->add_option("--lr", fit_args.config.lr, "learning rate")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  fitcmd->add_option("--wd", fit_args.config.weight_decay, "weight decay")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  fitcmd->add_option("--beta1", fit_args.config.beta1, "Adam beta1")
      ->capture_default_str();
  fitcmd->add_option("--beta2", fit_args.config.beta2, "Adam beta2")
      ->capture_default_str();
  fitcmd->add_option("--eps", fit_args.config.epsilon, "Adam epsilon")
      ->capture_default_str();
  fitcmd->add_option("--schedule", fit_args.schedule, "lr schedule (constant|cosine)")
      ->check(CLI::IsMember({"constant", "cosine"}))
      ->capture_default_str();
  fitcmd->add_option("--init", fit_args.init, "initialization (pca|random)")
      ->check(CLI::IsMember({"pca", "random"}))
      ->capture_default_str();
  fitcmd->add_option("--seed", fit_args.config.seed, "seed for random init")
      ->capture_default_str();
  fitcmd->add_option("--ablate", fit_args.ablate,
                     "drop one objective term (rm|fg|none)")
      ->check(CLI::IsMember({"none", "rm", "fg"}))
      ->capture_default_str();

  AnalyzeArgs analyze_args;
  auto* analyze = app.add_subcommand(
      "analyze", "Spectrum, reconstruction, or split-separability reports");
  analyze->add_option("--cov", analyze_args.cov, "FCOV for a spectrum report");
  analyze->add_option("--top-k", analyze_args.top_k, "spectrum entries to print")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  analyze->add_option("--features", analyze_args.features,
                      "FMAT for a reconstruction report");
  analyze->add_option("--projector", analyze_args.projector, "FPRJ projector");
  analyze->add_option("--remain", analyze_args.remain,
                      "remaining-split FMAT for a separability report");
  analyze->add_option("--forget", analyze_args.forget, "forgetting-split FMAT");
  analyze->add_option("--dim", analyze_args.dim, "subspace dimension s")
      ->check(CLI::PositiveNumber);
  analyze->add_option("--variance-fraction", analyze_args.variance_fraction,
                      "explained-variance fraction when s is not given")
      ->check(CLI::Range(1e-12, 1.0))
      ->capture_default_str();
  analyze->add_option("--json", analyze_args.json_out, "JSON report path");
  analyze->add_option("--csv", analyze_args.csv_out,
                      "per-sample reconstruction errors (CSV)");

  EvalArgs eval_args;
  auto* evalcmd = app.add_subcommand("eval", "Accuracy/attack table for a head");
  evalcmd->add_option("--head", eval_args.head, "head file")->required();
  evalcmd->add_option("--projector", eval_args.projector,
                      "FPRJ projector (omit for the raw head)");
  evalcmd->add_option("--rm-train", eval_args.rm_train, "labelled FMAT")->required();
  evalcmd->add_option("--fg-train", eval_args.fg_train, "labelled FMAT")->required();
  evalcmd->add_option("--rm-test", eval_args.rm_test, "labelled FMAT")->required();
  evalcmd->add_option("--fg-test", eval_args.fg_test, "labelled FMAT")->required();
  evalcmd->add_option("--calib-member", eval_args.calib_member,
                      "members for attack calibration (FMAT)");
  evalcmd->add_option("--calib-nonmember", eval_args.calib_nonmember,
                      "nonmembers for attack calibration (FMAT)");
  evalcmd->add_option("--reference", eval_args.reference,
                      "reference eval JSON for the average-gap row");
  evalcmd->add_option("--json", eval_args.json_out, "JSON report path");

  AbsorbArgs absorb_args;
  auto* absorbcmd =
      app.add_subcommand("absorb", "Fold a projector into a head (W <- W U U^T)");
  absorbcmd->add_option("--head", absorb_args.head, "head file")->required();
  absorbcmd->add_option("--projector", absorb_args.projector, "FPRJ projector")
      ->required();
  absorbcmd->add_option("--out", absorb_args.out, "output head path")->required();

  SynthArgs synth_args;
  auto* synthcmd =
      app.add_subcommand("synth", "Write synthetic remaining/forgetting corpora");
  synthcmd->add_option("--regime", synth_args.regime, "exact|pretrained")
      ->check(CLI::IsMember({"exact", "pretrained"}))
      ->capture_default_str();
  synthcmd->add_option("--d", synth_args.d, "feature dimension")
      ->capture_default_str();
  synthcmd->add_option("--classes", synth_args.classes, "class count")
      ->capture_default_str();
  synthcmd->add_option("--per-class", synth_args.per_class, "samples per class")
      ->capture_default_str();
  synthcmd->add_option("--forget", synth_args.forget, "comma list of class ids")
      ->capture_default_str();
  synthcmd->add_option("--seed", synth_args.seed, "generator seed")
      ->capture_default_str();
  synthcmd->add_option("--top-dim", synth_args.top_dim, "principal-subspace size")
      ->capture_default_str();
  synthcmd->add_option("--noise-scale", synth_args.noise_scale, "noise multiplier")
      ->capture_default_str();
  synthcmd->add_option("--out-rm", synth_args.out_rm, "remaining-split FMAT path")
      ->required();
  synthcmd->add_option("--out-fg", synth_args.out_fg, "forgetting-split FMAT path")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (cov->parsed()) {
      if (cov_args.features.empty() && cov_args.merge.empty())
        throw CLI::ValidationError("cov", "one of --features or --merge is required");
      return run_cov(cov_args);
    }
    if (fitcmd->parsed()) return run_fit(fit_args);
    if (analyze->parsed()) return run_analyze(analyze_args);
    if (evalcmd->parsed()) return run_eval(eval_args);
    if (absorbcmd->parsed()) return run_absorb(absorb_args);
    if (synthcmd->parsed()) return run_synth(synth_args);
    return kExitUsage;
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericalFailureError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateDirectionError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const DegenerateCovarianceError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
