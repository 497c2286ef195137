#include "tailprobe/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include "digest.hpp"
#include "tailprobe/error.hpp"

namespace tailprobe {

namespace {

void require_finite(std::span<const LabeledScore> scores) {
  for (const auto& s : scores) {
    if (!std::isfinite(s.score)) {
      throw Error(ErrorCode::kInvalidArgument, "non-finite score for sample '" + s.sample_id + "'");
    }
  }
}

void require_target(double target_fpr) {
  if (!(target_fpr >= 0.0 && target_fpr < 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "target FPR must lie in [0,1)");
  }
}

std::vector<double> scores_with_label(std::span<const LabeledScore> scores, Label label) {
  std::vector<double> out;
  for (const auto& s : scores) {
    if (s.label == label) out.push_back(s.score);
  }
  return out;
}

}  // namespace

RocCurve roc(std::span<const LabeledScore> scores) {
  require_finite(scores);
  std::vector<LabeledScore> sorted(scores.begin(), scores.end());
  std::sort(sorted.begin(), sorted.end(),
            [](const LabeledScore& a, const LabeledScore& b) { return a.score > b.score; });
  const auto positives = static_cast<std::size_t>(
      std::count_if(sorted.begin(), sorted.end(), [](const auto& s) { return s.label == Label::kAi; }));
  const std::size_t negatives = sorted.size() - positives;
  if (positives == 0 || negatives == 0) {
    throw Error(ErrorCode::kOneClassOnly, "ROC needs both ai and human scores");
  }

  RocCurve curve;
  const double p = static_cast<double>(positives);
  const double n = static_cast<double>(negatives);
  curve.points.push_back({0.0, 0.0, sorted.front().score});

  // Twice the area in units of (1/P)(1/N); integer-valued, so exact.
  double doubled_area = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  for (std::size_t i = 0; i < sorted.size();) {
    const double value = sorted[i].score;
    std::size_t group_tp = 0;
    std::size_t group_fp = 0;
    for (; i < sorted.size() && sorted[i].score == value; ++i) {
      (sorted[i].label == Label::kAi ? group_tp : group_fp)++;
    }
    doubled_area += static_cast<double>(group_fp) * static_cast<double>(2 * tp + group_tp);
    tp += group_tp;
    fp += group_fp;
    const double threshold = i < sorted.size() ? sorted[i].score : -std::numeric_limits<double>::infinity();
    curve.points.push_back({static_cast<double>(fp) / n, static_cast<double>(tp) / p, threshold});
  }
  curve.auroc = doubled_area / (2.0 * p * n);
  return curve;
}

double calibrate_threshold(std::span<const double> human_scores, double target_fpr) {
  if (human_scores.empty()) throw Error(ErrorCode::kEmptyInput, "no human scores to calibrate on");
  require_target(target_fpr);
  std::vector<double> sorted(human_scores.begin(), human_scores.end());
  for (double s : sorted) {
    if (!std::isfinite(s)) throw Error(ErrorCode::kInvalidArgument, "non-finite calibration score");
  }
  std::sort(sorted.begin(), sorted.end());
  const double total = static_cast<double>(sorted.size());
  // Ascending candidates; the fraction strictly above is non-increasing.
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    if (i > 0 && sorted[i] == sorted[i - 1]) continue;
    const auto last_equal = std::upper_bound(sorted.begin(), sorted.end(), sorted[i]);
    const auto above = static_cast<double>(sorted.end() - last_equal);
    if (above / total <= target_fpr) return sorted[i];
  }
  return sorted.back();
}

OperatingPoint tpr_at_fpr(std::span<const LabeledScore> scores, double target_fpr) {
  require_finite(scores);
  require_target(target_fpr);
  const std::vector<double> human = scores_with_label(scores, Label::kHuman);
  const std::vector<double> ai = scores_with_label(scores, Label::kAi);
  if (human.empty() || ai.empty()) throw Error(ErrorCode::kOneClassOnly, "need both ai and human scores");
  OperatingPoint point;
  point.threshold = calibrate_threshold(human, target_fpr);
  const auto detected = std::count_if(ai.begin(), ai.end(), [&](double s) { return s > point.threshold; });
  point.tpr = static_cast<double>(detected) / static_cast<double>(ai.size());
  return point;
}

double required_samples(double kl_divergence) {
  if (!(kl_divergence > 0.0)) throw Error(ErrorCode::kNonPositiveKl, "KL divergence must be positive");
  return 40.0 * std::log(10.0) / kl_divergence;
}

EvalRun evaluate(const Benchmark& benchmark) {
  if (benchmark.backend == nullptr) throw Error(ErrorCode::kInvalidArgument, "benchmark has no backend");
  for (const auto& sample : benchmark.samples) {
    if (!sample.label) {
      throw Error(ErrorCode::kInvalidArgument, "sample '" + sample.id + "' has no label");
    }
  }
  EvalRun run;
  run.results = detect_batch(benchmark.samples, *benchmark.backend, benchmark.config, benchmark.jobs,
                             benchmark.windows);
  run.scores.reserve(run.results.size());
  for (std::size_t i = 0; i < run.results.size(); ++i) {
    run.scores.push_back({run.results[i].score, *benchmark.samples[i].label, benchmark.samples[i].id});
  }
  run.curve = roc(run.scores);
  run.at_target = tpr_at_fpr(run.scores, benchmark.target_fpr);
  const double epsilon = benchmark.config.threshold.value_or(run.at_target.threshold);
  for (auto& result : run.results) apply_threshold(result, epsilon);
  return run;
}

std::string_view to_string(SweepParameter parameter) {
  switch (parameter) {
    case SweepParameter::kGamma: return "gamma";
    case SweepParameter::kK: return "k";
    case SweepParameter::kWeightFn: return "weight_fn";
    case SweepParameter::kN0: return "n0";
    case SweepParameter::kTemperature: return "temperature";
  }
  return "gamma";
}

std::optional<SweepParameter> parse_sweep_parameter(std::string_view text) {
  for (auto p : {SweepParameter::kGamma, SweepParameter::kK, SweepParameter::kWeightFn, SweepParameter::kN0,
                 SweepParameter::kTemperature}) {
    if (to_string(p) == text) return p;
  }
  return std::nullopt;
}

std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t value_index) {
  return base_seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(value_index);
}

namespace {

template <typename T>
T parse_number(std::string_view text, std::string_view what) {
  T value{};
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, value);
  if (ec != std::errc() || ptr != end) {
    throw Error(ErrorCode::kInvalidArgument, "invalid " + std::string(what) + " value '" + std::string(text) + "'");
  }
  return value;
}

}  // namespace

void apply_sweep_value(DetectionConfig& cfg, SweepParameter parameter, std::string_view value) {
  switch (parameter) {
    case SweepParameter::kGamma:
      cfg.gamma = parse_number<double>(value, "gamma");
      break;
    case SweepParameter::kK:
      cfg.k = parse_number<int>(value, "k");
      break;
    case SweepParameter::kWeightFn: {
      auto fn = parse_weight_function(value);
      if (!fn) throw Error(ErrorCode::kInvalidArgument, "unknown weight function '" + std::string(value) + "'");
      cfg.ngram.weight = *fn;
      break;
    }
    case SweepParameter::kN0:
      cfg.ngram.n0 = parse_number<int>(value, "n0");
      break;
    case SweepParameter::kTemperature:
      cfg.temperature = parse_number<double>(value, "temperature");
      break;
  }
  cfg.validate();
}

SweepReport sweep(SweepParameter parameter, std::span<const std::string> values, const Benchmark& benchmark) {
  if (values.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep needs at least one value");
  if (benchmark.backend == nullptr) throw Error(ErrorCode::kInvalidArgument, "benchmark has no backend");
  if (parameter == SweepParameter::kTemperature && !benchmark.backend->capabilities().local) {
    throw Error(ErrorCode::kCapability, "temperature sweeps run only against the local backend");
  }
  SweepReport report;
  report.parameter = parameter;
  report.target_fpr = benchmark.target_fpr;
  report.fixed_config = benchmark.config;

  for (std::size_t i = 0; i < values.size(); ++i) {
    Benchmark run = benchmark;
    apply_sweep_value(run.config, parameter, values[i]);
    run.config.seed = sweep_seed(benchmark.config.seed, i);
    const EvalRun result = evaluate(run);
    report.rows.push_back({values[i], result.curve.auroc, result.at_target.tpr, result.at_target.threshold,
                           run.config.seed});
  }
  return report;
}

std::string format_table(const SweepReport& report) {
  const std::string fpr_label = "tpr@" + detail::format_double(report.target_fpr * 100.0) + "%fpr";
  std::vector<std::vector<std::string>> cells;
  cells.push_back({std::string(to_string(report.parameter)), "auroc", fpr_label, "threshold"});
  auto fixed = [](double v, int precision) {
    std::ostringstream out;
    out << std::fixed << std::setprecision(precision) << v;
    return out.str();
  };
  for (const auto& row : report.rows) {
    cells.push_back({row.value, fixed(row.auroc, 4), fixed(row.tpr_at_target_fpr, 4), fixed(row.threshold, 6)});
  }
  std::vector<std::size_t> widths(cells.front().size(), 0);
  for (const auto& line : cells) {
    for (std::size_t c = 0; c < line.size(); ++c) widths[c] = std::max(widths[c], line[c].size());
  }
  std::ostringstream out;
  for (std::size_t r = 0; r < cells.size(); ++r) {
    for (std::size_t c = 0; c < cells[r].size(); ++c) {
      if (c > 0) out << "  ";
      if (c == 0) {
        out << std::left << std::setw(static_cast<int>(widths[c])) << cells[r][c];
      } else {
        out << std::right << std::setw(static_cast<int>(widths[c])) << cells[r][c];
      }
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (std::size_t w : widths) total += w;
      out << std::string(total + 2 * (widths.size() - 1), '-') << '\n';
    }
  }
  return out.str();
}

}  // namespace tailprobe
