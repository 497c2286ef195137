#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "tailprobe/pipeline.hpp"
#include "tailprobe/text.hpp"

namespace tailprobe {

struct LabeledScore {
  double score = 0.0;
  Label label = Label::kHuman;
  std::string sample_id;
};

struct RocPoint {
  double fpr = 0.0;
  double tpr = 0.0;
  // Samples scoring strictly above the threshold are called ai. The first
  // point uses the top score, the last one -inf.
  double threshold = 0.0;
};

struct RocCurve {
  std::vector<RocPoint> points;  // threshold descending, from (0,0) to (1,1)
  double auroc = 0.5;
};

/// Threshold sweep over distinct scores with trapezoidal AUROC, equal to the
/// Mann-Whitney statistic with ties counted one half. Throws kOneClassOnly.
RocCurve roc(std::span<const LabeledScore> scores);

struct OperatingPoint {
  double tpr = 0.0;
  double threshold = 0.0;
};

/// Smallest threshold whose human false-positive fraction (strictly above) is
/// <= target_fpr, and the ai fraction strictly above it.
OperatingPoint tpr_at_fpr(std::span<const LabeledScore> scores, double target_fpr);

/// The same threshold rule over human scores alone. Throws kEmptyInput.
double calibrate_threshold(std::span<const double> human_scores, double target_fpr);

/// Samples needed for TPR > 1 - 1e-40 at low FPR given KL divergence D in nats:
/// 40 ln(10) / D. Throws kNonPositiveKl.
double required_samples(double kl_divergence);

/// A seeded labeled corpus and the detector configuration to run on it.
struct Benchmark {
  std::vector<TextSample> samples;
  Backend* backend = nullptr;
  DetectionConfig config;
  double target_fpr = 0.01;
  std::size_t jobs = 1;
  std::size_t windows = 1;
};

struct EvalRun {
  std::vector<DetectionResult> results;
  std::vector<LabeledScore> scores;
  RocCurve curve;
  OperatingPoint at_target;
};

/// Runs detection on every labeled sample and computes the metrics. Verdicts
/// use config.threshold when set, else the threshold calibrated on the human
/// scores at target_fpr.
EvalRun evaluate(const Benchmark& benchmark);

enum class SweepParameter { kGamma, kK, kWeightFn, kN0, kTemperature };

std::string_view to_string(SweepParameter parameter);
std::optional<SweepParameter> parse_sweep_parameter(std::string_view text);

struct SweepRow {
  std::string value;
  double auroc = 0.0;
  double tpr_at_target_fpr = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;
};

struct SweepReport {
  SweepParameter parameter = SweepParameter::kGamma;
  double target_fpr = 0.01;
  DetectionConfig fixed_config;
  std::vector<SweepRow> rows;
};

/// Seed for value `value_index` of a sweep; index 0 keeps the base seed.
std::uint64_t sweep_seed(std::uint64_t base_seed, std::size_t value_index);

/// Applies one sweep value (textual: "0.5", "10", "n_log_n") to a config.
void apply_sweep_value(DetectionConfig& cfg, SweepParameter parameter, std::string_view value);

/// Reruns the benchmark once per value, everything else fixed.
SweepReport sweep(SweepParameter parameter, std::span<const std::string> values,
                  const Benchmark& benchmark);

/// Aligned plain-text rendering.
std::string format_table(const SweepReport& report);

}  // namespace tailprobe
