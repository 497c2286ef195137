// Acceptance suite: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "oracles.hpp"
#include "temp_dir.hpp"
#include "tailprobe/eval.hpp"
#include "tailprobe/markov.hpp"
#include "tailprobe/pipeline.hpp"
#include "tailprobe/scoring.hpp"
#include "tailprobe/synth.hpp"

namespace {

using namespace tailprobe;
namespace fs = std::filesystem;

struct Outcome {
  bool pass = false;
  std::string detail;
};

constexpr WeightFunction kAllWeights[] = {WeightFunction::kLogN,     WeightFunction::kN,
                                          WeightFunction::kNLogN,    WeightFunction::kNLog2N,
                                          WeightFunction::kNSquared, WeightFunction::kExpN};

std::string fmt(double v, int precision = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", precision, v);
  return buf;
}

// Shared seeded benchmark and the generator trained on corpus A.
struct Fixture {
  SynthConfig cfg;
  SynthBenchmark bench;
  std::shared_ptr<const MarkovModel> model_a;
  std::shared_ptr<const MarkovModel> model_b;

  Fixture() : bench(build_synth_benchmark(cfg)) {
    model_a = train_markov(bench.corpus_a, cfg.order, cfg.alpha);
    model_b = train_markov(bench.corpus_b, cfg.order, cfg.alpha);
  }

  std::span<const TextSample> human() const { return std::span(bench.samples).subspan(cfg.ai_samples); }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

double auroc_with(const DetectionConfig& cfg) {
  MarkovBackend backend(fixture().model_a);
  Benchmark b;
  b.samples = fixture().bench.samples;
  b.backend = &backend;
  b.config = cfg;
  return evaluate(b).curve.auroc;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Outcome bscore_oracle() {
  const auto start = std::chrono::steady_clock::now();
  std::mt19937_64 rng(1001);
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    NgramConfig cfg;
    cfg.weight = kAllWeights[trial % 6];
    // log(1) = 0, so the log-family weights start at n = 2.
    const bool log_family = cfg.weight == WeightFunction::kLogN || cfg.weight == WeightFunction::kNLogN ||
                            cfg.weight == WeightFunction::kNLog2N;
    cfg.n0 = static_cast<int>(oracle::random_size(rng, log_family ? 2 : 1, 4));
    cfg.n_max = cfg.n0 + static_cast<int>(oracle::random_size(rng, 0, 8));
    const int alphabet = static_cast<int>(oracle::random_size(rng, 1, 10));
    const auto tail = oracle::random_tokens(rng, oracle::random_size(rng, 0, 40), alphabet);
    RegenerationSet omega;
    const std::size_t k = oracle::random_size(rng, 1, 5);
    for (std::size_t i = 0; i < k; ++i) {
      omega.regens.push_back(oracle::random_tokens(rng, oracle::random_size(rng, 0, 40), alphabet));
    }
    const double got = bscore(tail, omega, cfg).score;
    const double want = oracle::bscore(tail, omega.regens, cfg);
    worst = std::max(worst, std::abs(got - want));
  }
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {worst <= 1e-12 && seconds < 10.0, "1000 instances, max |diff| " + sci(worst)};
}

Outcome worked_values() {
  const TokenSequence tail = {"a", "b", "c", "d", "e"};
  RegenerationSet four;
  four.regens = {{"a", "b", "c", "d", "x"}};
  RegenerationSet same;
  same.regens = {tail};
  const double first = bscore(tail, four, NgramConfig{}).score;
  const double second = bscore(tail, same, NgramConfig{}).score;
  const bool pass = std::abs(first - 0.554518) <= 1e-6 && std::abs(second - 2.163956) <= 1e-6;
  return {pass, fmt(first, 6) + " (want 0.554518), " + fmt(second, 6) + " (want 2.163956)"};
}

Outcome auroc_oracle() {
  std::mt19937_64 rng(1003);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<LabeledScore> scores;
    const std::size_t n = oracle::random_size(rng, 2, 200);
    const std::size_t grid = oracle::random_size(rng, 1, 50);
    for (std::size_t i = 0; i < n; ++i) {
      const Label label = i == 0 ? Label::kAi : i == 1 ? Label::kHuman : oracle::random_size(rng, 0, 1) ? Label::kAi : Label::kHuman;
      scores.push_back({static_cast<double>(oracle::random_size(rng, 0, grid)) / static_cast<double>(grid), label, ""});
    }
    worst = std::max(worst, std::abs(roc(scores).auroc - oracle::auroc(scores)));
  }
  std::size_t monotone_sets = 0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<LabeledScore> scores;
    const std::size_t n = oracle::random_size(rng, 2, 200);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
      const bool ai = i == 0 || (i != 1 && oracle::random_size(rng, 0, 1));
      scores.push_back({std::round((normal(rng) + (ai ? 1.0 : 0.0)) * 8.0) / 8.0, ai ? Label::kAi : Label::kHuman, ""});
    }
    bool ok = true;
    OperatingPoint previous = tpr_at_fpr(scores, 0.0);
    for (int step = 1; step < 100; ++step) {
      const OperatingPoint p = tpr_at_fpr(scores, step / 100.0);
      ok = ok && p.tpr >= previous.tpr && p.threshold <= previous.threshold;
      previous = p;
    }
    monotone_sets += ok;
  }
  return {worst <= 1e-12 && monotone_sets == 100,
          "max |diff| " + sci(worst) + ", monotone on " + std::to_string(monotone_sets) + "/100"};
}

Outcome end_to_end() {
  const auto start = std::chrono::steady_clock::now();
  DetectionConfig black;
  black.k = 10;
  DetectionConfig white = black;
  white.mode = DetectionMode::kWhiteBox;
  const double a_black = auroc_with(black);
  const double a_white = auroc_with(white);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return {a_black >= 0.85 && a_white >= 0.85 && seconds < 60.0,
          "black-box " + fmt(a_black) + ", white-box " + fmt(a_white) + ", " + fmt(seconds, 2) + "s"};
}

Outcome truncation_ratio() {
  DetectionConfig cfg;
  cfg.gamma = 0.02;
  const double low = auroc_with(cfg);
  cfg.gamma = 0.5;
  const double mid = auroc_with(cfg);
  cfg.gamma = 0.98;
  const double high = auroc_with(cfg);
  return {mid >= low && mid >= high,
          "gamma 0.02: " + fmt(low) + ", 0.5: " + fmt(mid) + ", 0.98: " + fmt(high)};
}

Outcome regeneration_count() {
  DetectionConfig cfg;
  cfg.k = 1;
  const double one = auroc_with(cfg);
  cfg.k = 10;
  const double ten = auroc_with(cfg);
  return {ten >= one, "K=1: " + fmt(one) + ", K=10: " + fmt(ten)};
}

Outcome sourcing() {
  const Fixture& f = fixture();
  MarkovBackend a(f.model_a, kSynthModelA);
  MarkovBackend b(f.model_b, kSynthModelB);
  std::vector<Backend*> candidates = {&a, &b};
  std::vector<const TextSample*> samples;
  for (std::size_t i = 0; i < 50; ++i) samples.push_back(&f.bench.samples[i]);
  for (std::size_t i = 0; i < 50; ++i) samples.push_back(&f.bench.samples_b[i]);
  std::size_t correct = 0;
  for (const TextSample* s : samples) {
    const std::string truth = *s->source_model == kSynthModelA ? a.id() : b.id();
    correct += source_model(*s, candidates, DetectionConfig{}).winner == truth;
  }
  const double rate = static_cast<double>(correct) / static_cast<double>(samples.size());
  return {rate >= 0.8, std::to_string(correct) + "/" + std::to_string(samples.size()) + " ranked first"};
}

double tpr_at(std::span<const DetectionResult> results, double threshold) {
  std::size_t hits = 0;
  for (const auto& r : results) hits += r.score > threshold;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

Outcome sliding_window() {
  const Fixture& f = fixture();
  MarkovBackend backend(f.model_a);
  const DetectionConfig cfg;
  constexpr double kTargetFpr = 0.01;
  std::vector<double> plain_human;
  std::vector<double> sliding_human;
  for (const auto& r : detect_batch(f.human(), backend, cfg, 1, 1)) plain_human.push_back(r.score);
  for (const auto& r : detect_batch(f.human(), backend, cfg, 1, 2)) sliding_human.push_back(r.score);
  const double plain_threshold = calibrate_threshold(plain_human, kTargetFpr);
  const double sliding_threshold = calibrate_threshold(sliding_human, kTargetFpr);
  const auto plain = detect_batch(f.bench.composites, backend, cfg, 1, 1);
  const auto sliding = detect_batch(f.bench.composites, backend, cfg, 1, 2);
  const double plain_tpr = tpr_at(plain, plain_threshold);
  const double sliding_tpr = tpr_at(sliding, sliding_threshold);
  return {sliding_tpr > plain_tpr && f.bench.composites.size() == 50,
          "TPR plain " + fmt(plain_tpr) + ", windows=2 " + fmt(sliding_tpr) + " on " +
              std::to_string(f.bench.composites.size()) + " composites"};
}

Outcome sample_bound() {
  const double hundred = required_samples(0.921034);
  const double one = required_samples(92.103404);
  return {std::abs(hundred - 100.0) <= 1e-3 && std::abs(one - 1.0) <= 1e-6,
          fmt(hundred, 6) + ", " + fmt(one, 8)};
}

Outcome evidence_oracle() {
  std::mt19937_64 rng(1010);
  std::size_t missed = 0;
  std::size_t unsound = 0;
  std::size_t spans = 0;
  for (int trial = 0; trial < 500; ++trial) {
    const int alphabet = static_cast<int>(oracle::random_size(rng, 1, 4));
    const auto regen = oracle::random_tokens(rng, oracle::random_size(rng, 0, 60), alphabet);
    const auto tail = oracle::random_tokens(rng, oracle::random_size(rng, 0, 60), alphabet);
    const std::size_t min_len = oracle::random_size(rng, 1, 6);
    const auto expected = oracle::maximal_runs(regen, tail, min_len);
    std::set<oracle::Span> got;
    for (const auto& e : extract_evidence(regen, tail, min_len, 0)) {
      const oracle::Span span{e.pos_in_tail, e.pos_in_regen, e.length()};
      got.insert(span);
      unsound += !expected.count(span) ||
                 !oracle::common_at(tail, span.pos_in_tail, regen, span.pos_in_regen, span.length);
    }
    for (const auto& span : expected) missed += !got.count(span);
    spans += expected.size();
  }
  return {missed == 0 && unsound == 0, std::to_string(spans) + " spans, missed " + std::to_string(missed) +
                                           ", unsound " + std::to_string(unsound)};
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism() {
  TempDir dir;
  const fs::path data = dir / "data";
  std::vector<std::string> reports;
  std::vector<std::string> datasets;
  for (int run = 0; run < 2; ++run) {
    std::ostringstream out, err;
    if (cli::run({"synth", "--out-dir", data.string()}, out, err) != 0) return {false, "synth failed: " + err.str()};
    datasets.push_back(slurp(data / "samples.jsonl") + slurp(data / "corpus_a.jsonl"));
    const fs::path report_dir = dir / ("run" + std::to_string(run));
    if (cli::run({"eval", "--config", (data / "config.json").string(), "--dataset", (data / "samples.jsonl").string(),
                  "--report-dir", report_dir.string(), "--run-id", "bench"},
                 out, err) != 0) {
      return {false, "eval failed: " + err.str()};
    }
    reports.push_back(slurp(report_dir / "bench.json"));
  }
  const bool pass = !reports[0].empty() && reports[0] == reports[1] && datasets[0] == datasets[1];
  return {pass, std::to_string(reports[0].size()) + "-byte reports " + (reports[0] == reports[1] ? "identical" : "differ")};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"bscore matches brute-force oracle", bscore_oracle},
      {"worked bscore values", worked_values},
      {"auroc matches pairwise oracle; tpr_at_fpr monotone", auroc_oracle},
      {"synthetic end-to-end auroc", end_to_end},
      {"mid truncation ratio beats extremes", truncation_ratio},
      {"K=10 at least as good as K=1", regeneration_count},
      {"model sourcing ranks true source first", sourcing},
      {"sliding window raises composite TPR", sliding_window},
      {"required_samples values", sample_bound},
      {"evidence sound and complete", evidence_oracle},
      {"benchmark reports byte-identical", determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto start = std::chrono::steady_clock::now();
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    failures += !outcome.pass;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " [" << (i + 1) << "] " << criteria[i].first << ": "
              << outcome.detail << " (" << fmt(seconds, 2) << "s)" << std::endl;
  }
  std::cout << (criteria.size() - failures) << "/" << criteria.size() << " criteria passed" << std::endl;
  return failures == 0 ? 0 : 1;
}
