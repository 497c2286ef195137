#include "cli.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "tailprobe/cache.hpp"
#include "tailprobe/error.hpp"
#include "tailprobe/eval.hpp"
#include "tailprobe/markov.hpp"
#include "tailprobe/pipeline.hpp"
#include "tailprobe/remote.hpp"
#include "tailprobe/storage.hpp"
#include "tailprobe/synth.hpp"

namespace tailprobe::cli {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

// Raised while turning flags into a plan; maps to the usage exit code.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;

  double gamma = 0.5;
  std::optional<int> k;
  std::string mode = "black_box";
  int n0 = 4;
  int n_max = 25;
  std::string weight = "n_log_n";
  std::optional<double> threshold;
  std::size_t min_tokens = 20;
  std::string prompt_mode = "text_only";
  std::optional<std::size_t> evidence_min_len;
  double temperature = 0.7;
  int max_tokens = 300;
  std::uint64_t seed = 0;
  std::string wscore_variant = "sequence";

  std::string backend = "markov";
  std::string corpus;
  int order = 2;
  double alpha = 1e-6;
  std::string base_url = "https://api.openai.com";
  std::string model = "gpt-3.5-turbo";
  std::string api_key_env = "OPENAI_API_KEY";
  long timeout_ms = 60'000;
  int retries = 3;
  long backoff_ms = 500;
  bool no_n = false;
  std::vector<std::string> candidates;

  std::string input;
  std::optional<std::string> text;
  std::optional<std::string> prompt;
  std::string id;
  std::string dataset;
  std::string cache_dir;
  std::string report_dir;
  std::string run_id;
  std::size_t jobs = 1;
  std::size_t windows = 1;
  double target_fpr = 0.01;

  std::string param;
  std::vector<std::string> values;

  std::string out_dir;
  SynthConfig synth;

  std::uint64_t max_bytes = 0;
  long grace_seconds = 30;
};

void add_detection_options(CLI::App& sub, Options& o) {
  sub.add_option("--gamma", o.gamma, "Truncation ratio: fraction of tokens kept as prefix")->capture_default_str();
  sub.add_option("--k", o.k, "Regenerations per sample (default 10 black-box, 5 white-box)");
  sub.add_option("--mode", o.mode, "black_box or white_box")->capture_default_str();
  sub.add_option("--n0", o.n0, "Smallest n-gram order scored")->capture_default_str();
  sub.add_option("--n-max", o.n_max, "Largest n-gram order scored")->capture_default_str();
  sub.add_option("--weight", o.weight, "log_n, n, n_log_n, n_log2_n, n_sq or exp_n")->capture_default_str();
  sub.add_option("--threshold", o.threshold, "Decision threshold; ai iff score > threshold");
  sub.add_option("--min-tokens", o.min_tokens, "Shortest text accepted, in tokens")->capture_default_str();
  sub.add_option("--prompt-mode", o.prompt_mode, "text_only or known_prompt")->capture_default_str();
  sub.add_option("--evidence-min-len", o.evidence_min_len, "Shortest evidence span (default n0)");
  sub.add_option("--temperature", o.temperature, "Regeneration temperature")->capture_default_str();
  sub.add_option("--max-tokens", o.max_tokens, "Tokens per regeneration")->capture_default_str();
  sub.add_option("--seed", o.seed, "Base seed for regeneration")->capture_default_str();
  sub.add_option("--wscore-variant", o.wscore_variant, "sequence or per_token")->capture_default_str();
}

void add_backend_options(CLI::App& sub, Options& o) {
  sub.add_option("--backend", o.backend, "markov or remote")->capture_default_str();
  sub.add_option("--corpus", o.corpus, "JSONL corpus the markov backend trains on");
  sub.add_option("--order", o.order, "Markov order")->capture_default_str();
  sub.add_option("--alpha", o.alpha, "Markov additive smoothing")->capture_default_str();
  sub.add_option("--base-url", o.base_url, "Chat-completions endpoint origin")->capture_default_str();
  sub.add_option("--model", o.model, "Remote model name")->capture_default_str();
  sub.add_option("--api-key-env", o.api_key_env, "Environment variable holding the API key")->capture_default_str();
  sub.add_option("--timeout-ms", o.timeout_ms, "Remote request timeout")->capture_default_str();
  sub.add_option("--retries", o.retries, "Retries on 429 and 5xx")->capture_default_str();
  sub.add_option("--backoff-ms", o.backoff_ms, "First retry delay; doubles per retry")->capture_default_str();
  sub.add_flag("--no-n", o.no_n, "Request one choice per call instead of n");
  sub.add_option("--cache-dir", o.cache_dir, "Continuation cache directory");
}

void add_run_options(CLI::App& sub, Options& o) {
  sub.add_option("--jobs", o.jobs, "Worker threads across samples")->capture_default_str();
  sub.add_option("--windows", o.windows, "Sliding windows per sample")->capture_default_str();
  sub.add_option("--report-dir", o.report_dir, "Directory for <run-id>.json and .md reports");
  sub.add_option("--run-id", o.run_id, "Report file stem (default: subcommand name)");
}

void add_input_options(CLI::App& sub, Options& o) {
  sub.add_option("--input", o.input, "Text file to analyze");
  sub.add_option("--text", o.text, "Text to analyze, inline");
  sub.add_option("--id", o.id, "Sample id (default: input file stem)");
  sub.add_option("--prompt", o.prompt, "Question the text answers; used in known_prompt mode");
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot read '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

std::string config_value(const json& value) {
  if (value.is_string()) return value.get<std::string>();
  if (value.is_boolean()) return value.get<bool>() ? "true" : "false";
  return value.dump();
}

// Applies JSON config values to options the command line left unset. A
// report's "plan" object is accepted as a config, so runs can be replayed.
void merge_config(CLI::App& sub, const std::string& path) {
  json doc;
  try {
    doc = json::parse(read_file(path));
  } catch (const json::exception& e) {
    throw UsageError("config '" + path + "': " + e.what());
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  if (doc.is_object() && doc.contains("plan") && doc["plan"].is_object()) doc = doc["plan"];
  if (!doc.is_object()) throw UsageError("config '" + path + "' must hold a JSON object");
  for (const auto& [key, value] : doc.items()) {
    if (key == "subcommand" || key == "config" || value.is_null()) continue;
    CLI::Option* opt = sub.get_option_no_throw("--" + key);
    if (opt == nullptr) throw UsageError("config '" + path + "': unknown key '" + key + "'");
    if (opt->count() > 0) continue;
    std::vector<std::string> items;
    if (value.is_array()) {
      for (const auto& v : value) items.push_back(config_value(v));
    } else {
      items.push_back(config_value(value));
    }
    opt->add_result(items);
    opt->run_callback();
  }
}

DetectionConfig detection_config(const Options& o) {
  DetectionConfig cfg;
  cfg.gamma = o.gamma;
  cfg.k = o.k;
  auto mode = parse_detection_mode(o.mode);
  if (!mode) throw UsageError("unknown --mode '" + o.mode + "'");
  cfg.mode = *mode;
  cfg.ngram.n0 = o.n0;
  cfg.ngram.n_max = o.n_max;
  auto weight = parse_weight_function(o.weight);
  if (!weight) throw UsageError("unknown --weight '" + o.weight + "'");
  cfg.ngram.weight = *weight;
  cfg.threshold = o.threshold;
  cfg.min_tokens = o.min_tokens;
  auto prompt_mode = parse_prompt_mode(o.prompt_mode);
  if (!prompt_mode) throw UsageError("unknown --prompt-mode '" + o.prompt_mode + "'");
  cfg.prompt_mode = *prompt_mode;
  cfg.evidence_min_len = o.evidence_min_len;
  cfg.temperature = o.temperature;
  cfg.max_tokens = o.max_tokens;
  cfg.seed = o.seed;
  if (o.wscore_variant == "sequence") {
    cfg.wscore_variant = WScoreVariant::kSequence;
  } else if (o.wscore_variant == "per_token" || o.wscore_variant == "per-token") {
    cfg.wscore_variant = WScoreVariant::kPerTokenMean;
  } else {
    throw UsageError("unknown --wscore-variant '" + o.wscore_variant + "'");
  }
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw UsageError(e.what());
  }
  return cfg;
}

BackendConfig backend_config(const Options& o) {
  BackendConfig cfg;
  if (o.backend == "markov") {
    cfg.kind = BackendKind::kMarkov;
    if (o.corpus.empty()) throw UsageError("--backend markov needs --corpus");
  } else if (o.backend == "remote") {
    cfg.kind = BackendKind::kRemote;
  } else {
    throw UsageError("unknown --backend '" + o.backend + "'");
  }
  cfg.corpus_path = o.corpus;
  cfg.order = o.order;
  cfg.alpha = o.alpha;
  cfg.base_url = o.base_url;
  cfg.model = o.model;
  cfg.api_key_env = o.api_key_env;
  cfg.timeout = std::chrono::milliseconds(o.timeout_ms);
  cfg.retries = o.retries;
  cfg.backoff_base = std::chrono::milliseconds(o.backoff_ms);
  cfg.supports_n = !o.no_n;
  if (o.order < 1) throw UsageError("--order must be at least 1");
  if (!(o.alpha > 0.0)) throw UsageError("--alpha must be positive");
  if (o.retries < 0 || o.timeout_ms <= 0 || o.backoff_ms < 0) {
    throw UsageError("--retries, --timeout-ms and --backoff-ms must be non-negative");
  }
  return cfg;
}

/// Every resolved setting of a run, keyed by flag name.
json plan_json(const std::string& subcommand, const Options& o, const DetectionConfig* detection,
               const BackendConfig* backend) {
  json plan = {{"subcommand", subcommand}};
  if (detection != nullptr) {
    plan.update(to_json(*detection));
  }
  if (backend != nullptr) {
    if (backend->kind == BackendKind::kMarkov) {
      plan["backend"] = "markov";
      plan["corpus"] = backend->corpus_path;
      plan["order"] = backend->order;
      plan["alpha"] = backend->alpha;
    } else {
      plan["backend"] = "remote";
      plan["base-url"] = backend->base_url;
      plan["model"] = backend->model;
      plan["api-key-env"] = backend->api_key_env;
      plan["timeout-ms"] = backend->timeout.count();
      plan["retries"] = backend->retries;
      plan["backoff-ms"] = backend->backoff_base.count();
      plan["no-n"] = !backend->supports_n;
    }
    if (!o.cache_dir.empty()) plan["cache-dir"] = o.cache_dir;
  }
  if (!o.run_id.empty()) plan["run-id"] = o.run_id;
  return plan;
}

std::shared_ptr<const MarkovModel> load_markov(const std::string& corpus, int order, double alpha) {
  const std::vector<TextSample> samples = load_jsonl(corpus);
  return train_markov(samples, order, alpha);
}

// Owns the backend chain for one run: base backend plus optional cache.
class BackendStack {
 public:
  BackendStack(const BackendConfig& cfg, const std::string& cache_dir, std::ostream& err) : err_(err) {
    if (cfg.kind == BackendKind::kMarkov) {
      base_ = std::make_unique<MarkovBackend>(load_markov(cfg.corpus_path, cfg.order, cfg.alpha));
    } else {
      base_ = std::make_unique<RemoteBackend>(cfg);
    }
    if (!cache_dir.empty()) {
      cache_ = std::make_unique<GenerationCache>(cache_dir, [this](std::string_view message) {
        std::lock_guard lock(mutex_);
        err_ << "warning: " << message << '\n';
      });
      cached_ = std::make_unique<CachedBackend>(*base_, *cache_);
    }
  }

  Backend& backend() { return cached_ ? static_cast<Backend&>(*cached_) : *base_; }

 private:
  std::ostream& err_;
  std::mutex mutex_;
  std::unique_ptr<Backend> base_;
  std::unique_ptr<GenerationCache> cache_;
  std::unique_ptr<CachedBackend> cached_;
};

TextSample input_sample(const Options& o) {
  if (o.text && !o.input.empty()) throw UsageError("give either --input or --text, not both");
  if (!o.text && o.input.empty()) throw UsageError("missing --input or --text");
  TextSample sample;
  if (o.text) {
    sample.text = *o.text;
    sample.id = o.id.empty() ? "input" : o.id;
  } else {
    sample.text = read_file(o.input);
    sample.id = o.id.empty() ? fs::path(o.input).stem().string() : o.id;
  }
  sample.prompt = o.prompt;
  return sample;
}

std::vector<TextSample> dataset_samples(const Options& o) {
  if (o.dataset.empty()) throw UsageError("missing --dataset");
  return load_jsonl(o.dataset);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

void write_reports(const ReportDocument& doc, const std::string& dir, std::ostream& err) {
  if (dir.empty()) return;
  for (ReportFormat format : {ReportFormat::kJson, ReportFormat::kMarkdown}) {
    err << "wrote " << write_report(doc, dir, format).string() << '\n';
  }
}

int run_detect(const Options& o, std::ostream& out, std::ostream& err) {
  const DetectionConfig cfg = detection_config(o);
  const BackendConfig bcfg = backend_config(o);
  const TextSample sample = input_sample(o);
  if (o.windows == 0) throw UsageError("--windows must be at least 1");

  Stopwatch clock;
  BackendStack stack(bcfg, o.cache_dir, err);
  const DetectionResult result = detect_sliding(sample, stack.backend(), cfg, o.windows);
  out << to_json(result).dump(2) << '\n';

  ReportDocument doc;
  doc.run_id = o.run_id.empty() ? "detect" : o.run_id;
  doc.plan = plan_json("detect", o, &cfg, &bcfg);
  doc.entries.push_back({sample.id, sample.label, result});
  write_reports(doc, o.report_dir, err);
  err << "detect: " << result.token_count << " tokens in " << std::fixed << std::setprecision(2)
      << clock.seconds() << "s\n";
  return kExitOk;
}

int run_eval(const Options& o, std::ostream& out, std::ostream& err) {
  const DetectionConfig cfg = detection_config(o);
  const BackendConfig bcfg = backend_config(o);
  if (o.dataset.empty()) throw UsageError("eval needs --dataset");
  if (o.windows == 0 || o.jobs == 0) throw UsageError("--windows and --jobs must be at least 1");
  const std::vector<TextSample> samples = dataset_samples(o);

  Stopwatch clock;
  BackendStack stack(bcfg, o.cache_dir, err);
  Benchmark bench{samples, &stack.backend(), cfg, o.target_fpr, o.jobs, o.windows};
  const EvalRun run = evaluate(bench);

  ReportDocument doc;
  doc.run_id = o.run_id.empty() ? "eval" : o.run_id;
  doc.plan = plan_json("eval", o, &cfg, &bcfg);
  doc.plan["dataset"] = o.dataset;
  doc.plan["target-fpr"] = o.target_fpr;
  doc.plan["windows"] = o.windows;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    doc.entries.push_back({samples[i].id, samples[i].label, run.results[i]});
  }
  doc.metrics = {
      {"samples", samples.size()},
      {"auroc", run.curve.auroc},
      {"target_fpr", o.target_fpr},
      {"tpr_at_target_fpr", run.at_target.tpr},
      {"calibrated_threshold", run.at_target.threshold},
      {"roc", to_json(run.curve)},
  };
  json summary = doc.metrics;
  summary.erase("roc");
  out << summary.dump(2) << '\n';
  write_reports(doc, o.report_dir, err);
  err << "eval: " << samples.size() << " samples in " << std::fixed << std::setprecision(2) << clock.seconds()
      << "s\n";
  return kExitOk;
}

int run_sweep(const Options& o, std::ostream& out, std::ostream& err) {
  DetectionConfig cfg = detection_config(o);
  const BackendConfig bcfg = backend_config(o);
  if (o.dataset.empty()) throw UsageError("sweep needs --dataset");
  const auto parameter = parse_sweep_parameter(o.param);
  if (!parameter) throw UsageError("--param must be gamma, k, weight_fn, n0 or temperature");
  if (o.values.empty()) throw UsageError("sweep needs --values");
  for (const auto& value : o.values) {
    DetectionConfig probe = cfg;
    try {
      apply_sweep_value(probe, *parameter, value);
    } catch (const Error& e) {
      throw UsageError(e.what());
    }
  }
  const std::vector<TextSample> samples = dataset_samples(o);

  Stopwatch clock;
  BackendStack stack(bcfg, o.cache_dir, err);
  Benchmark bench{samples, &stack.backend(), cfg, o.target_fpr, o.jobs, o.windows};
  const SweepReport report = sweep(*parameter, o.values, bench);
  out << format_table(report);

  if (!o.report_dir.empty()) {
    json plan = plan_json("sweep", o, &cfg, &bcfg);
    plan["dataset"] = o.dataset;
    plan["target-fpr"] = o.target_fpr;
    plan["windows"] = o.windows;
    plan["param"] = o.param;
    plan["values"] = o.values;
    json doc = {{"run_id", o.run_id.empty() ? "sweep" : o.run_id}, {"plan", plan}, {"sweep", to_json(report)}};
    const fs::path path = fs::path(o.report_dir) / (doc["run_id"].get<std::string>() + ".json");
    write_text_file(path, doc.dump(2) + "\n");
    write_text_file(fs::path(o.report_dir) / (doc["run_id"].get<std::string>() + ".txt"), format_table(report));
    err << "wrote " << path.string() << '\n';
  }
  err << "sweep: " << o.values.size() << " values in " << std::fixed << std::setprecision(2) << clock.seconds()
      << "s\n";
  return kExitOk;
}

// "name=path" or "path"; the name defaults to the corpus file stem.
std::pair<std::string, std::string> candidate_spec(const std::string& spec) {
  const auto eq = spec.find('=');
  if (eq == std::string::npos) return {fs::path(spec).stem().string(), spec};
  if (eq == 0 || eq + 1 == spec.size()) throw UsageError("bad --candidate '" + spec + "'");
  return {spec.substr(0, eq), spec.substr(eq + 1)};
}

int run_source(const Options& o, std::ostream& out, std::ostream& err) {
  const DetectionConfig cfg = detection_config(o);
  if (o.candidates.size() < 2) throw UsageError("source needs at least two --candidate corpora");
  if (o.order < 1 || !(o.alpha > 0.0)) throw UsageError("--order must be >= 1 and --alpha positive");
  std::vector<TextSample> samples;
  if (!o.dataset.empty()) {
    if (o.text || !o.input.empty()) throw UsageError("give --dataset or an input, not both");
    samples = dataset_samples(o);
  } else {
    samples.push_back(input_sample(o));
  }

  Stopwatch clock;
  std::vector<std::unique_ptr<MarkovBackend>> owned;
  std::map<std::string, std::string> id_by_name;
  json candidates = json::array();
  for (const auto& spec : o.candidates) {
    auto [name, path] = candidate_spec(spec);
    owned.push_back(std::make_unique<MarkovBackend>(load_markov(path, o.order, o.alpha), name));
    id_by_name[name] = owned.back()->id();
    candidates.push_back({{"name", name}, {"corpus", path}, {"id", owned.back()->id()}});
  }
  std::vector<Backend*> backends;
  for (auto& b : owned) backends.push_back(b.get());

  json rows = json::array();
  std::size_t judged = 0;
  std::size_t correct = 0;
  for (const auto& sample : samples) {
    const SourceAttribution attribution = source_model(sample, backends, cfg);
    json row = to_json(attribution);
    row["id"] = sample.id;
    if (sample.source_model) {
      const auto it = id_by_name.find(*sample.source_model);
      if (it != id_by_name.end()) {
        ++judged;
        correct += attribution.winner == it->second ? 1 : 0;
        row["true_source"] = it->second;
      }
    }
    rows.push_back(std::move(row));
  }
  json result = {{"candidates", candidates}, {"samples", rows}};
  if (judged > 0) {
    result["accuracy"] = static_cast<double>(correct) / static_cast<double>(judged);
    result["judged"] = judged;
  }
  out << result.dump(2) << '\n';
  err << "source: " << samples.size() << " samples, " << backends.size() << " candidates in " << std::fixed
      << std::setprecision(2) << clock.seconds() << "s\n";
  return kExitOk;
}

int run_synth(const Options& o, std::ostream& out, std::ostream& err) {
  if (o.out_dir.empty()) throw UsageError("synth needs --out-dir");
  Stopwatch clock;
  const SynthBenchmark bench = build_synth_benchmark(o.synth);
  const fs::path dir(o.out_dir);
  fs::create_directories(dir);
  write_jsonl(dir / "corpus_a.jsonl", bench.corpus_a);
  write_jsonl(dir / "corpus_b.jsonl", bench.corpus_b);
  write_jsonl(dir / "samples.jsonl", bench.samples);
  write_jsonl(dir / "composites.jsonl", bench.composites);
  write_jsonl(dir / "samples_b.jsonl", bench.samples_b);

  // Backend settings for eval/sweep/detect against model A.
  const json config = {{"backend", "markov"},
                       {"corpus", (dir / "corpus_a.jsonl").string()},
                       {"order", o.synth.order},
                       {"alpha", o.synth.alpha}};
  write_text_file(dir / "config.json", config.dump(2) + "\n");
  const json summary = {
      {"out_dir", dir.string()},
      {"seed", o.synth.seed},
      {"corpus_docs_per_model", o.synth.train_docs_per_model},
      {"ai_samples", bench.samples.size() - o.synth.human_samples},
      {"human_samples", o.synth.human_samples},
      {"composites", bench.composites.size()},
      {"samples_b", bench.samples_b.size()},
      {"model_a", kSynthModelA},
      {"model_b", kSynthModelB},
  };
  out << summary.dump(2) << '\n';
  err << "synth: built in " << std::fixed << std::setprecision(2) << clock.seconds() << "s\n";
  return kExitOk;
}

int run_cache_gc(const Options& o, std::ostream& out, std::ostream&) {
  if (o.cache_dir.empty()) throw UsageError("cache gc needs --cache-dir");
  if (o.grace_seconds < 0) throw UsageError("--grace-seconds must be non-negative");
  const std::size_t evicted = cache_gc(o.cache_dir, o.max_bytes, std::chrono::seconds(o.grace_seconds));
  out << json{{"evicted", evicted}}.dump() << '\n';
  return kExitOk;
}

int run_cache_key(const Options& o, std::ostream& out, std::ostream&) {
  const DetectionConfig cfg = detection_config(o);
  if (o.model.empty() || !o.text) throw UsageError("cache key needs --model and --text");
  GenerationParams params;
  params.temperature = cfg.temperature;
  params.max_tokens = cfg.max_tokens;
  params.seed = cfg.seed;
  out << GenerationCache::key(o.model, *o.text, params, 0) << '\n';
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"tailprobe: detect machine-generated text by truncating and regenerating it", "tailprobe"};
  app.require_subcommand(1);

  CLI::App* detect = app.add_subcommand("detect", "Score one text and print the result as JSON");
  CLI::App* eval = app.add_subcommand("eval", "Score a labeled JSONL dataset and report AUROC and TPR");
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "Re-run eval for each value of one parameter");
  CLI::App* source = app.add_subcommand("source", "Rank candidate models as the source of a text");
  CLI::App* synth = app.add_subcommand("synth", "Write the seeded synthetic benchmark as JSONL");
  CLI::App* cache = app.add_subcommand("cache", "Manage the continuation cache");
  CLI::App* gc = cache->add_subcommand("gc", "Evict oldest cache entries until under a size budget");
  cache->require_subcommand(1);

  for (CLI::App* sub : {detect, eval, sweep_cmd, source}) {
    sub->add_option("--config", o.config_path, "JSON file of flag values; flags win");
    add_detection_options(*sub, o);
  }
  for (CLI::App* sub : {detect, eval, sweep_cmd}) {
    add_backend_options(*sub, o);
    add_run_options(*sub, o);
  }
  add_input_options(*detect, o);
  for (CLI::App* sub : {eval, sweep_cmd, source}) {
    sub->add_option("--dataset", o.dataset, "Labeled JSONL dataset");
  }
  for (CLI::App* sub : {eval, sweep_cmd}) {
    sub->add_option("--target-fpr", o.target_fpr, "FPR at which TPR is reported")->capture_default_str();
  }
  sweep_cmd->add_option("--param", o.param, "gamma, k, weight_fn, n0 or temperature");
  sweep_cmd->add_option("--values", o.values, "Comma-separated values")->delimiter(',');

  add_input_options(*source, o);
  source->add_option("--candidate", o.candidates, "Candidate corpus as name=path.jsonl (repeatable)");
  source->add_option("--order", o.order, "Markov order of every candidate")->capture_default_str();
  source->add_option("--alpha", o.alpha, "Markov smoothing of every candidate")->capture_default_str();

  synth->add_option("--out-dir", o.out_dir, "Output directory");
  synth->add_option("--seed", o.synth.seed, "Benchmark seed")->capture_default_str();
  synth->add_option("--ai-samples", o.synth.ai_samples, "ai samples from model A")->capture_default_str();
  synth->add_option("--human-samples", o.synth.human_samples, "Held-out human samples")->capture_default_str();
  synth->add_option("--composites", o.synth.composite_samples, "ai-then-human composites")->capture_default_str();
  synth->add_option("--b-samples", o.synth.b_samples, "ai samples from model B")->capture_default_str();
  synth->add_option("--train-docs", o.synth.train_docs_per_model, "Training documents per model")
      ->capture_default_str();
  synth->add_option("--doc-tokens", o.synth.doc_tokens, "Tokens per sample")->capture_default_str();
  synth->add_option("--order", o.synth.order, "Markov order of A and B")->capture_default_str();
  synth->add_option("--temperature", o.synth.temperature, "Sampling temperature for ai samples")
      ->capture_default_str();

  gc->add_option("--cache-dir", o.cache_dir, "Cache directory");
  gc->add_option("--max-bytes", o.max_bytes, "Size budget in bytes")->capture_default_str();
  gc->add_option("--grace-seconds", o.grace_seconds, "Never evict entries younger than this")
      ->capture_default_str();
  CLI::App* key = cache->add_subcommand("key", "Print the cache key of a request");
  key->add_option("--model", o.model, "Model id");
  key->add_option("--text", o.text, "Prompt");
  key->add_option("--temperature", o.temperature)->capture_default_str();
  key->add_option("--max-tokens", o.max_tokens)->capture_default_str();
  key->add_option("--seed", o.seed)->capture_default_str();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
    for (CLI::App* sub : {detect, eval, sweep_cmd, source}) {
      if (sub->parsed() && !o.config_path.empty()) merge_config(*sub, o.config_path);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return kExitUsage;
  }

  try {
    if (detect->parsed()) return run_detect(o, out, err);
    if (eval->parsed()) return run_eval(o, out, err);
    if (sweep_cmd->parsed()) return run_sweep(o, out, err);
    if (source->parsed()) return run_source(o, out, err);
    if (synth->parsed()) return run_synth(o, out, err);
    if (gc->parsed()) return run_cache_gc(o, out, err);
    if (key->parsed()) return run_cache_key(o, out, err);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n' << "run with --help for usage\n";
    return kExitUsage;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitFailure;
  }
  err << app.help();
  return kExitUsage;
}

}  // namespace tailprobe::cli
