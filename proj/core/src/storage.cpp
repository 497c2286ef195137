#include "tailprobe/storage.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <unordered_set>

#include "tailprobe/error.hpp"

namespace tailprobe {

namespace fs = std::filesystem;

namespace {

std::optional<std::string> optional_string(const nlohmann::json& obj, const char* key, std::size_t line) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  if (!obj[key].is_string()) throw ParseError(line, std::string("field '") + key + "' must be a string");
  return obj[key].get<std::string>();
}

std::string fixed(double value, int precision = 6) {
  std::ostringstream out;
  out << std::fixed << std::setprecision(precision) << value;
  return out.str();
}

}  // namespace

std::vector<TextSample> parse_jsonl(std::istream& in) {
  std::vector<TextSample> samples;
  std::unordered_set<std::string> seen;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    nlohmann::json obj;
    try {
      obj = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw ParseError(number, e.what());
    }
    if (!obj.is_object()) throw ParseError(number, "expected a JSON object");
    TextSample sample;
    auto id = optional_string(obj, "id", number);
    auto text = optional_string(obj, "text", number);
    if (!id) throw ParseError(number, "missing 'id'");
    if (!text) throw ParseError(number, "missing 'text'");
    sample.id = std::move(*id);
    sample.text = std::move(*text);
    if (auto label = optional_string(obj, "label", number)) {
      sample.label = parse_label(*label);
      if (!sample.label) throw ParseError(number, "label must be \"human\" or \"ai\"");
    }
    sample.source_model = optional_string(obj, "source_model", number);
    sample.prompt = optional_string(obj, "prompt", number);
    if (!seen.insert(sample.id).second) {
      throw Error(ErrorCode::kDuplicateId, "id '" + sample.id + "' repeated on line " + std::to_string(number));
    }
    samples.push_back(std::move(sample));
  }
  return samples;
}

std::vector<TextSample> load_jsonl(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  return parse_jsonl(in);
}

nlohmann::json to_json(const TextSample& sample) {
  nlohmann::json obj = {{"id", sample.id}, {"text", sample.text}};
  if (sample.label) obj["label"] = to_string(*sample.label);
  if (sample.source_model) obj["source_model"] = *sample.source_model;
  if (sample.prompt) obj["prompt"] = *sample.prompt;
  return obj;
}

void write_jsonl(const fs::path& path, std::span<const TextSample> samples) {
  std::string out;
  for (const auto& sample : samples) {
    out += to_json(sample).dump();
    out.push_back('\n');
  }
  write_text_file(path, out);
}

void write_text_file(const fs::path& path, const std::string& contents) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << contents;
  out.flush();
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
}

nlohmann::json to_json(const EvidenceSpan& span) {
  return {{"text", detokenize(span.tokens)},
          {"length", span.length()},
          {"regen_index", span.regen_index},
          {"pos_in_regen", span.pos_in_regen},
          {"pos_in_tail", span.pos_in_tail}};
}

nlohmann::json to_json(const ScoreBreakdown& breakdown) {
  nlohmann::json per_n = nlohmann::json::array();
  for (const auto& [n, term] : breakdown.per_n) {
    per_n.push_back({{"n", n},
                     {"intersections", term.intersections},
                     {"tail_ngrams", term.tail_ngrams},
                     {"weighted", term.weighted}});
  }
  return {{"per_n", std::move(per_n)}, {"per_regen", breakdown.per_regen}};
}

nlohmann::json to_json(const DetectionResult& result) {
  nlohmann::json evidence = nlohmann::json::array();
  for (const auto& span : result.evidence) evidence.push_back(to_json(span));
  nlohmann::json obj = {
      {"sample_id", result.sample_id},
      {"score", result.score},
      {"mode", to_string(result.mode)},
      {"verdict", to_string(result.verdict)},
      {"threshold", result.threshold ? nlohmann::json(*result.threshold) : nlohmann::json(nullptr)},
      {"tokens", result.token_count},
      {"prefix_tokens", result.prefix_tokens},
      {"tail_tokens", result.tail_tokens},
      {"evidence_min_len", result.evidence_min_len},
      {"evidence", std::move(evidence)},
      {"breakdown", to_json(result.breakdown)},
      {"regen", {{"k", result.regen.k}, {"backend", result.regen.backend_id}, {"cache_hits", result.regen.cache_hits}}},
  };
  if (!result.windows.empty()) {
    nlohmann::json windows = nlohmann::json::array();
    for (const auto& window : result.windows) windows.push_back(to_json(window));
    obj["windows"] = std::move(windows);
  }
  return obj;
}

nlohmann::json to_json(const DetectionConfig& cfg) {
  return {
      {"gamma", cfg.gamma},
      {"k", cfg.resolved_k()},
      {"mode", to_string(cfg.mode)},
      {"n0", cfg.ngram.n0},
      {"n-max", cfg.ngram.n_max},
      {"weight", to_string(cfg.ngram.weight)},
      {"threshold", cfg.threshold ? nlohmann::json(*cfg.threshold) : nlohmann::json(nullptr)},
      {"min-tokens", cfg.min_tokens},
      {"prompt-mode", to_string(cfg.prompt_mode)},
      {"evidence-min-len", cfg.resolved_evidence_min_len()},
      {"temperature", cfg.temperature},
      {"max-tokens", cfg.max_tokens},
      {"seed", cfg.seed},
      {"wscore-variant", cfg.wscore_variant == WScoreVariant::kPerTokenMean ? "per_token" : "sequence"},
  };
}

nlohmann::json to_json(const SourceAttribution& attribution) {
  nlohmann::json ranking = nlohmann::json::array();
  for (const auto& c : attribution.ranking) {
    nlohmann::json entry = {{"model", c.model_id}, {"score", c.failed ? nlohmann::json(nullptr) : nlohmann::json(c.score)}};
    if (c.failed) {
      entry["failed"] = true;
      entry["error"] = c.error;
    }
    ranking.push_back(std::move(entry));
  }
  return {{"winner", attribution.winner}, {"ranking", std::move(ranking)}};
}

nlohmann::json to_json(const RocCurve& curve) {
  nlohmann::json points = nlohmann::json::array();
  for (const auto& p : curve.points) {
    points.push_back({p.fpr, p.tpr, std::isfinite(p.threshold) ? nlohmann::json(p.threshold) : nlohmann::json("-inf")});
  }
  return {{"auroc", curve.auroc}, {"points", std::move(points)}};
}

nlohmann::json to_json(const SweepReport& report) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : report.rows) {
    rows.push_back({{"value", row.value},
                    {"auroc", row.auroc},
                    {"tpr_at_target_fpr", row.tpr_at_target_fpr},
                    {"threshold", row.threshold},
                    {"seed", row.seed}});
  }
  return {{"parameter", to_string(report.parameter)},
          {"target_fpr", report.target_fpr},
          {"fixed_config", to_json(report.fixed_config)},
          {"rows", std::move(rows)}};
}

namespace {

std::string render_json(const ReportDocument& doc) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& entry : doc.entries) {
    nlohmann::json obj = to_json(entry.result);
    obj["sample_id"] = entry.sample_id;
    obj["label"] = entry.label ? nlohmann::json(to_string(*entry.label)) : nlohmann::json(nullptr);
    samples.push_back(std::move(obj));
  }
  nlohmann::json out = {{"run_id", doc.run_id}, {"plan", doc.plan}, {"metrics", doc.metrics}, {"samples", std::move(samples)}};
  return out.dump(2) + "\n";
}

void render_evidence(std::ostringstream& md, const DetectionResult& result, std::size_t limit) {
  if (result.evidence.empty()) {
    md << "_no overlapping pieces ≥ min length (" << result.evidence_min_len << " tokens)_\n";
    return;
  }
  md << "Evidence, longest first:\n\n";
  const std::size_t shown = std::min(limit, result.evidence.size());
  for (std::size_t i = 0; i < shown; ++i) {
    const EvidenceSpan& span = result.evidence[i];
    md << "> \"" << detokenize(span.tokens) << "\" (k=" << span.regen_index << ", m=" << span.length()
       << ", regen@" << span.pos_in_regen << ", tail@" << span.pos_in_tail << ")\n>\n";
  }
  if (shown < result.evidence.size()) {
    md << "> ... " << (result.evidence.size() - shown) << " more spans in the JSON report\n";
  }
}

std::string render_markdown(const ReportDocument& doc) {
  std::ostringstream md;
  md << "# Detection report `" << doc.run_id << "`\n\n";
  md << "## Run plan\n\n```json\n" << doc.plan.dump(2) << "\n```\n\n";
  md << "## Metrics\n\n";
  if (doc.metrics.empty()) {
    md << "_none_\n\n";
  } else {
    md << "| metric | value |\n|---|---|\n";
    for (const auto& [key, value] : doc.metrics.items()) {
      md << "| " << key << " | " << (value.is_number_float() ? fixed(value.get<double>()) : value.dump()) << " |\n";
    }
    md << "\n";
  }
  md << "## Samples\n\n";
  md << "Evidence is shown over normalized tokens (lowercased, punctuation stripped).\n\n";
  for (const auto& entry : doc.entries) {
    const DetectionResult& r = entry.result;
    md << "### " << entry.sample_id << "\n\n";
    md << "- verdict: **" << to_string(r.verdict) << "**\n";
    md << "- score: " << fixed(r.score) << " (" << to_string(r.mode) << ")\n";
    if (r.threshold) md << "- threshold: " << fixed(*r.threshold) << "\n";
    if (entry.label) md << "- label: " << to_string(*entry.label) << "\n";
    md << "- regenerations: " << r.regen.k << " from " << r.regen.backend_id << "\n";
    if (!r.windows.empty()) {
      md << "- windows:";
      for (const auto& w : r.windows) md << " " << to_string(w.verdict) << " (" << fixed(w.score) << ")";
      md << "\n";
    }
    md << "\n";
    render_evidence(md, r, doc.markdown_evidence_limit);
    md << "\n";
  }
  return md.str();
}

}  // namespace

std::string render_report(const ReportDocument& doc, ReportFormat format) {
  if (doc.entries.empty()) throw Error(ErrorCode::kInvalidArgument, "report has no results");
  return format == ReportFormat::kJson ? render_json(doc) : render_markdown(doc);
}

fs::path write_report(const ReportDocument& doc, const fs::path& directory, ReportFormat format) {
  const fs::path path = directory / (doc.run_id + (format == ReportFormat::kJson ? ".json" : ".md"));
  write_text_file(path, render_report(doc, format));
  return path;
}

std::size_t cache_gc(const fs::path& directory, std::uintmax_t max_bytes, std::chrono::seconds grace) {
  struct Entry {
    fs::file_time_type modified;
    std::uintmax_t size;
    fs::path path;
  };
  std::error_code ec;
  if (!fs::is_directory(directory, ec)) throw Error(ErrorCode::kIo, "not a directory: " + directory.string());

  std::vector<Entry> entries;
  std::uintmax_t total = 0;
  for (const auto& item : fs::directory_iterator(directory, ec)) {
    if (!item.is_regular_file() || item.path().extension() != ".json") continue;
    Entry entry{item.last_write_time(), item.file_size(), item.path()};
    total += entry.size;
    entries.push_back(std::move(entry));
  }
  if (ec) throw Error(ErrorCode::kIo, "cannot list " + directory.string() + ": " + ec.message());

  std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
    if (a.modified != b.modified) return a.modified < b.modified;
    return a.path < b.path;
  });
  const auto cutoff = fs::file_time_type::clock::now() - grace;
  std::size_t evicted = 0;
  for (const auto& entry : entries) {
    if (total <= max_bytes) break;
    if (grace.count() > 0 && entry.modified > cutoff) continue;
    if (!fs::remove(entry.path, ec) || ec) {
      throw Error(ErrorCode::kIo, "cannot remove " + entry.path.string());
    }
    total -= entry.size;
    ++evicted;
  }
  return evicted;
}

}  // namespace tailprobe
