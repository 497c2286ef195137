#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "tailprobe/eval.hpp"
#include "tailprobe/pipeline.hpp"
#include "tailprobe/text.hpp"

namespace tailprobe {

// JSONL datasets: one object per line with "id", "text" and optional "label",
// "source_model", "prompt". Unknown fields are ignored, blank lines skipped.
std::vector<TextSample> parse_jsonl(std::istream& in);
std::vector<TextSample> load_jsonl(const std::filesystem::path& path);
void write_jsonl(const std::filesystem::path& path, std::span<const TextSample> samples);
nlohmann::json to_json(const TextSample& sample);

nlohmann::json to_json(const EvidenceSpan& span);
nlohmann::json to_json(const ScoreBreakdown& breakdown);
nlohmann::json to_json(const DetectionResult& result);
nlohmann::json to_json(const DetectionConfig& cfg);
nlohmann::json to_json(const SourceAttribution& attribution);
nlohmann::json to_json(const RocCurve& curve);
nlohmann::json to_json(const SweepReport& report);

struct ReportEntry {
  std::string sample_id;
  std::optional<Label> label;
  DetectionResult result;
};

/// Everything a report renders. Holds no wall-clock data, so rendering the
/// same document twice yields identical bytes.
struct ReportDocument {
  std::string run_id;
  nlohmann::json plan = nlohmann::json::object();
  std::vector<ReportEntry> entries;
  nlohmann::json metrics = nlohmann::json::object();
  // Evidence spans listed per sample in markdown; JSON always has all of them.
  std::size_t markdown_evidence_limit = 10;
};

enum class ReportFormat { kJson, kMarkdown };

std::string render_report(const ReportDocument& doc, ReportFormat format);

/// Writes <directory>/<run-id>.json or .md and returns the path.
std::filesystem::path write_report(const ReportDocument& doc, const std::filesystem::path& directory,
                                   ReportFormat format);

/// Evicts least-recently-modified `*.json` entries until the directory holds at
/// most max_bytes of them. Entries modified within `grace` are never evicted.
std::size_t cache_gc(const std::filesystem::path& directory, std::uintmax_t max_bytes,
                     std::chrono::seconds grace = std::chrono::seconds{0});

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace tailprobe
