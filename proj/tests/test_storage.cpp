#include <gtest/gtest.h>

#include <fstream>
#include <sstream>
#include <thread>

#include "temp_dir.hpp"
#include "tailprobe/error.hpp"
#include "tailprobe/storage.hpp"

namespace tailprobe {
namespace {

namespace fs = std::filesystem;

std::vector<TextSample> parse(const std::string& text) {
  std::istringstream in(text);
  return parse_jsonl(in);
}

std::size_t parse_error_line(const std::string& text) {
  try {
    parse(text);
  } catch (const ParseError& e) {
    return e.line();
  }
  ADD_FAILURE() << "no parse error";
  return 0;
}

TEST(Jsonl, ParsesFieldsAndSkipsBlankLines) {
  const auto samples = parse(
      "{\"id\":\"a\",\"text\":\"hello\",\"label\":\"ai\",\"source_model\":\"m\",\"prompt\":\"q\",\"extra\":1}\n"
      "\n"
      "  \r\n"
      "{\"id\":\"b\",\"text\":\"there\"}\r\n");
  ASSERT_EQ(samples.size(), 2u);
  EXPECT_EQ(samples[0], (TextSample{"a", "hello", Label::kAi, std::string("m"), std::string("q")}));
  EXPECT_EQ(samples[1], (TextSample{"b", "there", std::nullopt, std::nullopt, std::nullopt}));
}

TEST(Jsonl, ReportsLineOfFirstProblem) {
  EXPECT_EQ(parse_error_line("{\"id\":\"a\",\"text\":\"x\"}\n{not json}\n"), 2u);
  EXPECT_EQ(parse_error_line("\n\n{\"text\":\"x\"}\n"), 3u);
  EXPECT_EQ(parse_error_line("{\"id\":\"a\"}\n"), 1u);
  EXPECT_EQ(parse_error_line("{\"id\":\"a\",\"text\":\"x\",\"label\":\"robot\"}\n"), 1u);
  EXPECT_EQ(parse_error_line("[1,2]\n"), 1u);
  EXPECT_EQ(parse_error_line("{\"id\":7,\"text\":\"x\"}\n"), 1u);
}

TEST(Jsonl, RejectsDuplicateIds) {
  try {
    parse("{\"id\":\"a\",\"text\":\"x\"}\n{\"id\":\"a\",\"text\":\"y\"}\n");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
  }
}

TEST(Jsonl, RoundTripsThroughFile) {
  TempDir dir;
  const std::vector<TextSample> samples = {
      {"x1", "Ünïcode \"quoted\"\nline", Label::kHuman, std::nullopt, std::nullopt},
      {"x2", "plain", Label::kAi, std::string("gen"), std::string("why?")},
  };
  write_jsonl(dir / "s.jsonl", samples);
  EXPECT_EQ(load_jsonl(dir / "s.jsonl"), samples);
  try {
    load_jsonl(dir / "missing.jsonl");
    ADD_FAILURE();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kIo);
  }
}

DetectionResult sample_result(std::string id) {
  DetectionResult r;
  r.sample_id = std::move(id);
  r.score = 0.25;
  r.verdict = Verdict::kAi;
  r.threshold = 0.125;
  r.regen = {3, "markov", 1};
  r.evidence_min_len = 4;
  for (std::size_t i = 0; i < 12; ++i) {
    r.evidence.push_back({{"alpha", "beta", "gamma", "delta"}, i % 3, i, 2 * i});
  }
  return r;
}

ReportDocument sample_document() {
  ReportDocument doc;
  doc.run_id = "run-1";
  doc.plan = {{"gamma", 0.5}, {"k", 3}};
  doc.metrics = {{"auroc", 0.875}, {"samples", 2}};
  doc.entries.push_back({"s1", Label::kAi, sample_result("s1")});
  DetectionResult quiet = sample_result("s2");
  quiet.evidence.clear();
  quiet.verdict = Verdict::kHuman;
  doc.entries.push_back({"s2", Label::kHuman, quiet});
  return doc;
}

TEST(Report, JsonCarriesEveryEvidenceSpan) {
  const auto json = nlohmann::json::parse(render_report(sample_document(), ReportFormat::kJson));
  EXPECT_EQ(json["run_id"], "run-1");
  EXPECT_EQ(json["plan"]["k"], 3);
  EXPECT_EQ(json["samples"].size(), 2u);
  EXPECT_EQ(json["samples"][0]["evidence"].size(), 12u);
  EXPECT_EQ(json["samples"][0]["evidence"][1]["text"], "alpha beta gamma delta");
  EXPECT_EQ(json["samples"][0]["evidence"][1]["regen_index"], 1);
  EXPECT_EQ(json["samples"][0]["label"], "ai");
  EXPECT_EQ(json["samples"][1]["verdict"], "human");
}

TEST(Report, MarkdownLimitsEvidenceAndNotesEmptyOnes) {
  const std::string md = render_report(sample_document(), ReportFormat::kMarkdown);
  EXPECT_NE(md.find("# Detection report `run-1`"), std::string::npos);
  EXPECT_NE(md.find("> \"alpha beta gamma delta\" (k=0, m=4, regen@0, tail@0)"), std::string::npos);
  EXPECT_NE(md.find("2 more spans in the JSON report"), std::string::npos);
  EXPECT_NE(md.find("no overlapping pieces"), std::string::npos);
  EXPECT_NE(md.find("| auroc | 0.875000 |"), std::string::npos);
}

TEST(Report, RenderingIsByteStable) {
  TempDir dir;
  const auto doc = sample_document();
  for (auto format : {ReportFormat::kJson, ReportFormat::kMarkdown}) {
    const fs::path first = write_report(doc, dir / "one", format);
    const fs::path second = write_report(doc, dir / "two", format);
    std::ifstream a(first), b(second);
    std::stringstream sa, sb;
    sa << a.rdbuf();
    sb << b.rdbuf();
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(sa.str(), render_report(doc, format));
  }
  EXPECT_THROW(render_report(ReportDocument{}, ReportFormat::kJson), Error);
}

TEST(Report, ConfigJsonUsesFlagNames) {
  DetectionConfig cfg;
  const auto json = to_json(cfg);
  EXPECT_EQ(json["k"], 10);
  EXPECT_EQ(json["n-max"], 25);
  EXPECT_EQ(json["weight"], "n_log_n");
  EXPECT_EQ(json["prompt-mode"], "text_only");
  EXPECT_TRUE(json["threshold"].is_null());
}

TEST(Report, FailedCandidatesSerializeWithoutScore) {
  SourceAttribution a;
  a.winner = "m1";
  a.ranking = {{"m1", 0.5, false, ""}, {"m2", -std::numeric_limits<double>::infinity(), true, "boom"}};
  const auto json = to_json(a);
  EXPECT_EQ(json["ranking"][0]["score"], 0.5);
  EXPECT_TRUE(json["ranking"][1]["score"].is_null());
  EXPECT_EQ(json["ranking"][1]["error"], "boom");
}

void write_entry(const fs::path& path, std::size_t bytes, fs::file_time_type when) {
  std::ofstream(path) << std::string(bytes, 'x');
  fs::last_write_time(path, when);
}

TEST(CacheGc, EvictsOldestUntilUnderBudget) {
  TempDir dir;
  const auto now = fs::file_time_type::clock::now();
  write_entry(dir / "old.json", 100, now - std::chrono::hours(3));
  write_entry(dir / "mid.json", 100, now - std::chrono::hours(2));
  write_entry(dir / "new.json", 100, now - std::chrono::hours(1));
  write_entry(dir / "notes.txt", 1000, now - std::chrono::hours(9));
  EXPECT_EQ(cache_gc(dir.path(), 150), 2u);
  EXPECT_FALSE(fs::exists(dir / "old.json"));
  EXPECT_FALSE(fs::exists(dir / "mid.json"));
  EXPECT_TRUE(fs::exists(dir / "new.json"));
  EXPECT_TRUE(fs::exists(dir / "notes.txt"));
  EXPECT_EQ(cache_gc(dir.path(), 150), 0u);
}

TEST(CacheGc, SparesEntriesInsideGraceWindow) {
  TempDir dir;
  const auto now = fs::file_time_type::clock::now();
  write_entry(dir / "old.json", 100, now - std::chrono::hours(3));
  write_entry(dir / "fresh.json", 100, now);
  EXPECT_EQ(cache_gc(dir.path(), 0, std::chrono::seconds(60)), 1u);
  EXPECT_TRUE(fs::exists(dir / "fresh.json"));
  EXPECT_THROW(cache_gc(dir / "absent", 0), Error);
}

}  // namespace
}  // namespace tailprobe
