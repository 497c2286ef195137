#include "tailprobe/cache.hpp"

#include <fstream>
#include <iostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "digest.hpp"
#include "tailprobe/error.hpp"

namespace tailprobe {

namespace fs = std::filesystem;

GenerationCache::GenerationCache(fs::path directory, WarningSink on_warning)
    : directory_(std::move(directory)), on_warning_(std::move(on_warning)) {
  if (!on_warning_) {
    on_warning_ = [](std::string_view message) { std::cerr << "tailprobe: " << message << '\n'; };
  }
  std::error_code ec;
  fs::create_directories(directory_, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create cache directory " + directory_.string());
}

std::string GenerationCache::canonical_form(std::string_view model_id, std::string_view prompt,
                                            const GenerationParams& params, std::size_t sample_index) {
  nlohmann::json fields = nlohmann::json::array();
  fields.push_back(model_id);
  fields.push_back(prompt);
  fields.push_back(params.temperature);
  fields.push_back(params.max_tokens);
  if (params.seed) {
    fields.push_back(*params.seed);
  } else {
    fields.push_back(nullptr);
  }
  fields.push_back(sample_index);
  return fields.dump();
}

std::string GenerationCache::key(std::string_view model_id, std::string_view prompt,
                                 const GenerationParams& params, std::size_t sample_index) {
  return detail::sha256_hex(canonical_form(model_id, prompt, params, sample_index));
}

fs::path GenerationCache::path_for(std::string_view key) const {
  return directory_ / (std::string(key) + ".json");
}

std::mutex& GenerationCache::stripe(std::string_view key) const {
  return stripes_[std::hash<std::string_view>{}(key) % stripes_.size()];
}

std::optional<Continuation> GenerationCache::load(std::string_view key) const {
  const fs::path path = path_for(key);
  std::lock_guard lock(stripe(key));
  std::ifstream in(path, std::ios::binary);
  if (!in) return std::nullopt;
  try {
    const nlohmann::json doc = nlohmann::json::parse(in);
    if (!doc.is_object() || !doc.contains("text") || !doc["text"].is_string()) {
      throw Error(ErrorCode::kParse, "missing text");
    }
    std::optional<std::vector<double>> logprobs;
    if (doc.contains("token_logprobs") && !doc["token_logprobs"].is_null()) {
      logprobs = doc["token_logprobs"].get<std::vector<double>>();
    }
    return Continuation::from_text(doc["text"].get<std::string>(), std::move(logprobs));
  } catch (const std::exception& e) {
    on_warning_("ignoring corrupt cache entry " + path.string() + ": " + e.what());
    return std::nullopt;
  }
}

void GenerationCache::store(std::string_view key, const Continuation& continuation) {
  nlohmann::json doc = {{"text", continuation.text}, {"token_logprobs", nullptr}};
  if (continuation.token_logprobs) doc["token_logprobs"] = *continuation.token_logprobs;

  const fs::path path = path_for(key);
  std::ostringstream suffix;
  suffix << ".tmp." << std::this_thread::get_id();
  const fs::path temp = path.string() + suffix.str();

  std::lock_guard lock(stripe(key));
  {
    std::ofstream out(temp, std::ios::binary | std::ios::trunc);
    out << doc.dump();
    if (!out) throw Error(ErrorCode::kIo, "cannot write cache entry " + temp.string());
  }
  std::error_code ec;
  fs::rename(temp, path, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot commit cache entry " + path.string());
}

Continuation GenerationCache::generate(Backend& backend, const std::string& prompt,
                                       const GenerationParams& params, std::size_t sample_index,
                                       bool* hit) {
  const std::string cache_key = key(backend.id(), compose_prompt(params, prompt), params, sample_index);
  if (auto cached = load(cache_key)) {
    if (hit) *hit = true;
    return *std::move(cached);
  }
  if (hit) *hit = false;
  const std::size_t index[] = {sample_index};
  Generation generation = backend.generate(prompt, params, index);
  if (generation.continuations.size() != 1) {
    throw Error(ErrorCode::kMalformedResponse, "backend returned no continuation");
  }
  store(cache_key, generation.continuations.front());
  return std::move(generation.continuations.front());
}

Generation CachedBackend::generate(const std::string& prompt, const GenerationParams& params,
                                   std::span<const std::size_t> sample_indices) {
  const std::string composed = compose_prompt(params, prompt);
  const std::string model_id = inner_.id();

  Generation out;
  out.continuations.resize(sample_indices.size());
  std::vector<std::string> keys(sample_indices.size());
  std::vector<std::size_t> missing_slots;
  std::vector<std::size_t> missing_indices;
  for (std::size_t slot = 0; slot < sample_indices.size(); ++slot) {
    keys[slot] = GenerationCache::key(model_id, composed, params, sample_indices[slot]);
    if (auto cached = cache_.load(keys[slot])) {
      out.continuations[slot] = *std::move(cached);
      ++out.cache_hits;
    } else {
      missing_slots.push_back(slot);
      missing_indices.push_back(sample_indices[slot]);
    }
  }
  if (missing_slots.empty()) return out;

  Generation fresh = inner_.generate(prompt, params, missing_indices);
  if (fresh.continuations.size() != missing_slots.size()) {
    throw Error(ErrorCode::kMalformedResponse, "backend returned the wrong number of continuations");
  }
  for (std::size_t i = 0; i < missing_slots.size(); ++i) {
    cache_.store(keys[missing_slots[i]], fresh.continuations[i]);
    out.continuations[missing_slots[i]] = std::move(fresh.continuations[i]);
  }
  return out;
}

}  // namespace tailprobe
