#pragma once

#include <fmt/format.h>

#include <cstdlib>
#include <memory>
#include <optional>
#include <string>

#include <json.hpp>

#include "entangle/embedding.hpp"
#include "entangle/http_client.hpp"

namespace entangle {

/// Client for an embeddings endpoint. Wire contract:
///   POST {"model": m, "input": [texts...]}
///   200  {"data": [{"index": i, "embedding": [reals...]}, ...]}
class RemoteEmbeddingProvider final : public EmbeddingProvider {
 public:
  RemoteEmbeddingProvider(std::string endpoint, std::string model, std::size_t dimension,
                          HttpCallOptions options = {})
      : endpoint_(std::move(endpoint)),
        model_(std::move(model)),
        dimension_(dimension),
        options_(std::move(options)) {
    parse_url(endpoint_);
  }

  std::size_t dimension() const override { return dimension_; }
  std::string model_name() const override { return model_; }

 protected:
  SemanticVector embed_trimmed(std::string_view text) const override {
    std::string_view one[] = {text};
    return std::move(request(one).front());
  }

  std::vector<SemanticVector> batch_trimmed(std::span<const std::string_view> texts) const override {
    if (texts.empty()) return {};
    return request(texts);
  }

 private:
  std::vector<SemanticVector> request(std::span<const std::string_view> texts) const {
    nlohmann::json body{{"model", model_}, {"input", nlohmann::json::array()}};
    for (auto t : texts) body["input"].push_back(std::string(t));
    auto reply = post_json(endpoint_, body, options_);
    if (!reply.contains("data") || !reply["data"].is_array() || reply["data"].size() != texts.size())
      throw ProviderError(ErrorCode::provider_unavailable,
                          fmt::format("{}: expected {} embeddings in 'data'", endpoint_, texts.size()));
    std::vector<SemanticVector> out(texts.size());
    std::vector<bool> filled(texts.size(), false);
    for (std::size_t k = 0; k < reply["data"].size(); ++k) {
      const auto& item = reply["data"][k];
      std::size_t idx = item.value("index", k);
      if (idx >= texts.size() || filled[idx] || !item.contains("embedding"))
        throw ProviderError(ErrorCode::provider_unavailable,
                            fmt::format("{}: malformed embedding item {}", endpoint_, k));
      out[idx] = SemanticVector(item["embedding"].get<std::vector<double>>());
      filled[idx] = true;
    }
    return out;
  }

  std::string endpoint_;
  std::string model_;
  std::size_t dimension_;
  HttpCallOptions options_;
};

enum class ProviderKind { remote, precomputed_store, deterministic_test };

inline std::string_view to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::remote: return "remote";
    case ProviderKind::precomputed_store: return "precomputed_store";
    case ProviderKind::deterministic_test: return "deterministic_test";
  }
  return "deterministic_test";
}

inline ProviderKind parse_provider_kind(std::string_view s) {
  if (s == "remote") return ProviderKind::remote;
  if (s == "precomputed_store") return ProviderKind::precomputed_store;
  if (s == "deterministic_test") return ProviderKind::deterministic_test;
  throw Error(ErrorCode::config_error, fmt::format("unknown embedding provider kind '{}'", s));
}

struct ProviderConfig {
  ProviderKind kind = ProviderKind::deterministic_test;
  std::optional<std::string> endpoint;
  std::string model_name = "all-MiniLM-L6-v2";
  std::size_t dimension = kDefaultDimension;
  std::size_t cache_capacity = 4096;
  std::optional<std::string> store_path;
  std::string api_key;  // never serialized
  double timeout_seconds = 30.0;

  void validate() const {
    if (dimension == 0) throw Error(ErrorCode::config_error, "embedding dimension must be positive");
    if (kind == ProviderKind::remote && (!endpoint || endpoint->empty()))
      throw Error(ErrorCode::config_error, "remote embedding provider requires an endpoint");
    if (kind == ProviderKind::precomputed_store && (!store_path || store_path->empty()))
      throw Error(ErrorCode::config_error, "precomputed_store provider requires a store path");
  }
};

inline nlohmann::json to_json(const ProviderConfig& c) {
  return {{"kind", to_string(c.kind)},
          {"endpoint", c.endpoint ? nlohmann::json(*c.endpoint) : nlohmann::json(nullptr)},
          {"model_name", c.model_name},
          {"dimension", c.dimension},
          {"cache_capacity", c.cache_capacity},
          {"store_path", c.store_path ? nlohmann::json(*c.store_path) : nlohmann::json(nullptr)},
          {"timeout_seconds", c.timeout_seconds}};
}

inline ProviderPtr make_embedding_provider(const ProviderConfig& cfg) {
  cfg.validate();
  ProviderPtr base;
  switch (cfg.kind) {
    case ProviderKind::remote:
      base = std::make_shared<RemoteEmbeddingProvider>(
          *cfg.endpoint, cfg.model_name, cfg.dimension,
          HttpCallOptions{cfg.api_key, cfg.timeout_seconds, 3, std::chrono::milliseconds(250)});
      break;
    case ProviderKind::precomputed_store: {
      auto store = std::make_shared<PrecomputedStoreProvider>(PrecomputedStoreProvider::load(*cfg.store_path));
      if (store->dimension() != cfg.dimension)
        throw Error(ErrorCode::config_error,
                    fmt::format("store {} has dimension {}, configured {}", *cfg.store_path,
                                store->dimension(), cfg.dimension));
      base = std::move(store);
      break;
    }
    case ProviderKind::deterministic_test:
      base = std::make_shared<DeterministicTestProvider>(cfg.dimension);
      break;
  }
  if (cfg.cache_capacity == 0) return base;
  return std::make_shared<CachingProvider>(std::move(base), cfg.cache_capacity);
}

}  // namespace entangle
