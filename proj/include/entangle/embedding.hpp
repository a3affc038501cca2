#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "entangle/error.hpp"
#include "entangle/text.hpp"

namespace entangle {

inline constexpr std::size_t kDefaultDimension = 384;

/// Real-valued embedding with its Euclidean norm cached at construction.
/// Values are kept exactly as the provider produced them.
class SemanticVector {
 public:
  SemanticVector() = default;
  explicit SemanticVector(std::vector<double> values) : values_(std::move(values)) {
    double sq = 0.0;
    for (double v : values_) sq += v * v;
    norm_ = std::sqrt(sq);
  }

  static SemanticVector zeros(std::size_t dimension) {
    return SemanticVector(std::vector<double>(dimension, 0.0));
  }

  std::span<const double> values() const noexcept { return values_; }
  std::size_t dimension() const noexcept { return values_.size(); }
  double norm() const noexcept { return norm_; }
  double operator[](std::size_t i) const { return values_.at(i); }

  bool operator==(const SemanticVector& other) const { return values_ == other.values_; }

 private:
  std::vector<double> values_;
  double norm_ = 0.0;
};

namespace detail {

inline void require_same_dimension(const SemanticVector& a, const SemanticVector& b) {
  if (a.dimension() != b.dimension())
    throw Error(ErrorCode::invalid_input,
                fmt::format("dimension mismatch: {} vs {}", a.dimension(), b.dimension()));
}

}  // namespace detail

inline double dot(const SemanticVector& a, const SemanticVector& b) {
  detail::require_same_dimension(a, b);
  double s = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) s += a.values()[i] * b.values()[i];
  return s;
}

/// dot(a,b) / (|a||b|), clamped to [-1, 1] against rounding.
inline double cosine(const SemanticVector& a, const SemanticVector& b) {
  detail::require_same_dimension(a, b);
  if (a.norm() == 0.0 || b.norm() == 0.0)
    throw Error(ErrorCode::invalid_input, "cosine of a zero-norm vector is undefined");
  if (a == b) return 1.0;
  return std::clamp(dot(a, b) / (a.norm() * b.norm()), -1.0, 1.0);
}

inline SemanticVector scaled(const SemanticVector& v, double s) {
  std::vector<double> out(v.values().begin(), v.values().end());
  for (auto& x : out) x *= s;
  return SemanticVector(std::move(out));
}

inline SemanticVector negated(const SemanticVector& v) { return scaled(v, -1.0); }

/// a + s*b
inline SemanticVector axpy(const SemanticVector& a, double s, const SemanticVector& b) {
  detail::require_same_dimension(a, b);
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += s * b.values()[i];
  return SemanticVector(std::move(out));
}

inline nlohmann::json vector_to_json(const SemanticVector& v) {
  return nlohmann::json(std::vector<double>(v.values().begin(), v.values().end()));
}

// ---------------------------------------------------------------------------
// Provider contract

/// Maps text to vectors of a fixed dimension. Implementations must be safe
/// for concurrent embed calls.
class EmbeddingProvider {
 public:
  virtual ~EmbeddingProvider() = default;

  virtual std::size_t dimension() const = 0;
  virtual std::string model_name() const = 0;

  /// Embeds `text` after trimming surrounding whitespace.
  SemanticVector embed(std::string_view text) const {
    auto body = trim(text);
    if (body.empty()) throw Error(ErrorCode::invalid_input, "cannot embed empty text");
    auto v = embed_trimmed(body);
    check_dimension(v);
    return v;
  }

  /// Order-preserving; element i equals embed(texts[i]). The first failing
  /// element is reported with its index.
  std::vector<SemanticVector> batch_embed(std::span<const std::string> texts) const {
    std::vector<std::string_view> bodies;
    bodies.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      auto body = trim(texts[i]);
      if (body.empty())
        throw Error(ErrorCode::invalid_input, fmt::format("texts[{}]: cannot embed empty text", i));
      bodies.push_back(body);
    }
    auto out = batch_trimmed(bodies);
    for (const auto& v : out) check_dimension(v);
    return out;
  }

 protected:
  virtual SemanticVector embed_trimmed(std::string_view text) const = 0;

  virtual std::vector<SemanticVector> batch_trimmed(std::span<const std::string_view> texts) const {
    std::vector<SemanticVector> out;
    out.reserve(texts.size());
    for (std::size_t i = 0; i < texts.size(); ++i) {
      try {
        out.push_back(embed_trimmed(texts[i]));
      } catch (const ProviderError& e) {
        throw ProviderError(e.code(), fmt::format("texts[{}]: {}", i, e.what()), e.attempts());
      } catch (const Error& e) {
        throw Error(e.code(), fmt::format("texts[{}]: {}", i, e.what()));
      }
    }
    return out;
  }

 private:
  void check_dimension(const SemanticVector& v) const {
    if (v.dimension() != dimension())
      throw Error(ErrorCode::invariant_violation,
                  fmt::format("provider returned dimension {}, configured {}", v.dimension(),
                              dimension()));
  }
};

using ProviderPtr = std::shared_ptr<const EmbeddingProvider>;

/// Key under which a text is cached or stored: SHA-256 of the trimmed text.
inline std::string text_key(std::string_view text) { return sha256_hex(trim(text)); }

// ---------------------------------------------------------------------------
// Deterministic pseudo-embedding

/// Content-hash seeded unit vectors. The generator is part of the contract:
///   seed  = FNV-1a-64(trimmed UTF-8 text)
///   x_k   = splitmix64 output k (k = 1..D, state starts at seed)
///   u_k   = (x_k >> 11) * 2^-53 ;  v_k = 2*u_k - 1
///   value = v / |v|
/// No global state; identical across processes and platforms.
class DeterministicTestProvider final : public EmbeddingProvider {
 public:
  explicit DeterministicTestProvider(std::size_t dimension = kDefaultDimension)
      : dimension_(dimension) {
    if (dimension == 0) throw Error(ErrorCode::config_error, "dimension must be positive");
  }

  std::size_t dimension() const override { return dimension_; }
  std::string model_name() const override {
    return fmt::format("deterministic-test-{}", dimension_);
  }

  static std::uint64_t splitmix64(std::uint64_t& state) noexcept {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

 protected:
  SemanticVector embed_trimmed(std::string_view text) const override {
    std::uint64_t state = fnv1a64(text);
    std::vector<double> v(dimension_);
    double sq = 0.0;
    for (auto& x : v) {
      double u = static_cast<double>(splitmix64(state) >> 11) * 0x1.0p-53;
      x = 2.0 * u - 1.0;
      sq += x * x;
    }
    double n = std::sqrt(sq);
    for (auto& x : v) x /= n;
    return SemanticVector(std::move(v));
  }

 private:
  std::size_t dimension_;
};

// ---------------------------------------------------------------------------
// Precomputed store

/// Offline vectors keyed by text hash. File format (JSON Lines):
///   {"format":"entangle-embeddings","version":1,"model":"...","dimension":D}
///   {"sha256":"<hex of trimmed text>","text":"optional","values":[...D reals]}
class PrecomputedStoreProvider final : public EmbeddingProvider {
 public:
  PrecomputedStoreProvider(std::string model, std::size_t dimension,
                           std::unordered_map<std::string, SemanticVector> vectors)
      : model_(std::move(model)), dimension_(dimension), vectors_(std::move(vectors)) {
    for (const auto& [key, v] : vectors_) {
      if (v.dimension() != dimension_)
        throw Error(ErrorCode::invariant_violation,
                    fmt::format("stored vector {} has dimension {}, store declares {}", key,
                                v.dimension(), dimension_));
    }
  }

  static PrecomputedStoreProvider parse(std::string_view content, std::string_view source = "<memory>") {
    std::string model;
    std::size_t dimension = 0;
    bool have_header = false;
    std::unordered_map<std::string, SemanticVector> vectors;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < content.size()) {
      auto next = content.find('\n', pos);
      if (next == std::string_view::npos) next = content.size();
      auto line = trim(content.substr(pos, next - pos));
      pos = next + 1;
      ++line_no;
      if (line.empty()) continue;
      auto fail = [&](const std::string& msg) {
        return Error(ErrorCode::parse_error, fmt::format("{}:{}: {}", source, line_no, msg));
      };
      nlohmann::json rec;
      try {
        rec = nlohmann::json::parse(line);
      } catch (const nlohmann::json::parse_error& e) {
        throw fail(e.what());
      }
      if (!have_header) {
        if (rec.value("format", "") != "entangle-embeddings" || !rec.contains("dimension"))
          throw fail("first record must be the entangle-embeddings header");
        model = rec.value("model", "unknown");
        dimension = rec["dimension"].get<std::size_t>();
        have_header = true;
        continue;
      }
      if (!rec.contains("sha256") || !rec.contains("values")) throw fail("entry needs sha256 and values");
      auto values = rec["values"].get<std::vector<double>>();
      if (values.size() != dimension)
        throw fail(fmt::format("entry has {} values, header declares {}", values.size(), dimension));
      vectors.insert_or_assign(rec["sha256"].get<std::string>(), SemanticVector(std::move(values)));
    }
    if (!have_header) throw Error(ErrorCode::parse_error, fmt::format("{}: empty embedding store", source));
    return PrecomputedStoreProvider(std::move(model), dimension, std::move(vectors));
  }

  static PrecomputedStoreProvider load(const std::string& path) { return parse(read_file(path), path); }

  /// Serializes entries sorted by key so equal stores produce equal files.
  static std::string serialize(std::string_view model, std::size_t dimension,
                               const std::vector<std::pair<std::string, SemanticVector>>& entries) {
    std::string out = nlohmann::json{{"format", "entangle-embeddings"},
                                     {"version", 1},
                                     {"model", model},
                                     {"dimension", dimension}}
                          .dump() +
                      "\n";
    std::vector<std::pair<std::string, nlohmann::json>> rows;
    for (const auto& [text, v] : entries)
      rows.emplace_back(text_key(text), nlohmann::json{{"sha256", text_key(text)},
                                                       {"text", std::string(trim(text))},
                                                       {"values", vector_to_json(v)}});
    std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    for (const auto& [_, row] : rows) out += row.dump() + "\n";
    return out;
  }

  std::size_t dimension() const override { return dimension_; }
  std::string model_name() const override { return model_; }
  std::size_t size() const noexcept { return vectors_.size(); }

 protected:
  SemanticVector embed_trimmed(std::string_view text) const override {
    auto key = sha256_hex(text);
    auto it = vectors_.find(key);
    if (it == vectors_.end())
      throw Error(ErrorCode::not_found, fmt::format("no precomputed embedding for text hash {}", key));
    return it->second;
  }

 private:
  std::string model_;
  std::size_t dimension_;
  std::unordered_map<std::string, SemanticVector> vectors_;
};

// ---------------------------------------------------------------------------
// Cache

/// LRU cache in front of another provider, keyed by text hash.
class CachingProvider final : public EmbeddingProvider {
 public:
  CachingProvider(ProviderPtr inner, std::size_t capacity)
      : inner_(std::move(inner)), capacity_(capacity) {
    if (!inner_) throw Error(ErrorCode::config_error, "caching provider needs an inner provider");
  }

  std::size_t dimension() const override { return inner_->dimension(); }
  std::string model_name() const override { return inner_->model_name(); }

  std::size_t hits() const {
    std::lock_guard lock(mutex_);
    return hits_;
  }
  std::size_t entries() const {
    std::lock_guard lock(mutex_);
    return index_.size();
  }

 protected:
  SemanticVector embed_trimmed(std::string_view text) const override {
    auto key = sha256_hex(text);
    if (auto cached = lookup(key)) return *cached;
    auto v = inner_->embed(text);
    store(key, v);
    return v;
  }

  std::vector<SemanticVector> batch_trimmed(std::span<const std::string_view> texts) const override {
    std::vector<std::optional<SemanticVector>> found(texts.size());
    std::vector<std::string> keys(texts.size());
    std::vector<std::string> missing;
    std::vector<std::size_t> missing_at;
    for (std::size_t i = 0; i < texts.size(); ++i) {
      keys[i] = sha256_hex(texts[i]);
      found[i] = lookup(keys[i]);
      if (!found[i]) {
        missing.emplace_back(texts[i]);
        missing_at.push_back(i);
      }
    }
    if (!missing.empty()) {
      auto fresh = inner_->batch_embed(missing);
      for (std::size_t k = 0; k < fresh.size(); ++k) {
        store(keys[missing_at[k]], fresh[k]);
        found[missing_at[k]] = std::move(fresh[k]);
      }
    }
    std::vector<SemanticVector> out;
    out.reserve(texts.size());
    for (auto& v : found) out.push_back(std::move(*v));
    return out;
  }

 private:
  std::optional<SemanticVector> lookup(const std::string& key) const {
    std::lock_guard lock(mutex_);
    auto it = index_.find(key);
    if (it == index_.end()) return std::nullopt;
    order_.splice(order_.begin(), order_, it->second);
    ++hits_;
    return it->second->second;
  }

  void store(const std::string& key, const SemanticVector& v) const {
    if (capacity_ == 0) return;
    std::lock_guard lock(mutex_);
    if (auto it = index_.find(key); it != index_.end()) {
      order_.splice(order_.begin(), order_, it->second);
      return;
    }
    order_.emplace_front(key, v);
    index_[key] = order_.begin();
    if (index_.size() > capacity_) {
      index_.erase(order_.back().first);
      order_.pop_back();
    }
  }

  ProviderPtr inner_;
  std::size_t capacity_;
  mutable std::mutex mutex_;
  mutable std::list<std::pair<std::string, SemanticVector>> order_;
  mutable std::unordered_map<std::string, std::list<std::pair<std::string, SemanticVector>>::iterator>
      index_;
  mutable std::size_t hits_ = 0;
};

}  // namespace entangle
