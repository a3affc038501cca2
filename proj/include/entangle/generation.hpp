#pragma once

#include <fmt/format.h>

#include <cctype>
#include <cmath>
#include <condition_variable>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "entangle/error.hpp"
#include "entangle/http_client.hpp"
#include "entangle/templates.hpp"
#include "entangle/text.hpp"

namespace entangle {

enum class GenerationProviderKind { remote, deterministic_mock };

inline std::string_view to_string(GenerationProviderKind k) {
  return k == GenerationProviderKind::remote ? "remote" : "deterministic_mock";
}

inline GenerationProviderKind parse_generation_provider_kind(std::string_view s) {
  if (s == "remote") return GenerationProviderKind::remote;
  if (s == "deterministic_mock") return GenerationProviderKind::deterministic_mock;
  throw Error(ErrorCode::config_error, fmt::format("unknown generation provider kind '{}'", s));
}

struct GenerationConfig {
  double temperature = 0.7;
  int max_tokens = 512;
  std::string system_message = builtin_templates().system_message;
  GenerationProviderKind provider_kind = GenerationProviderKind::deterministic_mock;

  void validate() const {
    if (!std::isfinite(temperature) || temperature < 0.0)
      throw Error(ErrorCode::config_error, fmt::format("temperature must be >= 0, got {}", temperature));
    if (max_tokens <= 0) throw Error(ErrorCode::config_error, fmt::format("max_tokens must be > 0, got {}", max_tokens));
    if (is_blank(system_message)) throw Error(ErrorCode::config_error, "system_message is empty");
  }

  bool operator==(const GenerationConfig&) const = default;
};

inline nlohmann::json to_json(const GenerationConfig& c) {
  return {{"temperature", c.temperature},
          {"max_tokens", c.max_tokens},
          {"system_message", c.system_message},
          {"provider_kind", to_string(c.provider_kind)}};
}

inline GenerationConfig generation_config_from_json(const nlohmann::json& j, GenerationConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "generation: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "temperature") base.temperature = value.get<double>();
    else if (key == "max_tokens") base.max_tokens = value.get<int>();
    else if (key == "system_message") base.system_message = value.get<std::string>();
    else if (key == "provider_kind") base.provider_kind = parse_generation_provider_kind(value.get<std::string>());
    else throw Error(ErrorCode::invalid_input, fmt::format("generation: unknown field '{}'", key));
  }
  base.validate();
  return base;
}

enum class SynthesisMode { entangled, baseline };

inline std::string_view to_string(SynthesisMode m) { return m == SynthesisMode::entangled ? "entangled" : "baseline"; }

inline SynthesisMode parse_synthesis_mode(std::string_view s) {
  if (s == "entangled") return SynthesisMode::entangled;
  if (s == "baseline") return SynthesisMode::baseline;
  throw Error(ErrorCode::invalid_input, fmt::format("unknown synthesis mode '{}'", s));
}

struct PromptPair {
  std::string system;
  std::string user;

  bool operator==(const PromptPair&) const = default;
};

struct GenerationInput {
  PromptPair prompt;
  GenerationConfig config;
  SynthesisMode mode = SynthesisMode::entangled;
  std::optional<FramingKind> framing;
  std::vector<std::string> prescriptions;  // in prompt order
};

struct GenerationOutput {
  std::string text;
  std::string model;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int attempts = 1;
};

class TextGenerator {
 public:
  virtual ~TextGenerator() = default;
  virtual GenerationOutput generate(const GenerationInput& in) const = 0;
  virtual std::string model_name() const = 0;
};

using GeneratorPtr = std::shared_ptr<const TextGenerator>;

/// "For this scenario, apply the following strategic principles: P1.
/// Additionally, P2. Finally, P3." with fewer clauses for shorter input.
inline std::string concatenation_text(const std::vector<std::string>& prescriptions) {
  if (prescriptions.empty()) throw Error(ErrorCode::invalid_input, "no prescriptions to concatenate");
  std::string out = "For this scenario, apply the following strategic principles: " + prescriptions.front() + ".";
  for (std::size_t i = 1; i < prescriptions.size(); ++i) {
    bool last = i + 1 == prescriptions.size();
    out += (last ? " Finally, " : " Additionally, ") + prescriptions[i] + ".";
  }
  return out;
}

namespace detail {

inline int word_count(std::string_view s) {
  int n = 0;
  bool in_word = false;
  for (char c : s) {
    bool space = is_space(c);
    if (!space && !in_word) ++n;
    in_word = !space;
  }
  return n;
}

inline std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

}  // namespace detail

/// Offline generator. Entangled mode joins the prescriptions with
/// framing-specific connectives:
///   dominant    "Take the initiative and P1. From a position of strength, P2. Keep control of the terms: Pn."
///   contrarian  "Where others expect the obvious, P1. Against conventional wisdom, P2. Let the surprise do the work: Pn."
///   minimalist  "P1. P2. Pn." with each clause capitalized
/// A single prescription uses only the opening form. Baseline mode returns
/// concatenation_text(prescriptions).
class DeterministicMockGenerator final : public TextGenerator {
 public:
  std::string model_name() const override { return "deterministic-mock-v1"; }

  GenerationOutput generate(const GenerationInput& in) const override {
    GenerationOutput out;
    out.model = model_name();
    out.text = in.mode == SynthesisMode::baseline ? concatenation_text(in.prescriptions)
                                                  : narrative(in.framing.value_or(FramingKind::dominant), in.prescriptions);
    out.prompt_tokens = detail::word_count(in.prompt.system) + detail::word_count(in.prompt.user);
    out.completion_tokens = detail::word_count(out.text);
    return out;
  }

  static std::string narrative(FramingKind framing, const std::vector<std::string>& ps) {
    if (ps.empty()) return {};
    struct Forms {
      const char* open;
      const char* middle;
      const char* close;
    };
    Forms f{};
    switch (framing) {
      case FramingKind::dominant:
        f = {"Take the initiative and {}.", "From a position of strength, {}.", "Keep control of the terms: {}."};
        break;
      case FramingKind::contrarian:
        f = {"Where others expect the obvious, {}.", "Against conventional wisdom, {}.",
             "Let the surprise do the work: {}."};
        break;
      case FramingKind::minimalist: {
        std::string out;
        for (const auto& p : ps) out += (out.empty() ? "" : " ") + detail::capitalize(p) + ".";
        return out;
      }
    }
    std::string out;
    for (std::size_t i = 0; i < ps.size(); ++i) {
      const char* form = i == 0 ? f.open : (i + 1 == ps.size() ? f.close : f.middle);
      out += (i == 0 ? "" : " ") + fmt::format(fmt::runtime(form), ps[i]);
    }
    return out;
  }
};

/// Chat-completion client. Wire contract:
///   POST {"model", "messages": [{"role":"system",...},{"role":"user",...}], "temperature", "max_tokens"}
///   200  {"model", "choices": [{"message": {"content"}, "finish_reason"}], "usage": {...}}
class RemoteChatGenerator final : public TextGenerator {
 public:
  RemoteChatGenerator(std::string endpoint, std::string model, HttpCallOptions options = {})
      : endpoint_(std::move(endpoint)), model_(std::move(model)), options_(std::move(options)) {
    parse_url(endpoint_);
    if (model_.empty()) throw Error(ErrorCode::config_error, "remote generator requires a model name");
  }

  std::string model_name() const override { return model_; }

  GenerationOutput generate(const GenerationInput& in) const override {
    nlohmann::json body{{"model", model_},
                        {"messages",
                         {{{"role", "system"}, {"content", in.prompt.system}},
                          {{"role", "user"}, {"content", in.prompt.user}}}},
                        {"temperature", in.config.temperature},
                        {"max_tokens", in.config.max_tokens}};
    int attempts = 0;
    auto reply = post_json(endpoint_, body, options_, &attempts);
    const auto* choice = reply.contains("choices") && reply["choices"].is_array() && !reply["choices"].empty()
                             ? &reply["choices"][0]
                             : nullptr;
    if (!choice || !choice->contains("message"))
      throw ProviderError(ErrorCode::provider_unavailable, fmt::format("{}: reply has no choices", endpoint_), attempts);
    const auto& message = (*choice)["message"];
    if ((message.contains("refusal") && !message["refusal"].is_null()) ||
        choice->value("finish_reason", std::string{}) == "content_filter")
      throw ProviderError(ErrorCode::provider_refusal,
                          fmt::format("{}: generation refused: {}", endpoint_,
                                      message.contains("refusal") && message["refusal"].is_string()
                                          ? message["refusal"].get<std::string>()
                                          : std::string("content_filter")),
                          attempts);
    GenerationOutput out;
    out.text = message.contains("content") && message["content"].is_string() ? message["content"].get<std::string>() : "";
    out.model = reply.value("model", model_);
    if (reply.contains("usage") && reply["usage"].is_object()) {
      out.prompt_tokens = reply["usage"].value("prompt_tokens", 0);
      out.completion_tokens = reply["usage"].value("completion_tokens", 0);
    }
    out.attempts = attempts;
    return out;
  }

 private:
  std::string endpoint_;
  std::string model_;
  HttpCallOptions options_;
};

/// Caps the number of concurrent generate() calls on the wrapped generator.
class BoundedGenerator final : public TextGenerator {
 public:
  BoundedGenerator(GeneratorPtr inner, std::size_t limit) : inner_(std::move(inner)), limit_(limit) {
    if (!inner_) throw Error(ErrorCode::config_error, "bounded generator needs an inner generator");
    if (limit_ == 0) throw Error(ErrorCode::config_error, "in-flight limit must be at least 1");
  }

  std::string model_name() const override { return inner_->model_name(); }

  GenerationOutput generate(const GenerationInput& in) const override {
    {
      std::unique_lock lock(mutex_);
      cv_.wait(lock, [&] { return in_flight_ < limit_; });
      ++in_flight_;
      peak_ = std::max(peak_, in_flight_);
    }
    struct Release {
      const BoundedGenerator* self;
      ~Release() {
        {
          std::lock_guard lock(self->mutex_);
          --self->in_flight_;
        }
        self->cv_.notify_one();
      }
    } release{this};
    return inner_->generate(in);
  }

  std::size_t peak_in_flight() const {
    std::lock_guard lock(mutex_);
    return peak_;
  }

 private:
  GeneratorPtr inner_;
  std::size_t limit_;
  mutable std::mutex mutex_;
  mutable std::condition_variable cv_;
  mutable std::size_t in_flight_ = 0;
  mutable std::size_t peak_ = 0;
};

struct GeneratorSettings {
  GenerationProviderKind kind = GenerationProviderKind::deterministic_mock;
  std::optional<std::string> endpoint;
  std::string model;
  std::string api_key;  // never serialized
  double timeout_seconds = 120.0;
  std::size_t max_in_flight = 4;
};

inline GeneratorPtr make_text_generator(const GeneratorSettings& s) {
  GeneratorPtr base;
  if (s.kind == GenerationProviderKind::deterministic_mock) {
    base = std::make_shared<DeterministicMockGenerator>();
  } else {
    if (!s.endpoint || s.endpoint->empty())
      throw Error(ErrorCode::config_error, "remote generator requires an endpoint (ENTANGLE_LLM_URL)");
    base = std::make_shared<RemoteChatGenerator>(
        *s.endpoint, s.model, HttpCallOptions{s.api_key, s.timeout_seconds, 3, std::chrono::milliseconds(500)});
  }
  return std::make_shared<BoundedGenerator>(std::move(base), s.max_in_flight);
}

}  // namespace entangle
