#pragma once

#include <fmt/format.h>

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "entangle/embedding.hpp"
#include "entangle/error.hpp"
#include "entangle/text.hpp"

namespace entangle {

enum class Dimension {
  offensive_strength,
  defensive_strength,
  relational_capacity,
  potential_energy,
  temporal_availability,
  contextual_fit,
};

inline constexpr std::array<Dimension, 6> kDimensions{
    Dimension::offensive_strength,   Dimension::defensive_strength, Dimension::relational_capacity,
    Dimension::potential_energy,     Dimension::temporal_availability, Dimension::contextual_fit,
};

/// Record field name, e.g. "potential_energy".
inline std::string_view field_name(Dimension d) {
  switch (d) {
    case Dimension::offensive_strength: return "offensive_strength";
    case Dimension::defensive_strength: return "defensive_strength";
    case Dimension::relational_capacity: return "relational_capacity";
    case Dimension::potential_energy: return "potential_energy";
    case Dimension::temporal_availability: return "temporal_availability";
    case Dimension::contextual_fit: return "contextual_fit";
  }
  return "";
}

/// Human-readable name, e.g. "Potential Energy".
inline std::string_view display_name(Dimension d) {
  switch (d) {
    case Dimension::offensive_strength: return "Offensive Strength";
    case Dimension::defensive_strength: return "Defensive Strength";
    case Dimension::relational_capacity: return "Relational Capacity";
    case Dimension::potential_energy: return "Potential Energy";
    case Dimension::temporal_availability: return "Temporal Availability";
    case Dimension::contextual_fit: return "Contextual Fit";
  }
  return "";
}

/// 6C strategic profile. Values live in [0, upper_bound]; construction
/// rejects anything outside rather than clamping.
class SixCProfile {
 public:
  static constexpr double kDefaultUpperBound = 5.0;

  static SixCProfile create(std::string label, const std::array<double, 6>& values,
                            std::optional<std::string> narrative_context = std::nullopt,
                            double upper_bound = kDefaultUpperBound) {
    if (is_blank(label)) throw Error(ErrorCode::invariant_violation, "scenario label is empty");
    if (!(upper_bound > 0.0) || !std::isfinite(upper_bound))
      throw Error(ErrorCode::invariant_violation, "scenario upper bound must be positive");
    for (std::size_t i = 0; i < values.size(); ++i) {
      double v = values[i];
      if (!std::isfinite(v) || v < 0.0 || v > upper_bound)
        throw Error(ErrorCode::invariant_violation,
                    fmt::format("{} = {} is outside [0, {}]", field_name(kDimensions[i]), v,
                                upper_bound));
    }
    if (narrative_context && is_blank(*narrative_context)) narrative_context.reset();
    SixCProfile p;
    p.label_ = std::move(label);
    p.values_ = values;
    p.context_ = std::move(narrative_context);
    p.upper_ = upper_bound;
    return p;
  }

  const std::string& label() const noexcept { return label_; }
  double value(Dimension d) const { return values_[static_cast<std::size_t>(d)]; }
  const std::array<double, 6>& values() const noexcept { return values_; }
  const std::optional<std::string>& narrative_context() const noexcept { return context_; }
  double upper_bound() const noexcept { return upper_; }

  bool operator==(const SixCProfile&) const = default;

 private:
  SixCProfile() = default;
  std::string label_;
  std::array<double, 6> values_{};
  std::optional<std::string> context_;
  double upper_ = kDefaultUpperBound;
};

inline nlohmann::json to_json(const SixCProfile& p) {
  nlohmann::json j;
  j["label"] = p.label();
  for (auto d : kDimensions) j[std::string(field_name(d))] = p.value(d);
  j["narrative_context"] = p.narrative_context() ? nlohmann::json(*p.narrative_context())
                                                 : nlohmann::json(nullptr);
  if (p.upper_bound() != SixCProfile::kDefaultUpperBound) j["upper_bound"] = p.upper_bound();
  return j;
}

inline SixCProfile profile_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "scenario must be a JSON object");
  auto label = j.find("label");
  if (label == j.end() || !label->is_string())
    throw Error(ErrorCode::parse_error, "scenario field 'label' must be a string");
  std::array<double, 6> values{};
  for (std::size_t i = 0; i < kDimensions.size(); ++i) {
    auto name = std::string(field_name(kDimensions[i]));
    auto it = j.find(name);
    if (it == j.end() || !it->is_number())
      throw Error(ErrorCode::parse_error, fmt::format("scenario field '{}' must be a number", name));
    values[i] = it->get<double>();
  }
  std::optional<std::string> context;
  if (auto it = j.find("narrative_context"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::parse_error, "'narrative_context' must be a string");
    context = it->get<std::string>();
  }
  double upper = j.value("upper_bound", SixCProfile::kDefaultUpperBound);
  return SixCProfile::create(label->get<std::string>(), values, std::move(context), upper);
}

inline SixCProfile load_scenario(const std::string& path) {
  auto text = read_file(path);
  try {
    return profile_from_json(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::parse_error, fmt::format("{}: {}", path, e.what()));
  } catch (const Error& e) {
    throw Error(e.code(), fmt::format("{}: {}", path, e.what()));
  }
}

/// Qualifier bucket edges; applied to the value rounded to two decimals.
struct QualifierBuckets {
  double low_below = 2.0;
  double moderate_below = 3.5;
  double high_below = 4.5;

  std::string_view qualify(double rounded) const {
    if (rounded < low_below) return "low";
    if (rounded < moderate_below) return "moderate";
    if (rounded < high_below) return "high";
    return "very high";
  }
};

inline double round2(double v) { return std::round(v * 100.0) / 100.0; }

/// "Offensive Strength is high (3.88 of 5); ...; Contextual Fit is very high
/// (4.55 of 5)." followed by the narrative context, when present.
inline std::string render_scenario_text(const SixCProfile& p, const QualifierBuckets& buckets = {}) {
  std::string out;
  for (std::size_t i = 0; i < kDimensions.size(); ++i) {
    auto d = kDimensions[i];
    double r = round2(p.value(d));
    if (i > 0) out += "; ";
    out += fmt::format("{} is {} ({:.2f} of {:g})", display_name(d), buckets.qualify(r), r,
                       p.upper_bound());
  }
  out += ".";
  if (p.narrative_context()) out += " " + std::string(trim(*p.narrative_context()));
  return out;
}

enum class ScenarioEncoder { composite_text, weighted_dimensions };

inline std::string_view to_string(ScenarioEncoder e) {
  return e == ScenarioEncoder::composite_text ? "composite_text" : "weighted_dimensions";
}

inline ScenarioEncoder parse_scenario_encoder(std::string_view s) {
  if (s == "composite_text") return ScenarioEncoder::composite_text;
  if (s == "weighted_dimensions") return ScenarioEncoder::weighted_dimensions;
  throw Error(ErrorCode::config_error, fmt::format("unknown scenario encoder '{}'", s));
}

/// composite_text: embed(render_scenario_text(p)).
/// weighted_dimensions: sum_d value_d * embed(display_name(d)) / sum_d value_d.
inline SemanticVector embed_scenario(const SixCProfile& p, const EmbeddingProvider& provider,
                                     ScenarioEncoder encoder = ScenarioEncoder::composite_text,
                                     const QualifierBuckets& buckets = {}) {
  if (encoder == ScenarioEncoder::composite_text) return provider.embed(render_scenario_text(p, buckets));

  double total = 0.0;
  for (double v : p.values()) total += v;
  if (total <= 0.0)
    throw Error(ErrorCode::invalid_input,
                "weighted_dimensions encoder needs at least one positive dimension value");
  std::vector<std::string> names;
  for (auto d : kDimensions) names.emplace_back(display_name(d));
  auto basis = provider.batch_embed(names);
  auto acc = SemanticVector::zeros(provider.dimension());
  for (std::size_t i = 0; i < basis.size(); ++i) acc = axpy(acc, p.values()[i] / total, basis[i]);
  return acc;
}

}  // namespace entangle
