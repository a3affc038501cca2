#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "entangle/axiom.hpp"
#include "entangle/embedding.hpp"
#include "entangle/error.hpp"
#include "entangle/text.hpp"

namespace entangle {

inline constexpr std::string_view kSentenceSplitterId = "punct-abbrev-v1";

enum class CoverageMode { sentence_max, whole_text };
enum class NoveltyMode { mean, max };

inline std::string_view to_string(CoverageMode m) { return m == CoverageMode::sentence_max ? "sentence_max" : "whole_text"; }
inline std::string_view to_string(NoveltyMode m) { return m == NoveltyMode::mean ? "mean" : "max"; }

inline CoverageMode parse_coverage_mode(std::string_view s) {
  if (s == "sentence_max") return CoverageMode::sentence_max;
  if (s == "whole_text") return CoverageMode::whole_text;
  throw Error(ErrorCode::config_error, fmt::format("unknown coverage mode '{}'", s));
}

inline NoveltyMode parse_novelty_mode(std::string_view s) {
  if (s == "mean") return NoveltyMode::mean;
  if (s == "max") return NoveltyMode::max;
  throw Error(ErrorCode::config_error, fmt::format("unknown novelty mode '{}'", s));
}

struct EvaluationConfig {
  double coverage_threshold = 0.4;
  std::size_t min_sentences_for_coherence = 2;
  std::string sentence_splitter = std::string(kSentenceSplitterId);
  CoverageMode coverage_mode = CoverageMode::sentence_max;
  NoveltyMode novelty_mode = NoveltyMode::mean;

  void validate() const {
    if (!(coverage_threshold > 0.0 && coverage_threshold < 1.0))
      throw Error(ErrorCode::config_error,
                  fmt::format("coverage_threshold must be in (0, 1), got {}", coverage_threshold));
    if (min_sentences_for_coherence < 2)
      throw Error(ErrorCode::config_error, "min_sentences_for_coherence must be at least 2");
    if (sentence_splitter != kSentenceSplitterId)
      throw Error(ErrorCode::config_error, fmt::format("unknown sentence splitter '{}'", sentence_splitter));
  }

  bool operator==(const EvaluationConfig&) const = default;
};

inline nlohmann::json to_json(const EvaluationConfig& c) {
  return {{"coverage_threshold", c.coverage_threshold},
          {"min_sentences_for_coherence", c.min_sentences_for_coherence},
          {"sentence_splitter", c.sentence_splitter},
          {"coverage_mode", to_string(c.coverage_mode)},
          {"novelty_mode", to_string(c.novelty_mode)}};
}

inline EvaluationConfig evaluation_config_from_json(const nlohmann::json& j, EvaluationConfig base = {}) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "evaluation config: expected an object");
  for (const auto& [key, value] : j.items()) {
    if (key == "coverage_threshold") base.coverage_threshold = value.get<double>();
    else if (key == "min_sentences_for_coherence") base.min_sentences_for_coherence = value.get<std::size_t>();
    else if (key == "sentence_splitter") base.sentence_splitter = value.get<std::string>();
    else if (key == "coverage_mode") base.coverage_mode = parse_coverage_mode(value.get<std::string>());
    else if (key == "novelty_mode") base.novelty_mode = parse_novelty_mode(value.get<std::string>());
    else throw Error(ErrorCode::invalid_input, fmt::format("evaluation config: unknown field '{}'", key));
  }
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------
// Sentence splitting

inline constexpr std::array<std::string_view, 16> kAbbreviations{
    "e.g.", "i.e.", "etc.", "vs.", "cf.", "mr.", "mrs.", "ms.", "dr.", "prof.", "inc.", "ltd.", "co.", "st.", "no.",
    "u.s."};

/// Splits after . ! ? when followed by whitespace (or the end), keeping the
/// punctuation and any closing quotes or brackets. A blank line also ends a
/// sentence. Known abbreviations do not end a sentence.
inline std::vector<std::string> split_sentences(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  auto flush = [&](std::size_t end) {
    auto piece = trim(text.substr(start, end - start));
    if (!piece.empty()) out.emplace_back(piece);
    start = end;
  };
  auto is_closer = [](char c) { return c == '"' || c == '\'' || c == ')' || c == ']'; };
  for (std::size_t i = 0; i < text.size(); ++i) {
    char c = text[i];
    if (c == '\n') {
      std::size_t k = i + 1;
      while (k < text.size() && (text[k] == ' ' || text[k] == '\t' || text[k] == '\r')) ++k;
      if (k < text.size() && text[k] == '\n') {
        flush(i);
        i = k;
      }
      continue;
    }
    if (c != '.' && c != '!' && c != '?') continue;
    std::size_t end = i + 1;
    while (end < text.size() && (text[end] == '.' || text[end] == '!' || text[end] == '?')) ++end;
    while (end < text.size() && is_closer(text[end])) ++end;
    if (end < text.size() && !is_space(text[end])) {
      i = end - 1;
      continue;
    }
    if (c == '.') {
      std::size_t word_start = i;
      while (word_start > start && !is_space(text[word_start - 1])) --word_start;
      auto word = to_lower(text.substr(word_start, i + 1 - word_start));
      while (!word.empty() && (word.front() == '(' || word.front() == '"' || word.front() == '\'')) word.erase(0, 1);
      if (std::find(kAbbreviations.begin(), kAbbreviations.end(), word) != kAbbreviations.end()) {
        i = end - 1;
        continue;
      }
    }
    flush(end);
    i = end - 1;
  }
  flush(text.size());
  return out;
}

// ---------------------------------------------------------------------------
// Metrics

namespace detail {

/// Order-independent mean: values are summed in ascending order.
inline double stable_mean(std::vector<double> values) {
  std::sort(values.begin(), values.end());
  double s = 0.0;
  for (double v : values) s += v;
  return s / static_cast<double>(values.size());
}

inline std::vector<SemanticVector> embed_axioms(const std::vector<Axiom>& inputs, const EmbeddingProvider& provider) {
  std::vector<std::string> texts;
  for (const auto& a : inputs) texts.push_back(render_full_text(a));
  return provider.batch_embed(texts);
}

}  // namespace detail

struct AxiomCoverage {
  std::string axiom_id;
  std::optional<double> best_similarity;  // empty when the synthesis has no sentences
  bool covered = false;

  bool operator==(const AxiomCoverage&) const = default;
};

struct CoverageResult {
  double score = 0.0;
  std::vector<AxiomCoverage> per_axiom;
};

/// An axiom is covered when its best similarity to the synthesis (max over
/// sentences, or the whole text) reaches the threshold.
inline CoverageResult coverage(std::string_view synthesis, const std::vector<Axiom>& inputs,
                               const EmbeddingProvider& provider, const EvaluationConfig& cfg = {}) {
  cfg.validate();
  if (inputs.empty()) throw Error(ErrorCode::invalid_input, "coverage needs at least one input axiom");
  CoverageResult out;
  std::vector<std::string> units;
  if (cfg.coverage_mode == CoverageMode::sentence_max) units = split_sentences(synthesis);
  else if (!is_blank(synthesis)) units.emplace_back(trim(synthesis));
  auto unit_vecs = provider.batch_embed(units);
  auto axiom_vecs = detail::embed_axioms(inputs, provider);
  std::size_t covered = 0;
  for (std::size_t a = 0; a < inputs.size(); ++a) {
    AxiomCoverage row{inputs[a].id, std::nullopt, false};
    for (const auto& u : unit_vecs) {
      double s = cosine(axiom_vecs[a], u);
      if (!row.best_similarity || s > *row.best_similarity) row.best_similarity = s;
    }
    row.covered = row.best_similarity && *row.best_similarity >= cfg.coverage_threshold;
    covered += row.covered ? 1 : 0;
    out.per_axiom.push_back(std::move(row));
  }
  out.score = static_cast<double>(covered) / static_cast<double>(inputs.size());
  return out;
}

/// Mean cosine over unordered sentence pairs; empty when there are fewer
/// than min_sentences_for_coherence sentences.
inline std::optional<double> coherence(std::string_view synthesis, const EmbeddingProvider& provider,
                                       const EvaluationConfig& cfg = {}) {
  cfg.validate();
  auto sentences = split_sentences(synthesis);
  if (sentences.size() < cfg.min_sentences_for_coherence) return std::nullopt;
  auto vecs = provider.batch_embed(sentences);
  std::vector<double> sims;
  for (std::size_t i = 0; i < vecs.size(); ++i)
    for (std::size_t j = i + 1; j < vecs.size(); ++j) sims.push_back(cosine(vecs[i], vecs[j]));
  return detail::stable_mean(std::move(sims));
}

/// 1 - mean (or max) cosine between the whole synthesis and each input,
/// clamped to [0, 2].
inline double novelty(std::string_view synthesis, const std::vector<Axiom>& inputs, const EmbeddingProvider& provider,
                      const EvaluationConfig& cfg = {}) {
  cfg.validate();
  if (inputs.empty()) throw Error(ErrorCode::invalid_input, "novelty needs at least one input axiom");
  if (is_blank(synthesis)) throw Error(ErrorCode::invalid_input, "novelty of an empty synthesis is undefined");
  auto whole = provider.embed(synthesis);
  auto axiom_vecs = detail::embed_axioms(inputs, provider);
  std::vector<double> sims;
  for (const auto& v : axiom_vecs) sims.push_back(cosine(whole, v));
  double agg = cfg.novelty_mode == NoveltyMode::mean ? detail::stable_mean(sims) : *std::max_element(sims.begin(), sims.end());
  return std::clamp(1.0 - agg, 0.0, 2.0);
}

// ---------------------------------------------------------------------------
// Reports

struct EvaluationReport {
  std::string variant_label;
  std::optional<double> coverage;
  std::optional<double> coherence;
  double novelty = 0.0;
  std::vector<AxiomCoverage> per_axiom;
  std::size_t sentence_count = 0;
  EvaluationConfig config;
  std::optional<double> human_depth;  // manual entry only
};

inline EvaluationReport evaluate(std::string_view synthesis, const std::vector<Axiom>& inputs,
                                 const EmbeddingProvider& provider, const EvaluationConfig& cfg = {},
                                 std::string variant_label = "synthesis") {
  if (is_blank(synthesis)) throw Error(ErrorCode::invalid_input, "synthesis text is empty");
  EvaluationReport r;
  r.variant_label = std::move(variant_label);
  auto cov = coverage(synthesis, inputs, provider, cfg);
  r.coverage = cov.score;
  r.per_axiom = std::move(cov.per_axiom);
  r.coherence = coherence(synthesis, provider, cfg);
  r.novelty = novelty(synthesis, inputs, provider, cfg);
  r.sentence_count = split_sentences(synthesis).size();
  r.config = cfg;
  return r;
}

namespace detail {

inline nlohmann::json optional_number(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> read_optional(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<double>();
}

}  // namespace detail

inline nlohmann::json to_json(const EvaluationReport& r) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& p : r.per_axiom)
    per.push_back({{"axiom_id", p.axiom_id},
                   {"best_similarity", detail::optional_number(p.best_similarity)},
                   {"covered", p.covered}});
  return {{"variant_label", r.variant_label},
          {"coverage", detail::optional_number(r.coverage)},
          {"coherence", detail::optional_number(r.coherence)},
          {"novelty", r.novelty},
          {"per_axiom", std::move(per)},
          {"sentence_count", r.sentence_count},
          {"config", to_json(r.config)},
          {"human_depth", detail::optional_number(r.human_depth)}};
}

inline EvaluationReport evaluation_report_from_json(const nlohmann::json& j) {
  try {
    EvaluationReport r;
    r.variant_label = j.at("variant_label").get<std::string>();
    r.coverage = detail::read_optional(j, "coverage");
    r.coherence = detail::read_optional(j, "coherence");
    r.novelty = j.at("novelty").get<double>();
    if (j.contains("per_axiom"))
      for (const auto& p : j["per_axiom"])
        r.per_axiom.push_back({p.at("axiom_id").get<std::string>(), detail::read_optional(p, "best_similarity"),
                               p.at("covered").get<bool>()});
    r.sentence_count = j.value("sentence_count", std::size_t{0});
    if (j.contains("config")) r.config = evaluation_config_from_json(j["config"]);
    r.human_depth = detail::read_optional(j, "human_depth");
    if (r.coverage && (*r.coverage < 0.0 || *r.coverage > 1.0))
      throw Error(ErrorCode::invariant_violation, "coverage must be in [0, 1]");
    if (r.coherence && (*r.coherence < -1.0 || *r.coherence > 1.0))
      throw Error(ErrorCode::invariant_violation, "coherence must be in [-1, 1]");
    if (r.novelty < 0.0 || r.novelty > 2.0) throw Error(ErrorCode::invariant_violation, "novelty must be in [0, 2]");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, fmt::format("evaluation report: {}", e.what()));
  }
}

// ---------------------------------------------------------------------------
// Comparison and radar data

struct MetricDelta {
  std::string metric;
  std::optional<double> entangled;
  std::optional<double> baseline;
  std::optional<double> delta;    // entangled - baseline
  std::optional<double> percent;  // 100 * delta / |baseline|; empty when baseline is 0
};

struct ComparisonRecord {
  std::string entangled_label;
  std::string baseline_label;
  std::vector<MetricDelta> metrics;

  const MetricDelta& metric(std::string_view name) const {
    for (const auto& m : metrics)
      if (m.metric == name) return m;
    throw Error(ErrorCode::not_found, fmt::format("no metric '{}'", name));
  }
};

inline ComparisonRecord compare(const EvaluationReport& entangled, const EvaluationReport& baseline) {
  if (!(entangled.config == baseline.config))
    throw Error(ErrorCode::config_error, "reports were produced under different evaluation configs");
  auto row = [](std::string name, std::optional<double> e, std::optional<double> b) {
    MetricDelta m{std::move(name), e, b, std::nullopt, std::nullopt};
    if (e && b) {
      m.delta = *e - *b;
      if (*b != 0.0) m.percent = 100.0 * *m.delta / std::abs(*b);
    }
    return m;
  };
  ComparisonRecord out{entangled.variant_label, baseline.variant_label, {}};
  out.metrics.push_back(row("coverage", entangled.coverage, baseline.coverage));
  out.metrics.push_back(row("coherence", entangled.coherence, baseline.coherence));
  out.metrics.push_back(row("novelty", entangled.novelty, baseline.novelty));
  if (entangled.human_depth || baseline.human_depth)
    out.metrics.push_back(row("human_depth", entangled.human_depth, baseline.human_depth));
  return out;
}

inline nlohmann::json to_json(const ComparisonRecord& c) {
  nlohmann::json metrics = nlohmann::json::array();
  for (const auto& m : c.metrics)
    metrics.push_back({{"metric", m.metric},
                       {"entangled", detail::optional_number(m.entangled)},
                       {"baseline", detail::optional_number(m.baseline)},
                       {"delta", detail::optional_number(m.delta)},
                       {"percent", detail::optional_number(m.percent)}});
  return {{"entangled", c.entangled_label}, {"baseline", c.baseline_label}, {"metrics", std::move(metrics)}};
}

inline constexpr std::array<std::string_view, 3> kRadarAxes{"coverage", "coherence", "novelty"};

struct RadarSeries {
  std::string label;
  std::array<std::optional<double>, 3> values;
};

struct RadarData {
  std::vector<RadarSeries> series;
};

/// One series per report, in input order.
inline RadarData radar_export(const std::vector<EvaluationReport>& reports) {
  if (reports.empty()) throw Error(ErrorCode::invalid_input, "radar export needs at least one report");
  RadarData out;
  for (const auto& r : reports) out.series.push_back({r.variant_label, {r.coverage, r.coherence, r.novelty}});
  return out;
}

inline nlohmann::json to_json(const RadarData& d) {
  nlohmann::json series = nlohmann::json::array();
  for (const auto& s : d.series) {
    nlohmann::json values = nlohmann::json::array();
    for (const auto& v : s.values) values.push_back(detail::optional_number(v));
    series.push_back({{"label", s.label}, {"values", std::move(values)}});
  }
  return {{"axes", kRadarAxes},
          {"ranges", {{0.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}}},
          {"series", std::move(series)}};
}

/// Radar chart. Each axis is scaled to its metric range; a missing value is
/// drawn at the centre and marked "N/A".
inline std::string radar_svg(const RadarData& d) {
  constexpr double size = 400.0, cx = 200.0, cy = 210.0, radius = 140.0;
  constexpr std::array<std::pair<double, double>, 3> ranges{{{0.0, 1.0}, {-1.0, 1.0}, {0.0, 2.0}}};
  constexpr std::array<const char*, 6> palette{"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  auto point = [&](std::size_t axis, double frac) {
    double angle = -std::numbers::pi / 2.0 + axis * 2.0 * std::numbers::pi / 3.0;
    return std::pair{cx + radius * frac * std::cos(angle), cy + radius * frac * std::sin(angle)};
  };
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" viewBox=\"0 0 {0} {1}\" "
      "font-family=\"sans-serif\" font-size=\"12\">\n",
      size, size + 20.0 * static_cast<double>(d.series.size()));
  for (double ring : {0.25, 0.5, 0.75, 1.0}) {
    std::string pts;
    for (std::size_t a = 0; a < 3; ++a) {
      auto [x, y] = point(a, ring);
      pts += fmt::format("{:.2f},{:.2f} ", x, y);
    }
    svg += fmt::format("  <polygon points=\"{}\" fill=\"none\" stroke=\"#ccc\"/>\n", trim(pts));
  }
  for (std::size_t a = 0; a < 3; ++a) {
    auto [x, y] = point(a, 1.0);
    auto [lx, ly] = point(a, 1.18);
    svg += fmt::format("  <line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"#999\"/>\n", cx, cy, x, y);
    svg += fmt::format("  <text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{} [{}, {}]</text>\n", lx, ly,
                       kRadarAxes[a], ranges[a].first, ranges[a].second);
  }
  for (std::size_t s = 0; s < d.series.size(); ++s) {
    const auto& series = d.series[s];
    const char* colour = palette[s % palette.size()];
    std::string pts;
    std::vector<std::string> missing;
    for (std::size_t a = 0; a < 3; ++a) {
      double frac = 0.0;
      if (series.values[a]) {
        auto [lo, hi] = ranges[a];
        frac = std::clamp((*series.values[a] - lo) / (hi - lo), 0.0, 1.0);
      } else {
        missing.emplace_back(kRadarAxes[a]);
      }
      auto [x, y] = point(a, frac);
      pts += fmt::format("{:.2f},{:.2f} ", x, y);
    }
    svg += fmt::format("  <polygon points=\"{}\" fill=\"{}\" fill-opacity=\"0.2\" stroke=\"{}\" stroke-width=\"2\"/>\n",
                       trim(pts), colour, colour);
    std::string legend = series.label;
    for (const auto& m : missing) legend += fmt::format(" ({} N/A)", m);
    std::string escaped;
    for (char c : legend) {
      if (c == '<') escaped += "&lt;";
      else if (c == '>') escaped += "&gt;";
      else if (c == '&') escaped += "&amp;";
      else escaped += c;
    }
    svg += fmt::format("  <text x=\"10\" y=\"{:.0f}\" fill=\"{}\">{}</text>\n", size + 20.0 * static_cast<double>(s), colour,
                       escaped);
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace entangle
