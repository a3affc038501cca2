#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "entangle/axiom.hpp"
#include "entangle/error.hpp"
#include "entangle/generation.hpp"
#include "entangle/interference.hpp"
#include "entangle/scenario.hpp"
#include "entangle/templates.hpp"

namespace entangle {

inline constexpr std::size_t kMaxSelection = 16;
inline constexpr std::size_t kBaselineTopN = 3;

struct Framing {
  FramingKind kind = FramingKind::dominant;
  std::string template_id;

  static Framing of(FramingKind kind, const TemplateSet& templates = builtin_templates()) {
    return {kind, templates.template_id(kind)};
  }

  bool operator==(const Framing&) const = default;
};

struct SelectedHeuristic {
  Axiom axiom;
  double alpha = 0.0;

  bool operator==(const SelectedHeuristic&) const = default;
};

struct SelectionRule {
  std::optional<std::size_t> top_n;
  std::optional<double> threshold;
};

struct Selection {
  std::vector<SelectedHeuristic> items;
  std::vector<std::string> warnings;

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    for (const auto& s : items) out.push_back(s.axiom.id);
    return out;
  }
};

/// Threshold keeps every axiom with alpha >= threshold; top_n then caps the
/// count. Order is alpha descending, id ascending.
inline Selection select_heuristics(const ActivationSet& act, const AxiomLibrary& lib, const SelectionRule& rule) {
  if ((!rule.top_n || *rule.top_n == 0) && !rule.threshold)
    throw Error(ErrorCode::invalid_input, "selection needs top_n >= 1 or a threshold");
  if (rule.threshold && !std::isfinite(*rule.threshold))
    throw Error(ErrorCode::invalid_input, "selection threshold must be finite");
  Selection out;
  auto entries = act.entries;
  std::sort(entries.begin(), entries.end(), activation_order);
  std::size_t limit = entries.size();
  if (rule.top_n && *rule.top_n > 0) {
    limit = *rule.top_n;
    if (limit > lib.size()) {
      out.warnings.push_back(fmt::format("top_n {} exceeds library size {}; clamped", limit, lib.size()));
      limit = lib.size();
    }
  }
  for (const auto& e : entries) {
    if (out.items.size() >= limit) break;
    if (rule.threshold && e.alpha < *rule.threshold) break;
    const Axiom* a = lib.find(e.axiom_id);
    if (!a) throw Error(ErrorCode::invalid_input, fmt::format("activated axiom '{}' is not in the library", e.axiom_id));
    out.items.push_back({*a, e.alpha});
  }
  if (out.items.size() > kMaxSelection) {
    out.warnings.push_back(fmt::format("selection of {} capped at {}", out.items.size(), kMaxSelection));
    out.items.resize(kMaxSelection);
  }
  if (out.items.empty()) out.warnings.push_back("selection is empty");
  return out;
}

/// Prompt inputs. Baseline requests carry no framing and may carry an empty
/// matrix slice.
struct SynthesisRequest {
  explicit SynthesisRequest(SixCProfile s) : scenario(std::move(s)) {}

  SynthesisMode mode = SynthesisMode::entangled;
  SixCProfile scenario;
  std::vector<SelectedHeuristic> selected;
  SquareMatrix matrix_slice;
  std::optional<Framing> framing;
  std::size_t top_n = 3;
  GenerationConfig generation;

  std::vector<std::string> prescriptions() const {
    std::vector<std::string> out;
    for (const auto& s : selected) out.push_back(s.axiom.prescription);
    return out;
  }

  void validate() const {
    if (selected.empty()) throw Error(ErrorCode::invariant_violation, "selected: at least one heuristic is required");
    if (selected.size() > kMaxSelection)
      throw Error(ErrorCode::invariant_violation,
                  fmt::format("selected: {} heuristics exceed the cap of {}", selected.size(), kMaxSelection));
    for (std::size_t i = 1; i < selected.size(); ++i) {
      ActivationEntry prev{selected[i - 1].axiom.id, selected[i - 1].alpha};
      ActivationEntry cur{selected[i].axiom.id, selected[i].alpha};
      if (!activation_order(prev, cur))
        throw Error(ErrorCode::invariant_violation, "selected: must be sorted by alpha descending");
    }
    bool slice_ok = matrix_slice.size() == selected.size() ||
                    (mode == SynthesisMode::baseline && matrix_slice.size() == 0);
    if (!slice_ok)
      throw Error(ErrorCode::invariant_violation,
                  fmt::format("matrix_slice: expected {}x{} values, got {}x{}", selected.size(), selected.size(),
                              matrix_slice.size(), matrix_slice.size()));
    if (mode == SynthesisMode::entangled && !framing)
      throw Error(ErrorCode::invariant_violation, "framing: required for entangled synthesis");
    if (top_n == 0) throw Error(ErrorCode::invariant_violation, "top_n: must be at least 1");
    generation.validate();
  }
};

namespace detail {

/// Two decimals, with negative zero printed as 0.00.
inline std::string fixed2(double v) {
  auto s = fmt::format("{:.2f}", v);
  return s == "-0.00" ? "0.00" : s;
}

}  // namespace detail

/// Entangled user prompt, in order: scenario, numbered heuristics with
/// alpha, matrix rows, framing directive, output contract.
inline PromptPair build_prompt(const SynthesisRequest& req, const TemplateSet& templates = builtin_templates()) {
  req.validate();
  PromptPair p;
  p.system = req.generation.system_message;
  std::string user = fmt::format("Scenario: {}\n{}\n\n", req.scenario.label(), render_scenario_text(req.scenario));
  if (req.mode == SynthesisMode::baseline) {
    user += concatenation_text(req.prescriptions()) + "\n\n" + templates.baseline_instruction + "\n";
    p.user = std::move(user);
    return p;
  }
  const auto& framing = *req.framing;
  if (framing.template_id != templates.template_id(framing.kind))
    throw Error(ErrorCode::invariant_violation,
                fmt::format("framing: template '{}' is not available (loaded set is '{}')", framing.template_id,
                            templates.template_id(framing.kind)));
  user += "Activated heuristics (activation in brackets):\n";
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < req.selected.size(); ++i) {
    const auto& s = req.selected[i];
    user += fmt::format("{}. {} [{}]\n", i + 1, render_full_text(s.axiom), detail::fixed2(s.alpha));
    ids.push_back(s.axiom.id);
  }
  user += fmt::format("\nInterference matrix (row/column order: {}):\n", fmt::join(ids, ", "));
  for (std::size_t r = 0; r < req.matrix_slice.size(); ++r) {
    std::vector<std::string> cells;
    for (std::size_t c = 0; c < req.matrix_slice.size(); ++c) cells.push_back(detail::fixed2(req.matrix_slice(r, c)));
    user += fmt::format("{}\n", fmt::join(cells, " "));
  }
  user += "\n" + templates.directive(framing.kind) + "\n\n" + templates.output_contract + "\n";
  p.user = std::move(user);
  return p;
}

struct ProviderMetadata {
  std::string model;
  int prompt_tokens = 0;
  int completion_tokens = 0;
  int attempts = 1;

  bool operator==(const ProviderMetadata&) const = default;
};

struct SynthesisResult {
  std::string narrative;
  SynthesisMode mode = SynthesisMode::entangled;
  SynthesisRequest request_echo;
  PromptPair prompt;
  ProviderMetadata provider_metadata;
  std::vector<std::string> warnings;
  nlohmann::json diagnostics;  // null unless the caller attaches field summaries
};

inline SynthesisResult synthesize(const SynthesisRequest& req, const TextGenerator& generator,
                                  const TemplateSet& templates = builtin_templates()) {
  auto prompt = build_prompt(req, templates);
  GenerationInput in{prompt, req.generation, req.mode,
                     req.framing ? std::optional<FramingKind>(req.framing->kind) : std::nullopt,
                     req.prescriptions()};
  auto out = generator.generate(in);
  if (is_blank(out.text))
    throw Error(ErrorCode::empty_narrative, fmt::format("{} returned an empty narrative", generator.model_name()));
  SynthesisResult result{std::move(out.text), req.mode, req, std::move(prompt),
                         {out.model, out.prompt_tokens, out.completion_tokens, out.attempts}, {}, nullptr};
  return result;
}

/// Baseline request from an activation set: the top three axioms, fewer
/// (with a warning) when the library is smaller.
inline SynthesisRequest baseline_request(const SixCProfile& scenario, const AxiomLibrary& lib,
                                         const ActivationSet& act, const GenerationConfig& generation,
                                         std::vector<std::string>* warnings = nullptr) {
  auto sel = select_heuristics(act, lib, {kBaselineTopN, std::nullopt});
  if (warnings) warnings->insert(warnings->end(), sel.warnings.begin(), sel.warnings.end());
  SynthesisRequest req(scenario);
  req.mode = SynthesisMode::baseline;
  req.selected = std::move(sel.items);
  req.top_n = kBaselineTopN;
  req.generation = generation;
  return req;
}

inline SynthesisResult run_baseline(const SixCProfile& scenario, const AxiomLibrary& lib, const ActivationSet& act,
                                    const TextGenerator& generator, const GenerationConfig& generation,
                                    const TemplateSet& templates = builtin_templates()) {
  std::vector<std::string> warnings;
  auto req = baseline_request(scenario, lib, act, generation, &warnings);
  auto result = synthesize(req, generator, templates);
  result.warnings = std::move(warnings);
  return result;
}

inline SynthesisResult run_baseline(const SixCProfile& scenario, const AxiomLibrary& lib,
                                    const EmbeddingProvider& provider, const TextGenerator& generator,
                                    const GenerationConfig& generation,
                                    const TemplateSet& templates = builtin_templates()) {
  auto act = compute_activations(embed_scenario(scenario, provider), lib, provider, scenario.label());
  return run_baseline(scenario, lib, act, generator, generation, templates);
}

// ---------------------------------------------------------------------------
// Records

inline nlohmann::json to_json(const SynthesisRequest& r) {
  nlohmann::json selected = nlohmann::json::array();
  for (const auto& s : r.selected) selected.push_back({{"axiom", axiom_to_json(s.axiom)}, {"alpha", s.alpha}});
  nlohmann::json j{{"mode", to_string(r.mode)},
                   {"scenario", to_json(r.scenario)},
                   {"selected", std::move(selected)},
                   {"matrix_slice", rows_to_json(r.matrix_slice)},
                   {"top_n", r.top_n},
                   {"generation", to_json(r.generation)}};
  j["framing"] = r.framing ? nlohmann::json{{"kind", to_string(r.framing->kind)}, {"template_id", r.framing->template_id}}
                           : nlohmann::json(nullptr);
  return j;
}

inline SynthesisRequest synthesis_request_from_json(const nlohmann::json& j) {
  try {
    SynthesisRequest r(profile_from_json(j.at("scenario")));
    r.mode = parse_synthesis_mode(j.value("mode", "entangled"));
    for (const auto& s : j.at("selected"))
      r.selected.push_back({axiom_from_json(s.at("axiom")), s.at("alpha").get<double>()});
    const auto& rows = j.at("matrix_slice");
    r.matrix_slice = SquareMatrix(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      if (rows[i].size() != rows.size()) throw Error(ErrorCode::invariant_violation, "matrix_slice: not square");
      for (std::size_t k = 0; k < rows.size(); ++k) r.matrix_slice(i, k) = rows[i][k].get<double>();
    }
    if (j.contains("framing") && !j["framing"].is_null())
      r.framing = Framing{parse_framing_kind(j["framing"].at("kind").get<std::string>()),
                          j["framing"].at("template_id").get<std::string>()};
    r.top_n = j.value("top_n", std::size_t{3});
    if (j.contains("generation")) r.generation = generation_config_from_json(j["generation"]);
    r.validate();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, fmt::format("synthesis request: {}", e.what()));
  }
}

inline nlohmann::json to_json(const SynthesisResult& r) {
  nlohmann::json j{{"narrative", r.narrative},
          {"mode", to_string(r.mode)},
          {"request_echo", to_json(r.request_echo)},
          {"prompt", {{"system", r.prompt.system}, {"user", r.prompt.user}}},
          {"provider_metadata",
           {{"model", r.provider_metadata.model},
            {"prompt_tokens", r.provider_metadata.prompt_tokens},
            {"completion_tokens", r.provider_metadata.completion_tokens},
            {"attempts", r.provider_metadata.attempts}}},
          {"warnings", r.warnings}};
  if (!r.diagnostics.is_null()) j["diagnostics"] = r.diagnostics;
  return j;
}

}  // namespace entangle
