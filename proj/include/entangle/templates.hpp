#pragma once

#include <fmt/format.h>

#include <filesystem>
#include <string>
#include <string_view>

#include "entangle/error.hpp"
#include "entangle/text.hpp"

namespace entangle {

enum class FramingKind { dominant, contrarian, minimalist };

inline constexpr FramingKind kFramingKinds[] = {FramingKind::dominant, FramingKind::contrarian,
                                                FramingKind::minimalist};

inline std::string_view to_string(FramingKind k) {
  switch (k) {
    case FramingKind::dominant: return "dominant";
    case FramingKind::contrarian: return "contrarian";
    case FramingKind::minimalist: return "minimalist";
  }
  return "dominant";
}

inline FramingKind parse_framing_kind(std::string_view s) {
  for (auto k : kFramingKinds)
    if (to_string(k) == s) return k;
  throw Error(ErrorCode::invariant_violation,
              fmt::format("framing: unknown kind '{}' (expected dominant, contrarian or minimalist)", s));
}

/// Prompt text fragments. Mirrors templates/v1/*.txt; a test keeps them equal.
struct TemplateSet {
  std::string version = "v1";
  std::string system_message;
  std::string dominant;
  std::string contrarian;
  std::string minimalist;
  std::string output_contract;
  std::string baseline_instruction;

  const std::string& directive(FramingKind k) const {
    switch (k) {
      case FramingKind::dominant: return dominant;
      case FramingKind::contrarian: return contrarian;
      case FramingKind::minimalist: return minimalist;
    }
    return dominant;
  }

  std::string template_id(FramingKind k) const { return fmt::format("{}/{}", to_string(k), version); }

  bool operator==(const TemplateSet&) const = default;
};

inline const TemplateSet& builtin_templates() {
  static const TemplateSet set{
      "v1",
      "You are a strategy advisor. You receive a scenario profile, a set of conditional heuristics with "
      "their activation scores, and a matrix of their pairwise semantic interference. Compose the "
      "heuristics into one coherent strategic narrative: let strongly interfering heuristics reinforce "
      "each other, reconcile tensions instead of choosing between them, and keep the reasoning logically "
      "consistent and the style unified.",
      "Framing: dominant. Emphasize strength, control, and proactive positioning. Write with confidence, "
      "signal resolve to stakeholders and competitors, and present the organization as the party that "
      "sets the terms.",
      "Framing: contrarian. Challenge conventional wisdom and favor unconventional approaches. Put "
      "distance between this strategy and what competitors and observers expect, and turn apparent "
      "weaknesses into sources of surprise.",
      "Framing: minimalist. Reduce the strategy to its essential elements and favor clarity over "
      "elaboration. Use a few short, memorable principles that a leader under pressure can apply at once.",
      "Output: a single strategic narrative in prose. Do not list, number, or restate the heuristics one "
      "by one; integrate them.",
      "Present these principles to the decision-maker as given, with minimal connecting language.",
  };
  return set;
}

/// Reads system.txt, dominant.txt, contrarian.txt, minimalist.txt,
/// output_contract.txt and baseline_instruction.txt from dir. The directory
/// name becomes the version.
inline TemplateSet load_template_set(const std::filesystem::path& dir) {
  auto read = [&](const char* name) {
    auto content = read_file((dir / name).string());
    auto text = std::string(trim(content));
    if (text.empty()) throw Error(ErrorCode::config_error, fmt::format("{}: template is empty", (dir / name).string()));
    return text;
  };
  TemplateSet t;
  t.version = dir.filename().empty() ? dir.parent_path().filename().string() : dir.filename().string();
  t.system_message = read("system.txt");
  t.dominant = read("dominant.txt");
  t.contrarian = read("contrarian.txt");
  t.minimalist = read("minimalist.txt");
  t.output_contract = read("output_contract.txt");
  t.baseline_instruction = read("baseline_instruction.txt");
  return t;
}

}  // namespace entangle
