#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_set>
#include <utility>
#include <vector>

#include <json.hpp>

#include "entangle/error.hpp"
#include "entangle/text.hpp"

namespace entangle {

enum class Strategist { machiavelli, sun_tzu, clausewitz, liddell_hart, martin, custom };
enum class Tradition { military_political, corporate };

inline constexpr std::array<std::pair<Strategist, std::string_view>, 6> kStrategistNames{{
    {Strategist::machiavelli, "Machiavelli"},
    {Strategist::sun_tzu, "SunTzu"},
    {Strategist::clausewitz, "Clausewitz"},
    {Strategist::liddell_hart, "LiddellHart"},
    {Strategist::martin, "Martin"},
    {Strategist::custom, "custom"},
}};

inline std::string_view to_string(Strategist s) {
  for (const auto& [value, name] : kStrategistNames)
    if (value == s) return name;
  return "custom";
}

inline Strategist parse_strategist(std::string_view name) {
  for (const auto& [value, n] : kStrategistNames)
    if (n == name) return value;
  throw Error(ErrorCode::invalid_input, fmt::format("unknown strategist '{}'", name));
}

inline std::string_view to_string(Tradition t) {
  return t == Tradition::corporate ? "corporate" : "military_political";
}

inline Tradition parse_tradition(std::string_view name) {
  if (name == "military_political") return Tradition::military_political;
  if (name == "corporate") return Tradition::corporate;
  throw Error(ErrorCode::invalid_input, fmt::format("unknown tradition '{}'", name));
}

/// Tradition a named strategist belongs to; custom strategists may declare either.
inline std::optional<Tradition> natural_tradition(Strategist s) {
  switch (s) {
    case Strategist::machiavelli:
    case Strategist::sun_tzu:
    case Strategist::clausewitz:
    case Strategist::liddell_hart: return Tradition::military_political;
    case Strategist::martin: return Tradition::corporate;
    case Strategist::custom: return std::nullopt;
  }
  return std::nullopt;
}

/// The eight cross-tradition themes. Labels outside this list must be
/// registered as custom themes before use.
inline constexpr std::array<std::string_view, 8> kThemeTaxonomy{
    "flexibility_under_uncertainty", "narrative_control",      "indirect_maneuver",
    "timing_and_tempo",              "resource_optimization",  "structural_repositioning",
    "coalition_management",          "crisis_transformation",
};

inline bool is_taxonomy_theme(std::string_view label) {
  return std::find(kThemeTaxonomy.begin(), kThemeTaxonomy.end(), label) != kThemeTaxonomy.end();
}

/// Lowercase identifier-style label: [a-z0-9_-]+.
inline bool is_well_formed_label(std::string_view label) {
  if (label.empty()) return false;
  return std::all_of(label.begin(), label.end(), [](char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '-';
  });
}

struct Axiom {
  std::string id;
  Strategist strategist = Strategist::custom;
  Tradition tradition = Tradition::corporate;
  std::string precondition;
  std::string prescription;
  std::vector<std::string> tags;
  std::optional<std::string> theme;

  bool operator==(const Axiom&) const = default;
};

/// Canonical conditional sentence: "If {precondition}, then {prescription}."
inline std::string render_full_text(const Axiom& a) {
  return fmt::format("If {}, then {}.", a.precondition, a.prescription);
}

/// Checks a single axiom against the field invariants. `custom_themes` holds
/// labels registered in addition to the taxonomy.
inline void validate_axiom(const Axiom& a, const std::set<std::string>& custom_themes = {}) {
  if (is_blank(a.id)) throw Error(ErrorCode::invariant_violation, "axiom id is empty");
  if (is_blank(a.precondition))
    throw Error(ErrorCode::invariant_violation, fmt::format("axiom '{}': empty precondition", a.id));
  if (is_blank(a.prescription))
    throw Error(ErrorCode::invariant_violation, fmt::format("axiom '{}': empty prescription", a.id));
  if (auto natural = natural_tradition(a.strategist); natural && *natural != a.tradition) {
    throw Error(ErrorCode::invariant_violation,
                fmt::format("axiom '{}': strategist {} belongs to tradition {}, not {}", a.id,
                            to_string(a.strategist), to_string(*natural), to_string(a.tradition)));
  }
  for (const auto& tag : a.tags) {
    if (!is_well_formed_label(tag))
      throw Error(ErrorCode::invariant_violation,
                  fmt::format("axiom '{}': malformed tag '{}'", a.id, tag));
  }
  if (a.theme && !is_taxonomy_theme(*a.theme) && !custom_themes.contains(*a.theme)) {
    throw Error(ErrorCode::invariant_violation,
                fmt::format("axiom '{}': theme '{}' is neither a taxonomy theme nor registered",
                            a.id, *a.theme));
  }
}

struct SourceRecord {
  std::string path;
  std::string sha256;
  std::size_t record_count = 0;

  bool operator==(const SourceRecord&) const = default;
};

/// Immutable, id-ordered collection of axioms.
class AxiomLibrary {
 public:
  AxiomLibrary() = default;

  /// Validates every axiom, rejects duplicate ids and sorts by id.
  static AxiomLibrary from_axioms(std::vector<Axiom> axioms,
                                  std::vector<SourceRecord> manifest = {},
                                  std::set<std::string> custom_themes = {}) {
    std::unordered_set<std::string> seen;
    for (const auto& a : axioms) {
      validate_axiom(a, custom_themes);
      if (!seen.insert(a.id).second)
        throw Error(ErrorCode::duplicate_id, fmt::format("duplicate axiom id '{}'", a.id));
    }
    std::sort(axioms.begin(), axioms.end(),
              [](const Axiom& x, const Axiom& y) { return x.id < y.id; });
    AxiomLibrary lib;
    lib.axioms_ = std::move(axioms);
    lib.manifest_ = std::move(manifest);
    lib.custom_themes_ = std::move(custom_themes);
    return lib;
  }

  const std::vector<Axiom>& axioms() const noexcept { return axioms_; }
  const std::vector<SourceRecord>& source_manifest() const noexcept { return manifest_; }
  const std::set<std::string>& custom_themes() const noexcept { return custom_themes_; }

  std::size_t size() const noexcept { return axioms_.size(); }
  bool empty() const noexcept { return axioms_.empty(); }
  auto begin() const noexcept { return axioms_.begin(); }
  auto end() const noexcept { return axioms_.end(); }
  const Axiom& operator[](std::size_t i) const { return axioms_.at(i); }

  const Axiom* find(std::string_view id) const {
    auto it = std::lower_bound(axioms_.begin(), axioms_.end(), id,
                               [](const Axiom& a, std::string_view key) { return a.id < key; });
    return (it != axioms_.end() && it->id == id) ? &*it : nullptr;
  }

  const Axiom& at(std::string_view id) const {
    if (const auto* a = find(id)) return *a;
    throw Error(ErrorCode::not_found, fmt::format("no axiom with id '{}'", id));
  }

  std::vector<std::string> ids() const {
    std::vector<std::string> out;
    out.reserve(axioms_.size());
    for (const auto& a : axioms_) out.push_back(a.id);
    return out;
  }

  /// Sub-library with the given ids, kept in library order.
  AxiomLibrary subset(const std::vector<std::string>& ids) const {
    std::vector<Axiom> picked;
    for (const auto& id : ids) picked.push_back(at(id));
    return from_axioms(std::move(picked), manifest_, custom_themes_);
  }

 private:
  std::vector<Axiom> axioms_;
  std::vector<SourceRecord> manifest_;
  std::set<std::string> custom_themes_;
};

// ---------------------------------------------------------------------------
// Record format

inline nlohmann::json axiom_to_json(const Axiom& a) {
  nlohmann::json j;
  j["id"] = a.id;
  j["strategist"] = std::string(to_string(a.strategist));
  j["tradition"] = std::string(to_string(a.tradition));
  j["precondition"] = a.precondition;
  j["prescription"] = a.prescription;
  j["tags"] = a.tags;
  j["theme"] = a.theme ? nlohmann::json(*a.theme) : nlohmann::json(nullptr);
  return j;
}

namespace detail {

inline std::string required_string(const nlohmann::json& j, const char* field) {
  auto it = j.find(field);
  if (it == j.end()) throw Error(ErrorCode::parse_error, fmt::format("missing field '{}'", field));
  if (!it->is_string())
    throw Error(ErrorCode::parse_error, fmt::format("field '{}' must be a string", field));
  return it->get<std::string>();
}

}  // namespace detail

/// Parses one axiom record. Field validation (empty clauses, themes) is left
/// to validate_axiom so that callers can attach location context.
inline Axiom axiom_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::parse_error, "axiom record must be an object");
  static const std::set<std::string> kKnown{"id",           "strategist", "tradition", "precondition",
                                            "prescription", "tags",       "theme"};
  for (const auto& [key, _] : j.items()) {
    if (!kKnown.contains(key))
      throw Error(ErrorCode::parse_error, fmt::format("unknown field '{}'", key));
  }
  Axiom a;
  a.id = detail::required_string(j, "id");
  try {
    a.strategist = parse_strategist(detail::required_string(j, "strategist"));
    a.tradition = parse_tradition(detail::required_string(j, "tradition"));
  } catch (const Error& e) {
    throw Error(ErrorCode::parse_error, e.what());
  }
  a.precondition = detail::required_string(j, "precondition");
  a.prescription = detail::required_string(j, "prescription");
  if (auto it = j.find("tags"); it != j.end()) {
    if (!it->is_array()) throw Error(ErrorCode::parse_error, "field 'tags' must be an array");
    for (const auto& t : *it) {
      if (!t.is_string()) throw Error(ErrorCode::parse_error, "tags must be strings");
      a.tags.push_back(t.get<std::string>());
    }
  }
  if (auto it = j.find("theme"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) throw Error(ErrorCode::parse_error, "field 'theme' must be a string");
    a.theme = it->get<std::string>();
  }
  return a;
}

/// Parses axiom corpus text (JSON Lines). Each non-blank line not starting
/// with '#' is one record: either an axiom, or a directive
/// {"custom_themes": [...]} registering extra theme labels for later lines.
inline AxiomLibrary parse_library(std::string_view content, std::string_view source_name = "<memory>") {
  std::vector<Axiom> axioms;
  std::set<std::string> custom_themes;
  std::unordered_set<std::string> seen;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= content.size()) {
    auto next = content.find('\n', pos);
    if (next == std::string_view::npos) next = content.size();
    std::string_view line = content.substr(pos, next - pos);
    pos = next + 1;
    ++line_no;
    auto body = trim(line);
    if (body.empty() || body.front() == '#') {
      if (next == content.size()) break;
      continue;
    }
    auto where = [&](const std::string& msg) {
      return fmt::format("{}:{}: {}", source_name, line_no, msg);
    };
    nlohmann::json record;
    try {
      record = nlohmann::json::parse(body);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::parse_error, where(fmt::format("malformed JSON ({})", e.what())));
    }
    if (record.is_object() && record.contains("custom_themes")) {
      const auto& list = record["custom_themes"];
      if (record.size() != 1 || !list.is_array())
        throw Error(ErrorCode::parse_error, where("custom_themes directive must be {\"custom_themes\": [labels]}"));
      for (const auto& label : list) {
        if (!label.is_string() || !is_well_formed_label(label.get<std::string>()))
          throw Error(ErrorCode::parse_error, where("custom theme labels must match [a-z0-9_-]+"));
        custom_themes.insert(label.get<std::string>());
      }
    } else {
      Axiom a;
      try {
        a = axiom_from_json(record);
        validate_axiom(a, custom_themes);
      } catch (const Error& e) {
        throw Error(e.code(), where(e.what()));
      }
      if (!seen.insert(a.id).second)
        throw Error(ErrorCode::duplicate_id, where(fmt::format("duplicate axiom id '{}'", a.id)));
      axioms.push_back(std::move(a));
    }
    if (next == content.size()) break;
  }
  std::vector<SourceRecord> manifest{
      {std::string(source_name), sha256_hex(content), axioms.size()}};
  return AxiomLibrary::from_axioms(std::move(axioms), std::move(manifest), std::move(custom_themes));
}

inline AxiomLibrary load_library(const std::string& path) {
  return parse_library(read_file(path), path);
}

/// Serializes to the corpus format; parse_library(serialize_library(L)) has
/// the same axioms as L.
inline std::string serialize_library(const AxiomLibrary& lib) {
  std::string out;
  if (!lib.custom_themes().empty()) {
    nlohmann::json directive;
    directive["custom_themes"] = lib.custom_themes();
    out += directive.dump() + "\n";
  }
  for (const auto& a : lib) out += axiom_to_json(a).dump() + "\n";
  return out;
}

inline nlohmann::json library_to_json(const AxiomLibrary& lib) {
  nlohmann::json j;
  j["axioms"] = nlohmann::json::array();
  for (const auto& a : lib) {
    auto rec = axiom_to_json(a);
    rec["full_text"] = render_full_text(a);
    j["axioms"].push_back(std::move(rec));
  }
  j["sources"] = nlohmann::json::array();
  for (const auto& s : lib.source_manifest())
    j["sources"].push_back({{"path", s.path}, {"sha256", s.sha256}, {"records", s.record_count}});
  return j;
}

// ---------------------------------------------------------------------------
// Filtering

struct AxiomFilter {
  enum class Kind { strategist, tradition, tag };
  Kind kind = Kind::tag;
  Strategist strategist = Strategist::custom;
  Tradition tradition = Tradition::corporate;
  std::string tag;

  static AxiomFilter by_strategist(Strategist s) { return {Kind::strategist, s, {}, {}}; }
  static AxiomFilter by_tradition(Tradition t) { return {Kind::tradition, {}, t, {}}; }
  static AxiomFilter by_tag(std::string tag) {
    if (!is_well_formed_label(tag))
      throw Error(ErrorCode::invalid_input, fmt::format("malformed tag '{}'", tag));
    return {Kind::tag, {}, {}, std::move(tag)};
  }

  /// Parses "strategist=Martin", "tradition=corporate" or "tag=timing".
  static AxiomFilter parse(std::string_view expr) {
    auto eq = expr.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorCode::invalid_input,
                  fmt::format("filter '{}' must look like strategist=|tradition=|tag=", expr));
    auto key = expr.substr(0, eq);
    auto value = expr.substr(eq + 1);
    if (key == "strategist") return by_strategist(parse_strategist(value));
    if (key == "tradition") return by_tradition(parse_tradition(value));
    if (key == "tag") return by_tag(std::string(value));
    throw Error(ErrorCode::invalid_input, fmt::format("unknown filter key '{}'", key));
  }

  bool matches(const Axiom& a) const {
    switch (kind) {
      case Kind::strategist: return a.strategist == strategist;
      case Kind::tradition: return a.tradition == tradition;
      case Kind::tag:
        return std::find(a.tags.begin(), a.tags.end(), tag) != a.tags.end() ||
               (a.theme && *a.theme == tag);
    }
    return false;
  }
};

inline AxiomLibrary filter_axioms(const AxiomLibrary& lib, const AxiomFilter& filter) {
  std::vector<Axiom> kept;
  for (const auto& a : lib)
    if (filter.matches(a)) kept.push_back(a);
  return AxiomLibrary::from_axioms(std::move(kept), lib.source_manifest(), lib.custom_themes());
}

}  // namespace entangle
