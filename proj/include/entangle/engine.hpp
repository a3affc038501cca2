#pragma once

#include <fmt/format.h>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "entangle/axiom.hpp"
#include "entangle/corpus.hpp"
#include "entangle/embedding.hpp"
#include "entangle/evaluation.hpp"
#include "entangle/generation.hpp"
#include "entangle/interference.hpp"
#include "entangle/providers.hpp"
#include "entangle/scenario.hpp"
#include "entangle/synthesis.hpp"
#include "entangle/templates.hpp"

namespace entangle {

inline constexpr std::string_view kVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Configuration

struct EngineConfig {
  std::optional<std::string> library_path;  // unset: built-in case-study corpus
  std::optional<std::string> scenario_path;
  ProviderConfig embedding;
  ActivationSource activation_source = ActivationSource::precondition;
  ScenarioEncoder scenario_encoder = ScenarioEncoder::composite_text;
  GenerationConfig generation;
  GeneratorSettings generator;  // kind follows generation.provider_kind
  std::optional<std::string> templates_dir;
  KappaConfig kappa;
  MixConfig mix;
  EvaluationConfig evaluation;
  std::size_t top_n = 3;
  std::optional<double> threshold;
  std::string bind = "127.0.0.1:8080";
  std::string audit_dir = "audit";  // empty disables audit records

  void validate() const {
    for (const auto* path : {&library_path, &scenario_path, &templates_dir})
      if (*path && !std::filesystem::exists(**path))
        throw Error(ErrorCode::config_error, fmt::format("configured path does not exist: {}", **path));
    embedding.validate();
    generation.validate();
    kappa.validate();
    mix.validate();
    evaluation.validate();
    if (top_n == 0 && !threshold) throw Error(ErrorCode::config_error, "selection needs top_n >= 1 or a threshold");
    if (generator.max_in_flight == 0) throw Error(ErrorCode::config_error, "max_in_flight must be at least 1");
    if (bind.find(':') == std::string::npos)
      throw Error(ErrorCode::config_error, fmt::format("bind '{}' must look like host:port", bind));
  }
};

namespace detail {

inline nlohmann::json optional_string(const std::optional<std::string>& s) {
  return s ? nlohmann::json(*s) : nlohmann::json(nullptr);
}

inline void reject_unknown(const nlohmann::json& j, std::string_view where, std::initializer_list<std::string_view> known) {
  if (!j.is_object()) throw Error(ErrorCode::config_error, fmt::format("{}: expected an object", where));
  for (const auto& [key, value] : j.items())
    if (std::find(known.begin(), known.end(), key) == known.end())
      throw Error(ErrorCode::config_error, fmt::format("{}: unknown field '{}'", where, key));
}

inline std::optional<std::string> read_optional_string(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return std::nullopt;
  return j[key].get<std::string>();
}

}  // namespace detail

/// Effective configuration without secrets.
inline nlohmann::json to_json(const EngineConfig& c) {
  auto generation = to_json(c.generation);
  generation["endpoint"] = detail::optional_string(c.generator.endpoint);
  generation["model"] = c.generator.model;
  generation["timeout_seconds"] = c.generator.timeout_seconds;
  generation["max_in_flight"] = c.generator.max_in_flight;
  return {{"library", detail::optional_string(c.library_path)},
          {"scenario", detail::optional_string(c.scenario_path)},
          {"embedding", to_json(c.embedding)},
          {"activation_source", to_string(c.activation_source)},
          {"scenario_encoder", to_string(c.scenario_encoder)},
          {"generation", std::move(generation)},
          {"templates_dir", detail::optional_string(c.templates_dir)},
          {"kappa", to_json(c.kappa)},
          {"mix", to_json(c.mix)},
          {"evaluation", to_json(c.evaluation)},
          {"selection", {{"top_n", c.top_n}, {"threshold", c.threshold ? nlohmann::json(*c.threshold) : nlohmann::json(nullptr)}}},
          {"bind", c.bind},
          {"audit_dir", c.audit_dir}};
}

inline KappaConfig kappa_config_from_json(const nlohmann::json& j, KappaConfig base = {}) {
  detail::reject_unknown(j, "kappa", {"scheme", "alpha_cal", "beta_cal", "negation"});
  if (j.contains("scheme")) base.scheme = parse_kappa_scheme(j["scheme"].get<std::string>());
  if (j.contains("alpha_cal")) base.alpha_cal = j["alpha_cal"].get<double>();
  if (j.contains("beta_cal")) base.beta_cal = j["beta_cal"].get<double>();
  if (j.contains("negation")) base.negation = parse_negation_mode(j["negation"].get<std::string>());
  return base;
}

inline MixConfig mix_config_from_json(const nlohmann::json& j, MixConfig base = {}) {
  detail::reject_unknown(j, "mix", {"lambda_rule", "floor"});
  if (j.contains("lambda_rule")) base.lambda_rule = parse_lambda_rule(j["lambda_rule"].get<std::string>());
  if (j.contains("floor")) base.floor = j["floor"].get<double>();
  return base;
}

/// Reads the layered record produced by merging env, file and flag layers.
/// Missing fields keep their defaults; unknown fields are errors.
inline EngineConfig engine_config_from_json(const nlohmann::json& j) {
  try {
    detail::reject_unknown(j, "config",
                           {"library", "scenario", "embedding", "activation_source", "scenario_encoder", "generation",
                            "templates_dir", "kappa", "mix", "evaluation", "selection", "bind", "audit_dir"});
    EngineConfig c;
    c.library_path = detail::read_optional_string(j, "library");
    c.scenario_path = detail::read_optional_string(j, "scenario");
    c.templates_dir = detail::read_optional_string(j, "templates_dir");
    if (j.contains("embedding")) {
      const auto& e = j["embedding"];
      detail::reject_unknown(e, "embedding",
                             {"kind", "endpoint", "model_name", "dimension", "cache_capacity", "store_path", "api_key",
                              "timeout_seconds"});
      if (e.contains("kind")) c.embedding.kind = parse_provider_kind(e["kind"].get<std::string>());
      c.embedding.endpoint = detail::read_optional_string(e, "endpoint");
      if (e.contains("model_name")) c.embedding.model_name = e["model_name"].get<std::string>();
      if (e.contains("dimension")) c.embedding.dimension = e["dimension"].get<std::size_t>();
      if (e.contains("cache_capacity")) c.embedding.cache_capacity = e["cache_capacity"].get<std::size_t>();
      c.embedding.store_path = detail::read_optional_string(e, "store_path");
      if (e.contains("api_key")) c.embedding.api_key = e["api_key"].get<std::string>();
      if (e.contains("timeout_seconds")) c.embedding.timeout_seconds = e["timeout_seconds"].get<double>();
    }
    if (j.contains("activation_source"))
      c.activation_source = parse_activation_source(j["activation_source"].get<std::string>());
    if (j.contains("scenario_encoder"))
      c.scenario_encoder = parse_scenario_encoder(j["scenario_encoder"].get<std::string>());
    if (j.contains("generation")) {
      auto g = j["generation"];
      detail::reject_unknown(g, "generation",
                             {"temperature", "max_tokens", "system_message", "provider_kind", "endpoint", "model",
                              "api_key", "timeout_seconds", "max_in_flight"});
      c.generator.endpoint = detail::read_optional_string(g, "endpoint");
      if (g.contains("model")) c.generator.model = g["model"].get<std::string>();
      if (g.contains("api_key")) c.generator.api_key = g["api_key"].get<std::string>();
      if (g.contains("timeout_seconds")) c.generator.timeout_seconds = g["timeout_seconds"].get<double>();
      if (g.contains("max_in_flight")) c.generator.max_in_flight = g["max_in_flight"].get<std::size_t>();
      for (const char* key : {"endpoint", "model", "api_key", "timeout_seconds", "max_in_flight"}) g.erase(key);
      c.generation = generation_config_from_json(g);
    }
    c.generator.kind = c.generation.provider_kind;
    if (j.contains("kappa")) c.kappa = kappa_config_from_json(j["kappa"]);
    if (j.contains("mix")) c.mix = mix_config_from_json(j["mix"]);
    if (j.contains("evaluation")) c.evaluation = evaluation_config_from_json(j["evaluation"]);
    if (j.contains("selection")) {
      const auto& s = j["selection"];
      detail::reject_unknown(s, "selection", {"top_n", "threshold"});
      if (s.contains("top_n")) c.top_n = s["top_n"].get<std::size_t>();
      if (s.contains("threshold") && !s["threshold"].is_null()) c.threshold = s["threshold"].get<double>();
    }
    if (j.contains("bind")) c.bind = j["bind"].get<std::string>();
    if (j.contains("audit_dir")) c.audit_dir = j["audit_dir"].get<std::string>();
    return c;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::config_error, fmt::format("config: {}", e.what()));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::config_error) throw;
    throw Error(ErrorCode::config_error, e.what());
  }
}

using EnvLookup = std::function<std::optional<std::string>(const char*)>;

inline std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v || !*v) return std::nullopt;
  return std::string(v);
}

/// Config layer from ENTANGLE_EMBED_URL/KEY/STORE, ENTANGLE_LLM_URL/KEY/MODEL
/// and ENTANGLE_BIND. A URL or store selects the matching provider kind.
inline nlohmann::json env_layer(const EnvLookup& env = process_env) {
  nlohmann::json j = nlohmann::json::object();
  if (auto v = env("ENTANGLE_EMBED_STORE")) {
    j["embedding"]["kind"] = "precomputed_store";
    j["embedding"]["store_path"] = *v;
  }
  if (auto v = env("ENTANGLE_EMBED_URL")) {
    j["embedding"]["kind"] = "remote";
    j["embedding"]["endpoint"] = *v;
  }
  if (auto v = env("ENTANGLE_EMBED_KEY")) j["embedding"]["api_key"] = *v;
  if (auto v = env("ENTANGLE_LLM_URL")) {
    j["generation"]["provider_kind"] = "remote";
    j["generation"]["endpoint"] = *v;
  }
  if (auto v = env("ENTANGLE_LLM_KEY")) j["generation"]["api_key"] = *v;
  if (auto v = env("ENTANGLE_LLM_MODEL")) j["generation"]["model"] = *v;
  if (auto v = env("ENTANGLE_BIND")) j["bind"] = *v;
  return j;
}

/// Precedence: flags > config file > environment.
inline EngineConfig resolve_engine_config(const nlohmann::json& flags, const std::optional<std::string>& config_file,
                                          const EnvLookup& env = process_env) {
  nlohmann::json merged = env_layer(env);
  if (config_file) {
    nlohmann::json file;
    try {
      file = nlohmann::json::parse(read_file(*config_file));
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::config_error, fmt::format("{}: {}", *config_file, e.what()));
    }
    merged.merge_patch(file);
  }
  merged.merge_patch(flags);
  auto cfg = engine_config_from_json(merged);
  cfg.validate();
  return cfg;
}

// ---------------------------------------------------------------------------
// Requests

/// Body of a synthesis call: which scenario, how to select, which framing.
struct SynthesisDescriptor {
  explicit SynthesisDescriptor(SixCProfile s) : scenario(std::move(s)) {}

  SixCProfile scenario;
  SynthesisMode mode = SynthesisMode::entangled;
  FramingKind framing = FramingKind::dominant;
  std::optional<std::size_t> top_n;
  std::optional<double> threshold;
  std::optional<std::vector<std::string>> axiom_ids;
  std::optional<GenerationConfig> generation;
};

inline SynthesisDescriptor synthesis_descriptor_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::invalid_input, "synthesis descriptor: expected an object");
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> known{"scenario", "mode", "framing", "top_n", "threshold", "axiom_ids", "generation"};
    if (!known.contains(key)) throw Error(ErrorCode::invalid_input, fmt::format("synthesis descriptor: unknown field '{}'", key));
  }
  try {
    SynthesisDescriptor d(profile_from_json(j.at("scenario")));
    if (j.contains("mode")) d.mode = parse_synthesis_mode(j["mode"].get<std::string>());
    if (j.contains("framing")) d.framing = parse_framing_kind(j["framing"].get<std::string>());
    if (j.contains("top_n") && !j["top_n"].is_null()) d.top_n = j["top_n"].get<std::size_t>();
    if (j.contains("threshold") && !j["threshold"].is_null()) d.threshold = j["threshold"].get<double>();
    if (j.contains("axiom_ids") && !j["axiom_ids"].is_null()) d.axiom_ids = j["axiom_ids"].get<std::vector<std::string>>();
    if (j.contains("generation") && !j["generation"].is_null()) d.generation = generation_config_from_json(j["generation"]);
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::invalid_input, fmt::format("synthesis descriptor: {}", e.what()));
  }
}

struct ModeComparison {
  SynthesisResult entangled;
  SynthesisResult baseline;
  EvaluationReport entangled_report;
  EvaluationReport baseline_report;
  ComparisonRecord comparison;
};

inline nlohmann::json to_json(const ModeComparison& m) {
  return {{"entangled", to_json(m.entangled)},
          {"baseline", to_json(m.baseline)},
          {"reports", {to_json(m.entangled_report), to_json(m.baseline_report)}},
          {"comparison", to_json(m.comparison)}};
}

// ---------------------------------------------------------------------------
// Engine

/// Single core behind the CLI and the HTTP service. Immutable after
/// construction apart from internal caches; safe for concurrent use.
class Engine {
 public:
  explicit Engine(EngineConfig cfg, ProviderPtr embedder = nullptr, GeneratorPtr generator = nullptr)
      : cfg_(std::move(cfg)) {
    cfg_.generator.kind = cfg_.generation.provider_kind;
    cfg_.validate();
    library_ = cfg_.library_path ? load_library(*cfg_.library_path) : meta_case_library();
    templates_ = cfg_.templates_dir ? load_template_set(*cfg_.templates_dir) : builtin_templates();
    embedder_ = embedder ? std::move(embedder) : make_embedding_provider(cfg_.embedding);
    generator_ = generator ? std::move(generator) : make_text_generator(cfg_.generator);
  }

  const EngineConfig& config() const noexcept { return cfg_; }
  const AxiomLibrary& library() const noexcept { return library_; }
  const EmbeddingProvider& embedder() const noexcept { return *embedder_; }
  const TextGenerator& generator() const noexcept { return *generator_; }
  const TemplateSet& templates() const noexcept { return templates_; }

  SixCProfile default_scenario() const {
    if (!cfg_.scenario_path) throw Error(ErrorCode::invalid_input, "no scenario given (use --scenario)");
    return load_scenario(*cfg_.scenario_path);
  }

  ActivationSet activate(const SixCProfile& scenario) const { return activate(scenario, library_); }

  ActivationSet activate(const SixCProfile& scenario, const AxiomLibrary& lib) const {
    auto vec = embed_scenario(scenario, *embedder_, cfg_.scenario_encoder);
    return compute_activations(vec, lib, *embedder_, scenario.label(), cfg_.activation_source);
  }

  std::shared_ptr<const InterferenceMatrix> matrix(std::optional<KappaScheme> scheme = std::nullopt) const {
    return matrix(library_, scheme);
  }

  std::shared_ptr<const InterferenceMatrix> matrix(const AxiomLibrary& lib, std::optional<KappaScheme> scheme) const {
    auto kcfg = cfg_.kappa;
    if (scheme) kcfg.scheme = *scheme;
    std::string key = fmt::format("{}|{}", to_json(kcfg).dump(), fmt::join(lib.ids(), ","));
    {
      std::lock_guard lock(mutex_);
      if (auto it = matrices_.find(key); it != matrices_.end()) return it->second;
    }
    auto m = std::make_shared<const InterferenceMatrix>(build_interference_matrix(lib, *embedder_, kcfg));
    std::lock_guard lock(mutex_);
    return matrices_.emplace(key, std::move(m)).first->second;
  }

  CompositionGraph graph(const SixCProfile& scenario, std::size_t top_n,
                         std::optional<KappaScheme> scheme = std::nullopt) const {
    return export_graph(activate(scenario), *matrix(scheme), top_n);
  }

  SynthesisResult synthesize(const SynthesisDescriptor& d) const {
    auto lib = d.axiom_ids ? library_.subset(*d.axiom_ids) : library_;
    auto generation = d.generation.value_or(cfg_.generation);
    auto act = activate(d.scenario, lib);
    if (d.mode == SynthesisMode::baseline) return run_baseline(d.scenario, lib, act, *generator_, generation, templates_);

    SelectionRule rule;
    rule.threshold = d.threshold ? d.threshold : (d.top_n ? std::nullopt : cfg_.threshold);
    rule.top_n = d.top_n ? d.top_n : (rule.threshold ? std::nullopt : std::optional<std::size_t>(cfg_.top_n));
    auto sel = select_heuristics(act, lib, rule);
    if (sel.items.empty())
      throw Error(ErrorCode::invariant_violation, "selected: no heuristic reaches the activation threshold");
    auto ids = sel.ids();
    auto m = matrix(lib, std::nullopt);
    SynthesisRequest req(d.scenario);
    req.selected = sel.items;
    req.matrix_slice = m->slice(ids);
    req.framing = Framing::of(d.framing, templates_);
    req.top_n = rule.top_n.value_or(sel.items.size());
    req.generation = generation;
    auto result = entangle::synthesize(req, *generator_, templates_);
    result.warnings = sel.warnings;
    result.diagnostics = field_diagnostics(sel, *m);
    return result;
  }

  /// Both modes with one GenerationConfig; both narratives are scored
  /// against the entangled selection.
  ModeComparison compare_modes(SynthesisDescriptor d, const std::string& entangled_label = "entangled",
                               const std::string& baseline_label = "baseline") const {
    d.generation = d.generation.value_or(cfg_.generation);
    d.mode = SynthesisMode::entangled;
    auto ent = synthesize(d);
    d.mode = SynthesisMode::baseline;
    auto base = synthesize(d);
    std::vector<Axiom> inputs;
    for (const auto& s : ent.request_echo.selected) inputs.push_back(s.axiom);
    auto er = evaluate(ent.narrative, inputs, entangled_label);
    auto br = evaluate(base.narrative, inputs, baseline_label);
    auto cmp = compare(er, br);
    return {std::move(ent), std::move(base), std::move(er), std::move(br), std::move(cmp)};
  }

  EvaluationReport evaluate(std::string_view synthesis, const std::vector<Axiom>& inputs, std::string label = "synthesis",
                            const std::optional<EvaluationConfig>& cfg = std::nullopt) const {
    return entangle::evaluate(synthesis, inputs, *embedder_, cfg.value_or(cfg_.evaluation), std::move(label));
  }

  /// Input axioms from a list of ids, or from one filter expression such as
  /// "strategist=Martin". An empty list means the whole library.
  std::vector<Axiom> resolve_inputs(const std::vector<std::string>& spec) const {
    if (spec.empty()) return library_.axioms();
    if (spec.size() == 1 && spec[0].find('=') != std::string::npos) {
      auto lib = filter_axioms(library_, AxiomFilter::parse(spec[0]));
      if (lib.empty()) throw Error(ErrorCode::invalid_input, fmt::format("filter '{}' selects no axioms", spec[0]));
      return lib.axioms();
    }
    std::vector<Axiom> out;
    for (const auto& id : spec) out.push_back(library_.at(id));
    return out;
  }

  nlohmann::json health() const {
    auto ready = [](bool remote, const auto& endpoint) { return !remote || (endpoint && !endpoint->empty()); };
    return {{"status", "ok"},
            {"version", kVersion},
            {"library_size", library_.size()},
            {"embedding",
             {{"kind", to_string(cfg_.embedding.kind)},
              {"model", embedder_->model_name()},
              {"dimension", embedder_->dimension()},
              {"ready", ready(cfg_.embedding.kind == ProviderKind::remote, cfg_.embedding.endpoint)}}},
            {"generation",
             {{"kind", to_string(cfg_.generation.provider_kind)},
              {"model", generator_->model_name()},
              {"ready", ready(cfg_.generation.provider_kind == GenerationProviderKind::remote, cfg_.generator.endpoint)}}}};
  }

  /// Writes audit/<command>-<hash>.json and returns its path, or nothing
  /// when auditing is disabled.
  std::optional<std::string> audit(std::string_view command, const nlohmann::json& inputs,
                                   const nlohmann::json& outputs) const {
    if (cfg_.audit_dir.empty()) return std::nullopt;
    auto config = to_json(cfg_);
    auto digest = sha256_hex(nlohmann::json{{"command", command}, {"inputs", inputs}, {"config", config}}.dump());
    nlohmann::json record{{"command", command},
                          {"version", kVersion},
                          {"inputs_sha256", digest},
                          {"inputs", inputs},
                          {"config", config},
                          {"library_sources", library_to_json(library_)["sources"]},
                          {"outputs", outputs}};
    std::filesystem::path dir(cfg_.audit_dir);
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorCode::io_error, fmt::format("cannot create audit directory {}: {}", dir.string(), ec.message()));
    auto path = dir / fmt::format("{}-{}.json", command, digest.substr(0, 16));
    write_file(path.string(), record.dump(2) + "\n");
    return path.string();
  }

 private:
  nlohmann::json field_diagnostics(const Selection& sel, const InterferenceMatrix& m) const {
    auto ids = sel.ids();
    InterferenceMatrix sub{ids, SquareMatrix(ids.size()), m.slice(ids), m.config};
    std::vector<std::size_t> idx;
    for (const auto& id : ids) idx.push_back(m.index_of(id));
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (std::size_t c = 0; c < ids.size(); ++c) sub.kappa(r, c) = m.kappa(idx[r], idx[c]);
    ActivationSet act;
    std::vector<std::string> texts;
    for (const auto& s : sel.items) {
      act.entries.push_back({s.axiom.id, s.alpha});
      texts.push_back(render_full_text(s.axiom));
    }
    auto vecs = embedder_->batch_embed(texts);
    std::unordered_map<std::string, SemanticVector> by_id;
    for (std::size_t i = 0; i < ids.size(); ++i) by_id.emplace(ids[i], std::move(vecs[i]));
    return {{"field", to_json(compose_field(act, sub, by_id, cfg_.mix))}, {"mix", to_json(cfg_.mix)}};
  }

  EngineConfig cfg_;
  AxiomLibrary library_;
  TemplateSet templates_;
  ProviderPtr embedder_;
  GeneratorPtr generator_;
  mutable std::mutex mutex_;
  mutable std::map<std::string, std::shared_ptr<const InterferenceMatrix>> matrices_;
};

}  // namespace entangle
