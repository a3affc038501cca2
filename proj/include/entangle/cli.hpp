#pragma once

#include <fmt/format.h>

#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "entangle/engine.hpp"
#include "entangle/service.hpp"

namespace entangle {

namespace detail {

inline void emit(std::ostream& out, const std::optional<std::string>& path, std::string_view content) {
  if (path) write_file(*path, content);
  else out << content;
}

inline std::string activation_table(const ActivationSet& act, const AxiomLibrary& lib) {
  std::string out = fmt::format("{:<4} {:<12} {:>9}  {}\n", "rank", "axiom", "alpha", "precondition");
  for (std::size_t i = 0; i < act.entries.size(); ++i) {
    const auto& e = act.entries[i];
    const auto* a = lib.find(e.axiom_id);
    out += fmt::format("{:<4} {:<12} {:>9.6f}  {}\n", i + 1, e.axiom_id, e.alpha, a ? a->precondition : "");
  }
  return out;
}

}  // namespace detail

/// Runs the entangle command line. Payloads go to `out`; errors go to `err`
/// as a JSON record {"code", "message"}. Returns the process exit status.
inline int run_cli(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr,
                   const EnvLookup& env = process_env) {
  CLI::App app{"Compose strategic heuristics by semantic interference."};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  std::optional<std::string> config_file, library, scenario, embed_kind, embed_store, embed_url, generator_kind,
      kappa_scheme, audit_dir, templates_dir, activation_source;
  std::optional<std::size_t> dimension;
  bool no_audit = false;
  app.add_option("--config", config_file, "JSON config file")->check(CLI::ExistingFile);
  app.add_option("--library", library, "Axiom corpus (JSON Lines); defaults to the built-in case-study corpus");
  app.add_option("--scenario", scenario, "Scenario profile (JSON)");
  app.add_option("--embed-provider", embed_kind, "remote | precomputed_store | deterministic_test");
  app.add_option("--embed-store", embed_store, "Precomputed embedding store");
  app.add_option("--embed-url", embed_url, "Embedding endpoint");
  app.add_option("--embed-dimension", dimension, "Embedding dimension");
  app.add_option("--generator", generator_kind, "remote | deterministic_mock");
  app.add_option("--kappa-scheme", kappa_scheme, "similarity_based | action_constraint");
  app.add_option("--activation-source", activation_source, "precondition | full_text");
  app.add_option("--templates", templates_dir, "Prompt template directory");
  app.add_option("--audit-dir", audit_dir, "Directory for audit records");
  app.add_flag("--no-audit", no_audit, "Do not write audit records");

  // library validate
  auto* library_cmd = app.add_subcommand("library", "Corpus operations");
  library_cmd->require_subcommand(1);
  auto* validate_cmd = library_cmd->add_subcommand("validate", "Load and validate the corpus");
  std::optional<std::string> filter;
  validate_cmd->add_option("--filter", filter, "strategist=NAME | tradition=NAME | tag=LABEL");

  auto* activate_cmd = app.add_subcommand("activate", "Rank axioms by activation against the scenario");
  std::string activate_format = "table";
  std::optional<std::string> output;
  activate_cmd->add_option("--format", activate_format)->check(CLI::IsMember({"table", "json"}));
  activate_cmd->add_option("-o,--output", output);

  auto* matrix_cmd = app.add_subcommand("matrix", "Interference matrix over the library");
  std::string matrix_format = "csv";
  std::optional<std::string> scheme;
  matrix_cmd->add_option("--format", matrix_format)->check(CLI::IsMember({"csv", "json"}));
  matrix_cmd->add_option("--scheme", scheme, "similarity_based | action_constraint");
  matrix_cmd->add_option("-o,--output", output);

  auto* graph_cmd = app.add_subcommand("graph", "Composition graph of the top activated axioms");
  std::size_t graph_top_n = 3;
  graph_cmd->add_option("--top-n", graph_top_n);
  graph_cmd->add_option("--scheme", scheme);
  graph_cmd->add_option("-o,--output", output);

  auto* synth_cmd = app.add_subcommand("synthesize", "Generate a strategic narrative");
  std::string framing = "dominant";
  std::optional<std::size_t> top_n;
  std::optional<double> threshold;
  std::optional<std::string> axioms;
  bool baseline = false;
  synth_cmd->add_option("--framing", framing, "dominant | contrarian | minimalist");
  synth_cmd->add_option("--top-n", top_n);
  synth_cmd->add_option("--threshold", threshold, "Select every axiom with alpha >= threshold");
  synth_cmd->add_option("--axioms", axioms, "Restrict to these ids (comma separated) or one filter expression");
  synth_cmd->add_flag("--baseline", baseline, "Rule-ranking baseline (top three, concatenated)");
  synth_cmd->add_option("-o,--output", output, "Write the result record here");
  std::optional<std::string> narrative_out;
  synth_cmd->add_option("--narrative-out", narrative_out, "Also write the bare narrative here");

  auto* eval_cmd = app.add_subcommand("evaluate", "Score a synthesis text");
  std::string synthesis_file, inputs = "";
  std::string label = "synthesis";
  std::optional<double> coverage_threshold;
  eval_cmd->add_option("--synthesis", synthesis_file, "Text file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--inputs", inputs, "Input axiom ids (comma separated) or one filter expression");
  eval_cmd->add_option("--label", label);
  eval_cmd->add_option("--coverage-threshold", coverage_threshold);
  eval_cmd->add_option("-o,--output", output);

  auto* compare_cmd = app.add_subcommand("compare", "Compare two reports, or run both modes and compare");
  std::optional<std::string> entangled_report, baseline_report;
  compare_cmd->add_option("--entangled", entangled_report, "Report JSON")->check(CLI::ExistingFile);
  compare_cmd->add_option("--baseline", baseline_report, "Report JSON")->check(CLI::ExistingFile);
  compare_cmd->add_option("--framing", framing);
  compare_cmd->add_option("--top-n", top_n);
  compare_cmd->add_option("--threshold", threshold);
  compare_cmd->add_option("--axioms", axioms);
  compare_cmd->add_option("-o,--output", output);

  auto* radar_cmd = app.add_subcommand("radar", "Radar chart data from evaluation reports");
  std::vector<std::string> report_files;
  std::optional<std::string> svg_out;
  radar_cmd->add_option("--reports", report_files, "Report JSON files")->required()->check(CLI::ExistingFile);
  radar_cmd->add_option("--svg", svg_out, "Also write an SVG chart");
  radar_cmd->add_option("-o,--output", output);

  auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP service");
  std::optional<std::string> bind;
  serve_cmd->add_option("--bind", bind, "host:port");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForAllHelp& e) {
    out << app.help("", CLI::AppFormatMode::All);
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << kVersion << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << error_record(ErrorCode::invalid_input, e.what()).dump() << "\n";
    return 2;
  }

  try {
    nlohmann::json flags = nlohmann::json::object();
    if (library) flags["library"] = *library;
    if (scenario) flags["scenario"] = *scenario;
    if (embed_kind) flags["embedding"]["kind"] = *embed_kind;
    if (embed_store) {
      flags["embedding"]["store_path"] = *embed_store;
      if (!embed_kind) flags["embedding"]["kind"] = "precomputed_store";
    }
    if (embed_url) {
      flags["embedding"]["endpoint"] = *embed_url;
      if (!embed_kind) flags["embedding"]["kind"] = "remote";
    }
    if (dimension) flags["embedding"]["dimension"] = *dimension;
    if (generator_kind) flags["generation"]["provider_kind"] = *generator_kind;
    if (kappa_scheme) flags["kappa"]["scheme"] = *kappa_scheme;
    if (activation_source) flags["activation_source"] = *activation_source;
    if (templates_dir) flags["templates_dir"] = *templates_dir;
    if (audit_dir) flags["audit_dir"] = *audit_dir;
    if (no_audit) flags["audit_dir"] = "";
    if (bind) flags["bind"] = *bind;
    if (scenario && !std::filesystem::exists(*scenario))
      throw Error(ErrorCode::io_error, fmt::format("scenario file not found: {}", *scenario));
    if (library && !std::filesystem::exists(*library))
      throw Error(ErrorCode::io_error, fmt::format("library file not found: {}", *library));

    auto cfg = resolve_engine_config(flags, config_file, env);
    auto engine = std::make_shared<const Engine>(cfg);
    auto scheme_opt = [&]() -> std::optional<KappaScheme> {
      if (!scheme) return std::nullopt;
      return parse_kappa_scheme(*scheme);
    };
    auto audit = [&](std::string_view command, nlohmann::json inputs, const nlohmann::json& outputs) {
      if (auto path = engine->audit(command, inputs, outputs)) err << "audit: " << *path << "\n";
    };
    auto scenario_inputs = [&](const SixCProfile& s) { return nlohmann::json{{"scenario", to_json(s)}}; };

    if (validate_cmd->parsed()) {
      auto lib = engine->library();
      if (filter) lib = filter_axioms(lib, AxiomFilter::parse(*filter));
      nlohmann::json report{{"valid", true}, {"count", lib.size()}, {"ids", lib.ids()},
                            {"sources", library_to_json(lib)["sources"]}};
      out << report.dump(2) << "\n";
      audit("library-validate", {{"filter", filter ? nlohmann::json(*filter) : nlohmann::json(nullptr)}}, report);
    } else if (activate_cmd->parsed()) {
      auto s = engine->default_scenario();
      auto payload = ops::activations(*engine, s);
      if (activate_format == "json") detail::emit(out, output, payload.dump(2) + "\n");
      else detail::emit(out, output, detail::activation_table(activation_set_from_json(payload), engine->library()));
      audit("activate", scenario_inputs(s), payload);
    } else if (matrix_cmd->parsed()) {
      auto sch = scheme_opt();
      if (matrix_format == "csv") {
        auto csv = ops::matrix_csv(*engine, sch);
        detail::emit(out, output, csv);
        audit("matrix", {{"scheme", scheme ? nlohmann::json(*scheme) : nlohmann::json(nullptr)}}, {{"csv", csv}});
      } else {
        auto payload = ops::matrix(*engine, sch);
        detail::emit(out, output, payload.dump(2) + "\n");
        audit("matrix", {{"scheme", scheme ? nlohmann::json(*scheme) : nlohmann::json(nullptr)}}, payload);
      }
    } else if (graph_cmd->parsed()) {
      auto s = engine->default_scenario();
      auto payload = ops::graph(*engine, s, graph_top_n, scheme_opt());
      detail::emit(out, output, payload.dump(2) + "\n");
      auto in = scenario_inputs(s);
      in["top_n"] = graph_top_n;
      audit("graph", in, payload);
    } else if (synth_cmd->parsed() || (compare_cmd->parsed() && !entangled_report)) {
      SynthesisDescriptor d(engine->default_scenario());
      d.framing = parse_framing_kind(framing);
      d.mode = baseline ? SynthesisMode::baseline : SynthesisMode::entangled;
      d.top_n = top_n;
      d.threshold = threshold;
      if (axioms) {
        auto ids = ops::split_ids(*axioms);
        std::vector<std::string> resolved;
        for (const auto& a : engine->resolve_inputs(ids)) resolved.push_back(a.id);
        d.axiom_ids = resolved;
      }
      nlohmann::json in{{"scenario", to_json(d.scenario)},
                        {"mode", to_string(d.mode)},
                        {"framing", to_string(d.framing)},
                        {"top_n", top_n ? nlohmann::json(*top_n) : nlohmann::json(nullptr)},
                        {"threshold", threshold ? nlohmann::json(*threshold) : nlohmann::json(nullptr)},
                        {"axiom_ids", d.axiom_ids ? nlohmann::json(*d.axiom_ids) : nlohmann::json(nullptr)}};
      if (synth_cmd->parsed()) {
        auto result = engine->synthesize(d);
        auto payload = to_json(result);
        detail::emit(out, output, payload.dump(2) + "\n");
        if (narrative_out) write_file(*narrative_out, result.narrative + "\n");
        audit("synthesize", in, payload);
      } else {
        auto payload = ops::compare_modes(*engine, d);
        detail::emit(out, output, payload.dump(2) + "\n");
        audit("compare", in, payload);
      }
    } else if (eval_cmd->parsed()) {
      auto text = read_file(synthesis_file);
      std::optional<EvaluationConfig> ecfg;
      if (coverage_threshold) {
        ecfg = cfg.evaluation;
        ecfg->coverage_threshold = *coverage_threshold;
        ecfg->validate();
      }
      auto payload = ops::evaluate(*engine, text, ops::split_ids(inputs), label, ecfg);
      detail::emit(out, output, payload.dump(2) + "\n");
      audit("evaluate", {{"synthesis", text}, {"inputs", inputs}, {"label", label}}, payload);
    } else if (compare_cmd->parsed()) {
      if (!baseline_report) throw Error(ErrorCode::invalid_input, "--entangled requires --baseline");
      auto e = nlohmann::json::parse(read_file(*entangled_report));
      auto b = nlohmann::json::parse(read_file(*baseline_report));
      auto payload = ops::compare_reports(e, b);
      detail::emit(out, output, payload.dump(2) + "\n");
      audit("compare", {{"entangled", e}, {"baseline", b}}, payload);
    } else if (radar_cmd->parsed()) {
      nlohmann::json reports = nlohmann::json::array();
      for (const auto& f : report_files) reports.push_back(nlohmann::json::parse(read_file(f)));
      auto data = ops::radar(reports);
      auto payload = to_json(data);
      detail::emit(out, output, payload.dump(2) + "\n");
      if (svg_out) write_file(*svg_out, radar_svg(data));
      audit("radar", {{"reports", reports}}, payload);
    } else if (serve_cmd->parsed()) {
      auto [host, port] = parse_bind(cfg.bind);
      auto service = std::make_shared<const Service>(engine);
      HttpServer server(service);
      int bound = server.bind(host, port);
      err << fmt::format("entangle {} listening on {}:{}\n", kVersion, host, bound);
      server.listen();
    }
    return 0;
  } catch (const Error& e) {
    err << error_record(e.code(), e.what()).dump() << "\n";
    return is_provider_error(e.code()) ? 3 : 1;
  } catch (const nlohmann::json::exception& e) {
    err << error_record(ErrorCode::parse_error, e.what()).dump() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << error_record(ErrorCode::io_error, e.what()).dump() << "\n";
    return 1;
  }
}

}  // namespace entangle
