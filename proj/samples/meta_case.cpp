// Walks the case study through the library API: activations, the
// interference slice for the top three axioms, a contrarian synthesis next
// to its baseline, and the metric comparison.
//
//   ./build/samples/meta_case [scenario.json]   (run from the repository root)
//
// Uses the deterministic providers unless ENTANGLE_EMBED_URL/STORE or
// ENTANGLE_LLM_URL are set.

#include <fmt/format.h>

#include <iostream>

#include "entangle/engine.hpp"

using namespace entangle;

int main(int argc, char** argv) {
  try {
    nlohmann::json flags = nlohmann::json::object();
    flags["scenario"] = argc > 1 ? argv[1] : "data/meta_scenario.json";
    flags["audit_dir"] = "";
    Engine engine(resolve_engine_config(flags, std::nullopt));
    auto scenario = engine.default_scenario();

    fmt::print("{}\n{}\n\n", scenario.label(), render_scenario_text(scenario));

    auto act = engine.activate(scenario);
    fmt::print("activations\n");
    for (const auto& e : act.entries) fmt::print("  {:<4} {:+.4f}\n", e.axiom_id, e.alpha);

    SynthesisDescriptor d(scenario);
    d.framing = FramingKind::contrarian;
    d.top_n = 3;
    auto cmp = engine.compare_modes(d);

    const auto& req = cmp.entangled.request_echo;
    fmt::print("\ninterference among the selected axioms\n");
    for (std::size_t r = 0; r < req.selected.size(); ++r) {
      fmt::print("  {:<4}", req.selected[r].axiom.id);
      for (std::size_t c = 0; c < req.selected.size(); ++c) fmt::print(" {:.3f}", req.matrix_slice(r, c));
      fmt::print("\n");
    }

    fmt::print("\nentangled ({})\n  {}\n", to_string(d.framing), cmp.entangled.narrative);
    fmt::print("baseline\n  {}\n\n", cmp.baseline.narrative);

    for (const auto& m : cmp.comparison.metrics) {
      auto show = [](const std::optional<double>& v) { return v ? fmt::format("{:.3f}", *v) : std::string("N/A"); };
      fmt::print("  {:<9} entangled {:>7}  baseline {:>7}  delta {:>7}\n", m.metric, show(m.entangled), show(m.baseline),
                 show(m.delta));
    }
  } catch (const Error& e) {
    std::cerr << to_string(e.code()) << ": " << e.what() << "\n";
    return 1;
  }
  return 0;
}
