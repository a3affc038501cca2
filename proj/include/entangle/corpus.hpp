#pragma once

#include <string_view>

#include "entangle/axiom.hpp"

namespace entangle {

/// Starter corpus shipped with the engine (mirrors data/meta_case_axioms.jsonl):
/// ids m1..m8 are Martin's corporate axioms, c1..c4 the classical ones.
inline constexpr std::string_view kMetaCaseCorpus = R"corpus(
# Meta vs. FTC case library: eight Martin axioms and four classical axioms.
# One JSON record per line; see docs/formats.md.
{"id":"m1","strategist":"Martin","tradition":"corporate","precondition":"a competitor gains strength","prescription":"reposition your advantage","tags":["structural_repositioning","competition"],"theme":"structural_repositioning"}
{"id":"m2","strategist":"Martin","tradition":"corporate","precondition":"a rival's strength threatens your positioning","prescription":"redefine the game","tags":["structural_repositioning","competition"],"theme":"structural_repositioning"}
{"id":"m3","strategist":"Martin","tradition":"corporate","precondition":"organizational limitations constrain you","prescription":"work around them innovatively","tags":["resource_optimization","constraint_navigation"],"theme":"resource_optimization"}
{"id":"m4","strategist":"Martin","tradition":"corporate","precondition":"offensive timing is critical","prescription":"accelerate preemptive engagement","tags":["timing_and_tempo","timing"],"theme":"timing_and_tempo"}
{"id":"m5","strategist":"Martin","tradition":"corporate","precondition":"uncertainty prevents commitment","prescription":"deploy reversible moves","tags":["flexibility_under_uncertainty","optionality"],"theme":"flexibility_under_uncertainty"}
{"id":"m6","strategist":"Martin","tradition":"corporate","precondition":"peripheral signals emerge","prescription":"test small adaptations","tags":["flexibility_under_uncertainty","sensing"],"theme":"flexibility_under_uncertainty"}
{"id":"m7","strategist":"Martin","tradition":"corporate","precondition":"you face a structural disadvantage","prescription":"shape the environment in your favor","tags":["structural_repositioning","constraint_navigation"],"theme":"structural_repositioning"}
{"id":"m8","strategist":"Martin","tradition":"corporate","precondition":"crisis imposes constraints","prescription":"reframe the crisis as opportunity","tags":["crisis_transformation","narrative_control"],"theme":"crisis_transformation"}
{"id":"c1","strategist":"Machiavelli","tradition":"military_political","precondition":"your position is uncertain","prescription":"delay to gather advantage","tags":["timing_and_tempo","timing"],"theme":"timing_and_tempo"}
{"id":"c2","strategist":"LiddellHart","tradition":"military_political","precondition":"you lack resources","prescription":"prioritize flexibility","tags":["flexibility_under_uncertainty","resource_optimization"],"theme":"flexibility_under_uncertainty"}
{"id":"c3","strategist":"SunTzu","tradition":"military_political","precondition":"deception can prevent conflict","prescription":"use it early","tags":["indirect_maneuver","deception"],"theme":"indirect_maneuver"}
{"id":"c4","strategist":"Clausewitz","tradition":"military_political","precondition":"fortune shifts against you","prescription":"reposition swiftly","tags":["flexibility_under_uncertainty","timing"],"theme":"flexibility_under_uncertainty"}
)corpus";

inline AxiomLibrary meta_case_library() {
  return parse_library(kMetaCaseCorpus, "builtin:meta_case");
}

}  // namespace entangle
