#include <gtest/gtest.h>

#include <random>
#include <set>

#include "entangle/scenario.hpp"
#include "test_support.hpp"

using namespace entangle;

namespace {

SixCProfile meta() {
  return SixCProfile::create("Meta vs. FTC", {3.88, 4.42, 4.15, 4.90, 3.70, 4.55});
}

std::size_t count(const std::string& haystack, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = haystack.find(needle); pos != std::string::npos; pos = haystack.find(needle, pos + 1)) ++n;
  return n;
}

}  // namespace

TEST(RenderScenario, MetaProfile) {
  auto text = render_scenario_text(meta());
  EXPECT_NE(text.find("Potential Energy is very high (4.90 of 5)"), std::string::npos) << text;
  EXPECT_EQ(text,
            "Offensive Strength is high (3.88 of 5); Defensive Strength is high (4.42 of 5); "
            "Relational Capacity is high (4.15 of 5); Potential Energy is very high (4.90 of 5); "
            "Temporal Availability is high (3.70 of 5); Contextual Fit is very high (4.55 of 5).");
}

TEST(RenderScenario, AllZeroProfile) {
  auto text = render_scenario_text(SixCProfile::create("floor", {0, 0, 0, 0, 0, 0}));
  EXPECT_EQ(count(text, "is low (0.00 of 5)"), 6u) << text;
}

TEST(RenderScenario, Deterministic) { EXPECT_EQ(render_scenario_text(meta()), render_scenario_text(meta())); }

TEST(RenderScenario, BucketEdges) {
  auto q = [](double v) {
    return render_scenario_text(SixCProfile::create("b", {v, 0, 0, 0, 0, 0}));
  };
  EXPECT_NE(q(1.99).find("is low (1.99"), std::string::npos);
  EXPECT_NE(q(2.0).find("is moderate (2.00"), std::string::npos);
  EXPECT_NE(q(3.49).find("is moderate (3.49"), std::string::npos);
  EXPECT_NE(q(3.5).find("is high (3.50"), std::string::npos);
  EXPECT_NE(q(4.5).find("is very high (4.50"), std::string::npos);
  // Bucketing uses the displayed (rounded) value.
  EXPECT_NE(q(4.499).find("is very high (4.50"), std::string::npos);
  QualifierBuckets custom{1.0, 2.0, 3.0};
  EXPECT_NE(render_scenario_text(SixCProfile::create("b", {3.1, 0, 0, 0, 0, 0}), custom).find("very high"),
            std::string::npos);
}

TEST(RenderScenario, NarrativeContextAppended) {
  auto p = SixCProfile::create("ctx", {1, 2, 3, 4, 5, 0}, "Regulators are watching.");
  auto text = render_scenario_text(p);
  EXPECT_TRUE(text.ends_with(". Regulators are watching.")) << text;
}

TEST(RenderScenarioProperty, InjectiveOnRoundedValues) {
  std::mt19937_64 rng(99);
  std::uniform_int_distribution<int> hundredths(0, 500);
  std::set<std::array<int, 6>> seen_values;
  std::set<std::string> seen_texts;
  for (int t = 0; t < 2000; ++t) {
    std::array<int, 6> raw{};
    std::array<double, 6> values{};
    for (std::size_t i = 0; i < 6; ++i) {
      raw[i] = hundredths(rng);
      values[i] = raw[i] / 100.0;
    }
    if (!seen_values.insert(raw).second) continue;
    EXPECT_TRUE(seen_texts.insert(render_scenario_text(SixCProfile::create("p", values))).second);
  }
}

TEST(SixCProfile, OutOfRangeRejectedNotClamped) {
  EXPECT_THROW(SixCProfile::create("x", {5.01, 0, 0, 0, 0, 0}), Error);
  EXPECT_THROW(SixCProfile::create("x", {-0.01, 0, 0, 0, 0, 0}), Error);
  EXPECT_THROW(SixCProfile::create("x", {std::nan(""), 0, 0, 0, 0, 0}), Error);
  EXPECT_THROW(SixCProfile::create("", {0, 0, 0, 0, 0, 0}), Error);
  EXPECT_NO_THROW(SixCProfile::create("x", {7, 0, 0, 0, 0, 0}, std::nullopt, 10.0));
  auto ten = SixCProfile::create("x", {7, 0, 0, 0, 0, 0}, std::nullopt, 10.0);
  EXPECT_NE(render_scenario_text(ten).find("(7.00 of 10)"), std::string::npos);
}

TEST(SixCProfile, JsonRoundTripAndFile) {
  auto loaded = load_scenario(fixtures::source_path("data/meta_scenario.json"));
  EXPECT_EQ(loaded.label(), "Meta vs. FTC");
  EXPECT_DOUBLE_EQ(loaded.value(Dimension::potential_energy), 4.90);
  EXPECT_TRUE(loaded.narrative_context().has_value());
  EXPECT_EQ(profile_from_json(to_json(loaded)), loaded);
  EXPECT_THROW(profile_from_json(nlohmann::json{{"label", "x"}}), Error);
  try {
    load_scenario("/nonexistent/scenario.json");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/scenario.json"), std::string::npos);
  }
}

TEST(EmbedScenario, DimensionAndComposition) {
  DeterministicTestProvider p;
  auto v = embed_scenario(meta(), p);
  EXPECT_EQ(v.dimension(), 384u);
  // Composition of the two operations, computed separately.
  EXPECT_EQ(v, p.embed(render_scenario_text(meta())));
  EXPECT_EQ(embed_scenario(meta(), p), embed_scenario(meta(), p));
}

TEST(EmbedScenario, WeightedDimensionsEncoder) {
  // Basis: each dimension name maps to its own axis.
  std::vector<std::pair<std::string, std::vector<double>>> rows;
  for (std::size_t i = 0; i < kDimensions.size(); ++i)
    rows.emplace_back(std::string(display_name(kDimensions[i])), fixtures::unit(6, i));
  auto provider = fixtures::table_provider(6, rows);
  auto p = SixCProfile::create("w", {1, 0, 3, 0, 0, 0});
  auto v = embed_scenario(p, *provider, ScenarioEncoder::weighted_dimensions);
  EXPECT_DOUBLE_EQ(v[0], 0.25);
  EXPECT_DOUBLE_EQ(v[2], 0.75);
  EXPECT_DOUBLE_EQ(v[1], 0.0);
  EXPECT_THROW(embed_scenario(SixCProfile::create("z", {0, 0, 0, 0, 0, 0}), *provider,
                              ScenarioEncoder::weighted_dimensions),
               Error);
}
