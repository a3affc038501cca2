#include <gtest/gtest.h>

#include <random>
#include <string>

#include "entangle/axiom.hpp"
#include "entangle/corpus.hpp"
#include "test_support.hpp"

using namespace entangle;

namespace {

std::string record(const std::string& id, const std::string& pre = "p", const std::string& post = "q") {
  return R"({"id":")" + id + R"(","strategist":"Martin","tradition":"corporate","precondition":")" + pre +
         R"(","prescription":")" + post + R"(","tags":[]})" + "\n";
}

}  // namespace

TEST(AxiomLibrary, LoadsMartinAxiomsFromCorpusFile) {
  auto lib = load_library(fixtures::source_path("data/meta_case_axioms.jsonl"));
  auto martin = filter_axioms(lib, AxiomFilter::by_strategist(Strategist::martin));
  ASSERT_EQ(martin.size(), 8u);
  std::vector<std::string> expected{"m1", "m2", "m3", "m4", "m5", "m6", "m7", "m8"};
  EXPECT_EQ(martin.ids(), expected);
  EXPECT_EQ(render_full_text(martin.at("m1")), "If a competitor gains strength, then reposition your advantage.");
  EXPECT_EQ(render_full_text(martin.at("m8")), "If crisis imposes constraints, then reframe the crisis as opportunity.");
}

TEST(AxiomLibrary, BuiltinCorpusMatchesDataFile) {
  auto from_file = load_library(fixtures::source_path("data/meta_case_axioms.jsonl"));
  auto builtin = meta_case_library();
  EXPECT_EQ(from_file.axioms(), builtin.axioms());
  EXPECT_EQ(builtin.size(), 12u);
}

TEST(AxiomLibrary, EmptyFileIsValidEmptyLibrary) {
  auto lib = parse_library("");
  EXPECT_TRUE(lib.empty());
  auto only_comments = parse_library("# nothing here\n\n");
  EXPECT_TRUE(only_comments.empty());
}

TEST(AxiomLibrary, DuplicateIdRejectedWithLineContext) {
  try {
    parse_library(record("m1") + record("m1"), "dup.jsonl");
    FAIL() << "expected duplicate-id error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::duplicate_id);
    EXPECT_NE(std::string(e.what()).find("dup.jsonl:2"), std::string::npos) << e.what();
  }
}

TEST(AxiomLibrary, EmptyClauseRejected) {
  try {
    parse_library(record("a") + record("b", "  ", "q"), "x.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::invariant_violation);
    EXPECT_NE(std::string(e.what()).find("x.jsonl:2"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("precondition"), std::string::npos);
  }
  EXPECT_THROW(parse_library(record("a", "p", "")), Error);
}

TEST(AxiomLibrary, ParseErrorsCarryLine) {
  try {
    parse_library(record("a") + "{not json\n", "bad.jsonl");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::parse_error);
    EXPECT_NE(std::string(e.what()).find("bad.jsonl:2"), std::string::npos);
  }
  EXPECT_THROW(parse_library(R"({"id":"a","strategist":"Napoleon","tradition":"corporate","precondition":"p","prescription":"q"})"),
               Error);
  EXPECT_THROW(parse_library(R"({"id":"a","strategist":"Martin","tradition":"corporate","precondition":"p"})"), Error);
  EXPECT_THROW(parse_library(R"({"id":"a","strategist":"Martin","tradition":"corporate","precondition":"p","prescription":"q","extra":1})"),
               Error);
}

TEST(AxiomLibrary, ThemeMustBeTaxonomyOrRegistered) {
  std::string custom =
      R"({"id":"a","strategist":"custom","tradition":"corporate","precondition":"p","prescription":"q","theme":"negotiation"})";
  EXPECT_THROW(parse_library(custom), Error);
  auto lib = parse_library(R"({"custom_themes":["negotiation"]})" "\n" + custom);
  ASSERT_EQ(lib.size(), 1u);
  EXPECT_EQ(*lib[0].theme, "negotiation");
  EXPECT_TRUE(lib.custom_themes().contains("negotiation"));
}

TEST(AxiomLibrary, StrategistTraditionMismatchRejected) {
  EXPECT_THROW(parse_library(R"({"id":"a","strategist":"SunTzu","tradition":"corporate","precondition":"p","prescription":"q"})"),
               Error);
}

TEST(AxiomLibrary, IterationOrderIsById) {
  auto lib = parse_library(record("zeta") + record("alpha") + record("mid"));
  EXPECT_EQ(lib.ids(), (std::vector<std::string>{"alpha", "mid", "zeta"}));
}

TEST(RenderFullText, CanonicalConditional) {
  Axiom a{"c1", Strategist::machiavelli, Tradition::military_political, "your position is uncertain",
          "delay to gather advantage", {}, std::nullopt};
  EXPECT_EQ(render_full_text(a), "If your position is uncertain, then delay to gather advantage.");
  Axiom xy{"t", Strategist::custom, Tradition::corporate, "X", "Y", {}, std::nullopt};
  EXPECT_EQ(render_full_text(xy), "If X, then Y.");
  EXPECT_EQ(render_full_text(a), render_full_text(a));
}

TEST(RenderFullText, EveryCorpusAxiomHasConditionalShape) {
  for (const auto& a : meta_case_library()) {
    auto text = render_full_text(a);
    EXPECT_EQ(text.rfind("If ", 0), 0u) << text;
    EXPECT_NE(text.find(", then "), std::string::npos) << text;
  }
}

TEST(FilterAxioms, ByTraditionGivesFourClassicalAxioms) {
  auto lib = meta_case_library();
  auto classical = filter_axioms(lib, AxiomFilter::parse("tradition=military_political"));
  EXPECT_EQ(classical.ids(), (std::vector<std::string>{"c1", "c2", "c3", "c4"}));
  std::set<Strategist> strategists;
  for (const auto& a : classical) strategists.insert(a.strategist);
  EXPECT_EQ(strategists.size(), 4u);
  EXPECT_EQ(lib.size(), 12u);  // original untouched
}

TEST(FilterAxioms, AbsentTagYieldsEmptyLibrary) {
  auto out = filter_axioms(meta_case_library(), AxiomFilter::parse("tag=no_such_theme"));
  EXPECT_TRUE(out.empty());
}

TEST(FilterAxioms, UnknownNamesRejected) {
  EXPECT_THROW(AxiomFilter::parse("strategist=Napoleon"), Error);
  EXPECT_THROW(AxiomFilter::parse("tradition=naval"), Error);
  EXPECT_THROW(AxiomFilter::parse("tag=Not A Label"), Error);
  EXPECT_THROW(AxiomFilter::parse("colour=red"), Error);
  EXPECT_THROW(AxiomFilter::parse("Martin"), Error);
}

TEST(FilterAxioms, Idempotent) {
  auto lib = meta_case_library();
  for (const char* expr : {"strategist=Martin", "tradition=corporate", "tag=timing", "tag=flexibility_under_uncertainty"}) {
    auto f = AxiomFilter::parse(expr);
    auto once = filter_axioms(lib, f);
    auto twice = filter_axioms(once, f);
    EXPECT_EQ(once.axioms(), twice.axioms()) << expr;
  }
}

// Property: serialize -> parse is identity on axiom content, over random libraries.
TEST(AxiomLibraryProperty, SerializeRoundTrip) {
  std::mt19937_64 rng(20251016);
  const std::vector<std::string> words{"rival", "moves", "first", "\"quoted\"", "naïve", "delay", "shape", "crisis"};
  const std::vector<Strategist> strategists{Strategist::machiavelli, Strategist::sun_tzu, Strategist::martin,
                                            Strategist::custom};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Axiom> axioms;
    std::size_t n = rng() % 10;
    for (std::size_t i = 0; i < n; ++i) {
      Axiom a;
      a.id = "ax" + std::to_string(rng() % 1000) + "_" + std::to_string(i);
      a.strategist = strategists[rng() % strategists.size()];
      a.tradition = natural_tradition(a.strategist).value_or(rng() % 2 ? Tradition::corporate
                                                                       : Tradition::military_political);
      a.precondition = words[rng() % words.size()] + " " + words[rng() % words.size()];
      a.prescription = words[rng() % words.size()];
      if (rng() % 2) a.tags.push_back("timing");
      if (rng() % 3 == 0) a.theme = std::string(kThemeTaxonomy[rng() % kThemeTaxonomy.size()]);
      axioms.push_back(a);
    }
    auto lib = AxiomLibrary::from_axioms(axioms);
    auto again = parse_library(serialize_library(lib));
    EXPECT_EQ(lib.axioms(), again.axioms());
  }
}
