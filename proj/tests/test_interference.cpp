#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "entangle/corpus.hpp"
#include "entangle/interference.hpp"
#include "entangle/scenario.hpp"
#include "test_support.hpp"

using namespace entangle;

namespace {

// Oracle cosine over raw coordinates, independent of SemanticVector's cached norm.
double naive_cosine(std::span<const double> a, std::span<const double> b) {
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    ab += a[k] * b[k];
    aa += a[k] * a[k];
    bb += b[k] * b[k];
  }
  return ab / (std::sqrt(aa) * std::sqrt(bb));
}

Axiom make_axiom(std::string id, std::string pre, std::string post) {
  return Axiom{std::move(id), Strategist::custom, Tradition::corporate, std::move(pre), std::move(post), {}, std::nullopt};
}

AxiomLibrary random_library(std::mt19937_64& rng, std::size_t n) {
  std::vector<Axiom> axioms;
  for (std::size_t i = 0; i < n; ++i) {
    axioms.push_back(make_axiom(fmt::format("a{:02}", i), fmt::format("condition {} holds", rng() % 100000),
                                fmt::format("take action {}", rng() % 100000)));
  }
  return AxiomLibrary::from_axioms(std::move(axioms));
}

std::unordered_map<std::string, SemanticVector> full_text_vectors(const AxiomLibrary& lib,
                                                                  const EmbeddingProvider& p) {
  std::unordered_map<std::string, SemanticVector> out;
  for (const auto& a : lib) out.emplace(a.id, p.embed(render_full_text(a)));
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// Activations

TEST(Activations, ScenarioEqualToPreconditionRanksFirstWithAlphaOne) {
  DeterministicTestProvider p;
  auto lib = meta_case_library();
  auto scenario = p.embed(lib.at("m5").precondition);
  auto act = compute_activations(scenario, lib, p, "probe");
  ASSERT_EQ(act.size(), lib.size());
  EXPECT_EQ(act.entries.front().axiom_id, "m5");
  EXPECT_NEAR(act.entries.front().alpha, 1.0, 1e-12);
  EXPECT_EQ(act.scenario_ref, "probe");
}

TEST(Activations, OrthogonalVectorsGiveZero) {
  auto lib = AxiomLibrary::from_axioms({make_axiom("x", "pre", "post")});
  auto provider = fixtures::table_provider(3, {{"pre", fixtures::unit(3, 1)}});
  auto act = compute_activations(SemanticVector(fixtures::unit(3, 0)), lib, *provider);
  EXPECT_EQ(act.entries[0].alpha, 0.0);
}

TEST(Activations, CaseLibraryMatchesBruteForce) {
  DeterministicTestProvider p;
  auto lib = meta_case_library();
  auto profile = SixCProfile::create("Meta vs. FTC", {3.88, 4.42, 4.15, 4.90, 3.70, 4.55});
  auto scenario = embed_scenario(profile, p);
  auto act = compute_activations(scenario, lib, p);

  // Oracle: alpha by naive cosine; rank = number of axioms that beat it.
  std::vector<std::pair<std::string, double>> alphas;
  for (const auto& a : lib) alphas.emplace_back(a.id, naive_cosine(scenario.values(), p.embed(a.precondition).values()));
  std::vector<std::string> expected(alphas.size());
  for (const auto& [id, alpha] : alphas) {
    std::size_t rank = 0;
    for (const auto& [other, beta] : alphas)
      if (beta > alpha || (beta == alpha && other < id)) ++rank;
    expected[rank] = id;
  }
  EXPECT_EQ(act.ranked_ids(), expected);
  for (const auto& [id, alpha] : alphas) EXPECT_NEAR(act.alpha(id), alpha, 1e-12);
}

TEST(Activations, TiesBrokenById) {
  auto lib = AxiomLibrary::from_axioms({make_axiom("b", "same", "x"), make_axiom("a", "same", "y")});
  DeterministicTestProvider p;
  auto act = compute_activations(p.embed("scenario"), lib, p);
  EXPECT_EQ(act.ranked_ids(), (std::vector<std::string>{"a", "b"}));
}

TEST(Activations, EmptyLibraryRejected) {
  DeterministicTestProvider p;
  EXPECT_THROW(compute_activations(p.embed("s"), AxiomLibrary{}, p), Error);
}

TEST(ActivationProperty, RankingInvariantUnderPositiveScaling) {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> scale(1e-3, 1e3);
  DeterministicTestProvider p(64);
  for (int trial = 0; trial < 100; ++trial) {
    auto lib = random_library(rng, 2 + rng() % 11);
    std::vector<SemanticVector> vecs;
    for (const auto& a : lib) vecs.push_back(p.embed(a.precondition));
    auto scenario = p.embed(fmt::format("scenario {}", trial));
    auto base = rank_activations(scenario, lib.ids(), vecs);
    double s = scale(rng);
    std::vector<SemanticVector> scaled_vecs;
    for (const auto& v : vecs) scaled_vecs.push_back(scaled(v, s));
    auto moved = rank_activations(scaled(scenario, s), lib.ids(), scaled_vecs);
    EXPECT_EQ(base.ranked_ids(), moved.ranked_ids()) << "scale " << s;
  }
}

// ---------------------------------------------------------------------------
// Kappa

TEST(KappaSimilarity, Definition) {
  SemanticVector a({1.0, 0.0}), b({0.6, 0.8}), c({0.0, 1.0});
  EXPECT_EQ(kappa_similarity(a, b, 3, 3), 1.0);
  EXPECT_NEAR(kappa_similarity(a, b, 0, 1), 0.6, 1e-12);
  EXPECT_EQ(kappa_similarity(a, c, 0, 1), 0.0);
  EXPECT_THROW(kappa_similarity(a, SemanticVector({1.0, 0.0, 0.0}), 0, 1), Error);
}

TEST(KappaActionConstraint, AnalyticValues) {
  KappaConfig cfg{KappaScheme::action_constraint};
  EXPECT_NEAR(kappa_from_terms(1.0, 0.0, cfg), 0.96402758, 1e-8);
  EXPECT_EQ(kappa_from_terms(0.0, 0.0, cfg), 0.0);

  // A = 1 via identical actions; C = 0 via orthogonal constraints.
  KappaDecomposition d1{SemanticVector({1.0, 0.0}), SemanticVector({1.0, 0.0}), std::nullopt};
  KappaDecomposition d2{SemanticVector({1.0, 0.0}), SemanticVector({0.0, 1.0}), std::nullopt};
  EXPECT_NEAR(kappa_action_constraint(d1, d2, cfg), 0.96402758, 1e-8);

  // Identical axioms: A = 1, C = cos(c, -c) = -1 -> tanh(2.0 + 1.5) = tanh(3.5).
  EXPECT_NEAR(agreement_term(d1, d1), 1.0, 1e-12);
  EXPECT_NEAR(contradiction_term(d1, d1), -1.0, 1e-12);
  EXPECT_NEAR(kappa_action_constraint(d1, d1, cfg), 0.99817790, 1e-8);
}

TEST(KappaActionConstraint, RequiresScheme) {
  KappaDecomposition d{SemanticVector({1.0}), SemanticVector({1.0}), std::nullopt};
  EXPECT_THROW(kappa_action_constraint(d, d, KappaConfig{}), Error);
  KappaDecomposition zero{SemanticVector({0.0}), SemanticVector({1.0}), std::nullopt};
  EXPECT_THROW(kappa_action_constraint(zero, d, KappaConfig{KappaScheme::action_constraint}), Error);
}

TEST(KappaActionConstraintProperty, OpenIntervalAndSwapSymmetric) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g;
  KappaConfig cfg{KappaScheme::action_constraint};
  auto rand_vec = [&] {
    std::vector<double> v(24);
    for (auto& x : v) x = g(rng);
    return SemanticVector(v);
  };
  for (int t = 0; t < 500; ++t) {
    KappaDecomposition di{rand_vec(), rand_vec(), std::nullopt};
    KappaDecomposition dj{rand_vec(), rand_vec(), std::nullopt};
    double k = kappa_action_constraint(di, dj, cfg);
    EXPECT_GT(k, -1.0);
    EXPECT_LT(k, 1.0);
    EXPECT_EQ(agreement_term(di, dj), agreement_term(dj, di));
    EXPECT_NEAR(k, kappa_action_constraint(dj, di, cfg), 1e-15);
  }
  // Extremes of the default calibration stay strictly inside.
  EXPECT_LT(kappa_from_terms(1.0, -1.0, cfg), 1.0);
  EXPECT_GT(kappa_from_terms(-1.0, 1.0, cfg), -1.0);
}

TEST(KappaConfig, CalibrationBounds) {
  KappaConfig bad{KappaScheme::action_constraint, 15.0, 10.0};
  EXPECT_THROW(bad.validate(), Error);
  KappaConfig nan{KappaScheme::action_constraint, std::nan(""), 1.0};
  EXPECT_THROW(nan.validate(), Error);
}

// ---------------------------------------------------------------------------
// Matrix

TEST(InterferenceMatrix, CosinePointSixGivesPointThreeSix) {
  auto lib = AxiomLibrary::from_axioms({make_axiom("a", "p", "q"), make_axiom("b", "r", "s")});
  auto provider = fixtures::table_provider(2, {{"If p, then q.", {1.0, 0.0}}, {"If r, then s.", {0.6, 0.8}}});
  auto m = build_interference_matrix(lib, *provider);
  EXPECT_NEAR(m.interference(0, 1), 0.36, 1e-12);
  EXPECT_NEAR(m.kappa(0, 1), 0.6, 1e-12);
  EXPECT_EQ(m.interference(0, 0), 1.0);
  EXPECT_EQ(m.interference(1, 1), 1.0);
  EXPECT_EQ(m.kappa(1, 1), 1.0);
}

TEST(InterferenceMatrix, ThreeAxiomsMatchDoubleLoopOracle) {
  DeterministicTestProvider p;
  auto lib = meta_case_library().subset({"m1", "m5", "c3"});
  auto m = build_interference_matrix(lib, p);
  std::vector<std::vector<double>> h;
  for (const auto& a : lib) {
    auto v = p.embed(render_full_text(a));
    h.emplace_back(v.values().begin(), v.values().end());
  }
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      double c = naive_cosine(h[i], h[j]);
      double expected = i == j ? 1.0 : c * c;
      EXPECT_NEAR(m.interference(i, j), expected, 1e-12) << i << "," << j;
    }
  }
}

TEST(InterferenceMatrixProperty, RandomLibrariesSimilarityScheme) {
  std::mt19937_64 rng(42);
  DeterministicTestProvider p(32);  // low dimension gives larger, more varied cosines
  for (int trial = 0; trial < 60; ++trial) {
    auto lib = random_library(rng, 2 + rng() % 11);
    auto m = build_interference_matrix(lib, p);
    for (std::size_t i = 0; i < m.size(); ++i) {
      EXPECT_EQ(m.interference(i, i), 1.0);
      for (std::size_t j = 0; j < m.size(); ++j) {
        EXPECT_LT(std::abs(m.interference(i, j) - m.interference(j, i)), 1e-9);
        EXPECT_GE(m.interference(i, j), 0.0);
        EXPECT_LE(m.interference(i, j), 1.0);
      }
    }
  }
}

TEST(InterferenceMatrixProperty, ActionConstraintSymmetricAndBounded) {
  std::mt19937_64 rng(43);
  DeterministicTestProvider p(32);
  for (NegationMode neg : {NegationMode::vector, NegationMode::textual}) {
    KappaConfig cfg{KappaScheme::action_constraint, 2.0, 1.5, neg};
    for (int trial = 0; trial < 20; ++trial) {
      auto lib = random_library(rng, 2 + rng() % 11);
      auto m = build_interference_matrix(lib, p, cfg);
      for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = 0; j < m.size(); ++j) {
          EXPECT_LT(std::abs(m.interference(i, j) - m.interference(j, i)), 1e-9);
          EXPECT_GT(m.kappa(i, j), -1.0);
          EXPECT_LT(m.kappa(i, j), 1.0);
        }
      }
      if (neg == NegationMode::vector) {
        for (std::size_t i = 0; i < m.size(); ++i) EXPECT_NEAR(m.kappa(i, i), std::tanh(3.5), 1e-12);
      }
    }
  }
}

TEST(InterferenceMatrix, ActionConstraintMatchesOracle) {
  DeterministicTestProvider p(16);
  auto lib = meta_case_library().subset({"c1", "m4", "m5"});
  KappaConfig cfg{KappaScheme::action_constraint};
  auto m = build_interference_matrix(lib, p, cfg);
  const auto& ax = lib.axioms();
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      auto ai = p.embed(ax[i].prescription), aj = p.embed(ax[j].prescription);
      auto ci = p.embed(ax[i].precondition), cj = p.embed(ax[j].precondition);
      std::vector<double> neg_cj(cj.values().begin(), cj.values().end());
      for (auto& x : neg_cj) x = -x;
      double A = naive_cosine(ai.values(), aj.values());
      double C = naive_cosine(ci.values(), neg_cj);
      double kappa = std::tanh(2.0 * A - 1.5 * C);
      double expected = naive_cosine(p.embed(render_full_text(ax[i])).values(),
                                     p.embed(render_full_text(ax[j])).values()) * kappa;
      EXPECT_NEAR(m.kappa(i, j), kappa, 1e-12);
      EXPECT_NEAR(m.interference(i, j), expected, 1e-12);
    }
  }
}

TEST(InterferenceMatrix, CsvFormat) {
  auto lib = AxiomLibrary::from_axioms({make_axiom("a", "p", "q"), make_axiom("b", "r", "s")});
  auto provider = fixtures::table_provider(2, {{"If p, then q.", {1.0, 0.0}}, {"If r, then s.", {0.6, 0.8}}});
  auto csv = to_csv(build_interference_matrix(lib, *provider));
  EXPECT_EQ(csv, ",a,b\na,1.000000,0.360000\nb,0.360000,1.000000\n");
}

TEST(InterferenceMatrix, EmptyLibraryRejected) {
  DeterministicTestProvider p;
  EXPECT_THROW(build_interference_matrix(AxiomLibrary{}, p), Error);
}

// ---------------------------------------------------------------------------
// Mix

TEST(Mix, Examples) {
  SemanticVector hi({1.0, 0.0}), hj({0.0, 1.0});
  EXPECT_EQ(mix(hi, hj, 1.0), hi);
  EXPECT_EQ(mix(hi, hj, 0.5), SemanticVector({0.5, 0.5}));
  EXPECT_EQ(mix(SemanticVector({4.0, 0.0}), SemanticVector({0.0, 4.0}), 0.25), SemanticVector({1.0, 3.0}));
  EXPECT_THROW(mix(hi, hj, 1.5), Error);
  EXPECT_THROW(mix(hi, hj, -0.1), Error);
  EXPECT_THROW(mix(hi, SemanticVector({1.0}), 0.5), Error);
}

TEST(MixingCoefficient, Rules) {
  EXPECT_EQ(mixing_coefficient(0.9, 0.1, LambdaRule::symmetric_half), 0.5);
  EXPECT_DOUBLE_EQ(mixing_coefficient(0.75, 0.25, LambdaRule::activation_weighted), 0.75);
  EXPECT_EQ(mixing_coefficient(0.0, 0.0, LambdaRule::activation_weighted), 0.5);
  EXPECT_EQ(mixing_coefficient(0.5, -0.3, LambdaRule::activation_weighted), 1.0);
  EXPECT_EQ(mixing_coefficient(-0.5, -0.3, LambdaRule::activation_weighted), 0.5);
}

// ---------------------------------------------------------------------------
// Field composition

namespace {

// Oracle: direct term-by-term summation of the field equation into one accumulator.
std::vector<double> brute_force_field(const ActivationSet& act, const InterferenceMatrix& m,
                                      const std::unordered_map<std::string, SemanticVector>& vecs,
                                      const MixConfig& cfg) {
  std::size_t dim = vecs.begin()->second.dimension();
  std::vector<double> phi(dim, 0.0);
  for (const auto& id : m.axiom_ids) {
    double a = act.alpha(id);
    for (std::size_t k = 0; k < dim; ++k) phi[k] += a * vecs.at(id)[k];
  }
  for (const auto& i : m.axiom_ids) {
    for (const auto& j : m.axiom_ids) {
      if (i == j) continue;
      double w = m.at(i, j);
      if (std::abs(w) < cfg.floor) continue;
      double ai = act.alpha(i), aj = act.alpha(j);
      double lambda = 0.5;
      if (cfg.lambda_rule == LambdaRule::activation_weighted) {
        double a = ai > 0 ? ai : 0, b = aj > 0 ? aj : 0;
        lambda = a + b > 0 ? a / (a + b) : 0.5;
      }
      for (std::size_t k = 0; k < dim; ++k)
        phi[k] += w * (lambda * vecs.at(i)[k] + (1 - lambda) * vecs.at(j)[k]);
    }
  }
  return phi;
}

}  // namespace

TEST(ComposeField, SingleAxiomIsItsVector) {
  DeterministicTestProvider p;
  auto lib = meta_case_library().subset({"m1"});
  auto vecs = full_text_vectors(lib, p);
  auto m = build_interference_matrix(lib, p);
  ActivationSet act{"s", {{"m1", 1.0}}};
  auto phi = compose_field(act, m, vecs);
  EXPECT_EQ(phi.values, vecs.at("m1"));
  EXPECT_EQ(phi.contributions.size(), 1u);
}

TEST(ComposeField, VanishingWeightsGiveZeroVector) {
  auto lib = AxiomLibrary::from_axioms({make_axiom("a", "p", "q"), make_axiom("b", "r", "s")});
  auto provider = fixtures::table_provider(2, {{"If p, then q.", {1.0, 0.0}}, {"If r, then s.", {0.0, 1.0}}});
  auto m = build_interference_matrix(lib, *provider);
  ASSERT_EQ(m.interference(0, 1), 0.0);
  ActivationSet act{"s", {{"a", 0.0}, {"b", 0.0}}};
  auto phi = compose_field(act, m, full_text_vectors(lib, *provider));
  EXPECT_EQ(phi.values, SemanticVector::zeros(2));
}

TEST(ComposeField, MatchesBruteForceSummation) {
  std::mt19937_64 rng(11);
  DeterministicTestProvider p(48);
  std::uniform_real_distribution<double> alpha(-1.0, 1.0);
  for (auto rule : {LambdaRule::symmetric_half, LambdaRule::activation_weighted}) {
    for (std::size_t n = 3; n <= 8; ++n) {
      auto lib = random_library(rng, n);
      auto vecs = full_text_vectors(lib, p);
      for (auto scheme : {KappaScheme::similarity_based, KappaScheme::action_constraint}) {
        auto m = build_interference_matrix(lib, p, KappaConfig{scheme});
        ActivationSet act;
        for (const auto& id : lib.ids()) act.entries.push_back({id, alpha(rng)});
        MixConfig cfg{rule, n % 2 ? 0.0 : 0.01};
        auto phi = compose_field(act, m, vecs, cfg);
        auto oracle = brute_force_field(act, m, vecs, cfg);
        ASSERT_EQ(phi.values.dimension(), oracle.size());
        for (std::size_t k = 0; k < oracle.size(); ++k) EXPECT_NEAR(phi.values[k], oracle[k], 1e-9);
      }
    }
  }
}

TEST(ComposeField, ContributionsCoverTermsAboveFloor) {
  DeterministicTestProvider p(8);
  auto lib = meta_case_library().subset({"m1", "m2", "m3", "m4"});
  auto m = build_interference_matrix(lib, p);
  ActivationSet act{"s", {{"m1", 0.4}, {"m2", 0.3}, {"m3", 0.2}, {"m4", 0.1}}};
  auto all = compose_field(act, m, full_text_vectors(lib, p));
  EXPECT_EQ(all.contributions.size(), 4u + 12u);
  MixConfig pruned{LambdaRule::symmetric_half, 0.05};
  auto some = compose_field(act, m, full_text_vectors(lib, p), pruned);
  std::size_t expected_cross = 0;
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t j = 0; j < 4; ++j)
      if (i != j && std::abs(m.interference(i, j)) >= 0.05) ++expected_cross;
  EXPECT_EQ(some.contributions.size(), 4u + expected_cross);
}

TEST(ComposeField, LinearInActivations) {
  DeterministicTestProvider p(16);
  auto lib = meta_case_library();
  auto m = build_interference_matrix(lib, p);
  auto vecs = full_text_vectors(lib, p);
  auto act = compute_activations(p.embed("scenario"), lib, p);
  auto doubled = act;
  for (auto& e : doubled.entries) e.alpha *= 2.0;
  for (auto rule : {LambdaRule::symmetric_half, LambdaRule::activation_weighted}) {
    auto f1 = compose_field(act, m, vecs, {rule});
    auto f2 = compose_field(doubled, m, vecs, {rule});
    for (std::size_t k = 0; k < 16; ++k) EXPECT_EQ(f2.activation_part[k], 2.0 * f1.activation_part[k]);
    EXPECT_EQ(f2.interference_part, f1.interference_part);
  }
}

TEST(ComposeField, IdMismatchRejected) {
  DeterministicTestProvider p(8);
  auto lib = meta_case_library().subset({"m1", "m2"});
  auto m = build_interference_matrix(lib, p);
  auto vecs = full_text_vectors(lib, p);
  EXPECT_THROW(compose_field(ActivationSet{"s", {{"m1", 0.1}, {"zz", 0.2}}}, m, vecs), Error);
  EXPECT_THROW(compose_field(ActivationSet{"s", {{"m1", 0.1}}}, m, vecs), Error);
  vecs.erase("m2");
  EXPECT_THROW(compose_field(ActivationSet{"s", {{"m1", 0.1}, {"m2", 0.2}}}, m, vecs), Error);
}

// ---------------------------------------------------------------------------
// Graph

TEST(ExportGraph, CompleteGraphCounts) {
  DeterministicTestProvider p;
  auto lib = meta_case_library();
  auto m = build_interference_matrix(lib, p);
  auto act = compute_activations(p.embed("scenario"), lib, p);
  auto g3 = export_graph(act, m, 3);
  EXPECT_EQ(g3.nodes.size(), 3u);
  EXPECT_EQ(g3.edges.size(), 3u);
  auto g1 = export_graph(act, m, 1);
  EXPECT_EQ(g1.nodes.size(), 1u);
  EXPECT_TRUE(g1.edges.empty());
  EXPECT_THROW(export_graph(act, m, 0), Error);
  EXPECT_THROW(export_graph(act, m, 13), Error);

  auto martin = filter_axioms(lib, AxiomFilter::by_strategist(Strategist::martin));
  auto g8 = export_graph(compute_activations(p.embed("scenario"), martin, p), build_interference_matrix(martin, p), 8);
  EXPECT_EQ(g8.nodes.size(), 8u);
  EXPECT_EQ(g8.edges.size(), 8u * 7u / 2u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(g3.nodes[i].id, act.entries[i].axiom_id);
  EXPECT_EQ(g3.edges[0].weight, m.at(g3.nodes[0].id, g3.nodes[1].id));
}
