#pragma once

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "entangle/axiom.hpp"
#include "entangle/embedding.hpp"
#include "entangle/error.hpp"

namespace entangle {

// ---------------------------------------------------------------------------
// Activations

struct ActivationEntry {
  std::string axiom_id;
  double alpha = 0.0;

  bool operator==(const ActivationEntry&) const = default;
};

/// One entry per library axiom, sorted by alpha descending, id ascending on ties.
struct ActivationSet {
  std::string scenario_ref;
  std::vector<ActivationEntry> entries;

  std::size_t size() const noexcept { return entries.size(); }

  double alpha(std::string_view id) const {
    for (const auto& e : entries)
      if (e.axiom_id == id) return e.alpha;
    throw Error(ErrorCode::not_found, fmt::format("no activation for axiom '{}'", id));
  }

  std::vector<std::string> ranked_ids() const {
    std::vector<std::string> out;
    for (const auto& e : entries) out.push_back(e.axiom_id);
    return out;
  }

  bool operator==(const ActivationSet&) const = default;
};

inline bool activation_order(const ActivationEntry& a, const ActivationEntry& b) {
  if (a.alpha != b.alpha) return a.alpha > b.alpha;
  return a.axiom_id < b.axiom_id;
}

/// Which axiom text is compared against the scenario.
enum class ActivationSource { precondition, full_text };

inline std::string_view to_string(ActivationSource s) {
  return s == ActivationSource::precondition ? "precondition" : "full_text";
}

inline ActivationSource parse_activation_source(std::string_view s) {
  if (s == "precondition") return ActivationSource::precondition;
  if (s == "full_text") return ActivationSource::full_text;
  throw Error(ErrorCode::config_error, fmt::format("unknown activation source '{}'", s));
}

/// alpha_i = cosine(scenario, heuristic_i), ranked.
inline ActivationSet rank_activations(const SemanticVector& scenario_vec,
                                      const std::vector<std::string>& ids,
                                      const std::vector<SemanticVector>& heuristic_vecs,
                                      std::string scenario_ref = {}) {
  if (ids.empty()) throw Error(ErrorCode::invalid_input, "cannot activate an empty library");
  if (ids.size() != heuristic_vecs.size())
    throw Error(ErrorCode::invalid_input, "ids and vectors differ in length");
  ActivationSet out;
  out.scenario_ref = std::move(scenario_ref);
  out.entries.reserve(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i)
    out.entries.push_back({ids[i], cosine(scenario_vec, heuristic_vecs[i])});
  std::sort(out.entries.begin(), out.entries.end(), activation_order);
  return out;
}

inline std::string activation_text(const Axiom& a, ActivationSource source) {
  return source == ActivationSource::precondition ? a.precondition : render_full_text(a);
}

inline ActivationSet compute_activations(const SemanticVector& scenario_vec, const AxiomLibrary& lib,
                                         const EmbeddingProvider& provider,
                                         std::string scenario_ref = {},
                                         ActivationSource source = ActivationSource::precondition) {
  if (lib.empty()) throw Error(ErrorCode::invalid_input, "cannot activate an empty library");
  std::vector<std::string> texts;
  for (const auto& a : lib) texts.push_back(activation_text(a, source));
  return rank_activations(scenario_vec, lib.ids(), provider.batch_embed(texts), std::move(scenario_ref));
}

inline nlohmann::json to_json(const ActivationSet& act) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : act.entries) entries.push_back({{"axiom_id", e.axiom_id}, {"alpha", e.alpha}});
  return {{"scenario", act.scenario_ref}, {"entries", std::move(entries)}};
}

inline ActivationSet activation_set_from_json(const nlohmann::json& j) {
  ActivationSet act;
  act.scenario_ref = j.value("scenario", "");
  for (const auto& e : j.at("entries"))
    act.entries.push_back({e.at("axiom_id").get<std::string>(), e.at("alpha").get<double>()});
  std::sort(act.entries.begin(), act.entries.end(), activation_order);
  return act;
}

// ---------------------------------------------------------------------------
// Interference coefficients

enum class KappaScheme { similarity_based, action_constraint };
enum class NegationMode { vector, textual };

inline std::string_view to_string(KappaScheme s) {
  return s == KappaScheme::similarity_based ? "similarity_based" : "action_constraint";
}
inline KappaScheme parse_kappa_scheme(std::string_view s) {
  if (s == "similarity_based") return KappaScheme::similarity_based;
  if (s == "action_constraint") return KappaScheme::action_constraint;
  throw Error(ErrorCode::invalid_input, fmt::format("unknown kappa scheme '{}'", s));
}
inline std::string_view to_string(NegationMode n) {
  return n == NegationMode::vector ? "vector" : "textual";
}
inline NegationMode parse_negation_mode(std::string_view s) {
  if (s == "vector") return NegationMode::vector;
  if (s == "textual") return NegationMode::textual;
  throw Error(ErrorCode::invalid_input, fmt::format("unknown negation mode '{}'", s));
}

struct KappaConfig {
  KappaScheme scheme = KappaScheme::similarity_based;
  double alpha_cal = 2.0;  // weight on action agreement
  double beta_cal = 1.5;   // weight on constraint contradiction
  NegationMode negation = NegationMode::vector;

  /// Calibration magnitudes are bounded so tanh never rounds to +-1 in
  /// double precision (|A|, |C| <= 1).
  void validate() const {
    if (!std::isfinite(alpha_cal) || !std::isfinite(beta_cal))
      throw Error(ErrorCode::config_error, "kappa calibration parameters must be finite");
    if (std::abs(alpha_cal) + std::abs(beta_cal) > 18.0)
      throw Error(ErrorCode::config_error, "|alpha_cal| + |beta_cal| must not exceed 18");
  }

  bool operator==(const KappaConfig&) const = default;
};

inline nlohmann::json to_json(const KappaConfig& c) {
  return {{"scheme", to_string(c.scheme)},
          {"alpha_cal", c.alpha_cal},
          {"beta_cal", c.beta_cal},
          {"negation", to_string(c.negation)}};
}

/// Similarity scheme: 1 on the diagonal, cosine elsewhere.
inline double kappa_similarity(const SemanticVector& hi, const SemanticVector& hj, std::size_t i,
                               std::size_t j) {
  detail::require_same_dimension(hi, hj);
  if (i == j) return 1.0;
  return cosine(hi, hj);
}

/// Action component (prescription) and constraint component (precondition)
/// of one axiom. `negated_constraint` is set only under textual negation.
struct KappaDecomposition {
  SemanticVector action_embedding;
  SemanticVector constraint_embedding;
  std::optional<SemanticVector> negated_constraint;
};

inline std::string negation_text(std::string_view constraint) {
  return fmt::format("it is not the case that {}", constraint);
}

inline KappaDecomposition decompose(const Axiom& a, const EmbeddingProvider& provider,
                                    NegationMode negation = NegationMode::vector) {
  KappaDecomposition d{provider.embed(a.prescription), provider.embed(a.precondition), std::nullopt};
  if (negation == NegationMode::textual) d.negated_constraint = provider.embed(negation_text(a.precondition));
  return d;
}

inline SemanticVector negated_constraint(const KappaDecomposition& d) {
  return d.negated_constraint ? *d.negated_constraint : negated(d.constraint_embedding);
}

/// Agreement between prescribed actions.
inline double agreement_term(const KappaDecomposition& di, const KappaDecomposition& dj) {
  return cosine(di.action_embedding, dj.action_embedding);
}

/// Similarity of one constraint to the negation of the other.
inline double contradiction_term(const KappaDecomposition& di, const KappaDecomposition& dj) {
  return cosine(di.constraint_embedding, negated_constraint(dj));
}

/// tanh(alpha_cal * A - beta_cal * C)
inline double kappa_from_terms(double agreement, double contradiction, const KappaConfig& cfg) {
  cfg.validate();
  return std::tanh(cfg.alpha_cal * agreement - cfg.beta_cal * contradiction);
}

inline double kappa_action_constraint(const KappaDecomposition& di, const KappaDecomposition& dj,
                                      const KappaConfig& cfg) {
  if (cfg.scheme != KappaScheme::action_constraint)
    throw Error(ErrorCode::invalid_input, "kappa_action_constraint requires the action_constraint scheme");
  return kappa_from_terms(agreement_term(di, dj), contradiction_term(di, dj), cfg);
}

// ---------------------------------------------------------------------------
// Interference matrix

/// Dense row-major square matrix.
class SquareMatrix {
 public:
  SquareMatrix() = default;
  explicit SquareMatrix(std::size_t n, double fill = 0.0) : n_(n), data_(n * n, fill) {}

  std::size_t size() const noexcept { return n_; }
  double& operator()(std::size_t i, std::size_t j) { return data_[i * n_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * n_ + j]; }
  const std::vector<double>& flat() const noexcept { return data_; }

  bool operator==(const SquareMatrix&) const = default;

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

struct InterferenceMatrix {
  std::vector<std::string> axiom_ids;
  SquareMatrix kappa;
  SquareMatrix interference;
  KappaConfig config;

  std::size_t size() const noexcept { return axiom_ids.size(); }

  std::size_t index_of(std::string_view id) const {
    for (std::size_t i = 0; i < axiom_ids.size(); ++i)
      if (axiom_ids[i] == id) return i;
    throw Error(ErrorCode::not_found, fmt::format("axiom '{}' is not in the matrix", id));
  }

  double at(std::string_view a, std::string_view b) const { return interference(index_of(a), index_of(b)); }

  /// Interference restricted to `ids`, in the order given.
  SquareMatrix slice(const std::vector<std::string>& ids) const {
    SquareMatrix out(ids.size());
    std::vector<std::size_t> idx;
    for (const auto& id : ids) idx.push_back(index_of(id));
    for (std::size_t r = 0; r < ids.size(); ++r)
      for (std::size_t c = 0; c < ids.size(); ++c) out(r, c) = interference(idx[r], idx[c]);
    return out;
  }
};

/// Embeddings an interference computation needs, in library order.
struct LibraryEmbeddings {
  std::vector<std::string> ids;
  std::vector<SemanticVector> full_text;
  std::vector<KappaDecomposition> decompositions;  // empty unless action_constraint
};

inline LibraryEmbeddings embed_library(const AxiomLibrary& lib, const EmbeddingProvider& provider,
                                       const KappaConfig& cfg) {
  LibraryEmbeddings out;
  out.ids = lib.ids();
  std::vector<std::string> texts;
  for (const auto& a : lib) texts.push_back(render_full_text(a));
  out.full_text = provider.batch_embed(texts);
  if (cfg.scheme == KappaScheme::action_constraint) {
    for (const auto& a : lib) out.decompositions.push_back(decompose(a, provider, cfg.negation));
  }
  return out;
}

/// I_ij = cosine(h_i, h_j) * kappa_ij over full-text vectors. Under the
/// similarity scheme I_ii = 1 and I_ij = cosine^2. Entries are computed on
/// the upper triangle and mirrored, so the result is exactly symmetric.
inline InterferenceMatrix build_interference_matrix(const LibraryEmbeddings& emb, const KappaConfig& cfg) {
  cfg.validate();
  const std::size_t n = emb.ids.size();
  if (n == 0) throw Error(ErrorCode::invalid_input, "interference matrix needs at least one axiom");
  if (emb.full_text.size() != n) throw Error(ErrorCode::invalid_input, "embedding count mismatch");
  if (cfg.scheme == KappaScheme::action_constraint && emb.decompositions.size() != n)
    throw Error(ErrorCode::invalid_input, "action_constraint scheme needs a decomposition per axiom");

  InterferenceMatrix m{emb.ids, SquareMatrix(n), SquareMatrix(n), cfg};
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i; j < n; ++j) {
      double kappa = 0.0;
      double value = 0.0;
      if (cfg.scheme == KappaScheme::similarity_based) {
        kappa = kappa_similarity(emb.full_text[i], emb.full_text[j], i, j);
        value = i == j ? 1.0 : cosine(emb.full_text[i], emb.full_text[j]) * kappa;
      } else {
        const auto& di = emb.decompositions[i];
        const auto& dj = emb.decompositions[j];
        // Textual negation makes C direction dependent; average both directions.
        double contradiction = 0.5 * (contradiction_term(di, dj) + contradiction_term(dj, di));
        kappa = kappa_from_terms(agreement_term(di, dj), contradiction, cfg);
        value = cosine(emb.full_text[i], emb.full_text[j]) * kappa;
      }
      m.kappa(i, j) = m.kappa(j, i) = kappa;
      m.interference(i, j) = m.interference(j, i) = value;
    }
  }
  return m;
}

inline InterferenceMatrix build_interference_matrix(const AxiomLibrary& lib, const EmbeddingProvider& provider,
                                                    const KappaConfig& cfg = {}) {
  if (lib.empty()) throw Error(ErrorCode::invalid_input, "interference matrix needs at least one axiom");
  return build_interference_matrix(embed_library(lib, provider, cfg), cfg);
}

/// CSV with an id header row and an id first column; cells use 6 decimals.
inline std::string matrix_to_csv(const std::vector<std::string>& ids, const SquareMatrix& values) {
  std::string out;
  for (const auto& id : ids) out += "," + id;
  out += "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    out += ids[i];
    for (std::size_t j = 0; j < ids.size(); ++j) out += fmt::format(",{:.6f}", values(i, j));
    out += "\n";
  }
  return out;
}

inline std::string to_csv(const InterferenceMatrix& m) { return matrix_to_csv(m.axiom_ids, m.interference); }

inline nlohmann::json rows_to_json(const SquareMatrix& s) {
  nlohmann::json rows = nlohmann::json::array();
  for (std::size_t i = 0; i < s.size(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (std::size_t j = 0; j < s.size(); ++j) row.push_back(s(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline nlohmann::json to_json(const InterferenceMatrix& m) {
  return {{"axiom_ids", m.axiom_ids},
          {"config", to_json(m.config)},
          {"kappa", rows_to_json(m.kappa)},
          {"interference", rows_to_json(m.interference)}};
}

// ---------------------------------------------------------------------------
// Mix operator and field composition

/// lambda * h_i + (1 - lambda) * h_j
inline SemanticVector mix(const SemanticVector& hi, const SemanticVector& hj, double lambda) {
  detail::require_same_dimension(hi, hj);
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw Error(ErrorCode::invalid_input, fmt::format("mixing coefficient {} is outside [0, 1]", lambda));
  std::vector<double> out(hi.dimension());
  for (std::size_t k = 0; k < out.size(); ++k)
    out[k] = lambda * hi.values()[k] + (1.0 - lambda) * hj.values()[k];
  return SemanticVector(std::move(out));
}

enum class LambdaRule { symmetric_half, activation_weighted };

inline std::string_view to_string(LambdaRule r) {
  return r == LambdaRule::symmetric_half ? "symmetric_half" : "activation_weighted";
}
inline LambdaRule parse_lambda_rule(std::string_view s) {
  if (s == "symmetric_half") return LambdaRule::symmetric_half;
  if (s == "activation_weighted") return LambdaRule::activation_weighted;
  throw Error(ErrorCode::config_error, fmt::format("unknown lambda rule '{}'", s));
}

struct MixConfig {
  LambdaRule lambda_rule = LambdaRule::symmetric_half;
  double floor = 0.0;  // cross terms with |I_ij| < floor are dropped

  void validate() const {
    if (!(floor >= 0.0 && floor <= 1.0)) throw Error(ErrorCode::config_error, "mix floor must lie in [0, 1]");
  }

  bool operator==(const MixConfig&) const = default;
};

inline nlohmann::json to_json(const MixConfig& c) {
  return {{"lambda_rule", to_string(c.lambda_rule)}, {"floor", c.floor}};
}

/// activation_weighted: a/(a+b) over activations clipped at zero, 0.5 when
/// both are non-positive. Always in [0, 1].
inline double mixing_coefficient(double alpha_i, double alpha_j, LambdaRule rule) {
  if (rule == LambdaRule::symmetric_half) return 0.5;
  double a = std::max(alpha_i, 0.0);
  double b = std::max(alpha_j, 0.0);
  return a + b > 0.0 ? a / (a + b) : 0.5;
}

struct FieldTerm {
  enum class Kind { activation, interference };
  Kind kind = Kind::activation;
  std::string axiom_i;
  std::string axiom_j;  // empty for activation terms
  double weight = 0.0;  // alpha_i or I_ij
  double lambda = 0.0;  // only for interference terms
};

/// Phi = sum_i alpha_i h_i + sum_{i != j, |I_ij| >= floor} I_ij mix(h_i, h_j, lambda_ij)
struct FieldVector {
  SemanticVector values;
  SemanticVector activation_part;
  SemanticVector interference_part;
  std::vector<FieldTerm> contributions;
};

inline FieldVector compose_field(const ActivationSet& act, const InterferenceMatrix& m,
                                 const std::unordered_map<std::string, SemanticVector>& vecs,
                                 const MixConfig& cfg = {}) {
  cfg.validate();
  const std::size_t n = m.size();
  if (n == 0) throw Error(ErrorCode::invalid_input, "cannot compose an empty field");
  if (act.size() != n) throw Error(ErrorCode::invalid_input, "activation set and matrix cover different axioms");
  std::vector<double> alpha(n);
  std::vector<const SemanticVector*> h(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& id = m.axiom_ids[i];
    try {
      alpha[i] = act.alpha(id);
    } catch (const Error&) {
      throw Error(ErrorCode::invalid_input, fmt::format("axiom '{}' has no activation", id));
    }
    auto it = vecs.find(id);
    if (it == vecs.end()) throw Error(ErrorCode::invalid_input, fmt::format("axiom '{}' has no vector", id));
    h[i] = &it->second;
  }
  const std::size_t dim = h[0]->dimension();
  std::vector<double> lin(dim, 0.0);
  std::vector<double> cross(dim, 0.0);
  FieldVector out;
  for (std::size_t i = 0; i < n; ++i) {
    detail::require_same_dimension(*h[0], *h[i]);
    for (std::size_t k = 0; k < dim; ++k) lin[k] += alpha[i] * h[i]->values()[k];
    out.contributions.push_back({FieldTerm::Kind::activation, m.axiom_ids[i], {}, alpha[i], 0.0});
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      double weight = m.interference(i, j);
      if (std::abs(weight) < cfg.floor) continue;
      double lambda = mixing_coefficient(alpha[i], alpha[j], cfg.lambda_rule);
      auto blended = mix(*h[i], *h[j], lambda);
      for (std::size_t k = 0; k < dim; ++k) cross[k] += weight * blended.values()[k];
      out.contributions.push_back({FieldTerm::Kind::interference, m.axiom_ids[i], m.axiom_ids[j], weight, lambda});
    }
  }
  std::vector<double> total(dim);
  for (std::size_t k = 0; k < dim; ++k) total[k] = lin[k] + cross[k];
  out.values = SemanticVector(std::move(total));
  out.activation_part = SemanticVector(std::move(lin));
  out.interference_part = SemanticVector(std::move(cross));
  return out;
}

inline nlohmann::json to_json(const FieldVector& f) {
  nlohmann::json terms = nlohmann::json::array();
  for (const auto& t : f.contributions) {
    if (t.kind == FieldTerm::Kind::activation)
      terms.push_back({{"kind", "activation"}, {"axiom", t.axiom_i}, {"weight", t.weight}});
    else
      terms.push_back({{"kind", "interference"},
                       {"axiom_i", t.axiom_i},
                       {"axiom_j", t.axiom_j},
                       {"weight", t.weight},
                       {"lambda", t.lambda}});
  }
  return {{"dimension", f.values.dimension()},
          {"norm", f.values.norm()},
          {"activation_norm", f.activation_part.norm()},
          {"interference_norm", f.interference_part.norm()},
          {"contributions", std::move(terms)}};
}

// ---------------------------------------------------------------------------
// Compositional graph

struct GraphNode {
  std::string id;
  double alpha = 0.0;
};

struct GraphEdge {
  std::string source;
  std::string target;
  double weight = 0.0;
};

struct CompositionGraph {
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;
};

/// Top-n activated axioms as nodes (activation order) and every pair among
/// them as an edge weighted by I_ij.
inline CompositionGraph export_graph(const ActivationSet& act, const InterferenceMatrix& m, std::size_t top_n) {
  if (top_n == 0) throw Error(ErrorCode::invalid_input, "top_n must be at least 1");
  if (top_n > act.size())
    throw Error(ErrorCode::invalid_input,
                fmt::format("top_n {} exceeds library size {}", top_n, act.size()));
  CompositionGraph g;
  for (std::size_t i = 0; i < top_n; ++i) g.nodes.push_back({act.entries[i].axiom_id, act.entries[i].alpha});
  for (std::size_t a = 0; a < g.nodes.size(); ++a)
    for (std::size_t b = a + 1; b < g.nodes.size(); ++b)
      g.edges.push_back({g.nodes[a].id, g.nodes[b].id, m.at(g.nodes[a].id, g.nodes[b].id)});
  return g;
}

inline nlohmann::json to_json(const CompositionGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"alpha", n.alpha}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) edges.push_back({{"source", e.source}, {"target", e.target}, {"weight", e.weight}});
  return {{"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace entangle
