#pragma once

#include <cmath>
#include <cstddef>
#include <iomanip>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mflaw/bipartite_graph.hpp"
#include "mflaw/error.hpp"
#include "mflaw/summation.hpp"

namespace mflaw {

// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  std::span<const double> row(std::size_t r) const {
    return std::span(data_).subspan(r * cols_, cols_);
  }
  std::span<const double> data() const noexcept { return data_; }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

// Which model produced a joint distribution.
enum class ModelKind {
  kBiased,       // c a_ij (mu_i omega_j)^phi
  kMinimalist,   // c a_ij mu_i, c = 1 / sum mu^2
  kModelFamily,  // p(s_i | r_j) p(r_j) with an a-priori meaning prior
  kEmpirical,    // normalized walk transition counts
};

inline std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::kBiased: return "biased";
    case ModelKind::kMinimalist: return "minimalist";
    case ModelKind::kModelFamily: return "model_family";
    case ModelKind::kEmpirical: return "empirical";
  }
  return "unknown";
}

// Values of phi above this are accepted but flagged in reports.
inline constexpr double kDiscussedPhiMax = 2.0;

inline void require_valid_phi(double phi) {
  if (!(phi >= 0.0) || !std::isfinite(phi)) {
    fail(ErrorKind::kInvalidArgument, "bias exponent phi must be a finite value >= 0");
  }
}

// x^phi with 0^0 = 1.
inline double bias_power(double x, double phi) {
  if (phi == 0.0) return 1.0;
  return std::pow(x, phi);
}

// Joint probabilities p(s_i, r_j), stored sparsely on the edges of the graph
// that generated them (entries off the support are zero by construction).
class JointDistribution {
 public:
  JointDistribution(std::size_t num_words, std::size_t num_meanings, std::vector<Edge> support,
                    std::vector<double> probs, ModelKind kind, std::optional<double> phi,
                    double normalizer)
      : num_words_(num_words),
        num_meanings_(num_meanings),
        support_(std::move(support)),
        probs_(std::move(probs)),
        kind_(kind),
        phi_(phi),
        normalizer_(normalizer) {
    if (support_.size() != probs_.size()) {
      fail(ErrorKind::kInvalidArgument, "support and probability vectors differ in length");
    }
  }

  std::size_t num_words() const noexcept { return num_words_; }
  std::size_t num_meanings() const noexcept { return num_meanings_; }
  std::span<const Edge> support() const noexcept { return support_; }
  std::span<const double> probs() const noexcept { return probs_; }
  ModelKind kind() const noexcept { return kind_; }
  // Bias exponent; empty for the minimalist and empirical models.
  std::optional<double> phi() const noexcept { return phi_; }
  // The normalizing sum M (c = 1 / M); 0 when not meaningful.
  double normalizer() const noexcept { return normalizer_; }

  double at(std::size_t i, std::size_t j) const {
    auto it = std::lower_bound(support_.begin(), support_.end(), Edge{i, j});
    if (it == support_.end() || *it != Edge{i, j}) return 0.0;
    return probs_[static_cast<std::size_t>(it - support_.begin())];
  }

  Matrix dense() const {
    Matrix out(num_words_, num_meanings_);
    for (std::size_t e = 0; e < support_.size(); ++e) {
      out(support_[e].word, support_[e].meaning) = probs_[e];
    }
    return out;
  }

  double total() const { return compensated_sum(probs_); }

 private:
  std::size_t num_words_;
  std::size_t num_meanings_;
  std::vector<Edge> support_;
  std::vector<double> probs_;
  ModelKind kind_;
  std::optional<double> phi_;
  double normalizer_;
};

inline std::vector<Edge> edge_vector(const BipartiteGraph& g) {
  return {g.edges().begin(), g.edges().end()};
}

inline void require_probability_graph(const BipartiteGraph& g) {
  g.require_strict();
  if (g.num_edges() == 0) fail(ErrorKind::kInvalidArgument, "graph has no edges");
}

// p(s_i, r_j) = a_ij (mu_i omega_j)^phi / M.
inline JointDistribution joint_probability(const BipartiteGraph& g, double phi) {
  require_probability_graph(g);
  require_valid_phi(phi);
  std::vector<double> weights;
  weights.reserve(g.num_edges());
  for (const Edge& e : g.edges()) {
    const double product =
        static_cast<double>(g.word_degree(e.word)) * static_cast<double>(g.meaning_degree(e.meaning));
    weights.push_back(bias_power(product, phi));
  }
  const double normalizer = compensated_sum(weights);
  for (double& w : weights) w /= normalizer;
  return JointDistribution(g.num_words(), g.num_meanings(), edge_vector(g), std::move(weights),
                           ModelKind::kBiased, phi, normalizer);
}

// p(s_i, r_j) = a_ij mu_i / sum_k mu_k^2.
inline JointDistribution minimalist_joint(const BipartiteGraph& g) {
  require_probability_graph(g);
  CompensatedSum squares;
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    const double mu = static_cast<double>(g.word_degree(i));
    squares.add(mu * mu);
  }
  const double normalizer = squares.value();
  std::vector<double> probs;
  probs.reserve(g.num_edges());
  for (const Edge& e : g.edges()) {
    probs.push_back(static_cast<double>(g.word_degree(e.word)) / normalizer);
  }
  return JointDistribution(g.num_words(), g.num_meanings(), edge_vector(g), std::move(probs),
                           ModelKind::kMinimalist, std::nullopt, normalizer);
}

inline std::vector<double> word_marginal(const JointDistribution& joint) {
  std::vector<CompensatedSum> rows(joint.num_words());
  const auto support = joint.support();
  const auto probs = joint.probs();
  for (std::size_t e = 0; e < support.size(); ++e) rows[support[e].word].add(probs[e]);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& r : rows) out.push_back(r.value());
  return out;
}

inline std::vector<double> meaning_marginal(const JointDistribution& joint) {
  std::vector<CompensatedSum> cols(joint.num_meanings());
  const auto support = joint.support();
  const auto probs = joint.probs();
  for (std::size_t e = 0; e < support.size(); ++e) cols[support[e].meaning].add(probs[e]);
  std::vector<double> out;
  out.reserve(cols.size());
  for (const auto& c : cols) out.push_back(c.value());
  return out;
}

// Normalizer M = sum_i mu_i^phi sum_j a_ij omega_j^phi, accumulated word by
// word (a different order from joint_probability's per-edge sum).
inline double biased_normalizer(const BipartiteGraph& g, double phi) {
  CompensatedSum total;
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    CompensatedSum inner;
    for (std::size_t j : g.word_neighbours(i)) {
      inner.add(bias_power(static_cast<double>(g.meaning_degree(j)), phi));
    }
    total.add(bias_power(static_cast<double>(g.word_degree(i)), phi) * inner.value());
  }
  return total.value();
}

// Closed form p(s_i) = c mu_i^phi sum_j a_ij omega_j^phi.
inline std::vector<double> word_marginal_closed_form(const BipartiteGraph& g, double phi) {
  require_probability_graph(g);
  require_valid_phi(phi);
  const double c = 1.0 / biased_normalizer(g, phi);
  std::vector<double> out(g.num_words());
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    CompensatedSum inner;
    for (std::size_t j : g.word_neighbours(i)) {
      inner.add(bias_power(static_cast<double>(g.meaning_degree(j)), phi));
    }
    out[i] = c * bias_power(static_cast<double>(g.word_degree(i)), phi) * inner.value();
  }
  return out;
}

// Closed form p(r_j) = c omega_j^phi sum_i a_ij mu_i^phi.
inline std::vector<double> meaning_marginal_closed_form(const BipartiteGraph& g, double phi) {
  require_probability_graph(g);
  require_valid_phi(phi);
  const double c = 1.0 / biased_normalizer(g, phi);
  std::vector<double> out(g.num_meanings(), 0.0);
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    CompensatedSum inner;
    for (std::size_t i : g.meaning_neighbours(j)) {
      inner.add(bias_power(static_cast<double>(g.word_degree(i)), phi));
    }
    out[j] = c * bias_power(static_cast<double>(g.meaning_degree(j)), phi) * inner.value();
  }
  return out;
}

// p(s_i | r_j) = a_ij mu_i^phi / sum_k a_kj mu_k^phi; columns of unlinked
// meanings are zero.
inline Matrix conditional_word_given_meaning(const BipartiteGraph& g, double phi) {
  g.require_strict();
  require_valid_phi(phi);
  Matrix out(g.num_words(), g.num_meanings());
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    const auto words = g.meaning_neighbours(j);
    if (words.empty()) continue;
    CompensatedSum denom;
    for (std::size_t i : words) denom.add(bias_power(static_cast<double>(g.word_degree(i)), phi));
    const double z = denom.value();
    for (std::size_t i : words) {
      out(i, j) = bias_power(static_cast<double>(g.word_degree(i)), phi) / z;
    }
  }
  return out;
}

// A-priori meaning probabilities for the optimization-model family.
class MeaningPrior {
 public:
  enum class Kind { kUniform, kDegreeProportional, kExplicit };

  static MeaningPrior uniform() { return MeaningPrior(Kind::kUniform, {}); }
  static MeaningPrior degree_proportional() { return MeaningPrior(Kind::kDegreeProportional, {}); }
  static MeaningPrior explicit_probabilities(std::vector<double> p) {
    return MeaningPrior(Kind::kExplicit, std::move(p));
  }

  Kind kind() const noexcept { return kind_; }

  // The prior as a vector over the meanings of g. Uniform and
  // degree-proportional priors only put mass on linked meanings.
  std::vector<double> resolve(const BipartiteGraph& g) const {
    std::vector<double> p(g.num_meanings(), 0.0);
    switch (kind_) {
      case Kind::kUniform: {
        const std::size_t linked = g.linked_meaning_count();
        if (linked == 0) fail(ErrorKind::kInvalidArgument, "graph has no linked meaning");
        for (std::size_t j = 0; j < g.num_meanings(); ++j) {
          if (g.meaning_degree(j) > 0) p[j] = 1.0 / static_cast<double>(linked);
        }
        return p;
      }
      case Kind::kDegreeProportional: {
        if (g.num_edges() == 0) fail(ErrorKind::kInvalidArgument, "graph has no edges");
        for (std::size_t j = 0; j < g.num_meanings(); ++j) {
          p[j] = static_cast<double>(g.meaning_degree(j)) / static_cast<double>(g.num_edges());
        }
        return p;
      }
      case Kind::kExplicit: {
        if (explicit_.size() != g.num_meanings()) {
          fail(ErrorKind::kInvalidArgument, "explicit prior has wrong length");
        }
        for (std::size_t j = 0; j < explicit_.size(); ++j) {
          if (!(explicit_[j] >= 0.0)) fail(ErrorKind::kInvalidArgument, "negative prior mass");
          if (explicit_[j] > 0.0 && g.meaning_degree(j) == 0) {
            fail(ErrorKind::kInvalidArgument,
                 "prior puts mass on unlinked meaning " + std::to_string(j));
          }
        }
        if (std::fabs(compensated_sum(explicit_) - 1.0) > 1e-9) {
          fail(ErrorKind::kInvalidArgument, "explicit prior does not sum to 1");
        }
        return explicit_;
      }
    }
    return p;
  }

 private:
  MeaningPrior(Kind kind, std::vector<double> p) : kind_(kind), explicit_(std::move(p)) {}

  Kind kind_;
  std::vector<double> explicit_;
};

// p(s_i, r_j) = p(s_i | r_j) p(r_j) with p(r_j) given a priori.
inline JointDistribution model_family_joint(const BipartiteGraph& g, const MeaningPrior& prior,
                                            double phi) {
  require_probability_graph(g);
  require_valid_phi(phi);
  const std::vector<double> p_meaning = prior.resolve(g);
  std::vector<double> denom(g.num_meanings(), 0.0);
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    CompensatedSum z;
    for (std::size_t i : g.meaning_neighbours(j)) {
      z.add(bias_power(static_cast<double>(g.word_degree(i)), phi));
    }
    denom[j] = z.value();
  }
  std::vector<double> probs;
  probs.reserve(g.num_edges());
  for (const Edge& e : g.edges()) {
    const double conditional =
        bias_power(static_cast<double>(g.word_degree(e.word)), phi) / denom[e.meaning];
    probs.push_back(conditional * p_meaning[e.meaning]);
  }
  return JointDistribution(g.num_words(), g.num_meanings(), edge_vector(g), std::move(probs),
                           ModelKind::kModelFamily, phi, 0.0);
}

// Dense CSV: one row per word, one column per meaning.
inline void write_dense_csv(std::ostream& out, const JointDistribution& joint) {
  const Matrix dense = joint.dense();
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17);
  for (std::size_t i = 0; i < dense.rows(); ++i) {
    for (std::size_t j = 0; j < dense.cols(); ++j) {
      if (j > 0) out << ',';
      out << dense(i, j);
    }
    out << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

// Sparse triplet CSV "i,j,p" over the support.
inline void write_triplet_csv(std::ostream& out, const JointDistribution& joint) {
  const auto flags = out.flags();
  const auto precision = out.precision();
  out << std::setprecision(17) << "i,j,p\n";
  const auto support = joint.support();
  const auto probs = joint.probs();
  for (std::size_t e = 0; e < support.size(); ++e) {
    out << support[e].word << ',' << support[e].meaning << ',' << probs[e] << '\n';
  }
  out.flags(flags);
  out.precision(precision);
}

}  // namespace mflaw
