#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <numeric>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "mflaw/error.hpp"
#include "mflaw/random.hpp"

namespace mflaw {

// A word-meaning link. Indices are 0-based.
struct Edge {
  std::size_t word = 0;
  std::size_t meaning = 0;

  friend auto operator<=>(const Edge&, const Edge&) = default;
};

// Strict mode rejects words without meanings. Permissive mode admits them,
// but every probability computation calls require_strict() first.
enum class Validation { kStrict, kPermissive };

struct DegreeProfile {
  std::vector<std::size_t> mu;     // word degrees
  std::vector<std::size_t> omega;  // meaning degrees
};

// Immutable bipartite word-meaning graph. Edges are kept sorted
// lexicographically by (word, meaning); per-edge data elsewhere in the
// library is aligned with this order.
class BipartiteGraph {
 public:
  BipartiteGraph(std::size_t num_words, std::size_t num_meanings, std::vector<Edge> edges,
                 Validation validation = Validation::kStrict)
      : num_words_(num_words), num_meanings_(num_meanings), edges_(std::move(edges)) {
    if (num_words_ == 0 || num_meanings_ == 0) {
      fail(ErrorKind::kInvalidArgument, "graph needs at least one word and one meaning");
    }
    std::sort(edges_.begin(), edges_.end());
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      const Edge& edge = edges_[e];
      if (edge.word >= num_words_ || edge.meaning >= num_meanings_) {
        fail(ErrorKind::kInvalidArgument, "edge (" + std::to_string(edge.word) + "," +
                                              std::to_string(edge.meaning) + ") out of range");
      }
      if (e > 0 && edges_[e - 1] == edge) {
        fail(ErrorKind::kInvalidArgument, "duplicate edge (" + std::to_string(edge.word) + "," +
                                              std::to_string(edge.meaning) + ")");
      }
    }
    build_adjacency();
    if (validation == Validation::kStrict) require_strict();
  }

  std::size_t num_words() const noexcept { return num_words_; }
  std::size_t num_meanings() const noexcept { return num_meanings_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }

  std::size_t word_degree(std::size_t i) const { return word_offsets_[i + 1] - word_offsets_[i]; }
  std::size_t meaning_degree(std::size_t j) const {
    return meaning_offsets_[j + 1] - meaning_offsets_[j];
  }

  // Meanings linked to word i, ascending. Edge ids of those links are
  // word_offsets(i) + k, since edges are sorted by word first.
  std::span<const std::size_t> word_neighbours(std::size_t i) const {
    return std::span(word_adj_).subspan(word_offsets_[i], word_degree(i));
  }
  std::size_t word_edge_offset(std::size_t i) const { return word_offsets_[i]; }

  // Words linked to meaning j, ascending, with matching edge ids.
  std::span<const std::size_t> meaning_neighbours(std::size_t j) const {
    return std::span(meaning_adj_).subspan(meaning_offsets_[j], meaning_degree(j));
  }
  std::span<const std::size_t> meaning_edge_ids(std::size_t j) const {
    return std::span(meaning_edge_ids_).subspan(meaning_offsets_[j], meaning_degree(j));
  }

  bool has_edge(std::size_t i, std::size_t j) const { return find_edge(i, j) != npos; }

  // Index of edge (i, j) in edges(), or npos.
  std::size_t find_edge(std::size_t i, std::size_t j) const {
    if (i >= num_words_) return npos;
    auto nb = word_neighbours(i);
    auto it = std::lower_bound(nb.begin(), nb.end(), j);
    if (it == nb.end() || *it != j) return npos;
    return word_offsets_[i] + static_cast<std::size_t>(it - nb.begin());
  }

  bool is_strict() const noexcept {
    for (std::size_t i = 0; i < num_words_; ++i) {
      if (word_degree(i) == 0) return false;
    }
    return true;
  }

  void require_strict() const {
    for (std::size_t i = 0; i < num_words_; ++i) {
      if (word_degree(i) == 0) {
        fail(ErrorKind::kInvalidArgument, "word " + std::to_string(i) + " has no meanings");
      }
    }
  }

  std::size_t linked_meaning_count() const noexcept {
    std::size_t count = 0;
    for (std::size_t j = 0; j < num_meanings_; ++j) count += meaning_degree(j) > 0 ? 1 : 0;
    return count;
  }

  friend bool operator==(const BipartiteGraph& a, const BipartiteGraph& b) {
    return a.num_words_ == b.num_words_ && a.num_meanings_ == b.num_meanings_ &&
           a.edges_ == b.edges_;
  }

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

 private:
  void build_adjacency() {
    word_offsets_.assign(num_words_ + 1, 0);
    meaning_offsets_.assign(num_meanings_ + 1, 0);
    for (const Edge& e : edges_) {
      ++word_offsets_[e.word + 1];
      ++meaning_offsets_[e.meaning + 1];
    }
    std::partial_sum(word_offsets_.begin(), word_offsets_.end(), word_offsets_.begin());
    std::partial_sum(meaning_offsets_.begin(), meaning_offsets_.end(), meaning_offsets_.begin());

    word_adj_.resize(edges_.size());
    meaning_adj_.resize(edges_.size());
    meaning_edge_ids_.resize(edges_.size());
    std::vector<std::size_t> fill(meaning_offsets_.begin(), meaning_offsets_.end() - 1);
    for (std::size_t e = 0; e < edges_.size(); ++e) {
      word_adj_[e] = edges_[e].meaning;
      const std::size_t slot = fill[edges_[e].meaning]++;
      meaning_adj_[slot] = edges_[e].word;
      meaning_edge_ids_[slot] = e;
    }
  }

  std::size_t num_words_;
  std::size_t num_meanings_;
  std::vector<Edge> edges_;
  std::vector<std::size_t> word_offsets_;
  std::vector<std::size_t> meaning_offsets_;
  std::vector<std::size_t> word_adj_;
  std::vector<std::size_t> meaning_adj_;
  std::vector<std::size_t> meaning_edge_ids_;
};

inline DegreeProfile degrees(const BipartiteGraph& g) {
  DegreeProfile d;
  d.mu.resize(g.num_words());
  d.omega.resize(g.num_meanings());
  for (std::size_t i = 0; i < g.num_words(); ++i) d.mu[i] = g.word_degree(i);
  for (std::size_t j = 0; j < g.num_meanings(); ++j) d.omega[j] = g.meaning_degree(j);
  return d;
}

// Degrees seen from each edge, plus the remaining degrees (degree minus the
// edge itself). Vectors are aligned with g.edges().
struct EdgeDegreeView {
  std::vector<std::size_t> word_degree;
  std::vector<std::size_t> meaning_degree;
  std::vector<std::size_t> remaining_word_degree;
  std::vector<std::size_t> remaining_meaning_degree;

  bool remaining_meaning_degrees_vanish() const {
    return std::all_of(remaining_meaning_degree.begin(), remaining_meaning_degree.end(),
                       [](std::size_t d) { return d == 0; });
  }
};

inline EdgeDegreeView edge_degree_view(const BipartiteGraph& g) {
  EdgeDegreeView v;
  const auto edges = g.edges();
  v.word_degree.reserve(edges.size());
  v.meaning_degree.reserve(edges.size());
  for (const Edge& e : edges) {
    v.word_degree.push_back(g.word_degree(e.word));
    v.meaning_degree.push_back(g.meaning_degree(e.meaning));
  }
  v.remaining_word_degree = v.word_degree;
  v.remaining_meaning_degree = v.meaning_degree;
  // Every entry is >= 1 because the edge itself contributes.
  for (auto& d : v.remaining_word_degree) --d;
  for (auto& d : v.remaining_meaning_degree) --d;
  return v;
}

// True iff no meaning is shared by two words, i.e. the rows of the
// adjacency matrix are pairwise orthogonal.
inline bool rows_pairwise_orthogonal(const BipartiteGraph& g) {
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    if (g.meaning_degree(j) > 1) return false;
  }
  return true;
}

// Undirected connectivity over all n + m vertices; an isolated meaning
// makes the graph disconnected.
inline bool is_connected(const BipartiteGraph& g) {
  const std::size_t n = g.num_words();
  const std::size_t total = n + g.num_meanings();
  std::vector<bool> seen(total, false);
  std::vector<std::size_t> stack{0};
  seen[0] = true;
  std::size_t reached = 1;
  while (!stack.empty()) {
    const std::size_t v = stack.back();
    stack.pop_back();
    auto visit = [&](std::size_t u) {
      if (!seen[u]) {
        seen[u] = true;
        ++reached;
        stack.push_back(u);
      }
    };
    if (v < n) {
      for (std::size_t j : g.word_neighbours(v)) visit(n + j);
    } else {
      for (std::size_t i : g.meaning_neighbours(v - n)) visit(i);
    }
  }
  return reached == total;
}

inline constexpr int kDefaultGeneratorAttempts = 1000;

// Erdos-Renyi bipartite graph conditioned on every word having a meaning.
// Redraws the whole graph until valid instead of patching degrees.
inline BipartiteGraph generate_random_bipartite(std::size_t n, std::size_t m,
                                                double edge_probability, std::uint64_t seed,
                                                int max_attempts = kDefaultGeneratorAttempts) {
  if (n == 0 || m == 0) fail(ErrorKind::kInvalidArgument, "n and m must be positive");
  if (!(edge_probability > 0.0 && edge_probability <= 1.0)) {
    fail(ErrorKind::kInvalidArgument, "edge probability must lie in (0, 1]");
  }
  Rng rng(seed);
  std::vector<Edge> edges;
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    edges.clear();
    std::vector<bool> has_meaning(n, false);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < m; ++j) {
        if (uniform01(rng) < edge_probability) {
          edges.push_back({i, j});
          has_meaning[i] = true;
        }
      }
    }
    if (std::all_of(has_meaning.begin(), has_meaning.end(), [](bool b) { return b; })) {
      return BipartiteGraph(n, m, std::move(edges));
    }
  }
  fail(ErrorKind::kInfeasible, "no graph without zero-degree words after " +
                                   std::to_string(max_attempts) + " attempts");
}

// Word i gets mu_spec[i] meanings of its own; every meaning has degree 1.
inline BipartiteGraph generate_contrast_graph(std::span<const std::size_t> mu_spec) {
  if (mu_spec.empty()) fail(ErrorKind::kInvalidArgument, "contrast graph needs a word degree");
  std::vector<Edge> edges;
  std::size_t next_meaning = 0;
  for (std::size_t i = 0; i < mu_spec.size(); ++i) {
    if (mu_spec[i] == 0) fail(ErrorKind::kInvalidArgument, "contrast graph word degrees must be >= 1");
    for (std::size_t k = 0; k < mu_spec[i]; ++k) edges.push_back({i, next_meaning++});
  }
  return BipartiteGraph(mu_spec.size(), next_meaning, std::move(edges));
}

inline BipartiteGraph generate_contrast_graph(std::initializer_list<std::size_t> mu_spec) {
  return generate_contrast_graph(std::span<const std::size_t>(mu_spec.begin(), mu_spec.size()));
}

// Configurations that maximize word-meaning mutual information.
// n <= m: each word gets d private meanings (1 <= d <= m/n).
// n > m:  each meaning gets d private words (1 <= d <= n/m); words left over
//         when n > m*d stay unlinked, so the result is then permissive.
inline BipartiteGraph generate_mi_optimal(std::size_t n, std::size_t m, std::size_t d) {
  if (n == 0 || m == 0) fail(ErrorKind::kInvalidArgument, "n and m must be positive");
  const std::size_t limit = n <= m ? m / n : n / m;
  if (d < 1 || d > limit) {
    fail(ErrorKind::kInvalidArgument, "d = " + std::to_string(d) + " outside [1, " +
                                          std::to_string(limit) + "]");
  }
  std::vector<Edge> edges;
  if (n <= m) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < d; ++k) edges.push_back({i, i * d + k});
    }
    return BipartiteGraph(n, m, std::move(edges));
  }
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < d; ++k) edges.push_back({j * d + k, j});
  }
  return BipartiteGraph(n, m, std::move(edges),
                        n == m * d ? Validation::kStrict : Validation::kPermissive);
}

// Edge-list text format: "n m" header, then one "i j" per line in ascending
// order. Lines starting with '#' are comments.
inline void write_edge_list(std::ostream& out, const BipartiteGraph& g) {
  out << g.num_words() << ' ' << g.num_meanings() << '\n';
  for (const Edge& e : g.edges()) out << e.word << ' ' << e.meaning << '\n';
}

inline std::string to_edge_list(const BipartiteGraph& g) {
  std::ostringstream out;
  write_edge_list(out, g);
  return out.str();
}

inline BipartiteGraph parse_edge_list(std::istream& in, Validation validation = Validation::kStrict) {
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  std::size_t n = 0;
  std::size_t m = 0;
  std::vector<Edge> edges;
  auto bad = [&](const std::string& what) {
    fail(ErrorKind::kInput, "edge list line " + std::to_string(line_no) + ": " + what);
  };
  while (std::getline(in, line)) {
    ++line_no;
    const auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos || line[first] == '#') continue;
    std::istringstream fields(line);
    long long a = -1;
    long long b = -1;
    if (!(fields >> a >> b)) bad("expected two integers");
    std::string rest;
    if (fields >> rest) bad("trailing content '" + rest + "'");
    if (a < 0 || b < 0) bad("negative value");
    if (!have_header) {
      n = static_cast<std::size_t>(a);
      m = static_cast<std::size_t>(b);
      have_header = true;
    } else {
      edges.push_back({static_cast<std::size_t>(a), static_cast<std::size_t>(b)});
    }
  }
  if (!have_header) fail(ErrorKind::kInput, "edge list has no 'n m' header");
  try {
    return BipartiteGraph(n, m, std::move(edges), validation);
  } catch (const Error& e) {
    fail(ErrorKind::kInput, std::string("edge list rejected: ") + e.what());
  }
}

inline BipartiteGraph parse_edge_list(const std::string& text,
                                      Validation validation = Validation::kStrict) {
  std::istringstream in(text);
  return parse_edge_list(in, validation);
}

}  // namespace mflaw
