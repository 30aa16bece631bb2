#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "mflaw/bipartite_graph.hpp"
#include "mflaw/error.hpp"
#include "mflaw/probability_model.hpp"
#include "mflaw/random.hpp"
#include "mflaw/summation.hpp"

namespace mflaw {

// A vertex of the bipartite graph: word i or meaning j.
struct Vertex {
  bool is_word = true;
  std::size_t index = 0;

  friend bool operator==(const Vertex&, const Vertex&) = default;
};

// p(s_i | r_j) for the walk: a_ij mu_i^phi / sum_l a_lj mu_l^phi.
inline std::vector<double> transition_meaning_to_word(const BipartiteGraph& g, double phi,
                                                      std::size_t j) {
  require_valid_phi(phi);
  if (j >= g.num_meanings()) fail(ErrorKind::kInvalidArgument, "meaning index out of range");
  const auto words = g.meaning_neighbours(j);
  if (words.empty()) {
    fail(ErrorKind::kInvalidArgument, "meaning " + std::to_string(j) + " has no words");
  }
  std::vector<double> out(g.num_words(), 0.0);
  CompensatedSum z;
  for (std::size_t i : words) {
    out[i] = bias_power(static_cast<double>(g.word_degree(i)), phi);
    z.add(out[i]);
  }
  const double total = z.value();
  for (std::size_t i : words) out[i] /= total;
  return out;
}

// p(r_j | s_i) for the walk: a_ij omega_j^phi / sum_l a_il omega_l^phi.
inline std::vector<double> transition_word_to_meaning(const BipartiteGraph& g, double phi,
                                                      std::size_t i) {
  require_valid_phi(phi);
  if (i >= g.num_words()) fail(ErrorKind::kInvalidArgument, "word index out of range");
  const auto meanings = g.word_neighbours(i);
  if (meanings.empty()) {
    fail(ErrorKind::kInvalidArgument, "word " + std::to_string(i) + " has no meanings");
  }
  std::vector<double> out(g.num_meanings(), 0.0);
  CompensatedSum z;
  for (std::size_t j : meanings) {
    out[j] = bias_power(static_cast<double>(g.meaning_degree(j)), phi);
    z.add(out[j]);
  }
  const double total = z.value();
  for (std::size_t j : meanings) out[j] /= total;
  return out;
}

inline void require_connected(const BipartiteGraph& g) {
  if (!is_connected(g)) fail(ErrorKind::kDisconnected, "graph is not connected");
}

// Closed-form stationary quantities of the biased walk.
struct StationaryState {
  std::vector<double> word;      // p_v(s_i); sums to 1/2
  std::vector<double> meaning;   // p_v(r_j); sums to 1/2
  std::vector<double> edge;      // undirected transition probability, aligned with g.edges()
  double normalizer = 0.0;       // M; the walk normalizer is 2M

  // p(s_i) = 2 p_v(s_i): visit probability conditioned on the word side.
  std::vector<double> word_probability() const {
    std::vector<double> out(word);
    for (double& x : out) x *= 2.0;
    return out;
  }
};

inline StationaryState analytical_stationary(const BipartiteGraph& g, double phi) {
  require_probability_graph(g);
  require_valid_phi(phi);
  require_connected(g);
  StationaryState s;
  s.normalizer = biased_normalizer(g, phi);
  const double walk_normalizer = 2.0 * s.normalizer;
  // Row sums of neighbour weights: sum_j a_ij omega_j^phi and sum_i a_ij mu_i^phi.
  std::vector<double> word_reach(g.num_words());
  std::vector<double> meaning_reach(g.num_meanings());
  s.word.resize(g.num_words());
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    CompensatedSum inner;
    for (std::size_t j : g.word_neighbours(i)) {
      inner.add(bias_power(static_cast<double>(g.meaning_degree(j)), phi));
    }
    word_reach[i] = inner.value();
    s.word[i] = bias_power(static_cast<double>(g.word_degree(i)), phi) * word_reach[i] /
                walk_normalizer;
  }
  s.meaning.resize(g.num_meanings());
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    CompensatedSum inner;
    for (std::size_t i : g.meaning_neighbours(j)) {
      inner.add(bias_power(static_cast<double>(g.word_degree(i)), phi));
    }
    meaning_reach[j] = inner.value();
    s.meaning[j] = bias_power(static_cast<double>(g.meaning_degree(j)), phi) * meaning_reach[j] /
                   walk_normalizer;
  }
  // p(s_i, r_j) = p_v(s_i) p_v(r_j | s_i) + p_v(r_j) p_v(s_i | r_j).
  s.edge.reserve(g.num_edges());
  for (const Edge& e : g.edges()) {
    const double forward =
        s.word[e.word] * bias_power(static_cast<double>(g.meaning_degree(e.meaning)), phi) /
        word_reach[e.word];
    const double backward =
        s.meaning[e.meaning] * bias_power(static_cast<double>(g.word_degree(e.word)), phi) /
        meaning_reach[e.meaning];
    s.edge.push_back(forward + backward);
  }
  return s;
}

enum class StartPolicy { kUniformOverWords, kUniformOverVertices, kFixedVertex };

struct WalkConfig {
  std::uint64_t steps = 0;               // transitions recorded, summed over chains
  std::optional<std::uint64_t> burn_in;  // per chain; defaults to 1% of steps
  double phi = 1.0;
  StartPolicy start = StartPolicy::kUniformOverWords;
  Vertex fixed_start{};
  std::uint64_t master_seed = 0;
  std::uint32_t chains = 1;

  std::uint64_t effective_burn_in() const { return burn_in.value_or(steps / 100); }
};

// Visit and transition counts of one or more chains. Visits count the source
// vertex of every recorded transition, so word and meaning visits together
// equal recorded_steps.
struct WalkCensus {
  std::size_t num_words = 0;
  std::size_t num_meanings = 0;
  std::vector<Edge> edges;
  std::vector<std::uint64_t> word_visits;
  std::vector<std::uint64_t> meaning_visits;
  std::vector<std::uint64_t> pair_transits;  // aligned with edges, both directions
  std::uint64_t recorded_steps = 0;

  static WalkCensus empty_for(const BipartiteGraph& g) {
    WalkCensus c;
    c.num_words = g.num_words();
    c.num_meanings = g.num_meanings();
    c.edges = edge_vector(g);
    c.word_visits.assign(g.num_words(), 0);
    c.meaning_visits.assign(g.num_meanings(), 0);
    c.pair_transits.assign(g.num_edges(), 0);
    return c;
  }

  WalkCensus& operator+=(const WalkCensus& other) {
    if (other.edges != edges || other.num_words != num_words ||
        other.num_meanings != num_meanings) {
      fail(ErrorKind::kInvalidArgument, "cannot merge censuses of different graphs");
    }
    for (std::size_t i = 0; i < word_visits.size(); ++i) word_visits[i] += other.word_visits[i];
    for (std::size_t j = 0; j < meaning_visits.size(); ++j) {
      meaning_visits[j] += other.meaning_visits[j];
    }
    for (std::size_t e = 0; e < pair_transits.size(); ++e) {
      pair_transits[e] += other.pair_transits[e];
    }
    recorded_steps += other.recorded_steps;
    return *this;
  }

  friend bool operator==(const WalkCensus&, const WalkCensus&) = default;
};

// Per-vertex prefix sums of neighbour weights for inversion sampling.
class WalkTables {
 public:
  WalkTables(const BipartiteGraph& g, double phi) : graph_(&g) {
    require_valid_phi(phi);
    word_prefix_.resize(g.num_edges());
    for (std::size_t i = 0; i < g.num_words(); ++i) {
      double running = 0.0;
      const std::size_t base = g.word_edge_offset(i);
      const auto meanings = g.word_neighbours(i);
      for (std::size_t k = 0; k < meanings.size(); ++k) {
        running += bias_power(static_cast<double>(g.meaning_degree(meanings[k])), phi);
        word_prefix_[base + k] = running;
      }
    }
    meaning_offsets_.assign(g.num_meanings() + 1, 0);
    for (std::size_t j = 0; j < g.num_meanings(); ++j) {
      meaning_offsets_[j + 1] = meaning_offsets_[j] + g.meaning_degree(j);
    }
    meaning_prefix_.resize(g.num_edges());
    for (std::size_t j = 0; j < g.num_meanings(); ++j) {
      double running = 0.0;
      const auto words = g.meaning_neighbours(j);
      for (std::size_t k = 0; k < words.size(); ++k) {
        running += bias_power(static_cast<double>(g.word_degree(words[k])), phi);
        meaning_prefix_[meaning_offsets_[j] + k] = running;
      }
    }
  }

  const BipartiteGraph& graph() const noexcept { return *graph_; }

  // One transition from `from`; returns the new vertex and the edge used.
  std::pair<Vertex, std::size_t> step(const Vertex& from, Rng& rng) const {
    const BipartiteGraph& g = *graph_;
    if (from.is_word) {
      const std::size_t base = g.word_edge_offset(from.index);
      const std::size_t k = sample(std::span(word_prefix_).subspan(base, g.word_degree(from.index)), rng);
      return {Vertex{false, g.word_neighbours(from.index)[k]}, base + k};
    }
    const std::size_t j = from.index;
    const std::size_t k = sample(
        std::span(meaning_prefix_).subspan(meaning_offsets_[j], g.meaning_degree(j)), rng);
    return {Vertex{true, g.meaning_neighbours(j)[k]}, g.meaning_edge_ids(j)[k]};
  }

 private:
  static std::size_t sample(std::span<const double> prefix, Rng& rng) {
    const double u = uniform01(rng) * prefix.back();
    const auto it = std::upper_bound(prefix.begin(), prefix.end(), u);
    return std::min(static_cast<std::size_t>(it - prefix.begin()), prefix.size() - 1);
  }

  const BipartiteGraph* graph_;
  std::vector<double> word_prefix_;  // indexed by edge id
  std::vector<std::size_t> meaning_offsets_;
  std::vector<double> meaning_prefix_;
};

inline Vertex draw_start(const BipartiteGraph& g, const WalkConfig& config, Rng& rng) {
  switch (config.start) {
    case StartPolicy::kUniformOverWords:
      return Vertex{true, static_cast<std::size_t>(uniform_index(rng, g.num_words()))};
    case StartPolicy::kUniformOverVertices: {
      const std::size_t v = uniform_index(rng, g.num_words() + g.num_meanings());
      return v < g.num_words() ? Vertex{true, v} : Vertex{false, v - g.num_words()};
    }
    case StartPolicy::kFixedVertex: {
      const Vertex v = config.fixed_start;
      if ((v.is_word && v.index >= g.num_words()) || (!v.is_word && v.index >= g.num_meanings())) {
        fail(ErrorKind::kInvalidArgument, "fixed start vertex out of range");
      }
      return v;
    }
  }
  return Vertex{};
}

// Steps recorded by chain c when config.steps is split across chains.
inline std::uint64_t chain_steps(const WalkConfig& config, std::uint32_t chain) {
  const std::uint64_t base = config.steps / config.chains;
  return base + (chain < config.steps % config.chains ? 1 : 0);
}

inline void validate_walk(const BipartiteGraph& g, const WalkConfig& config) {
  require_probability_graph(g);
  require_valid_phi(config.phi);
  if (config.steps == 0) fail(ErrorKind::kInvalidArgument, "walk needs at least one step");
  if (config.chains == 0) fail(ErrorKind::kInvalidArgument, "walk needs at least one chain");
  require_connected(g);
}

inline WalkCensus simulate_chain(const WalkTables& tables, const WalkConfig& config,
                                 std::uint32_t chain) {
  const BipartiteGraph& g = tables.graph();
  WalkCensus census = WalkCensus::empty_for(g);
  Rng rng(derive_seed(config.master_seed, chain));
  Vertex current = draw_start(g, config, rng);
  const std::uint64_t burn_in = config.effective_burn_in();
  for (std::uint64_t t = 0; t < burn_in; ++t) current = tables.step(current, rng).first;
  const std::uint64_t steps = chain_steps(config, chain);
  for (std::uint64_t t = 0; t < steps; ++t) {
    if (current.is_word) {
      ++census.word_visits[current.index];
    } else {
      ++census.meaning_visits[current.index];
    }
    const auto [next, edge] = tables.step(current, rng);
    ++census.pair_transits[edge];
    current = next;
  }
  census.recorded_steps = steps;
  return census;
}

// Runs config.chains independent chains and merges their censuses in chain
// order. Output is a pure function of (graph, config).
inline WalkCensus simulate_walk(const BipartiteGraph& g, const WalkConfig& config) {
  validate_walk(g, config);
  const WalkTables tables(g, config.phi);
  WalkCensus total = WalkCensus::empty_for(g);
  for (std::uint32_t c = 0; c < config.chains; ++c) total += simulate_chain(tables, config, c);
  return total;
}

inline JointDistribution empirical_joint(const WalkCensus& census) {
  if (census.recorded_steps == 0) fail(ErrorKind::kInvalidArgument, "census is empty");
  std::vector<double> probs;
  probs.reserve(census.pair_transits.size());
  const double total = static_cast<double>(census.recorded_steps);
  for (std::uint64_t count : census.pair_transits) probs.push_back(static_cast<double>(count) / total);
  return JointDistribution(census.num_words, census.num_meanings, census.edges, std::move(probs),
                           ModelKind::kEmpirical, std::nullopt, total);
}

// Word visits normalized by word slots: the empirical p(s_i) = 2 p_v(s_i).
inline std::vector<double> empirical_word_probability(const WalkCensus& census) {
  std::uint64_t slots = 0;
  for (auto v : census.word_visits) slots += v;
  if (slots == 0) fail(ErrorKind::kInvalidArgument, "census has no word visits");
  std::vector<double> out;
  out.reserve(census.word_visits.size());
  for (auto v : census.word_visits) out.push_back(static_cast<double>(v) / static_cast<double>(slots));
  return out;
}

inline double total_variation(const JointDistribution& a, const JointDistribution& b) {
  if (a.num_words() != b.num_words() || a.num_meanings() != b.num_meanings()) {
    fail(ErrorKind::kInvalidArgument, "distributions have different shapes");
  }
  const Matrix da = a.dense();
  const Matrix db = b.dense();
  CompensatedSum acc;
  for (std::size_t k = 0; k < da.data().size(); ++k) acc.add(std::fabs(da.data()[k] - db.data()[k]));
  return 0.5 * acc.value();
}

// Entropy rate -sum_x pi_x sum_y P(y|x) log P(y|x) of the biased walk, in nats.
inline double entropy_rate(const BipartiteGraph& g, double phi) {
  const StationaryState s = analytical_stationary(g, phi);
  auto row_entropy = [](const std::vector<double>& p) {
    CompensatedSum h;
    for (double x : p) {
      if (x > 0.0) h.add(-x * std::log(x));
    }
    return h.value();
  };
  CompensatedSum h;
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    h.add(s.word[i] * row_entropy(transition_word_to_meaning(g, phi, i)));
  }
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    h.add(s.meaning[j] * row_entropy(transition_meaning_to_word(g, phi, j)));
  }
  return std::max(0.0, h.value());
}

// Census CSV: config echo as comments, then the three sections.
inline void write_census_csv(std::ostream& out, const WalkCensus& census, const WalkConfig& config) {
  out << "# steps=" << config.steps << " burn_in=" << config.effective_burn_in()
      << " chains=" << config.chains << " master_seed=" << config.master_seed << '\n';
  {
    const auto precision = out.precision();
    out << std::setprecision(17) << "# phi=" << config.phi << '\n';
    out.precision(precision);
  }
  out << "# recorded_steps=" << census.recorded_steps << '\n';
  out << "[word_visits]\ni,count\n";
  for (std::size_t i = 0; i < census.word_visits.size(); ++i) {
    out << i << ',' << census.word_visits[i] << '\n';
  }
  out << "[meaning_visits]\nj,count\n";
  for (std::size_t j = 0; j < census.meaning_visits.size(); ++j) {
    out << j << ',' << census.meaning_visits[j] << '\n';
  }
  out << "[pair_transits]\ni,j,count\n";
  for (std::size_t e = 0; e < census.edges.size(); ++e) {
    out << census.edges[e].word << ',' << census.edges[e].meaning << ',' << census.pair_transits[e]
        << '\n';
  }
}

// Undirected simple graph, used to check the unipartite biased walk that the
// bipartite formulas are adapted from.
class UnipartiteGraph {
 public:
  UnipartiteGraph(std::size_t num_nodes, const std::vector<std::pair<std::size_t, std::size_t>>& edges)
      : adjacency_(num_nodes) {
    if (num_nodes == 0) fail(ErrorKind::kInvalidArgument, "graph needs at least one node");
    for (auto [a, b] : edges) {
      if (a >= num_nodes || b >= num_nodes) fail(ErrorKind::kInvalidArgument, "node out of range");
      if (a == b) fail(ErrorKind::kInvalidArgument, "self-loops are not allowed");
      adjacency_[a].push_back(b);
      adjacency_[b].push_back(a);
    }
    for (auto& nb : adjacency_) {
      std::sort(nb.begin(), nb.end());
      if (std::adjacent_find(nb.begin(), nb.end()) != nb.end()) {
        fail(ErrorKind::kInvalidArgument, "duplicate edge");
      }
    }
  }

  // From a 0/1 adjacency matrix; must be symmetric with a zero diagonal.
  static UnipartiteGraph from_adjacency(const std::vector<std::vector<int>>& b) {
    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t i = 0; i < b.size(); ++i) {
      if (b[i].size() != b.size()) fail(ErrorKind::kInvalidArgument, "adjacency is not square");
      if (b[i][i] != 0) fail(ErrorKind::kInvalidArgument, "adjacency diagonal must be zero");
      for (std::size_t j = 0; j < b.size(); ++j) {
        if (b[i][j] != 0 && b[i][j] != 1) fail(ErrorKind::kInvalidArgument, "adjacency must be 0/1");
        if (b[i][j] != b[j][i]) fail(ErrorKind::kInvalidArgument, "adjacency is not symmetric");
        if (i < j && b[i][j] == 1) edges.emplace_back(i, j);
      }
    }
    return UnipartiteGraph(b.size(), edges);
  }

  std::size_t num_nodes() const noexcept { return adjacency_.size(); }
  std::size_t degree(std::size_t i) const { return adjacency_[i].size(); }
  std::span<const std::size_t> neighbours(std::size_t i) const { return adjacency_[i]; }

  bool is_connected() const {
    std::vector<bool> seen(num_nodes(), false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    std::size_t reached = 1;
    while (!stack.empty()) {
      const std::size_t v = stack.back();
      stack.pop_back();
      for (std::size_t u : adjacency_[v]) {
        if (!seen[u]) {
          seen[u] = true;
          ++reached;
          stack.push_back(u);
        }
      }
    }
    return reached == num_nodes();
  }

 private:
  std::vector<std::vector<std::size_t>> adjacency_;
};

// p(j | i) = b_ij k_j^phi / sum_l b_il k_l^phi.
inline std::vector<double> unipartite_transition(const UnipartiteGraph& u, double phi, std::size_t i) {
  require_valid_phi(phi);
  std::vector<double> out(u.num_nodes(), 0.0);
  CompensatedSum z;
  for (std::size_t j : u.neighbours(i)) {
    out[j] = bias_power(static_cast<double>(u.degree(j)), phi);
    z.add(out[j]);
  }
  const double total = z.value();
  if (total == 0.0) fail(ErrorKind::kInvalidArgument, "node has no neighbours");
  for (double& x : out) x /= total;
  return out;
}

// p(i) = k_i^phi c_i / T with c_i = sum_j b_ij k_j^phi and T = sum_i c_i k_i^phi.
inline std::vector<double> unipartite_stationary(const UnipartiteGraph& u, double phi) {
  require_valid_phi(phi);
  if (u.num_nodes() < 2 || !u.is_connected()) {
    fail(ErrorKind::kDisconnected, "unipartite graph is not connected");
  }
  std::vector<double> out(u.num_nodes());
  CompensatedSum total;
  for (std::size_t i = 0; i < u.num_nodes(); ++i) {
    CompensatedSum c;
    for (std::size_t j : u.neighbours(i)) c.add(bias_power(static_cast<double>(u.degree(j)), phi));
    out[i] = bias_power(static_cast<double>(u.degree(i)), phi) * c.value();
    total.add(out[i]);
  }
  const double t = total.value();
  for (double& x : out) x /= t;
  return out;
}

// Visit counts of a biased walk on a unipartite graph, started at node 0.
inline std::vector<std::uint64_t> simulate_unipartite_walk(const UnipartiteGraph& u, double phi,
                                                           std::uint64_t steps, std::uint64_t burn_in,
                                                           std::uint64_t seed) {
  require_valid_phi(phi);
  if (u.num_nodes() < 2 || !u.is_connected()) {
    fail(ErrorKind::kDisconnected, "unipartite graph is not connected");
  }
  std::vector<std::vector<double>> prefix(u.num_nodes());
  for (std::size_t i = 0; i < u.num_nodes(); ++i) {
    double running = 0.0;
    for (std::size_t j : u.neighbours(i)) {
      running += bias_power(static_cast<double>(u.degree(j)), phi);
      prefix[i].push_back(running);
    }
  }
  Rng rng(seed);
  std::vector<std::uint64_t> visits(u.num_nodes(), 0);
  std::size_t current = 0;
  for (std::uint64_t t = 0; t < burn_in + steps; ++t) {
    if (t >= burn_in) ++visits[current];
    const auto& p = prefix[current];
    const double x = uniform01(rng) * p.back();
    const std::size_t k = std::min(
        static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), x) - p.begin()), p.size() - 1);
    current = u.neighbours(current)[k];
  }
  return visits;
}

}  // namespace mflaw
