#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <utility>
#include <vector>

#include "mflaw/bipartite_graph.hpp"
#include "mflaw/error.hpp"
#include "mflaw/probability_model.hpp"
#include "mflaw/summation.hpp"

namespace mflaw {

using Point = std::pair<double, double>;

// Least-squares line through (log x, log y).
struct FitResult {
  double exponent = 0.0;   // slope in log-log space
  double intercept = 0.0;  // log-space offset
  double r_squared = 0.0;
  std::size_t point_count = 0;
  std::vector<double> residuals;  // log y - fitted, in input order

  double max_abs_residual() const {
    double worst = 0.0;
    for (double r : residuals) worst = std::max(worst, std::fabs(r));
    return worst;
  }
};

// Unweighted OLS on log-log pairs, centered two-pass form.
inline FitResult fit_power_law(std::span<const Point> pairs) {
  if (pairs.size() < 2) fail(ErrorKind::kInvalidArgument, "power-law fit needs at least two points");
  std::vector<double> lx;
  std::vector<double> ly;
  lx.reserve(pairs.size());
  ly.reserve(pairs.size());
  for (const auto& [x, y] : pairs) {
    if (!(x > 0.0) || !(y > 0.0) || !std::isfinite(x) || !std::isfinite(y)) {
      fail(ErrorKind::kInvalidArgument, "power-law fit needs strictly positive finite values");
    }
    lx.push_back(std::log(x));
    ly.push_back(std::log(y));
  }
  const double n = static_cast<double>(pairs.size());
  const double mean_x = compensated_sum(lx) / n;
  const double mean_y = compensated_sum(ly) / n;
  CompensatedSum sxx;
  CompensatedSum sxy;
  CompensatedSum syy;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double dx = lx[k] - mean_x;
    const double dy = ly[k] - mean_y;
    sxx.add(dx * dx);
    sxy.add(dx * dy);
    syy.add(dy * dy);
  }
  if (!(sxx.value() > 0.0)) fail(ErrorKind::kInvalidArgument, "power-law fit needs two distinct x values");

  FitResult fit;
  fit.point_count = pairs.size();
  fit.exponent = sxy.value() / sxx.value();
  fit.intercept = mean_y - fit.exponent * mean_x;
  CompensatedSum ss_res;
  fit.residuals.reserve(lx.size());
  for (std::size_t k = 0; k < lx.size(); ++k) {
    const double r = ly[k] - (fit.intercept + fit.exponent * lx[k]);
    fit.residuals.push_back(r);
    ss_res.add(r * r);
  }
  const double ss_tot = syy.value();
  fit.r_squared = ss_tot > 0.0 ? std::clamp(1.0 - ss_res.value() / ss_tot, 0.0, 1.0) : 1.0;
  return fit;
}

inline bool has_distinct_word_degrees(const BipartiteGraph& g) {
  for (std::size_t i = 1; i < g.num_words(); ++i) {
    if (g.word_degree(i) != g.word_degree(0)) return true;
  }
  return false;
}

inline bool nearly_leq(double a, double b, double rel = 1e-12) {
  return a <= b + rel * std::max(std::fabs(a), std::fabs(b));
}

struct WordBound {
  std::size_t mu = 0;
  double probability = 0.0;  // p(s_i)
  double lower = 0.0;        // T_min mu^(phi+1)
  double upper = 0.0;        // T_max mu^(phi+1)
  bool satisfied = false;
  bool degree_bound_satisfied = false;  // b1 p^delta <= mu <= b2 p^delta
};

struct BoundsReport {
  double phi = 0.0;
  double delta = 0.0;  // 1 / (phi + 1)
  std::vector<double> t;  // T_j per meaning; 0 for unlinked meanings
  double t_min = 0.0;
  double t_max = 0.0;
  double gap_ratio = 1.0;  // T_max / T_min
  std::size_t omega_min = 0;  // over linked meanings
  std::size_t omega_max = 0;
  double b1 = 0.0;  // T_max^-delta
  double b2 = 0.0;  // T_min^-delta
  std::vector<WordBound> words;

  bool all_satisfied() const {
    return std::all_of(words.begin(), words.end(),
                       [](const WordBound& w) { return w.satisfied && w.degree_bound_satisfied; });
  }
};

namespace detail {

inline BoundsReport assemble_bounds(const BipartiteGraph& g, double phi, std::vector<double> t,
                                    const std::vector<double>& p_word) {
  BoundsReport r;
  r.phi = phi;
  r.delta = 1.0 / (phi + 1.0);
  r.t = std::move(t);
  bool first = true;
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    const std::size_t omega = g.meaning_degree(j);
    if (omega == 0) continue;
    if (first) {
      r.t_min = r.t_max = r.t[j];
      r.omega_min = r.omega_max = omega;
      first = false;
    }
    r.t_min = std::min(r.t_min, r.t[j]);
    r.t_max = std::max(r.t_max, r.t[j]);
    r.omega_min = std::min(r.omega_min, omega);
    r.omega_max = std::max(r.omega_max, omega);
  }
  r.gap_ratio = r.t_max / r.t_min;
  r.b1 = std::pow(r.t_max, -r.delta);
  r.b2 = std::pow(r.t_min, -r.delta);
  r.words.reserve(g.num_words());
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    WordBound w;
    w.mu = g.word_degree(i);
    w.probability = p_word[i];
    const double scale = std::pow(static_cast<double>(w.mu), phi + 1.0);
    w.lower = r.t_min * scale;
    w.upper = r.t_max * scale;
    w.satisfied = nearly_leq(w.lower, w.probability) && nearly_leq(w.probability, w.upper);
    const double p_delta = std::pow(w.probability, r.delta);
    const double mu = static_cast<double>(w.mu);
    w.degree_bound_satisfied = nearly_leq(r.b1 * p_delta, mu) && nearly_leq(mu, r.b2 * p_delta);
    r.words.push_back(w);
  }
  return r;
}

}  // namespace detail

// Relaxed law for the biased model: T_j = c omega_j^phi and
// T_min mu^(phi+1) <= p(s_i) <= T_max mu^(phi+1).
inline BoundsReport check_bounds(const BipartiteGraph& g, double phi) {
  const JointDistribution joint = joint_probability(g, phi);
  const double c = 1.0 / joint.normalizer();
  std::vector<double> t(g.num_meanings(), 0.0);
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    if (g.meaning_degree(j) > 0) t[j] = c * bias_power(static_cast<double>(g.meaning_degree(j)), phi);
  }
  return detail::assemble_bounds(g, phi, std::move(t), word_marginal(joint));
}

// Same bounds for the optimization-model family:
// T_j = p(r_j) / sum_i a_ij mu_i^phi.
inline BoundsReport check_bounds_model_family(const BipartiteGraph& g, const MeaningPrior& prior,
                                              double phi) {
  const JointDistribution joint = model_family_joint(g, prior, phi);
  const std::vector<double> p_meaning = prior.resolve(g);
  std::vector<double> t(g.num_meanings(), 0.0);
  for (std::size_t j = 0; j < g.num_meanings(); ++j) {
    if (g.meaning_degree(j) == 0) continue;
    CompensatedSum z;
    for (std::size_t i : g.meaning_neighbours(j)) {
      z.add(bias_power(static_cast<double>(g.word_degree(i)), phi));
    }
    t[j] = p_meaning[j] / z.value();
  }
  return detail::assemble_bounds(g, phi, std::move(t), word_marginal(joint));
}

struct TrivialWordBound {
  std::size_t mu = 0;
  double probability = 0.0;
  double linear_lower = 0.0;  // pi_min mu
  double linear_upper = 0.0;  // pi_max mu
  bool linear_satisfied = false;
  std::optional<double> power_lower;  // T_min mu^(phi+1), when phi is known
  std::optional<double> power_upper;
};

struct TrivialBoundsReport {
  double pi_min = 0.0;  // smallest positive joint probability
  double pi_max = 0.0;
  std::vector<TrivialWordBound> words;
  bool all_linear_satisfied = false;
  // Set only when the joint carries a bias exponent.
  std::optional<bool> power_coincides_with_linear;
  // Power interval inside the linear one for every word, strictly narrower
  // for at least one.
  std::optional<bool> power_strictly_tighter;
};

// Bounds implied by the range of the joint probabilities alone,
// pi_min mu_i <= p(s_i) <= pi_max mu_i, compared with the power bounds.
inline TrivialBoundsReport check_trivial_bounds(const JointDistribution& joint) {
  TrivialBoundsReport r;
  const auto support = joint.support();
  const auto probs = joint.probs();
  std::vector<std::size_t> mu(joint.num_words(), 0);
  std::vector<std::size_t> omega(joint.num_meanings(), 0);
  bool first = true;
  for (std::size_t e = 0; e < support.size(); ++e) {
    if (!(probs[e] > 0.0)) continue;
    ++mu[support[e].word];
    ++omega[support[e].meaning];
    if (first) {
      r.pi_min = r.pi_max = probs[e];
      first = false;
    }
    r.pi_min = std::min(r.pi_min, probs[e]);
    r.pi_max = std::max(r.pi_max, probs[e]);
  }
  const std::vector<double> p_word = word_marginal(joint);

  std::optional<std::pair<double, double>> t_range;
  const auto phi = joint.phi();
  if (phi.has_value()) {
    const std::vector<double> p_meaning = meaning_marginal(joint);
    std::vector<CompensatedSum> reach(joint.num_meanings());
    for (std::size_t e = 0; e < support.size(); ++e) {
      if (probs[e] > 0.0) {
        reach[support[e].meaning].add(bias_power(static_cast<double>(mu[support[e].word]), *phi));
      }
    }
    for (std::size_t j = 0; j < joint.num_meanings(); ++j) {
      if (omega[j] == 0) continue;
      const double t = p_meaning[j] / reach[j].value();
      if (!t_range) {
        t_range = {t, t};
      } else {
        t_range->first = std::min(t_range->first, t);
        t_range->second = std::max(t_range->second, t);
      }
    }
  }

  r.all_linear_satisfied = true;
  bool coincide = true;
  bool inside = true;
  bool narrower = false;
  for (std::size_t i = 0; i < joint.num_words(); ++i) {
    TrivialWordBound w;
    w.mu = mu[i];
    w.probability = p_word[i];
    w.linear_lower = r.pi_min * static_cast<double>(w.mu);
    w.linear_upper = r.pi_max * static_cast<double>(w.mu);
    w.linear_satisfied =
        nearly_leq(w.linear_lower, w.probability) && nearly_leq(w.probability, w.linear_upper);
    r.all_linear_satisfied = r.all_linear_satisfied && w.linear_satisfied;
    if (t_range) {
      const double scale = std::pow(static_cast<double>(w.mu), *phi + 1.0);
      w.power_lower = t_range->first * scale;
      w.power_upper = t_range->second * scale;
      const double tol = 1e-12 * std::max(w.linear_upper, 1e-300);
      coincide = coincide && std::fabs(*w.power_lower - w.linear_lower) <= tol &&
                 std::fabs(*w.power_upper - w.linear_upper) <= tol;
      inside = inside && nearly_leq(w.linear_lower, *w.power_lower) &&
               nearly_leq(*w.power_upper, w.linear_upper);
      const double linear_width = w.linear_upper - w.linear_lower;
      const double power_width = *w.power_upper - *w.power_lower;
      narrower = narrower || power_width < linear_width - tol;
    }
    r.words.push_back(w);
  }
  if (t_range) {
    r.power_coincides_with_linear = coincide;
    r.power_strictly_tighter = inside && narrower;
  }
  return r;
}

struct MeanIndependenceRow {
  std::size_t mu = 0;
  std::size_t word_count = 0;
  std::size_t edge_count = 0;
  double mean_omega_phi = 0.0;  // E[omega^phi | mu] over incident edges
  double mean_probability = 0.0;  // E[p | mu] over words
  double predicted = 0.0;         // c E[omega^phi] mu^(phi+1)
};

struct MeanIndependenceReport {
  double phi = 0.0;
  double c = 0.0;
  double mean_omega_phi = 0.0;  // E[omega^phi] over all edges
  std::vector<MeanIndependenceRow> rows;  // ascending mu
  bool mean_independent = false;
  // Checked only under mean independence.
  std::optional<bool> law_holds;
};

inline MeanIndependenceReport mean_independence_check(const BipartiteGraph& g, double phi,
                                                      double tolerance = 1e-9) {
  const JointDistribution joint = joint_probability(g, phi);
  const std::vector<double> p_word = word_marginal(joint);
  MeanIndependenceReport r;
  r.phi = phi;
  r.c = 1.0 / joint.normalizer();

  struct Accum {
    std::size_t words = 0;
    std::size_t edges = 0;
    CompensatedSum omega_phi;
    CompensatedSum probability;
  };
  std::map<std::size_t, Accum> by_mu;
  CompensatedSum all_omega_phi;
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    Accum& a = by_mu[g.word_degree(i)];
    ++a.words;
    a.probability.add(p_word[i]);
    for (std::size_t j : g.word_neighbours(i)) {
      const double w = bias_power(static_cast<double>(g.meaning_degree(j)), phi);
      ++a.edges;
      a.omega_phi.add(w);
      all_omega_phi.add(w);
    }
  }
  r.mean_omega_phi = all_omega_phi.value() / static_cast<double>(g.num_edges());

  r.mean_independent = true;
  bool law = true;
  for (const auto& [mu, a] : by_mu) {
    MeanIndependenceRow row;
    row.mu = mu;
    row.word_count = a.words;
    row.edge_count = a.edges;
    row.mean_omega_phi = a.omega_phi.value() / static_cast<double>(a.edges);
    row.mean_probability = a.probability.value() / static_cast<double>(a.words);
    row.predicted = r.c * r.mean_omega_phi * std::pow(static_cast<double>(mu), phi + 1.0);
    r.mean_independent = r.mean_independent &&
                         std::fabs(row.mean_omega_phi - r.mean_omega_phi) <=
                             tolerance * std::max(1.0, std::fabs(r.mean_omega_phi));
    law = law && std::fabs(row.mean_probability - row.predicted) <= tolerance;
    r.rows.push_back(row);
  }
  if (r.mean_independent) r.law_holds = law;
  return r;
}

// Meaning-frequency law check: regress mu on p(s_i) (delta) and p on mu (mirror).
struct MeaningFrequencyLawReport {
  double phi = 0.0;
  double predicted_delta = 0.0;  // 1 / (phi + 1)
  FitResult fit;                 // x = p(s_i), y = mu_i; exponent is delta
  FitResult mirror_fit;          // x = mu_i, y = p(s_i); exponent is 1/delta
  bool contrast = false;
  bool phi_outside_discussed_range = false;
  BoundsReport bounds;

  double delta() const { return fit.exponent; }
};

inline std::vector<Point> degree_probability_pairs(const BipartiteGraph& g, double phi) {
  const std::vector<double> p = word_marginal(joint_probability(g, phi));
  std::vector<Point> pairs;
  pairs.reserve(g.num_words());
  for (std::size_t i = 0; i < g.num_words(); ++i) {
    pairs.emplace_back(static_cast<double>(g.word_degree(i)), p[i]);
  }
  return pairs;
}

inline MeaningFrequencyLawReport check_meaning_frequency_law(const BipartiteGraph& g, double phi) {
  g.require_strict();
  if (!has_distinct_word_degrees(g)) {
    fail(ErrorKind::kInvalidArgument, "meaning-frequency fit needs two distinct word degrees");
  }
  MeaningFrequencyLawReport r;
  r.phi = phi;
  r.predicted_delta = 1.0 / (phi + 1.0);
  r.contrast = rows_pairwise_orthogonal(g);
  r.phi_outside_discussed_range = phi > kDiscussedPhiMax;
  std::vector<Point> mirror = degree_probability_pairs(g, phi);
  std::vector<Point> direct;
  direct.reserve(mirror.size());
  for (const auto& [mu, p] : mirror) direct.emplace_back(p, mu);
  r.fit = fit_power_law(direct);
  r.mirror_fit = fit_power_law(mirror);
  r.bounds = check_bounds(g, phi);
  return r;
}

// Zipf's two rank laws f ~ i^-alpha and mu ~ i^-gamma give mu ~ f^(gamma/alpha).
inline FitResult zipf_chain_check(double alpha, double gamma, std::size_t rank_count) {
  if (!(alpha > 0.0) || !(gamma > 0.0) || !std::isfinite(alpha) || !std::isfinite(gamma)) {
    fail(ErrorKind::kInvalidArgument, "alpha and gamma must be positive");
  }
  if (rank_count < 3) fail(ErrorKind::kInvalidArgument, "need at least 3 ranks");
  std::vector<Point> pairs;
  pairs.reserve(rank_count);
  for (std::size_t rank = 1; rank <= rank_count; ++rank) {
    const double i = static_cast<double>(rank);
    pairs.emplace_back(std::pow(i, -alpha), std::pow(i, -gamma));
  }
  return fit_power_law(pairs);
}

// p = f / L with L the token total.
inline std::vector<double> counts_to_probabilities(std::span<const std::uint64_t> frequencies,
                                                   std::uint64_t token_total) {
  if (token_total == 0) fail(ErrorKind::kInvalidArgument, "token total is zero");
  std::uint64_t sum = 0;
  for (auto f : frequencies) sum += f;
  if (sum != token_total) fail(ErrorKind::kInvalidArgument, "token total does not match counts");
  std::vector<double> out;
  out.reserve(frequencies.size());
  for (auto f : frequencies) out.push_back(static_cast<double>(f) / static_cast<double>(token_total));
  return out;
}

// Plot-ready "log_x,log_y" rows.
inline void write_log_log_csv(std::ostream& out, std::span<const Point> pairs) {
  const auto precision = out.precision();
  out << std::setprecision(17) << "log_x,log_y\n";
  for (const auto& [x, y] : pairs) out << std::log(x) << ',' << std::log(y) << '\n';
  out.precision(precision);
}

}  // namespace mflaw
