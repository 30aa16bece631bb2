#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <span>
#include <string_view>
#include <vector>

#include "mflaw/bipartite_graph.hpp"
#include "mflaw/error.hpp"
#include "mflaw/probability_model.hpp"
#include "mflaw/summation.hpp"

namespace mflaw {

// Absolute tolerance on I(S,R) when comparing against its maximum.
inline constexpr double kMutualInfoTolerance = 1e-9;

// Shannon entropy in nats with 0 log 0 = 0. Input must be a probability
// vector (sum within 1e-9 of 1).
inline double entropy(std::span<const double> dist) {
  CompensatedSum total;
  for (double p : dist) {
    if (!(p >= 0.0)) fail(ErrorKind::kInvalidArgument, "probabilities must be non-negative");
    total.add(p);
  }
  if (std::fabs(total.value() - 1.0) > 1e-9) {
    fail(ErrorKind::kInvalidArgument, "probabilities do not sum to 1");
  }
  CompensatedSum h;
  for (double p : dist) {
    if (p > 0.0) h.add(-p * std::log(p));
  }
  return std::max(0.0, h.value());
}

// H(S|R) = sum over linked meanings of p(r_j) H(S|r_j).
inline double conditional_entropy(const JointDistribution& joint) {
  const std::vector<double> p_meaning = meaning_marginal(joint);
  // Group support entries by meaning.
  std::vector<std::vector<double>> columns(joint.num_meanings());
  const auto support = joint.support();
  const auto probs = joint.probs();
  for (std::size_t e = 0; e < support.size(); ++e) columns[support[e].meaning].push_back(probs[e]);
  CompensatedSum h;
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (!(p_meaning[j] > 0.0)) continue;
    CompensatedSum hj;
    for (double p : columns[j]) {
      const double q = p / p_meaning[j];
      if (q > 0.0) hj.add(-q * std::log(q));
    }
    h.add(p_meaning[j] * hj.value());
  }
  return std::max(0.0, h.value());
}

struct MIReport {
  double h_words = 0.0;                 // H(S)
  double h_words_given_meanings = 0.0;  // H(S|R)
  double mutual_info = 0.0;             // I(S,R) = H(S) - H(S|R)
  std::string_view log_base = "nat";
  double max_possible = 0.0;  // log min(linked words, linked meanings)
  bool is_maximal = false;

  static constexpr double kBitsPerNat = 1.0 / std::numbers::ln2;
  double h_words_bits() const { return h_words * kBitsPerNat; }
  double h_words_given_meanings_bits() const { return h_words_given_meanings * kBitsPerNat; }
  double mutual_info_bits() const { return mutual_info * kBitsPerNat; }
};

// is_maximal compares I against log n when n <= m and log m otherwise,
// the two orientations of the maximization problem.
inline MIReport mutual_information(const JointDistribution& joint) {
  MIReport r;
  const std::vector<double> p_word = word_marginal(joint);
  r.h_words = entropy(p_word);
  r.h_words_given_meanings = conditional_entropy(joint);
  r.mutual_info = std::max(0.0, r.h_words - r.h_words_given_meanings);

  const std::vector<double> p_meaning = meaning_marginal(joint);
  const auto linked_words = std::count_if(p_word.begin(), p_word.end(), [](double p) { return p > 0.0; });
  const auto linked_meanings =
      std::count_if(p_meaning.begin(), p_meaning.end(), [](double p) { return p > 0.0; });
  r.max_possible = std::log(static_cast<double>(std::max<std::ptrdiff_t>(
      1, std::min(linked_words, linked_meanings))));

  const std::size_t n = joint.num_words();
  const std::size_t m = joint.num_meanings();
  const double target = std::log(static_cast<double>(std::min(n, m)));
  r.is_maximal = r.mutual_info >= target - kMutualInfoTolerance;
  return r;
}

enum class MiVerdict { kOptimal, kViolatesCondition1, kViolatesCondition2 };

inline std::string_view to_string(MiVerdict v) {
  switch (v) {
    case MiVerdict::kOptimal: return "optimal";
    case MiVerdict::kViolatesCondition1: return "violates_condition_1";
    case MiVerdict::kViolatesCondition2: return "violates_condition_2";
  }
  return "unknown";
}

// Structural test for the information-maximizing configurations.
// n <= m: (1) all word degrees equal some d in [1, m/n];
//         (2) every meaning degree is 0 or 1.
// n > m:  the same with words and meanings swapped.
// Condition 2 is checked first.
inline MiVerdict check_mi_optimal_configuration(const BipartiteGraph& g) {
  const DegreeProfile d = degrees(g);
  const bool words_side = g.num_words() <= g.num_meanings();
  const auto& balanced = words_side ? d.mu : d.omega;
  const auto& exclusive = words_side ? d.omega : d.mu;
  const std::size_t limit =
      words_side ? g.num_meanings() / g.num_words() : g.num_words() / g.num_meanings();

  if (std::any_of(exclusive.begin(), exclusive.end(), [](std::size_t x) { return x > 1; })) {
    return MiVerdict::kViolatesCondition2;
  }
  const std::size_t first = balanced.front();
  const bool equal = std::all_of(balanced.begin(), balanced.end(),
                                 [first](std::size_t x) { return x == first; });
  if (!equal || first < 1 || first > limit) return MiVerdict::kViolatesCondition1;
  return MiVerdict::kOptimal;
}

}  // namespace mflaw
