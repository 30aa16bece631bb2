// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "mflaw/cli.hpp"
#include "mflaw/experiment.hpp"
#include "test_support.hpp"

namespace {

using namespace mflaw;
namespace fs = std::filesystem;
using testing::for_each_strict_graph;
using testing::max_abs_diff;
using testing::random_connected;
using testing::toggle_edge;

struct Outcome {
  bool pass = false;
  std::string detail;
  std::vector<std::string> notes;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Outcome meaning_frequency_law() {
  std::vector<std::size_t> spec(20);
  std::iota(spec.begin(), spec.end(), std::size_t{1});
  const BipartiteGraph g = generate_contrast_graph(spec);
  Outcome o{true, {}, {}};
  double worst = 0.0;
  double at0 = 0.0;
  double at1 = 0.0;
  for (double phi : {0.0, 0.5, 1.0, 2.0}) {
    const double delta = check_meaning_frequency_law(g, phi).delta();
    worst = std::max(worst, std::fabs(delta - 1.0 / (phi + 1.0)));
    if (phi == 0.0) at0 = delta;
    if (phi == 1.0) at1 = delta;
  }
  o.pass = worst < 1e-9;
  o.detail = fmt("delta(phi=1)=%.4f delta(phi=0)=%.4f max|err|=%.1e", at1, at0, worst);
  return o;
}

Outcome minimalist() {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(2, seed));
    const std::size_t n = 1 + uniform_index(rng, 30);
    const std::size_t m = 5 + uniform_index(rng, 26);
    const BipartiteGraph g = generate_random_bipartite(n, m, 0.4 + 0.6 * uniform01(rng), seed);
    const auto p = word_marginal(minimalist_joint(g));
    double z = 0.0;
    for (std::size_t i = 0; i < n; ++i) z += std::pow(static_cast<double>(g.word_degree(i)), 2.0);
    for (std::size_t i = 0; i < n; ++i) {
      const double expected = std::pow(static_cast<double>(g.word_degree(i)), 2.0) / z;
      worst = std::max(worst, std::fabs(p[i] - expected) / expected);
    }
  }
  return {worst < 1e-12, fmt("100 graphs, max relative error %.1e", worst), {}};
}

Outcome stationarity() {
  double fixed = 0.0;
  double half = 0.0;
  double edge = 0.0;
  std::size_t graphs = 0;
  for (std::uint64_t seed = 0; seed < 300; ++seed) {
    Rng rng(derive_seed(3, seed));
    const std::size_t n = 1 + uniform_index(rng, 12);
    const std::size_t m = 1 + uniform_index(rng, 12);
    const double p = 0.2 + 0.8 * uniform01(rng);
    BipartiteGraph g = BipartiteGraph(1, 1, {{0, 0}});
    try {
      g = generate_random_bipartite(n, m, p, seed);
    } catch (const Error&) {
      continue;
    }
    if (!is_connected(g)) continue;
    ++graphs;
    const Matrix step = testing::walk_transition_matrix(g, 0.0);
    for (double phi : {0.0, 1.0, 2.0}) {
      const Matrix t = phi == 0.0 ? step : testing::walk_transition_matrix(g, phi);
      const StationaryState s = analytical_stationary(g, phi);
      std::vector<double> pi(s.word);
      pi.insert(pi.end(), s.meaning.begin(), s.meaning.end());
      const auto twice = testing::apply_left(testing::apply_left(pi, t), t);
      fixed = std::max(fixed, max_abs_diff(twice, pi));
      half = std::max(half, std::fabs(compensated_sum(s.word) - 0.5));
      const JointDistribution j = joint_probability(g, phi);
      edge = std::max(edge, max_abs_diff(s.edge, {j.probs().begin(), j.probs().end()}));
    }
  }
  const bool pass = graphs >= 50 && fixed < 1e-10 && half < 1e-12 && edge < 1e-12;
  return {pass,
          fmt("%zu connected graphs; fixed-point %.1e, |sum p_v - 1/2| %.1e, edge vs joint %.1e",
              graphs, fixed, half, edge),
          {}};
}

Outcome monte_carlo() {
  std::vector<BipartiteGraph> graphs{testing::g1()};
  for (std::uint64_t k = 0; graphs.size() < 11; ++k) {
    Rng rng(derive_seed(4, k));
    const std::size_t n = 4 + uniform_index(rng, 12);
    const std::size_t m = 4 + uniform_index(rng, 12);
    graphs.push_back(random_connected(n, m, 0.3, derive_seed(40, k)));
  }
  double worst = 0.0;
  std::size_t improved = 0;
  std::string vertices;
  for (std::size_t k = 0; k < graphs.size(); ++k) {
    const BipartiteGraph& g = graphs[k];
    const JointDistribution exact = joint_probability(g, 1.0);
    WalkConfig config;
    config.phi = 1.0;
    config.master_seed = derive_seed(400, k);
    config.steps = 1000000;
    const double tv1 = total_variation(empirical_joint(simulate_walk(g, config)), exact);
    config.steps = 4000000;
    const double tv4 = total_variation(empirical_joint(simulate_walk(g, config)), exact);
    worst = std::max(worst, tv1);
    improved += tv4 < tv1;
  }
  return {worst < 0.01 && improved >= 9,
          fmt("11 graphs, max TV at 1e6 steps %.4f, TV reduced at 4e6 steps on %zu/11", worst,
              improved),
          {}};
}

// The criterion as stated compares against log min(n, linked-meaning count)
// and asks every single-edge perturbation to lose information.
Outcome mi_characterization() {
  std::size_t graphs = 0;
  std::size_t mismatched = 0;
  std::size_t corrected_mismatched = 0;
  std::string first_mismatch;
  std::size_t perturbations = 0;
  std::size_t flat = 0;
  std::size_t leaving = 0;
  std::size_t leaving_flat = 0;
  std::string first_flat;
  for (std::size_t n = 1; n <= 3; ++n) {
    for (std::size_t m = 1; m <= 4; ++m) {
      for_each_strict_graph(n, m, [&](const BipartiteGraph& g) {
        ++graphs;
        const bool optimal = check_mi_optimal_configuration(g) == MiVerdict::kOptimal;
        const double literal = std::log(static_cast<double>(std::min(n, g.linked_meaning_count())));
        const double target = std::log(static_cast<double>(std::min(n, m)));
        for (double phi : {0.0, 1.0, 2.0}) {
          const double info = mutual_information(joint_probability(g, phi)).mutual_info;
          if (optimal != (std::fabs(info - literal) <= 1e-9)) {
            ++mismatched;
            if (first_mismatch.empty()) {
              std::string edges = to_edge_list(g);
              std::replace(edges.begin(), edges.end(), '\n', ' ');
              first_mismatch = fmt("[%s] phi=%g verdict=%s I=%.3g", edges.c_str(), phi,
                                   std::string(to_string(check_mi_optimal_configuration(g))).c_str(),
                                   info);
            }
          }
          corrected_mismatched += optimal != (std::fabs(info - target) <= 1e-9);
          if (!optimal) continue;
          for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < m; ++j) {
              const auto h = toggle_edge(g, i, j);
              if (!h) continue;
              ++perturbations;
              const double after = mutual_information(joint_probability(*h, phi)).mutual_info;
              const bool strict_drop = after < info - 1e-9;
              const bool stays = check_mi_optimal_configuration(*h) == MiVerdict::kOptimal;
              if (!strict_drop) {
                ++flat;
                if (first_flat.empty()) {
                  std::string edges = to_edge_list(g);
                  std::replace(edges.begin(), edges.end(), '\n', ' ');
                  first_flat = fmt("[%s] toggle (%zu,%zu) phi=%g I %.3g -> %.3g", edges.c_str(), i, j,
                                   phi, info, after);
                }
              }
              if (!stays) {
                ++leaving;
                leaving_flat += !strict_drop;
              }
            }
          }
        }
      });
    }
  }
  Outcome o;
  o.pass = mismatched == 0 && flat == 0;
  o.detail = fmt("%zu graphs x 3 phi: %zu verdict/target mismatches, %zu of %zu perturbations "
                 "without a strict decrease",
                 graphs, mismatched, flat, perturbations);
  if (!first_mismatch.empty()) o.notes.push_back("first mismatch: " + first_mismatch);
  if (!first_flat.empty()) o.notes.push_back("first flat perturbation: " + first_flat);
  o.notes.push_back(fmt("against log min(n, m): %zu mismatches", corrected_mismatched));
  o.notes.push_back(fmt("perturbations leaving the optimal set: %zu, without a strict decrease: %zu",
                        leaving, leaving_flat));
  return o;
}

Outcome bounds() {
  std::size_t failures = 0;
  double gap = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng(derive_seed(6, seed));
    const std::size_t n = 1 + uniform_index(rng, 20);
    const std::size_t m = 1 + uniform_index(rng, 20);
    const BipartiteGraph g = generate_random_bipartite(n, m, 0.4 + 0.6 * uniform01(rng), seed);
    for (double phi : {0.5, 1.0, 2.0}) {
      const BoundsReport r = check_bounds(g, phi);
      for (const WordBound& w : r.words) failures += !w.satisfied;
      const double expected =
          std::pow(static_cast<double>(r.omega_max) / static_cast<double>(r.omega_min), phi);
      gap = std::max(gap, std::fabs(r.gap_ratio - expected));
    }
  }
  double contrast_gap = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng rng(derive_seed(60, seed));
    std::vector<std::size_t> spec(1 + uniform_index(rng, 15));
    for (auto& mu : spec) mu = 1 + uniform_index(rng, 8);
    for (double phi : {0.5, 1.0, 2.0}) {
      contrast_gap = std::max(contrast_gap, std::fabs(check_bounds(generate_contrast_graph(spec), phi).gap_ratio - 1.0));
    }
  }
  return {failures == 0 && gap < 1e-12 && contrast_gap < 1e-12,
          fmt("%zu word bound violations, gap-ratio error %.1e, contrast gap-ratio error %.1e", failures,
              gap, contrast_gap),
          {}};
}

Outcome mean_independence() {
  double worst = 0.0;
  bool independent = true;
  for (std::size_t d : {1u, 2u, 3u, 5u}) {
    const BipartiteGraph g = testing::constant_omega_graph({1, 2, 3, 4, 6, 2, 5}, d);
    for (double phi : {0.0, 0.5, 1.0, 2.0}) {
      const MeanIndependenceReport r = mean_independence_check(g, phi);
      independent = independent && r.mean_independent;
      for (const auto& row : r.rows) {
        const double expected =
            r.c * r.mean_omega_phi * std::pow(static_cast<double>(row.mu), phi + 1.0);
        worst = std::max(worst, std::fabs(row.mean_probability - expected));
      }
    }
  }
  return {independent && worst < 1e-9, fmt("max |E[p|mu] - c E[w^phi] mu^(phi+1)| = %.1e", worst), {}};
}

Outcome zipf_chain() {
  const FitResult f = zipf_chain_check(1.0, 0.5, 1000);
  return {std::fabs(f.exponent - 0.5) < 1e-12, fmt("delta = %.15f", f.exponent), {}};
}

int run_cli(std::vector<std::string> args, std::ostream& out) {
  args.insert(args.begin(), "mflaw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

// Every subcommand, run from inside root with relative paths so that both
// runs see the same command lines; returns path -> bytes.
std::map<std::string, std::string> cli_suite(const fs::path& root) {
  fs::create_directories(root);
  const fs::path previous = fs::current_path();
  fs::current_path(root);
  std::ostringstream out;
  const std::string seed = "20240601";
  run_cli({"generate", "--kind", "random", "--n", "12", "--m", "15", "--p", "0.3", "--seed", seed,
           "--out", "gen"},
          out);
  const std::string graph = "gen/graph.txt";
  {
    std::ofstream cfg("experiment.json");
    cfg << R"({"graph": {"generator": {"kind": "random", "n": 10, "m": 14, "p": 0.35}},
  "phi": [0, 0.5, 1, 2],
  "walk": {"steps": 200000, "chains": 2},
  "analyses": ["joint", "marginals", "walk", "mi", "law", "bounds", "mean-independence", "zipf-chain"]})";
  }
  run_cli({"analyze", "--config", "experiment.json", "--seed", seed, "--out",
           "analyze"},
          out);
  run_cli({"analyze", "--config", "experiment.json", "--seed", seed, "--format",
           "json", "--out", "analyze_json"},
          out);
  run_cli({"walk", "--graph", graph, "--phi", "1", "--steps", "300000", "--seed", seed, "--out",
           "walk"},
          out);
  run_cli({"sweep", "--graph", graph, "--phi", "0,0.5,1,1.5,2,3", "--out", "sweep"},
          out);
  run_cli({"zipf-chain", "--alpha", "1", "--gamma", "0.5", "--ranks", "1000", "--out",
           "zipf"},
          out);
  fs::current_path(previous);
  std::map<std::string, std::string> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file()) continue;
    std::ifstream in(entry.path(), std::ios::binary);
    std::stringstream s;
    s << in.rdbuf();
    files[fs::relative(entry.path(), root).string()] = s.str();
  }
  return files;
}

Outcome determinism() {
  const fs::path base = fs::temp_directory_path() / ("mflaw_acceptance_" + std::to_string(::getpid()));
  const auto a = cli_suite(base / "a");
  const auto b = cli_suite(base / "b");
  std::error_code ec;
  fs::remove_all(base, ec);
  std::size_t differing = 0;
  for (const auto& [name, bytes] : a) {
    const auto it = b.find(name);
    differing += it == b.end() || it->second != bytes;
  }
  std::size_t bytes = 0;
  for (const auto& [name, content] : a) bytes += content.size();
  const bool pass = a.size() == b.size() && differing == 0 && a.size() > 40;
  return {pass, fmt("%zu files (%zu bytes) per run, %zu differ", a.size(), bytes, differing), {}};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double budget_s;  // 0: no runtime bound
    std::function<Outcome()> check;
  };
  const std::vector<Criterion> criteria{
      {1, "meaning-frequency law on contrast graphs", 1.0, meaning_frequency_law},
      {2, "minimalist word probabilities", 1.0, minimalist},
      {3, "walk stationarity", 5.0, stationarity},
      {4, "Monte Carlo agreement", 60.0, monte_carlo},
      {5, "information-maximizing configurations", 120.0, mi_characterization},
      {6, "relaxed-law bounds", 5.0, bounds},
      {7, "mean independence", 1.0, mean_independence},
      {8, "Zipf chain", 1.0, zipf_chain},
      {9, "determinism of the CLI bundles", 0.0, determinism},
  };
  int failed = 0;
  for (const auto& c : criteria) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what(), {}};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = c.budget_s == 0.0 || secs < c.budget_s;
    const bool pass = o.pass && in_time;
    failed += !pass;
    std::printf("%s %d %s: %s (%.2f s%s)\n", pass ? "PASS" : "FAIL", c.id, c.name, o.detail.c_str(), secs,
                in_time ? "" : ", over budget");
    for (const auto& note : o.notes) std::printf("     %s\n", note.c_str());
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
