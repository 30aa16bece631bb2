#pragma once

#include <openssl/evp.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mflaw/bipartite_graph.hpp"
#include "mflaw/error.hpp"
#include "mflaw/info_metrics.hpp"
#include "mflaw/law_fitting.hpp"
#include "mflaw/probability_model.hpp"
#include "mflaw/walk_engine.hpp"

namespace mflaw {

inline constexpr std::string_view kToolName = "mflaw";
inline constexpr std::string_view kToolVersion = "1.0.0";

using Json = nlohmann::ordered_json;

enum class Analysis {
  kJoint,
  kMarginals,
  kWalk,
  kMutualInfo,
  kLaw,
  kBounds,
  kMeanIndependence,
  kZipfChain,
};

inline std::string_view to_string(Analysis a) {
  switch (a) {
    case Analysis::kJoint: return "joint";
    case Analysis::kMarginals: return "marginals";
    case Analysis::kWalk: return "walk";
    case Analysis::kMutualInfo: return "mi";
    case Analysis::kLaw: return "law";
    case Analysis::kBounds: return "bounds";
    case Analysis::kMeanIndependence: return "mean-independence";
    case Analysis::kZipfChain: return "zipf-chain";
  }
  return "unknown";
}

inline Analysis parse_analysis(std::string name) {
  std::replace(name.begin(), name.end(), '_', '-');
  for (Analysis a : {Analysis::kJoint, Analysis::kMarginals, Analysis::kWalk, Analysis::kMutualInfo,
                     Analysis::kLaw, Analysis::kBounds, Analysis::kMeanIndependence,
                     Analysis::kZipfChain}) {
    if (name == to_string(a)) return a;
  }
  fail(ErrorKind::kConfig, "unknown analysis '" + name + "'");
}

enum class OutputFormat { kCsv, kJson };

inline OutputFormat parse_format(std::string_view s) {
  if (s == "csv") return OutputFormat::kCsv;
  if (s == "json") return OutputFormat::kJson;
  fail(ErrorKind::kConfig, "format must be csv or json");
}

struct GeneratorSpec {
  std::string kind;  // random | contrast | mi-optimal
  std::size_t n = 0;
  std::size_t m = 0;
  double edge_probability = 0.5;
  std::vector<std::size_t> mu;
  std::size_t d = 1;
};

struct GraphSource {
  std::optional<std::string> file;
  std::optional<GeneratorSpec> generator;
};

struct WalkSettings {
  std::uint64_t steps = 100000;
  std::optional<std::uint64_t> burn_in;
  StartPolicy start = StartPolicy::kUniformOverWords;
  Vertex fixed_start{};
  std::uint32_t chains = 1;
};

struct ZipfChainSettings {
  double alpha = 1.0;
  double gamma = 0.5;
  std::size_t ranks = 1000;
};

struct ExperimentConfig {
  std::optional<GraphSource> graph;
  std::vector<double> phi;
  WalkSettings walk;
  std::vector<Analysis> analyses;
  ZipfChainSettings zipf_chain;
  std::string output_dir = "out";
  std::optional<std::uint64_t> seed;
  OutputFormat format = OutputFormat::kCsv;
  std::filesystem::path base_dir;  // graph file paths resolve against this

  bool has(Analysis a) const {
    return std::find(analyses.begin(), analyses.end(), a) != analyses.end();
  }

  bool needs_graph() const {
    return std::any_of(analyses.begin(), analyses.end(),
                       [](Analysis a) { return a != Analysis::kZipfChain; });
  }

  bool is_stochastic() const {
    return has(Analysis::kWalk) ||
           (graph && graph->generator && graph->generator->kind == "random");
  }
};

// Shortest round-trip decimal form of a double.
inline std::string format_number(double x) {
  char buf[64];
  const auto result = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, result.ptr);
}

namespace detail {

template <typename T>
T get_field(const Json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, std::string("config key '") + key + "': " + e.what());
  }
}

inline GeneratorSpec parse_generator(const Json& j) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "graph.generator must be an object");
  GeneratorSpec g;
  g.kind = get_field<std::string>(j, "kind", "");
  std::replace(g.kind.begin(), g.kind.end(), '_', '-');
  if (g.kind == "random") {
    g.n = get_field<std::size_t>(j, "n", 0);
    g.m = get_field<std::size_t>(j, "m", 0);
    g.edge_probability = get_field<double>(j, "p", 0.5);
  } else if (g.kind == "contrast") {
    g.mu = get_field<std::vector<std::size_t>>(j, "mu", {});
  } else if (g.kind == "mi-optimal") {
    g.n = get_field<std::size_t>(j, "n", 0);
    g.m = get_field<std::size_t>(j, "m", 0);
    g.d = get_field<std::size_t>(j, "d", 1);
  } else {
    fail(ErrorKind::kConfig, "graph.generator.kind must be random, contrast or mi-optimal");
  }
  return g;
}

inline Json generator_to_json(const GeneratorSpec& g) {
  Json j;
  j["kind"] = g.kind;
  if (g.kind == "random") {
    j["n"] = g.n;
    j["m"] = g.m;
    j["p"] = g.edge_probability;
  } else if (g.kind == "contrast") {
    j["mu"] = g.mu;
  } else {
    j["n"] = g.n;
    j["m"] = g.m;
    j["d"] = g.d;
  }
  return j;
}

inline Json start_to_json(const WalkSettings& w) {
  switch (w.start) {
    case StartPolicy::kUniformOverWords: return "uniform-words";
    case StartPolicy::kUniformOverVertices: return "uniform-vertices";
    case StartPolicy::kFixedVertex: {
      Json j;
      j[w.fixed_start.is_word ? "word" : "meaning"] = w.fixed_start.index;
      return j;
    }
  }
  return nullptr;
}

inline void parse_start(const Json& j, WalkSettings& w) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    std::replace(s.begin(), s.end(), '_', '-');
    if (s == "uniform-words") {
      w.start = StartPolicy::kUniformOverWords;
    } else if (s == "uniform-vertices") {
      w.start = StartPolicy::kUniformOverVertices;
    } else {
      fail(ErrorKind::kConfig, "walk.start must be uniform-words, uniform-vertices or a vertex");
    }
    return;
  }
  if (j.is_object() && (j.contains("word") || j.contains("meaning"))) {
    w.start = StartPolicy::kFixedVertex;
    w.fixed_start.is_word = j.contains("word");
    w.fixed_start.index = get_field<std::size_t>(j, w.fixed_start.is_word ? "word" : "meaning", 0);
    return;
  }
  fail(ErrorKind::kConfig, "walk.start must be uniform-words, uniform-vertices or a vertex");
}

}  // namespace detail

// Reads the JSON config dialect. Keys: graph {file | generator}, phi,
// walk {steps, burn_in, start, chains}, analyses, zipf_chain
// {alpha, gamma, ranks}, output_dir, seed, format.
inline ExperimentConfig parse_config(const Json& j, std::filesystem::path base_dir = {}) {
  if (!j.is_object()) fail(ErrorKind::kConfig, "config must be a JSON object");
  static const std::vector<std::string> known = {"graph",      "phi",  "walk",  "analyses",
                                                 "zipf_chain", "output_dir", "seed", "format"};
  for (const auto& [key, value] : j.items()) {
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      fail(ErrorKind::kConfig, "unknown config key '" + key + "'");
    }
  }
  ExperimentConfig c;
  c.base_dir = std::move(base_dir);
  if (j.contains("graph")) {
    const Json& g = j.at("graph");
    if (!g.is_object()) fail(ErrorKind::kConfig, "graph must be an object");
    GraphSource source;
    if (g.contains("file")) source.file = detail::get_field<std::string>(g, "file", "");
    if (g.contains("generator")) source.generator = detail::parse_generator(g.at("generator"));
    if (source.file.has_value() == source.generator.has_value()) {
      fail(ErrorKind::kConfig, "graph needs exactly one of file or generator");
    }
    c.graph = std::move(source);
  }
  if (j.contains("phi")) {
    const Json& phi = j.at("phi");
    c.phi = phi.is_number() ? std::vector<double>{phi.get<double>()}
                            : detail::get_field<std::vector<double>>(j, "phi", {});
  }
  if (j.contains("walk")) {
    const Json& w = j.at("walk");
    if (!w.is_object()) fail(ErrorKind::kConfig, "walk must be an object");
    c.walk.steps = detail::get_field<std::uint64_t>(w, "steps", c.walk.steps);
    if (w.contains("burn_in")) c.walk.burn_in = detail::get_field<std::uint64_t>(w, "burn_in", 0);
    if (w.contains("start")) detail::parse_start(w.at("start"), c.walk);
    c.walk.chains = detail::get_field<std::uint32_t>(w, "chains", 1);
  }
  for (const auto& name : detail::get_field<std::vector<std::string>>(j, "analyses", {})) {
    c.analyses.push_back(parse_analysis(name));
  }
  if (j.contains("zipf_chain")) {
    const Json& z = j.at("zipf_chain");
    c.zipf_chain.alpha = detail::get_field<double>(z, "alpha", c.zipf_chain.alpha);
    c.zipf_chain.gamma = detail::get_field<double>(z, "gamma", c.zipf_chain.gamma);
    c.zipf_chain.ranks = detail::get_field<std::size_t>(z, "ranks", c.zipf_chain.ranks);
  }
  c.output_dir = detail::get_field<std::string>(j, "output_dir", c.output_dir);
  if (j.contains("seed")) c.seed = detail::get_field<std::uint64_t>(j, "seed", 0);
  c.format = parse_format(detail::get_field<std::string>(j, "format", "csv"));
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kConfig, "cannot read config file " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::kConfig, "config is not valid JSON: " + std::string(e.what()));
  }
  return parse_config(j, path.parent_path());
}

// Config echo for the manifest. The output directory is left out: it says
// where a bundle lives, not what it contains.
inline Json to_json(const ExperimentConfig& c) {
  Json j;
  if (c.graph) {
    Json g;
    if (c.graph->file) g["file"] = *c.graph->file;
    if (c.graph->generator) g["generator"] = detail::generator_to_json(*c.graph->generator);
    j["graph"] = g;
  }
  j["phi"] = c.phi;
  Json w;
  w["steps"] = c.walk.steps;
  if (c.walk.burn_in) w["burn_in"] = *c.walk.burn_in;
  w["start"] = detail::start_to_json(c.walk);
  w["chains"] = c.walk.chains;
  j["walk"] = w;
  Json analyses = Json::array();
  for (Analysis a : c.analyses) analyses.push_back(std::string(to_string(a)));
  j["analyses"] = analyses;
  j["zipf_chain"] = {{"alpha", c.zipf_chain.alpha},
                     {"gamma", c.zipf_chain.gamma},
                     {"ranks", c.zipf_chain.ranks}};
  if (c.seed) j["seed"] = *c.seed;
  j["format"] = c.format == OutputFormat::kCsv ? "csv" : "json";
  return j;
}

inline void validate_config(const ExperimentConfig& c) {
  if (c.analyses.empty()) fail(ErrorKind::kConfig, "at least one analysis must be selected");
  if (c.needs_graph() && !c.graph) fail(ErrorKind::kConfig, "selected analyses need a graph");
  const bool phi_needed = std::any_of(c.analyses.begin(), c.analyses.end(),
                                      [](Analysis a) { return a != Analysis::kZipfChain; });
  if (phi_needed && c.phi.empty()) fail(ErrorKind::kConfig, "phi list is empty");
  for (double phi : c.phi) {
    if (!(phi >= 0.0) || !std::isfinite(phi)) fail(ErrorKind::kConfig, "phi values must be >= 0");
  }
  if (c.is_stochastic() && !c.seed) {
    fail(ErrorKind::kConfig, "a seed is required when a stochastic step is selected");
  }
  if (c.has(Analysis::kWalk)) {
    if (c.walk.steps == 0) fail(ErrorKind::kConfig, "walk.steps must be >= 1");
    if (c.walk.chains == 0) fail(ErrorKind::kConfig, "walk.chains must be >= 1");
  }
}

inline BipartiteGraph build_graph(const GeneratorSpec& spec, std::uint64_t seed) {
  if (spec.kind == "random") {
    return generate_random_bipartite(spec.n, spec.m, spec.edge_probability, seed);
  }
  if (spec.kind == "contrast") return generate_contrast_graph(spec.mu);
  if (spec.kind == "mi-optimal") return generate_mi_optimal(spec.n, spec.m, spec.d);
  fail(ErrorKind::kConfig, "unknown generator kind '" + spec.kind + "'");
}

inline BipartiteGraph load_graph_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::kInput, "cannot read graph file " + path.string());
  return parse_edge_list(in);
}

inline BipartiteGraph load_graph(const ExperimentConfig& c) {
  if (!c.graph) fail(ErrorKind::kConfig, "no graph source configured");
  if (c.graph->file) {
    std::filesystem::path p(*c.graph->file);
    if (p.is_relative() && !c.base_dir.empty()) p = c.base_dir / p;
    return load_graph_file(p);
  }
  return build_graph(*c.graph->generator, c.seed.value_or(0));
}

inline std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    fail(ErrorKind::kInput, "sha256 digest failed");
  }
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int k = 0; k < length; ++k) out << std::setw(2) << static_cast<int>(digest[k]);
  return out.str();
}

struct OutputFile {
  std::string name;
  std::string content;
};

struct ReportBundle {
  std::vector<OutputFile> files;  // manifest excluded
  std::string manifest;

  const OutputFile* find(std::string_view name) const {
    for (const auto& f : files) {
      if (f.name == name) return &f;
    }
    return nullptr;
  }
};

namespace detail {

inline std::ostringstream csv_stream() {
  std::ostringstream out;
  out << std::setprecision(17);
  return out;
}

inline std::string cell_name(Analysis a, double phi, OutputFormat f) {
  std::string name(to_string(a));
  name += "_phi" + format_number(phi);
  name += f == OutputFormat::kCsv ? ".csv" : ".json";
  return name;
}

inline OutputFile joint_output(const BipartiteGraph& g, double phi, OutputFormat f) {
  const JointDistribution joint = joint_probability(g, phi);
  OutputFile out{cell_name(Analysis::kJoint, phi, f), {}};
  if (f == OutputFormat::kCsv) {
    auto s = csv_stream();
    write_triplet_csv(s, joint);
    out.content = s.str();
  } else {
    Json j;
    j["phi"] = phi;
    j["normalizer"] = joint.normalizer();
    Json entries = Json::array();
    for (std::size_t e = 0; e < joint.support().size(); ++e) {
      entries.push_back({joint.support()[e].word, joint.support()[e].meaning, joint.probs()[e]});
    }
    j["entries"] = entries;
    out.content = j.dump(2) + "\n";
  }
  return out;
}

inline OutputFile marginals_output(const BipartiteGraph& g, double phi, OutputFormat f) {
  const JointDistribution joint = joint_probability(g, phi);
  const auto words = word_marginal(joint);
  const auto meanings = meaning_marginal(joint);
  const auto words_closed = word_marginal_closed_form(g, phi);
  const auto meanings_closed = meaning_marginal_closed_form(g, phi);
  OutputFile out{cell_name(Analysis::kMarginals, phi, f), {}};
  if (f == OutputFormat::kCsv) {
    auto s = csv_stream();
    s << "side,index,degree,probability,closed_form\n";
    for (std::size_t i = 0; i < words.size(); ++i) {
      s << "word," << i << ',' << g.word_degree(i) << ',' << words[i] << ',' << words_closed[i] << '\n';
    }
    for (std::size_t j = 0; j < meanings.size(); ++j) {
      s << "meaning," << j << ',' << g.meaning_degree(j) << ',' << meanings[j] << ','
        << meanings_closed[j] << '\n';
    }
    out.content = s.str();
  } else {
    Json j;
    j["phi"] = phi;
    j["word"] = words;
    j["word_closed_form"] = words_closed;
    j["meaning"] = meanings;
    j["meaning_closed_form"] = meanings_closed;
    out.content = j.dump(2) + "\n";
  }
  return out;
}

inline OutputFile walk_output(const BipartiteGraph& g, double phi, const ExperimentConfig& c,
                              OutputFormat f) {
  WalkConfig wc;
  wc.steps = c.walk.steps;
  wc.burn_in = c.walk.burn_in;
  wc.phi = phi;
  wc.start = c.walk.start;
  wc.fixed_start = c.walk.fixed_start;
  wc.master_seed = c.seed.value_or(0);
  wc.chains = c.walk.chains;
  const WalkCensus census = simulate_walk(g, wc);
  const double tv = total_variation(empirical_joint(census), joint_probability(g, phi));
  OutputFile out{cell_name(Analysis::kWalk, phi, f), {}};
  if (f == OutputFormat::kCsv) {
    auto s = csv_stream();
    s << "# tv_distance=" << tv << '\n';
    write_census_csv(s, census, wc);
    out.content = s.str();
  } else {
    Json j;
    j["phi"] = phi;
    j["steps"] = wc.steps;
    j["burn_in"] = wc.effective_burn_in();
    j["chains"] = wc.chains;
    j["master_seed"] = wc.master_seed;
    j["recorded_steps"] = census.recorded_steps;
    j["tv_distance"] = tv;
    j["word_visits"] = census.word_visits;
    j["meaning_visits"] = census.meaning_visits;
    Json pairs = Json::array();
    for (std::size_t e = 0; e < census.edges.size(); ++e) {
      pairs.push_back({census.edges[e].word, census.edges[e].meaning, census.pair_transits[e]});
    }
    j["pair_transits"] = pairs;
    out.content = j.dump(2) + "\n";
  }
  return out;
}

inline Json mi_record(const BipartiteGraph& g, double phi) {
  const MIReport r = mutual_information(joint_probability(g, phi));
  Json j;
  j["phi"] = phi;
  j["h_words"] = r.h_words;
  j["h_words_given_meanings"] = r.h_words_given_meanings;
  j["mutual_info"] = r.mutual_info;
  j["log_base"] = std::string(r.log_base);
  j["mutual_info_bits"] = r.mutual_info_bits();
  j["max_possible"] = r.max_possible;
  j["is_maximal"] = r.is_maximal;
  j["configuration"] = std::string(to_string(check_mi_optimal_configuration(g)));
  return j;
}

// Flat key-value record as a two-row CSV.
inline std::string flat_csv(const Json& record) {
  auto s = csv_stream();
  bool first = true;
  for (const auto& [key, value] : record.items()) {
    s << (first ? "" : ",") << key;
    first = false;
  }
  s << '\n';
  first = true;
  for (const auto& [key, value] : record.items()) {
    s << (first ? "" : ",");
    first = false;
    if (value.is_string()) {
      s << value.get<std::string>();
    } else if (value.is_boolean()) {
      s << (value.get<bool>() ? "true" : "false");
    } else if (value.is_number_float()) {
      s << value.get<double>();
    } else if (value.is_null()) {
      s << "";
    } else {
      s << value.dump();
    }
  }
  s << '\n';
  return s.str();
}

inline OutputFile record_output(Json record, const std::string& name, OutputFormat f) {
  if (f == OutputFormat::kCsv) return {name, flat_csv(record)};
  return {name, record.dump(2) + "\n"};
}

inline std::vector<OutputFile> law_outputs(const BipartiteGraph& g, double phi, OutputFormat f) {
  Json j;
  j["phi"] = phi;
  j["predicted_delta"] = 1.0 / (phi + 1.0);
  j["contrast"] = rows_pairwise_orthogonal(g);
  j["phi_outside_discussed_range"] = phi > kDiscussedPhiMax;
  std::vector<OutputFile> files;
  if (!has_distinct_word_degrees(g)) {
    j["degenerate"] = true;
    j["delta"] = nullptr;
    files.push_back(record_output(j, cell_name(Analysis::kLaw, phi, f), f));
    return files;
  }
  const MeaningFrequencyLawReport r = check_meaning_frequency_law(g, phi);
  j["degenerate"] = false;
  j["delta"] = r.delta();
  j["intercept"] = r.fit.intercept;
  j["r_squared"] = r.fit.r_squared;
  j["max_abs_residual"] = r.fit.max_abs_residual();
  j["mirror_exponent"] = r.mirror_fit.exponent;
  j["mirror_intercept"] = r.mirror_fit.intercept;
  j["mirror_r_squared"] = r.mirror_fit.r_squared;
  j["point_count"] = r.fit.point_count;
  j["gap_ratio"] = r.bounds.gap_ratio;
  j["bounds_hold"] = r.bounds.all_satisfied();
  files.push_back(record_output(j, cell_name(Analysis::kLaw, phi, f), f));

  std::vector<Point> pairs;
  for (const auto& [mu, p] : degree_probability_pairs(g, phi)) pairs.emplace_back(p, mu);
  auto s = csv_stream();
  write_log_log_csv(s, pairs);
  files.push_back({"law_phi" + format_number(phi) + "_loglog.csv", s.str()});
  return files;
}

inline OutputFile bounds_output(const BipartiteGraph& g, double phi, OutputFormat f) {
  const BoundsReport r = check_bounds(g, phi);
  const TrivialBoundsReport t = check_trivial_bounds(joint_probability(g, phi));
  OutputFile out{cell_name(Analysis::kBounds, phi, f), {}};
  if (f == OutputFormat::kCsv) {
    auto s = csv_stream();
    s << "# t_min=" << r.t_min << " t_max=" << r.t_max << " gap_ratio=" << r.gap_ratio
      << " omega_min=" << r.omega_min << " omega_max=" << r.omega_max << '\n';
    s << "# b1=" << r.b1 << " b2=" << r.b2 << " pi_min=" << t.pi_min << " pi_max=" << t.pi_max
      << " power_strictly_tighter=" << (t.power_strictly_tighter.value_or(false) ? "true" : "false")
      << '\n';
    s << "i,mu,p,lower,upper,satisfied,degree_bound_satisfied,linear_lower,linear_upper,"
         "linear_satisfied\n";
    for (std::size_t i = 0; i < r.words.size(); ++i) {
      const WordBound& w = r.words[i];
      const TrivialWordBound& tw = t.words[i];
      s << i << ',' << w.mu << ',' << w.probability << ',' << w.lower << ',' << w.upper << ','
        << (w.satisfied ? "true" : "false") << ',' << (w.degree_bound_satisfied ? "true" : "false")
        << ',' << tw.linear_lower << ',' << tw.linear_upper << ','
        << (tw.linear_satisfied ? "true" : "false") << '\n';
    }
    out.content = s.str();
  } else {
    Json j;
    j["phi"] = phi;
    j["t_min"] = r.t_min;
    j["t_max"] = r.t_max;
    j["gap_ratio"] = r.gap_ratio;
    j["omega_min"] = r.omega_min;
    j["omega_max"] = r.omega_max;
    j["b1"] = r.b1;
    j["b2"] = r.b2;
    j["all_satisfied"] = r.all_satisfied();
    j["pi_min"] = t.pi_min;
    j["pi_max"] = t.pi_max;
    j["linear_bounds_hold"] = t.all_linear_satisfied;
    j["power_strictly_tighter"] = t.power_strictly_tighter.value_or(false);
    Json words = Json::array();
    for (const WordBound& w : r.words) {
      words.push_back({{"mu", w.mu},
                       {"p", w.probability},
                       {"lower", w.lower},
                       {"upper", w.upper},
                       {"satisfied", w.satisfied}});
    }
    j["words"] = words;
    out.content = j.dump(2) + "\n";
  }
  return out;
}

inline OutputFile mean_independence_output(const BipartiteGraph& g, double phi, OutputFormat f) {
  const MeanIndependenceReport r = mean_independence_check(g, phi);
  OutputFile out{cell_name(Analysis::kMeanIndependence, phi, f), {}};
  if (f == OutputFormat::kCsv) {
    auto s = csv_stream();
    s << "# c=" << r.c << " mean_omega_phi=" << r.mean_omega_phi
      << " mean_independent=" << (r.mean_independent ? "true" : "false")
      << " law_holds=" << (r.law_holds ? (*r.law_holds ? "true" : "false") : "n/a") << '\n';
    s << "mu,words,edges,mean_omega_phi,mean_p,predicted\n";
    for (const auto& row : r.rows) {
      s << row.mu << ',' << row.word_count << ',' << row.edge_count << ',' << row.mean_omega_phi
        << ',' << row.mean_probability << ',' << row.predicted << '\n';
    }
    out.content = s.str();
  } else {
    Json j;
    j["phi"] = phi;
    j["c"] = r.c;
    j["mean_omega_phi"] = r.mean_omega_phi;
    j["mean_independent"] = r.mean_independent;
    j["law_holds"] = r.law_holds ? Json(*r.law_holds) : Json(nullptr);
    Json rows = Json::array();
    for (const auto& row : r.rows) {
      rows.push_back({{"mu", row.mu},
                      {"words", row.word_count},
                      {"edges", row.edge_count},
                      {"mean_omega_phi", row.mean_omega_phi},
                      {"mean_p", row.mean_probability},
                      {"predicted", row.predicted}});
    }
    j["rows"] = rows;
    out.content = j.dump(2) + "\n";
  }
  return out;
}

inline OutputFile zipf_chain_output(const ZipfChainSettings& z, OutputFormat f) {
  const FitResult fit = zipf_chain_check(z.alpha, z.gamma, z.ranks);
  Json j;
  j["alpha"] = z.alpha;
  j["gamma"] = z.gamma;
  j["ranks"] = z.ranks;
  j["predicted_delta"] = z.gamma / z.alpha;
  j["delta"] = fit.exponent;
  j["intercept"] = fit.intercept;
  j["r_squared"] = fit.r_squared;
  return record_output(j, std::string("zipf-chain") + (f == OutputFormat::kCsv ? ".csv" : ".json"),
                       f);
}

inline std::string make_manifest(const ExperimentConfig& c, const std::vector<OutputFile>& files,
                                 const std::optional<std::string>& graph_digest) {
  Json m;
  m["tool"] = std::string(kToolName);
  m["version"] = std::string(kToolVersion);
  m["config"] = to_json(c);
  if (graph_digest) m["graph_sha256"] = *graph_digest;
  Json list = Json::array();
  for (const auto& f : files) {
    list.push_back({{"path", f.name}, {"sha256", sha256_hex(f.content)}, {"bytes", f.content.size()}});
  }
  m["files"] = list;
  return m.dump(2) + "\n";
}

}  // namespace detail

// Runs every selected analysis for every phi and returns the bundle in
// memory; write_bundle puts it on disk.
inline ReportBundle run(const ExperimentConfig& config) {
  validate_config(config);
  ReportBundle bundle;
  std::optional<BipartiteGraph> graph;
  std::optional<std::string> graph_digest;
  if (config.needs_graph()) {
    graph = load_graph(config);
    graph->require_strict();
    if (config.has(Analysis::kWalk)) require_connected(*graph);
    graph_digest = sha256_hex(to_edge_list(*graph));
  }
  const OutputFormat f = config.format;
  for (double phi : config.phi) {
    for (Analysis a : config.analyses) {
      switch (a) {
        case Analysis::kJoint: bundle.files.push_back(detail::joint_output(*graph, phi, f)); break;
        case Analysis::kMarginals:
          bundle.files.push_back(detail::marginals_output(*graph, phi, f));
          break;
        case Analysis::kWalk:
          bundle.files.push_back(detail::walk_output(*graph, phi, config, f));
          break;
        case Analysis::kMutualInfo:
          bundle.files.push_back(detail::record_output(
              detail::mi_record(*graph, phi), detail::cell_name(Analysis::kMutualInfo, phi, f), f));
          break;
        case Analysis::kLaw:
          for (auto& file : detail::law_outputs(*graph, phi, f)) bundle.files.push_back(std::move(file));
          break;
        case Analysis::kBounds: bundle.files.push_back(detail::bounds_output(*graph, phi, f)); break;
        case Analysis::kMeanIndependence:
          bundle.files.push_back(detail::mean_independence_output(*graph, phi, f));
          break;
        case Analysis::kZipfChain: break;
      }
    }
  }
  if (config.has(Analysis::kZipfChain)) {
    bundle.files.push_back(detail::zipf_chain_output(config.zipf_chain, f));
  }
  bundle.manifest = detail::make_manifest(config, bundle.files, graph_digest);
  return bundle;
}

struct SweepRow {
  double phi = 0.0;
  std::optional<double> delta;  // empty when word degrees do not vary
  double gap_ratio = 1.0;
  double mutual_info = 0.0;
  std::optional<double> entropy_rate;  // empty for disconnected graphs
  bool phi_outside_discussed_range = false;
};

inline std::vector<SweepRow> sweep_phi(const BipartiteGraph& g, std::span<const double> grid) {
  g.require_strict();
  std::vector<SweepRow> rows;
  const bool distinct = has_distinct_word_degrees(g);
  const bool connected = is_connected(g);
  for (double phi : grid) {
    require_valid_phi(phi);
    SweepRow row;
    row.phi = phi;
    if (distinct) row.delta = check_meaning_frequency_law(g, phi).delta();
    row.gap_ratio = check_bounds(g, phi).gap_ratio;
    row.mutual_info = mutual_information(joint_probability(g, phi)).mutual_info;
    if (connected) row.entropy_rate = entropy_rate(g, phi);
    row.phi_outside_discussed_range = phi > kDiscussedPhiMax;
    rows.push_back(row);
  }
  return rows;
}

inline OutputFile sweep_output(std::span<const SweepRow> rows, OutputFormat f) {
  if (f == OutputFormat::kCsv) {
    auto s = detail::csv_stream();
    s << "phi,delta,degenerate,gap_ratio,mutual_info,entropy_rate,phi_outside_discussed_range\n";
    for (const auto& r : rows) {
      s << r.phi << ',';
      if (r.delta) s << *r.delta;
      s << ',' << (r.delta ? "false" : "true") << ',' << r.gap_ratio << ',' << r.mutual_info << ',';
      if (r.entropy_rate) s << *r.entropy_rate;
      s << ',' << (r.phi_outside_discussed_range ? "true" : "false") << '\n';
    }
    return {"sweep.csv", s.str()};
  }
  Json list = Json::array();
  for (const auto& r : rows) {
    list.push_back({{"phi", r.phi},
                    {"delta", r.delta ? Json(*r.delta) : Json(nullptr)},
                    {"degenerate", !r.delta.has_value()},
                    {"gap_ratio", r.gap_ratio},
                    {"mutual_info", r.mutual_info},
                    {"entropy_rate", r.entropy_rate ? Json(*r.entropy_rate) : Json(nullptr)},
                    {"phi_outside_discussed_range", r.phi_outside_discussed_range}});
  }
  return {"sweep.json", list.dump(2) + "\n"};
}

// Sweep bundle: the table plus a manifest.
inline ReportBundle run_sweep(const ExperimentConfig& config, std::span<const double> grid) {
  if (!config.graph) fail(ErrorKind::kConfig, "sweep needs a graph");
  if (grid.empty()) fail(ErrorKind::kConfig, "sweep grid is empty");
  for (double phi : grid) {
    if (!(phi >= 0.0) || !std::isfinite(phi)) fail(ErrorKind::kConfig, "phi values must be >= 0");
  }
  if (config.graph->generator && config.graph->generator->kind == "random" && !config.seed) {
    fail(ErrorKind::kConfig, "a seed is required for a random graph");
  }
  const BipartiteGraph g = load_graph(config);
  const auto rows = sweep_phi(g, grid);
  ReportBundle bundle;
  bundle.files.push_back(sweep_output(rows, config.format));
  ExperimentConfig echo = config;
  echo.phi.assign(grid.begin(), grid.end());
  bundle.manifest = detail::make_manifest(echo, bundle.files, sha256_hex(to_edge_list(g)));
  return bundle;
}

inline void write_bundle(const ReportBundle& bundle, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorKind::kInput, "cannot create output directory " + dir.string());
  auto write = [&](const std::string& name, const std::string& content) {
    std::ofstream out(dir / name, std::ios::binary);
    if (!out) fail(ErrorKind::kInput, "cannot write " + (dir / name).string());
    out << content;
  };
  for (const auto& f : bundle.files) write(f.name, f.content);
  write("manifest.json", bundle.manifest);
}

}  // namespace mflaw
