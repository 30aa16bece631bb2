#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mflaw/error.hpp"
#include "mflaw/experiment.hpp"

namespace mflaw::cli {

// Stable exit codes for scripting.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitInput = 3;
inline constexpr int kExitInfeasible = 4;

inline int exit_code(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kConfig:
    case ErrorKind::kInvalidArgument: return kExitConfig;
    case ErrorKind::kInput:
    case ErrorKind::kDisconnected: return kExitInput;
    case ErrorKind::kInfeasible: return kExitInfeasible;
  }
  return kExitConfig;
}

inline void report_error(std::ostream& err, std::string_view kind, std::string_view message,
                         int code) {
  nlohmann::ordered_json j;
  j["error"] = {{"kind", std::string(kind)}, {"message", std::string(message)}, {"exit_code", code}};
  err << j.dump() << '\n';
}

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format;

  std::string graph_file;
  std::vector<double> phi;
  std::vector<std::string> analyses;
  std::optional<std::uint64_t> steps;
  std::optional<std::uint64_t> burn_in;
  std::optional<std::uint32_t> chains;
  std::string start;

  std::string kind;
  std::size_t n = 0;
  std::size_t m = 0;
  double p = 0.5;
  std::vector<std::size_t> mu;
  std::size_t d = 1;

  double alpha = 1.0;
  double gamma = 0.5;
  std::size_t ranks = 1000;
};

inline ExperimentConfig base_config(const Options& o) {
  ExperimentConfig c = o.config_path.empty() ? ExperimentConfig{} : load_config(o.config_path);
  if (o.seed) c.seed = o.seed;
  if (!o.out.empty()) c.output_dir = o.out;
  if (!o.format.empty()) c.format = parse_format(o.format);
  if (!o.graph_file.empty()) {
    c.graph = GraphSource{};
    c.graph->file = o.graph_file;
    c.base_dir.clear();
  }
  if (!o.phi.empty()) c.phi = o.phi;
  if (!o.analyses.empty()) {
    c.analyses.clear();
    for (const auto& a : o.analyses) c.analyses.push_back(parse_analysis(a));
  }
  if (o.steps) c.walk.steps = *o.steps;
  if (o.burn_in) c.walk.burn_in = o.burn_in;
  if (o.chains) c.walk.chains = *o.chains;
  if (!o.start.empty()) {
    nlohmann::ordered_json j = {{"walk", {{"start", o.start}}}};
    c.walk.start = parse_config(j).walk.start;
  }
  return c;
}

inline int do_generate(const Options& o, std::ostream& out, bool out_given) {
  ExperimentConfig c = base_config(o);
  GeneratorSpec spec;
  if (!o.kind.empty()) {
    spec.kind = o.kind;
    spec.n = o.n;
    spec.m = o.m;
    spec.edge_probability = o.p;
    spec.mu = o.mu;
    spec.d = o.d;
  } else if (c.graph && c.graph->generator) {
    spec = *c.graph->generator;
  } else {
    fail(ErrorKind::kConfig, "generate needs --kind or a config with graph.generator");
  }
  if (spec.kind != "random" && spec.kind != "contrast" && spec.kind != "mi-optimal") {
    fail(ErrorKind::kConfig, "--kind must be random, contrast or mi-optimal");
  }
  if (spec.kind == "random" && !c.seed) fail(ErrorKind::kConfig, "random generation needs --seed");
  const BipartiteGraph g = build_graph(spec, c.seed.value_or(0));
  if (!out_given && o.config_path.empty()) {
    write_edge_list(out, g);
    return kExitOk;
  }
  const std::filesystem::path dir(c.output_dir);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  std::ofstream file(dir / "graph.txt", std::ios::binary);
  if (!file) fail(ErrorKind::kInput, "cannot write " + (dir / "graph.txt").string());
  write_edge_list(file, g);
  out << (dir / "graph.txt").string() << '\n';
  return kExitOk;
}

inline int finish(const ReportBundle& bundle, const ExperimentConfig& c, std::ostream& out) {
  write_bundle(bundle, c.output_dir);
  out << "wrote " << bundle.files.size() << " files + manifest.json to " << c.output_dir << '\n';
  return kExitOk;
}

// Entry point shared by the mflaw executable and the tests.
inline int main(int argc, const char* const* argv, std::ostream& out = std::cout,
                std::ostream& err = std::cerr) {
  CLI::App app{"Word-meaning network laboratory: biased walks and the meaning-frequency law",
               "mflaw"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));
  Options o;
  app.add_option("--config", o.config_path, "JSON experiment config");
  app.add_option("--seed", o.seed, "master seed (u64)");
  app.add_option("--out", o.out, "output directory");
  app.add_option("--format", o.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));

  auto add_graph = [&](CLI::App* sub) {
    sub->add_option("--graph", o.graph_file, "edge-list graph file");
    sub->add_option("--phi", o.phi, "bias exponent(s)")->delimiter(',');
  };
  auto add_walk = [&](CLI::App* sub) {
    sub->add_option("--steps", o.steps, "recorded transitions");
    sub->add_option("--burn-in", o.burn_in, "discarded transitions per chain");
    sub->add_option("--chains", o.chains, "independent chains");
    sub->add_option("--start", o.start, "uniform-words or uniform-vertices");
  };

  CLI::App* generate = app.add_subcommand("generate", "write a generated graph as an edge list");
  generate->add_option("--kind", o.kind, "random | contrast | mi-optimal");
  generate->add_option("--n", o.n, "words");
  generate->add_option("--m", o.m, "meanings");
  generate->add_option("--p", o.p, "edge probability (random)");
  generate->add_option("--mu", o.mu, "word degrees (contrast)")->delimiter(',');
  generate->add_option("--d", o.d, "degree (mi-optimal)");

  CLI::App* analyze = app.add_subcommand("analyze", "run the configured analyses");
  add_graph(analyze);
  add_walk(analyze);
  analyze->add_option("--analyses", o.analyses, "analyses to run")->delimiter(',');

  CLI::App* walk = app.add_subcommand("walk", "simulate the biased walk and export its census");
  add_graph(walk);
  add_walk(walk);

  CLI::App* sweep = app.add_subcommand("sweep", "tabulate delta, gap ratio, I(S,R) over phi");
  add_graph(sweep);

  CLI::App* zipf = app.add_subcommand("zipf-chain", "recover delta = gamma/alpha from rank laws");
  zipf->add_option("--alpha", o.alpha, "frequency-rank exponent");
  zipf->add_option("--gamma", o.gamma, "meaning-rank exponent");
  zipf->add_option("--ranks", o.ranks, "number of ranks");

  for (CLI::App* sub : {generate, analyze, walk, sweep, zipf}) sub->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion& e) {
    out << kToolVersion << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    report_error(err, "config", e.what(), kExitConfig);
    return kExitConfig;
  }

  try {
    if (generate->parsed()) return do_generate(o, out, !o.out.empty());
    if (analyze->parsed()) {
      const ExperimentConfig c = base_config(o);
      return finish(run(c), c, out);
    }
    if (walk->parsed()) {
      ExperimentConfig c = base_config(o);
      c.analyses = {Analysis::kWalk};
      return finish(run(c), c, out);
    }
    if (sweep->parsed()) {
      const ExperimentConfig c = base_config(o);
      return finish(run_sweep(c, c.phi), c, out);
    }
    if (zipf->parsed()) {
      ExperimentConfig c = base_config(o);
      c.analyses = {Analysis::kZipfChain};
      if (zipf->count("--alpha") || o.config_path.empty()) c.zipf_chain.alpha = o.alpha;
      if (zipf->count("--gamma") || o.config_path.empty()) c.zipf_chain.gamma = o.gamma;
      if (zipf->count("--ranks") || o.config_path.empty()) c.zipf_chain.ranks = o.ranks;
      const ReportBundle bundle = run(c);
      if (o.out.empty() && o.config_path.empty()) {
        out << bundle.files.front().content;
        return kExitOk;
      }
      return finish(bundle, c, out);
    }
  } catch (const Error& e) {
    const int code = exit_code(e.kind());
    report_error(err, to_string(e.kind()), e.what(), code);
    return code;
  } catch (const std::exception& e) {
    report_error(err, "input", e.what(), kExitInput);
    return kExitInput;
  }
  return kExitConfig;
}

}  // namespace mflaw::cli
