#include <gtest/gtest.h>

#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "mflaw/cli.hpp"
#include "mflaw/experiment.hpp"
#include "test_support.hpp"

namespace mflaw {
namespace {

namespace fs = std::filesystem;

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    std::random_device rd;
    path_ = fs::temp_directory_path() / ("mflaw_test_" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

void spit(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  out << text;
}

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "mflaw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = cli::main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

ErrorKind kind_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorKind::kInvalidArgument;
}

TEST(Config, ParsesFullDialect) {
  const Json j = Json::parse(R"({
    "graph": {"generator": {"kind": "contrast", "mu": [1, 2, 3]}},
    "phi": [0, 1],
    "walk": {"steps": 500, "burn_in": 10, "start": {"meaning": 2}, "chains": 2},
    "analyses": ["joint", "mean_independence", "zipf-chain"],
    "zipf_chain": {"alpha": 2, "gamma": 1, "ranks": 10},
    "output_dir": "res",
    "seed": 9,
    "format": "json"
  })");
  const ExperimentConfig c = parse_config(j);
  EXPECT_EQ(c.graph->generator->mu, (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(c.phi, (std::vector<double>{0.0, 1.0}));
  EXPECT_EQ(c.walk.steps, 500u);
  EXPECT_EQ(c.walk.burn_in, 10u);
  EXPECT_EQ(c.walk.start, StartPolicy::kFixedVertex);
  EXPECT_FALSE(c.walk.fixed_start.is_word);
  EXPECT_EQ(c.walk.fixed_start.index, 2u);
  EXPECT_EQ(c.walk.chains, 2u);
  EXPECT_TRUE(c.has(Analysis::kMeanIndependence));
  EXPECT_EQ(c.zipf_chain.ranks, 10u);
  EXPECT_EQ(c.output_dir, "res");
  EXPECT_EQ(c.seed, 9u);
  EXPECT_EQ(c.format, OutputFormat::kJson);
  EXPECT_FALSE(c.is_stochastic());
  // Echo round trip.
  const ExperimentConfig back = parse_config(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, ScalarPhi) {
  EXPECT_EQ(parse_config(Json::parse(R"({"phi": 1.5})")).phi, (std::vector<double>{1.5}));
}

TEST(Config, Errors) {
  auto parse = [](const char* text) { return [text] { parse_config(Json::parse(text)); }; };
  EXPECT_EQ(kind_of(parse(R"({"bogus": 1})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"([1, 2])")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"graph": {}})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"graph": {"file": "a", "generator": {"kind": "contrast"}}})")),
            ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"graph": {"generator": {"kind": "lattice"}}})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"phi": "one"})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"analyses": ["spectrum"]})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"format": "xml"})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of(parse(R"({"walk": {"start": "anywhere"}})")), ErrorKind::kConfig);
  EXPECT_EQ(kind_of([] { load_config("/nonexistent/mflaw.json"); }), ErrorKind::kConfig);
}

TEST(Config, Validation) {
  ExperimentConfig c;
  EXPECT_EQ(kind_of([&] { validate_config(c); }), ErrorKind::kConfig);
  c.analyses = {Analysis::kJoint};
  EXPECT_EQ(kind_of([&] { validate_config(c); }), ErrorKind::kConfig);  // no graph
  c.graph = GraphSource{std::nullopt, GeneratorSpec{"contrast", 0, 0, 0.5, {1, 2}, 1}};
  EXPECT_EQ(kind_of([&] { validate_config(c); }), ErrorKind::kConfig);  // no phi
  c.phi = {-1.0};
  EXPECT_EQ(kind_of([&] { validate_config(c); }), ErrorKind::kConfig);
  c.phi = {1.0};
  EXPECT_NO_THROW(validate_config(c));
  c.analyses.push_back(Analysis::kWalk);
  EXPECT_EQ(kind_of([&] { validate_config(c); }), ErrorKind::kConfig);  // walk needs a seed
  c.seed = 1;
  EXPECT_NO_THROW(validate_config(c));
}

TEST(Run, G1Bundle) {
  TempDir dir;
  spit(dir.path() / "g1.txt", to_edge_list(testing::g1()));
  ExperimentConfig c;
  c.graph = GraphSource{(dir.path() / "g1.txt").string(), std::nullopt};
  c.phi = {0.0, 1.0};
  c.analyses = {Analysis::kJoint, Analysis::kMutualInfo, Analysis::kBounds};
  const ReportBundle b = run(c);
  ASSERT_EQ(b.files.size(), 6u);
  std::vector<std::string> names;
  for (const auto& f : b.files) names.push_back(f.name);
  EXPECT_EQ(names, (std::vector<std::string>{"joint_phi0.csv", "mi_phi0.csv", "bounds_phi0.csv",
                                             "joint_phi1.csv", "mi_phi1.csv", "bounds_phi1.csv"}));
  EXPECT_EQ(b.find("joint_phi1.csv")->content,
            "i,j,p\n0,0,0.16666666666666666\n0,1,0.33333333333333331\n"
            "1,1,0.33333333333333331\n1,2,0.16666666666666666\n");

  const Json manifest = Json::parse(b.manifest);
  EXPECT_EQ(manifest["tool"], "mflaw");
  EXPECT_EQ(manifest["graph_sha256"], sha256_hex("2 3\n0 0\n0 1\n1 1\n1 2\n"));
  EXPECT_EQ(manifest["files"].size(), 6u);
  EXPECT_EQ(manifest["files"][3]["sha256"], sha256_hex(b.files[3].content));
  EXPECT_FALSE(manifest["config"].contains("output_dir"));

  write_bundle(b, dir.path() / "out");
  EXPECT_TRUE(fs::exists(dir.path() / "out" / "manifest.json"));
  EXPECT_EQ(slurp(dir.path() / "out" / "bounds_phi1.csv"), b.files[5].content);
}

TEST(Run, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Run, LawOnContrastGraph) {
  ExperimentConfig c;
  c.graph = GraphSource{std::nullopt, GeneratorSpec{"contrast", 0, 0, 0.5, {1, 2, 3}, 1}};
  c.phi = {1.0};
  c.analyses = {Analysis::kLaw};
  c.format = OutputFormat::kJson;
  const ReportBundle b = run(c);
  ASSERT_EQ(b.files.size(), 2u);
  const Json law = Json::parse(b.find("law_phi1.json")->content);
  EXPECT_NEAR(law["delta"].get<double>(), 0.5, 1e-12);
  EXPECT_EQ(law["contrast"], true);
  EXPECT_NE(b.find("law_phi1_loglog.csv"), nullptr);
}

TEST(Run, DegenerateLawIsRecorded) {
  ExperimentConfig c;
  c.graph = GraphSource{std::nullopt, GeneratorSpec{"mi-optimal", 2, 4, 0.5, {}, 2}};
  c.phi = {1.0};
  c.analyses = {Analysis::kLaw};
  c.format = OutputFormat::kJson;
  const Json law = Json::parse(run(c).files.at(0).content);
  EXPECT_EQ(law["degenerate"], true);
  EXPECT_TRUE(law["delta"].is_null());
}

TEST(Run, WalkOutputIsDeterministic) {
  ExperimentConfig c;
  c.graph = GraphSource{std::nullopt, GeneratorSpec{"random", 6, 6, 0.5, {}, 1}};
  c.phi = {1.0};
  c.analyses = {Analysis::kWalk, Analysis::kMarginals};
  c.walk.steps = 20000;
  c.seed = 12;
  const ReportBundle a = run(c);
  const ReportBundle b = run(c);
  ASSERT_EQ(a.files.size(), b.files.size());
  for (std::size_t k = 0; k < a.files.size(); ++k) EXPECT_EQ(a.files[k].content, b.files[k].content);
  EXPECT_EQ(a.manifest, b.manifest);
  EXPECT_NE(a.find("walk_phi1.csv")->content.find("# tv_distance="), std::string::npos);
  c.seed = 13;
  EXPECT_NE(run(c).manifest, a.manifest);
}

TEST(Sweep, ContrastGraphDeltas) {
  const double grid[] = {0.0, 1.0, 3.0};
  const auto rows = sweep_phi(testing::g3(), grid);
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(*rows[0].delta, 1.0, 1e-12);
  EXPECT_NEAR(*rows[1].delta, 0.5, 1e-12);
  EXPECT_NEAR(*rows[2].delta, 0.25, 1e-12);
  EXPECT_TRUE(rows[2].phi_outside_discussed_range);
  EXPECT_FALSE(rows[0].entropy_rate.has_value());  // G3 is disconnected
  for (const auto& r : rows) EXPECT_NEAR(r.gap_ratio, 1.0, 1e-15);
}

TEST(Sweep, DegenerateAndGapRatio) {
  const double grid[] = {1.0};
  const auto k = sweep_phi(testing::k22(), grid);
  EXPECT_FALSE(k[0].delta.has_value());
  EXPECT_NEAR(*k[0].entropy_rate, std::log(2.0), 1e-12);
  EXPECT_NEAR(sweep_phi(testing::g1(), grid)[0].gap_ratio, 2.0, 1e-14);

  const auto out = sweep_output(k, OutputFormat::kCsv);
  EXPECT_EQ(out.name, "sweep.csv");
  EXPECT_EQ(out.content.substr(0, out.content.find('\n')),
            "phi,delta,degenerate,gap_ratio,mutual_info,entropy_rate,phi_outside_discussed_range");
  EXPECT_EQ(out.content.substr(out.content.find('\n') + 1, 8), "1,,true,");
}

TEST(Cli, ExitCodes) {
  TempDir dir;
  EXPECT_EQ(run_cli({}).code, cli::kExitConfig);
  EXPECT_EQ(run_cli({"frobnicate"}).code, cli::kExitConfig);
  EXPECT_EQ(run_cli({"analyze", "--config", (dir.path() / "missing.json").string()}).code,
            cli::kExitConfig);

  spit(dir.path() / "bad.json", R"({"phi": [1], "colour": "red"})");
  const CliResult bad = run_cli({"analyze", "--config", (dir.path() / "bad.json").string()});
  EXPECT_EQ(bad.code, cli::kExitConfig);
  const Json err = Json::parse(bad.err);
  EXPECT_EQ(err["error"]["kind"], "config");
  EXPECT_EQ(err["error"]["exit_code"], 2);

  spit(dir.path() / "broken.txt", "2 2\n0 zero\n");
  EXPECT_EQ(run_cli({"analyze", "--graph", (dir.path() / "broken.txt").string(), "--phi", "1",
                     "--analyses", "joint", "--out", (dir.path() / "o").string()})
                .code,
            cli::kExitInput);
  EXPECT_EQ(run_cli({"analyze", "--graph", (dir.path() / "none.txt").string(), "--phi", "1",
                     "--analyses", "joint"})
                .code,
            cli::kExitInput);

  // Disconnected graph cannot be walked.
  spit(dir.path() / "split.txt", "2 2\n0 0\n1 1\n");
  EXPECT_EQ(run_cli({"walk", "--graph", (dir.path() / "split.txt").string(), "--phi", "1", "--seed",
                     "1", "--steps", "100", "--out", (dir.path() / "w").string()})
                .code,
            cli::kExitInput);

  const CliResult infeasible =
      run_cli({"generate", "--kind", "random", "--n", "4", "--m", "4", "--p", "1e-12", "--seed", "3"});
  EXPECT_EQ(infeasible.code, cli::kExitInfeasible);
  EXPECT_EQ(Json::parse(infeasible.err)["error"]["kind"], "infeasible");

  EXPECT_EQ(run_cli({"generate", "--kind", "random", "--n", "4", "--m", "4"}).code, cli::kExitConfig);
  EXPECT_EQ(run_cli({"--format", "xml", "zipf-chain"}).code, cli::kExitConfig);
}

TEST(Cli, GenerateToStdout) {
  const CliResult r = run_cli({"generate", "--kind", "contrast", "--mu", "1,2"});
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.out, "2 3\n0 0\n1 1\n1 2\n");
  const CliResult rnd = run_cli({"generate", "--kind", "random", "--n", "5", "--m", "5", "--seed", "42"});
  EXPECT_EQ(rnd.out, to_edge_list(generate_random_bipartite(5, 5, 0.5, 42)));
}

TEST(Cli, ZipfChainToStdout) {
  const CliResult r = run_cli({"zipf-chain", "--alpha", "1", "--gamma", "0.5", "--ranks", "1000"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("predicted_delta"), std::string::npos);
}

TEST(Cli, GlobalFlagsAfterSubcommand) {
  TempDir dir;
  spit(dir.path() / "g1.txt", to_edge_list(testing::g1()));
  const CliResult r = run_cli({"sweep", "--graph", (dir.path() / "g1.txt").string(), "--phi",
                               "0,1,2", "--out", (dir.path() / "s").string(), "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const Json rows = Json::parse(slurp(dir.path() / "s" / "sweep.json"));
  ASSERT_EQ(rows.size(), 3u);
  EXPECT_NEAR(rows[1]["gap_ratio"].get<double>(), 2.0, 1e-14);
  EXPECT_TRUE(fs::exists(dir.path() / "s" / "manifest.json"));
}

TEST(Cli, ConfigFileWithRelativeGraph) {
  TempDir dir;
  spit(dir.path() / "g1.txt", to_edge_list(testing::g1()));
  spit(dir.path() / "exp.json",
       R"({"graph": {"file": "g1.txt"}, "phi": [1], "analyses": ["marginals", "mi"], "seed": 5})");
  const CliResult r = run_cli({"analyze", "--config", (dir.path() / "exp.json").string(), "--out",
                               (dir.path() / "res").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir.path() / "res" / "marginals_phi1.csv"));
  EXPECT_TRUE(fs::exists(dir.path() / "res" / "mi_phi1.csv"));
}

}  // namespace
}  // namespace mflaw
