#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "hgformer/cli.hpp"
#include "hgformer/error.hpp"
#include "hgformer/io.hpp"
#include "support.hpp"

using namespace hgformer;
namespace fs = std::filesystem;

namespace {

class ScratchDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           (std::string("hgformer_") + info->test_suite_name() + "_" + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(dir_ / name) << text;
    return dir_ / name;
  }

  fs::path manifest(std::size_t nodes, int classes, bool weights = false) const {
    std::string j = R"({"name": "tiny", "num_nodes": )" + std::to_string(nodes) +
                    R"(, "num_classes": )" + std::to_string(classes) +
                    R"(, "edges": "edges.txt", "features": "features.tsv", "labels": "labels.tsv")";
    if (weights) j += R"(, "weights": "weights.txt")";
    return write("manifest.json", j + "}");
  }

  fs::path dir_;
};

struct CliRun {
  int code;
  std::string out, err;
};

CliRun run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "hgformer");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::pair<ErrorKind, std::string> error_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return {e.kind(), e.what()};
  }
  ADD_FAILURE() << "no error thrown";
  return {ErrorKind::InvalidParameters, ""};
}

std::size_t count_lines(const std::string& text, const std::string& prefix = "") {
  std::istringstream ss(text);
  std::size_t n = 0;
  for (std::string line; std::getline(ss, line);)
    n += (!line.empty() && line[0] != '#' && line.rfind(prefix, 0) == 0) ? 1 : 0;
  return n;
}

}  // namespace

using Io = ScratchDir;
using Cli = ScratchDir;

TEST_F(Io, TwoNodeFixture) {
  write("edges.txt", "# header\n0 1\n\n");
  write("features.tsv", "1.0\t0.0\n0.0\t1.0\n");
  write("labels.tsv", "0\t0\n1\t1\n");
  const Dataset d = load_dataset(manifest(2, 2));
  EXPECT_EQ(d.name, "tiny");
  EXPECT_EQ(d.num_nodes(), 2u);
  EXPECT_EQ(d.hypergraph.num_edges(), 1u);
  EXPECT_EQ(d.features.cols(), 2u);
  EXPECT_EQ(d.num_classes, 2);
  EXPECT_EQ(d.labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(d.features(1, 1), 1.0);
}

TEST_F(Io, WeightsAreRead) {
  write("edges.txt", "0 1\n1 2\n");
  write("features.tsv", "1\n2\n3\n");
  write("labels.tsv", "0 0\n1 1\n2 0\n");
  write("weights.txt", "0.5\n2.5\n");
  const Dataset d = load_dataset(manifest(3, 2, true));
  EXPECT_EQ(d.hypergraph.weights()[1], 2.5);
  write("weights.txt", "0.5\n");
  EXPECT_EQ(error_of([&] { load_dataset(manifest(3, 2, true)); }).first, ErrorKind::ShapeMismatch);
}

TEST_F(Io, MissingFeatureRowNamesTheFile) {
  write("edges.txt", "0 1 2\n");
  write("features.tsv", "1 0\n0 1\n");
  write("labels.tsv", "0 0\n1 1\n2 0\n");
  const auto [kind, what] = error_of([&] { load_dataset(manifest(3, 2)); });
  EXPECT_EQ(kind, ErrorKind::ShapeMismatch);
  EXPECT_NE(what.find("features.tsv"), std::string::npos) << what;
}

TEST_F(Io, MalformedLinesCarryLineNumbers) {
  write("features.tsv", "1\n2\n3\n");
  write("labels.tsv", "0 0\n1 1\n2 0\n");
  struct Case {
    std::string edges;
    std::string where;
  };
  for (const Case& c :
       {Case{"0 1\n# note\n1 x\n", "edges.txt:3"}, Case{"0 1\n0 7\n", "edges.txt:2"},
        Case{"0 1\n2\n", "edges.txt:2"}, Case{"1 1\n", "edges.txt:1"}}) {
    write("edges.txt", c.edges);
    const auto [kind, what] = error_of([&] { load_dataset(manifest(3, 2)); });
    EXPECT_EQ(kind, ErrorKind::MalformedLine) << c.edges;
    EXPECT_NE(what.find(c.where), std::string::npos) << what;
  }
  write("edges.txt", "0 1 2\n");
  write("labels.tsv", "0 0\n1 5\n2 0\n");
  const auto [kind, what] = error_of([&] { load_dataset(manifest(3, 2)); });
  EXPECT_EQ(kind, ErrorKind::MalformedLine);
  EXPECT_NE(what.find("labels.tsv:2"), std::string::npos) << what;
}

TEST_F(Io, MissingFilesAndBadManifest) {
  EXPECT_EQ(error_of([&] { load_dataset(dir_ / "absent.json"); }).first, ErrorKind::FileNotFound);
  write("manifest.json", "{ not json");
  EXPECT_EQ(error_of([&] { load_dataset(dir_ / "manifest.json"); }).first,
            ErrorKind::MalformedLine);
  write("manifest.json", R"({"name": "x"})");
  EXPECT_EQ(error_of([&] { load_dataset(dir_ / "manifest.json"); }).first,
            ErrorKind::MalformedLine);
  write("features.tsv", "1\n2\n");
  write("labels.tsv", "0 0\n1 1\n");
  EXPECT_EQ(error_of([&] { load_dataset(manifest(2, 2)); }).first, ErrorKind::FileNotFound);
}

TEST_F(Io, SaveLoadRoundTrip) {
  SyntheticOptions o;
  o.seed = 4;
  const Dataset d = generate_synthetic(o);
  const fs::path m = save_dataset(d, dir_ / "synthetic");
  EXPECT_EQ(load_dataset(m), d);

  std::mt19937_64 rng(9);
  auto hg = hgtest::random_hypergraph(rng, 9, 5, true, true);
  Dataset weighted{
      "weighted", hg, hgtest::random_matrix(rng, 9, 3), {0, 1, 2, 0, 1, 2, 0, 1, 2}, 3};
  EXPECT_EQ(load_dataset(save_dataset(weighted, dir_ / "weighted")), weighted);
}

TEST(Checkpoint, RoundTrip) {
  hgtest::TinyFixture fx;
  Model<double> a(fx.cfg);
  auto cfg = fx.cfg;
  cfg.seed += 1;
  Model<double> b(cfg);
  std::stringstream buf;
  save_checkpoint(a.params(), buf);
  load_checkpoint(b.params(), buf);
  for (const auto& [name, t] : a.params()) {
    const auto& u = b.params().at(name);
    EXPECT_TRUE(std::equal(t.values().begin(), t.values().end(), u.values().begin())) << name;
  }
}

TEST(Checkpoint, RejectsMismatches) {
  hgtest::TinyFixture fx;
  Model<double> a(fx.cfg);
  std::stringstream buf;
  save_checkpoint(a.params(), buf);
  auto cfg = fx.cfg;
  cfg.d_h = 6;
  Model<double> wider(cfg);
  EXPECT_EQ(error_of([&] { load_checkpoint(wider.params(), buf); }).first,
            ErrorKind::ShapeMismatch);
  std::stringstream unknown("nope 1 1\n0.5\n");
  EXPECT_EQ(error_of([&] { load_checkpoint(a.params(), unknown); }).first,
            ErrorKind::MalformedLine);
  std::stringstream truncated("out.weight 8 3\n0.5 0.25\n");
  EXPECT_EQ(error_of([&] { load_checkpoint(a.params(), truncated); }).first,
            ErrorKind::MalformedLine);
}

TEST(ValueList, Progression) {
  const auto v = parse_value_list("0,0.1,...,1.0");
  ASSERT_EQ(v.size(), 11u);
  for (std::size_t i = 0; i < v.size(); ++i) EXPECT_NEAR(v[i], i / 10.0, 1e-12);
  EXPECT_EQ(v[3], 0.3);
  EXPECT_EQ(parse_value_list("1, 2,4"), (std::vector<double>{1, 2, 4}));
  EXPECT_EQ(parse_value_list("1,2,...,4"), (std::vector<double>{1, 2, 3, 4}));
  EXPECT_EQ(parse_value_list("8,4,...,0"), (std::vector<double>{8, 4, 0}));
  for (const char* bad : {"", "1,,2", "a", "1,...,3", "0,1,...", "0,1,...,-2", "1,1,...,3"})
    EXPECT_EQ(error_of([&] { parse_value_list(bad); }).first, ErrorKind::InvalidParameters) << bad;
}

TEST_F(Cli, ExitCodes) {
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"frobnicate"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"cv", "--synthetic", "--gamma", "1.5"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"cv"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"sweep", "--synthetic", "--param", "alpha", "--values", "1"}).code,
            kExitUsage);
  EXPECT_EQ(run_cli({"ingest-check", "--manifest", (dir_ / "absent.json").string()}).code,
            kExitData);
  EXPECT_EQ(run_cli({"train", "--synthetic", "--epochs", "3", "--lr", "1e308"}).code, kExitNumeric);
}

TEST_F(Cli, SynthThenIngestCheck) {
  const auto synth = run_cli({"synth", "--out-dir", (dir_ / "data").string(), "--seed", "2"});
  ASSERT_EQ(synth.code, kExitOk) << synth.err;
  const auto check =
      run_cli({"ingest-check", "--manifest", (dir_ / "data" / "manifest.json").string()});
  ASSERT_EQ(check.code, kExitOk) << check.err;
  EXPECT_NE(check.out.find("nodes,60\n"), std::string::npos);
  EXPECT_NE(check.out.find("edges,66\n"), std::string::npos);
  EXPECT_NE(check.out.find("classes,3\n"), std::string::npos);
  EXPECT_NE(check.out.find("# effective configuration:"), std::string::npos);
}

TEST_F(Cli, TrainWritesCheckpoint) {
  const fs::path ckpt = dir_ / "model.txt";
  const auto r = run_cli({"train", "--synthetic", "--epochs", "5", "--d-h", "8", "--heads", "1",
                          "--checkpoint", ckpt.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("test_accuracy,"), std::string::npos);
  EXPECT_TRUE(fs::exists(ckpt));
}

TEST_F(Cli, CrossValidationReport) {
  const fs::path json = dir_ / "report.json";
  const auto r = run_cli({"cv", "--synthetic", "--epochs", "3", "--d-h", "8", "--heads", "1",
                          "--folds", "4", "--json", json.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(r.out, "fold"), 1u);
  EXPECT_EQ(count_lines(r.out, "mean,"), 1u);
  EXPECT_EQ(count_lines(r.out, "std,"), 1u);
  EXPECT_EQ(count_lines(r.out), 4u + 3u);
  auto j = nlohmann::json::parse(std::ifstream(json));
  EXPECT_EQ(j["folds"].size(), 4u);
}

TEST_F(Cli, GammaSweepHasElevenRows) {
  const fs::path csv = dir_ / "sweep.csv";
  const auto r =
      run_cli({"sweep", "--synthetic", "--param", "gamma", "--values", "0,0.1,...,1.0", "--epochs",
               "2", "--d-h", "8", "--heads", "1", "--folds", "2", "--out", csv.string()});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  std::ifstream f(csv);
  std::stringstream text;
  text << f.rdbuf();
  EXPECT_EQ(count_lines(text.str(), "value"), 1u);
  EXPECT_EQ(count_lines(text.str()), 12u);
}

TEST_F(Cli, LaplacianCsv) {
  const auto r = run_cli({"laplacian", "--synthetic"});
  ASSERT_EQ(r.code, kExitOk) << r.err;
  EXPECT_EQ(count_lines(r.out), 60u);
}

TEST(CliEquivalence, Passes) {
  const auto r = run_cli({"verify-equivalence", "--trials", "50"});
  EXPECT_EQ(r.code, kExitOk) << r.err;
  EXPECT_NE(r.out.find("hypersage_max_deviation,"), std::string::npos);
}
