#define DOCTEST_CONFIG_IMPLEMENT
#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "tsdeconv/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

std::string g_cli;
fs::path g_work;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout + stderr
};

RunResult run_cli(const std::string& args) {
  const fs::path out_file = g_work / "cmd_output.txt";
  const std::string cmd = g_cli + " " + args + " > " + out_file.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  RunResult result;
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  std::ifstream in(out_file);
  std::ostringstream buf;
  buf << in.rdbuf();
  result.output = buf.str();
  return result;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Tiny two-class dataset, cheap enough for end-to-end CLI runs.
void write_mini_dataset(const fs::path& dir) {
  fs::create_directories(dir);
  std::ofstream manifest(dir / "labels.tsv");
  for (int i = 0; i < 12; ++i) {
    const int label = i % 2 == 0 ? 1 : 2;
    const std::string name = "s" + std::to_string(i) + ".txt";
    std::ofstream f(dir / name);
    const int len = 14 + (i % 3);
    for (int t = 0; t < len; ++t) {
      const double freq = label == 1 ? 0.4 : 1.1;
      f << std::sin(freq * t + i * 0.1) << ' ' << std::cos(freq * t) << '\n';
    }
    manifest << name << '\t' << label << '\t' << (i < 8 ? "train" : "test") << '\n';
  }
}

}  // namespace

TEST_CASE("prep reports shape and writes a loadable split") {
  const fs::path data = g_work / "mini";
  write_mini_dataset(data);
  const auto r = run_cli("prep " + data.string() + " --name mini --out " +
                         (g_work / "mini.split").string());
  CHECK(r.exit_code == 0);
  CHECK(r.output.find("channels 2") != std::string::npos);
  CHECK(r.output.find("train 8") != std::string::npos);
  const tsdeconv::Dataset ds = tsdeconv::load_split(g_work / "mini.split");
  CHECK(ds.padded_length == 16);
}

TEST_CASE("prep on a missing directory fails with a nonzero exit") {
  const auto r = run_cli("prep /no/such/dir --out " + (g_work / "x.split").string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("train-ae is deterministic and epochs=0 writes the initialization") {
  const std::string split = (g_work / "mini.split").string();
  const std::string common = "train-ae " + split + " --filters1 2 --filters2 2 --epochs 2 --seed 9 --out ";
  const auto a = run_cli(common + (g_work / "m_a.bin").string());
  const auto b = run_cli(common + (g_work / "m_b.bin").string());
  REQUIRE(a.exit_code == 0);
  REQUIRE(b.exit_code == 0);
  CHECK(slurp(g_work / "m_a.bin") == slurp(g_work / "m_b.bin"));

  const auto z = run_cli("train-ae " + split + " --filters1 2 --filters2 2 --epochs 0 --seed 9 --out " +
                         (g_work / "m_init.bin").string());
  REQUIRE(z.exit_code == 0);
  const tsdeconv::ModelFile init = tsdeconv::load_model(g_work / "m_init.bin");
  const tsdeconv::ModelParams fresh = tsdeconv::init_params(init.config, 9);
  CHECK((init.params.w1.array() == fresh.w1.array()).all());
  const tsdeconv::ModelFile trained = tsdeconv::load_model(g_work / "m_a.bin");
  CHECK_FALSE((trained.params.w1.array() == fresh.w1.array()).all());
}

TEST_CASE("train-ae writes a per-epoch loss log") {
  const std::string split = (g_work / "mini.split").string();
  const auto r = run_cli("train-ae " + split + " --filters1 2 --filters2 2 --epochs 3 --seed 9 --out " +
                         (g_work / "m_log.bin").string() + " --loss-log " +
                         (g_work / "loss.tsv").string());
  REQUIRE(r.exit_code == 0);
  const std::string log = slurp(g_work / "loss.tsv");
  CHECK(log.rfind("epoch\tmean_loss\n", 0) == 0);
  CHECK(std::count(log.begin(), log.end(), '\n') == 4);
}

TEST_CASE("featurize vector mode reports the code dimension") {
  const auto r = run_cli("featurize " + (g_work / "mini.split").string() + " " +
                         (g_work / "m_a.bin").string() + " --mode vector --out " +
                         (g_work / "vec.feat").string());
  REQUIRE(r.exit_code == 0);
  // filters2=2, channels=2, code length = ceil(16/2) = 8 -> dim 32.
  CHECK(r.output.find("dim 32") != std::string::npos);
}

TEST_CASE("featurize rejects unknown modes and incomplete sax arguments") {
  const std::string base = "featurize " + (g_work / "mini.split").string() + " " +
                           (g_work / "m_a.bin").string();
  CHECK(run_cli(base + " --mode nonsense --out " + (g_work / "x.feat").string()).exit_code != 0);
  CHECK(run_cli(base + " --mode sax --out " + (g_work / "x.feat").string()).exit_code != 0);
}

TEST_CASE("featurize sax search emits a CV table with one row per grid point") {
  const auto r = run_cli("featurize " + (g_work / "mini.split").string() + " " +
                         (g_work / "m_a.bin").string() +
                         " --mode sax --search --grid-n 6,8 --grid-w 2 --grid-a 3,4"
                         " --grid-C 0.1,1 --cv-table " +
                         (g_work / "cv.tsv").string() + " --out " + (g_work / "sax.feat").string());
  REQUIRE(r.exit_code == 0);
  const std::string table = slurp(g_work / "cv.tsv");
  CHECK(table.rfind("n\tw\ta\tC\tcv_error\n", 0) == 0);
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 2 * 1 * 2 * 2);
  CHECK(r.output.find("grid search best") != std::string::npos);
}

TEST_CASE("featurize runs are byte-identical given the same inputs") {
  const std::string cmd = "featurize " + (g_work / "mini.split").string() + " " +
                          (g_work / "m_a.bin").string() + " --mode sax --sax 6,2,3 --out ";
  REQUIRE(run_cli(cmd + (g_work / "sax_a.feat").string()).exit_code == 0);
  REQUIRE(run_cli(cmd + (g_work / "sax_b.feat").string()).exit_code == 0);
  CHECK(slurp(g_work / "sax_a.feat") == slurp(g_work / "sax_b.feat"));
}

TEST_CASE("classify writes a report in the expected layout") {
  const auto r = run_cli("classify " + (g_work / "sax_a.feat").string() + " --out " +
                         (g_work / "report.tsv").string());
  REQUIRE(r.exit_code == 0);
  const std::string report = slurp(g_work / "report.tsv");
  CHECK(report.rfind("dataset\tmode\tn\tw\ta\tC\tcv_train_error\ttest_error\n", 0) == 0);
  CHECK(report.find("\tsax\t6\t2\t3\t") != std::string::npos);
}

TEST_CASE("classify on a perfect-feature bundle reports zero test error") {
  tsdeconv::FeatureBundle b;
  b.dataset_name = "perfect";
  b.mode = tsdeconv::FeatureMode::vector;
  b.train.dim = b.test.dim = 1;
  for (int i = 0; i < 10; ++i) {
    tsdeconv::SparseRow row;
    row.push(0, i % 2 == 0 ? 1.0 : -1.0);
    (i < 6 ? b.train : b.test).add(row, i % 2 == 0 ? +1 : -1);
  }
  tsdeconv::save_features(b, g_work / "perfect.feat");
  const auto r = run_cli("classify " + (g_work / "perfect.feat").string() + " --out " +
                         (g_work / "perfect.tsv").string());
  REQUIRE(r.exit_code == 0);
  CHECK(r.output.find("test_error=0") != std::string::npos);
}

TEST_CASE("classify rejects a file that is not a feature bundle") {
  const auto r = run_cli("classify " + (g_work / "mini.split").string() + " --out " +
                         (g_work / "bad.tsv").string());
  CHECK(r.exit_code != 0);
  CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("graph exports per-sample per-map files plus the stats tables") {
  const fs::path out_dir = g_work / "graphs";
  const auto r = run_cli("graph " + (g_work / "mini.split").string() + " " +
                         (g_work / "m_a.bin").string() + " --Q 2 --out-dir " + out_dir.string());
  REQUIRE(r.exit_code == 0);
  // 12 samples x 2 maps, both formats.
  std::size_t dot = 0, graphml = 0;
  for (const auto& entry : fs::directory_iterator(out_dir)) {
    if (entry.path().extension() == ".dot") ++dot;
    if (entry.path().extension() == ".graphml") ++graphml;
  }
  CHECK(dot == 24);
  CHECK(graphml == 24);
  CHECK(fs::exists(out_dir / "stats.tsv"));
  CHECK(fs::exists(out_dir / "per_graph_stats.tsv"));

  // Q=2 graphs have at most 4 arcs.
  const std::string one = slurp(out_dir / "train_0_m0.dot");
  CHECK(std::count(one.begin(), one.end(), '>') <= 4);

  const std::string stats = slurp(out_dir / "stats.tsv");
  CHECK(stats.find("mini normal") != std::string::npos);
  CHECK(stats.find("mini abnormal") != std::string::npos);
}

TEST_CASE("graph with an unwritable output directory fails") {
  const auto r = run_cli("graph " + (g_work / "mini.split").string() + " " +
                         (g_work / "m_a.bin").string() + " --Q 2 --out-dir /proc/nope");
  CHECK(r.exit_code != 0);
}

TEST_CASE("gen-data writes a loadable native dataset") {
  const auto r = run_cli("gen-data --profile ecg --out " + (g_work / "gen_ecg").string() +
                         " --seed 3");
  REQUIRE(r.exit_code == 0);
  CHECK(fs::exists(g_work / "gen_ecg" / "labels.tsv"));
  const tsdeconv::Dataset ds = tsdeconv::load_dataset(g_work / "gen_ecg");
  CHECK(ds.train.size() == 100);
  CHECK(ds.test.size() == 100);
  CHECK(run_cli("gen-data --profile venus --out " + (g_work / "gen_bad").string()).exit_code != 0);
}

TEST_CASE("TSDECONV_OUT_DIR reroutes relative output paths") {
  const fs::path env_dir = g_work / "envout";
  fs::create_directories(env_dir);
  const std::string cmd = "TSDECONV_OUT_DIR=" + env_dir.string() + " " + g_cli + " prep " +
                          (g_work / "mini").string() + " --name mini --out env.split > " +
                          (g_work / "cmd_output.txt").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  CHECK(WEXITSTATUS(status) == 0);
  CHECK(fs::exists(env_dir / "env.split"));
}

int main(int argc, char** argv) {
  doctest::Context context;
  // The CLI binary path comes last, injected by CMake.
  if (argc > 1 && argv[argc - 1][0] != '-') {
    g_cli = argv[argc - 1];
    --argc;
  }
  if (g_cli.empty()) {
    std::fprintf(stderr, "usage: test_cli [doctest options] <path-to-cli>\n");
    return 2;
  }
  g_work = fs::temp_directory_path() / "tsdeconv_cli_test";
  fs::remove_all(g_work);
  fs::create_directories(g_work);
  context.applyCommandLine(argc, argv);
  return context.run();
}
