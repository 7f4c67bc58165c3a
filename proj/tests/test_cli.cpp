#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "commands.hpp"
#include "doctest.h"
#include "nnssgd/model_io.hpp"
#include "nnssgd/ratings_io.hpp"
#include "nnssgd/synthetic.hpp"

using namespace nnssgd;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = 0;
  std::string out;
  std::string err;
};

Result run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "nnssgd");
  std::ostringstream out, err;
  const int code = cli::run(args, out, err);
  return {code, out.str(), err.str()};
}

// Fresh scratch directory, removed on scope exit.
struct Scratch {
  fs::path dir;

  explicit Scratch(const std::string& name) : dir(fs::temp_directory_path() / ("nnssgd_cli_" + name)) {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Scratch() { fs::remove_all(dir); }

  std::string operator/(const std::string& file) const { return (dir / file).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

void spit(const std::string& path, const std::string& text) {
  std::ofstream(path, std::ios::binary) << text;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::string fixed6(double value) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6f\n", value);
  return buffer;
}

SparseObservations load_with(const std::string& path, IdMap& ids) {
  std::ifstream in(path);
  return load_ratings(in, {}, ids);
}

const std::string kFixtures = NNSSGD_FIXTURE_DIR;

}  // namespace

TEST_SUITE("cli train") {
  TEST_CASE("zero super-iterations writes one metrics row and the warm start") {
    Scratch s("s0");
    REQUIRE(run_cli({"synth", "--m", "30", "--n", "20", "--rank", "2", "--density", "0.5", "--noise", "0.1", "--seed",
                 "3", "--out-prefix", s / "p"})
                .code == 0);
    const auto r = run_cli({"train", "--train", s / "p.train", "--rank", "3", "--super-iters", "0", "--model-out",
                        s / "m.bin", "--metrics-out", s / "m.csv"});
    REQUIRE(r.code == 0);
    const auto rows = lines_of(slurp(s / "m.csv"));
    REQUIRE(rows.size() == 2);
    CHECK(rows[0] == "super_iter,iter,wall_seconds,objective,train_rmse,test_rmse");
    CHECK(rows[1].rfind("0,0,", 0) == 0);
    CHECK(rows[1].back() == ',');

    IdMap ids;
    const auto train = load_with(s / "p.train", ids);
    CompletionConfig config;
    config.rank = 3;
    config.super_iterations = 0;
    const auto expected = fit(train, nullptr, config);
    const auto model = load_model_file(s / "m.bin");
    CHECK(model.factors.U == expected.factors.U);
    CHECK(model.factors.sigma == expected.factors.sigma);
    CHECK(fs::exists(s / "m.bin.idmap"));
    CHECK(fs::exists(s / "m.bin.manifest.json"));
  }

  TEST_CASE("same seed and flags give identical bytes") {
    Scratch s("det");
    REQUIRE(run_cli({"synth", "--m", "40", "--n", "30", "--rank", "3", "--density", "0.4", "--seed", "5", "--out-prefix",
                 s / "p"})
                .code == 0);
    const std::vector<std::string> args = {"train", "--train", s / "p.train", "--test", s / "p.test", "--rank", "4",
                                           "--super-iters", "4", "--seed", "9", "--threads", "1", "--no-timing",
                                           "--model-out", s / "m.bin", "--metrics-out", s / "m.csv"};
    REQUIRE(run_cli(args).code == 0);
    const std::string model = slurp(s / "m.bin"), metrics = slurp(s / "m.csv");
    const std::string manifest = slurp(s / "m.bin.manifest.json");
    REQUIRE(run_cli(args).code == 0);
    CHECK(slurp(s / "m.bin") == model);
    CHECK(slurp(s / "m.csv") == metrics);
    CHECK(slurp(s / "m.bin.manifest.json") == manifest);
    CHECK(lines_of(metrics).size() == 6);
  }

  TEST_CASE("checked-in fixture reaches the pinned test RMSE") {
    Scratch s("fixture");
    const auto r = run_cli({"train", "--train", kFixtures + "/synth7.train", "--test", kFixtures + "/synth7.test",
                        "--rank", "3", "--super-iters", "200", "--seed", "1", "--model-out", s / "m.bin"});
    REQUIRE(r.code == 0);
    const auto e = run_cli({"eval", "--model", s / "m.bin", "--test", kFixtures + "/synth7.test"});
    REQUIRE(e.code == 0);
    // First verified run measured 0.385934.
    CHECK(std::stod(e.out) < 0.39);
  }

  TEST_CASE("exit codes") {
    Scratch s("codes");
    spit(s / "dup.csv", "1,1,4\n1,1,5\n");
    spit(s / "bad.csv", "1,1,4\n1,x\n");
    spit(s / "ok.csv", "1,1,4\n1,2,3\n2,1,1\n2,2,5\n");
    CHECK(run_cli({"train"}).code == 2);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--rank", "notanumber"}).code == 2);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--probe", "sideways"}).code == 2);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--rank", "1", "--k", "5"}).code == 2);
    CHECK(run_cli({"train", "--train", s / "missing.csv"}).code == 3);
    CHECK(run_cli({"train", "--train", s / "dup.csv"}).code == 3);
    const auto parse = run_cli({"train", "--train", s / "bad.csv"});
    CHECK(parse.code == 3);
    CHECK(parse.err.find("line 2") != std::string::npos);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--rank", "1", "--lenient"}).code == 0);
    spit(s / "junk.bin", "not a model");
    CHECK(run_cli({"eval", "--model", s / "junk.bin", "--test", s / "ok.csv"}).code == 3);
  }

  TEST_CASE("failed runs leave no output files") {
    Scratch s("partial");
    spit(s / "ok.csv", "1,1,4\n1,2,3\n2,1,1\n2,2,5\n");
    spit(s / "bad.csv", "1,1,4\noops\n");
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--test", s / "bad.csv", "--rank", "1", "--model-out", s / "m.bin",
               "--metrics-out", s / "m.csv"})
              .code == 3);
    CHECK_FALSE(fs::exists(s / "m.bin"));
    CHECK_FALSE(fs::exists(s / "m.csv"));
    CHECK_FALSE(fs::exists(s / "m.bin.tmp"));
  }

  TEST_CASE("thread count falls back to the environment") {
    Scratch s("threads");
    spit(s / "ok.csv", "1,1,4\n1,2,3\n2,1,1\n2,2,5\n3,1,2\n");
    ::setenv("NNSSGD_THREADS", "zero", 1);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--rank", "1"}).code == 2);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--rank", "1", "--threads", "1"}).code == 0);
    ::setenv("NNSSGD_THREADS", "2", 1);
    CHECK(run_cli({"train", "--train", s / "ok.csv", "--rank", "1", "--metrics-out", s / "m.csv"}).code == 0);
    CHECK(slurp(s / "m.csv.manifest.json").find("\"threads\": 2") != std::string::npos);
    ::unsetenv("NNSSGD_THREADS");
  }
}

TEST_SUITE("cli predict and eval") {
  TEST_CASE("rank-one toy model by hand") {
    Scratch s("toy");
    DenseMatrix u(2, 1), v(2, 1);
    u << 0.6, 0.8;
    v << 0.0, 1.0;
    CompletionModel model{CompactSVD{u, DenseVector::Constant(1, 2.5), v}, Centering::zeros(2, 2)};
    model.means.row_means << 1.0, 3.0;
    model.means.col_means << 2.0, 4.0;
    model.means.global_mean = 10.0;
    save_model_file(model, s / "toy.bin");
    spit(s / "pairs", "2 2\n1 1\n2 9\n");
    const auto r = run_cli({"predict", "--model", s / "toy.bin", "--pairs", s / "pairs"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(r.out);
    REQUIRE(lines.size() == 4);
    CHECK(lines[0] == "2 2 5.5");  // 2.5 * 0.8 * 1 + (3 + 4) / 2
    CHECK(lines[1] == "1 1 1.5");
    CHECK(lines[2] == "2 9 6.5");  // unknown column: (3 + 10) / 2
    CHECK(lines[3] == "# unknown ids: 1");
  }

  TEST_CASE("--all covers the grid and matches the library to 10 digits") {
    Scratch s("all");
    REQUIRE(run_cli({"synth", "--m", "10", "--n", "8", "--rank", "2", "--density", "1", "--noise", "0.2", "--seed",
                 "4", "--out-prefix", s / "p"})
                .code == 0);
    REQUIRE(run_cli({"train", "--train", s / "p.train", "--rank", "2", "--super-iters", "3", "--model-out",
                 s / "m.bin"})
                .code == 0);
    const auto r = run_cli({"predict", "--model", s / "m.bin", "--all", "--out", s / "all.txt"});
    REQUIRE(r.code == 0);
    const auto lines = lines_of(slurp(s / "all.txt"));
    CHECK(lines.size() == 80);

    const auto model = load_model_file(s / "m.bin");
    std::ifstream idmap(s / "m.bin.idmap");
    const IdMap ids = IdMap::read(idmap);
    for (const auto& line : lines) {
      std::istringstream fields(line);
      std::string user, item, value;
      fields >> user >> item >> value;
      char expected[64];
      std::snprintf(expected, sizeof expected, "%.10g", predict(model, *ids.find_row(user), *ids.find_col(item)));
      CHECK(value == expected);
    }
  }

  TEST_CASE("predict needs exactly one source") {
    Scratch s("source");
    save_model_file(CompletionModel{CompactSVD::zero(2, 2), Centering::zeros(2, 2)}, s / "z.bin");
    CHECK(run_cli({"predict", "--model", s / "z.bin"}).code == 2);
    spit(s / "pairs", "1 1\n");
    CHECK(run_cli({"predict", "--model", s / "z.bin", "--all", "--pairs", s / "pairs"}).code == 2);
  }

  TEST_CASE("eval agrees with the library") {
    Scratch s("eval");
    REQUIRE(run_cli({"synth", "--m", "30", "--n", "25", "--rank", "2", "--density", "0.5", "--noise", "0.1", "--seed",
                 "8", "--out-prefix", s / "p"})
                .code == 0);
    REQUIRE(run_cli({"train", "--train", s / "p.train", "--test", s / "p.test", "--rank", "2", "--super-iters", "2",
                 "--model-out", s / "m.bin"})
                .code == 0);
    const auto r = run_cli({"eval", "--model", s / "m.bin", "--test", s / "p.test"});
    REQUIRE(r.code == 0);
    IdMap ids;
    std::ifstream idmap(s / "m.bin.idmap");
    ids = IdMap::read(idmap);
    const auto model = load_model_file(s / "m.bin");
    const auto test = load_with(s / "p.test", ids);
    CHECK(r.out == fixed6(rmse(model, test)));
  }

  TEST_CASE("exact and constant-offset models") {
    Scratch s("exact");
    REQUIRE(run_cli({"synth", "--m", "12", "--n", "10", "--rank", "2", "--density", "0.6", "--seed", "2",
                 "--out-prefix", s / "p"})
                .code == 0);
    CHECK(run_cli({"eval", "--model", s / "p.truth", "--test", s / "p.test"}).out == "0.000000\n");

    CompletionModel offset{CompactSVD::zero(3, 3), Centering::zeros(3, 3)};
    offset.means.row_means.setConstant(0.25);
    offset.means.col_means.setConstant(0.25);
    save_model_file(offset, s / "offset.bin");
    spit(s / "zeros.csv", "1,1,0\n2,3,0\n3,2,0\n");
    CHECK(run_cli({"eval", "--model", s / "offset.bin", "--test", s / "zeros.csv"}).out == "0.250000\n");
  }
}

TEST_SUITE("cli synth and bench") {
  TEST_CASE("full density 4x4 gives 16 lines and identical bytes") {
    Scratch s("synth");
    const std::vector<std::string> a = {"synth", "--m", "4", "--n", "4", "--rank", "1", "--density", "1",
                                        "--noise", "0.3", "--seed", "11", "--out-prefix", s / "a"};
    std::vector<std::string> b = a;
    b.back() = s / "b";
    REQUIRE(run_cli(a).code == 0);
    REQUIRE(run_cli(b).code == 0);
    CHECK(lines_of(slurp(s / "a.train")).size() + lines_of(slurp(s / "a.test")).size() == 16);
    for (const char* ext : {".train", ".test", ".truth"}) CHECK(slurp(s / "a" + ext) == slurp(s / "b" + ext));
  }

  TEST_CASE("written ratings load back to the generated triples") {
    Scratch s("roundtrip");
    REQUIRE(run_cli({"synth", "--m", "20", "--n", "15", "--rank", "2", "--density", "0.3", "--noise", "0.5", "--seed",
                 "6", "--out-prefix", s / "p"})
                .code == 0);
    const auto generated = gen_synthetic(20, 15, 2, 0.3, 0.5, 6);
    IdMap ids;
    const auto loaded = load_with(s / "p.train", ids);
    REQUIRE(loaded.nnz() == generated.train.nnz());
    for (const auto& e : generated.train.entries()) {
      const auto i = ids.find_row(std::to_string(e.row + 1));
      const auto j = ids.find_col(std::to_string(e.col + 1));
      REQUIRE(i.has_value());
      REQUIRE(j.has_value());
      CHECK(loaded.find(*i, *j) == e.value);
    }
  }

  TEST_CASE("bench prints one row per m") {
    const auto one = run_cli({"bench", "--m-list", "600", "--n", "100", "--rank", "3", "--iters", "3"});
    REQUIRE(one.code == 0);
    CHECK(lines_of(one.out).size() == 2);
    const auto two = run_cli({"bench", "--m-list", "200,400", "--n", "50", "--rank", "2", "--iters", "3"});
    REQUIRE(two.code == 0);
    const auto lines = lines_of(two.out);
    REQUIRE(lines.size() == 3);
    CHECK(lines[0] == "m,median_seconds");
    CHECK(lines[2].rfind("400,", 0) == 0);
    CHECK(std::stod(lines[2].substr(4)) > 0.0);
    CHECK(two.err.find("time ratio") != std::string::npos);
  }
}
