#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "json.hpp"
#include "nicon/binary_io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path& scratch() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "nicon_cli_test";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

int run(const std::string& args) {
  const std::string cmd = std::string(NICON_CLI_PATH) + " " + args + " > " + (scratch() / "last.log").string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string out(const std::string& name) { return (scratch() / name).string(); }

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("generate is reproducible and writes a manifest") {
  REQUIRE(run("generate --n 16 --kind poisson --count 6 --seed 3 --out " + out("g1")) == 0);
  REQUIRE(run("generate --n 16 --kind poisson --count 6 --seed 3 --out " + out("g2")) == 0);
  CHECK(nicon::hash_file(out("g1/dataset.bin")) == nicon::hash_file(out("g2/dataset.bin")));
  CHECK(fs::file_size(out("g1/dataset.bin")) == 40 + 6 * (18 + 3 * 256) * 8);
  const auto m = nlohmann::json::parse(slurp(out("g1/manifest.json")));
  CHECK(m["command"] == "generate");
  CHECK(m["seed"] == 3);
  CHECK(m.contains("tool_version"));
  CHECK(m["config"]["count"] == 6);
  REQUIRE(run("generate --n 16 --kind poisson --count 6 --seed 4 --out " + out("g3")) == 0);
  CHECK(nicon::hash_file(out("g1/dataset.bin")) != nicon::hash_file(out("g3/dataset.bin")));
}

TEST_CASE("exit codes") {
  CHECK(run("") == 2);
  CHECK(run("frobnicate") == 2);
  CHECK(run("generate --n 2 --count 1 --out " + out("bad")) == 2);
  CHECK(run("generate --n 16 --kind wave --count 1 --out " + out("bad")) == 2);
  CHECK(run("train --data " + out("missing.bin") + " --epochs 1 --out " + out("bad")) == 3);
  REQUIRE(run("generate --n 16 --count 2 --seed 1 --out " + out("small")) == 0);
  CHECK(run("train --data " + out("small/dataset.bin") + " --epochs 0 --out " + out("bad")) == 2);
  CHECK(run("train --data " + out("small/dataset.bin") + " --method fe_rect --n 32 --epochs 1 --out " + out("bad")) == 2);
  CHECK(run("train --data " + out("small/dataset.bin") + " --method fem --epochs 1 --out " + out("bad")) == 2);
  CHECK(run("study --study nonsense --out " + out("bad")) == 2);
  {
    std::ofstream(out("empty.csv")) << "run_id,N,method,formulation,split,mean_rel_h1,best_loss,epoch_best\n";
  }
  CHECK(run("plotdata --metrics " + out("empty.csv") + " --out " + out("bad")) == 3);
  {
    std::ofstream(out("junk.bin")) << "not a dataset";
  }
  CHECK(run("evaluate --data " + out("junk.bin") + " --baseline zero --out " + out("bad")) == 3);
}

TEST_CASE("train and evaluate round trip, bit-identical across runs") {
  REQUIRE(run("generate --n 16 --count 3 --seed 8 --out " + out("d")) == 0);
  const std::string common = "train --data " + out("d/dataset.bin") +
                             " --method fe_rect --epochs 3 --batch 2 --c0 2 --levels 2 --lr 1e-3 --seed 2 --ref-n 31";
  REQUIRE(run(common + " --out " + out("t1")) == 0);
  REQUIRE(run(common + " --out " + out("t2")) == 0);
  for (const char* f : {"model.ckpt", "history.csv", "metrics.csv"})
    CHECK(nicon::hash_file(out("t1/") + f) == nicon::hash_file(out("t2/") + f));
  CHECK(slurp(out("t1/metrics.csv")).starts_with("run_id,N,method,formulation,split,mean_rel_h1,best_loss,epoch_best"));

  REQUIRE(run("evaluate --data " + out("d/dataset.bin") + " --checkpoint " + out("t1/model.ckpt") +
              " --method fe_rect --ref-n 31 --out " + out("e1")) == 0);
  CHECK(fs::exists(out("e1/samples.csv")));
  REQUIRE(run("evaluate --data " + out("d/dataset.bin") + " --baseline zero --method fe_rect --ref-n 31 --out " +
              out("z")) == 0);
  const std::string zm = slurp(out("z/metrics.csv"));
  CHECK(zm.find(",1,") != std::string::npos);
}

TEST_CASE("decomposed training writes both subproblem models") {
  REQUIRE(run("generate --n 16 --count 2 --seed 9 --out " + out("dd")) == 0);
  REQUIRE(run("train --data " + out("dd/dataset.bin") +
              " --method fd5 --formulation decomposed --epochs 1 --sub-factor 2 --c0 2 --levels 2 --ref-n 31 --out " +
              out("dt")) == 0);
  for (const char* f : {"sub1.ckpt", "sub2.ckpt", "history_sub1.csv", "history_sub2.csv", "metrics.csv"})
    CHECK(fs::exists(out("dt/") + f));
  // 2 epochs per subproblem model, plus the final entry.
  int lines = 0;
  std::ifstream h(out("dt/history_sub1.csv"));
  for (std::string line; std::getline(h, line);) ++lines;
  CHECK(lines == 1 + 3);
}

TEST_CASE("config file supplies option values") {
  {
    std::ofstream(out("cfg.json")) << R"({"n": 16, "kind": "helmholtz", "count": 2, "seed": 11, "kappa": 1.0})";
  }
  REQUIRE(run("generate --config " + out("cfg.json") + " --out " + out("c1")) == 0);
  REQUIRE(run("generate --n 16 --kind helmholtz --count 2 --seed 11 --kappa 1.0 --out " + out("c2")) == 0);
  CHECK(nicon::hash_file(out("c1/dataset.bin")) == nicon::hash_file(out("c2/dataset.bin")));
  // Command-line values win over the file.
  REQUIRE(run("generate --config " + out("cfg.json") + " --count 3 --out " + out("c3")) == 0);
  CHECK(fs::file_size(out("c3/dataset.bin")) == 40 + 3 * (18 + 3 * 256) * 8);
}

TEST_CASE("memory table study and plot data") {
  REQUIRE(run("study --study memory_table --out " + out("mem")) == 0);
  const std::string csv = slurp(out("mem/memory.csv"));
  CHECK(csv.starts_with("N,fem_inverse_mb,model_param_mb"));
  for (const char* v : {"16,0.25,", "32,4,", "64,64,", "128,1024,"}) CHECK(csv.find(v) != std::string::npos);
  {
    std::ofstream(out("m.csv")) << "run_id,N,method,formulation,split,mean_rel_h1,best_loss,epoch_best\n"
                                << "a/fe_rect/original,16,fe_rect,original,train,0.5,1,0\n"
                                << "a/fe_rect/original,32,fe_rect,original,train,0.25,1,0\n";
  }
  REQUIRE(run("plotdata --metrics " + out("m.csv") + " --out " + out("plots")) == 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(out("plots")))
    if (e.path().extension() == ".dat") ++files;
  CHECK(files == 1);
}

}  // TEST_SUITE
