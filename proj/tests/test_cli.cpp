#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "lmr_cli_test";

int run(const std::string& args) {
  const std::string cmd =
      std::string(LMR_CLI_PATH) + " " + args + " > " + (kDir / "out.txt").string() + " 2> " +
      (kDir / "err.txt").string();
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

// Artifact contents minus the echoed command line, which names the output
// path and so differs between otherwise identical runs.
std::string artifact_body(const fs::path& p) {
  std::ifstream in(p);
  std::string out, line;
  while (std::getline(in, line))
    if (line.find("\"command\"") == std::string::npos) out += line + "\n";
  return out;
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  std::string line;
  while (std::getline(in, line)) ++n;
  return n;
}

struct DirSetup {
  DirSetup() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};
const DirSetup setup;

const std::string kData = (kDir / "data_rep0.csv").string();

void ensure_data() {
  if (!fs::exists(kData))
    REQUIRE(run("simulate --scenario I --m 6 --n 8 --r 1 --seed 7 --out " +
                (kDir / "data").string()) == 0);
}

}  // namespace

TEST_CASE("simulate is deterministic and repeatable") {
  REQUIRE(run("simulate --scenario I --m 5 --n 4 --r 2 --seed 3 --out " +
              (kDir / "s1").string()) == 0);
  REQUIRE(run("simulate --scenario I --m 5 --n 4 --r 2 --seed 3 --out " +
              (kDir / "s2").string()) == 0);
  CHECK(slurp(kDir / "s1_rep0.csv") == slurp(kDir / "s2_rep0.csv"));
  CHECK(slurp(kDir / "s1_rep1.csv") == slurp(kDir / "s2_rep1.csv"));
  CHECK(slurp(kDir / "s1_rep0.csv") != slurp(kDir / "s1_rep1.csv"));
}

TEST_CASE("scenario II cluster-count guard exits with a validation error") {
  CHECK(run("simulate --scenario II --m 40 --n 5 --r 1 --out " + (kDir / "bad").string()) == 2);
  CHECK(slurp(kDir / "err.txt").find("validation_error") != std::string::npos);
}

TEST_CASE("fit produces byte-identical artifacts for a fixed seed") {
  ensure_data();
  const std::string flags =
      " --k 2 --seed 11 --starts 2 --gibbs-l 150 --burn-in 50 --ml-draws 500 ";
  REQUIRE(run("fit --data " + kData + flags + "--out " + (kDir / "f1.json").string()) == 0);
  REQUIRE(run("fit --data " + kData + flags + "--out " + (kDir / "f2.json").string()) == 0);
  CHECK(artifact_body(kDir / "f1.json") == artifact_body(kDir / "f2.json"));
  // thread count must not change the artifact either
  REQUIRE(run("fit --data " + kData + flags + "--threads 4 --out " +
              (kDir / "f3.json").string()) == 0);
  CHECK(artifact_body(kDir / "f1.json") == artifact_body(kDir / "f3.json"));
}

TEST_CASE("fit rejects malformed input with exit code 2") {
  const fs::path bad = kDir / "bad.csv";
  {
    std::ofstream out(bad);
    out << "cluster_id,y,x_1,w_1\n";
    out << "a,1.0,0.5,1.0\n";
    out << "a,2.0,0.1,2.0\n";  // w_1 varies within cluster a
  }
  CHECK(run("fit --data " + bad.string() + " --k 2 --out " + (kDir / "x.json").string()) == 2);
  const std::string err = slurp(kDir / "err.txt");
  CHECK(err.find("'a'") != std::string::npos);
  CHECK(err.find("w_1") != std::string::npos);

  CHECK(run("fit --data " + (kDir / "missing.csv").string() + " --k 2") == 2);
}

TEST_CASE("predict emits one block per cluster plus the marginal") {
  ensure_data();
  REQUIRE(run("fit --data " + kData +
              " --k 2 --seed 11 --starts 1 --gibbs-l 100 --burn-in 30 --ml-draws 200 --out " +
              (kDir / "fit.json").string()) == 0);
  REQUIRE(run("predict --artifact " + (kDir / "fit.json").string() + " --x 1,0.5 --out " +
              (kDir / "dens.csv").string()) == 0);
  // 6 clusters + MARGINAL, 512 grid points each, plus a header line
  CHECK(count_lines(kDir / "dens.csv") == 512 * 7 + 1);
  const std::string head = slurp(kDir / "dens.csv").substr(0, 21);
  CHECK(head == "cluster_id,t,density\n");
  CHECK(slurp(kDir / "dens.csv").find("MARGINAL") != std::string::npos);
}

TEST_CASE("artifacts round-trip through predict identically") {
  ensure_data();
  REQUIRE(run("predict --artifact " + (kDir / "fit.json").string() +
              " --x 1,-0.25 --grid-min -5 --grid-max 5 --grid-points 64 --out " +
              (kDir / "d1.csv").string()) == 0);
  REQUIRE(run("predict --artifact " + (kDir / "fit.json").string() +
              " --x 1,-0.25 --grid-min -5 --grid-max 5 --grid-points 64 --out " +
              (kDir / "d2.csv").string()) == 0);
  CHECK(slurp(kDir / "d1.csv") == slurp(kDir / "d2.csv"));
}

TEST_CASE("evaluate emits the documented MISE schema") {
  REQUIRE(run("evaluate --scenario I --m 4 --n 8 --r 2 --seed 5 --methods gm,ri "
              "--x-eval 0 --out " +
              (kDir / "mise.csv").string()) == 0);
  // 2 replications x 2 methods x 1 x-value x 4 clusters + header
  CHECK(count_lines(kDir / "mise.csv") == 2 * 2 * 4 + 1);
  const std::string header = "replication,method,scenario,x,cluster_id,n_i,mise\n";
  CHECK(slurp(kDir / "mise.csv").substr(0, header.size()) == header);
}
