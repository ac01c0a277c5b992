#include "phicyc/report.hpp"

#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;
using phicyc::Json;

namespace {

struct Outcome {
  int code = -1;
  std::string out;
  std::string err;
};

fs::path scratch() {
  const fs::path dir = fs::temp_directory_path() / "phicyc_test_cli";
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

Outcome run(const std::string& args) {
  const fs::path out = scratch() / "stdout.txt";
  const fs::path err = scratch() / "stderr.txt";
  const std::string cmd = std::string("\"") + PHICYC_BIN + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Outcome o;
  o.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  o.out = slurp(out);
  o.err = slurp(err);
  return o;
}

std::string config(const std::string& name) { return (fs::path(PHICYC_CONFIG_DIR) / (name + ".cfg")).string(); }

}  // namespace

TEST_CASE("list-examples") {
  const Outcome o = run("list-examples --check");
  CHECK(o.code == 0);
  for (const char* name : {"hartman_arctan", "lv_seasonal", "nth_order_chain", "phi_laplacian_forced",
                           "anisotropic_monotonicity", "tight_box", "zero_free"}) {
    CHECK(o.out.find(name) != std::string::npos);
  }
  CHECK(o.out.find("[invalid") == std::string::npos);
}

TEST_CASE("tight box exits with the boundary verdict") {
  const fs::path out = scratch() / "tight_box";
  const Outcome o = run("run --config \"" + config("tight_box") + "\" --out-dir \"" + out.string() + "\" --fixed-clock");
  CHECK(o.code == 2);
  CHECK(o.out.find("HypothesisViolated [boundary]") != std::string::npos);
  const Json j = Json::parse(slurp(out / "certificate.json"));
  CHECK(j["verdict_stage"] == "boundary");
  CHECK(!j["boundary_evidence"]["witness"].is_null());
}

TEST_CASE("zero-free field exits with the degree verdict") {
  const Outcome o = run("run --config \"" + config("zero_free") + "\" --out-dir \"" + (scratch() / "zf").string() + "\"");
  CHECK(o.code == 2);
  CHECK(o.out.find("[degree]") != std::string::npos);
}

TEST_CASE("evidence exits 0") {
  const Outcome o =
      run("run --config \"" + config("lv_seasonal") + "\" --out-dir \"" + (scratch() / "lv").string() + "\" --threads 1");
  CHECK(o.code == 0);
  CHECK(o.out.find("EvidenceSupportsExistence") != std::string::npos);
}

TEST_CASE("monotonicity mode writes its report") {
  const fs::path out = scratch() / "mono";
  const Outcome o = run("run --config \"" + config("anisotropic_monotonicity") + "\" --out-dir \"" + out.string() + "\"");
  CHECK(o.code == 0);
  const Json j = Json::parse(slurp(out / "monotonicity.json"));
  CHECK(j["monotone"] == false);
  CHECK(j["min_inner"].get<double>() <= -1.0 / 48.0 + 1e-12);
}

TEST_CASE("invalid configs exit 1 with the field path") {
  Json j = Json::parse(slurp(config("phi_laplacian_forced")));
  j["solver"]["tol"] = -1e-8;
  const fs::path bad = scratch() / "negative_tol.cfg";
  std::ofstream(bad) << j.dump(2);
  const Outcome o = run("run --config \"" + bad.string() + "\" --out-dir \"" + (scratch() / "bad").string() + "\"");
  CHECK(o.code == 1);
  CHECK(o.err.find("/solver/tol") != std::string::npos);
  CHECK(o.err.find("must be positive") != std::string::npos);
}

TEST_CASE("usage errors exit 1") {
  CHECK(run("run").code == 1);
  CHECK(run("frobnicate").code == 1);
  CHECK(run("run --config \"" + (scratch() / "nope.cfg").string() + "\"").code == 1);
  CHECK(run("--help").code == 0);
}
