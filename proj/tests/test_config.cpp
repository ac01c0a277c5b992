#include "phicyc/config.hpp"
#include "phicyc/report.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <string>

using namespace phicyc;
namespace fs = std::filesystem;

namespace {

Json minimal() {
  return Json::parse(R"js({
    "name": "t",
    "mode": "cyclic_scale_last",
    "system": {"builder": "generic", "n": 2, "m": 1, "T": 1.0, "g": ["y"], "h": "-x1 + cos(2*pi*t)"},
    "box": {"blocks": [{"radius": 1.0}, {"radius": 1.0}]}
  })js");
}

std::string config_error(const Json& j) {
  try {
    parse_config(j);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::Config);
    return e.what();
  }
  FAIL("config accepted");
  return {};
}

fs::path scratch_dir() {
  const fs::path dir = fs::temp_directory_path() / "phicyc_test_config";
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("bundled configs load") {
  const auto entries = list_examples(PHICYC_CONFIG_DIR);
  REQUIRE(entries.size() >= 7);
  for (std::size_t i = 1; i < entries.size(); ++i) CHECK(entries[i - 1].name < entries[i].name);
  for (const auto& e : entries) {
    CAPTURE(e.name);
    const RunConfig rc = load_config(e.path);
    CHECK(rc.name == e.name);
    CHECK(!rc.description.empty());
  }
}

TEST_CASE("minimal generic config") {
  const RunConfig rc = parse_config(minimal());
  REQUIRE(rc.system.has_value());
  CHECK(rc.system->n == 2);
  CHECK(rc.mode == RunMode::CyclicScaleLast);
  Vec x(2);
  x << 0.5, 0.25;
  const Vec f = rc.system->eval_field(0.0, x, 1.0);
  CHECK(f(0) == doctest::Approx(0.25));
  CHECK(f(1) == doctest::Approx(0.5));
  CHECK(rc.certify.sweep.solver.method == SolverMethod::Auto);
}

TEST_CASE("validation errors name the field") {
  Json j = minimal();
  j["solver"] = {{"tol", -1.0}};
  CHECK(config_error(j) == "Config: config error at /solver/tol: must be positive");

  j = minimal();
  j["solver"] = {{"method", "newton"}};
  CHECK(config_error(j).find("/solver/method") != std::string::npos);

  j = minimal();
  j["extra"] = 1;
  CHECK(config_error(j) == "Config: config error at /extra: unknown field");

  j = minimal();
  j.erase("mode");
  CHECK(config_error(j).find("/mode") != std::string::npos);

  j = minimal();
  j["box"]["blocks"][1]["radius"] = 0;
  CHECK(config_error(j).find("/box/blocks/1/radius") != std::string::npos);

  j = minimal();
  j["system"]["h"] = "-x1 + ";
  CHECK(config_error(j).find("/system/h") != std::string::npos);

  j = minimal();
  j["hartman"] = Json::object();
  CHECK(config_error(j).find("/hartman") != std::string::npos);
}

TEST_CASE("operator specs") {
  CHECK(parse_operator(Json::parse(R"({"kind": "p_laplacian", "p": 3})"), 2, "/op").kind_name() == "p_laplacian");
  CHECK(parse_operator(Json::parse(R"({"kind": "arctan_radial"})"), 2, "/op").kind_name() == "arctan");
  try {
    parse_operator(Json::parse(R"({"kind": "p_laplacian", "p": 0.5})"), 2, "/op");
    FAIL("accepted p <= 1");
  } catch (const Error& e) {
    CHECK(std::string(e.what()) == "Config: config error at /op/p: must exceed 1");
  }
  CHECK_THROWS_AS(parse_operator(Json::parse(R"({"kind": "fig1_planar"})"), 3, "/op"), Error);
  CHECK_THROWS_AS(parse_operator(Json::parse(R"({"kind": "unknown"})"), 1, "/op"), Error);
}

TEST_CASE("files may carry comments and default their name") {
  const fs::path path = scratch_dir() / "commented.cfg";
  Json j = minimal();
  j.erase("name");
  {
    std::ofstream out(path);
    out << "// scratch config\n" << j.dump(2) << "\n";
  }
  const RunConfig rc = load_config(path);
  CHECK(rc.name == "commented");
  CHECK_THROWS_AS(load_config(scratch_dir() / "missing.cfg"), Error);
}

TEST_CASE("json numbers and dumps") {
  CHECK(json_number(1.5) == Json(1.5));
  CHECK(json_number(std::numeric_limits<double>::infinity()) == Json("inf"));
  CHECK(json_number(-std::numeric_limits<double>::infinity()) == Json("-inf"));
  CHECK(json_number(std::nan("")) == Json("nan"));
  const Json j = {{"b", 1}, {"a", 2}};
  CHECK(dump(j) == "{\n  \"b\": 1,\n  \"a\": 2\n}\n");
}

TEST_CASE("certificate outputs") {
  const RunConfig rc = load_config(fs::path(PHICYC_CONFIG_DIR) / "phi_laplacian_forced.cfg");
  CertifyOptions opts = rc.certify;
  opts.fixed_clock = true;
  const ExistenceCertificate cert = certify(*rc.system, *rc.box, TheoremMode::PhiLaplacianScaled, opts);
  REQUIRE(cert.solution.has_value());
  const fs::path out = scratch_dir() / "outputs";
  fs::remove_all(out);
  const ReportContext ctx{rc.name, rc.seed, 50};
  write_certificate_outputs(cert, &*rc.system, ctx, out);
  for (const char* f : {"certificate.json", "margins.csv", "trajectory.csv", "u_trajectory.csv"}) {
    CHECK(fs::exists(out / f));
  }
  std::ifstream in(out / "certificate.json");
  const Json j = Json::parse(in);
  CHECK(j["verdict"] == "EvidenceSupportsExistence");
  CHECK(j["config"] == rc.name);
  CHECK(j["phi_consistency"].get<double>() <= rc.certify.sweep.solver.tol);
  CHECK(j["solution"]["method"] == "harmonic_balance");

  std::ifstream traj(out / "trajectory.csv");
  std::string header;
  std::getline(traj, header);
  CHECK(header == "t,x_1,x_2");
  int rows = 0;
  for (std::string line; std::getline(traj, line);) ++rows;
  CHECK(rows == 51);
  std::ifstream u(out / "u_trajectory.csv");
  std::getline(u, header);
  CHECK(header == "t,u_1,du_1");
}
