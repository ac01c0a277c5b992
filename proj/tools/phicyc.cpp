#include "phicyc/certifier.hpp"
#include "phicyc/config.hpp"
#include "phicyc/report.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;
using namespace phicyc;

namespace {

fs::path config_dir() {
  if (const char* env = std::getenv("PHICYC_CONFIG_DIR")) return env;
  return PHICYC_CONFIG_DIR;
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::EvidenceSupportsExistence: return 0;
    case Verdict::HypothesisViolated: return 2;
    case Verdict::Inconclusive: return 3;
  }
  return 3;
}

TheoremMode theorem_mode(RunMode m) {
  switch (m) {
    case RunMode::CyclicScaleLast: return TheoremMode::CyclicScaleLast;
    case RunMode::CyclicAutonomous: return TheoremMode::CyclicAutonomous;
    case RunMode::PhiLaplacianScaled: return TheoremMode::PhiLaplacianScaled;
    case RunMode::PhiLaplacianAutonomous: return TheoremMode::PhiLaplacianAutonomous;
    default: return TheoremMode::HartmanKnobloch;
  }
}

struct RunArgs {
  std::string config;
  std::string out_dir;
  std::optional<std::uint64_t> seed;
  bool fixed_clock = false;
  int threads = 0;
};

int run(const RunArgs& args) {
  RunConfig rc;
  try {
    rc = load_config(args.config);
  } catch (const Error& e) {
    std::cerr << e.what() << "\n";
    return 1;
  }
  if (args.seed) {
    rc.seed = *args.seed;
    rc.certify.starts.seed = *args.seed;
    rc.sampler.seed = *args.seed;
  }
  rc.certify.workers = args.threads > 0 ? args.threads : default_workers();
  rc.certify.fixed_clock = args.fixed_clock;
  const fs::path out = args.out_dir.empty() ? fs::path("out") / rc.name : fs::path(args.out_dir);
  const ReportContext ctx{rc.name, rc.seed, rc.trajectory_samples};

  try {
    fs::create_directories(out);
    if (rc.mode == RunMode::MonotonicityCheck) {
      const MonotonicityReport rep = check_monotone_H1(*rc.mono_operator, rc.sampler);
      write_text(out / "monotonicity.json", dump(to_json(rep, *rc.mono_operator, ctx)));
      std::cout << rc.name << ": " << (rep.passed ? "monotone on all sampled pairs" : "monotonicity fails")
                << ", min inner product " << rep.min_inner << "\n";
      return 0;
    }
    ExistenceCertificate cert;
    const CyclicSystem* sys = nullptr;
    std::optional<CyclicSystem> hsys;
    if (rc.mode == RunMode::HartmanKnobloch) {
      cert = certify_hartman(*rc.hartman, rc.certify);
      hsys = hartman_system(*rc.hartman, HomotopyFamily::Interpolate);
      sys = &*hsys;
    } else {
      cert = certify(*rc.system, *rc.box, theorem_mode(rc.mode), rc.certify);
      sys = &*rc.system;
    }
    write_certificate_outputs(cert, sys, ctx, out);
    std::cout << rc.name << ": " << to_string(cert.verdict) << " [" << cert.verdict_stage << "] " << cert.detail
              << "\n";
    return exit_code(cert.verdict);
  } catch (const Error& e) {
    std::cerr << rc.name << ": " << e.what() << "\n";
    return e.kind() == ErrorKind::Config || e.kind() == ErrorKind::InvalidArgument ? 1 : 3;
  }
}

int list(const std::string& dir, bool check) {
  const auto entries = list_examples(dir.empty() ? config_dir() : fs::path(dir));
  int status = 0;
  for (const auto& e : entries) {
    std::cout << e.name << "  " << e.description;
    if (check) {
      try {
        load_config(e.path);
        std::cout << "  [valid]";
      } catch (const Error& err) {
        std::cout << "  [invalid: " << err.what() << "]";
        status = 1;
      }
    }
    std::cout << "\n";
  }
  return status;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Periodic solutions of cyclic feedback systems with phi-Laplacian operators"};
  app.require_subcommand(1);

  RunArgs args;
  auto* run_cmd = app.add_subcommand("run", "Certify the scenario described by a config file");
  run_cmd->add_option("--config", args.config, "Config file (JSON)")->required();
  run_cmd->add_option("--out-dir", args.out_dir, "Output directory (default out/<name>)");
  run_cmd->add_option("--seed", args.seed, "Multistart RNG seed (overrides the config)");
  run_cmd->add_flag("--fixed-clock", args.fixed_clock, "Report zero stage times for byte-identical reruns");
  run_cmd->add_option("--threads", args.threads, "Worker cap (default: available parallelism)")
      ->check(CLI::NonNegativeNumber);

  std::string dir;
  bool check = false;
  auto* list_cmd = app.add_subcommand("list-examples", "List bundled example configs");
  list_cmd->add_option("--dir", dir, "Config directory");
  list_cmd->add_flag("--check", check, "Validate every listed config");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  if (*run_cmd) return run(args);
  return list(dir, check);
}
