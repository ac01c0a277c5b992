#pragma once

#include "phicyc/certifier.hpp"
#include "phicyc/cyclic_system.hpp"
#include "phicyc/phi_ops.hpp"
#include "phicyc/report.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace phicyc {

enum class RunMode {
  HartmanKnobloch,
  CyclicScaleLast,
  CyclicAutonomous,
  PhiLaplacianScaled,
  PhiLaplacianAutonomous,
  MonotonicityCheck,
};

const char* to_string(RunMode m);

/// Parsed and validated run configuration with the system already built.
struct RunConfig {
  std::string name;
  std::string description;
  RunMode mode = RunMode::CyclicScaleLast;
  std::uint64_t seed = 1;
  int trajectory_samples = 200;
  CertifyOptions certify;

  std::optional<CyclicSystem> system;       ///< cyclic and phi-Laplacian modes
  std::optional<FunctionBox> box;
  std::optional<HartmanProblem> hartman;    ///< hartman_knobloch
  std::optional<PhiOperator> mono_operator; ///< monotonicity_check
  PairSampler sampler;
};

/// Parses a JSON config. Violations throw Error{Config} with the JSON
/// pointer of the offending field, e.g. "config error at /solver/tol: must be positive".
/// Relative table files are resolved against `base_dir`.
RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir = ".");
RunConfig load_config(const std::filesystem::path& path);

/// Operator spec {"kind": ..., ...} at JSON pointer `where`.
PhiOperator parse_operator(const Json& j, int dim, const std::string& where,
                           const std::filesystem::path& base_dir = ".");

struct ExampleEntry {
  std::string name;
  std::string description;
  std::filesystem::path path;
};

/// *.cfg files of `dir`, sorted by name.
std::vector<ExampleEntry> list_examples(const std::filesystem::path& dir);

}  // namespace phicyc
