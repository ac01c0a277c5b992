#pragma once

#include "phicyc/certifier.hpp"
#include "phicyc/cyclic_system.hpp"
#include "phicyc/phi_ops.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <string>

namespace phicyc {

using Json = nlohmann::ordered_json;

struct ReportContext {
  std::string config_name;
  std::uint64_t seed = 1;
  int trajectory_samples = 200;
};

/// Finite values as numbers, others as "inf" / "-inf" / "nan".
Json json_number(double x);

Json to_json(const DegreeResult& d);
Json to_json(const PeriodicSolution& s);
Json to_json(const ExistenceCertificate& cert, const ReportContext& ctx);
Json to_json(const MonotonicityReport& rep, const PhiOperator& phi, const ReportContext& ctx);

/// max over the collocation nodes of |x_2(t) - phi(u'(t))|, u = x_1.
double phi_consistency(const PhiOperator& phi, const PeriodicSolution& sol);

/// Two-space indented dump with a trailing newline.
std::string dump(const Json& j);

/// Writes certificate.json, trajectory.csv (t, x_1..x_mn), margins.csv
/// (param, margin) and, for phi-Laplacian builds, u_trajectory.csv
/// (t, u_1..u_m, du_1..du_m). `sys` supplies the operator for the back-map.
void write_certificate_outputs(const ExistenceCertificate& cert, const CyclicSystem* sys,
                               const ReportContext& ctx, const std::filesystem::path& out_dir);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace phicyc
