#include "phicyc/report.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace phicyc {

Json json_number(double x) {
  if (std::isfinite(x)) return x;
  if (std::isnan(x)) return "nan";
  return x > 0 ? "inf" : "-inf";
}

namespace {

Json vec_json(const Vec& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(json_number(v(i)));
  return a;
}

Json list_json(const std::vector<double>& v) {
  Json a = Json::array();
  for (double x : v) a.push_back(json_number(x));
  return a;
}

Json box_json(const FunctionBox& box) {
  Json blocks = Json::array();
  for (const auto& b : box.blocks) {
    blocks.push_back({{"center", vec_json(b.center)}, {"radius", json_number(b.radius)}, {"norm", to_string(b.norm)}});
  }
  Json j = {{"blocks", blocks}};
  j["derivative_bound"] = box.derivative_bound ? json_number(*box.derivative_bound) : Json(nullptr);
  return j;
}

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(17) << x;
  return os.str();
}

}  // namespace

Json to_json(const DegreeResult& d) {
  return {{"value", d.value},
          {"method", to_string(d.method)},
          {"refinement", d.refinement},
          {"levels", d.levels},
          {"boundary_margin", json_number(d.boundary_margin)},
          {"sample_variation", json_number(d.sample_variation)},
          {"converged", d.converged},
          {"heuristic", d.heuristic},
          {"note", d.note}};
}

Json to_json(const PeriodicSolution& s) {
  Json coeffs = Json::array();
  for (Eigen::Index r = 0; r < s.coeffs.rows(); ++r) coeffs.push_back(vec_json(s.coeffs.row(r).transpose()));
  return {{"T", json_number(s.T)},
          {"param", json_number(s.param)},
          {"harmonics", s.harmonics()},
          {"method", s.from_shooting() ? "shooting" : "harmonic_balance"},
          {"residual", json_number(s.residual)},
          {"iterations", s.iterations},
          {"sup_norms", list_json(s.sup_norms)},
          {"deriv_sup_norms", list_json(s.deriv_sup_norms)},
          {"coefficients", coeffs}};
}

double phi_consistency(const PhiOperator& phi, const PeriodicSolution& sol) {
  const int m = phi.dim();
  double worst = 0.0;
  if (sol.from_shooting()) {
    for (Eigen::Index j = 0; j < sol.samples.cols(); ++j) {
      const Vec du = sol.sample_derivs.col(j).head(m);
      worst = std::max(worst, (sol.samples.col(j).segment(m, m) - phi.apply(du)).lpNorm<Eigen::Infinity>());
    }
    return worst;
  }
  const int nodes = 2 * sol.harmonics() + 1;
  for (int j = 0; j < nodes; ++j) {
    const double t = sol.T * j / nodes;
    const Vec x = sol.eval(t);
    const Vec du = sol.deriv(t).head(m);
    worst = std::max(worst, (x.segment(m, m) - phi.apply(du)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

Json to_json(const ExistenceCertificate& cert, const ReportContext& ctx) {
  Json j;
  j["config"] = ctx.config_name;
  j["seed"] = ctx.seed;
  j["mode"] = to_string(cert.mode);
  j["verdict"] = to_string(cert.verdict);
  j["verdict_stage"] = cert.verdict_stage;
  j["detail"] = cert.detail;

  Json degrees = Json::array();
  for (const auto& d : cert.degrees) {
    Json e = {{"label", d.label}};
    e.update(to_json(d.result));
    degrees.push_back(e);
  }
  j["degrees"] = degrees;
  j["assembled_degree"] = cert.assembled_degree ? Json(*cert.assembled_degree) : Json(nullptr);

  if (cert.hartman) {
    const auto& h = *cert.hartman;
    Json hj = {{"passed", h.passed}, {"strict", h.strict}, {"max_inner", json_number(h.max_inner)}, {"samples", h.samples}};
    if (h.witness) hj["witness"] = {{"t", json_number(h.witness->first)}, {"xi", vec_json(h.witness->second)}};
    j["hartman"] = hj;
  } else {
    j["hartman"] = nullptr;
  }
  if (cert.apriori) {
    const auto& a = *cert.apriori;
    j["apriori"] = {{"d", json_number(a.d)},     {"T", json_number(a.T)},     {"C_d", json_number(a.C_d)},
                    {"L_d", json_number(a.L_d)}, {"K_d", json_number(a.K_d)}, {"M_d", json_number(a.M_d)}};
  } else {
    j["apriori"] = nullptr;
  }

  j["box"] = box_json(cert.box);

  if (cert.boundary) {
    const auto& b = *cert.boundary;
    Json table = Json::array();
    for (const auto& p : b.per_param) {
      table.push_back({{"param", json_number(p.param)}, {"converged", p.converged}, {"min_margin", json_number(p.min_margin)}});
    }
    Json bj = {{"starts", b.starts},
               {"solves", b.solves},
               {"converged", b.converged},
               {"exterior", b.exterior},
               {"min_margin", json_number(b.min_margin)},
               {"min_margin_param", json_number(b.min_margin_param)},
               {"max_first_block_deriv", json_number(b.max_first_block_deriv)},
               {"per_param", table}};
    if (b.witness) {
      bj["witness"] = {{"param", json_number(b.witness->param)},
                       {"margin", json_number(b.witness->margin)},
                       {"origin", b.witness->origin},
                       {"solution", to_json(b.witness->solution)}};
    } else {
      bj["witness"] = nullptr;
    }
    j["boundary_evidence"] = bj;
  } else {
    j["boundary_evidence"] = nullptr;
  }

  if (cert.branch) {
    const auto& br = *cert.branch;
    Json entries = Json::array();
    for (const auto& e : br.entries) {
      entries.push_back({{"param", json_number(e.param)},
                         {"margin", json_number(e.boundary_margin)},
                         {"residual", json_number(e.solution.residual)},
                         {"harmonics", e.solution.harmonics()}});
    }
    j["branch"] = {{"end", to_string(br.end)}, {"failed_param", json_number(br.failed_param)},
                   {"detail", br.detail},      {"entries", entries}};
  } else {
    j["branch"] = nullptr;
  }

  j["solution"] = cert.solution ? to_json(*cert.solution) : Json(nullptr);
  j["solution_margin"] = json_number(cert.solution_margin);
  j["shooting_discrepancy"] = json_number(cert.shooting_discrepancy);

  Json aux = Json::array();
  for (const auto& a : cert.auxiliary) {
    aux.push_back({{"label", a.label},
                   {"verdict", to_string(a.verdict)},
                   {"detail", a.detail},
                   {"residual", json_number(a.residual)},
                   {"distance_to_main", json_number(a.distance_to_main)}});
  }
  j["auxiliary"] = aux;

  Json stages = Json::array();
  for (const auto& s : cert.stages) {
    stages.push_back({{"name", s.name}, {"status", s.status}, {"detail", s.detail}, {"seconds", json_number(s.seconds)}});
  }
  j["stages"] = stages;
  return j;
}

Json to_json(const MonotonicityReport& rep, const PhiOperator& phi, const ReportContext& ctx) {
  Json j;
  j["config"] = ctx.config_name;
  j["seed"] = ctx.seed;
  j["operator"] = phi.kind_name();
  j["monotone"] = rep.passed;
  j["min_inner"] = json_number(rep.min_inner);
  j["pairs_checked"] = rep.pairs_checked;
  if (rep.witness) {
    j["witness"] = {{"x1", vec_json(rep.witness->first)},
                    {"x2", vec_json(rep.witness->second)},
                    {"phi_x1", vec_json(phi.apply(rep.witness->first))},
                    {"phi_x2", vec_json(phi.apply(rep.witness->second))}};
  } else {
    j["witness"] = nullptr;
  }
  return j;
}

std::string dump(const Json& j) { return j.dump(2) + "\n"; }

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Config, "cannot write " + path.string());
  out << text;
}

void write_certificate_outputs(const ExistenceCertificate& cert, const CyclicSystem* sys, const ReportContext& ctx,
                               const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  Json j = to_json(cert, ctx);
  const bool phi_build = sys && sys->origin == "phi_laplacian" && !sys->phis.empty();
  if (phi_build && cert.solution) j["phi_consistency"] = json_number(phi_consistency(sys->phis.front(), *cert.solution));
  write_text(out_dir / "certificate.json", dump(j));

  std::ostringstream margins;
  margins << "param,margin\n";
  if (cert.branch) {
    for (const auto& e : cert.branch->entries) margins << csv_number(e.param) << ',' << csv_number(e.boundary_margin) << '\n';
  }
  write_text(out_dir / "margins.csv", margins.str());

  std::ostringstream traj;
  traj << "t";
  const int dim = cert.solution ? cert.solution->dim() : 0;
  for (int i = 1; i <= dim; ++i) traj << ",x_" << i;
  traj << '\n';
  const int samples = std::max(2, ctx.trajectory_samples);
  if (cert.solution) {
    const auto& s = *cert.solution;
    for (int k = 0; k <= samples; ++k) {
      const double t = s.T * k / samples;
      const Vec x = s.eval(t);
      traj << csv_number(t);
      for (int i = 0; i < dim; ++i) traj << ',' << csv_number(x(i));
      traj << '\n';
    }
  }
  write_text(out_dir / "trajectory.csv", traj.str());

  if (phi_build && cert.solution) {
    const int m = sys->m;
    const auto& s = *cert.solution;
    std::ostringstream u;
    u << "t";
    for (int i = 1; i <= m; ++i) u << ",u_" << i;
    for (int i = 1; i <= m; ++i) u << ",du_" << i;
    u << '\n';
    for (int k = 0; k <= samples; ++k) {
      const double t = s.T * k / samples;
      const Vec x = s.eval(t);
      const Vec du = sys->phis.front().invert(x.segment(m, m));
      u << csv_number(t);
      for (int i = 0; i < m; ++i) u << ',' << csv_number(x(i));
      for (int i = 0; i < m; ++i) u << ',' << csv_number(du(i));
      u << '\n';
    }
    write_text(out_dir / "u_trajectory.csv", u.str());
  }
}

}  // namespace phicyc
