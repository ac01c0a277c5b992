#include "phicyc/certifier.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>

namespace phicyc {

const char* to_string(TheoremMode m) {
  switch (m) {
    case TheoremMode::CyclicScaleLast: return "CyclicScaleLast";
    case TheoremMode::CyclicAutonomous: return "CyclicAutonomous";
    case TheoremMode::PhiLaplacianScaled: return "PhiLaplacianScaled";
    case TheoremMode::PhiLaplacianAutonomous: return "PhiLaplacianAutonomous";
    case TheoremMode::HartmanKnobloch: return "HartmanKnobloch";
  }
  return "Unknown";
}

const char* to_string(Verdict v) {
  switch (v) {
    case Verdict::EvidenceSupportsExistence: return "EvidenceSupportsExistence";
    case Verdict::HypothesisViolated: return "HypothesisViolated";
    case Verdict::Inconclusive: return "Inconclusive";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// Hartman condition

HartmanReport hartman_check(const TimeVecMap& f, int dim, double R, double T, const HartmanSampling& sampling) {
  if (!(R > 0.0)) fail(ErrorKind::InvalidArgument, "hartman_check: R must be positive");
  if (!(T > 0.0)) fail(ErrorKind::InvalidArgument, "hartman_check: T must be positive");
  HartmanReport rep;
  const auto dirs = sphere_directions(dim, sampling.directions);
  const int nt = std::max(1, sampling.time_samples);
  for (int k = 0; k < nt; ++k) {
    const double t = T * k / nt;
    for (const Vec& v : dirs) {
      const Vec xi = R * v;
      const double inner = f(t, xi).dot(xi);
      ++rep.samples;
      if (inner > rep.max_inner) {
        rep.max_inner = inner;
        rep.witness = std::make_pair(t, xi);
      }
    }
  }
  rep.passed = rep.max_inner <= sampling.slack;
  rep.strict = rep.max_inner < -sampling.slack;
  return rep;
}

// ---------------------------------------------------------------------------
// A-priori bound

namespace {

double max_family_norm(const FamilyMap& f, int dim, double d, double T, const AprioriOptions& o, int level) {
  const int nt = o.time_samples * level;
  const int nr = o.radial_samples * level;
  const int nl = o.lambda_samples * level;
  const auto dirs = sphere_directions(dim, o.directions * level);
  double best = 0.0;
  for (int k = 0; k < nt; ++k) {
    const double t = T * k / nt;
    for (int l = 0; l <= nl; ++l) {
      const double lambda = static_cast<double>(l) / nl;
      best = std::max(best, f(t, Vec::Zero(dim), lambda).norm());
      for (int r = 1; r <= nr; ++r) {
        const double rad = d * r / nr;
        for (const Vec& v : dirs) best = std::max(best, f(t, rad * v, lambda).norm());
      }
    }
  }
  return best;
}

double min_sphere_image(const PhiOperator& phi, const std::vector<Vec>& dirs, double radius) {
  double out = std::numeric_limits<double>::infinity();
  for (const Vec& v : dirs) out = std::min(out, phi.apply(radius * v).norm());
  return out;
}

}  // namespace

AprioriBound apriori_bound(const PhiOperator& phi, const FamilyMap& f, double d, double T, const AprioriOptions& opts) {
  if (!(d > 0.0) || !(T > 0.0)) fail(ErrorKind::InvalidArgument, "apriori_bound: d and T must be positive");
  const int m = phi.dim();
  AprioriBound b;
  b.d = d;
  b.T = T;
  b.C_d = std::max(max_family_norm(f, m, d, T, opts, 1), max_family_norm(f, m, d, T, opts, 2));
  b.L_d = coercivity_threshold(phi, d * b.C_d, opts.coercivity);

  const auto dirs = sphere_directions(m, opts.directions);
  b.K_d = 0.0;
  for (int r = 1; r <= 4 * opts.radial_samples; ++r) {
    const double rad = b.L_d * r / (4.0 * opts.radial_samples);
    for (const Vec& v : dirs) b.K_d = std::max(b.K_d, phi.apply(rad * v).norm());
  }

  const double target = b.K_d + T * b.C_d;
  double hi = b.L_d > 0.0 ? b.L_d : 1.0;
  double lo = 0.0;
  while (!(min_sphere_image(phi, dirs, hi) > target)) {
    lo = hi;
    hi *= 2.0;
    if (hi > opts.coercivity.radius_cap) {
      fail(ErrorKind::NotCoercive, "apriori_bound: sphere image never exceeds K_d + T C_d below the radius cap");
    }
  }
  lo = std::max(lo, b.L_d);
  if (lo < hi && !(min_sphere_image(phi, dirs, lo) > target)) {
    for (int i = 0; i < opts.bisection_steps; ++i) {
      const double mid = 0.5 * (lo + hi);
      if (min_sphere_image(phi, dirs, mid) > target) {
        hi = mid;
      } else {
        lo = mid;
      }
    }
  }
  b.M_d = std::max(hi, b.L_d);
  return b;
}

// ---------------------------------------------------------------------------
// Boundary falsification

namespace {

std::vector<PeriodicSolution> make_seeds(const CyclicSystem& sys, const FunctionBox& box, const MultistartPlan& plan,
                                         int harmonics) {
  const int m = sys.m;
  const int n = sys.n;
  Vec centers(sys.dim());
  for (int i = 0; i < n; ++i) centers.segment(i * m, m) = box.blocks[static_cast<std::size_t>(i)].center;
  std::vector<PeriodicSolution> seeds;

  const auto& b0 = box.blocks.front();
  const int per_axis = std::max(1, plan.lattice_per_axis);
  int total = 1;
  for (int j = 0; j < m; ++j) total *= per_axis;
  for (int idx = 0; idx < total; ++idx) {
    Vec x = centers;
    int rem = idx;
    for (int j = 0; j < m; ++j) {
      const int a = rem % per_axis;
      rem /= per_axis;
      const double u = per_axis == 1 ? 0.0 : -0.8 + 1.6 * a / (per_axis - 1);
      const double scale = (b0.norm == BlockNorm::Euclidean && m > 1) ? 1.0 / std::sqrt(double(m)) : 1.0;
      x(j) += u * b0.radius * scale;
    }
    seeds.push_back(PeriodicSolution::constant(x, sys.T, harmonics));
  }

  const auto dirs = sphere_directions(m, std::max(plan.boundary_seeds, 2 * m));
  for (int k = 0; k < plan.boundary_seeds; ++k) {
    const int i = k % n;
    const auto& b = box.blocks[static_cast<std::size_t>(i)];
    Vec v = dirs[static_cast<std::size_t>(k) % dirs.size()];
    if (b.norm == BlockNorm::Max) v /= v.lpNorm<Eigen::Infinity>();
    Vec x = centers;
    x.segment(i * m, m) = b.center + 0.95 * b.radius * v;
    seeds.push_back(PeriodicSolution::constant(x, sys.T, harmonics));
  }

  std::mt19937_64 rng(plan.seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  for (int k = 0; k < plan.random_seeds; ++k) {
    PeriodicSolution s = PeriodicSolution::constant(centers, sys.T, std::max(1, harmonics));
    for (int i = 0; i < n; ++i) {
      const double r = box.blocks[static_cast<std::size_t>(i)].radius;
      for (int j = 0; j < m; ++j) {
        const int row = i * m + j;
        s.coeffs(row, 0) += 0.9 * r * unit(rng) / std::sqrt(double(m));
        s.coeffs(row, 1) = 0.5 * r * unit(rng) / std::sqrt(double(m));
        s.coeffs(row, 2) = 0.5 * r * unit(rng) / std::sqrt(double(m));
      }
    }
    seeds.push_back(std::move(s));
  }
  return seeds;
}

struct JobResult {
  bool ok = false;
  PeriodicSolution sol;
  double margin = 0.0;
};

struct Bracket {
  double param;
  PeriodicSolution sol;
  double margin;
};

}  // namespace

BoundaryEvidence falsify_boundary(const CyclicSystem& sys, const FunctionBox& box, const std::vector<double>& params,
                                  const MultistartPlan& starts, const FalsifyOptions& opts) {
  box.validate(sys.n, sys.m);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!(params[i] >= 0.0 && params[i] <= 1.0) || (i > 0 && !(params[i] > params[i - 1]))) {
      fail(ErrorKind::InvalidArgument, "falsify_boundary: parameters must be increasing in [0, 1]");
    }
  }
  const auto seeds = make_seeds(sys, box, starts, opts.solver.harmonics);
  const std::size_t S = seeds.size();
  const std::size_t P = params.size();
  std::vector<JobResult> results(S * P);
  parallel_for(S * P, opts.workers, [&](std::size_t idx) {
    const std::size_t p = idx / S;
    const std::size_t s = idx % S;
    JobResult& r = results[idx];
    try {
      r.sol = solve_periodic(sys, params[p], seeds[s], opts.solver);
      r.margin = box_margin(box, r.sol, sys.m);
      r.ok = std::isfinite(r.margin);
    } catch (const Error&) {
      r.ok = false;
    }
  });

  double scale = 1.0;
  for (const auto& b : box.blocks) scale = std::max(scale, b.radius);
  if (box.derivative_bound) scale = std::max(scale, *box.derivative_bound);
  const double tol_abs = opts.witness_tol * scale;

  BoundaryEvidence ev;
  ev.starts = static_cast<int>(S);
  ev.solves = static_cast<int>(S * P);
  const double r0 = box.blocks.front().radius;
  for (std::size_t p = 0; p < P; ++p) {
    ParamSummary ps;
    ps.param = params[p];
    for (std::size_t s = 0; s < S; ++s) {
      const JobResult& r = results[p * S + s];
      if (!r.ok) continue;
      ++ps.converged;
      ++ev.converged;
      if (!r.sol.sup_norms.empty() && r.sol.sup_norms.front() <= r0 && !r.sol.deriv_sup_norms.empty()) {
        ev.max_first_block_deriv = std::max(ev.max_first_block_deriv, r.sol.deriv_sup_norms.front());
      }
      if (std::abs(r.margin) <= tol_abs && !ev.witness) {
        ev.witness = BoundaryWitness{params[p], r.margin, r.sol, "seed " + std::to_string(s)};
      }
      if (r.margin > 0.0) {
        ps.min_margin = std::min(ps.min_margin, r.margin);
        if (r.margin < ev.min_margin) {
          ev.min_margin = r.margin;
          ev.min_margin_param = params[p];
        }
      } else {
        ++ev.exterior;
      }
    }
    ev.per_param.push_back(ps);
  }
  if (ev.witness) return ev;

  // Follow sign changes of the margin along each seed's results.
  for (std::size_t s = 0; s < S && !ev.witness; ++s) {
    for (std::size_t p = 0; p + 1 < P && !ev.witness; ++p) {
      const JobResult& a = results[p * S + s];
      const JobResult& b = results[(p + 1) * S + s];
      if (!a.ok || !b.ok || (a.margin > 0.0) == (b.margin > 0.0)) continue;
      Bracket in = a.margin > 0.0 ? Bracket{params[p], a.sol, a.margin} : Bracket{params[p + 1], b.sol, b.margin};
      Bracket out = a.margin > 0.0 ? Bracket{params[p + 1], b.sol, b.margin} : Bracket{params[p], a.sol, a.margin};
      for (int it = 0; it < opts.bisection_steps; ++it) {
        if (std::abs(in.margin) <= tol_abs || std::abs(out.margin) <= tol_abs) break;
        const double mid = 0.5 * (in.param + out.param);
        PeriodicSolution sol;
        try {
          sol = solve_periodic(sys, mid, in.sol, opts.solver);
        } catch (const Error&) {
          break;
        }
        const double margin = box_margin(box, sol, sys.m);
        ++ev.solves;
        if (margin > 0.0) {
          in = {mid, std::move(sol), margin};
        } else {
          out = {mid, std::move(sol), margin};
        }
      }
      const Bracket& closest = std::abs(in.margin) <= std::abs(out.margin) ? in : out;
      if (std::abs(closest.margin) <= tol_abs) {
        ev.witness = BoundaryWitness{closest.param, closest.margin, closest.sol,
                                     "seed " + std::to_string(s) + " bisected between " +
                                         std::to_string(params[p]) + " and " + std::to_string(params[p + 1])};
      }
    }
  }
  return ev;
}

// ---------------------------------------------------------------------------
// Certification

namespace {

class Stopwatch {
 public:
  explicit Stopwatch(bool fixed) : fixed_(fixed), last_(std::chrono::steady_clock::now()) {}
  double lap() {
    const auto now = std::chrono::steady_clock::now();
    const double s = std::chrono::duration<double>(now - last_).count();
    last_ = now;
    return fixed_ ? 0.0 : s;
  }

 private:
  bool fixed_;
  std::chrono::steady_clock::time_point last_;
};

bool is_autonomous(TheoremMode m) {
  return m == TheoremMode::CyclicAutonomous || m == TheoremMode::PhiLaplacianAutonomous ||
         m == TheoremMode::HartmanKnobloch;
}

bool is_phi_mode(TheoremMode m) {
  return m == TheoremMode::PhiLaplacianScaled || m == TheoremMode::PhiLaplacianAutonomous ||
         m == TheoremMode::HartmanKnobloch;
}

/// g_i(omega) != 0 on sampled nonzero points of O_{i+1}.
bool g_nonvanishing_off_zero(const CyclicSystem& sys, const FunctionBox& box) {
  for (int i = 0; i + 1 < sys.n; ++i) {
    const RegionBox region = box.block_region(i + 1);
    const int k = region.dim();
    const int per_axis = k == 1 ? 33 : (k == 2 ? 9 : 5);
    int total = 1;
    for (int j = 0; j < k; ++j) total *= per_axis;
    const Vec extent = region.is_ball() ? Vec::Constant(k, region.radius() / std::sqrt(double(k)))
                                        : region.half_widths();
    for (int idx = 0; idx < total; ++idx) {
      Vec u(k);
      int rem = idx;
      for (int j = 0; j < k; ++j) {
        u(j) = -0.99 + 1.98 * (rem % per_axis) / (per_axis - 1);
        rem /= per_axis;
      }
      const Vec w = region.center() + extent.cwiseProduct(u);
      if (w.norm() < 1e-9) continue;
      if (sys.g[static_cast<std::size_t>(i)](w).norm() <= 1e-12) return false;
    }
  }
  return true;
}

double sup_distance(const PeriodicSolution& a, const PeriodicSolution& b, int rows) {
  double out = 0.0;
  for (int j = 0; j < 64; ++j) {
    const double t = a.T * j / 64.0;
    out = std::max(out, (a.eval(t).head(rows) - b.eval(t).head(rows)).norm());
  }
  return out;
}

std::vector<double> sweep_grid(double first, const std::vector<double>& params) {
  std::vector<double> out{first};
  for (double p : params) {
    if (p > first && p < 1.0) out.push_back(p);
  }
  out.push_back(1.0);
  return out;
}

struct CertBuilder {
  ExistenceCertificate& cert;
  Stopwatch clock;

  void stage(const std::string& name, const std::string& status, const std::string& detail) {
    cert.stages.push_back({name, status, detail, clock.lap()});
  }
  ExistenceCertificate& conclude(Verdict v, const std::string& stage_name, const std::string& detail) {
    cert.verdict = v;
    cert.verdict_stage = stage_name;
    cert.detail = detail;
    return cert;
  }
};

}  // namespace

ExistenceCertificate certify(const CyclicSystem& sys, const FunctionBox& box, TheoremMode mode,
                             const CertifyOptions& opts) {
  if (mode == TheoremMode::HartmanKnobloch) {
    fail(ErrorKind::InvalidArgument, "certify: HartmanKnobloch mode is run through certify_hartman");
  }
  ExistenceCertificate cert;
  cert.mode = mode;
  cert.box = box;
  box.validate(sys.n, sys.m);
  const bool autonomous = is_autonomous(mode);
  if (is_phi_mode(mode) && sys.origin != "phi_laplacian") {
    fail(ErrorKind::InvalidArgument, std::string(to_string(mode)) + " needs a phi-Laplacian build");
  }
  CyclicSystem fam = sys;
  fam.family = autonomous ? HomotopyFamily::Interpolate : HomotopyFamily::ScaleLast;
  fam.validate();
  if (autonomous && !fam.h0) {
    fail(ErrorKind::InvalidArgument, "autonomous modes need the autonomous field h0");
  }
  CertBuilder cb{cert, Stopwatch(opts.fixed_clock)};

  // Degree stage.
  RefinementSpec spec = opts.degree;
  spec.workers = opts.workers;
  const int m = sys.m;
  try {
    if (mode == TheoremMode::CyclicScaleLast || mode == TheoremMode::CyclicAutonomous) {
      const bool c3 = box.zero_in_tail_blocks();
      const bool c4 = sys.g_vanish_at_zero();
      const bool c5 = c3 && c4 && g_nonvanishing_off_zero(sys, box);
      std::optional<int> product;
      if (c3 && c4 && c5 && m <= 4) {
        const VecMap hstar = autonomous ? VecMap([&](const Vec& w) { return fam.reduced_field_autonomous(w); })
                                        : VecMap([&](const Vec& w) { return fam.reduced_field(w); });
        const DegreeResult dh = brouwer_degree(hstar, box.block_region(0), spec);
        cert.degrees.push_back({autonomous ? "h0*" : "h*", dh});
        std::vector<int> dgs;
        double margin = dh.boundary_margin;
        bool heuristic = dh.heuristic;
        for (int i = 0; i + 1 < sys.n; ++i) {
          const DegreeResult dg = brouwer_degree(sys.g[static_cast<std::size_t>(i)], box.block_region(i + 1), spec);
          cert.degrees.push_back({"g_" + std::to_string(i + 1), dg});
          dgs.push_back(dg.value);
          margin = std::min(margin, dg.boundary_margin);
          heuristic = heuristic || dg.heuristic;
        }
        DegreeResult assembled;
        assembled.value = cyclic_degree_product(dh.value, dgs, m, sys.n);
        assembled.method = DegreeMethod::ProductFormula;
        assembled.boundary_margin = margin;
        assembled.converged = true;
        assembled.heuristic = heuristic;
        assembled.note = "sign " + std::to_string(permutation_sign(m, sys.n)) + " times component degrees";
        cert.degrees.push_back({autonomous ? "g_hat0 (product formula)" : "g_hat (product formula)", assembled});
        product = assembled.value;
      }
      std::optional<int> direct;
      const bool trace_is_box = m == 1 || sys.n == 1 ||
                                std::all_of(box.blocks.begin(), box.blocks.end(),
                                            [](const BlockBound& b) { return b.norm == BlockNorm::Max; });
      if (sys.dim() <= 4 && trace_is_box) {
        const VecMap ghat = autonomous ? VecMap([&](const Vec& s) { return fam.g_hat_autonomous(s); })
                                       : VecMap([&](const Vec& s) { return fam.g_hat(s); });
        const DegreeResult dd = brouwer_degree(ghat, box.trace_region(), spec);
        cert.degrees.push_back({autonomous ? "g_hat0 (direct)" : "g_hat (direct)", dd});
        direct = dd.value;
      }
      if (product && direct && *product != *direct) {
        cb.stage("degree", "inconclusive", "product formula and direct degree disagree");
        return cb.conclude(Verdict::Inconclusive, "degree",
                           "product formula gives " + std::to_string(*product) + " but direct computation gives " +
                               std::to_string(*direct));
      }
      if (!product && !direct) {
        cb.stage("degree", "inconclusive", "product-formula hypotheses fail and dimension exceeds the direct cap");
        return cb.conclude(Verdict::Inconclusive, "degree", "no admissible degree computation");
      }
      cert.assembled_degree = product ? *product : *direct;
    } else {
      const VecMap kstar = autonomous ? VecMap([&](const Vec& w) { return Vec(-fam.reduced_field_autonomous(w)); })
                                      : VecMap([&](const Vec& w) { return Vec(-fam.reduced_field(w)); });
      const DegreeResult dk = brouwer_degree(kstar, box.block_region(0), spec);
      cert.degrees.push_back({autonomous ? "k0(.,0)" : "k*", dk});
      cert.assembled_degree = dk.value;
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::BoundaryZero) {
      cb.stage("degree", "fail", e.what());
      return cb.conclude(Verdict::HypothesisViolated, "degree",
                         std::string("degree undefined, zero on the boundary of the first block: ") + e.what());
    }
    cb.stage("degree", "inconclusive", e.what());
    return cb.conclude(Verdict::Inconclusive, "degree", e.what());
  }
  if (*cert.assembled_degree == 0) {
    cb.stage("degree", "fail", "degree is 0");
    return cb.conclude(Verdict::HypothesisViolated, "degree",
                       std::string(autonomous ? "autonomous" : "averaged") +
                           " field has degree 0 on the box (no zero found or zeros cancel)");
  }
  cb.stage("degree", "pass", "degree " + std::to_string(*cert.assembled_degree));

  // Boundary falsification over the open (scaled) or closed-left (autonomous) interval.
  std::vector<double> fparams;
  for (double p : autonomous ? opts.autonomous_params : opts.scaled_params) {
    if (p < 1.0 && (autonomous ? p >= 0.0 : p > 0.0)) fparams.push_back(p);
  }
  FalsifyOptions fo = opts.falsify;
  fo.workers = opts.workers;
  fo.solver = opts.sweep.solver;
  cert.boundary = falsify_boundary(fam, box, fparams, opts.starts, fo);
  if (cert.boundary->witness) {
    const auto& w = *cert.boundary->witness;
    cb.stage("boundary", "fail", "solution on the boundary at param " + std::to_string(w.param));
    return cb.conclude(Verdict::HypothesisViolated, "boundary",
                       "T-periodic solution on the box boundary at param " + std::to_string(w.param) +
                           " (margin " + std::to_string(w.margin) + ", " + w.origin + ")");
  }
  cb.stage("boundary", "pass",
           std::to_string(cert.boundary->converged) + " converged solves, min interior margin " +
               std::to_string(cert.boundary->min_margin));

  // Continuation to param = 1.
  StartOptions so = opts.start;
  so.autonomous = autonomous;
  PeriodicSolution start;
  try {
    start = start_from_averaged(fam, box, so);
  } catch (const Error& e) {
    cb.stage("continuation", "inconclusive", e.what());
    return cb.conclude(Verdict::Inconclusive, "continuation", std::string("no averaged seed: ") + e.what());
  }
  const auto params = autonomous ? sweep_grid(0.0, opts.autonomous_params) : sweep_grid(opts.theta0, opts.scaled_params);
  cert.branch = continuation_sweep(fam, params, box, start, opts.sweep);
  const BranchLog& log = *cert.branch;
  if (log.end == BranchEnd::BoundaryHit) {
    const auto& e = log.entries.back();
    cert.boundary->witness = BoundaryWitness{e.param, e.boundary_margin, e.solution, "continuation branch"};
    cb.stage("continuation", "fail", log.detail);
    return cb.conclude(Verdict::HypothesisViolated, "boundary", "continuation branch leaves the box: " + log.detail);
  }
  if (log.end == BranchEnd::NonConvergence) {
    cb.stage("continuation", "inconclusive", log.detail);
    return cb.conclude(Verdict::Inconclusive, "continuation", "sweep failed at param " +
                                                                  std::to_string(log.failed_param) + ": " + log.detail);
  }
  cb.stage("continuation", "pass", std::to_string(log.entries.size()) + " branch points");

  // Final solution at param = 1.
  PeriodicSolution sol = log.entries.back().solution;
  const double tol = opts.sweep.solver.tol;
  cert.solution_margin = box_margin(box, sol, m);
  try {
    cert.shooting_discrepancy = cross_validate_shooting(fam, sol);
  } catch (const Error&) {
    cert.shooting_discrepancy = -1.0;
  }
  // Shooting solutions are re-checked by a fresh flow, collocation ones on a finer grid.
  double recomputed = std::numeric_limits<double>::infinity();
  if (sol.from_shooting()) {
    try {
      recomputed = segment_defect(fam, sol, opts.sweep.solver.shooting);
    } catch (const Error&) {
      recomputed = std::numeric_limits<double>::infinity();
    }
  } else {
    recomputed = field_residual(fam, sol, 1.0, 16 * (2 * sol.harmonics() + 1));
  }
  cert.solution = sol;
  if (!(recomputed <= tol) || !(sol.residual <= tol)) {
    cb.stage("final", "inconclusive", "residual " + std::to_string(recomputed));
    return cb.conclude(Verdict::Inconclusive, "final", "param = 1 residual above tolerance");
  }
  if (!(cert.solution_margin > 0.0)) {
    cb.stage("final", "fail", "solution not strictly inside the box");
    return cb.conclude(Verdict::HypothesisViolated, "boundary", "param = 1 solution is not strictly inside the box");
  }
  cb.stage("final", "pass", "residual " + std::to_string(recomputed) + ", margin " + std::to_string(cert.solution_margin));
  return cb.conclude(Verdict::EvidenceSupportsExistence, "final",
                     "nonzero degree, no boundary solution found, interior solution at param = 1");
}

CyclicSystem hartman_system(const HartmanProblem& problem, HomotopyFamily family, double eps) {
  const TimeVecMap f = problem.f;
  PhiLaplacianForcing k = [f, eps](double t, const Vec& u, const Vec&) { return Vec(f(t, u) - eps * u); };
  std::function<Vec(const Vec&, const Vec&)> k0;
  if (family == HomotopyFamily::Interpolate) k0 = [](const Vec& u, const Vec&) { return Vec(-u); };
  CyclicSystem sys = from_phi_laplacian(problem.phi, k, problem.T, k0);
  sys.family = family;
  return sys;
}

ExistenceCertificate certify_hartman(const HartmanProblem& problem, const CertifyOptions& opts) {
  ExistenceCertificate cert;
  cert.mode = TheoremMode::HartmanKnobloch;
  CertBuilder cb{cert, Stopwatch(opts.fixed_clock)};
  const PhiOperator& phi = problem.phi;
  const int m = phi.dim();
  if (!phi.a_phi_form()) {
    fail(ErrorKind::InvalidArgument, "Hartman mode needs an operator of the form A(xi) xi");
  }

  cert.hartman = hartman_check(problem.f, m, problem.R, problem.T, opts.hartman);
  const HartmanReport& hr = *cert.hartman;
  if (!hr.passed) {
    cb.stage("hartman", "fail", "max <f, xi> = " + std::to_string(hr.max_inner));
    return cb.conclude(Verdict::HypothesisViolated, "hartman",
                       "Hartman condition fails on |xi| = R: max <f(t, xi), xi> = " + std::to_string(hr.max_inner));
  }
  cb.stage("hartman", "pass", hr.strict ? "strict" : "non-strict");

  const TimeVecMap f = problem.f;
  const FamilyMap ftilde = [f](double t, const Vec& xi, double lambda) {
    return Vec(lambda * f(t, xi) - (1.0 - lambda) * xi);
  };
  try {
    cert.apriori = apriori_bound(phi, ftilde, problem.R, problem.T, opts.apriori);
  } catch (const Error& e) {
    cb.stage("apriori", "inconclusive", e.what());
    return cb.conclude(Verdict::Inconclusive, "apriori", e.what());
  }
  const double M = cert.apriori->M_d;
  cb.stage("apriori", "pass", "M_R = " + std::to_string(M));

  // Box {|u| < R, |u'| < M_R}; block 2 (phi(u')) is bounded loosely so the
  // derivative bound is the active constraint.
  FunctionBox box;
  double image = 0.0;
  for (const Vec& v : sphere_directions(m, 64)) image = std::max(image, phi.apply(M * v).norm());
  box.blocks.push_back({Vec::Zero(m), problem.R, BlockNorm::Euclidean});
  box.blocks.push_back({Vec::Zero(m), 1.01 * image + 1e-9, BlockNorm::Euclidean});
  box.derivative_bound = M;
  cert.box = box;

  const RegionBox ball = RegionBox::ball(Vec::Zero(m), problem.R);
  RefinementSpec spec = opts.degree;
  spec.workers = opts.workers;
  try {
    const DegreeResult ref = brouwer_degree([](const Vec& x) { return Vec(-x); }, ball, spec);
    cert.degrees.push_back({"-Id reference", ref});
    const CyclicSystem scaled = hartman_system(problem, HomotopyFamily::ScaleLast);
    const DegreeResult kstar =
        brouwer_degree([&](const Vec& w) { return Vec(-scaled.reduced_field(w)); }, ball, spec);
    cert.degrees.push_back({"k* (mean of f)", kstar});
  } catch (const Error& e) {
    cb.stage("degree_reference", "inconclusive", e.what());
    return cb.conclude(Verdict::Inconclusive, "degree", e.what());
  }
  cb.stage("degree_reference", "pass", "deg(-Id, B(0,R)) = " + std::to_string(cert.degrees.front().result.value));

  const CyclicSystem sys = hartman_system(problem, HomotopyFamily::Interpolate);
  CertifyOptions sub = opts;
  ExistenceCertificate inner = certify(sys, box, TheoremMode::PhiLaplacianAutonomous, sub);
  for (auto& d : inner.degrees) cert.degrees.push_back(std::move(d));
  for (auto& s : inner.stages) cert.stages.push_back(std::move(s));
  cert.assembled_degree = inner.assembled_degree;
  cert.boundary = std::move(inner.boundary);
  cert.branch = std::move(inner.branch);
  cert.solution = std::move(inner.solution);
  cert.solution_margin = inner.solution_margin;
  cert.shooting_discrepancy = inner.shooting_discrepancy;
  cert.verdict = inner.verdict;
  cert.verdict_stage = inner.verdict_stage;
  cert.detail = inner.detail;
  cb.clock.lap();

  // Every solution with |u| <= R must respect the a-priori derivative bound.
  double worst = cert.boundary ? cert.boundary->max_first_block_deriv : 0.0;
  if (cert.branch) {
    for (const auto& e : cert.branch->entries) {
      if (e.solution.sup_norms.front() <= problem.R) worst = std::max(worst, e.solution.deriv_sup_norms.front());
    }
  }
  if (worst > M) {
    cb.stage("apriori_check", "fail", "observed |u'| = " + std::to_string(worst));
    return cb.conclude(Verdict::Inconclusive, "apriori",
                       "a solution with |u| <= R has |u'| = " + std::to_string(worst) + " > M_R = " + std::to_string(M));
  }
  cb.stage("apriori_check", "pass", "max observed |u'| = " + std::to_string(worst));

  if (!opts.cross_check) return cert;
  CertifyOptions aux_opts = opts;
  aux_opts.cross_check = false;
  if (hr.strict) {
    const CyclicSystem scaled = hartman_system(problem, HomotopyFamily::ScaleLast);
    const ExistenceCertificate c2 = certify(scaled, box, TheoremMode::PhiLaplacianScaled, aux_opts);
    AuxiliaryRun run{"scaled path lambda f", c2.verdict, c2.detail, c2.solution ? c2.solution->residual : -1.0, 0.0};
    if (c2.solution && cert.solution) run.distance_to_main = sup_distance(*c2.solution, *cert.solution, m);
    cert.auxiliary.push_back(run);
    if (c2.verdict != cert.verdict) {
      cb.stage("cross_check", "inconclusive", "scaled path verdict differs");
      return cb.conclude(Verdict::Inconclusive, "cross_check",
                         std::string("scaled path verdict ") + to_string(c2.verdict) + " differs from autonomous path");
    }
    cb.stage("cross_check", "pass", std::string("scaled path verdict ") + to_string(c2.verdict));
    return cert;
  }

  // Non-strict condition: perturb to f - eps xi, which is strict, and compare.
  std::vector<PeriodicSolution> sols;
  bool all_ok = true;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    HartmanProblem pe = problem;
    const TimeVecMap fe = [f, eps](double t, const Vec& xi) { return Vec(f(t, xi) - eps * xi); };
    pe.f = fe;
    const CyclicSystem se = hartman_system(pe, HomotopyFamily::Interpolate);
    const ExistenceCertificate ce = certify(se, box, TheoremMode::PhiLaplacianAutonomous, aux_opts);
    AuxiliaryRun run{"eps = " + std::to_string(eps), ce.verdict, ce.detail, ce.solution ? ce.solution->residual : -1.0, 0.0};
    if (ce.solution && cert.solution) run.distance_to_main = sup_distance(*ce.solution, *cert.solution, m);
    cert.auxiliary.push_back(run);
    if (ce.verdict != Verdict::EvidenceSupportsExistence || !ce.solution) {
      all_ok = false;
    } else {
      sols.push_back(*ce.solution);
    }
  }
  std::string detail = all_ok ? "all perturbed problems certified" : "some perturbed problems not certified";
  if (sols.size() == 3) {
    const double d1 = sup_distance(sols[0], sols[1], m);
    const double d2 = sup_distance(sols[1], sols[2], m);
    detail += "; successive distances " + std::to_string(d1) + ", " + std::to_string(d2) +
              (d2 <= d1 ? " (contracting)" : " (not contracting)");
    all_ok = all_ok && d2 <= d1;
  }
  cb.stage("epsilon_perturbation", all_ok ? "pass" : "inconclusive", detail);
  return cert;
}

}  // namespace phicyc
