#include "phicyc/periodic_solver.hpp"

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace phicyc {

const char* to_string(BranchEnd e) {
  switch (e) {
    case BranchEnd::Completed: return "Completed";
    case BranchEnd::BoundaryHit: return "BoundaryHit";
    case BranchEnd::NonConvergence: return "NonConvergence";
  }
  return "Unknown";
}

const char* to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::HarmonicBalance: return "HarmonicBalance";
    case SolverMethod::Shooting: return "Shooting";
    case SolverMethod::Auto: return "Auto";
  }
  return "Unknown";
}

// ---------------------------------------------------------------------------
// PeriodicSolution

PeriodicSolution PeriodicSolution::constant(const Vec& x, double T, int harmonics) {
  PeriodicSolution s;
  s.T = T;
  s.coeffs = Mat::Zero(x.size(), 2 * harmonics + 1);
  s.coeffs.col(0) = x;
  return s;
}

Vec PeriodicSolution::eval(double t) const {
  const double w = 2.0 * std::numbers::pi / T;
  Vec x = coeffs.col(0);
  for (int k = 1; k <= harmonics(); ++k) {
    x += coeffs.col(2 * k - 1) * std::cos(k * w * t) + coeffs.col(2 * k) * std::sin(k * w * t);
  }
  return x;
}

Vec PeriodicSolution::deriv(double t) const {
  const double w = 2.0 * std::numbers::pi / T;
  Vec d = Vec::Zero(coeffs.rows());
  for (int k = 1; k <= harmonics(); ++k) {
    d += k * w * (coeffs.col(2 * k) * std::cos(k * w * t) - coeffs.col(2 * k - 1) * std::sin(k * w * t));
  }
  return d;
}

PeriodicSolution PeriodicSolution::resized(int harmonics_new) const {
  PeriodicSolution s = *this;
  s.samples.resize(0, 0);
  s.sample_derivs.resize(0, 0);
  s.coeffs = Mat::Zero(coeffs.rows(), 2 * harmonics_new + 1);
  const int keep = std::min(static_cast<int>(coeffs.cols()), 2 * harmonics_new + 1);
  s.coeffs.leftCols(keep) = coeffs.leftCols(keep);
  return s;
}

PeriodicSolution PeriodicSolution::shifted(double shift) const {
  PeriodicSolution s = *this;
  s.samples.resize(0, 0);
  s.sample_derivs.resize(0, 0);
  const double w = 2.0 * std::numbers::pi / T;
  for (int k = 1; k <= harmonics(); ++k) {
    const double c = std::cos(k * w * shift);
    const double sn = std::sin(k * w * shift);
    const Vec a = coeffs.col(2 * k - 1);
    const Vec b = coeffs.col(2 * k);
    s.coeffs.col(2 * k - 1) = a * c + b * sn;
    s.coeffs.col(2 * k) = b * c - a * sn;
  }
  return s;
}

namespace {

int grid_size(const PeriodicSolution& sol, int oversample) {
  return std::max(64, oversample * (2 * sol.harmonics() + 1));
}

}  // namespace

void PeriodicSolution::refresh_norms(int m, int oversample) {
  const int blocks = dim() / m;
  sup_norms.assign(static_cast<std::size_t>(blocks), 0.0);
  deriv_sup_norms.assign(static_cast<std::size_t>(blocks), 0.0);
  const bool dense = from_shooting();
  const int count = dense ? static_cast<int>(samples.cols()) : grid_size(*this, oversample);
  for (int j = 0; j < count; ++j) {
    const double t = T * j / count;
    const Vec x = dense ? Vec(samples.col(j)) : eval(t);
    const Vec d = dense ? Vec(sample_derivs.col(j)) : deriv(t);
    for (int i = 0; i < blocks; ++i) {
      auto& s = sup_norms[static_cast<std::size_t>(i)];
      auto& ds = deriv_sup_norms[static_cast<std::size_t>(i)];
      s = std::max(s, x.segment(i * m, m).norm());
      ds = std::max(ds, d.segment(i * m, m).norm());
    }
  }
}

double field_residual(const CyclicSystem& sys, const PeriodicSolution& sol, double param, int samples) {
  const double delta = sys.node_offset(samples);
  double worst = 0.0;
  for (int j = 0; j < samples; ++j) {
    const double t = sys.T * (j + delta) / samples;
    const Vec r = sol.deriv(t) - sys.eval_field(t, sol.eval(t), param);
    worst = std::max(worst, r.lpNorm<Eigen::Infinity>());
  }
  return worst;
}

double box_margin(const FunctionBox& box, const PeriodicSolution& sol, int m) {
  const int blocks = box.n();
  std::vector<double> dist(static_cast<std::size_t>(blocks), 0.0);
  double deriv_sup = 0.0;
  const bool dense = sol.from_shooting();
  const int count = dense ? static_cast<int>(sol.samples.cols()) : grid_size(sol, 16);
  for (int j = 0; j < count; ++j) {
    const double t = sol.T * j / count;
    const Vec x = dense ? Vec(sol.samples.col(j)) : sol.eval(t);
    for (int i = 0; i < blocks; ++i) {
      dist[static_cast<std::size_t>(i)] = std::max(dist[static_cast<std::size_t>(i)],
                                                   box.block_distance(i, x.segment(i * m, m)));
    }
    if (box.derivative_bound) {
      const Vec d = dense ? Vec(sol.sample_derivs.col(j)) : sol.deriv(t);
      deriv_sup = std::max(deriv_sup, d.head(m).norm());
    }
  }
  return box.margin(dist, deriv_sup);
}

// ---------------------------------------------------------------------------
// Harmonic balance

namespace {

struct Collocation {
  int harmonics = 0;
  int nodes = 0;
  double T = 1.0;
  std::vector<double> t;
  Mat to_coeffs;  // nodes x nodes: coefficient k from nodal values
  Mat diff;       // nodes x nodes: derivative values from nodal values

  Collocation(const CyclicSystem& sys, int nh) : harmonics(nh), nodes(2 * nh + 1), T(sys.T) {
    const double delta = sys.node_offset(nodes);
    const double w = 2.0 * std::numbers::pi / T;
    t.resize(static_cast<std::size_t>(nodes));
    for (int j = 0; j < nodes; ++j) t[static_cast<std::size_t>(j)] = T * (j + delta) / nodes;
    to_coeffs = Mat::Zero(nodes, nodes);
    Mat deval = Mat::Zero(nodes, nodes);
    for (int j = 0; j < nodes; ++j) {
      const double tj = t[static_cast<std::size_t>(j)];
      to_coeffs(0, j) = 1.0 / nodes;
      for (int k = 1; k <= nh; ++k) {
        to_coeffs(2 * k - 1, j) = 2.0 / nodes * std::cos(k * w * tj);
        to_coeffs(2 * k, j) = 2.0 / nodes * std::sin(k * w * tj);
        deval(j, 2 * k - 1) = -k * w * std::sin(k * w * tj);
        deval(j, 2 * k) = k * w * std::cos(k * w * tj);
      }
    }
    diff = deval * to_coeffs;
  }

  Mat coeffs_of(const Mat& values) const { return values * to_coeffs.transpose(); }  // dim x nodes

  Mat values_of(const PeriodicSolution& s) const {
    Mat v(s.dim(), nodes);
    for (int j = 0; j < nodes; ++j) v.col(j) = s.eval(t[static_cast<std::size_t>(j)]);
    return v;
  }
};

bool is_domain_error(const Error& e) {
  return e.kind() == ErrorKind::DomainViolation || e.kind() == ErrorKind::CodomainViolation;
}

/// Residual at the nodes, dim x nodes.
Mat node_residual(const CyclicSystem& sys, const Collocation& col, const Mat& values, double param) {
  Mat r = values * col.diff.transpose();
  for (int j = 0; j < col.nodes; ++j) r.col(j) -= sys.eval_field(col.t[static_cast<std::size_t>(j)], values.col(j), param);
  return r;
}

Vec flatten(const Mat& m) { return Eigen::Map<const Vec>(m.data(), m.size()); }
Mat unflatten(const Vec& v, int rows, int cols) { return Eigen::Map<const Mat>(v.data(), rows, cols); }

PeriodicSolution make_solution(const CyclicSystem& sys, const Collocation& col, const Mat& values, double param) {
  PeriodicSolution s;
  s.T = sys.T;
  s.param = param;
  s.coeffs = col.coeffs_of(values);
  return s;
}

struct NewtonOutcome {
  Mat values;
  double node_residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  bool converged = false;
  std::string reason;
};

NewtonOutcome newton_collocation(const CyclicSystem& sys, const Collocation& col, Mat values, double param,
                                 const SolverOptions& opts) {
  const int dim = sys.dim();
  const int N = dim * col.nodes;
  NewtonOutcome out;
  Mat r = node_residual(sys, col, values, param);
  double rnorm = r.lpNorm<Eigen::Infinity>();
  out.values = values;
  out.node_residual = rnorm;
  // Kronecker part of the Jacobian, fixed per level. Layout: node-major,
  // index j * dim + c.
  Mat jac_d = Mat::Zero(N, N);
  for (int j = 0; j < col.nodes; ++j) {
    for (int l = 0; l < col.nodes; ++l) {
      const double v = col.diff(j, l);
      if (v == 0.0) continue;
      for (int c = 0; c < dim; ++c) jac_d(j * dim + c, l * dim + c) = v;
    }
  }
  const double target = 0.1 * opts.tol;
  for (int it = 0; it < opts.max_iter; ++it) {
    if (rnorm <= target) {
      out.converged = true;
      return out;
    }
    Mat jac = jac_d;
    const Mat dvals = values * col.diff.transpose();
    for (int j = 0; j < col.nodes; ++j) {
      const double tj = col.t[static_cast<std::size_t>(j)];
      const VecMap fj = [&](const Vec& x) { return sys.eval_field(tj, x, param); };
      const Vec fx = dvals.col(j) - r.col(j);
      jac.block(j * dim, j * dim, dim, dim) -= fd_jacobian(fj, values.col(j), &fx);
    }
    const Vec rflat = flatten(r);
    Eigen::PartialPivLU<Mat> lu(jac);
    Vec step = lu.solve(-rflat);
    if (!step.allFinite() || (jac * step + rflat).norm() > 1e-6 * (1.0 + rflat.norm())) {
      step = jac.completeOrthogonalDecomposition().solve(-rflat);
    }
    if (!step.allFinite()) {
      out.reason = "singular collocation Jacobian";
      return out;
    }
    const double f0 = rflat.squaredNorm();
    double alpha = 1.0;
    bool accepted = false;
    Mat trial_values;
    Mat trial_r;
    while (alpha >= 1e-10) {
      trial_values = values + alpha * unflatten(step, dim, col.nodes);
      try {
        trial_r = node_residual(sys, col, trial_values, param);
      } catch (const Error& e) {
        if (!is_domain_error(e)) throw;
        alpha *= 0.5;
        continue;
      }
      const double f1 = flatten(trial_r).squaredNorm();
      if (std::isfinite(f1) && f1 <= (1.0 - 2e-4 * alpha) * f0) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    out.iterations = it + 1;
    if (!accepted) {
      out.reason = "line search failed";
      return out;
    }
    values = trial_values;
    r = trial_r;
    rnorm = r.lpNorm<Eigen::Infinity>();
    if (rnorm < out.node_residual) {
      out.node_residual = rnorm;
      out.values = values;
    }
  }
  out.converged = rnorm <= target;
  if (!out.converged) out.reason = "iteration cap reached";
  return out;
}

PeriodicSolution solve_harmonic_balance(const CyclicSystem& sys, double param, const PeriodicSolution& guess,
                                        const SolverOptions& opts) {
  int nh = std::max({1, opts.harmonics, guess.harmonics()});
  PeriodicSolution current = guess;
  current.T = sys.T;
  PeriodicSolution best = guess;
  best.param = param;
  best.residual = std::numeric_limits<double>::infinity();
  for (;;) {
    const Collocation col(sys, nh);
    Mat values = col.values_of(current);
    NewtonOutcome res;
    try {
      res = newton_collocation(sys, col, values, param, opts);
    } catch (const Error& e) {
      if (is_domain_error(e)) throw SolveFailure(ErrorKind::DomainViolation, e.what(), best);
      throw;
    }
    PeriodicSolution sol = make_solution(sys, col, res.values, param);
    sol.iterations = res.iterations;
    double fine = std::numeric_limits<double>::infinity();
    try {
      fine = field_residual(sys, sol, param, 16 * col.nodes);
    } catch (const Error& e) {
      if (!is_domain_error(e)) throw;
    }
    sol.residual = std::max(res.node_residual, fine);
    sol.refresh_norms(sys.m);
    if (sol.residual < best.residual) best = sol;
    if (!res.converged) {
      throw SolveFailure(ErrorKind::NonConvergence,
                         "solve_periodic: Newton failed at N_h = " + std::to_string(nh) + " (" + res.reason + ")",
                         best);
    }
    if (sol.residual <= opts.tol) return sol;
    if (!opts.adapt_harmonics || 2 * nh > opts.max_harmonics) {
      throw SolveFailure(ErrorKind::NonConvergence,
                         "solve_periodic: residual " + std::to_string(sol.residual) +
                             " above tolerance at the harmonic cap",
                         best);
    }
    nh *= 2;
    current = sol.resized(nh);
  }
}

// ---------------------------------------------------------------------------
// Shooting

using State = std::vector<double>;

/// x(t1; t0, x0) at `param`. With `sample_count` > 0 also records the orbit
/// and field at t0 + j (t1 - t0) / sample_count, j < sample_count, into the
/// columns of `samples` / `derivs` starting at `offset`.
Vec flow(const CyclicSystem& sys, double param, const Vec& x0, double t0, double t1, const ShootingOptions& opts,
         int sample_count = 0, Mat* samples = nullptr, Mat* derivs = nullptr, int offset = 0) {
  namespace odeint = boost::numeric::odeint;
  const int dim = sys.dim();
  State x(x0.data(), x0.data() + dim);
  auto rhs = [&](const State& s, State& dsdt, double t) {
    const Vec f = sys.eval_field(t, Eigen::Map<const Vec>(s.data(), dim), param);
    dsdt.assign(f.data(), f.data() + dim);
  };
  const double h0 = std::min(opts.initial_step, t1 - t0);
  try {
    if (sample_count > 0) {
      std::vector<double> times(static_cast<std::size_t>(sample_count) + 1);
      for (int j = 0; j <= sample_count; ++j) times[static_cast<std::size_t>(j)] = t0 + (t1 - t0) * j / sample_count;
      times.back() = t1;
      int idx = 0;
      auto observer = [&](const State& s, double t) {
        if (idx < sample_count) {
          const Eigen::Map<const Vec> xs(s.data(), dim);
          samples->col(offset + idx) = xs;
          derivs->col(offset + idx) = sys.eval_field(t, xs, param);
        }
        ++idx;
      };
      auto stepper = odeint::make_dense_output(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_dopri5<State>());
      odeint::integrate_times(stepper, rhs, x, times.begin(), times.end(), h0, observer);
    } else {
      auto stepper = odeint::make_controlled(opts.abs_tol, opts.rel_tol, odeint::runge_kutta_dopri5<State>());
      odeint::integrate_adaptive(stepper, rhs, x, t0, t1, h0);
    }
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    fail(ErrorKind::IntegratorFailure, std::string("shooting: ") + e.what());
  }
  const Vec xT = Eigen::Map<const Vec>(x.data(), dim);
  if (!xT.allFinite()) fail(ErrorKind::IntegratorFailure, "shooting: non-finite state");
  return xT;
}

bool is_flow_failure(const Error& e) { return is_domain_error(e) || e.kind() == ErrorKind::IntegratorFailure; }

int shooting_segments(const ShootingOptions& o) { return std::max(1, o.segments); }

/// Multiple shooting: unknowns x_k = x(k T / K), equations
/// x(t_{k+1}; t_k, x_k) - x_{k+1} = 0 (cyclically).
PeriodicSolution solve_shooting(const CyclicSystem& sys, double param, const PeriodicSolution& guess,
                                const SolverOptions& opts) {
  const int dim = sys.dim();
  const ShootingOptions& so = opts.shooting;
  const int K = shooting_segments(so);
  const int N = dim * K;
  auto tk = [&](int k) { return sys.T * k / K; };
  Vec X(N);
  for (int k = 0; k < K; ++k) {
    X.segment(k * dim, dim) = guess.from_shooting() && guess.samples.cols() % K == 0
                                  ? Vec(guess.samples.col(k * (guess.samples.cols() / K)))
                                  : guess.eval(tk(k));
  }
  PeriodicSolution best = PeriodicSolution::constant(X.head(dim), sys.T, 0);
  best.param = param;
  auto residual = [&](const Vec& Y) {
    Vec R(N);
    for (int k = 0; k < K; ++k) {
      const int next = (k + 1) % K;
      R.segment(k * dim, dim) = flow(sys, param, Y.segment(k * dim, dim), tk(k), tk(k + 1), so) -
                                Y.segment(next * dim, dim);
    }
    return R;
  };
  auto domain_failure = [&](const Error& e) {
    return SolveFailure(ErrorKind::DomainViolation, std::string("shooting: ") + e.what(), best);
  };

  Vec R;
  try {
    R = residual(X);
  } catch (const Error& e) {
    if (!is_flow_failure(e)) throw;
    throw domain_failure(e);
  }
  double rn = R.lpNorm<Eigen::Infinity>();
  const double target = 0.5 * opts.tol;
  // Forward-difference Jacobian, kept while Newton contracts by 4x per step.
  auto jacobian = [&]() {
    Mat J = Mat::Zero(N, N);
    for (int k = 0; k < K; ++k) {
      const int next = (k + 1) % K;
      const Vec xk = X.segment(k * dim, dim);
      const Vec end = R.segment(k * dim, dim) + X.segment(next * dim, dim);
      for (int j = 0; j < dim; ++j) {
        const double h = 1e-7 * (1.0 + std::abs(xk(j)));
        Vec xp = xk;
        xp(j) += h;
        J.block(k * dim, k * dim + j, dim, 1) = (flow(sys, param, xp, tk(k), tk(k + 1), so) - end) / h;
      }
      J.block(k * dim, next * dim, dim, dim) -= Mat::Identity(dim, dim);
    }
    return Eigen::FullPivLU<Mat>(J);
  };
  std::optional<Eigen::FullPivLU<Mat>> lu;
  int it = 0;
  double stall_ref = rn;
  int stall_count = 0;
  for (; it < opts.max_iter && rn > target; ++it) {
    const bool fresh = !lu;
    try {
      if (!lu) lu = jacobian();
    } catch (const Error& e) {
      if (!is_flow_failure(e)) throw;
      throw domain_failure(e);
    }
    const Vec step = lu->solve(-R);
    bool accepted = false;
    double alpha = 1.0;
    if (step.allFinite()) {
      const double f0 = R.squaredNorm();
      while (alpha >= (fresh ? 1e-10 : 0.25)) {
        const Vec Xt = X + alpha * step;
        Vec Rt;
        try {
          Rt = residual(Xt);
        } catch (const Error& e) {
          if (!is_flow_failure(e)) throw;
          alpha *= 0.5;
          continue;
        }
        if (Rt.squaredNorm() <= (1.0 - 2e-4 * alpha) * f0) {
          X = Xt;
          R = Rt;
          accepted = true;
          break;
        }
        alpha *= 0.5;
      }
    }
    if (!accepted) {
      if (fresh) break;
      lu.reset();
      continue;
    }
    const double rn_new = R.lpNorm<Eigen::Infinity>();
    if (!(alpha == 1.0 && rn_new < 0.25 * rn)) lu.reset();
    rn = rn_new;
    // No halving of the mismatch in 10 accepted steps: a creeping start.
    if (rn < 0.5 * stall_ref) {
      stall_ref = rn;
      stall_count = 0;
    } else if (++stall_count >= 10) {
      break;
    }
  }

  // Dense orbit, segment by segment; the residual is the largest end mismatch.
  const int nh = std::max(opts.harmonics, opts.max_harmonics);
  const int per_segment = (16 * (2 * nh + 1) + K - 1) / K;
  const int total = per_segment * K;
  PeriodicSolution sol;
  sol.T = sys.T;
  sol.param = param;
  sol.iterations = it;
  sol.samples.resize(dim, total);
  sol.sample_derivs.resize(dim, total);
  sol.residual = 0.0;
  try {
    for (int k = 0; k < K; ++k) {
      const Vec end = flow(sys, param, X.segment(k * dim, dim), tk(k), tk(k + 1), so, per_segment, &sol.samples,
                           &sol.sample_derivs, k * per_segment);
      sol.residual = std::max(sol.residual, (end - X.segment(((k + 1) % K) * dim, dim)).lpNorm<Eigen::Infinity>());
    }
  } catch (const Error& e) {
    if (!is_flow_failure(e)) throw;
    throw domain_failure(e);
  }
  // Discrete Fourier projection of the equispaced samples.
  const double w = 2.0 * std::numbers::pi / sys.T;
  sol.coeffs = Mat::Zero(dim, 2 * nh + 1);
  for (int j = 0; j < total; ++j) {
    const Vec xj = sol.samples.col(j);
    const double tj = sys.T * j / total;
    sol.coeffs.col(0) += xj / total;
    for (int k = 1; k <= nh; ++k) {
      sol.coeffs.col(2 * k - 1) += 2.0 / total * std::cos(k * w * tj) * xj;
      sol.coeffs.col(2 * k) += 2.0 / total * std::sin(k * w * tj) * xj;
    }
  }
  sol.refresh_norms(sys.m);
  if (!(sol.residual <= opts.tol)) {
    throw SolveFailure(ErrorKind::NonConvergence,
                       "shooting: segment mismatch " + std::to_string(sol.residual) + " above tolerance", sol);
  }
  return sol;
}

}  // namespace

PeriodicSolution solve_periodic(const CyclicSystem& sys, double param, const PeriodicSolution& guess,
                                const SolverOptions& opts) {
  if (guess.dim() != sys.dim()) fail(ErrorKind::InvalidArgument, "solve_periodic: guess has wrong dimension");
  if (!(opts.tol > 0.0)) fail(ErrorKind::InvalidArgument, "solve_periodic: tol must be positive");
  if (opts.method == SolverMethod::Shooting) return solve_shooting(sys, param, guess, opts);
  try {
    return solve_harmonic_balance(sys, param, guess, opts);
  } catch (const SolveFailure& hb) {
    if (opts.method != SolverMethod::Auto) throw;
    try {
      return solve_shooting(sys, param, std::isfinite(hb.best().residual) ? hb.best() : guess, opts);
    } catch (const SolveFailure& sh) {
      const PeriodicSolution& b = sh.best().residual < hb.best().residual ? sh.best() : hb.best();
      throw SolveFailure(hb.kind(), std::string(hb.what()) + "; " + sh.what(), b);
    }
  }
}

PeriodicSolution solve_periodic(const CyclicSystem& sys, double param, const Vec& constant_guess,
                                const SolverOptions& opts) {
  return solve_periodic(sys, param, PeriodicSolution::constant(constant_guess, sys.T, opts.harmonics), opts);
}

// ---------------------------------------------------------------------------
// Continuation

BranchLog continuation_sweep(const CyclicSystem& sys, const std::vector<double>& params,
                             const FunctionBox& box, const PeriodicSolution& start, const SweepOptions& opts) {
  if (params.empty()) fail(ErrorKind::InvalidArgument, "continuation_sweep: empty parameter grid");
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!(params[i] >= 0.0 && params[i] <= 1.0)) {
      fail(ErrorKind::InvalidArgument, "continuation_sweep: parameters must lie in [0, 1]");
    }
    if (i > 0 && !(params[i] > params[i - 1])) {
      fail(ErrorKind::InvalidArgument, "continuation_sweep: parameters must be strictly increasing");
    }
  }
  box.validate(sys.n, sys.m);
  BranchLog log;
  auto record = [&](const PeriodicSolution& sol) {
    const double margin = box_margin(box, sol, sys.m);
    log.entries.push_back({sol.param, sol, margin});
    if (!(margin > 0.0)) {
      log.end = BranchEnd::BoundaryHit;
      log.failed_param = sol.param;
      log.detail = "branch left the box interior at param " + std::to_string(sol.param) +
                   " (margin " + std::to_string(margin) + ")";
      return false;
    }
    return true;
  };

  PeriodicSolution current;
  try {
    current = solve_periodic(sys, params.front(), start, opts.solver);
  } catch (const Error& e) {
    log.end = BranchEnd::NonConvergence;
    log.failed_param = params.front();
    log.detail = e.what();
    return log;
  }
  if (!record(current)) return log;

  for (std::size_t i = 1; i < params.size(); ++i) {
    const double target = params[i];
    double step = target - current.param;
    int bisections = 0;
    while (current.param < target) {
      const double q = std::min(target, current.param + step);
      try {
        PeriodicSolution next = solve_periodic(sys, q, current, opts.solver);
        next.param = q;
        current = std::move(next);
        if (!record(current)) return log;
        step = std::min(2.0 * step, target - current.param);
      } catch (const Error& e) {
        step *= 0.5;
        ++bisections;
        if (step < opts.min_step || bisections > opts.max_bisections) {
          log.end = BranchEnd::NonConvergence;
          log.failed_param = q;
          log.detail = e.what();
          return log;
        }
      }
    }
  }
  log.end = BranchEnd::Completed;
  return log;
}

// ---------------------------------------------------------------------------
// Averaged start

namespace {

struct ZeroSearch {
  std::optional<Vec> zero;
  double residual = std::numeric_limits<double>::infinity();
};

ZeroSearch damped_newton(const VecMap& F, Vec x, const RegionBox& region, double tol, int max_iter) {
  ZeroSearch out;
  Vec fx = F(x);
  double fn = fx.norm();
  out.residual = fn;
  for (int it = 0; it < max_iter; ++it) {
    if (!std::isfinite(fn)) return out;
    if (fn <= tol) {
      if (region.contains(x)) out.zero = x;
      return out;
    }
    const Mat J = fd_jacobian(F, x, &fx);
    const Vec dx = J.colPivHouseholderQr().solve(-fx);
    if (!dx.allFinite()) return out;
    double alpha = 1.0;
    bool ok = false;
    while (alpha > 1e-8) {
      const Vec xn = x + alpha * dx;
      Vec fn_vec;
      try {
        fn_vec = F(xn);
      } catch (const Error&) {
        alpha *= 0.5;
        continue;
      }
      const double nn = fn_vec.norm();
      if (std::isfinite(nn) && nn <= (1.0 - 1e-4 * alpha) * fn) {
        x = xn;
        fx = fn_vec;
        fn = nn;
        ok = true;
        break;
      }
      alpha *= 0.5;
    }
    out.residual = std::min(out.residual, fn);
    if (!ok) break;
  }
  if (fn <= tol && region.contains(x)) out.zero = x;
  return out;
}

std::vector<Vec> lattice_starts(const RegionBox& region, int per_axis) {
  const int k = region.dim();
  std::vector<Vec> starts{region.center()};
  int total = 1;
  for (int j = 0; j < k; ++j) total *= per_axis;
  const Vec extent = region.is_ball() ? Vec::Constant(k, region.radius() / std::sqrt(double(k)))
                                      : region.half_widths();
  for (int idx = 0; idx < total; ++idx) {
    Vec u(k);
    int rem = idx;
    for (int j = 0; j < k; ++j) {
      const int a = rem % per_axis;
      rem /= per_axis;
      u(j) = per_axis == 1 ? 0.0 : -0.8 + 1.6 * a / (per_axis - 1);
    }
    starts.push_back(region.center() + extent.cwiseProduct(u));
  }
  return starts;
}

}  // namespace

PeriodicSolution start_from_averaged(const CyclicSystem& sys, const FunctionBox& box, const StartOptions& opts) {
  box.validate(sys.n, sys.m);
  const bool reduced = sys.g_vanish_at_zero();
  VecMap F;
  RegionBox region = reduced ? box.block_region(0) : box.trace_region();
  if (reduced) {
    if (opts.autonomous) {
      F = [&](const Vec& w) { return sys.reduced_field_autonomous(w); };
    } else {
      F = [&](const Vec& w) { return sys.reduced_field(w, opts.quad); };
    }
  } else if (opts.autonomous) {
    F = [&](const Vec& s) { return sys.g_hat_autonomous(s); };
  } else {
    F = [&](const Vec& s) { return sys.g_hat(s, opts.quad); };
  }
  const int per_axis = region.dim() > 2 ? std::min(3, opts.starts_per_axis) : opts.starts_per_axis;
  double best_residual = std::numeric_limits<double>::infinity();
  std::optional<Vec> chosen;
  double chosen_dist = std::numeric_limits<double>::infinity();
  for (const Vec& x0 : lattice_starts(region, per_axis)) {
    ZeroSearch z;
    try {
      z = damped_newton(F, x0, region, opts.tol, opts.max_iter);
    } catch (const Error& e) {
      if (!is_domain_error(e)) throw;
      continue;
    }
    best_residual = std::min(best_residual, z.residual);
    if (z.zero) {
      const double d = (*z.zero - region.center()).norm();
      if (d < chosen_dist - 1e-12) {
        chosen = z.zero;
        chosen_dist = d;
      }
    }
  }
  if (!chosen) {
    fail(ErrorKind::NoZeroFound,
         std::string(reduced ? "reduced" : "averaged") + " field has no zero found in the box; min |F| sampled = " +
             std::to_string(best_residual),
         best_residual);
  }
  Vec x = Vec::Zero(sys.dim());
  if (reduced) {
    x.head(sys.m) = *chosen;
  } else {
    x = *chosen;
  }
  PeriodicSolution s = PeriodicSolution::constant(x, sys.T, 0);
  s.param = 0.0;
  s.residual = F(*chosen).norm();
  s.refresh_norms(sys.m);
  return s;
}

double cross_validate_shooting(const CyclicSystem& sys, const PeriodicSolution& sol, const ShootingOptions& opts) {
  const Vec x0 = sol.from_shooting() ? Vec(sol.samples.col(0)) : sol.eval(0.0);
  return (flow(sys, sol.param, x0, 0.0, sys.T, opts) - x0).norm();
}

double segment_defect(const CyclicSystem& sys, const PeriodicSolution& sol, const ShootingOptions& opts) {
  if (!sol.from_shooting()) fail(ErrorKind::InvalidArgument, "segment_defect: not a shooting solution");
  const int K = shooting_segments(opts);
  const auto cols = static_cast<int>(sol.samples.cols());
  if (cols % K != 0) fail(ErrorKind::InvalidArgument, "segment_defect: segment count does not match the samples");
  const int per = cols / K;
  double worst = 0.0;
  for (int k = 0; k < K; ++k) {
    const Vec end = flow(sys, sol.param, sol.samples.col(k * per), sys.T * k / K, sys.T * (k + 1) / K, opts);
    worst = std::max(worst, (end - sol.samples.col(((k + 1) % K) * per)).lpNorm<Eigen::Infinity>());
  }
  return worst;
}

}  // namespace phicyc
