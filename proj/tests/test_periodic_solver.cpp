#include "phicyc/periodic_solver.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace phicyc;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v1(double a) { return Vec::Constant(1, a); }

/// x' = -x + cos(w t), T = 2 pi / w.
CyclicSystem linear_scalar(double T) {
  CyclicSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.T = T;
  sys.h = [T](double t, const Vec& x) { return v1(-x(0) + std::cos(2 * kPi * t / T)); };
  sys.validate();
  return sys;
}

double linear_scalar_exact(double t, double T) {
  const double w = 2 * kPi / T;
  return (std::cos(w * t) + w * std::sin(w * t)) / (1 + w * w);
}

/// u'' + 0.5 u' + u = cos(pi t) as a phi-Laplacian system with phi = id.
CyclicSystem forced_oscillator() {
  return from_phi_laplacian(
      PhiOperator::identity(1),
      [](double t, const Vec& u, const Vec& v) { return Vec(0.5 * v + u - v1(std::cos(kPi * t))); }, 2.0);
}

/// Steady state A cos(pi t) + B sin(pi t).
std::pair<double, double> forced_oscillator_exact() {
  const double w = kPi;
  const double a = 1 - w * w;
  const double b = 0.5 * w;
  const double det = a * a + b * b;
  return {a / det, b / det};
}

double max_error(const PeriodicSolution& sol, const std::function<double(double)>& exact, int samples = 400) {
  double err = 0.0;
  for (int k = 0; k < samples; ++k) {
    const double t = sol.T * k / samples;
    err = std::max(err, std::abs(sol.eval(t)(0) - exact(t)));
  }
  return err;
}

}  // namespace

TEST_CASE("Fourier representation") {
  PeriodicSolution s = PeriodicSolution::constant(v1(2.0), 1.0, 3);
  CHECK(s.harmonics() == 3);
  CHECK(s.eval(0.3)(0) == doctest::Approx(2.0));
  CHECK(s.deriv(0.3)(0) == doctest::Approx(0.0));
  s.coeffs(0, 1) = 1.0;  // cos(2 pi t)
  CHECK(s.eval(0.25)(0) == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.deriv(0.25)(0) == doctest::Approx(-2 * kPi));
  const PeriodicSolution sh = s.shifted(0.25);
  CHECK(sh.eval(0.0)(0) == doctest::Approx(s.eval(0.25)(0)));
  const PeriodicSolution r = s.resized(6);
  CHECK(r.harmonics() == 6);
  CHECK(r.eval(0.1)(0) == doctest::Approx(s.eval(0.1)(0)));
  s.refresh_norms(1);
  CHECK(s.sup_norms[0] == doctest::Approx(3.0));
  CHECK(s.deriv_sup_norms[0] == doctest::Approx(2 * kPi).epsilon(1e-3));
}

TEST_CASE("harmonic balance on the forced linear equation") {
  const double T = 1.5;
  const CyclicSystem sys = linear_scalar(T);
  SolverOptions o;
  o.method = SolverMethod::HarmonicBalance;
  o.tol = 1e-11;
  const PeriodicSolution sol = solve_periodic(sys, 1.0, v1(0.0), o);
  CHECK(sol.residual <= o.tol);
  CHECK(!sol.from_shooting());
  CHECK(max_error(sol, [T](double t) { return linear_scalar_exact(t, T); }) <= 1e-9);
  CHECK(cross_validate_shooting(sys, sol) <= 1e-8);
  CHECK(field_residual(sys, sol, 1.0, 256) <= 1e-9);
}

TEST_CASE("multiple shooting on the forced linear equation") {
  const double T = 1.5;
  const CyclicSystem sys = linear_scalar(T);
  SolverOptions o;
  o.method = SolverMethod::Shooting;
  o.tol = 1e-10;
  const PeriodicSolution sol = solve_periodic(sys, 1.0, v1(0.3), o);
  CHECK(sol.from_shooting());
  CHECK(sol.residual <= o.tol);
  CHECK(segment_defect(sys, sol, o.shooting) <= o.tol);
  double err = 0.0;
  for (Eigen::Index j = 0; j < sol.samples.cols(); ++j) {
    const double t = T * static_cast<double>(j) / static_cast<double>(sol.samples.cols());
    err = std::max(err, std::abs(sol.samples(0, j) - linear_scalar_exact(t, T)));
  }
  CHECK(err <= 1e-9);
  // the Fourier projection of the samples reproduces the orbit
  CHECK(max_error(sol, [T](double t) { return linear_scalar_exact(t, T); }) <= 1e-9);
}

TEST_CASE("forced oscillator through both solvers") {
  const CyclicSystem sys = forced_oscillator();
  const auto [A, B] = forced_oscillator_exact();
  const auto exact = [A = A, B = B](double t) { return A * std::cos(kPi * t) + B * std::sin(kPi * t); };
  for (SolverMethod method : {SolverMethod::HarmonicBalance, SolverMethod::Shooting}) {
    SolverOptions o;
    o.method = method;
    o.tol = 1e-10;
    const PeriodicSolution sol = solve_periodic(sys, 1.0, Vec::Zero(2), o);
    CHECK(max_error(sol, exact) <= 1e-8);
    // sampled sup norm
    CHECK(sol.sup_norms[0] == doctest::Approx(std::hypot(A, B)).epsilon(1e-3));
    CHECK(sol.sup_norms[0] <= std::hypot(A, B) + 1e-9);
  }
}

TEST_CASE("failures carry the best iterate") {
  CyclicSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.T = 1.0;
  sys.h = [](double, const Vec&) { return v1(1.0); };  // no periodic solution
  SolverOptions o;
  o.max_iter = 10;
  o.max_harmonics = 8;
  try {
    solve_periodic(sys, 1.0, v1(0.0), o);
    FAIL("solved an equation without periodic solutions");
  } catch (const SolveFailure& e) {
    CHECK(e.best().residual > 0.01);
  }
  CHECK_THROWS_AS(solve_periodic(sys, 1.0, Vec::Zero(2), o), Error);
}

TEST_CASE("continuation along the scaled family") {
  const CyclicSystem sys = forced_oscillator();
  const FunctionBox box = FunctionBox::uniform(2, 1, 1.0);
  const PeriodicSolution start = start_from_averaged(sys, box);
  CHECK(start.eval(0.0).norm() < 1e-9);
  const BranchLog log = continuation_sweep(sys, {0.01, 0.25, 0.5, 1.0}, box, start);
  CHECK(log.end == BranchEnd::Completed);
  REQUIRE(log.entries.size() >= 4);
  // u'' + 0.5 s u' + s u = s cos(pi t) at scale s
  const double th = 0.5;
  const double amp = th / std::hypot(th - kPi * kPi, 0.5 * th * kPi);
  const PeriodicSolution& half = log.entries[2].solution;
  CHECK(half.param == doctest::Approx(th));
  CHECK(half.sup_norms[0] == doctest::Approx(amp).epsilon(1e-3));
  for (const auto& e : log.entries) CHECK(e.boundary_margin > 0.0);
}

TEST_CASE("continuation stops at the box boundary") {
  const CyclicSystem sys = forced_oscillator();
  FunctionBox box = FunctionBox::uniform(2, 1, 1.0);
  box.blocks[0].radius = 0.05;
  const PeriodicSolution start = start_from_averaged(sys, box);
  const BranchLog log = continuation_sweep(sys, {0.01, 0.25, 0.5, 1.0}, box, start);
  CHECK(log.end == BranchEnd::BoundaryHit);
  CHECK(log.failed_param == doctest::Approx(0.5));
  CHECK(box_margin(box, log.entries.back().solution, 1) <= 0.0);
}

TEST_CASE("continuation rejects bad grids") {
  const CyclicSystem sys = forced_oscillator();
  const FunctionBox box = FunctionBox::uniform(2, 1, 1.0);
  const PeriodicSolution start = PeriodicSolution::constant(Vec::Zero(2), 2.0, 4);
  CHECK_THROWS_AS(continuation_sweep(sys, {0.5, 0.25}, box, start), Error);
  CHECK_THROWS_AS(continuation_sweep(sys, {0.5, 1.5}, box, start), Error);
  CHECK_THROWS_AS(continuation_sweep(sys, {}, box, start), Error);
}

TEST_CASE("averaged start without zeros") {
  CyclicSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.T = 1.0;
  sys.g = {[](const Vec& y) { return y; }};
  sys.h = [](double t, const Vec&) { return v1(1.0 + 0.5 * std::cos(2 * kPi * t)); };
  try {
    start_from_averaged(sys, FunctionBox::uniform(2, 1, 1.0));
    FAIL("found a zero of a zero-free field");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NoZeroFound);
  }
}
