#include "phicyc/certifier.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace phicyc;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v1(double a) { return Vec::Constant(1, a); }

CyclicSystem forced_oscillator() {
  return from_phi_laplacian(
      PhiOperator::identity(1),
      [](double t, const Vec& u, const Vec& v) { return Vec(0.5 * v + u - v1(std::cos(kPi * t))); }, 2.0);
}

/// Amplitude of the scaled-family response u'' + 0.5 s u' + s u = s cos(pi t).
double scaled_amplitude(double s) { return s / std::hypot(s - kPi * kPi, 0.5 * s * kPi); }

CertifyOptions quick_options() {
  CertifyOptions o;
  o.sweep.solver.tol = 1e-10;
  o.fixed_clock = true;
  return o;
}

}  // namespace

TEST_CASE("Hartman condition sampling") {
  const TimeVecMap inward = [](double, const Vec& u) { return Vec(-u); };
  HartmanReport r = hartman_check(inward, 2, 2.0, 1.0);
  CHECK(r.passed);
  CHECK(r.strict);
  CHECK(r.max_inner == doctest::Approx(-4.0));

  const TimeVecMap zero = [](double, const Vec& u) { return Vec(Vec::Zero(u.size())); };
  r = hartman_check(zero, 3, 1.0, 1.0);
  CHECK(r.passed);
  CHECK(!r.strict);

  const TimeVecMap outward = [](double t, const Vec& u) {
    Vec f = -u;
    f(0) += 2.0 * std::cos(2 * kPi * t);
    return f;
  };
  r = hartman_check(outward, 2, 1.0, 1.0);
  CHECK(!r.passed);
  REQUIRE(r.witness.has_value());
  CHECK(r.max_inner == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(std::abs(r.witness->second.norm() - 1.0) < 1e-12);
}

TEST_CASE("a-priori derivative bound for the identity operator") {
  const FamilyMap f = [](double, const Vec& xi, double) { return Vec(-xi); };
  for (int m : {1, 2}) {
    const AprioriBound b = apriori_bound(PhiOperator::identity(m), f, 1.0, 1.0);
    CHECK(std::abs(b.C_d - 1.0) < 1e-6);
    CHECK(std::abs(b.L_d - 1.0) < 1e-6);
    CHECK(std::abs(b.K_d - 1.0) < 1e-6);
    // phi^{-1}(B[0, K + T C]) = B[0, 2]
    CHECK(b.M_d >= 2.0);
    CHECK(b.M_d <= 2.0 + 1e-6);
  }
  const AprioriBound b1 = apriori_bound(PhiOperator::identity(1), f, 1.0, 1.0);
  const AprioriBound b2 = apriori_bound(PhiOperator::identity(1), f, 1.0, 2.0);
  CHECK(b2.M_d >= b1.M_d);
  CHECK(std::abs(b2.M_d - 3.0) < 1e-6);
}

TEST_CASE("a-priori bound for the p-Laplacian") {
  // f = -xi on B[0, 2]: C = 2, <|x| x, x> = |x|^3 > 4 gives L = 4^(1/3), K = L^2,
  // M = sqrt(K + T C)
  const FamilyMap f = [](double, const Vec& xi, double) { return Vec(-xi); };
  const AprioriBound b = apriori_bound(PhiOperator::p_laplacian(2, 3.0), f, 2.0, 1.0);
  const double L = std::cbrt(4.0);
  CHECK(b.C_d == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(b.L_d == doctest::Approx(L).epsilon(1e-6));
  CHECK(b.K_d == doctest::Approx(L * L).epsilon(1e-6));
  CHECK(b.M_d >= std::sqrt(L * L + 2.0));
  CHECK(b.M_d <= std::sqrt(L * L + 2.0) + 1e-6);
}

TEST_CASE("boundary falsification finds the tight-box crossing") {
  const CyclicSystem sys = forced_oscillator();
  FunctionBox box = FunctionBox::uniform(2, 1, 2.0);
  box.blocks[0].radius = 0.05;
  MultistartPlan plan;
  plan.lattice_per_axis = 2;
  plan.boundary_seeds = 2;
  plan.random_seeds = 2;
  FalsifyOptions fo;
  fo.solver.tol = 1e-10;
  const BoundaryEvidence ev = falsify_boundary(sys, box, {0.01, 0.25, 0.5, 0.75, 1.0}, plan, fo);
  REQUIRE(ev.witness.has_value());
  // amplitude(s) = 0.05, located by bisection on the closed form
  double lo = 0.25;
  double hi = 0.5;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    (scaled_amplitude(mid) < 0.05 ? lo : hi) = mid;
  }
  CHECK(ev.witness->param == doctest::Approx(lo).epsilon(1e-4));
  CHECK(std::abs(ev.witness->margin) <= 1e-6 * 2.0);
  CHECK(ev.converged > 0);
}

TEST_CASE("certify: evidence, boundary and degree verdicts") {
  const CyclicSystem sys = forced_oscillator();
  FunctionBox box = FunctionBox::uniform(2, 1, 1.0);
  box.blocks[1].radius = 2.0;
  ExistenceCertificate ok = certify(sys, box, TheoremMode::PhiLaplacianScaled, quick_options());
  CHECK(ok.verdict == Verdict::EvidenceSupportsExistence);
  REQUIRE(ok.solution.has_value());
  CHECK(ok.solution->residual <= 1e-10);
  CHECK(ok.solution_margin > 0.0);
  REQUIRE(ok.assembled_degree.has_value());
  CHECK(*ok.assembled_degree != 0);
  for (const auto& s : ok.stages) CHECK(s.seconds == 0.0);

  box.blocks[0].radius = 0.05;
  const ExistenceCertificate tight = certify(sys, box, TheoremMode::PhiLaplacianScaled, quick_options());
  CHECK(tight.verdict == Verdict::HypothesisViolated);
  CHECK(tight.verdict_stage == "boundary");
  REQUIRE(tight.boundary.has_value());
  CHECK(tight.boundary->witness.has_value());

  CyclicSystem free_sys;
  free_sys.n = 2;
  free_sys.m = 1;
  free_sys.T = 1.0;
  free_sys.g = {[](const Vec& y) { return y; }};
  free_sys.h = [](double t, const Vec&) { return v1(1.0 + 0.5 * std::cos(2 * kPi * t)); };
  const ExistenceCertificate none =
      certify(free_sys, FunctionBox::uniform(2, 1, 1.0), TheoremMode::CyclicScaleLast, quick_options());
  CHECK(none.verdict == Verdict::HypothesisViolated);
  CHECK(none.verdict_stage == "degree");
}

TEST_CASE("Hartman workflow with the identity operator") {
  HartmanProblem p{PhiOperator::identity(2),
                   [](double t, const Vec& u) {
                     Vec f = -u;
                     f(0) += 0.3 * std::cos(t);
                     return f;
                   },
                   1.0, 2 * kPi};
  const ExistenceCertificate cert = certify_hartman(p, quick_options());
  CHECK(cert.verdict == Verdict::EvidenceSupportsExistence);
  REQUIRE(cert.assembled_degree.has_value());
  CHECK(*cert.assembled_degree == 1);
  REQUIRE(cert.apriori.has_value());
  REQUIRE(cert.solution.has_value());
  CHECK(cert.solution->sup_norms[0] <= 1.0);
  CHECK(cert.solution->deriv_sup_norms[0] <= cert.apriori->M_d);
  // u'' = u - 0.3 cos t has the unique periodic solution 0.15 cos t
  CHECK(cert.solution->eval(0.0)(0) == doctest::Approx(0.15).epsilon(1e-8));
  CHECK(std::abs(cert.solution->eval(0.0)(1)) < 1e-8);
  const CyclicSystem sys = hartman_system(p, HomotopyFamily::Interpolate);
  CHECK(sys.family == HomotopyFamily::Interpolate);
  Vec x(4);
  x << 0.2, -0.1, 0.3, 0.4;
  const Vec f = sys.eval_field(0.0, x, 1.0);
  CHECK(f(0) == doctest::Approx(0.3));
  CHECK(f(2) == doctest::Approx(-(-0.2 + 0.3)));
  CHECK(sys.eval_field(0.0, x, 0.0)(2) == doctest::Approx(0.2));
}
