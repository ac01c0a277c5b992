#include "phicyc/cyclic_system.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace phicyc;

namespace {

constexpr double kPi = std::numbers::pi;

Vec v1(double a) { return Vec::Constant(1, a); }

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

CyclicSystem forced_pair() {
  CyclicSystem sys;
  sys.n = 2;
  sys.m = 1;
  sys.T = 1.0;
  sys.g = {[](const Vec& y) { return Vec(2.0 * y); }};
  sys.h = [](double t, const Vec& x) { return v1(-x(0) - x(1) * x(1) + std::cos(2 * kPi * t) + 0.5); };
  sys.validate();
  return sys;
}

}  // namespace

TEST_CASE("field of the scaled family") {
  const CyclicSystem sys = forced_pair();
  const Vec x = v2(0.3, -0.2);
  const Vec f = sys.eval_field(0.25, x, 1.0);
  CHECK(f(0) == doctest::Approx(-0.4));
  CHECK(f(1) == doctest::Approx(-0.3 - 0.04 + 0.5));
  const Vec fh = sys.eval_field(0.25, x, 0.5);
  CHECK(fh(0) == doctest::Approx(-0.4));
  CHECK(fh(1) == doctest::Approx(0.5 * f(1)));
  CHECK_THROWS_AS(sys.eval_field(0.0, x, 1.5), Error);
}

TEST_CASE("interpolating family needs h0") {
  CyclicSystem sys = forced_pair();
  sys.family = HomotopyFamily::Interpolate;
  CHECK_THROWS_AS(sys.eval_last(0.0, v2(0, 0), 0.5), Error);
  sys.h0 = [](const Vec& x) { return v1(-x(0)); };
  const Vec x = v2(0.3, -0.2);
  const double h = -0.3 - 0.04 + std::cos(2 * kPi * 0.1) + 0.5;
  CHECK(sys.eval_last(0.1, x, 0.25)(0) == doctest::Approx(0.25 * h + 0.75 * -0.3));
  CHECK(sys.eval_last(0.1, x, 0.0)(0) == doctest::Approx(-0.3));
}

TEST_CASE("averaged and reduced fields") {
  const CyclicSystem sys = forced_pair();
  // the cosine averages out
  const Vec s = v2(0.2, 0.4);
  CHECK(sys.averaged_field(s)(0) == doctest::Approx(-0.2 - 0.16 + 0.5).epsilon(1e-12));
  CHECK(sys.reduced_field(v1(0.2))(0) == doctest::Approx(0.3).epsilon(1e-12));
  const Vec gh = sys.g_hat(s);
  CHECK(gh(0) == doctest::Approx(0.8));
  CHECK(gh(1) == doctest::Approx(0.14));
  CHECK(sys.g_vanish_at_zero());
  CHECK(sys.check_periodicity({s, v2(-1, 1)}));
}

TEST_CASE("averaging over a discontinuous forcing") {
  CyclicSystem sys;
  sys.n = 1;
  sys.m = 1;
  sys.T = 2.0;
  sys.h = [](double t, const Vec& x) { return v1((std::fmod(t, 2.0) < 0.5 ? 3.0 : -1.0) - x(0)); };
  sys.breakpoints = {0.0, 0.5};
  sys.validate();
  // mean of the square wave is (3 * 0.5 - 1 * 1.5) / 2 = 0
  CHECK(std::abs(sys.averaged_field(v1(0.0))(0)) < 1e-9);
}

TEST_CASE("phi-Laplacian build") {
  const PhiOperator phi = PhiOperator::p_laplacian(1, 3.0);
  const CyclicSystem sys = from_phi_laplacian(
      phi, [](double t, const Vec& u, const Vec& v) { return Vec(u + 0.5 * v - Vec::Constant(1, std::sin(t))); }, 2 * kPi);
  CHECK(sys.n == 2);
  CHECK(sys.origin == "phi_laplacian");
  const Vec x = v2(0.4, 0.09);  // phi^{-1}(0.09) = 0.3
  const Vec f = sys.eval_field(1.0, x, 1.0);
  CHECK(f(0) == doctest::Approx(0.3));
  CHECK(f(1) == doctest::Approx(-(0.4 + 0.15 - std::sin(1.0))));
}

TEST_CASE("n-th order chain build") {
  const std::vector<PhiOperator> phis{PhiOperator::identity(1), PhiOperator::p_laplacian(1, 3.0)};
  const CyclicSystem sys = from_nth_order(
      phis, [](double, const std::vector<Vec>& s) { return Vec(s[0] + s[1] + s[2]); }, 1.0);
  CHECK(sys.n == 3);
  Vec x(3);
  x << 0.1, 0.2, 0.04;
  const Vec f = sys.eval_field(0.0, x, 1.0);
  CHECK(f(0) == doctest::Approx(0.2));
  CHECK(f(1) == doctest::Approx(0.2));
  CHECK(f(2) == doctest::Approx(-(0.1 + 0.2 + 0.2)));
}

TEST_CASE("Kolmogorov build works in log coordinates") {
  const CyclicSystem sys = from_kolmogorov({[](const Vec& z) { return Vec(z.array() * 2.0 - 1.0); }},
                                           [](double t, const Vec& z) { return Vec(1.0 + 0.5 * std::sin(2 * kPi * t) - z.array()); },
                                           1, 1.0);
  const Vec x = v2(std::log(2.0), std::log(0.5));
  const Vec f = sys.eval_field(0.0, x, 1.0);
  CHECK(f(0) == doctest::Approx(0.0));
  CHECK(f(1) == doctest::Approx(-1.0));
}

TEST_CASE("validation") {
  CyclicSystem sys = forced_pair();
  sys.g.clear();
  CHECK_THROWS_AS(sys.validate(), Error);
  sys = forced_pair();
  sys.T = -1.0;
  CHECK_THROWS_AS(sys.validate(), Error);
}

TEST_CASE("function box margins and traces") {
  FunctionBox box = FunctionBox::uniform(2, 2, 1.0);
  box.blocks[1].norm = BlockNorm::Euclidean;
  CHECK(box.block_distance(0, v2(0.5, -0.7)) == doctest::Approx(0.7));
  CHECK(box.block_distance(1, v2(0.6, 0.8)) == doctest::Approx(1.0));
  CHECK(box.margin({0.2, 0.5}) == doctest::Approx(0.5));
  box.derivative_bound = 2.0;
  CHECK(box.margin({0.2, 0.5}, 1.9) == doctest::Approx(0.1));
  CHECK(box.zero_in_tail_blocks());
  box.blocks[1].center = v2(3.0, 0.0);
  CHECK(!box.zero_in_tail_blocks());
  CHECK(box.block_region(1).is_ball());
  CHECK_THROWS_AS(box.validate(3, 2), Error);

  const FunctionBox scalar = FunctionBox::uniform(3, 1, 0.5);
  const RegionBox trace = scalar.trace_region();
  CHECK(trace.dim() == 3);
  CHECK(trace.half_widths().isApprox(Vec::Constant(3, 0.5)));
}
