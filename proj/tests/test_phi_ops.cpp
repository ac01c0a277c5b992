#include "phicyc/phi_ops.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace phicyc;

namespace {

Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

template <class F>
ErrorKind error_kind(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.kind();
  }
  FAIL("expected an error");
  return ErrorKind::InvalidArgument;
}

void check_roundtrip(const PhiOperator& phi, const std::vector<Vec>& points, double tol) {
  for (const Vec& x : points) {
    const Vec y = phi.apply(x);
    CHECK((phi.invert(y) - x).norm() <= tol * (1.0 + x.norm()));
  }
}

std::vector<Vec> random_points(int dim, int count, double scale, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec> out;
  for (int i = 0; i < count; ++i) {
    Vec x(dim);
    for (int k = 0; k < dim; ++k) x(k) = u(rng);
    out.push_back(x);
  }
  return out;
}

}  // namespace

TEST_CASE("p-Laplacian matches |x|^(p-2) x") {
  const PhiOperator phi = PhiOperator::p_laplacian(2, 3.0);
  const Vec x = v2(0.3, -1.2);
  CHECK((phi.apply(x) - x.norm() * x).norm() < 1e-14);
  check_roundtrip(phi, random_points(2, 20, 3.0, 1), 1e-10);
  CHECK(PhiOperator::identity(3).apply(Vec::Ones(3)).isApprox(Vec::Ones(3)));
  CHECK(phi.a_phi_form());
  CHECK(phi.coercive());
}

TEST_CASE("arctan radial operator and its inverse") {
  const PhiOperator phi = PhiOperator::arctan_radial(2);
  const Vec x = v2(0.6, 0.8);
  CHECK((phi.apply(x) - std::atan(1.0) * x).norm() < 1e-14);
  check_roundtrip(phi, random_points(2, 30, 20.0, 2), 1e-10);
  // small arguments: phi(x) ~ |x| x
  check_roundtrip(phi, random_points(2, 10, 1e-4, 3), 1e-9);
  CHECK(phi.invert(Vec::Zero(2)).norm() == 0.0);
}

TEST_CASE("bounded domains and images") {
  const PhiOperator mk = PhiOperator::minkowski(2, 1.0);
  CHECK(error_kind([&] { mk.apply(v2(1.0, 0.5)); }) == ErrorKind::DomainViolation);
  check_roundtrip(mk, random_points(2, 20, 0.6, 4), 1e-9);
  const Vec y = mk.apply(v2(0.5, 0.0));
  CHECK(y(0) == doctest::Approx(0.5 / std::sqrt(0.75)));

  const PhiOperator mc = PhiOperator::mean_curvature(2);
  CHECK(error_kind([&] { mc.invert(v2(1.0, 0.1)); }) == ErrorKind::CodomainViolation);
  check_roundtrip(mc, random_points(2, 20, 5.0, 5), 1e-9);
}

TEST_CASE("radial gamma and matrix composed operators") {
  const PhiOperator cubic = PhiOperator::radial_gamma(1, [](double s) { return 1.0 + s * s; });
  Vec x(1);
  x << 1.5;
  CHECK(cubic.apply(x)(0) == doctest::Approx(1.5 + 1.5 * 1.5 * 1.5));
  check_roundtrip(cubic, random_points(1, 20, 4.0, 6), 1e-10);

  Mat A(2, 2);
  A << 2, 1, 0, 1;
  const ScalarHomeo cube{[](double s) { return s * s * s; }, [](double y) { return std::cbrt(y); }};
  const ScalarHomeo lin{[](double s) { return 3 * s; }, {}};
  const PhiOperator mc = PhiOperator::matrix_composed(A, {cube, lin});
  const Vec z = v2(0.4, -0.7);
  CHECK((mc.apply(z) - A * v2(std::pow(z(0), 3), 3 * z(1))).norm() < 1e-14);
  check_roundtrip(mc, random_points(2, 20, 2.0, 7), 1e-9);
  CHECK(error_kind([&] { PhiOperator::matrix_composed(Mat::Zero(2, 2), {cube, lin}); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("planar example operator inverts") {
  const PhiOperator phi = PhiOperator::fig1_planar();
  const Vec x = v2(0.3, 0.2);
  const double a = 3 * 0.3 + std::pow(0.2, 3);
  const double b = std::pow(0.3 - std::pow(0.2, 5), 3);
  CHECK((phi.apply(x) - v2(std::pow(a, 3) / 40, (std::sin(2 * b) + 2 * b) / 10)).norm() < 1e-15);
  check_roundtrip(phi, random_points(2, 10, 1.0, 8), 1e-8);
  CHECK(!phi.a_phi_form());
}

TEST_CASE("custom operator requires phi(0) = 0") {
  CHECK(error_kind([] { PhiOperator::custom(1, [](const Vec& v) { return Vec(v.array() + 1.0); }); }) ==
        ErrorKind::InvalidArgument);
  const PhiOperator phi = PhiOperator::custom(1, [](const Vec& v) { return Vec(v.array().sinh()); });
  check_roundtrip(phi, random_points(1, 10, 3.0, 9), 1e-9);
}

TEST_CASE("anisotropic weight counterexample to monotonicity") {
  const double q = std::numbers::pi / 4;
  const PhiOperator phi = PhiOperator::anisotropic_table(2.0, {{0, 1}, {q, 6}, {2 * q, 1}, {3 * q, 1},
                                                               {4 * q, 1}, {5 * q, 6}, {6 * q, 1}, {7 * q, 1}});
  const Vec x1 = v2(1.0, 0.0);
  const double rho = 7 * std::sqrt(2.0) / 24;
  const Vec x2 = rho * v2(std::sqrt(2.0) / 2, std::sqrt(2.0) / 2);
  // A(v1)|x1|^2 + A(v2)|x2|^2 - (A(v1) + A(v2)) <x1, x2>
  const double oracle = 1.0 * x1.squaredNorm() + 6.0 * x2.squaredNorm() - 7.0 * x1.dot(x2);
  const double inner = (phi.apply(x1) - phi.apply(x2)).dot(x1 - x2);
  CHECK(std::abs(inner - oracle) < 1e-14);
  CHECK(std::abs(inner + 1.0 / 48.0) < 1e-12);

  PairSampler sampler;
  sampler.pairs.push_back({x1, x2});
  const MonotonicityReport rep = check_monotone_H1(phi, sampler);
  CHECK(!rep.passed);
  CHECK(rep.witness.has_value());
  CHECK(rep.min_inner == doctest::Approx(-1.0 / 48.0).epsilon(1e-12));
}

TEST_CASE("monotone operators pass the sampled check") {
  PairSampler sampler;
  sampler.lower = Vec::Constant(2, -2.0);
  sampler.upper = Vec::Constant(2, 2.0);
  sampler.grid_per_axis = 4;
  sampler.random_pairs = 300;
  for (const PhiOperator& phi : {PhiOperator::p_laplacian(2, 3.0), PhiOperator::arctan_radial(2),
                                 PhiOperator::mean_curvature(2)}) {
    const MonotonicityReport rep = check_monotone_H1(phi, sampler);
    CHECK(rep.passed);
    CHECK(rep.pairs_checked > 300);
    CHECK(rep.min_inner >= 0.0);
  }
}

TEST_CASE("coercivity threshold") {
  // <x, x> > c  iff  |x| > sqrt(c)
  CHECK(coercivity_threshold(PhiOperator::identity(2), 4.0) == doctest::Approx(2.0).epsilon(1e-9));
  // <|x| x, x> = |x|^3 > 8  iff  |x| > 2
  CHECK(coercivity_threshold(PhiOperator::p_laplacian(1, 3.0), 8.0) == doctest::Approx(2.0).epsilon(1e-9));
  // |x|^2 / sqrt(1 + |x|^2) > 1  iff  |x|^2 > golden ratio
  CHECK(coercivity_threshold(PhiOperator::mean_curvature(2), 1.0) ==
        doctest::Approx(std::sqrt((1 + std::sqrt(5.0)) / 2)).epsilon(1e-9));
  CHECK(error_kind([] { coercivity_threshold(PhiOperator::fig1_planar(), 1.0); }) == ErrorKind::NotCoercive);
  CHECK(error_kind([] { coercivity_threshold(PhiOperator::minkowski(2), 1.0); }) == ErrorKind::NotCoercive);
}

TEST_CASE("scalar inversion") {
  CHECK(invert_scalar([](double s) { return s * s * s + s; }, 10.0) == doctest::Approx(2.0));
  CHECK(invert_scalar([](double s) { return std::sinh(s); }, -3.0) == doctest::Approx(std::asinh(-3.0)));
}
