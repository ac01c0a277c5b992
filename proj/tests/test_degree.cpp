#include "phicyc/degree.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace phicyc;

namespace {

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

/// Complex polynomial map as a planar field.
VecMap complex_map(std::function<std::complex<double>(std::complex<double>)> p) {
  return [p](const Vec& x) {
    const std::complex<double> w = p({x(0), x(1)});
    Vec out(2);
    out << w.real(), w.imag();
    return out;
  };
}

/// Parity of the permutation stored as image indices, by counting inversions.
int inversion_sign(const std::vector<int>& perm) {
  int inv = 0;
  for (std::size_t i = 0; i < perm.size(); ++i) {
    for (std::size_t j = i + 1; j < perm.size(); ++j) inv += perm[i] > perm[j];
  }
  return inv % 2 ? -1 : 1;
}

}  // namespace

TEST_CASE("minus identity and identity on balls and boxes") {
  for (int m = 1; m <= 4; ++m) {
    const VecMap minus = [](const Vec& x) { return Vec(-x); };
    const VecMap id = [](const Vec& x) { return x; };
    const int expected = m % 2 ? -1 : 1;
    CHECK(brouwer_degree(minus, RegionBox::ball(Vec::Zero(m), 1.0)).value == expected);
    CHECK(brouwer_degree(minus, RegionBox::cube(m, 1.0)).value == expected);
    CHECK(brouwer_degree(id, RegionBox::ball(Vec::Zero(m), 1.0)).value == 1);
  }
}

TEST_CASE("one-dimensional sign change") {
  const VecMap f = [](const Vec& x) { return Vec::Constant(1, x(0) * x(0) - 0.25); };
  CHECK(brouwer_degree(f, RegionBox::box(Vec::Constant(1, 0.5), Vec::Constant(1, 0.3))).value == 1);
  CHECK(brouwer_degree(f, RegionBox::box(Vec::Constant(1, -0.5), Vec::Constant(1, 0.3))).value == -1);
  CHECK(brouwer_degree(f, RegionBox::cube(1, 1.0)).value == 0);
}

TEST_CASE("winding numbers of complex maps") {
  const RegionBox disk = RegionBox::ball(Vec::Zero(2), 1.0);
  CHECK(winding_degree_2d(complex_map([](auto z) { return z * z * z; }), disk).value == 3);
  CHECK(winding_degree_2d(complex_map([](auto z) { return std::conj(z); }), disk).value == -1);
  CHECK(winding_degree_2d(complex_map([](auto z) { return z * z - 0.25; }), disk).value == 2);
  CHECK(winding_degree_2d(complex_map([](auto z) { return z * z - 4.0; }), disk).value == 0);
  CHECK(boundary_subdivision_degree(complex_map([](auto z) { return z * z; }), RegionBox::cube(2, 1.0)).value == 2);
}

TEST_CASE("three and four dimensional degrees") {
  const VecMap flip = [](const Vec& x) {
    Vec y = x;
    y(2) = -y(2);
    return y;
  };
  CHECK(brouwer_degree(flip, RegionBox::cube(3, 1.0)).value == -1);
  // (Re z^2, Im z^2, w) has degree 2
  const VecMap sq = [](const Vec& x) {
    Vec y(3);
    y << x(0) * x(0) - x(1) * x(1), 2 * x(0) * x(1), x(2);
    return y;
  };
  CHECK(brouwer_degree(sq, RegionBox::ball(Vec::Zero(3), 1.0)).value == 2);
  const VecMap shifted = [](const Vec& x) { return Vec(x.array() - 3.0); };
  CHECK(brouwer_degree(shifted, RegionBox::cube(4, 1.0)).value == 0);
}

TEST_CASE("zeros on the boundary are rejected") {
  const VecMap f = [](const Vec& x) { return Vec(x.array() - 1.0); };
  CHECK(error_kind([&] { brouwer_degree(f, RegionBox::cube(2, 1.0)); }) == ErrorKind::BoundaryZero);
  CHECK(error_kind([&] { brouwer_degree(f, RegionBox::cube(1, 1.0)); }) == ErrorKind::BoundaryZero);
}

TEST_CASE("orientation of homeomorphisms") {
  CHECK(degree_orientation_homeo(PhiOperator::p_laplacian(3, 3.0), RegionBox::cube(3, 1.0)).value == 1);
  const VecMap reflect = [](const Vec& x) {
    Vec y = x;
    y(0) = -y(0);
    return y;
  };
  CHECK(degree_orientation_homeo(reflect, RegionBox::cube(2, 1.0)).value == -1);
}

TEST_CASE("block cyclic permutation sign") {
  for (int d = 1; d <= 4; ++d) {
    for (int n = 1; d * n <= 8; ++n) {
      const Mat P = block_cyclic_permutation(d, n);
      std::vector<int> image(static_cast<std::size_t>(d * n));
      for (int r = 0; r < d * n; ++r) {
        int col = -1;
        for (int c = 0; c < d * n; ++c) {
          if (P(r, c) == 1.0) col = c;
        }
        REQUIRE(col >= 0);
        image[static_cast<std::size_t>(r)] = col;
      }
      const int expected = (d * (n + 1)) % 2 ? -1 : 1;
      CHECK(inversion_sign(image) == expected);
      CHECK(permutation_sign(d, n) == expected);
    }
  }
}

TEST_CASE("product formula") {
  CHECK(cyclic_degree_product(1, {1}, 1, 2) == -1);
  CHECK(cyclic_degree_product(-1, {1, -1}, 1, 3) == 1);
  CHECK(cyclic_degree_product(1, {1}, 2, 2) == 1);
  CHECK(cyclic_degree_product(2, {}, 1, 1) == 2);
  CHECK(error_kind([] { cyclic_degree_product(1, {1, 1}, 1, 2); }) == ErrorKind::InvalidArgument);
}

TEST_CASE("region boundary parametrization") {
  const RegionBox b = RegionBox::box(Vec::Constant(2, 1.0), Vec::Constant(2, 0.5));
  Vec u(2);
  u << 1.0, -1.0;
  Vec p = b.from_unit_cube_boundary(u);
  CHECK(p(0) == doctest::Approx(1.5));
  CHECK(p(1) == doctest::Approx(0.5));
  const RegionBox ball = RegionBox::ball(Vec::Zero(2), 2.0);
  p = ball.from_unit_cube_boundary(u);
  CHECK(p.norm() == doctest::Approx(2.0));
  CHECK(!ball.contains(1.01 * p));
  CHECK(ball.contains(0.99 * p));
}
