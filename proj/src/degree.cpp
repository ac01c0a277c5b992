#include "phicyc/degree.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <numeric>

namespace phicyc {

const char* to_string(DegreeMethod m) {
  switch (m) {
    case DegreeMethod::SignChange1D: return "SignChange1D";
    case DegreeMethod::Winding2D: return "Winding2D";
    case DegreeMethod::OrientationHomeo: return "OrientationHomeo";
    case DegreeMethod::BoundarySubdivision: return "BoundarySubdivision";
    case DegreeMethod::ProductFormula: return "ProductFormula";
  }
  return "Unknown";
}

RegionBox RegionBox::box(Vec center, Vec half_widths) {
  if (center.size() < 1 || center.size() != half_widths.size()) {
    fail(ErrorKind::InvalidArgument, "RegionBox: center and half widths must have equal positive size");
  }
  if (!((half_widths.array() > 0.0).all()) || !half_widths.allFinite()) {
    fail(ErrorKind::InvalidArgument, "RegionBox: half widths must be positive and finite");
  }
  RegionBox r;
  r.center_ = std::move(center);
  r.half_widths_ = std::move(half_widths);
  r.radius_ = r.half_widths_.maxCoeff();
  return r;
}

RegionBox RegionBox::ball(Vec center, double radius) {
  if (center.size() < 1) fail(ErrorKind::InvalidArgument, "RegionBox: empty center");
  if (!(radius > 0.0) || !std::isfinite(radius)) {
    fail(ErrorKind::InvalidArgument, "RegionBox: ball radius must be positive and finite");
  }
  RegionBox r;
  r.half_widths_ = Vec::Constant(center.size(), radius);
  r.center_ = std::move(center);
  r.radius_ = radius;
  r.is_ball_ = true;
  return r;
}

bool RegionBox::contains(const Vec& x) const {
  const Vec d = x - center_;
  if (is_ball_) return d.norm() < radius_;
  return (d.array().abs() < half_widths_.array()).all();
}

Vec RegionBox::from_unit_cube_boundary(const Vec& u) const {
  if (is_ball_) return center_ + radius_ * u / u.norm();
  return center_ + half_widths_.cwiseProduct(u);
}

namespace {

struct Sample {
  Vec x;
  Vec fx;
};

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

DegreeResult degree_1d(const VecMap& f, const RegionBox& region, const RefinementSpec& spec) {
  const double c = region.center()(0);
  const double h = region.is_ball() ? region.radius() : region.half_widths()(0);
  const double fa = f(Vec::Constant(1, c - h))(0);
  const double fb = f(Vec::Constant(1, c + h))(0);
  const double scale = std::max(std::abs(fa), std::abs(fb));
  if (!std::isfinite(fa) || !std::isfinite(fb)) {
    fail(ErrorKind::NonConvergence, "non-finite field value on the boundary");
  }
  if (std::min(std::abs(fa), std::abs(fb)) <= spec.zero_tol * scale || scale == 0.0) {
    fail(ErrorKind::BoundaryZero, "field vanishes at an interval endpoint");
  }
  DegreeResult r;
  r.value = static_cast<int>((sign_of(fb) - sign_of(fa)) / 2.0);
  r.method = DegreeMethod::SignChange1D;
  r.refinement = 2;
  r.levels = 1;
  r.boundary_margin = std::min(std::abs(fa), std::abs(fb));
  r.sample_variation = 0.0;
  r.converged = true;
  r.heuristic = false;
  return r;
}

// ---------------------------------------------------------------------------
// Winding number in the plane

/// Counterclockwise parameterization of the boundary of [-1, 1]^2, s in [0, 4).
Vec unit_square_boundary(double s) {
  Vec u(2);
  if (s < 1.0) {
    u << -1.0 + 2.0 * s, -1.0;
  } else if (s < 2.0) {
    u << 1.0, -1.0 + 2.0 * (s - 1.0);
  } else if (s < 3.0) {
    u << 1.0 - 2.0 * (s - 2.0), 1.0;
  } else {
    u << -1.0, 1.0 - 2.0 * (s - 3.0);
  }
  return u;
}

struct WindingState {
  const VecMap& f;
  const RegionBox& region;
  double zero_threshold;
  double margin = std::numeric_limits<double>::infinity();
};

double angle_between(const Vec& a, const Vec& b) {
  const double cross = a(0) * b(1) - a(1) * b(0);
  const double dot = a.dot(b);
  return std::atan2(cross, dot);
}

/// Angle swept by f between parameters s0 and s1, bisecting while a step
/// exceeds pi / 2.
double swept_angle(WindingState& st, double s0, const Vec& f0, double s1, const Vec& f1, int depth) {
  const double a = angle_between(f0, f1);
  if (std::abs(a) <= std::numbers::pi / 2.0 || depth >= 40) return a;
  const double sm = 0.5 * (s0 + s1);
  const Vec fm = st.f(st.region.from_unit_cube_boundary(unit_square_boundary(sm)));
  const double nm = fm.norm();
  st.margin = std::min(st.margin, nm);
  if (!(nm > st.zero_threshold)) {
    fail(ErrorKind::BoundaryZero, "field vanishes (|f| = " + std::to_string(nm) + ") on the boundary");
  }
  return swept_angle(st, s0, f0, sm, fm, depth + 1) + swept_angle(st, sm, fm, s1, f1, depth + 1);
}

struct LevelOutcome {
  int value = 0;
  double margin = 0.0;
  double variation = 0.0;
  bool resolved = true;
};

LevelOutcome winding_level(const VecMap& f, const RegionBox& region, const RefinementSpec& spec,
                           int per_edge) {
  const int total = 4 * per_edge;
  std::vector<Vec> values(static_cast<std::size_t>(total));
  parallel_for(values.size(), spec.workers, [&](std::size_t i) {
    const double s = 4.0 * static_cast<double>(i) / total;
    values[i] = f(region.from_unit_cube_boundary(unit_square_boundary(s)));
  });
  double scale = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (const Vec& v : values) {
    if (!v.allFinite()) fail(ErrorKind::NonConvergence, "non-finite field value on the boundary");
    scale = std::max(scale, v.norm());
    margin = std::min(margin, v.norm());
  }
  const double threshold = spec.zero_tol * scale;
  if (!(margin > threshold)) {
    fail(ErrorKind::BoundaryZero, "field vanishes (|f| = " + std::to_string(margin) + ") on the boundary");
  }
  WindingState st{f, region, threshold, margin};
  double total_angle = 0.0;
  double variation = 0.0;
  for (int i = 0; i < total; ++i) {
    const int j = (i + 1) % total;
    const double s0 = 4.0 * i / total;
    const double s1 = 4.0 * (i + 1) / total;
    total_angle += swept_angle(st, s0, values[i], s1, values[j], 0);
    variation = std::max(variation, (values[j] - values[i]).norm());
  }
  LevelOutcome out;
  out.value = static_cast<int>(std::lround(total_angle / (2.0 * std::numbers::pi)));
  out.margin = st.margin;
  out.variation = variation;
  return out;
}

// ---------------------------------------------------------------------------
// Simplicial boundary count

template <int K>
LevelOutcome subdivision_level(const VecMap& f, const RegionBox& region, const RefinementSpec& spec,
                               int cells) {
  using VecK = Eigen::Matrix<double, K, 1>;
  using MatK = Eigen::Matrix<double, K, K>;
  constexpr int F = K - 1;  // face dimension
  const int per_axis = cells + 1;
  int face_points = 1;
  for (int j = 0; j < F; ++j) face_points *= per_axis;
  const int faces = 2 * K;

  // Vertex coordinates on the unit cube boundary, face-major.
  std::vector<Vec> unit(static_cast<std::size_t>(faces * face_points));
  for (int face = 0; face < faces; ++face) {
    const int axis = face / 2;
    const double side = (face % 2 == 0) ? -1.0 : 1.0;
    for (int p = 0; p < face_points; ++p) {
      Vec u(K);
      int rem = p;
      int fj = 0;
      for (int j = 0; j < K; ++j) {
        if (j == axis) {
          u(j) = side;
          continue;
        }
        const int idx = rem % per_axis;
        rem /= per_axis;
        u(j) = -1.0 + 2.0 * idx / cells;
        ++fj;
      }
      unit[static_cast<std::size_t>(face * face_points + p)] = u;
    }
  }
  std::vector<Vec> values(unit.size());
  parallel_for(unit.size(), spec.workers,
               [&](std::size_t i) { values[i] = f(region.from_unit_cube_boundary(unit[i])); });

  double scale = 0.0;
  double margin = std::numeric_limits<double>::infinity();
  for (const Vec& v : values) {
    if (!v.allFinite()) fail(ErrorKind::NonConvergence, "non-finite field value on the boundary");
    scale = std::max(scale, v.norm());
    margin = std::min(margin, v.norm());
  }
  if (!(margin > spec.zero_tol * scale)) {
    fail(ErrorKind::BoundaryZero, "field vanishes (|f| = " + std::to_string(margin) + ") on the boundary");
  }

  // Fixed generic target direction on the sphere.
  VecK target;
  const std::array<double, 4> raw = {0.7071067811865476, 0.3183098861837907, -0.5772156649015329,
                                     0.2360679774997897};
  for (int j = 0; j < K; ++j) target(j) = raw[static_cast<std::size_t>(j)];
  target.normalize();

  std::array<int, F> perm;
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::array<int, F>> perms;
  do {
    perms.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));

  int count = 0;
  double variation = 0.0;
  double min_cos = 1.0;
  std::array<int, F> cell_idx{};
  for (int face = 0; face < faces; ++face) {
    const int axis = face / 2;
    const double side = (face % 2 == 0) ? -1.0 : 1.0;
    int num_cells = 1;
    for (int j = 0; j < F; ++j) num_cells *= cells;
    for (int c = 0; c < num_cells; ++c) {
      int rem = c;
      for (int j = 0; j < F; ++j) {
        cell_idx[static_cast<std::size_t>(j)] = rem % cells;
        rem /= cells;
      }
      for (const auto& pr : perms) {
        std::array<int, F> idx = cell_idx;
        std::array<int, K> vids{};
        auto flat = [&](const std::array<int, F>& id) {
          int p = 0;
          int mul = 1;
          for (int j = 0; j < F; ++j) {
            p += id[static_cast<std::size_t>(j)] * mul;
            mul *= per_axis;
          }
          return face * face_points + p;
        };
        vids[0] = flat(idx);
        for (int j = 0; j < F; ++j) {
          ++idx[static_cast<std::size_t>(pr[static_cast<std::size_t>(j)])];
          vids[static_cast<std::size_t>(j + 1)] = flat(idx);
        }
        MatK img;
        MatK geom;
        VecK normal = VecK::Zero();
        normal(axis) = side;
        geom.col(0) = normal;
        for (int j = 0; j < K; ++j) img.col(j) = values[static_cast<std::size_t>(vids[j])];
        for (int j = 1; j < K; ++j) {
          geom.col(j) = unit[static_cast<std::size_t>(vids[j])] - unit[static_cast<std::size_t>(vids[0])];
        }
        for (int a = 0; a < K; ++a) {
          for (int b = a + 1; b < K; ++b) {
            const double cs = img.col(a).normalized().dot(img.col(b).normalized());
            min_cos = std::min(min_cos, cs);
            variation = std::max(variation, (img.col(a) - img.col(b)).norm());
          }
        }
        const double det_img = img.determinant();
        if (det_img == 0.0) continue;
        const VecK lambda = img.partialPivLu().solve(target);
        if ((lambda.array() > 0.0).all()) {
          const double orient = geom.determinant();
          count += (orient > 0.0 ? 1 : -1) * (det_img > 0.0 ? 1 : -1);
        }
      }
    }
  }
  LevelOutcome out;
  out.value = count;
  out.margin = margin;
  out.variation = variation;
  // The cone test is only meaningful when each simplex image spans well under
  // a hemisphere.
  out.resolved = min_cos > 0.0;
  return out;
}

template <class LevelFn>
DegreeResult refine_until_stable(LevelFn&& level, int start, const RefinementSpec& spec,
                                 DegreeMethod method) {
  DegreeResult r;
  r.method = method;
  int n = std::max(start, 2);
  bool have_prev = false;
  int prev = 0;
  for (int lvl = 0; lvl <= spec.max_levels; ++lvl, n *= 2) {
    const LevelOutcome out = level(n);
    r.levels = lvl + 1;
    r.refinement = n;
    r.boundary_margin = out.margin;
    r.sample_variation = out.variation;
    r.value = out.value;
    if (out.resolved && have_prev && out.value == prev) {
      r.converged = true;
      r.heuristic = !(r.boundary_margin > 10.0 * r.sample_variation);
      return r;
    }
    if (out.resolved) {
      have_prev = true;
      prev = out.value;
    } else {
      have_prev = false;
    }
  }
  fail(ErrorKind::NonConvergence,
       std::string(to_string(method)) + ": refinement cap reached without two agreeing levels");
}

}  // namespace

DegreeResult winding_degree_2d(const VecMap& f, const RegionBox& region, const RefinementSpec& spec) {
  if (region.dim() != 2) fail(ErrorKind::InvalidArgument, "winding degree needs a planar region");
  return refine_until_stable([&](int n) { return winding_level(f, region, spec, n); }, spec.initial,
                             spec, DegreeMethod::Winding2D);
}

DegreeResult boundary_subdivision_degree(const VecMap& f, const RegionBox& region,
                                         const RefinementSpec& spec) {
  switch (region.dim()) {
    case 2:
      return refine_until_stable([&](int n) { return subdivision_level<2>(f, region, spec, n); },
                                 spec.initial, spec, DegreeMethod::BoundarySubdivision);
    case 3:
      return refine_until_stable([&](int n) { return subdivision_level<3>(f, region, spec, n); },
                                 std::max(4, spec.initial / 2), spec, DegreeMethod::BoundarySubdivision);
    case 4:
      return refine_until_stable([&](int n) { return subdivision_level<4>(f, region, spec, n); },
                                 std::max(2, spec.initial / 4), spec, DegreeMethod::BoundarySubdivision);
    default:
      fail(ErrorKind::InvalidArgument, "boundary subdivision supports dimensions 2..4");
  }
}

DegreeResult brouwer_degree(const VecMap& f, const RegionBox& region, const RefinementSpec& spec) {
  switch (region.dim()) {
    case 1: return degree_1d(f, region, spec);
    case 2: return winding_degree_2d(f, region, spec);
    case 3:
    case 4: return boundary_subdivision_degree(f, region, spec);
    default:
      fail(ErrorKind::InvalidArgument,
           "direct degree computation is limited to dimension <= 4 (got " +
               std::to_string(region.dim()) + "); use the cyclic product formula");
  }
}

DegreeResult degree_orientation_homeo(const VecMap& f, const RegionBox& region) {
  const int k = region.dim();
  if (!region.contains(Vec::Zero(k))) {
    fail(ErrorKind::InvalidArgument, "orientation degree: region must contain 0");
  }
  const Vec extent = region.is_ball() ? Vec::Constant(k, region.radius() / std::sqrt(double(k)))
                                      : region.half_widths();
  std::vector<Vec> points;
  for (const Vec& v : sphere_directions(k, 4 * k + 4)) {
    for (double t : {0.25, 0.6}) points.push_back(region.center() + t * extent.cwiseProduct(v));
  }
  int sign = 0;
  int used = 0;
  double min_abs = std::numeric_limits<double>::infinity();
  for (const Vec& x : points) {
    if (x.norm() < 1e-12) continue;
    const double det = fd_jacobian(f, x).determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-12) continue;
    min_abs = std::min(min_abs, std::abs(det));
    const int s = det > 0.0 ? 1 : -1;
    if (used > 0 && s != sign) {
      fail(ErrorKind::InconsistentOrientation, "Jacobian determinant changes sign inside the region");
    }
    sign = s;
    ++used;
  }
  if (used == 0) fail(ErrorKind::SingularJacobian, "Jacobian determinant vanishes at every sample");
  DegreeResult r;
  r.value = sign;
  r.method = DegreeMethod::OrientationHomeo;
  r.refinement = used;
  r.levels = 1;
  r.boundary_margin = min_abs;
  r.converged = true;
  r.heuristic = true;
  r.note = "sign of finite-difference Jacobian determinant at " + std::to_string(used) + " points";
  return r;
}

DegreeResult degree_orientation_homeo(const PhiOperator& phi, const RegionBox& region) {
  if (region.dim() != phi.dim()) fail(ErrorKind::InvalidArgument, "orientation degree: dimension mismatch");
  return degree_orientation_homeo([&](const Vec& x) { return phi.apply(x); }, region);
}

int cyclic_degree_product(int deg_hstar, const std::vector<int>& deg_gs, int d, int n) {
  if (d < 1 || n < 1) fail(ErrorKind::InvalidArgument, "cyclic_degree_product: d and n must be positive");
  if (static_cast<int>(deg_gs.size()) != n - 1) {
    fail(ErrorKind::InvalidArgument, "cyclic_degree_product: expected n - 1 component degrees");
  }
  int value = ((d * (n + 1)) % 2 == 0) ? deg_hstar : -deg_hstar;
  for (int g : deg_gs) value *= g;
  return value;
}

Mat block_cyclic_permutation(int d, int n) {
  if (d < 1 || n < 1) fail(ErrorKind::InvalidArgument, "block_cyclic_permutation: d, n must be positive");
  Mat p = Mat::Zero(d * n, d * n);
  for (int i = 0; i < n; ++i) {
    const int src = (i + n - 1) % n;  // output block i takes input block i - 1
    p.block(i * d, src * d, d, d).setIdentity();
  }
  return p;
}

int permutation_sign(int d, int n) {
  if (d < 1 || n < 1) fail(ErrorKind::InvalidArgument, "permutation_sign: d, n must be positive");
  const int formula = ((d * (n + 1)) % 2 == 0) ? 1 : -1;
  if (d * n <= 8) {
    const double det = block_cyclic_permutation(d, n).fullPivLu().determinant();
    const int explicit_sign = det > 0.0 ? 1 : -1;
    if (explicit_sign != formula) {
      fail(ErrorKind::InvalidArgument, "permutation_sign: formula and explicit determinant disagree");
    }
  }
  return formula;
}

}  // namespace phicyc
