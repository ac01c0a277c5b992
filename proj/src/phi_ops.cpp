#include "phicyc/phi_ops.hpp"

#include <boost/math/tools/roots.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace phicyc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double margin_for(double radius) { return kDomainMargin * std::max(1.0, radius); }

/// Root of f on [lo, hi] where f(lo) <= 0 <= f(hi).
double toms748_root(const std::function<double(double)>& f, double lo, double hi, double flo,
                    double fhi) {
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  boost::uintmax_t max_iter = 300;
  auto tol = boost::math::tools::eps_tolerance<double>(std::numeric_limits<double>::digits - 2);
  const auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, max_iter);
  return 0.5 * (a + b);
}

/// Solve zeta(s) = target for an increasing zeta with zeta(0) = 0 on [0, cap).
double radial_solve(const std::function<double(double)>& zeta, double target, double cap) {
  if (target <= 0.0) return 0.0;
  double hi = std::min(1.0, cap);
  double fhi = zeta(hi) - target;
  while (fhi < 0.0) {
    if (hi >= cap) {
      fail(ErrorKind::NonConvergence, "radial inversion: target outside the image of the profile");
    }
    hi = std::min(2.0 * hi, cap);
    fhi = zeta(hi) - target;
    if (hi > 1e300) fail(ErrorKind::NonConvergence, "radial inversion: bracket overflow");
  }
  auto f = [&](double s) { return zeta(s) - target; };
  return toms748_root(f, 0.0, hi, -target, fhi);
}

/// s with s atan(s) = r. The profile is convex and increasing on [0, inf),
/// so Newton from the upper bound s^2 / (1 + s) = r decreases monotonically.
double arctan_profile_inverse(double r) {
  if (r <= 0.0) return 0.0;
  double s = 0.5 * (r + std::sqrt(r * r + 4.0 * r));
  for (int it = 0; it < 100; ++it) {
    const double f = s * std::atan(s) - r;
    const double df = std::atan(s) + s / (1.0 + s * s);
    const double next = s - f / df;
    if (!(next < s)) break;
    s = next;
  }
  return s;
}

double interp_periodic(const std::vector<std::pair<double, double>>& table, double angle) {
  const double two_pi = 2.0 * std::numbers::pi;
  double a = std::fmod(angle, two_pi);
  if (a < 0.0) a += two_pi;
  const std::size_t n = table.size();
  if (n == 1) return table.front().second;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if (a >= table[i].first && a <= table[i + 1].first) {
      const double w = (a - table[i].first) / (table[i + 1].first - table[i].first);
      return table[i].second + w * (table[i + 1].second - table[i].second);
    }
  }
  // Wrap-around segment from the last sample to the first one (+2 pi).
  const double a0 = table.back().first;
  const double a1 = table.front().first + two_pi;
  const double aa = a < table.front().first ? a + two_pi : a;
  const double w = (aa - a0) / (a1 - a0);
  return table.back().second + w * (table.front().second - table.back().second);
}

}  // namespace

bool RegionDescriptor::contains(const Vec& x) const {
  if (is_whole()) return x.allFinite();
  return x.norm() < radius - margin_for(radius);
}

double invert_scalar(const std::function<double(double)>& h, double y) {
  if (y == 0.0) return 0.0;
  const bool increasing = h(1.0) > h(-1.0);
  // Reduce to an increasing map g with g(0) = 0.
  auto g = [&](double s) { return increasing ? h(s) : -h(s); };
  const double target = increasing ? y : -y;
  const double sign = target > 0.0 ? 1.0 : -1.0;
  auto f = [&](double s) { return sign * (g(sign * s) - target); };
  // f is increasing in s >= 0 with f(0) = -|target|.
  double hi = 1.0;
  double fhi = f(hi);
  while (fhi < 0.0) {
    hi *= 2.0;
    if (hi > 1e300) fail(ErrorKind::NonConvergence, "scalar inversion: bracket overflow");
    fhi = f(hi);
  }
  return sign * toms748_root(f, 0.0, hi, f(0.0), fhi);
}

// ---------------------------------------------------------------------------
// Construction

PhiOperator PhiOperator::p_laplacian(int dim, double p) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "p_laplacian: dim must be positive");
  if (!(p > 1.0)) fail(ErrorKind::InvalidArgument, "p_laplacian: p must exceed 1");
  return PhiOperator(dim, phi_kind::PLaplacian{p}, RegionDescriptor::whole(),
                     RegionDescriptor::whole(), true);
}

PhiOperator PhiOperator::arctan_radial(int dim) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "arctan_radial: dim must be positive");
  return PhiOperator(dim, phi_kind::ArctanRadial{}, RegionDescriptor::whole(),
                     RegionDescriptor::whole(), true);
}

PhiOperator PhiOperator::radial_gamma(int dim, std::function<double(double)> gamma,
                                      RegionDescriptor domain, RegionDescriptor codomain,
                                      bool coercive, std::function<double(double)> zeta_inverse,
                                      std::string label) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "radial_gamma: dim must be positive");
  if (!gamma) fail(ErrorKind::InvalidArgument, "radial_gamma: missing profile");
  const double smax = domain.is_whole() ? 1e4 : domain.radius * (1.0 - 1e-6);
  constexpr int kSamples = 400;
  double prev = 0.0;
  for (int k = 0; k < kSamples; ++k) {
    // Geometric grid from 1e-6 * smax to smax.
    const double s = smax * std::pow(1e-6, 1.0 - static_cast<double>(k) / (kSamples - 1));
    const double g = gamma(s);
    if (!(g > 0.0) || !std::isfinite(g)) {
      fail(ErrorKind::InvalidArgument,
           "radial_gamma: gamma must be positive and finite (fails at s=" + std::to_string(s) + ")");
    }
    const double z = g * s;
    if (!(z > prev)) {
      fail(ErrorKind::InvalidArgument,
           "radial_gamma: zeta(s) = gamma(s) s is not strictly increasing near s=" +
               std::to_string(s));
    }
    prev = z;
  }
  return PhiOperator(dim,
                     phi_kind::RadialGamma{std::move(gamma), std::move(zeta_inverse), std::move(label)},
                     domain, codomain, coercive && domain.is_whole());
}

PhiOperator PhiOperator::minkowski(int dim, double a) {
  if (!(a > 0.0)) fail(ErrorKind::InvalidArgument, "minkowski: radius must be positive");
  auto gamma = [a](double s) { return 1.0 / std::sqrt(1.0 - (s / a) * (s / a)); };
  auto zinv = [a](double r) { return r / std::sqrt(1.0 + (r / a) * (r / a)); };
  return radial_gamma(dim, gamma, RegionDescriptor::ball(a), RegionDescriptor::whole(), false, zinv,
                      "minkowski");
}

PhiOperator PhiOperator::mean_curvature(int dim) {
  auto gamma = [](double s) { return 1.0 / std::sqrt(1.0 + s * s); };
  auto zinv = [](double r) { return r / std::sqrt(1.0 - r * r); };
  return radial_gamma(dim, gamma, RegionDescriptor::whole(), RegionDescriptor::ball(1.0), true, zinv,
                      "mean_curvature");
}

PhiOperator PhiOperator::general_a(int dim, std::function<double(const Vec&)> A, bool coercive) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "general_a: dim must be positive");
  if (!A) fail(ErrorKind::InvalidArgument, "general_a: missing A");
  return PhiOperator(dim, phi_kind::GeneralA{std::move(A)}, RegionDescriptor::whole(),
                     RegionDescriptor::whole(), coercive);
}

PhiOperator PhiOperator::anisotropic(int dim, double p, std::function<double(const Vec&)> weight) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "anisotropic: dim must be positive");
  if (!(p > 1.0)) fail(ErrorKind::InvalidArgument, "anisotropic: p must exceed 1");
  if (!weight) fail(ErrorKind::InvalidArgument, "anisotropic: missing weight");
  for (const Vec& v : sphere_directions(dim, 64)) {
    if (!(weight(v) > 0.0)) fail(ErrorKind::InvalidArgument, "anisotropic: weight must be positive");
  }
  return PhiOperator(dim, phi_kind::Anisotropic{p, std::move(weight)}, RegionDescriptor::whole(),
                     RegionDescriptor::whole(), true);
}

PhiOperator PhiOperator::anisotropic_table(double p, std::vector<std::pair<double, double>> samples) {
  if (samples.empty()) fail(ErrorKind::InvalidArgument, "anisotropic_table: no samples");
  const double two_pi = 2.0 * std::numbers::pi;
  for (auto& [angle, value] : samples) {
    angle = std::fmod(angle, two_pi);
    if (angle < 0.0) angle += two_pi;
    if (!(value > 0.0)) fail(ErrorKind::InvalidArgument, "anisotropic_table: weights must be positive");
  }
  std::sort(samples.begin(), samples.end());
  for (std::size_t i = 0; i + 1 < samples.size(); ++i) {
    if (samples[i].first == samples[i + 1].first) {
      fail(ErrorKind::InvalidArgument, "anisotropic_table: duplicate sample angle");
    }
  }
  auto weight = [table = std::move(samples)](const Vec& v) {
    return interp_periodic(table, std::atan2(v(1), v(0)));
  };
  return anisotropic(2, p, weight);
}

PhiOperator PhiOperator::matrix_composed(Mat matrix, std::vector<ScalarHomeo> components) {
  const auto dim = static_cast<int>(components.size());
  if (dim < 1 || matrix.rows() != dim || matrix.cols() != dim) {
    fail(ErrorKind::InvalidArgument, "matrix_composed: matrix must be square of size #components");
  }
  if (std::abs(matrix.fullPivLu().determinant()) < 1e-14) {
    fail(ErrorKind::InvalidArgument, "matrix_composed: matrix is singular");
  }
  for (const auto& h : components) {
    if (!h.forward || std::abs(h.forward(0.0)) > 1e-14) {
      fail(ErrorKind::InvalidArgument, "matrix_composed: components must satisfy h(0) = 0");
    }
  }
  return PhiOperator(dim, phi_kind::MatrixComposed{std::move(matrix), std::move(components)},
                     RegionDescriptor::whole(), RegionDescriptor::whole(), false);
}

PhiOperator PhiOperator::fig1_planar() {
  return PhiOperator(2, phi_kind::Fig1Planar{}, RegionDescriptor::whole(), RegionDescriptor::whole(),
                     false);
}

PhiOperator PhiOperator::custom(int dim, VecMap forward, VecMap inverse, bool coercive,
                                RegionDescriptor domain, RegionDescriptor codomain, bool a_phi_form) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "custom: dim must be positive");
  if (!forward) fail(ErrorKind::InvalidArgument, "custom: missing forward map");
  const Vec at_zero = forward(Vec::Zero(dim));
  if (at_zero.size() != dim) fail(ErrorKind::InvalidArgument, "custom: forward map has wrong size");
  if (at_zero.lpNorm<Eigen::Infinity>() > 1e-14) {
    fail(ErrorKind::InvalidArgument, "custom: phi(0) must be 0");
  }
  return PhiOperator(dim, phi_kind::Custom{std::move(forward), std::move(inverse), a_phi_form}, domain,
                     codomain, coercive && domain.is_whole());
}

// ---------------------------------------------------------------------------
// Queries

std::string PhiOperator::kind_name() const {
  return std::visit(overloaded{
                        [](const phi_kind::PLaplacian&) -> std::string { return "p_laplacian"; },
                        [](const phi_kind::RadialGamma& k) -> std::string { return k.label; },
                        [](const phi_kind::ArctanRadial&) -> std::string { return "arctan"; },
                        [](const phi_kind::GeneralA&) -> std::string { return "general_a"; },
                        [](const phi_kind::Anisotropic&) -> std::string { return "anisotropic"; },
                        [](const phi_kind::MatrixComposed&) -> std::string { return "matrix_composed"; },
                        [](const phi_kind::Fig1Planar&) -> std::string { return "fig1_planar"; },
                        [](const phi_kind::Custom&) -> std::string { return "custom"; },
                    },
                    kind_);
}

bool PhiOperator::a_phi_form() const {
  return std::visit(overloaded{
                        [](const phi_kind::MatrixComposed&) { return false; },
                        [](const phi_kind::Fig1Planar&) { return false; },
                        [](const phi_kind::Custom& k) { return k.a_phi_form; },
                        [](const auto&) { return true; },
                    },
                    kind_);
}

bool PhiOperator::closed_form_inverse() const {
  return std::visit(overloaded{
                        [](const phi_kind::PLaplacian&) { return true; },
                        [](const phi_kind::Anisotropic&) { return true; },
                        [](const phi_kind::RadialGamma& k) { return static_cast<bool>(k.zeta_inverse); },
                        [](const phi_kind::Custom& k) { return static_cast<bool>(k.inverse); },
                        [](const auto&) { return false; },
                    },
                    kind_);
}

// ---------------------------------------------------------------------------
// Evaluation

Vec PhiOperator::apply(const Vec& xi) const {
  if (xi.size() != dim_) fail(ErrorKind::InvalidArgument, "phi apply: dimension mismatch");
  if (!domain_.contains(xi)) {
    fail(ErrorKind::DomainViolation, "phi argument outside the domain (|xi| = " +
                                         std::to_string(xi.norm()) + ")");
  }
  return apply_unchecked(xi);
}

Vec PhiOperator::apply_unchecked(const Vec& xi) const {
  return std::visit(
      overloaded{
          [&](const phi_kind::PLaplacian& k) -> Vec {
            const double r = xi.norm();
            if (r == 0.0) return Vec::Zero(dim_);
            return std::pow(r, k.p - 2.0) * xi;
          },
          [&](const phi_kind::RadialGamma& k) -> Vec {
            const double r = xi.norm();
            if (r == 0.0) return Vec::Zero(dim_);
            return k.gamma(r) * xi;
          },
          [&](const phi_kind::ArctanRadial&) -> Vec { return std::atan(xi.norm()) * xi; },
          [&](const phi_kind::GeneralA& k) -> Vec {
            if (xi.norm() == 0.0) return Vec::Zero(dim_);
            return k.A(xi) * xi;
          },
          [&](const phi_kind::Anisotropic& k) -> Vec {
            const double r = xi.norm();
            if (r == 0.0) return Vec::Zero(dim_);
            return std::pow(r, k.p - 2.0) * k.weight(xi / r) * xi;
          },
          [&](const phi_kind::MatrixComposed& k) -> Vec {
            Vec h(dim_);
            for (int i = 0; i < dim_; ++i) h(i) = k.components[i].forward(xi(i));
            return k.matrix * h;
          },
          [&](const phi_kind::Fig1Planar&) -> Vec {
            const double x = xi(0);
            const double y = xi(1);
            const double z = 3.0 * x + y * y * y;
            const double w = x - std::pow(y, 5);
            const double w3 = w * w * w;
            Vec out(2);
            out << z * z * z / 40.0, (std::sin(2.0 * w3) + 2.0 * w3) / 10.0;
            return out;
          },
          [&](const phi_kind::Custom& k) -> Vec { return k.forward(xi); },
      },
      kind_);
}

double PhiOperator::radial_profile(const Vec& direction, double s) const {
  return apply_unchecked(s * direction).dot(direction);
}

Vec PhiOperator::invert(const Vec& y) const {
  if (y.size() != dim_) fail(ErrorKind::InvalidArgument, "phi invert: dimension mismatch");
  if (!codomain_.contains(y)) {
    fail(ErrorKind::CodomainViolation, "phi^{-1} argument outside the image (|y| = " +
                                           std::to_string(y.norm()) + ")");
  }
  if (y.norm() == 0.0) return Vec::Zero(dim_);
  Vec xi = invert_raw(y);
  const double tol = kInversionTol * (1.0 + y.norm());
  if (!xi.allFinite() || !domain_.contains(xi) || (apply_unchecked(xi) - y).norm() > tol) {
    xi = newton_invert(y, xi.allFinite() && domain_.contains(xi) ? xi : Vec(Vec::Zero(dim_)));
  }
  return xi;
}

Vec PhiOperator::invert_raw(const Vec& y) const {
  const double r = y.norm();
  const Vec dir = y / r;
  const double cap = domain_.is_whole() ? std::numeric_limits<double>::infinity()
                                        : domain_.radius - margin_for(domain_.radius);
  auto along_ray = [&]() -> Vec {
    auto zeta = [&](double s) { return radial_profile(dir, s); };
    return radial_solve(zeta, r, cap) * dir;
  };
  return std::visit(
      overloaded{
          [&](const phi_kind::PLaplacian& k) -> Vec {
            const double q = k.p / (k.p - 1.0);
            return std::pow(r, q - 2.0) * y;
          },
          [&](const phi_kind::RadialGamma& k) -> Vec {
            if (k.zeta_inverse) return k.zeta_inverse(r) * dir;
            return along_ray();
          },
          [&](const phi_kind::ArctanRadial&) -> Vec { return arctan_profile_inverse(r) * dir; },
          [&](const phi_kind::GeneralA&) -> Vec { return along_ray(); },
          [&](const phi_kind::Anisotropic& k) -> Vec {
            return std::pow(r / k.weight(dir), 1.0 / (k.p - 1.0)) * dir;
          },
          [&](const phi_kind::MatrixComposed& k) -> Vec {
            const Vec z = k.matrix.fullPivLu().solve(y);
            Vec u(dim_);
            for (int i = 0; i < dim_; ++i) {
              const auto& h = k.components[i];
              u(i) = h.inverse ? h.inverse(z(i)) : invert_scalar(h.forward, z(i));
            }
            return u;
          },
          [&](const phi_kind::Fig1Planar&) -> Vec {
            // First component fixes z = 3x + y^3, second fixes w = x - y^5.
            const double z = std::cbrt(40.0 * y(0));
            const double q = invert_scalar([](double s) { return s + std::sin(s); }, 10.0 * y(1));
            const double w = std::cbrt(0.5 * q);
            const double yy = invert_scalar(
                [](double s) { return 3.0 * std::pow(s, 5) + s * s * s; }, z - 3.0 * w);
            Vec out(2);
            out << w + std::pow(yy, 5), yy;
            return out;
          },
          [&](const phi_kind::Custom& k) -> Vec {
            if (k.inverse) return k.inverse(y);
            // Continuation in the target: solve phi(xi) = tau y for tau -> 1.
            Vec xi = Vec::Zero(dim_);
            constexpr int kSteps = 8;
            try {
              return newton_invert(y, y);
            } catch (const Error&) {
            }
            for (int s = 1; s <= kSteps; ++s) {
              const double tau = static_cast<double>(s) / kSteps;
              xi = newton_invert(tau * y, s == 1 ? Vec(tau * y) : xi);
            }
            return xi;
          },
      },
      kind_);
}

Vec PhiOperator::newton_invert(const Vec& y, const Vec& start) const {
  const double tol = kInversionTol * (1.0 + y.norm());
  Vec x = start;
  auto residual = [&](const Vec& z) -> Vec { return apply_unchecked(z) - y; };
  Vec r = residual(x);
  double rn = r.norm();
  constexpr int kMaxIter = 100;
  for (int it = 0; it < kMaxIter && rn > tol; ++it) {
    const Mat jac = fd_jacobian([&](const Vec& z) { return apply_unchecked(z); }, x);
    Vec dx = jac.colPivHouseholderQr().solve(-r);
    if (!dx.allFinite()) break;
    double alpha = 1.0;
    bool accepted = false;
    while (alpha > 1e-12) {
      const Vec trial = x + alpha * dx;
      if (domain_.contains(trial)) {
        const Vec rt = residual(trial);
        if (rt.allFinite() && rt.norm() < (1.0 - 1e-4 * alpha) * rn) {
          x = trial;
          r = rt;
          rn = rt.norm();
          accepted = true;
          break;
        }
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
  }
  if (!(rn <= tol)) {
    fail(ErrorKind::NonConvergence, "phi inversion did not converge (residual " +
                                        std::to_string(rn) + ")",
         rn);
  }
  return x;
}

// ---------------------------------------------------------------------------
// Property checks

MonotonicityReport check_monotone_H1(const PhiOperator& phi, const PairSampler& sampler) {
  MonotonicityReport report;
  const int m = phi.dim();
  auto consider = [&](const Vec& a, const Vec& pa, const Vec& b, const Vec& pb) {
    if (a == b) return;
    const double v = (pa - pb).dot(a - b);
    ++report.pairs_checked;
    if (v < report.min_inner) {
      report.min_inner = v;
      if (!(v > 0.0)) report.witness = std::make_pair(a, b);
    }
  };

  for (const auto& [a, b] : sampler.pairs) {
    if (!phi.domain().contains(a) || !phi.domain().contains(b)) continue;
    consider(a, phi.apply(a), b, phi.apply(b));
  }

  const bool has_box = sampler.lower.size() == m && sampler.upper.size() == m;
  if (has_box && sampler.grid_per_axis >= 2) {
    const int g = sampler.grid_per_axis;
    std::vector<Vec> pts;
    std::vector<Vec> vals;
    std::vector<int> idx(m, 0);
    for (;;) {
      Vec p(m);
      for (int j = 0; j < m; ++j) {
        p(j) = sampler.lower(j) + (sampler.upper(j) - sampler.lower(j)) * idx[j] / (g - 1);
      }
      if (phi.domain().contains(p)) {
        pts.push_back(p);
        vals.push_back(phi.apply(p));
      }
      int j = 0;
      while (j < m && ++idx[j] == g) idx[j++] = 0;
      if (j == m) break;
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t k = i + 1; k < pts.size(); ++k) consider(pts[i], vals[i], pts[k], vals[k]);
    }
  }

  if (has_box && sampler.random_pairs > 0) {
    std::mt19937_64 rng(sampler.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    auto draw = [&]() {
      Vec p(m);
      for (int j = 0; j < m; ++j) {
        p(j) = sampler.lower(j) + (sampler.upper(j) - sampler.lower(j)) * unit(rng);
      }
      return p;
    };
    for (int s = 0; s < sampler.random_pairs; ++s) {
      const Vec a = draw();
      const Vec b = draw();
      if (!phi.domain().contains(a) || !phi.domain().contains(b)) continue;
      consider(a, phi.apply(a), b, phi.apply(b));
    }
  }

  report.passed = !report.witness.has_value();
  if (report.passed) report.witness.reset();
  return report;
}

double coercivity_threshold(const PhiOperator& phi, double c, const CoercivityOptions& opts) {
  if (!phi.coercive()) {
    fail(ErrorKind::NotCoercive, "operator '" + phi.kind_name() + "' is not flagged coercive");
  }
  if (!phi.domain().is_whole()) {
    fail(ErrorKind::NotCoercive, "coercivity threshold needs an operator defined on the whole space");
  }
  const std::vector<Vec> dirs = sphere_directions(phi.dim(), opts.directions);
  auto min_pairing = [&](double r) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& v : dirs) best = std::min(best, phi.apply(r * v).dot(r * v));
    return best;
  };

  double hi = 1.0;
  for (;;) {
    while (!(min_pairing(hi) > c)) {
      hi *= 2.0;
      if (hi > opts.radius_cap) {
        fail(ErrorKind::NotCoercive, "doubling search passed the radius cap " +
                                         std::to_string(opts.radius_cap));
      }
    }
    // The pairing must also stay above c further out.
    double bad = -1.0;
    for (int j = 1; j <= 8; ++j) {
      const double r = hi * std::pow(2.0, j);
      if (r > opts.radius_cap) break;
      if (!(min_pairing(r) > c)) bad = r;
    }
    if (bad < 0.0) break;
    hi = bad * 2.0;
    if (hi > opts.radius_cap) fail(ErrorKind::NotCoercive, "pairing does not stay above c");
  }

  // Scan a radial grid inward for the last radius where the pairing is <= c.
  constexpr int kGrid = 256;
  double lo = 0.0;
  double up = hi / kGrid;
  for (int k = kGrid - 1; k >= 1; --k) {
    const double r = hi * k / kGrid;
    if (!(min_pairing(r) > c)) {
      lo = r;
      up = hi * (k + 1) / kGrid;
      break;
    }
  }
  // Bisect the bracket [lo, up]: pairing(lo) <= c (or lo = 0), pairing(up) > c.
  for (int it = 0; it < 200 && up - lo > opts.rel_tol * up; ++it) {
    const double mid = 0.5 * (lo + up);
    if (min_pairing(mid) > c) {
      up = mid;
    } else {
      lo = mid;
    }
  }
  if (lo == 0.0 && up <= opts.rel_tol * hi) return 0.0;
  return up;
}

}  // namespace phicyc
