#pragma once

#include "phicyc/common.hpp"

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace phicyc {

/// Open region of R^m: the whole space or an open ball B(0, radius).
struct RegionDescriptor {
  double radius = std::numeric_limits<double>::infinity();

  static RegionDescriptor whole() { return {}; }
  static RegionDescriptor ball(double r) { return {r}; }

  bool is_whole() const { return !std::isfinite(radius); }
  /// Strict membership with the interior safety margin used for domain checks.
  bool contains(const Vec& x) const;
};

/// Interior safety margin for bounded domains and images.
inline constexpr double kDomainMargin = 1e-9;
/// Relative tolerance for ||phi(invert(y)) - y||.
inline constexpr double kInversionTol = 1e-10;

/// Scalar homeomorphism h: R -> R with h(0) = 0. `inverse` may be empty, in
/// which case it is computed by bracketing root search.
struct ScalarHomeo {
  std::function<double(double)> forward;
  std::function<double(double)> inverse;
};

namespace phi_kind {

struct PLaplacian {
  double p = 2.0;
};
struct RadialGamma {
  std::function<double(double)> gamma;
  /// Optional closed form of zeta^{-1}, zeta(s) = gamma(s) s.
  std::function<double(double)> zeta_inverse;
  std::string label = "radial_gamma";
};
struct ArctanRadial {};
struct GeneralA {
  std::function<double(const Vec&)> A;
};
struct Anisotropic {
  double p = 2.0;
  /// Positive weight on the unit sphere, evaluated at xi / |xi|.
  std::function<double(const Vec&)> weight;
};
struct MatrixComposed {
  Mat matrix;
  std::vector<ScalarHomeo> components;
};
struct Fig1Planar {};
struct Custom {
  VecMap forward;
  VecMap inverse;
  bool a_phi_form = false;
};

}  // namespace phi_kind

using PhiKind = std::variant<phi_kind::PLaplacian, phi_kind::RadialGamma, phi_kind::ArctanRadial,
                             phi_kind::GeneralA, phi_kind::Anisotropic, phi_kind::MatrixComposed,
                             phi_kind::Fig1Planar, phi_kind::Custom>;

/// Homeomorphism phi: A -> B between open subsets of R^m with phi(0) = 0.
/// Immutable after construction; apply/invert are safe to call concurrently.
class PhiOperator {
 public:
  static PhiOperator p_laplacian(int dim, double p);
  static PhiOperator identity(int dim) { return p_laplacian(dim, 2.0); }
  static PhiOperator arctan_radial(int dim);
  /// phi(xi) = gamma(|xi|) xi. Validates that zeta(s) = gamma(s) s is
  /// positive and strictly increasing on a sample grid of the domain.
  static PhiOperator radial_gamma(int dim, std::function<double(double)> gamma,
                                  RegionDescriptor domain = RegionDescriptor::whole(),
                                  RegionDescriptor codomain = RegionDescriptor::whole(),
                                  bool coercive = true,
                                  std::function<double(double)> zeta_inverse = {},
                                  std::string label = "radial_gamma");
  /// Minkowski-type operator xi / sqrt(1 - |xi/a|^2) on B(0, a).
  static PhiOperator minkowski(int dim, double a = 1.0);
  /// Mean-curvature operator xi / sqrt(1 + |xi|^2) onto B(0, 1).
  static PhiOperator mean_curvature(int dim);
  static PhiOperator general_a(int dim, std::function<double(const Vec&)> A, bool coercive = true);
  static PhiOperator anisotropic(int dim, double p, std::function<double(const Vec&)> weight);
  /// Planar anisotropic operator whose weight is given at sample angles (radians)
  /// and interpolated linearly and periodically on the circle.
  static PhiOperator anisotropic_table(double p, std::vector<std::pair<double, double>> samples);
  static PhiOperator matrix_composed(Mat matrix, std::vector<ScalarHomeo> components);
  /// phi(x, y) = ((3x + y^3)^3 / 40, (sin(2 (x - y^5)^3) + 2 (x - y^5)^3) / 10).
  static PhiOperator fig1_planar();
  /// User-supplied map. phi(0) = 0 is checked here. Coercivity cannot be
  /// decided numerically, so the caller declares it.
  static PhiOperator custom(int dim, VecMap forward, VecMap inverse = {}, bool coercive = false,
                            RegionDescriptor domain = RegionDescriptor::whole(),
                            RegionDescriptor codomain = RegionDescriptor::whole(),
                            bool a_phi_form = false);

  int dim() const { return dim_; }
  const RegionDescriptor& domain() const { return domain_; }
  const RegionDescriptor& codomain() const { return codomain_; }
  const PhiKind& kind() const { return kind_; }
  std::string kind_name() const;
  bool coercive() const { return coercive_; }
  /// True for maps of the form A(xi) xi with A > 0 (rays map onto themselves).
  bool a_phi_form() const;
  bool closed_form_inverse() const;

  Vec apply(const Vec& xi) const;
  Vec invert(const Vec& y) const;

 private:
  PhiOperator(int dim, PhiKind kind, RegionDescriptor domain, RegionDescriptor codomain,
              bool coercive)
      : dim_(dim), kind_(std::move(kind)), domain_(domain), codomain_(codomain),
        coercive_(coercive) {}

  Vec apply_unchecked(const Vec& xi) const;
  Vec invert_raw(const Vec& y) const;
  double radial_profile(const Vec& direction, double s) const;
  Vec newton_invert(const Vec& y, const Vec& start) const;

  int dim_ = 1;
  PhiKind kind_;
  RegionDescriptor domain_;
  RegionDescriptor codomain_;
  bool coercive_ = false;
};

/// Inverse of a scalar homeomorphism by bracket expansion and TOMS 748.
double invert_scalar(const std::function<double(double)>& h, double y);

/// Pair-sampling plan for the monotonicity check.
struct PairSampler {
  std::vector<std::pair<Vec, Vec>> pairs;  ///< explicit pairs, checked first
  Vec lower;                               ///< sampling box (both ends inclusive)
  Vec upper;
  int grid_per_axis = 0;       ///< all pairs of a regular grid in the box
  int random_pairs = 0;        ///< additional uniform random pairs in the box
  std::uint64_t seed = 12345;
};

struct MonotonicityReport {
  bool passed = true;
  double min_inner = std::numeric_limits<double>::infinity();
  std::optional<std::pair<Vec, Vec>> witness;  ///< set when !passed
  std::size_t pairs_checked = 0;
};

/// Samples <phi(x1) - phi(x2), x1 - x2> over the plan. FAIL carries the pair
/// with the most negative value.
MonotonicityReport check_monotone_H1(const PhiOperator& phi, const PairSampler& sampler);

struct CoercivityOptions {
  int directions = 64;
  double radius_cap = 1e8;
  double rel_tol = 1e-12;
};

/// Smallest sampled L with <phi(r v), r v> > c for all sampled v and r > L.
/// Throws NotCoercive when phi is not flagged coercive, is not defined on
/// the whole space, or the doubling search passes radius_cap.
double coercivity_threshold(const PhiOperator& phi, double c, const CoercivityOptions& opts = {});

}  // namespace phicyc
