#pragma once

#include "phicyc/common.hpp"
#include "phicyc/phi_ops.hpp"

#include <string>
#include <vector>

namespace phicyc {

/// Bounded open region of R^k: an axis-aligned box or a Euclidean ball.
class RegionBox {
 public:
  static RegionBox box(Vec center, Vec half_widths);
  static RegionBox ball(Vec center, double radius);
  static RegionBox cube(int dim, double half_width) {
    return box(Vec::Zero(dim), Vec::Constant(dim, half_width));
  }

  int dim() const { return static_cast<int>(center_.size()); }
  bool is_ball() const { return is_ball_; }
  const Vec& center() const { return center_; }
  const Vec& half_widths() const { return half_widths_; }
  double radius() const { return radius_; }
  bool contains(const Vec& x) const;

  /// Maps a point of the boundary of [-1, 1]^k onto the boundary of this
  /// region (affinely for boxes, radially for balls). Orientation preserving.
  Vec from_unit_cube_boundary(const Vec& u) const;

 private:
  Vec center_;
  Vec half_widths_;
  double radius_ = 0.0;
  bool is_ball_ = false;
};

enum class DegreeMethod { SignChange1D, Winding2D, OrientationHomeo, BoundarySubdivision, ProductFormula };

const char* to_string(DegreeMethod m);

struct RefinementSpec {
  int initial = 16;      ///< boundary samples per edge (k = 2) or cells per face axis
  int max_levels = 6;    ///< doublings allowed before NoConvergence
  int workers = 1;       ///< evaluation threads; results do not depend on it
  double zero_tol = 1e-8;  ///< boundary-zero threshold relative to max |f| on the boundary
};

struct DegreeResult {
  int value = 0;
  DegreeMethod method = DegreeMethod::SignChange1D;
  int refinement = 0;          ///< final samples-per-edge / cells-per-axis
  int levels = 0;              ///< number of refinement levels evaluated
  double boundary_margin = 0;  ///< min |f| over the sampled boundary
  double sample_variation = 0; ///< max |f(a) - f(b)| over adjacent boundary samples
  bool converged = false;      ///< two consecutive levels agreed
  bool heuristic = true;       ///< false only if converged and margin > 10 * variation
  std::string note;
};

/// Brouwer degree deg(f, region, 0) for k <= 4. k = 1 uses endpoint signs,
/// k = 2 the winding number of f along the boundary polyline, k = 3, 4 the
/// signed count of boundary simplices whose image cone contains a fixed
/// direction. Refinement doubles until two consecutive levels agree.
/// Throws BoundaryZero or NonConvergence.
DegreeResult brouwer_degree(const VecMap& f, const RegionBox& region, const RefinementSpec& spec = {});

/// The simplicial boundary count for any 2 <= k <= 4 (used directly for
/// k = 3, 4 and as an independent cross-check of the winding number in 2-D).
DegreeResult boundary_subdivision_degree(const VecMap& f, const RegionBox& region,
                                         const RefinementSpec& spec = {});

/// Winding number of f along the boundary of a planar region.
DegreeResult winding_degree_2d(const VecMap& f, const RegionBox& region, const RefinementSpec& spec = {});

/// Degree of a homeomorphism fixing 0 from the sign of its finite-difference
/// Jacobian determinant at interior sample points. Throws
/// InconsistentOrientation / SingularJacobian.
DegreeResult degree_orientation_homeo(const PhiOperator& phi, const RegionBox& region);
DegreeResult degree_orientation_homeo(const VecMap& f, const RegionBox& region);

/// (-1)^{d(n+1)} * deg_hstar * prod(deg_gs). Requires deg_gs.size() == n - 1.
int cyclic_degree_product(int deg_hstar, const std::vector<int>& deg_gs, int d, int n);

/// Determinant sign of the block-cyclic permutation matrix moving the last
/// d-block of R^{dn} to the front. Uses (-1)^{d(n+1)} and, when d*n <= 8,
/// also the explicit determinant; the two must agree.
int permutation_sign(int d, int n);

/// The explicit block-cyclic permutation matrix (dn x dn).
Mat block_cyclic_permutation(int d, int n);

}  // namespace phicyc
