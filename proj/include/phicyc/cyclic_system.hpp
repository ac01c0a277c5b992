#pragma once

#include "phicyc/common.hpp"
#include "phicyc/degree.hpp"
#include "phicyc/phi_ops.hpp"

#include <optional>
#include <string>
#include <vector>

namespace phicyc {

enum class HomotopyFamily { ScaleLast, Interpolate };

const char* to_string(HomotopyFamily f);

struct QuadratureSpec {
  double tol = 1e-12;       ///< relative change between successive doublings
  int initial_nodes = 16;
  int max_nodes = 1 << 16;
};

/// (t, x, lambda) -> R^m, an explicit interpolating field for the
/// Interpolate family.
using HTildeMap = std::function<Vec(double, const Vec&, double)>;

/// System
///   x_i' = g_i(x_{i+1}),  i = 1..n-1,
///   x_n' = h(t, x_1, ..., x_n),
/// with x_i in R^m and h T-periodic in t, plus a homotopy family.
///
/// n = 1 is accepted as the scalar-loop case x_1' = h(t, x_1).
struct CyclicSystem {
  int n = 2;
  int m = 1;
  double T = 1.0;
  std::vector<VecMap> g;  ///< n - 1 maps R^m -> R^m
  TimeVecMap h;           ///< (t, x in R^{mn}) -> R^m
  VecMap h0;              ///< autonomous end of the Interpolate family, optional
  HTildeMap h_tilde;      ///< overrides lambda h + (1 - lambda) h0, optional
  HomotopyFamily family = HomotopyFamily::ScaleLast;
  /// Operators of phi-Laplacian / n-th order builds: g_i = phis[i]^{-1}.
  std::vector<PhiOperator> phis;
  /// Discontinuity times of h in [0, T); quadrature and collocation avoid them.
  std::vector<double> breakpoints;
  std::string origin = "generic";

  int dim() const { return n * m; }
  Vec block(const Vec& x, int i) const { return x.segment(i * m, m); }

  /// Throws InvalidArgument on inconsistent data.
  void validate() const;

  /// Last block at parameter `param` (theta h, or h_tilde / interpolation).
  Vec eval_last(double t, const Vec& x, double param) const;
  /// Full field of the homotopy family at `param`.
  Vec eval_field(double t, const Vec& x, double param) const;

  /// h^#(s) = (1/T) int_0^T h(t, s) dt by periodic trapezoid with node doubling.
  Vec averaged_field(const Vec& s, const QuadratureSpec& quad = {}) const;
  /// h*(omega) = h^#(omega, 0, ..., 0).
  Vec reduced_field(const Vec& omega, const QuadratureSpec& quad = {}) const;
  /// h0*(omega) = h0(omega, 0, ..., 0). Requires h0.
  Vec reduced_field_autonomous(const Vec& omega) const;
  /// (g_1(s_2), ..., g_{n-1}(s_n), h^#(s)).
  Vec g_hat(const Vec& s, const QuadratureSpec& quad = {}) const;
  /// (g_1(s_2), ..., g_{n-1}(s_n), h0(s)).
  Vec g_hat_autonomous(const Vec& s) const;

  /// max |h(t + T, x) - h(t, x)| over sampled (t, x) must be <= tol.
  bool check_periodicity(const std::vector<Vec>& states, int time_samples = 16, double tol = 1e-9) const;
  /// Condition g_i(0) = 0 for every i.
  bool g_vanish_at_zero(double tol = 1e-12) const;

  /// Quadrature node offset (fraction of a cell) chosen to avoid breakpoints.
  double node_offset(int nodes) const;
};

/// k(t, u, v) for u'' style builds.
using PhiLaplacianForcing = std::function<Vec(double, const Vec&, const Vec&)>;
/// k(t, s_1, phi_1^{-1}(s_2), ..., phi_{n-1}^{-1}(s_n)).
using ChainForcing = std::function<Vec(double, const std::vector<Vec>&)>;

/// (phi(u'))' + k(t, u, u') = 0 as x_1' = phi^{-1}(x_2), x_2' = -k(t, x_1, phi^{-1}(x_2)).
/// `k0`, when given, supplies the autonomous end h0 = -k0(x_1, phi^{-1}(x_2)).
CyclicSystem from_phi_laplacian(const PhiOperator& phi, PhiLaplacianForcing k, double T,
                                std::function<Vec(const Vec&, const Vec&)> k0 = {});

/// Chain x_i' = phi_i^{-1}(x_{i+1}), x_n' = -k(t, s_1, phi_1^{-1}(s_2), ...).
CyclicSystem from_nth_order(const std::vector<PhiOperator>& phis, ChainForcing k, double T);

/// Log-transformed Kolmogorov system: g_i(s) = K_i(exp s), h(t, s) = K_n(t, exp s_1),
/// exp applied componentwise.
CyclicSystem from_kolmogorov(const std::vector<VecMap>& K, TimeVecMap K_last, int m, double T);

enum class BlockNorm { Max, Euclidean };

const char* to_string(BlockNorm b);

struct BlockBound {
  Vec center;
  double radius = 1.0;
  BlockNorm norm = BlockNorm::Max;
};

/// Product set Omega = {x : sup_t |x_i(t) - c_i| < r_i for all i}, optionally
/// also bounding sup_t |x_1'(t)| (Euclidean) for C^1 sets of phi-Laplacian
/// problems.
struct FunctionBox {
  std::vector<BlockBound> blocks;
  std::optional<double> derivative_bound;

  static FunctionBox uniform(int n, int m, double radius, BlockNorm norm = BlockNorm::Max);

  int n() const { return static_cast<int>(blocks.size()); }
  void validate(int n, int m) const;

  double block_distance(int i, const Vec& xi) const;
  /// radius_i - sup distance, minimized over blocks and the derivative bound.
  double margin(const std::vector<double>& block_sup_distance, double deriv_sup = 0.0) const;
  /// Hypothesis 0 in O_i for i = 2..n.
  bool zero_in_tail_blocks() const;
  /// O_i = Omega_i restricted to constants.
  RegionBox block_region(int i) const;
  /// Omega restricted to constants in R^{mn}; requires box-shaped blocks
  /// unless m = 1 or n = 1.
  RegionBox trace_region() const;
};

}  // namespace phicyc
