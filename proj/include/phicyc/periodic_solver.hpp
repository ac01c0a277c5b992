#pragma once

#include "phicyc/common.hpp"
#include "phicyc/cyclic_system.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace phicyc {

/// Truncated Fourier series of a T-periodic trajectory in R^dim.
/// coeffs(:, 0) is the mean, coeffs(:, 2k-1) / coeffs(:, 2k) multiply
/// cos(k w t) / sin(k w t), w = 2 pi / T.
struct PeriodicSolution {
  double T = 1.0;
  double param = 1.0;
  Mat coeffs;
  double residual = std::numeric_limits<double>::infinity();
  int iterations = 0;
  std::vector<double> sup_norms;        ///< per block sup_t |x_i(t)| (Euclidean)
  std::vector<double> deriv_sup_norms;  ///< per block sup_t |x_i'(t)|
  /// Shooting solutions only: trajectory and field values at t_j = j T / cols.
  /// Norms, margins and consistency checks read these instead of the series,
  /// which converges slowly when x' has cusps.
  Mat samples;
  Mat sample_derivs;

  bool from_shooting() const { return samples.cols() > 0; }

  int dim() const { return static_cast<int>(coeffs.rows()); }
  int harmonics() const { return static_cast<int>((coeffs.cols() - 1) / 2); }

  static PeriodicSolution constant(const Vec& x, double T, int harmonics = 0);

  Vec eval(double t) const;
  Vec deriv(double t) const;
  /// Same trajectory with `harmonics` terms (truncated or zero padded).
  PeriodicSolution resized(int harmonics) const;
  /// x(t + shift).
  PeriodicSolution shifted(double shift) const;
  /// Fills sup_norms and deriv_sup_norms on a grid `oversample` times finer
  /// than the collocation grid.
  void refresh_norms(int m, int oversample = 16);
};

struct ShootingOptions {
  double abs_tol = 1e-12;
  double rel_tol = 1e-12;
  double initial_step = 1e-3;
  int segments = 16;  ///< multiple-shooting segments per period
};

enum class SolverMethod { HarmonicBalance, Shooting, Auto };

const char* to_string(SolverMethod m);

struct SolverOptions {
  SolverMethod method = SolverMethod::Auto;  ///< Auto: harmonic balance, then shooting on failure
  int harmonics = 8;         ///< starting N_h; collocation uses 2 N_h + 1 nodes
  int max_harmonics = 64;
  bool adapt_harmonics = true;
  double tol = 1e-10;        ///< sup-norm residual target
  int max_iter = 60;
  ShootingOptions shooting;
};

/// sup_t |x'(t) - F(t, x(t), param)| over `samples` equispaced points.
double field_residual(const CyclicSystem& sys, const PeriodicSolution& sol, double param, int samples);

/// Exception carrying the best iterate of a failed solve.
class SolveFailure : public Error {
 public:
  SolveFailure(ErrorKind kind, const std::string& what, PeriodicSolution best)
      : Error(kind, what, best.residual), best_(std::move(best)) {}
  const PeriodicSolution& best() const { return best_; }

 private:
  PeriodicSolution best_;
};

/// Harmonic balance: Fourier collocation at 2 N_h + 1 nodes solved by
/// Newton with a chain-rule Jacobian (finite-difference state Jacobian per
/// node) and Armijo damping. N_h doubles until the residual on a 16x finer
/// grid is below tol. Throws SolveFailure (NonConvergence / DomainViolation).
///
/// Shooting: multiple shooting over `segments` equal pieces of [0, T] with
/// an adaptive Dormand-Prince flow, Newton on the cyclic matching equations.
/// The residual is the largest mismatch at the segment ends and the series
/// is the discrete Fourier projection of the dense orbit.
PeriodicSolution solve_periodic(const CyclicSystem& sys, double param, const PeriodicSolution& guess,
                                const SolverOptions& opts = {});
PeriodicSolution solve_periodic(const CyclicSystem& sys, double param, const Vec& constant_guess,
                                const SolverOptions& opts = {});

/// FunctionBox::margin of the trajectory: block sup distances from the box
/// centers and sup |x_1'|, sampled on a 16x oversampled grid.
double box_margin(const FunctionBox& box, const PeriodicSolution& sol, int m);

enum class BranchEnd { Completed, BoundaryHit, NonConvergence };

const char* to_string(BranchEnd e);

struct BranchEntry {
  double param = 0.0;
  PeriodicSolution solution;
  double boundary_margin = 0.0;
};

struct BranchLog {
  std::vector<BranchEntry> entries;
  BranchEnd end = BranchEnd::Completed;
  double failed_param = 0.0;  ///< parameter of the BoundaryHit / failed step
  std::string detail;
};

struct SweepOptions {
  SolverOptions solver;
  double min_step = 1e-6;
  int max_bisections = 24;
};

/// Tracks the branch through the increasing parameter grid, starting from
/// `start` (solved at params.front()). Failed steps are bisected. Leaving
/// the box ends the sweep with BoundaryHit.
BranchLog continuation_sweep(const CyclicSystem& sys, const std::vector<double>& params,
                             const FunctionBox& box, const PeriodicSolution& start,
                             const SweepOptions& opts = {});

struct StartOptions {
  bool autonomous = false;  ///< zero of h0* instead of h*
  int starts_per_axis = 5;
  double tol = 1e-10;
  int max_iter = 60;
  QuadratureSpec quad;
};

/// Constant seed (omega*, 0, ..., 0) with h*(omega*) = 0 inside the first
/// block of the box. When some g_i(0) != 0 the whole averaged field is
/// solved instead and the seed is its zero. Throws NoZeroFound.
PeriodicSolution start_from_averaged(const CyclicSystem& sys, const FunctionBox& box,
                                     const StartOptions& opts = {});

/// Integrates the field at sol.param from sol(0) over one period with an
/// adaptive Dormand-Prince integrator and returns |x(T) - x(0)|.
double cross_validate_shooting(const CyclicSystem& sys, const PeriodicSolution& sol,
                               const ShootingOptions& opts = {});

/// Recomputed multiple-shooting mismatch of a shooting solution (fresh flows
/// from the stored segment starts). `opts.segments` must match the solve.
double segment_defect(const CyclicSystem& sys, const PeriodicSolution& sol, const ShootingOptions& opts = {});

}  // namespace phicyc
