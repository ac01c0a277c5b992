#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace phicyc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Map R^k -> R^k (or R^a -> R^b where the caller knows the sizes).
using VecMap = std::function<Vec(const Vec&)>;
/// Time-dependent map (t, x) -> y.
using TimeVecMap = std::function<Vec(double, const Vec&)>;

enum class ErrorKind {
  DomainViolation,
  CodomainViolation,
  NonConvergence,
  NotCoercive,
  BoundaryZero,
  InconsistentOrientation,
  SingularJacobian,
  NoZeroFound,
  IntegratorFailure,
  InvalidArgument,
  Config,
};

const char* to_string(ErrorKind kind);

/// Library-wide exception. `kind` identifies the failure class; `best_residual`
/// is filled by iterative routines that give up.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what, double best_residual = -1.0)
      : std::runtime_error(what), kind_(kind), best_residual_(best_residual) {}

  ErrorKind kind() const noexcept { return kind_; }
  double best_residual() const noexcept { return best_residual_; }

 private:
  ErrorKind kind_;
  double best_residual_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& what, double best_residual = -1.0);

/// Deterministic set of unit directions covering S^{m-1}: coordinate axes,
/// their negatives and a low-discrepancy fill (uniform angles for m = 2,
/// Fibonacci lattice for m = 3, Halton-based Gaussian fill for m >= 4).
std::vector<Vec> sphere_directions(int dim, int count);

/// Runs fn(i) for i in [0, count) on up to `workers` threads. Each index is
/// processed exactly once; callers write into per-index slots so results do
/// not depend on scheduling.
void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn);

/// Worker count used when the caller passes 0.
int default_workers();

/// Forward finite-difference Jacobian with step sqrt(eps) * (1 + |x_j|).
Mat fd_jacobian(const VecMap& f, const Vec& x, const Vec* fx = nullptr);

}  // namespace phicyc
