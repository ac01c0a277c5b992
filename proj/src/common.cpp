#include "phicyc/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <thread>

namespace phicyc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::CodomainViolation: return "CodomainViolation";
    case ErrorKind::NonConvergence: return "NonConvergence";
    case ErrorKind::NotCoercive: return "NotCoercive";
    case ErrorKind::BoundaryZero: return "BoundaryZero";
    case ErrorKind::InconsistentOrientation: return "InconsistentOrientation";
    case ErrorKind::SingularJacobian: return "SingularJacobian";
    case ErrorKind::NoZeroFound: return "NoZeroFound";
    case ErrorKind::IntegratorFailure: return "IntegratorFailure";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Config: return "Config";
  }
  return "Unknown";
}

void fail(ErrorKind kind, const std::string& what, double best_residual) {
  throw Error(kind, std::string(to_string(kind)) + ": " + what, best_residual);
}

namespace {

double halton(int index, int base) {
  double f = 1.0;
  double r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};

}  // namespace

std::vector<Vec> sphere_directions(int dim, int count) {
  if (dim < 1) fail(ErrorKind::InvalidArgument, "sphere_directions: dim must be positive");
  std::vector<Vec> dirs;
  if (dim == 1) {
    dirs.push_back(Vec::Constant(1, 1.0));
    dirs.push_back(Vec::Constant(1, -1.0));
    return dirs;
  }
  for (int i = 0; i < dim; ++i) {
    for (double s : {1.0, -1.0}) {
      Vec e = Vec::Zero(dim);
      e(i) = s;
      dirs.push_back(e);
    }
  }
  const int fill = std::max(0, count - 2 * dim);
  if (dim == 2) {
    const int n = std::max(fill, 4);
    for (int k = 0; k < n; ++k) {
      const double a = 2.0 * std::numbers::pi * (k + 0.5) / n;
      Vec v(2);
      v << std::cos(a), std::sin(a);
      dirs.push_back(v);
    }
  } else if (dim == 3) {
    const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < fill; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / fill;
      const double rho = std::sqrt(std::max(0.0, 1.0 - z * z));
      Vec v(3);
      v << rho * std::cos(golden * k), rho * std::sin(golden * k), z;
      dirs.push_back(v);
    }
  } else {
    // Box-Muller on Halton points gives a deterministic, roughly uniform cloud.
    for (int k = 1; k <= fill; ++k) {
      Vec v(dim);
      for (int j = 0; j < dim; j += 2) {
        const double u1 = std::max(halton(k, kPrimes[j % 12]), 1e-12);
        const double u2 = halton(k, kPrimes[(j + 1) % 12]);
        const double r = std::sqrt(-2.0 * std::log(u1));
        v(j) = r * std::cos(2.0 * std::numbers::pi * u2);
        if (j + 1 < dim) v(j + 1) = r * std::sin(2.0 * std::numbers::pi * u2);
      }
      const double n = v.norm();
      if (n > 1e-12) dirs.push_back(v / n);
    }
  }
  return dirs;
}

int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

void parallel_for(std::size_t count, int workers, const std::function<void(std::size_t)>& fn) {
  if (workers <= 0) workers = default_workers();
  const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(workers), count);
  if (nthreads <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(nthreads);
  std::vector<std::thread> pool;
  pool.reserve(nthreads);
  for (std::size_t w = 0; w < nthreads; ++w) {
    pool.emplace_back([&, w] {
      try {
        // Static striding keeps the index -> thread assignment reproducible.
        for (std::size_t i = w; i < count; i += nthreads) fn(i);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

Mat fd_jacobian(const VecMap& f, const Vec& x, const Vec* fx) {
  const Vec f0 = fx ? *fx : f(x);
  Mat jac(f0.size(), x.size());
  const double sqrt_eps = std::sqrt(std::numeric_limits<double>::epsilon());
  Vec xp = x;
  for (Eigen::Index j = 0; j < x.size(); ++j) {
    const double h = sqrt_eps * (1.0 + std::abs(x(j)));
    xp(j) = x(j) + h;
    const double hh = xp(j) - x(j);
    jac.col(j) = (f(xp) - f0) / hh;
    xp(j) = x(j);
  }
  return jac;
}

}  // namespace phicyc
