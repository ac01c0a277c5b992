#include "phicyc/cyclic_system.hpp"

#include <array>
#include <cmath>

namespace phicyc {

const char* to_string(HomotopyFamily f) {
  return f == HomotopyFamily::ScaleLast ? "ScaleLast" : "Interpolate";
}

const char* to_string(BlockNorm b) { return b == BlockNorm::Max ? "max" : "euclidean"; }

void CyclicSystem::validate() const {
  if (n < 1 || m < 1) fail(ErrorKind::InvalidArgument, "CyclicSystem: n and m must be positive");
  if (!(T > 0.0) || !std::isfinite(T)) fail(ErrorKind::InvalidArgument, "CyclicSystem: T must be positive");
  if (static_cast<int>(g.size()) != n - 1) {
    fail(ErrorKind::InvalidArgument, "CyclicSystem: expected n - 1 coupling maps g_i");
  }
  for (const auto& gi : g) {
    if (!gi) fail(ErrorKind::InvalidArgument, "CyclicSystem: empty coupling map");
  }
  if (!h) fail(ErrorKind::InvalidArgument, "CyclicSystem: missing last-block map h");
  if (family == HomotopyFamily::Interpolate && !h0 && !h_tilde) {
    fail(ErrorKind::InvalidArgument, "CyclicSystem: Interpolate family needs h0 or h_tilde");
  }
  for (double b : breakpoints) {
    if (!(b >= 0.0 && b < T)) fail(ErrorKind::InvalidArgument, "CyclicSystem: breakpoint outside [0, T)");
  }
}

Vec CyclicSystem::eval_last(double t, const Vec& x, double param) const {
  if (!(param >= 0.0 && param <= 1.0)) {
    fail(ErrorKind::InvalidArgument, "homotopy parameter outside [0, 1]");
  }
  // Both families reduce to h at param = 1; return it untouched.
  if (param == 1.0) return h(t, x);
  if (family == HomotopyFamily::ScaleLast) return param * h(t, x);
  if (h_tilde) return h_tilde(t, x, param);
  if (!h0) fail(ErrorKind::InvalidArgument, "Interpolate family evaluated without h0");
  if (param == 0.0) return h0(x);
  return param * h(t, x) + (1.0 - param) * h0(x);
}

Vec CyclicSystem::eval_field(double t, const Vec& x, double param) const {
  if (x.size() != dim()) fail(ErrorKind::InvalidArgument, "eval_field: state has wrong dimension");
  Vec out(dim());
  for (int i = 0; i + 1 < n; ++i) out.segment(i * m, m) = g[static_cast<std::size_t>(i)](block(x, i + 1));
  out.segment((n - 1) * m, m) = eval_last(t, x, param);
  return out;
}

double CyclicSystem::node_offset(int nodes) const {
  if (breakpoints.empty()) return 0.0;
  const std::array<double, 5> candidates = {0.5, 0.3819660112501051, 0.7236067977499790,
                                            0.1458980337503155, 0.8541019662496845};
  for (double delta : candidates) {
    bool clear = true;
    for (double b : breakpoints) {
      const double pos = b / T * nodes - delta;
      if (std::abs(pos - std::round(pos)) < 1e-6) clear = false;
    }
    if (clear) return delta;
  }
  return candidates[0];
}

Vec CyclicSystem::averaged_field(const Vec& s, const QuadratureSpec& quad) const {
  if (s.size() != dim()) fail(ErrorKind::InvalidArgument, "averaged_field: state has wrong dimension");
  int nodes = std::max(1, quad.initial_nodes);
  Vec sum = Vec::Zero(m);
  const double delta0 = node_offset(nodes);
  for (int k = 0; k < nodes; ++k) sum += h((k + delta0) * T / nodes, s);
  Vec prev = sum / nodes;
  while (nodes * 2 <= quad.max_nodes) {
    const int next = nodes * 2;
    const double delta = node_offset(next);
    if (delta0 == 0.0 && delta == 0.0) {
      // Trapezoid nodes nest: only the odd nodes are new.
      for (int k = 1; k < next; k += 2) sum += h(k * T / next, s);
    } else {
      sum.setZero();
      for (int k = 0; k < next; ++k) sum += h((k + delta) * T / next, s);
    }
    nodes = next;
    const Vec cur = sum / nodes;
    if ((cur - prev).norm() <= quad.tol * std::max(1.0, cur.norm())) return cur;
    prev = cur;
  }
  fail(ErrorKind::NonConvergence, "averaged_field: quadrature node cap reached");
}

Vec CyclicSystem::reduced_field(const Vec& omega, const QuadratureSpec& quad) const {
  if (omega.size() != m) fail(ErrorKind::InvalidArgument, "reduced_field: omega has wrong dimension");
  Vec s = Vec::Zero(dim());
  s.head(m) = omega;
  return averaged_field(s, quad);
}

Vec CyclicSystem::reduced_field_autonomous(const Vec& omega) const {
  if (!h0) fail(ErrorKind::InvalidArgument, "reduced_field_autonomous: system has no h0");
  if (omega.size() != m) fail(ErrorKind::InvalidArgument, "reduced_field: omega has wrong dimension");
  Vec s = Vec::Zero(dim());
  s.head(m) = omega;
  return h0(s);
}

Vec CyclicSystem::g_hat(const Vec& s, const QuadratureSpec& quad) const {
  Vec out(dim());
  for (int i = 0; i + 1 < n; ++i) out.segment(i * m, m) = g[static_cast<std::size_t>(i)](block(s, i + 1));
  out.segment((n - 1) * m, m) = averaged_field(s, quad);
  return out;
}

Vec CyclicSystem::g_hat_autonomous(const Vec& s) const {
  if (!h0) fail(ErrorKind::InvalidArgument, "g_hat_autonomous: system has no h0");
  Vec out(dim());
  for (int i = 0; i + 1 < n; ++i) out.segment(i * m, m) = g[static_cast<std::size_t>(i)](block(s, i + 1));
  out.segment((n - 1) * m, m) = h0(s);
  return out;
}

bool CyclicSystem::check_periodicity(const std::vector<Vec>& states, int time_samples, double tol) const {
  for (const Vec& x : states) {
    for (int k = 0; k < time_samples; ++k) {
      const double t = T * (k + 0.25) / time_samples;
      const double scale = std::max(1.0, h(t, x).norm());
      if ((h(t + T, x) - h(t, x)).norm() > tol * scale) return false;
    }
  }
  return true;
}

bool CyclicSystem::g_vanish_at_zero(double tol) const {
  const Vec zero = Vec::Zero(m);
  for (const auto& gi : g) {
    if (gi(zero).norm() > tol) return false;
  }
  return true;
}

namespace {

Vec invert_in_domain(const PhiOperator& phi, const Vec& y) {
  try {
    return phi.invert(y);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::CodomainViolation) fail(ErrorKind::DomainViolation, e.what());
    throw;
  }
}

void assert_c4(const CyclicSystem& sys) {
  if (!sys.g_vanish_at_zero()) {
    fail(ErrorKind::InvalidArgument, "operator build produced g_i(0) != 0; phi(0) = 0 is violated");
  }
}

}  // namespace

CyclicSystem from_phi_laplacian(const PhiOperator& phi, PhiLaplacianForcing k, double T,
                                std::function<Vec(const Vec&, const Vec&)> k0) {
  if (!k) fail(ErrorKind::InvalidArgument, "from_phi_laplacian: missing forcing k");
  const int m = phi.dim();
  CyclicSystem sys;
  sys.n = 2;
  sys.m = m;
  sys.T = T;
  sys.g = {[phi](const Vec& y) { return invert_in_domain(phi, y); }};
  sys.h = [phi, k, m](double t, const Vec& x) {
    return Vec(-k(t, x.head(m), invert_in_domain(phi, x.tail(m))));
  };
  if (k0) {
    sys.h0 = [phi, k0, m](const Vec& x) { return Vec(-k0(x.head(m), invert_in_domain(phi, x.tail(m)))); };
  }
  sys.phis = {phi};
  sys.origin = "phi_laplacian";
  sys.validate();
  assert_c4(sys);
  return sys;
}

CyclicSystem from_nth_order(const std::vector<PhiOperator>& phis, ChainForcing k, double T) {
  if (phis.empty()) fail(ErrorKind::InvalidArgument, "from_nth_order: need at least one operator");
  if (!k) fail(ErrorKind::InvalidArgument, "from_nth_order: missing forcing k");
  const int m = phis.front().dim();
  for (const auto& p : phis) {
    if (p.dim() != m) fail(ErrorKind::InvalidArgument, "from_nth_order: operators differ in dimension");
  }
  CyclicSystem sys;
  sys.n = static_cast<int>(phis.size()) + 1;
  sys.m = m;
  sys.T = T;
  for (const auto& p : phis) sys.g.push_back([p](const Vec& y) { return invert_in_domain(p, y); });
  const int n = sys.n;
  sys.h = [phis, k, m, n](double t, const Vec& x) {
    std::vector<Vec> args(static_cast<std::size_t>(n));
    args[0] = x.head(m);
    for (int i = 1; i < n; ++i) {
      args[static_cast<std::size_t>(i)] = invert_in_domain(phis[static_cast<std::size_t>(i - 1)], x.segment(i * m, m));
    }
    return Vec(-k(t, args));
  };
  sys.phis = phis;
  sys.origin = "nth_order";
  sys.validate();
  assert_c4(sys);
  return sys;
}

CyclicSystem from_kolmogorov(const std::vector<VecMap>& K, TimeVecMap K_last, int m, double T) {
  if (!K_last) fail(ErrorKind::InvalidArgument, "from_kolmogorov: missing last map");
  CyclicSystem sys;
  sys.n = static_cast<int>(K.size()) + 1;
  sys.m = m;
  sys.T = T;
  for (const auto& Ki : K) {
    sys.g.push_back([Ki](const Vec& s) { return Vec(Ki(s.array().exp().matrix())); });
  }
  sys.h = [K_last, m](double t, const Vec& x) { return Vec(K_last(t, x.head(m).array().exp().matrix())); };
  sys.origin = "kolmogorov";
  sys.validate();
  return sys;
}

FunctionBox FunctionBox::uniform(int n, int m, double radius, BlockNorm norm) {
  FunctionBox b;
  for (int i = 0; i < n; ++i) b.blocks.push_back({Vec::Zero(m), radius, norm});
  return b;
}

void FunctionBox::validate(int n_blocks, int m) const {
  if (n() != n_blocks) fail(ErrorKind::InvalidArgument, "FunctionBox: block count differs from system");
  for (const auto& b : blocks) {
    if (b.center.size() != m) fail(ErrorKind::InvalidArgument, "FunctionBox: center has wrong dimension");
    if (!(b.radius > 0.0) || !std::isfinite(b.radius)) {
      fail(ErrorKind::InvalidArgument, "FunctionBox: radii must be positive and finite");
    }
  }
  if (derivative_bound && !(*derivative_bound > 0.0)) {
    fail(ErrorKind::InvalidArgument, "FunctionBox: derivative bound must be positive");
  }
}

double FunctionBox::block_distance(int i, const Vec& xi) const {
  const auto& b = blocks[static_cast<std::size_t>(i)];
  const Vec d = xi - b.center;
  return b.norm == BlockNorm::Max ? d.lpNorm<Eigen::Infinity>() : d.norm();
}

double FunctionBox::margin(const std::vector<double>& block_sup_distance, double deriv_sup) const {
  double out = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < blocks.size(); ++i) out = std::min(out, blocks[i].radius - block_sup_distance[i]);
  if (derivative_bound) out = std::min(out, *derivative_bound - deriv_sup);
  return out;
}

bool FunctionBox::zero_in_tail_blocks() const {
  for (int i = 1; i < n(); ++i) {
    const Vec z = Vec::Zero(blocks[static_cast<std::size_t>(i)].center.size());
    if (!(block_distance(i, z) < blocks[static_cast<std::size_t>(i)].radius)) return false;
  }
  return true;
}

RegionBox FunctionBox::block_region(int i) const {
  const auto& b = blocks[static_cast<std::size_t>(i)];
  if (b.norm == BlockNorm::Euclidean && b.center.size() > 1) return RegionBox::ball(b.center, b.radius);
  return RegionBox::box(b.center, Vec::Constant(b.center.size(), b.radius));
}

RegionBox FunctionBox::trace_region() const {
  if (blocks.empty()) fail(ErrorKind::InvalidArgument, "FunctionBox: no blocks");
  if (n() == 1) return block_region(0);
  const int m = static_cast<int>(blocks.front().center.size());
  Vec c(n() * m);
  Vec hw(n() * m);
  for (int i = 0; i < n(); ++i) {
    const auto& b = blocks[static_cast<std::size_t>(i)];
    if (b.norm == BlockNorm::Euclidean && m > 1) {
      fail(ErrorKind::InvalidArgument, "trace of a product of balls is not a box; use the product formula");
    }
    c.segment(i * m, m) = b.center;
    hw.segment(i * m, m).setConstant(b.radius);
  }
  return RegionBox::box(c, hw);
}

}  // namespace phicyc
