#include "phicyc/config.hpp"

#include "phicyc/expr.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <sstream>

namespace phicyc {

const char* to_string(RunMode m) {
  switch (m) {
    case RunMode::HartmanKnobloch: return "hartman_knobloch";
    case RunMode::CyclicScaleLast: return "cyclic_scale_last";
    case RunMode::CyclicAutonomous: return "cyclic_autonomous";
    case RunMode::PhiLaplacianScaled: return "phi_laplacian_scaled";
    case RunMode::PhiLaplacianAutonomous: return "phi_laplacian_autonomous";
    case RunMode::MonotonicityCheck: return "monotonicity_check";
  }
  return "unknown";
}

namespace {

using Consts = std::map<std::string, double>;

[[noreturn]] void bad(const std::string& where, const std::string& msg) {
  fail(ErrorKind::Config, "config error at " + (where.empty() ? std::string("/") : where) + ": " + msg);
}

std::string at(const std::string& where, const std::string& key) { return where + "/" + key; }
std::string at(const std::string& where, std::size_t i) { return where + "/" + std::to_string(i); }

void require_object(const Json& j, const std::string& where) {
  if (!j.is_object()) bad(where, "must be an object");
}

void check_keys(const Json& j, const std::string& where, std::initializer_list<const char*> allowed) {
  require_object(j, where);
  for (const auto& [key, value] : j.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      bad(at(where, key), "unknown field");
    }
  }
}

const Json& require(const Json& j, const std::string& key, const std::string& where) {
  if (!j.contains(key)) bad(at(where, key), "missing required field");
  return j.at(key);
}

/// Number literal or constant expression such as "pi/4".
double number_value(const Json& v, const std::string& where, const Consts& consts = {}) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    try {
      return Expr::parse(v.get<std::string>(), {}, consts).eval({});
    } catch (const Error& e) {
      bad(where, e.what());
    }
  }
  bad(where, "must be a number");
}

double get_number(const Json& j, const std::string& key, const std::string& where, double fallback,
                  const Consts& consts = {}) {
  if (!j.contains(key)) return fallback;
  const double x = number_value(j.at(key), at(where, key), consts);
  if (!std::isfinite(x)) bad(at(where, key), "must be finite");
  return x;
}

double get_positive(const Json& j, const std::string& key, const std::string& where, double fallback,
                    const Consts& consts = {}) {
  const double x = get_number(j, key, where, fallback, consts);
  if (!(x > 0.0)) bad(at(where, key), "must be positive");
  return x;
}

double require_positive(const Json& j, const std::string& key, const std::string& where, const Consts& consts = {}) {
  require(j, key, where);
  return get_positive(j, key, where, 1.0, consts);
}

int get_int(const Json& j, const std::string& key, const std::string& where, int fallback, int min_value) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  if (!v.is_number_integer()) bad(at(where, key), "must be an integer");
  const auto x = v.get<long long>();
  if (x < min_value) bad(at(where, key), "must be at least " + std::to_string(min_value));
  if (x > 1000000000LL) bad(at(where, key), "too large");
  return static_cast<int>(x);
}

bool get_bool(const Json& j, const std::string& key, const std::string& where, bool fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_boolean()) bad(at(where, key), "must be a boolean");
  return j.at(key).get<bool>();
}

std::string get_string(const Json& j, const std::string& key, const std::string& where, const std::string& fallback) {
  if (!j.contains(key)) return fallback;
  if (!j.at(key).is_string()) bad(at(where, key), "must be a string");
  return j.at(key).get<std::string>();
}

Vec get_vec(const Json& v, const std::string& where, int size, const Consts& consts = {}) {
  if (size == 1 && (v.is_number() || v.is_string())) return Vec::Constant(1, number_value(v, where, consts));
  if (!v.is_array()) bad(where, "must be an array of numbers");
  if (static_cast<int>(v.size()) != size) bad(where, "must have " + std::to_string(size) + " entries");
  Vec out(size);
  for (int i = 0; i < size; ++i) out(i) = number_value(v.at(static_cast<std::size_t>(i)), at(where, std::size_t(i)), consts);
  return out;
}

std::vector<double> get_grid(const Json& j, const std::string& key, const std::string& where,
                             std::vector<double> fallback) {
  if (!j.contains(key)) return fallback;
  const Json& v = j.at(key);
  const std::string w = at(where, key);
  if (!v.is_array() || v.empty()) bad(w, "must be a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double x = number_value(v.at(i), at(w, i));
    if (!(x >= 0.0 && x <= 1.0)) bad(at(w, i), "parameters must lie in [0, 1]");
    if (!out.empty() && !(x > out.back())) bad(at(w, i), "parameters must be strictly increasing");
    out.push_back(x);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Expressions

/// Vector of expressions over a shared variable list.
struct ExprVec {
  std::vector<Expr> comps;

  Vec eval(const std::vector<double>& values) const {
    Vec out(static_cast<Eigen::Index>(comps.size()));
    for (std::size_t i = 0; i < comps.size(); ++i) out(static_cast<Eigen::Index>(i)) = comps[i].eval(values);
    return out;
  }
};

ExprVec parse_expr_vec(const Json& v, const std::string& where, int m, const std::vector<std::string>& vars,
                       const Consts& consts) {
  ExprVec out;
  auto one = [&](const Json& s, const std::string& w) {
    if (!s.is_string() && !s.is_number()) bad(w, "must be an expression string");
    const std::string src = s.is_string() ? s.get<std::string>() : s.dump();
    try {
      out.comps.push_back(Expr::parse(src, vars, consts));
    } catch (const Error& e) {
      bad(w, e.what());
    }
  };
  if (m == 1 && !v.is_array()) {
    one(v, where);
    return out;
  }
  if (!v.is_array() || static_cast<int>(v.size()) != m) bad(where, "must be an array of " + std::to_string(m) + " expressions");
  for (std::size_t i = 0; i < v.size(); ++i) one(v.at(i), at(where, i));
  return out;
}

/// Names for a vector argument: prefix1..prefixm, plus `prefix` alone when m = 1.
void add_vector_vars(std::vector<std::string>& vars, const std::string& prefix, int m) {
  for (int j = 1; j <= m; ++j) vars.push_back(prefix + std::to_string(j));
  if (m == 1) vars.push_back(prefix);
}

void push_vector_values(std::vector<double>& values, const Vec& x) {
  for (Eigen::Index j = 0; j < x.size(); ++j) values.push_back(x(j));
  if (x.size() == 1) values.push_back(x(0));
}

ScalarHomeo parse_scalar_homeo(const Json& j, const std::string& where) {
  check_keys(j, where, {"forward", "inverse"});
  const std::string fw = get_string(j, "forward", where, "");
  if (fw.empty()) bad(at(where, "forward"), "missing required field");
  ScalarHomeo h;
  try {
    const Expr f = Expr::parse(fw, {"s"});
    h.forward = [f](double s) { return f.eval(std::span<const double>(&s, 1)); };
    if (j.contains("inverse")) {
      const Expr g = Expr::parse(get_string(j, "inverse", where, ""), {"y"});
      h.inverse = [g](double y) { return g.eval(std::span<const double>(&y, 1)); };
    }
  } catch (const Error& e) {
    bad(where, e.what());
  }
  return h;
}

std::vector<std::pair<double, double>> read_table(const std::filesystem::path& path, const std::string& where) {
  std::ifstream in(path);
  if (!in) bad(where, "cannot read table file " + path.string());
  std::vector<std::pair<double, double>> out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    double angle = 0.0;
    double weight = 0.0;
    if (!(ls >> angle)) continue;
    if (!(ls >> weight)) bad(where, path.string() + ":" + std::to_string(lineno) + ": expected 'angle weight'");
    out.emplace_back(angle, weight);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Systems

int get_dim(const Json& j, const std::string& where) {
  require(j, "m", where);
  return get_int(j, "m", where, 1, 1);
}

CyclicSystem build_phi_laplacian(const Json& j, const std::string& w, const std::filesystem::path& base) {
  check_keys(j, w, {"builder", "T", "m", "operator", "k", "k0"});
  const int m = get_dim(j, w);
  const double T = require_positive(j, "T", w);
  const Consts consts{{"T", T}};
  const PhiOperator phi = parse_operator(require(j, "operator", w), m, at(w, "operator"), base);
  std::vector<std::string> vars{"t"};
  add_vector_vars(vars, "u", m);
  add_vector_vars(vars, "v", m);
  const ExprVec k = parse_expr_vec(require(j, "k", w), at(w, "k"), m, vars, consts);
  PhiLaplacianForcing kf = [k](double t, const Vec& u, const Vec& v) {
    std::vector<double> vals{t};
    push_vector_values(vals, u);
    push_vector_values(vals, v);
    return k.eval(vals);
  };
  std::function<Vec(const Vec&, const Vec&)> k0f;
  if (j.contains("k0")) {
    std::vector<std::string> vars0;
    add_vector_vars(vars0, "u", m);
    add_vector_vars(vars0, "v", m);
    const ExprVec k0 = parse_expr_vec(j.at("k0"), at(w, "k0"), m, vars0, consts);
    k0f = [k0](const Vec& u, const Vec& v) {
      std::vector<double> vals;
      push_vector_values(vals, u);
      push_vector_values(vals, v);
      return k0.eval(vals);
    };
  }
  try {
    return from_phi_laplacian(phi, kf, T, k0f);
  } catch (const Error& e) {
    bad(w, e.what());
  }
}

CyclicSystem build_nth_order(const Json& j, const std::string& w, const std::filesystem::path& base) {
  check_keys(j, w, {"builder", "T", "m", "operators", "k"});
  const int m = get_dim(j, w);
  const double T = require_positive(j, "T", w);
  const Consts consts{{"T", T}};
  const Json& ops = require(j, "operators", w);
  if (!ops.is_array() || ops.empty()) bad(at(w, "operators"), "must be a non-empty array of operators");
  std::vector<PhiOperator> phis;
  for (std::size_t i = 0; i < ops.size(); ++i) phis.push_back(parse_operator(ops.at(i), m, at(at(w, "operators"), i), base));
  const int nargs = static_cast<int>(phis.size());
  std::vector<std::string> vars{"t"};
  add_vector_vars(vars, "u", m);
  for (int i = 1; i <= nargs; ++i) {
    const std::string d = "d" + std::to_string(i);
    if (m == 1) {
      vars.push_back(d);
    } else {
      for (int c = 1; c <= m; ++c) vars.push_back(d + "_" + std::to_string(c));
    }
  }
  const ExprVec k = parse_expr_vec(require(j, "k", w), at(w, "k"), m, vars, consts);
  ChainForcing kf = [k](double t, const std::vector<Vec>& args) {
    std::vector<double> vals{t};
    push_vector_values(vals, args.front());
    for (std::size_t i = 1; i < args.size(); ++i) {
      for (Eigen::Index c = 0; c < args[i].size(); ++c) vals.push_back(args[i](c));
    }
    return k.eval(vals);
  };
  try {
    return from_nth_order(phis, kf, T);
  } catch (const Error& e) {
    bad(w, e.what());
  }
}

CyclicSystem build_kolmogorov(const Json& j, const std::string& w) {
  check_keys(j, w, {"builder", "T", "m", "K", "K_last"});
  const int m = get_dim(j, w);
  const double T = require_positive(j, "T", w);
  const Consts consts{{"T", T}};
  const Json& K = require(j, "K", w);
  if (!K.is_array()) bad(at(w, "K"), "must be an array of maps");
  std::vector<std::string> zvars;
  add_vector_vars(zvars, "z", m);
  std::vector<VecMap> maps;
  for (std::size_t i = 0; i < K.size(); ++i) {
    const ExprVec e = parse_expr_vec(K.at(i), at(at(w, "K"), i), m, zvars, consts);
    maps.push_back([e](const Vec& z) {
      std::vector<double> vals;
      push_vector_values(vals, z);
      return e.eval(vals);
    });
  }
  std::vector<std::string> lvars{"t"};
  add_vector_vars(lvars, "z", m);
  const ExprVec last = parse_expr_vec(require(j, "K_last", w), at(w, "K_last"), m, lvars, consts);
  TimeVecMap lf = [last](double t, const Vec& z) {
    std::vector<double> vals{t};
    push_vector_values(vals, z);
    return last.eval(vals);
  };
  try {
    return from_kolmogorov(maps, lf, m, T);
  } catch (const Error& e) {
    bad(w, e.what());
  }
}

CyclicSystem build_generic(const Json& j, const std::string& w) {
  check_keys(j, w, {"builder", "T", "m", "n", "g", "h", "h0", "breakpoints"});
  const int m = get_dim(j, w);
  require(j, "n", w);
  const int n = get_int(j, "n", w, 1, 1);
  const double T = require_positive(j, "T", w);
  const Consts consts{{"T", T}};
  CyclicSystem sys;
  sys.n = n;
  sys.m = m;
  sys.T = T;
  std::vector<std::string> yvars;
  add_vector_vars(yvars, "y", m);
  const Json gj = j.contains("g") ? j.at("g") : Json::array();
  if (!gj.is_array() || static_cast<int>(gj.size()) != n - 1) {
    bad(at(w, "g"), "must be an array of n - 1 = " + std::to_string(n - 1) + " maps");
  }
  for (std::size_t i = 0; i < gj.size(); ++i) {
    const ExprVec e = parse_expr_vec(gj.at(i), at(at(w, "g"), i), m, yvars, consts);
    sys.g.push_back([e](const Vec& y) {
      std::vector<double> vals;
      push_vector_values(vals, y);
      return e.eval(vals);
    });
  }
  std::vector<std::string> xvars;
  for (int i = 1; i <= n; ++i) {
    const std::string x = "x" + std::to_string(i);
    if (m == 1) {
      xvars.push_back(x);
    } else {
      for (int c = 1; c <= m; ++c) xvars.push_back(x + "_" + std::to_string(c));
    }
  }
  std::vector<std::string> tx{"t"};
  tx.insert(tx.end(), xvars.begin(), xvars.end());
  const ExprVec h = parse_expr_vec(require(j, "h", w), at(w, "h"), m, tx, consts);
  sys.h = [h](double t, const Vec& x) {
    std::vector<double> vals{t};
    vals.insert(vals.end(), x.data(), x.data() + x.size());
    return h.eval(vals);
  };
  if (j.contains("h0")) {
    const ExprVec h0 = parse_expr_vec(j.at("h0"), at(w, "h0"), m, xvars, consts);
    sys.h0 = [h0](const Vec& x) { return h0.eval(std::vector<double>(x.data(), x.data() + x.size())); };
  }
  if (j.contains("breakpoints")) {
    const Json& b = j.at("breakpoints");
    if (!b.is_array()) bad(at(w, "breakpoints"), "must be an array");
    for (std::size_t i = 0; i < b.size(); ++i) {
      const double t = number_value(b.at(i), at(at(w, "breakpoints"), i), consts);
      if (!(t >= 0.0 && t < T)) bad(at(at(w, "breakpoints"), i), "must lie in [0, T)");
      sys.breakpoints.push_back(t);
    }
  }
  try {
    sys.validate();
  } catch (const Error& e) {
    bad(w, e.what());
  }
  return sys;
}

CyclicSystem build_system(const Json& j, const std::string& w, const std::filesystem::path& base) {
  require_object(j, w);
  const std::string builder = get_string(j, "builder", w, "");
  if (builder == "phi_laplacian") return build_phi_laplacian(j, w, base);
  if (builder == "nth_order") return build_nth_order(j, w, base);
  if (builder == "kolmogorov") return build_kolmogorov(j, w);
  if (builder == "generic") return build_generic(j, w);
  bad(at(w, "builder"), "must be one of phi_laplacian, nth_order, kolmogorov, generic");
}

BlockNorm parse_norm(const Json& j, const std::string& w) {
  const std::string s = get_string(j, "norm", w, "max");
  if (s == "max") return BlockNorm::Max;
  if (s == "euclidean") return BlockNorm::Euclidean;
  bad(at(w, "norm"), "must be 'max' or 'euclidean'");
}

FunctionBox parse_box(const Json& j, const std::string& w, int n, int m) {
  check_keys(j, w, {"blocks", "derivative_bound"});
  const Json& blocks = require(j, "blocks", w);
  const std::string bw = at(w, "blocks");
  if (!blocks.is_array() || static_cast<int>(blocks.size()) != n) {
    bad(bw, "must list one block per system block (" + std::to_string(n) + ")");
  }
  FunctionBox box;
  for (std::size_t i = 0; i < blocks.size(); ++i) {
    const Json& b = blocks.at(i);
    const std::string w2 = at(bw, i);
    check_keys(b, w2, {"center", "radius", "norm"});
    BlockBound bb;
    bb.center = b.contains("center") ? get_vec(b.at("center"), at(w2, "center"), m) : Vec::Zero(m);
    bb.radius = require_positive(b, "radius", w2);
    bb.norm = parse_norm(b, w2);
    box.blocks.push_back(bb);
  }
  if (j.contains("derivative_bound")) box.derivative_bound = get_positive(j, "derivative_bound", w, 1.0);
  try {
    box.validate(n, m);
  } catch (const Error& e) {
    bad(w, e.what());
  }
  return box;
}

// ---------------------------------------------------------------------------
// Options

void parse_solver(const Json& j, const std::string& w, SolverOptions& s) {
  check_keys(j, w, {"method", "harmonics", "max_harmonics", "adapt_harmonics", "tol", "max_iter"});
  const std::string method = get_string(j, "method", w, "auto");
  if (method == "auto") {
    s.method = SolverMethod::Auto;
  } else if (method == "harmonic_balance") {
    s.method = SolverMethod::HarmonicBalance;
  } else if (method == "shooting") {
    s.method = SolverMethod::Shooting;
  } else {
    bad(at(w, "method"), "must be one of auto, harmonic_balance, shooting");
  }
  s.harmonics = get_int(j, "harmonics", w, s.harmonics, 1);
  s.max_harmonics = get_int(j, "max_harmonics", w, std::max(s.max_harmonics, s.harmonics), 1);
  if (s.max_harmonics < s.harmonics) bad(at(w, "max_harmonics"), "must be at least harmonics");
  s.adapt_harmonics = get_bool(j, "adapt_harmonics", w, s.adapt_harmonics);
  s.tol = get_positive(j, "tol", w, s.tol);
  s.max_iter = get_int(j, "max_iter", w, s.max_iter, 1);
}

void parse_continuation(const Json& j, const std::string& w, CertifyOptions& c) {
  check_keys(j, w, {"theta0", "scaled_params", "autonomous_params", "min_step", "max_bisections"});
  c.theta0 = get_positive(j, "theta0", w, c.theta0);
  if (!(c.theta0 < 1.0)) bad(at(w, "theta0"), "must lie in (0, 1)");
  c.scaled_params = get_grid(j, "scaled_params", w, c.scaled_params);
  if (c.scaled_params.front() <= 0.0) bad(at(w, "scaled_params"), "scaled parameters must be positive");
  c.autonomous_params = get_grid(j, "autonomous_params", w, c.autonomous_params);
  c.sweep.min_step = get_positive(j, "min_step", w, c.sweep.min_step);
  c.sweep.max_bisections = get_int(j, "max_bisections", w, c.sweep.max_bisections, 0);
}

void parse_falsify(const Json& j, const std::string& w, CertifyOptions& c) {
  check_keys(j, w, {"lattice_per_axis", "boundary_seeds", "random_seeds", "witness_tol", "bisection_steps"});
  c.starts.lattice_per_axis = get_int(j, "lattice_per_axis", w, c.starts.lattice_per_axis, 1);
  c.starts.boundary_seeds = get_int(j, "boundary_seeds", w, c.starts.boundary_seeds, 0);
  c.starts.random_seeds = get_int(j, "random_seeds", w, c.starts.random_seeds, 0);
  c.falsify.witness_tol = get_positive(j, "witness_tol", w, c.falsify.witness_tol);
  c.falsify.bisection_steps = get_int(j, "bisection_steps", w, c.falsify.bisection_steps, 0);
}

void parse_degree(const Json& j, const std::string& w, RefinementSpec& d) {
  check_keys(j, w, {"initial", "max_levels", "zero_tol"});
  d.initial = get_int(j, "initial", w, d.initial, 2);
  d.max_levels = get_int(j, "max_levels", w, d.max_levels, 1);
  d.zero_tol = get_positive(j, "zero_tol", w, d.zero_tol);
}

void parse_start(const Json& j, const std::string& w, StartOptions& s) {
  check_keys(j, w, {"starts_per_axis", "tol", "max_iter"});
  s.starts_per_axis = get_int(j, "starts_per_axis", w, s.starts_per_axis, 1);
  s.tol = get_positive(j, "tol", w, s.tol);
  s.max_iter = get_int(j, "max_iter", w, s.max_iter, 1);
}

HartmanProblem parse_hartman(const Json& j, const std::string& w, const std::filesystem::path& base,
                             CertifyOptions& c) {
  check_keys(j, w, {"m", "T", "R", "operator", "f", "directions", "time_samples", "slack"});
  const int m = get_dim(j, w);
  const double T = require_positive(j, "T", w);
  const Consts consts{{"T", T}};
  HartmanProblem p{parse_operator(require(j, "operator", w), m, at(w, "operator"), base), {}, 1.0, T};
  p.R = require_positive(j, "R", w, consts);
  std::vector<std::string> vars{"t"};
  add_vector_vars(vars, "u", m);
  const ExprVec f = parse_expr_vec(require(j, "f", w), at(w, "f"), m, vars, consts);
  p.f = [f](double t, const Vec& u) {
    std::vector<double> vals{t};
    push_vector_values(vals, u);
    return f.eval(vals);
  };
  c.hartman.directions = get_int(j, "directions", w, c.hartman.directions, 2);
  c.hartman.time_samples = get_int(j, "time_samples", w, c.hartman.time_samples, 1);
  c.hartman.slack = get_positive(j, "slack", w, c.hartman.slack);
  if (!p.phi.a_phi_form()) bad(at(w, "operator"), "operator must have the form A(xi) xi");
  return p;
}

void parse_monotonicity(const Json& j, const std::string& w, const std::filesystem::path& base, RunConfig& rc) {
  check_keys(j, w, {"m", "operator", "pairs", "lower", "upper", "grid_per_axis", "random_pairs"});
  const int m = get_dim(j, w);
  rc.mono_operator = parse_operator(require(j, "operator", w), m, at(w, "operator"), base);
  PairSampler& s = rc.sampler;
  if (j.contains("pairs")) {
    const Json& pairs = j.at("pairs");
    const std::string pw = at(w, "pairs");
    if (!pairs.is_array()) bad(pw, "must be an array of [x1, x2] pairs");
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      const Json& pr = pairs.at(i);
      if (!pr.is_array() || pr.size() != 2) bad(at(pw, i), "must be a pair [x1, x2]");
      s.pairs.emplace_back(get_vec(pr.at(0), at(at(pw, i), 0), m), get_vec(pr.at(1), at(at(pw, i), 1), m));
    }
  }
  s.lower = j.contains("lower") ? get_vec(j.at("lower"), at(w, "lower"), m) : Vec::Constant(m, -1.0);
  s.upper = j.contains("upper") ? get_vec(j.at("upper"), at(w, "upper"), m) : Vec::Constant(m, 1.0);
  if (!(s.upper.array() > s.lower.array()).all()) bad(at(w, "upper"), "must exceed lower componentwise");
  s.grid_per_axis = get_int(j, "grid_per_axis", w, 0, 0);
  s.random_pairs = get_int(j, "random_pairs", w, 0, 0);
  s.seed = rc.seed;
}

RunMode parse_mode(const Json& j) {
  const std::string s = get_string(j, "mode", "", "");
  for (RunMode m : {RunMode::HartmanKnobloch, RunMode::CyclicScaleLast, RunMode::CyclicAutonomous,
                    RunMode::PhiLaplacianScaled, RunMode::PhiLaplacianAutonomous, RunMode::MonotonicityCheck}) {
    if (s == to_string(m)) return m;
  }
  bad("/mode",
      "must be one of hartman_knobloch, cyclic_scale_last, cyclic_autonomous, phi_laplacian_scaled, "
      "phi_laplacian_autonomous, monotonicity_check");
}

}  // namespace

PhiOperator parse_operator(const Json& j, int dim, const std::string& w, const std::filesystem::path& base) {
  require_object(j, w);
  const std::string kind = get_string(j, "kind", w, "");
  auto need_dim = [&](int d) {
    if (dim != d) bad(at(w, "kind"), kind + " is defined for dimension " + std::to_string(d) + " only");
  };
  try {
    if (kind == "p_laplacian") {
      check_keys(j, w, {"kind", "p"});
      const double p = get_number(j, "p", w, 2.0);
      if (!(p > 1.0)) bad(at(w, "p"), "must exceed 1");
      return PhiOperator::p_laplacian(dim, p);
    }
    if (kind == "identity") {
      check_keys(j, w, {"kind"});
      return PhiOperator::identity(dim);
    }
    if (kind == "arctan_radial") {
      check_keys(j, w, {"kind"});
      return PhiOperator::arctan_radial(dim);
    }
    if (kind == "minkowski") {
      check_keys(j, w, {"kind", "a"});
      return PhiOperator::minkowski(dim, get_positive(j, "a", w, 1.0));
    }
    if (kind == "mean_curvature") {
      check_keys(j, w, {"kind"});
      return PhiOperator::mean_curvature(dim);
    }
    if (kind == "fig1_planar") {
      check_keys(j, w, {"kind"});
      need_dim(2);
      return PhiOperator::fig1_planar();
    }
    if (kind == "anisotropic") {
      check_keys(j, w, {"kind", "p", "samples", "calA"});
      need_dim(2);
      const double p = get_number(j, "p", w, 2.0);
      if (!(p > 1.0)) bad(at(w, "p"), "must exceed 1");
      std::vector<std::pair<double, double>> samples;
      if (j.contains("calA")) {
        const std::string spec = get_string(j, "calA", w, "");
        if (spec.rfind("table:", 0) != 0) bad(at(w, "calA"), "must have the form table:<file>");
        std::filesystem::path file = spec.substr(6);
        if (file.is_relative()) file = base / file;
        samples = read_table(file, at(w, "calA"));
      } else {
        const Json& s = require(j, "samples", w);
        const std::string sw = at(w, "samples");
        if (!s.is_array()) bad(sw, "must be an array of [angle, weight] pairs");
        for (std::size_t i = 0; i < s.size(); ++i) {
          if (!s.at(i).is_array() || s.at(i).size() != 2) bad(at(sw, i), "must be a pair [angle, weight]");
          samples.emplace_back(number_value(s.at(i).at(0), at(at(sw, i), 0)),
                               number_value(s.at(i).at(1), at(at(sw, i), 1)));
        }
      }
      if (samples.empty()) bad(w, "anisotropic weight needs at least one sample");
      return PhiOperator::anisotropic_table(p, samples);
    }
    if (kind == "radial_gamma") {
      check_keys(j, w, {"kind", "gamma", "zeta_inverse", "coercive", "domain_radius", "codomain_radius"});
      const Expr g = Expr::parse(get_string(j, "gamma", w, ""), {"s"});
      std::function<double(double)> gamma = [g](double s) { return g.eval(std::span<const double>(&s, 1)); };
      std::function<double(double)> zinv;
      if (j.contains("zeta_inverse")) {
        const Expr z = Expr::parse(get_string(j, "zeta_inverse", w, ""), {"y"});
        zinv = [z](double y) { return z.eval(std::span<const double>(&y, 1)); };
      }
      const RegionDescriptor dom = j.contains("domain_radius")
                                       ? RegionDescriptor::ball(get_positive(j, "domain_radius", w, 1.0))
                                       : RegionDescriptor::whole();
      const RegionDescriptor cod = j.contains("codomain_radius")
                                       ? RegionDescriptor::ball(get_positive(j, "codomain_radius", w, 1.0))
                                       : RegionDescriptor::whole();
      return PhiOperator::radial_gamma(dim, gamma, dom, cod, get_bool(j, "coercive", w, true), zinv);
    }
    if (kind == "matrix_composed") {
      check_keys(j, w, {"kind", "matrix", "components"});
      const Json& mj = require(j, "matrix", w);
      const std::string mw = at(w, "matrix");
      if (!mj.is_array() || static_cast<int>(mj.size()) != dim) bad(mw, "must be a " + std::to_string(dim) + "x" + std::to_string(dim) + " array");
      Mat A(dim, dim);
      for (int r = 0; r < dim; ++r) A.row(r) = get_vec(mj.at(static_cast<std::size_t>(r)), at(mw, std::size_t(r)), dim).transpose();
      const Json& cj = require(j, "components", w);
      const std::string cw = at(w, "components");
      if (!cj.is_array() || static_cast<int>(cj.size()) != dim) bad(cw, "must list " + std::to_string(dim) + " scalar maps");
      std::vector<ScalarHomeo> comps;
      for (std::size_t i = 0; i < cj.size(); ++i) comps.push_back(parse_scalar_homeo(cj.at(i), at(cw, i)));
      return PhiOperator::matrix_composed(A, comps);
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    bad(w, e.what());
  }
  bad(at(w, "kind"),
      "unknown operator kind '" + kind +
          "' (p_laplacian, identity, arctan_radial, minkowski, mean_curvature, anisotropic, fig1_planar, "
          "radial_gamma, matrix_composed)");
}

RunConfig parse_config(const Json& j, const std::filesystem::path& base_dir) {
  check_keys(j, "", {"name", "description", "mode", "seed", "system", "box", "hartman", "monotonicity", "solver",
                     "continuation", "falsify", "degree", "start", "output", "cross_check"});
  RunConfig rc;
  rc.name = get_string(j, "name", "", "");
  rc.description = get_string(j, "description", "", "");
  require(j, "mode", "");
  rc.mode = parse_mode(j);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) bad("/seed", "must be a non-negative integer");
    rc.seed = j.at("seed").get<std::uint64_t>();
  }
  CertifyOptions& c = rc.certify;
  if (j.contains("solver")) parse_solver(j.at("solver"), "/solver", c.sweep.solver);
  c.falsify.solver = c.sweep.solver;
  if (j.contains("continuation")) parse_continuation(j.at("continuation"), "/continuation", c);
  if (j.contains("falsify")) parse_falsify(j.at("falsify"), "/falsify", c);
  if (j.contains("degree")) parse_degree(j.at("degree"), "/degree", c.degree);
  if (j.contains("start")) parse_start(j.at("start"), "/start", c.start);
  if (j.contains("output")) {
    check_keys(j.at("output"), "/output", {"trajectory_samples"});
    rc.trajectory_samples = get_int(j.at("output"), "trajectory_samples", "/output", rc.trajectory_samples, 2);
  }
  c.cross_check = get_bool(j, "cross_check", "", c.cross_check);
  c.starts.seed = rc.seed;

  auto forbid = [&](const char* key) {
    if (j.contains(key)) bad(std::string("/") + key, std::string("not used in mode ") + to_string(rc.mode));
  };
  switch (rc.mode) {
    case RunMode::HartmanKnobloch:
      forbid("system");
      forbid("box");
      forbid("monotonicity");
      rc.hartman = parse_hartman(require(j, "hartman", ""), "/hartman", base_dir, c);
      break;
    case RunMode::MonotonicityCheck:
      forbid("system");
      forbid("box");
      forbid("hartman");
      parse_monotonicity(require(j, "monotonicity", ""), "/monotonicity", base_dir, rc);
      break;
    default: {
      forbid("hartman");
      forbid("monotonicity");
      rc.system = build_system(require(j, "system", ""), "/system", base_dir);
      const bool phi_mode = rc.mode == RunMode::PhiLaplacianScaled || rc.mode == RunMode::PhiLaplacianAutonomous;
      if (phi_mode && rc.system->origin != "phi_laplacian") {
        bad("/system/builder", std::string("mode ") + to_string(rc.mode) + " needs builder phi_laplacian");
      }
      const bool autonomous = rc.mode == RunMode::CyclicAutonomous || rc.mode == RunMode::PhiLaplacianAutonomous;
      if (autonomous && !rc.system->h0) {
        bad("/system", std::string("mode ") + to_string(rc.mode) + " needs an autonomous field (h0 or k0)");
      }
      rc.box = parse_box(require(j, "box", ""), "/box", rc.system->n, rc.system->m);
      break;
    }
  }
  return rc;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Config, "config error at /: cannot read " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Config, std::string("config error at /: invalid JSON: ") + e.what());
  }
  RunConfig rc = parse_config(j, path.parent_path());
  if (rc.name.empty()) rc.name = path.stem().string();
  return rc;
}

std::vector<ExampleEntry> list_examples(const std::filesystem::path& dir) {
  std::vector<ExampleEntry> out;
  std::error_code ec;
  for (const auto& entry : std::filesystem::directory_iterator(dir, ec)) {
    if (entry.path().extension() != ".cfg") continue;
    ExampleEntry e{entry.path().stem().string(), "", entry.path()};
    std::ifstream in(entry.path());
    try {
      const Json j = Json::parse(in, nullptr, true, true);
      if (j.contains("description") && j.at("description").is_string()) e.description = j.at("description");
    } catch (const nlohmann::json::exception&) {
      e.description = "(unreadable)";
    }
    out.push_back(std::move(e));
  }
  std::sort(out.begin(), out.end(), [](const ExampleEntry& a, const ExampleEntry& b) { return a.name < b.name; });
  return out;
}

}  // namespace phicyc
