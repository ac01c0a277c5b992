#pragma once

#include "phicyc/common.hpp"
#include "phicyc/cyclic_system.hpp"
#include "phicyc/degree.hpp"
#include "phicyc/periodic_solver.hpp"
#include "phicyc/phi_ops.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace phicyc {

// ---------------------------------------------------------------------------
// Hartman condition

struct HartmanSampling {
  int directions = 96;
  int time_samples = 64;
  double slack = 1e-12;
};

struct HartmanReport {
  bool passed = true;       ///< max <f, xi> <= slack
  bool strict = true;       ///< max <f, xi> < -slack
  double max_inner = -std::numeric_limits<double>::infinity();
  std::optional<std::pair<double, Vec>> witness;  ///< (t, xi) attaining max_inner
  int samples = 0;
};

/// Samples <f(t, xi), xi> on the sphere |xi| = R in R^dim times a time grid on [0, T].
HartmanReport hartman_check(const TimeVecMap& f, int dim, double R, double T,
                            const HartmanSampling& sampling = {});

// ---------------------------------------------------------------------------
// A-priori derivative bound

/// (t, xi, lambda) -> R^m.
using FamilyMap = std::function<Vec(double, const Vec&, double)>;

struct AprioriOptions {
  int time_samples = 16;
  int radial_samples = 4;
  int directions = 32;
  int lambda_samples = 4;
  int bisection_steps = 40;
  CoercivityOptions coercivity;
};

struct AprioriBound {
  double d = 0.0;
  double T = 0.0;
  double C_d = 0.0;  ///< max |f(t, xi, lambda)| on [0, T] x B[0, d] x [0, 1]
  double L_d = 0.0;  ///< <phi(xi), xi> > d C_d for |xi| > L_d
  double K_d = 0.0;  ///< sup |phi| on B[0, L_d]
  double M_d = 0.0;  ///< phi^{-1}(B[0, K_d + T C_d]) inside B(0, M_d)
};

/// Chain of constants bounding |u'| for T-periodic solutions of
/// (phi(u'))' + f(t, u, lambda) = 0 with |u| <= d. C_d is the larger of two
/// grid maximizations (the second at doubled resolution). M_d is located by
/// doubling from L_d and tightened by bisection, keeping the upper bracket.
AprioriBound apriori_bound(const PhiOperator& phi, const FamilyMap& f, double d, double T,
                           const AprioriOptions& opts = {});

// ---------------------------------------------------------------------------
// Boundary falsification

struct MultistartPlan {
  int lattice_per_axis = 3;  ///< constant seeds on a lattice of the first block
  int boundary_seeds = 4;    ///< constant seeds at 0.95 radius of each block
  int random_seeds = 4;      ///< seeds with random first-harmonic content
  std::uint64_t seed = 1;
};

struct BoundaryWitness {
  double param = 0.0;
  double margin = 0.0;
  PeriodicSolution solution;
  std::string origin;
};

struct ParamSummary {
  double param = 0.0;
  int converged = 0;
  double min_margin = std::numeric_limits<double>::infinity();
};

struct BoundaryEvidence {
  std::vector<ParamSummary> per_param;
  int starts = 0;
  int solves = 0;
  int converged = 0;
  int exterior = 0;  ///< converged solutions lying outside the closed box
  double min_margin = std::numeric_limits<double>::infinity();  ///< over interior solutions
  double min_margin_param = 0.0;
  /// max sup |x_1'| over converged solutions with sup |x_1| <= first block radius
  double max_first_block_deriv = 0.0;
  std::optional<BoundaryWitness> witness;
};

struct FalsifyOptions {
  SolverOptions solver;
  int workers = 1;
  int bisection_steps = 40;
  double witness_tol = 1e-6;  ///< |margin| below this (relative to the box scale) is a boundary solution
};

/// Multistart search for T-periodic solutions on the box boundary across the
/// parameter grid. A seed whose margin changes sign between consecutive
/// parameters is followed by bisection in the parameter; a margin within
/// witness_tol of zero is reported as the witness.
BoundaryEvidence falsify_boundary(const CyclicSystem& sys, const FunctionBox& box,
                                  const std::vector<double>& params, const MultistartPlan& starts,
                                  const FalsifyOptions& opts = {});

// ---------------------------------------------------------------------------
// Certificates

enum class TheoremMode {
  CyclicScaleLast,
  CyclicAutonomous,
  PhiLaplacianScaled,
  PhiLaplacianAutonomous,
  HartmanKnobloch,
};

enum class Verdict { EvidenceSupportsExistence, HypothesisViolated, Inconclusive };

const char* to_string(TheoremMode m);
const char* to_string(Verdict v);

struct StageRecord {
  std::string name;
  std::string status;  ///< pass, fail, inconclusive, skipped
  std::string detail;
  double seconds = 0.0;
};

struct DegreeReport {
  std::string label;
  DegreeResult result;
};

struct AuxiliaryRun {
  std::string label;
  Verdict verdict = Verdict::Inconclusive;
  std::string detail;
  double residual = 0.0;
  double distance_to_main = 0.0;  ///< sup distance of its solution from the main one
};

struct ExistenceCertificate {
  TheoremMode mode = TheoremMode::CyclicScaleLast;
  Verdict verdict = Verdict::Inconclusive;
  std::string verdict_stage;
  std::string detail;

  std::vector<DegreeReport> degrees;
  std::optional<int> assembled_degree;  ///< degree the verdict relies on
  std::optional<HartmanReport> hartman;
  std::optional<AprioriBound> apriori;
  std::optional<BoundaryEvidence> boundary;
  std::optional<BranchLog> branch;
  std::optional<PeriodicSolution> solution;
  double solution_margin = 0.0;
  double shooting_discrepancy = -1.0;
  FunctionBox box;
  std::vector<StageRecord> stages;
  std::vector<AuxiliaryRun> auxiliary;
};

struct CertifyOptions {
  std::vector<double> scaled_params = {0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99};
  std::vector<double> autonomous_params = {0.0, 0.1, 0.25, 0.5, 0.75, 0.9, 0.99};
  double theta0 = 1e-2;
  SweepOptions sweep;
  MultistartPlan starts;
  FalsifyOptions falsify;
  RefinementSpec degree;
  HartmanSampling hartman;
  AprioriOptions apriori;
  StartOptions start;
  int workers = 1;
  bool fixed_clock = false;
  bool cross_check = true;  ///< scaled/autonomous comparison and epsilon stage in Hartman mode
};

/// Runs degree, boundary falsification and continuation stages for `mode`
/// on a prepared system and box.
ExistenceCertificate certify(const CyclicSystem& sys, const FunctionBox& box, TheoremMode mode,
                             const CertifyOptions& opts = {});

/// (phi(u'))' + f(t, u) = 0 with the Hartman condition on |u| = R.
struct HartmanProblem {
  PhiOperator phi;
  TimeVecMap f;
  double R = 1.0;
  double T = 1.0;
};

/// Hartman workflow: condition check, a-priori bound, box
/// {|u| < R, |u'| < M_R}, degree of -Id, falsification and sweep along
/// lambda f - (1 - lambda) xi, then the scaled path (strict case) or the
/// f - eps xi stage (non-strict case).
ExistenceCertificate certify_hartman(const HartmanProblem& problem, const CertifyOptions& opts = {});

/// Builds the phi-Laplacian system of a Hartman problem for the given family:
/// ScaleLast uses h = -f, Interpolate adds h0 = x_1 (i.e. f0 = -xi).
CyclicSystem hartman_system(const HartmanProblem& problem, HomotopyFamily family, double eps = 0.0);

}  // namespace phicyc
