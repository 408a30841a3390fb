#pragma once

#include <optional>
#include <string>

#include <Eigen/Dense>

namespace dcs {

/// Dense convex quadratic program
///
///   minimize    1/2 x'Px + q'x + constant
///   subject to  A_eq x  = b_eq
///               A_in x <= b_in
///
/// P must be symmetric positive semidefinite.
struct QuadraticProgram {
  Eigen::MatrixXd P;
  Eigen::VectorXd q;
  Eigen::MatrixXd A_eq;
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd A_in;
  Eigen::VectorXd b_in;
  double constant = 0.0;

  Eigen::Index num_variables() const { return q.size(); }
  Eigen::Index num_equalities() const { return b_eq.size(); }
  Eigen::Index num_inequalities() const { return b_in.size(); }

  /// Empty program over `n` variables (P = 0, q = 0, no constraints).
  static QuadraticProgram Empty(Eigen::Index n);

  /// Throws std::invalid_argument on inconsistent shapes.
  void Validate() const;

  double Objective(const Eigen::Ref<const Eigen::VectorXd>& x) const;
};

enum class SolveStatus { kOptimal, kMaxIterations, kInfeasible };

std::string ToString(SolveStatus status);

struct KktResiduals {
  /// max of equality violation and positive part of inequality violation
  double primal = 0.0;
  /// stationarity plus sign violation of inequality multipliers
  double dual = 0.0;
  /// |primal objective - dual objective|
  double gap = 0.0;
};

struct SolverSettings {
  double eps_abs = 1e-6;
  double eps_rel = 1e-6;
  int max_iters = 20000;
  /// Re-solve the KKT system on the identified active set after the
  /// interior-point phase; kept only if it lowers the residuals.
  bool polish = true;
};

struct QPSolution {
  Eigen::VectorXd primal;
  Eigen::VectorXd dual_eq;
  /// Multipliers of A_in x <= b_in, nonnegative at optimality.
  Eigen::VectorXd dual_in;
  SolveStatus status = SolveStatus::kMaxIterations;
  double objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  bool polished = false;
  /// For infeasible problems: index of the first inequality that the
  /// minimum-violation point cannot satisfy. Equality rows are reported as
  /// num_inequalities() + row.
  std::optional<Eigen::Index> first_violated_row;
};

/// Residuals of the KKT conditions at (x, y, z). Uses the sign convention
/// Px + q + A_eq'y + A_in'z = 0, z >= 0.
KktResiduals ComputeKktResiduals(const QuadraticProgram& problem,
                                 const Eigen::Ref<const Eigen::VectorXd>& x,
                                 const Eigen::Ref<const Eigen::VectorXd>& y,
                                 const Eigen::Ref<const Eigen::VectorXd>& z);

/// True iff residuals meet eps_abs + eps_rel * (problem scale) on all three
/// measures.
bool WithinTolerance(const QuadraticProgram& problem, const QPSolution& point,
                     const SolverSettings& settings);

/// Primal-dual interior-point method (Mehrotra predictor-corrector) on the
/// full KKT system. Deterministic: identical inputs give bit-identical
/// iterates. If the interior-point phase stalls, an elastic phase-one
/// program decides between kInfeasible and kMaxIterations.
QPSolution Solve(const QuadraticProgram& problem,
                 const SolverSettings& settings = {});

}  // namespace dcs
