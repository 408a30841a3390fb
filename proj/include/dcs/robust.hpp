#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcs/infostruct.hpp"
#include "dcs/lifted.hpp"
#include "dcs/policy.hpp"
#include "dcs/qpsolve.hpp"

namespace dcs {

/// Quadratic cost on the disturbance-free trajectory:
///   J = sum_{k=0}^{N} x_k' Qx[k] x_k + sum_{k=0}^{N-1} u_k' Ru[k] u_k.
struct CostSpec {
  std::vector<Eigen::MatrixXd> Qx;  // N+1 matrices, n x n
  std::vector<Eigen::MatrixXd> Ru;  // N matrices, m x m

  /// Same state and input weight at every step.
  static CostSpec Uniform(const Eigen::MatrixXd& state_weight,
                          const Eigen::MatrixXd& input_weight,
                          std::size_t horizon);

  /// Throws std::invalid_argument on wrong counts, shapes, asymmetry or a
  /// negative eigenvalue below -1e-10.
  void Validate(Eigen::Index n, Eigen::Index m, std::size_t horizon) const;

  /// Block-diagonal stacked weights over k = 0..N.
  Eigen::MatrixXd StackedStateWeight() const;
  /// Block-diagonal stacked input weight; the block at index N is zero.
  Eigen::MatrixXd StackedInputWeight() const;
};

/// Value of J on explicit trajectories (states x_0..x_N, inputs u_0..u_{N-1}).
double NominalCost(const CostSpec& cost, const std::vector<Eigen::VectorXd>& states,
                   const std::vector<Eigen::VectorXd>& inputs);

/// Disturbance-free stacked state A x0 + B v.
Eigen::VectorXd NominalStates(const LiftedSystem& lifted, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& v);

/// Multipliers of one dualized row-wise maximization: constraint row `row`
/// against the disturbance at stage `stage`.
struct MultiplierBlock {
  Eigen::Index row = 0;
  Eigen::Index stage = 0;
  Eigen::Index offset = 0;  // first variable index of the q multipliers
};

/// Position of every decision variable in the QP vector:
/// [Q entries on the support of BigS | v_0..v_{N-1} | multiplier blocks].
struct DecisionLayout {
  std::size_t horizon = 0;
  Eigen::Index n = 0, m = 0, p = 0;
  Eigen::Index disturbance_rows = 0;  // q
  Eigen::Index stage_rows = 0;        // s
  Eigen::Index terminal_rows = 0;     // r
  std::vector<std::pair<Eigen::Index, Eigen::Index>> q_entries;
  Eigen::Index v_offset = 0;
  Eigen::Index v_count = 0;
  std::vector<MultiplierBlock> multipliers;
  Eigen::Index num_variables = 0;

  Eigen::Index constraint_rows() const {
    return static_cast<Eigen::Index>(horizon) * stage_rows + terminal_rows;
  }
  /// e.g. "Q[3,1]", "v[2]", "lambda[row=5,stage=1][0]".
  std::string VariableName(Eigen::Index index) const;
  /// "stage k row r" or "terminal row r" for a stacked constraint row.
  std::string ConstraintRowName(Eigen::Index row) const;
};

struct RobustOptions {
  /// Weight of an optional penalty tikhonov * |Q entries|^2 (0 disables).
  double q_tikhonov = 0.0;
  /// Tolerance and mode for the QI certificate computed during assembly.
  double qi_tol = kDefaultStructTol;
  DeltaMode qi_mode = DeltaMode::kNumeric;
};

/// The robust synthesis program over (Q, v, multipliers). Inequalities are
/// ordered: one robust row per stacked constraint row, then the sign
/// constraints of each multiplier block. Equalities are ordered by
/// multiplier block, n rows each.
struct RobustProblem {
  QuadraticProgram qp;
  DecisionLayout layout;
  ConstraintData data;
  bool qi_certified = false;
  std::vector<std::string> warnings;

  /// Human-readable meaning of an inequality row (index < num_inequalities)
  /// or an equality row (index num_inequalities + e).
  std::string DescribeRow(Eigen::Index row) const;
};

/// Builds the robust program with Q restricted to Sparse(BigS(info)). Each
/// maximization of a constraint row over the stage disturbance polytope
/// is replaced by its linear-programming dual. Row/stage pairs whose
/// disturbance coefficient is identically zero contribute nothing and get
/// no multipliers. If the structure fails the QI test a warning is stored
/// and the program is a conservative restriction.
RobustProblem Assemble(const LiftedSystem& lifted, const InformationStructure& info,
                       const ConstraintSpec& spec, const CostSpec& cost,
                       const Eigen::VectorXd& x0, const RobustOptions& options = {});

struct SynthesisResult {
  DisturbanceFeedbackPolicy policy;
  double objective = 0.0;
};

/// Scatters a converged solution into (Q, v). Throws std::runtime_error
/// unless the status is optimal.
SynthesisResult Extract(const QPSolution& solution, const DecisionLayout& layout);

/// Scatters a raw decision vector into (Q, v) without status checks.
DisturbanceFeedbackPolicy ScatterPolicy(const Eigen::VectorXd& x,
                                        const DecisionLayout& layout);

}  // namespace dcs
