#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "dcs/binmat.hpp"

namespace dcs {

/// x_{k+1} = A x_k + B u_k + D w_k,  y_k = C x_k + H w_k.
struct Plant {
  Eigen::MatrixXd A;  // n x n
  Eigen::MatrixXd B;  // n x m
  Eigen::MatrixXd C;  // p x n
  Eigen::MatrixXd D;  // n x n
  Eigen::MatrixXd H;  // p x n

  Eigen::Index n() const { return A.rows(); }
  Eigen::Index m() const { return B.cols(); }
  Eigen::Index p() const { return C.rows(); }

  /// Throws std::invalid_argument naming the first inconsistent matrix.
  void Validate() const;
};

/// Stacked finite-horizon description over k = 0..N:
///   x = initial_to_state x0 + input_to_state u + disturbance_to_state w
///   y = state_to_output x + disturbance_feedthrough w
/// with u and w padded by a zero block at index N.
struct LiftedSystem {
  std::size_t horizon = 0;
  Plant plant;

  Eigen::MatrixXd initial_to_state;         // n(N+1) x n, blocks A^k
  Eigen::MatrixXd propagation;              // n(N+1) x n(N+1), A^{i-j-1}
  Eigen::MatrixXd input_to_state;           // n(N+1) x m(N+1)
  Eigen::MatrixXd disturbance_to_state;     // n(N+1) x n(N+1)
  Eigen::MatrixXd state_to_output;          // p(N+1) x n(N+1), I (x) C
  Eigen::MatrixXd disturbance_feedthrough;  // p(N+1) x n(N+1), I (x) H
  /// Output response to the stacked disturbance (P = C E_D + H).
  Eigen::MatrixXd disturbance_to_output;    // p(N+1) x n(N+1)
  /// Output response to the stacked input (CB); strictly block lower
  /// triangular.
  Eigen::MatrixXd input_to_output;          // p(N+1) x m(N+1)
};

LiftedSystem BuildLifted(const Plant& plant, std::size_t horizon);

enum class DeltaMode { kNumeric, kStructural };

/// Support of the impulse response C A^g B. Numeric mode thresholds the
/// real product; structural mode multiplies the supports of C, A and B,
/// which is a superset that ignores cancellations.
BinaryMatrix Delta(const Plant& plant, std::size_t g,
                   double tol = kDefaultStructTol,
                   DeltaMode mode = DeltaMode::kNumeric);

/// Stage polytope {(x,u): U x + V u <= b}, terminal set {x: R x <= z} and
/// per-step disturbance polytope {w: Aw w <= bw}.
struct ConstraintSpec {
  Eigen::MatrixXd U;   // s x n
  Eigen::MatrixXd V;   // s x m
  Eigen::VectorXd b;   // s
  Eigen::MatrixXd R;   // r x n
  Eigen::VectorXd z;   // r
  Eigen::MatrixXd Aw;  // q x n
  Eigen::VectorXd bw;  // q

  Eigen::Index stage_rows() const { return b.size(); }
  Eigen::Index terminal_rows() const { return z.size(); }

  /// Shape checks against plant dimensions.
  void Validate(Eigen::Index n, Eigen::Index m) const;
};

/// Checks, by linear programming, that {w: Aw w <= bw} is nonempty and
/// bounded. Throws std::invalid_argument otherwise.
void ValidateDisturbanceSet(const Eigen::MatrixXd& Aw,
                            const Eigen::VectorXd& bw);

/// Stage and terminal constraints over the whole horizon:
///   stacked_state x + stacked_input u <= bound.
struct StackedConstraints {
  Eigen::MatrixXd stacked_state;  // (Ns+r) x n(N+1)
  Eigen::MatrixXd stacked_input;  // (Ns+r) x m(N+1)
  Eigen::VectorXd bound;          // (Ns+r)
};

StackedConstraints StackConstraints(const ConstraintSpec& spec,
                                    std::size_t horizon);

/// Constraints in terms of the input and disturbance sequences:
///   F u + G w <= c.
struct ConstraintData {
  Eigen::MatrixXd F;
  Eigen::MatrixXd G;
  Eigen::VectorXd c;
};

ConstraintData BuildConstraintData(const ConstraintSpec& spec,
                                   const LiftedSystem& lifted,
                                   const Eigen::VectorXd& x0);

}  // namespace dcs
