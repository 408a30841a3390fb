#pragma once

#include <cstddef>

#include <Eigen/Dense>

#include "dcs/binmat.hpp"
#include "dcs/lifted.hpp"

namespace dcs {

/// u = L y + g with L causal and padded (block row and column N zero).
struct OutputFeedbackController {
  Eigen::MatrixXd L;  // m(N+1) x p(N+1)
  Eigen::VectorXd g;  // m(N+1), last m entries zero
};

/// u = Q P w + v with the same causal block pattern as L.
struct DisturbanceFeedbackPolicy {
  Eigen::MatrixXd Q;  // m(N+1) x p(N+1)
  Eigen::VectorXd v;  // m(N+1), last m entries zero
};

/// Throws std::invalid_argument if M is not m(N+1) x p(N+1) with zero
/// blocks above the block diagonal and in block row/column N, or if the
/// offset vector has the wrong size or a nonzero last block.
void CheckCausalPattern(const Eigen::MatrixXd& M, const Eigen::VectorXd& offset,
                        std::size_t horizon, Eigen::Index m, Eigen::Index p);

/// h(X, Y) = -X (I - Y X)^{-1}. Uses a unit-triangular solve when I - YX is
/// unit lower triangular and a pivoted LU otherwise; throws
/// std::domain_error if I - YX is singular.
Eigen::MatrixXd ClosedLoopMap(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

/// L = Q (CB Q + I)^{-1}, g = v - L (CB v + C A x0).
OutputFeedbackController QToL(const DisturbanceFeedbackPolicy& policy,
                              const LiftedSystem& lifted,
                              const Eigen::VectorXd& x0);

/// Q = L (I - CB L)^{-1}, v = Q (CB g + C A x0) + g.
DisturbanceFeedbackPolicy LToQ(const OutputFeedbackController& controller,
                               const LiftedSystem& lifted,
                               const Eigen::VectorXd& x0);

/// Sparse-subspace membership of a controller matrix.
bool CheckMembership(const Eigen::MatrixXd& M, const BinaryMatrix& pattern,
                     double tol);

/// Membership with tolerance rel_tol * max|M| (absolute floor 1e-300).
bool CheckMembershipScaled(const Eigen::MatrixXd& M, const BinaryMatrix& pattern,
                           double rel_tol = 1e-7);

}  // namespace dcs
