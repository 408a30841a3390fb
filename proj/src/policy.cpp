#include "dcs/policy.hpp"

#include <sstream>
#include <stdexcept>

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

bool IsUnitLowerTriangular(const MatrixXd& M) {
  for (Index i = 0; i < M.rows(); ++i) {
    if (M(i, i) != 1.0) return false;
    for (Index j = i + 1; j < M.cols(); ++j) {
      if (M(i, j) != 0.0) return false;
    }
  }
  return true;
}

// X * M^{-1} for unit lower triangular M, by substitution on the right.
MatrixXd RightSolveUnitLower(const MatrixXd& X, const MatrixXd& M) {
  return M.triangularView<Eigen::UnitLower>()
      .transpose()
      .solve(X.transpose())
      .transpose();
}

VectorXd FreeOutput(const LiftedSystem& lifted, const VectorXd& x0) {
  if (x0.size() != lifted.plant.n()) {
    throw std::invalid_argument("x0 has wrong dimension");
  }
  return lifted.state_to_output * (lifted.initial_to_state * x0);
}

}  // namespace

void CheckCausalPattern(const MatrixXd& M, const VectorXd& offset,
                        std::size_t horizon, Index m, Index p) {
  const Index T = static_cast<Index>(horizon) + 1;
  if (M.rows() != m * T || M.cols() != p * T) {
    std::ostringstream msg;
    msg << "controller matrix is " << M.rows() << "x" << M.cols()
        << ", expected " << m * T << "x" << p * T;
    throw std::invalid_argument(msg.str());
  }
  if (offset.size() != m * T) {
    throw std::invalid_argument("controller offset vector has wrong size");
  }
  for (Index k = 0; k < T; ++k) {
    for (Index j = 0; j < T; ++j) {
      const bool allowed = j <= k && k < T - 1 && j < T - 1;
      if (!allowed && !M.block(k * m, j * p, m, p).isZero(0.0)) {
        std::ostringstream msg;
        msg << "controller block (" << k << "," << j
            << ") must be zero (causality / padding)";
        throw std::invalid_argument(msg.str());
      }
    }
  }
  if (!offset.tail(m).isZero(0.0)) {
    throw std::invalid_argument("controller offset must vanish at step N");
  }
}

MatrixXd ClosedLoopMap(const MatrixXd& X, const MatrixXd& Y) {
  if (Y.rows() != X.cols() || Y.cols() != X.rows()) {
    throw std::invalid_argument("ClosedLoopMap: X and Y shapes do not match");
  }
  const MatrixXd M = MatrixXd::Identity(Y.rows(), Y.rows()) - Y * X;
  if (IsUnitLowerTriangular(M)) return -RightSolveUnitLower(X, M);
  Eigen::FullPivLU<MatrixXd> lu(M);
  if (!lu.isInvertible()) {
    throw std::domain_error("ClosedLoopMap: I - YX is singular");
  }
  // X M^{-1} = (M^{-T} X^T)^T
  return -Eigen::FullPivLU<MatrixXd>(M.transpose())
              .solve(X.transpose())
              .transpose();
}

OutputFeedbackController QToL(const DisturbanceFeedbackPolicy& policy,
                              const LiftedSystem& lifted, const VectorXd& x0) {
  const Index m = lifted.plant.m();
  const Index p = lifted.plant.p();
  CheckCausalPattern(policy.Q, policy.v, lifted.horizon, m, p);
  const MatrixXd& cb = lifted.input_to_output;
  const MatrixXd M = MatrixXd::Identity(cb.rows(), cb.rows()) + cb * policy.Q;
  OutputFeedbackController out;
  out.L = RightSolveUnitLower(policy.Q, M);
  out.g = policy.v - out.L * (cb * policy.v + FreeOutput(lifted, x0));
  return out;
}

DisturbanceFeedbackPolicy LToQ(const OutputFeedbackController& controller,
                               const LiftedSystem& lifted, const VectorXd& x0) {
  const Index m = lifted.plant.m();
  const Index p = lifted.plant.p();
  CheckCausalPattern(controller.L, controller.g, lifted.horizon, m, p);
  const MatrixXd& cb = lifted.input_to_output;
  const MatrixXd M = MatrixXd::Identity(cb.rows(), cb.rows()) - cb * controller.L;
  DisturbanceFeedbackPolicy out;
  out.Q = RightSolveUnitLower(controller.L, M);
  out.v = out.Q * (cb * controller.g + FreeOutput(lifted, x0)) + controller.g;
  return out;
}

bool CheckMembership(const MatrixXd& M, const BinaryMatrix& pattern, double tol) {
  return Member(M, pattern, tol);
}

bool CheckMembershipScaled(const MatrixXd& M, const BinaryMatrix& pattern,
                           double rel_tol) {
  const double scale = M.size() == 0 ? 0.0 : M.cwiseAbs().maxCoeff();
  return Member(M, pattern, std::max(rel_tol * scale, 1e-300));
}

}  // namespace dcs
