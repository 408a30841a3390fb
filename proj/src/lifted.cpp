#include "dcs/lifted.hpp"

#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "dcs/qpsolve.hpp"

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void RequireShape(const MatrixXd& M, Index rows, Index cols,
                  const std::string& name) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream msg;
    msg << name << " is " << M.rows() << "x" << M.cols() << ", expected "
        << rows << "x" << cols;
    throw std::invalid_argument(msg.str());
  }
}

MatrixXd BlockDiagonal(const MatrixXd& block, Index copies) {
  MatrixXd out = MatrixXd::Zero(block.rows() * copies, block.cols() * copies);
  for (Index k = 0; k < copies; ++k) {
    out.block(k * block.rows(), k * block.cols(), block.rows(), block.cols()) =
        block;
  }
  return out;
}

}  // namespace

void Plant::Validate() const {
  const Index nn = A.rows();
  RequireShape(A, nn, nn, "A");
  if (B.rows() != nn) RequireShape(B, nn, B.cols(), "B");
  if (C.cols() != nn) RequireShape(C, C.rows(), nn, "C");
  RequireShape(D, nn, nn, "D");
  RequireShape(H, C.rows(), nn, "H");
  if (!A.allFinite() || !B.allFinite() || !C.allFinite() || !D.allFinite() ||
      !H.allFinite()) {
    throw std::invalid_argument("plant matrices must be finite");
  }
}

LiftedSystem BuildLifted(const Plant& plant, std::size_t horizon) {
  plant.Validate();
  if (horizon == 0) throw std::invalid_argument("horizon must be >= 1");
  const Index n = plant.n();
  const Index T = static_cast<Index>(horizon) + 1;

  LiftedSystem out;
  out.horizon = horizon;
  out.plant = plant;

  std::vector<MatrixXd> powers(T, MatrixXd::Identity(n, n));
  for (Index k = 1; k < T; ++k) powers[k] = plant.A * powers[k - 1];

  out.initial_to_state.resize(n * T, n);
  for (Index k = 0; k < T; ++k) out.initial_to_state.block(k * n, 0, n, n) = powers[k];

  out.propagation = MatrixXd::Zero(n * T, n * T);
  for (Index i = 1; i < T; ++i) {
    for (Index j = 0; j < i; ++j) {
      out.propagation.block(i * n, j * n, n, n) = powers[i - j - 1];
    }
  }
  out.input_to_state = out.propagation * BlockDiagonal(plant.B, T);
  out.disturbance_to_state = out.propagation * BlockDiagonal(plant.D, T);
  out.state_to_output = BlockDiagonal(plant.C, T);
  out.disturbance_feedthrough = BlockDiagonal(plant.H, T);
  out.disturbance_to_output =
      out.state_to_output * out.disturbance_to_state + out.disturbance_feedthrough;
  out.input_to_output = out.state_to_output * out.input_to_state;
  return out;
}

BinaryMatrix Delta(const Plant& plant, std::size_t g, double tol,
                   DeltaMode mode) {
  plant.Validate();
  if (mode == DeltaMode::kStructural) {
    BinaryMatrix path = StructOf(plant.C, 0.0);
    const BinaryMatrix a = StructOf(plant.A, 0.0);
    for (std::size_t i = 0; i < g; ++i) path = BoolMul(path, a);
    return BoolMul(path, StructOf(plant.B, 0.0));
  }
  MatrixXd response = plant.C;
  for (std::size_t i = 0; i < g; ++i) response = response * plant.A;
  return StructOf(response * plant.B, tol);
}

void ConstraintSpec::Validate(Index n, Index m) const {
  const Index s = b.size();
  const Index r = z.size();
  const Index q = bw.size();
  RequireShape(U, s, n, "U");
  RequireShape(V, s, m, "V");
  RequireShape(R, r, n, "R");
  RequireShape(Aw, q, n, "Aw");
  if (q == 0 && n > 0) {
    throw std::invalid_argument(
        "disturbance set needs at least one inequality (it must be bounded)");
  }
}

void ValidateDisturbanceSet(const MatrixXd& Aw, const VectorXd& bw) {
  const Index q = Aw.rows();
  const Index n = Aw.cols();
  if (bw.size() != q) throw std::invalid_argument("Aw/bw shape mismatch");
  if (n == 0) return;
  if (Eigen::FullPivLU<MatrixXd>(Aw).rank() < n) {
    throw std::invalid_argument(
        "disturbance set is unbounded (Aw lacks full column rank)");
  }
  // Bounded iff some strictly positive combination of the rows vanishes:
  // minimize 1'l subject to Aw'l = 0, l >= 1.
  {
    QuadraticProgram lp = QuadraticProgram::Empty(q);
    lp.q.setOnes();
    lp.A_eq = Aw.transpose();
    lp.b_eq = VectorXd::Zero(n);
    lp.A_in = -MatrixXd::Identity(q, q);
    lp.b_in = -VectorXd::Ones(q);
    const QPSolution sol = Solve(lp);
    if (sol.status != SolveStatus::kOptimal) {
      throw std::invalid_argument("disturbance set is unbounded");
    }
  }
  // Nonempty iff min t s.t. Aw w - t <= bw, t >= 0 has value zero.
  {
    QuadraticProgram lp = QuadraticProgram::Empty(n + 1);
    lp.q(n) = 1.0;
    lp.A_in = MatrixXd::Zero(q + 1, n + 1);
    lp.A_in.topLeftCorner(q, n) = Aw;
    lp.A_in.block(0, n, q, 1).setConstant(-1.0);
    lp.A_in(q, n) = -1.0;
    lp.b_in = VectorXd::Zero(q + 1);
    lp.b_in.head(q) = bw;
    SolverSettings st;
    st.eps_abs = 1e-10;
    st.eps_rel = 1e-10;
    const QPSolution sol = Solve(lp, st);
    const double scale = 1.0 + (q ? bw.cwiseAbs().maxCoeff() : 0.0);
    if (sol.status != SolveStatus::kOptimal || sol.primal(n) > 1e-7 * scale) {
      throw std::invalid_argument("disturbance set is empty");
    }
  }
}

StackedConstraints StackConstraints(const ConstraintSpec& spec,
                                    std::size_t horizon) {
  const Index N = static_cast<Index>(horizon);
  const Index n = spec.U.cols();
  const Index m = spec.V.cols();
  const Index s = spec.stage_rows();
  const Index r = spec.terminal_rows();
  StackedConstraints out;
  out.stacked_state = MatrixXd::Zero(N * s + r, n * (N + 1));
  out.stacked_input = MatrixXd::Zero(N * s + r, m * (N + 1));
  out.bound.resize(N * s + r);
  for (Index k = 0; k < N; ++k) {
    out.stacked_state.block(k * s, k * n, s, n) = spec.U;
    out.stacked_input.block(k * s, k * m, s, m) = spec.V;
    out.bound.segment(k * s, s) = spec.b;
  }
  out.stacked_state.block(N * s, N * n, r, n) = spec.R;
  out.bound.tail(r) = spec.z;
  return out;
}

ConstraintData BuildConstraintData(const ConstraintSpec& spec,
                                   const LiftedSystem& lifted,
                                   const VectorXd& x0) {
  const Index n = lifted.plant.n();
  spec.Validate(n, lifted.plant.m());
  if (x0.size() != n) throw std::invalid_argument("x0 has wrong dimension");
  const StackedConstraints st = StackConstraints(spec, lifted.horizon);
  ConstraintData out;
  out.F = st.stacked_state * lifted.input_to_state + st.stacked_input;
  out.G = st.stacked_state * lifted.disturbance_to_state;
  out.c = st.bound - st.stacked_state * (lifted.initial_to_state * x0);
  return out;
}

}  // namespace dcs
