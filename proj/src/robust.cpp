#include "dcs/robust.hpp"

#include <sstream>
#include <stdexcept>

#include "dcs/qi.hpp"

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void RequirePsd(const MatrixXd& W, Index dim, const std::string& name) {
  if (W.rows() != dim || W.cols() != dim) {
    std::ostringstream msg;
    msg << name << " is " << W.rows() << "x" << W.cols() << ", expected " << dim
        << "x" << dim;
    throw std::invalid_argument(msg.str());
  }
  if (!W.allFinite()) throw std::invalid_argument(name + " must be finite");
  const double scale = 1.0 + (dim ? W.cwiseAbs().maxCoeff() : 0.0);
  if ((W - W.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale) {
    throw std::invalid_argument(name + " must be symmetric");
  }
  if (dim == 0) return;
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(W, Eigen::EigenvaluesOnly);
  if (eig.eigenvalues().minCoeff() < -1e-10) {
    throw std::invalid_argument(name + " must be positive semidefinite");
  }
}

}  // namespace

CostSpec CostSpec::Uniform(const MatrixXd& state_weight, const MatrixXd& input_weight,
                           std::size_t horizon) {
  CostSpec out;
  out.Qx.assign(horizon + 1, state_weight);
  out.Ru.assign(horizon, input_weight);
  return out;
}

void CostSpec::Validate(Index n, Index m, std::size_t horizon) const {
  if (Qx.size() != horizon + 1) {
    throw std::invalid_argument("cost needs N+1 state weights");
  }
  if (Ru.size() != horizon) throw std::invalid_argument("cost needs N input weights");
  for (std::size_t k = 0; k < Qx.size(); ++k) {
    RequirePsd(Qx[k], n, "Qx[" + std::to_string(k) + "]");
  }
  for (std::size_t k = 0; k < Ru.size(); ++k) {
    RequirePsd(Ru[k], m, "Ru[" + std::to_string(k) + "]");
  }
}

MatrixXd CostSpec::StackedStateWeight() const {
  const Index n = Qx.empty() ? 0 : Qx.front().rows();
  const Index T = static_cast<Index>(Qx.size());
  MatrixXd out = MatrixXd::Zero(n * T, n * T);
  for (Index k = 0; k < T; ++k) out.block(k * n, k * n, n, n) = Qx[k];
  return out;
}

MatrixXd CostSpec::StackedInputWeight() const {
  const Index m = Ru.empty() ? 0 : Ru.front().rows();
  const Index T = static_cast<Index>(Ru.size()) + 1;
  MatrixXd out = MatrixXd::Zero(m * T, m * T);
  for (Index k = 0; k + 1 < T; ++k) out.block(k * m, k * m, m, m) = Ru[k];
  return out;
}

double NominalCost(const CostSpec& cost, const std::vector<VectorXd>& states,
                   const std::vector<VectorXd>& inputs) {
  if (states.size() != cost.Qx.size() || inputs.size() != cost.Ru.size()) {
    throw std::invalid_argument("NominalCost: trajectory length does not match cost");
  }
  double total = 0.0;
  for (std::size_t k = 0; k < states.size(); ++k) {
    total += states[k].dot(cost.Qx[k] * states[k]);
  }
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    total += inputs[k].dot(cost.Ru[k] * inputs[k]);
  }
  return total;
}

VectorXd NominalStates(const LiftedSystem& lifted, const VectorXd& x0,
                       const VectorXd& v) {
  return lifted.initial_to_state * x0 + lifted.input_to_state * v;
}

std::string DecisionLayout::VariableName(Index index) const {
  std::ostringstream os;
  const Index nq = static_cast<Index>(q_entries.size());
  if (index < 0 || index >= num_variables) {
    throw std::out_of_range("VariableName: index out of range");
  }
  if (index < nq) {
    os << "Q[" << q_entries[index].first << "," << q_entries[index].second << "]";
  } else if (index < v_offset + v_count) {
    os << "v[" << index - v_offset << "]";
  } else {
    const Index local = index - (v_offset + v_count);
    const MultiplierBlock& blk = multipliers[local / disturbance_rows];
    os << "lambda[row=" << blk.row << ",stage=" << blk.stage << "]["
       << local % disturbance_rows << "]";
  }
  return os.str();
}

std::string DecisionLayout::ConstraintRowName(Index row) const {
  std::ostringstream os;
  const Index N = static_cast<Index>(horizon);
  if (row < N * stage_rows) {
    os << "stage " << row / stage_rows << " row " << row % stage_rows;
  } else {
    os << "terminal row " << row - N * stage_rows;
  }
  return os.str();
}

std::string RobustProblem::DescribeRow(Index row) const {
  const Index rows = layout.constraint_rows();
  const Index blocks = static_cast<Index>(layout.multipliers.size());
  const Index q = layout.disturbance_rows;
  std::ostringstream os;
  if (row < rows) {
    os << "robust constraint (" << layout.ConstraintRowName(row) << ")";
  } else if (row < rows + blocks * q) {
    const MultiplierBlock& blk = layout.multipliers[(row - rows) / q];
    os << "multiplier sign (" << layout.ConstraintRowName(blk.row)
       << ", disturbance stage " << blk.stage << ")";
  } else {
    const Index e = row - (rows + blocks * q);
    const MultiplierBlock& blk = layout.multipliers[e / layout.n];
    os << "dual system (" << layout.ConstraintRowName(blk.row)
       << ", disturbance stage " << blk.stage << ", component " << e % layout.n
       << ")";
  }
  return os.str();
}

RobustProblem Assemble(const LiftedSystem& lifted, const InformationStructure& info,
                       const ConstraintSpec& spec, const CostSpec& cost,
                       const VectorXd& x0, const RobustOptions& options) {
  const Plant& plant = lifted.plant;
  const Index n = plant.n();
  const Index m = plant.m();
  const Index p = plant.p();
  const std::size_t horizon = lifted.horizon;
  const Index N = static_cast<Index>(horizon);
  if (info.horizon() != horizon || static_cast<Index>(info.inputs()) != m ||
      static_cast<Index>(info.outputs()) != p) {
    throw std::invalid_argument(
        "information structure does not match the lifted system dimensions");
  }
  if (options.q_tikhonov < 0.0) {
    throw std::invalid_argument("Tikhonov weight must be nonnegative");
  }
  spec.Validate(n, m);
  ValidateDisturbanceSet(spec.Aw, spec.bw);
  cost.Validate(n, m, horizon);

  RobustProblem out;
  out.data = BuildConstraintData(spec, lifted, x0);
  const MatrixXd& F = out.data.F;
  const MatrixXd& G = out.data.G;
  const MatrixXd& P = lifted.disturbance_to_output;

  const QIReport qi = QiTestGeneral(info, plant, options.qi_mode, options.qi_tol);
  out.qi_certified = qi.quadratically_invariant;
  if (!out.qi_certified) {
    out.warnings.push_back(
        "information structure is not quadratically invariant; the program "
        "restricts Q to Sparse(S) and is a conservative restriction");
  }

  DecisionLayout& layout = out.layout;
  layout.horizon = horizon;
  layout.n = n;
  layout.m = m;
  layout.p = p;
  layout.disturbance_rows = spec.bw.size();
  layout.stage_rows = spec.stage_rows();
  layout.terminal_rows = spec.terminal_rows();
  const Index q = layout.disturbance_rows;
  const Index rows = layout.constraint_rows();

  const BinaryMatrix support = BigS(info);
  for (std::size_t a = 0; a < support.rows(); ++a) {
    for (std::size_t b = 0; b < support.cols(); ++b) {
      if (support(a, b)) {
        layout.q_entries.emplace_back(static_cast<Index>(a), static_cast<Index>(b));
      }
    }
  }
  const Index nq = static_cast<Index>(layout.q_entries.size());
  layout.v_offset = nq;
  layout.v_count = m * N;

  // Coefficient of Q entry e in row i of F Q P, as a row over disturbances.
  // Only pairs (i, t) with a coefficient that is not identically zero get
  // multipliers.
  Index next = layout.v_offset + layout.v_count;
  for (Index i = 0; i < rows; ++i) {
    for (Index t = 0; t < N; ++t) {
      bool live = !G.block(i, t * n, 1, n).isZero(0.0);
      for (Index e = 0; e < nq && !live; ++e) {
        const auto [a, b] = layout.q_entries[e];
        if (F(i, a) == 0.0) continue;
        live = !P.block(b, t * n, 1, n).isZero(0.0);
      }
      if (!live) continue;
      layout.multipliers.push_back({i, t, next});
      next += q;
    }
  }
  layout.num_variables = next;
  const Index blocks = static_cast<Index>(layout.multipliers.size());

  QuadraticProgram& qp = out.qp;
  qp = QuadraticProgram::Empty(layout.num_variables);

  // Nominal cost in v: x = A x0 + B v.
  const MatrixXd Qbar = cost.StackedStateWeight();
  const MatrixXd Rbar = cost.StackedInputWeight();
  const MatrixXd Bv = lifted.input_to_state.leftCols(m * N);
  const VectorXd free_state = lifted.initial_to_state * x0;
  const Index vo = layout.v_offset;
  qp.P.block(vo, vo, m * N, m * N) =
      2.0 * (Bv.transpose() * Qbar * Bv + Rbar.topLeftCorner(m * N, m * N));
  qp.P.block(vo, vo, m * N, m * N) =
      0.5 * (qp.P.block(vo, vo, m * N, m * N) +
             qp.P.block(vo, vo, m * N, m * N).transpose()).eval();
  qp.q.segment(vo, m * N) = 2.0 * Bv.transpose() * Qbar * free_state;
  qp.constant = free_state.dot(Qbar * free_state);
  for (Index e = 0; e < nq; ++e) qp.P(e, e) += 2.0 * options.q_tikhonov;

  // Robust rows, then multiplier signs.
  qp.A_in = MatrixXd::Zero(rows + blocks * q, layout.num_variables);
  qp.b_in = VectorXd::Zero(rows + blocks * q);
  qp.A_in.block(0, vo, rows, m * N) = F.leftCols(m * N);
  qp.b_in.head(rows) = out.data.c;
  for (Index k = 0; k < blocks; ++k) {
    const MultiplierBlock& blk = layout.multipliers[k];
    qp.A_in.block(blk.row, blk.offset, 1, q) = spec.bw.transpose();
    qp.A_in.block(rows + k * q, blk.offset, q, q) = -MatrixXd::Identity(q, q);
  }

  // Aw' lambda_{i,t} - (F Q P)_{i, stage t} = G_{i, stage t}.
  qp.A_eq = MatrixXd::Zero(blocks * n, layout.num_variables);
  qp.b_eq = VectorXd::Zero(blocks * n);
  for (Index k = 0; k < blocks; ++k) {
    const MultiplierBlock& blk = layout.multipliers[k];
    qp.A_eq.block(k * n, blk.offset, n, q) = spec.Aw.transpose();
    qp.b_eq.segment(k * n, n) = G.block(blk.row, blk.stage * n, 1, n).transpose();
    for (Index e = 0; e < nq; ++e) {
      const auto [a, b] = layout.q_entries[e];
      const double f = F(blk.row, a);
      if (f == 0.0) continue;
      qp.A_eq.block(k * n, e, n, 1) -=
          f * P.block(b, blk.stage * n, 1, n).transpose();
    }
  }
  qp.Validate();
  return out;
}

DisturbanceFeedbackPolicy ScatterPolicy(const VectorXd& x, const DecisionLayout& layout) {
  if (x.size() != layout.num_variables) {
    throw std::invalid_argument("decision vector does not match the layout");
  }
  const Index T = static_cast<Index>(layout.horizon) + 1;
  DisturbanceFeedbackPolicy out;
  out.Q = MatrixXd::Zero(layout.m * T, layout.p * T);
  out.v = VectorXd::Zero(layout.m * T);
  for (std::size_t e = 0; e < layout.q_entries.size(); ++e) {
    out.Q(layout.q_entries[e].first, layout.q_entries[e].second) =
        x(static_cast<Index>(e));
  }
  out.v.head(layout.v_count) = x.segment(layout.v_offset, layout.v_count);
  return out;
}

SynthesisResult Extract(const QPSolution& solution, const DecisionLayout& layout) {
  if (solution.status != SolveStatus::kOptimal) {
    throw std::runtime_error("cannot extract a policy: solver status is " +
                             ToString(solution.status));
  }
  SynthesisResult out;
  out.policy = ScatterPolicy(solution.primal, layout);
  out.objective = solution.objective;
  return out;
}

}  // namespace dcs
