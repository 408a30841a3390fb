#include "dcs/robust.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "dcs/qi.hpp"
#include "support/examples.hpp"
#include "support/oracles.hpp"

namespace dcs {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

ConstraintSpec BoxSpec(Eigen::Index n, Eigen::Index m, double state_bound, double input_bound,
                       double terminal_bound, double w_bound) {
  ConstraintSpec spec;
  const Eigen::Index s = 2 * (n + m);
  spec.U = MatrixXd::Zero(s, n);
  spec.V = MatrixXd::Zero(s, m);
  spec.U.topRows(n) = MatrixXd::Identity(n, n);
  spec.U.middleRows(n, n) = -MatrixXd::Identity(n, n);
  spec.V.middleRows(2 * n, m) = MatrixXd::Identity(m, m);
  spec.V.bottomRows(m) = -MatrixXd::Identity(m, m);
  spec.b = VectorXd::Constant(s, state_bound);
  spec.b.tail(2 * m).setConstant(input_bound);
  spec.R.resize(2 * n, n);
  spec.R << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  spec.z = VectorXd::Constant(2 * n, terminal_bound);
  spec.Aw.resize(2 * n, n);
  spec.Aw << MatrixXd::Identity(n, n), -MatrixXd::Identity(n, n);
  spec.bw = VectorXd::Constant(2 * n, w_bound);
  return spec;
}

Plant ScalarIntegrator() {
  Plant plant;
  plant.A = MatrixXd::Ones(1, 1);
  plant.B = MatrixXd::Ones(1, 1);
  plant.C = MatrixXd::Ones(1, 1);
  plant.D = MatrixXd::Ones(1, 1);
  plant.H = MatrixXd::Zero(1, 1);
  return plant;
}

Plant TwoByTwoPlant() {
  Plant plant;
  plant.A.resize(2, 2);
  plant.A << 0.9, 0.0, 0.3, 0.8;
  plant.B = MatrixXd::Identity(2, 2);
  plant.C = MatrixXd::Identity(2, 2);
  plant.D = MatrixXd::Identity(2, 2);
  plant.H = 0.01 * MatrixXd::Identity(2, 2);
  return plant;
}

struct Synthesis {
  RobustProblem problem;
  QPSolution solution;
};

Synthesis Synthesize(const Plant& plant, std::size_t N, const InformationStructure& info,
                     const ConstraintSpec& spec, const CostSpec& cost, const VectorXd& x0,
                     const SolverSettings& settings = {}) {
  const LiftedSystem lifted = BuildLifted(plant, N);
  Synthesis out{Assemble(lifted, info, spec, cost, x0), {}};
  out.solution = Solve(out.problem.qp, settings);
  return out;
}

// Optimal cost of the scalar integrator over full-information affine
// policies, N = 2, cost x0^2 + x1^2 + x2^2 + u0^2 + u1^2, |u| <= input_bound,
// |x| <= state_bound at stages, |x_2| <= terminal_bound, |w| <= w_bound.
// With disturbance feedback u1 = gain * w0 + v1 the robust constraints are
//   |x0 + v0| + w_bound <= state_bound,   |v0| <= input_bound,
//   |v1| + w_bound |gain| <= input_bound,
//   |x0 + v0 + v1| + w_bound (|1 + gain| + 1) <= terminal_bound,
// and |x0| <= state_bound. For fixed gain the inner problem is a 2-variable
// QP; the outer minimization over the gain is a convex 1-D search.
double ScalarOracle(double x0, double state_bound, double input_bound, double terminal_bound,
                    double w_bound) {
  const auto inner = [&](double gain) {
    MatrixXd P(2, 2);
    P << 2 * (1 + 1 + 1), 2 * 1, 2 * 1, 2 * (1 + 1);
    VectorXd q(2);
    q << 2 * (x0 + x0), 2 * x0;
    MatrixXd G(8, 2);
    VectorXd h(8);
    const double terminal = terminal_bound - w_bound * (std::abs(1 + gain) + 1);
    G << 1, 0, -1, 0, 1, 0, -1, 0, 0, 1, 0, -1, 1, 1, -1, -1;
    h << state_bound - w_bound - x0, state_bound - w_bound + x0, input_bound, input_bound,
        input_bound - w_bound * std::abs(gain), input_bound - w_bound * std::abs(gain),
        terminal - x0, terminal + x0;
    // Driving each nominal state as close to zero as the input bounds allow
    // is feasible whenever any point is.
    const double second_bound = input_bound - w_bound * std::abs(gain);
    VectorXd start(2);
    start(0) = std::clamp(-x0, -input_bound, input_bound);
    start(1) = std::clamp(-(x0 + start(0)), -second_bound, second_bound);
    if (((G * start - h).array() > 1e-12).any()) return std::numeric_limits<double>::infinity();
    const testing::ActiveSetResult sol =
        testing::SolveActiveSet(P, q, MatrixXd(0, 2), VectorXd(0), G, h, start);
    return 0.5 * sol.x.dot(P * sol.x) + q.dot(sol.x) + 3 * x0 * x0;
  };
  double lo = -3.0, hi = 1.0;
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int it = 0; it < 200; ++it) {
    const double a = hi - ratio * (hi - lo), b = lo + ratio * (hi - lo);
    if (inner(a) <= inner(b)) {
      hi = b;
    } else {
      lo = a;
    }
  }
  return inner(0.5 * (lo + hi));
}

TEST(CostSpecTest, ValidateAndStack) {
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), 0.5 * MatrixXd::Identity(1, 1), 3);
  EXPECT_NO_THROW(cost.Validate(2, 1, 3));
  EXPECT_THROW(cost.Validate(2, 1, 4), std::invalid_argument);
  const MatrixXd state = cost.StackedStateWeight();
  EXPECT_EQ(state, MatrixXd::Identity(8, 8));
  const MatrixXd input = cost.StackedInputWeight();
  ASSERT_EQ(input.rows(), 4);
  EXPECT_DOUBLE_EQ(input(2, 2), 0.5);
  EXPECT_DOUBLE_EQ(input(3, 3), 0.0);

  CostSpec bad = cost;
  bad.Qx[1](0, 1) = 1.0;
  EXPECT_THROW(bad.Validate(2, 1, 3), std::invalid_argument);
  bad = cost;
  bad.Ru[0](0, 0) = -1.0;
  EXPECT_THROW(bad.Validate(2, 1, 3), std::invalid_argument);
}

TEST(NominalCostTest, MatchesHandComputation) {
  const CostSpec cost = CostSpec::Uniform(2.0 * MatrixXd::Identity(1, 1), MatrixXd::Identity(1, 1), 2);
  const std::vector<VectorXd> states{VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 2.0),
                                     VectorXd::Constant(1, 3.0)};
  const std::vector<VectorXd> inputs{VectorXd::Constant(1, 1.0), VectorXd::Constant(1, 1.0)};
  EXPECT_DOUBLE_EQ(NominalCost(cost, states, inputs), 2.0 * (1 + 4 + 9) + 2.0);
}

TEST(AssembleTest, ZeroDisturbanceReducesToConstrainedLqr) {
  const Plant plant = TwoByTwoPlant();
  const std::size_t N = 4;
  ConstraintSpec spec = BoxSpec(2, 2, 5.0, 0.5, 5.0, 0.0);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2), N);
  VectorXd x0(2);
  x0 << 3.0, -2.0;
  SolverSettings settings;
  settings.eps_abs = settings.eps_rel = 1e-10;
  const Synthesis synth = Synthesize(plant, N, ConstantStructure(BinaryMatrix::Ones(2, 2), N),
                                     spec, cost, x0, settings);
  ASSERT_EQ(synth.solution.status, SolveStatus::kOptimal);
  const testing::BatchLqrResult oracle = testing::BatchConstrainedLqr(
      plant, N, x0, MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2), spec);
  EXPECT_NEAR(synth.solution.objective, oracle.cost, 1e-6 * oracle.cost);
  const SynthesisResult result = Extract(synth.solution, synth.problem.layout);
  EXPECT_LE((result.policy.v.head(8) - oracle.inputs).cwiseAbs().maxCoeff(), 1e-4);
  EXPECT_NEAR(result.objective, oracle.cost, 1e-6 * oracle.cost);
}

TEST(AssembleTest, UnconstrainedGivesNominalLqr) {
  const Plant plant = TwoByTwoPlant();
  const std::size_t N = 3;
  ConstraintSpec spec = BoxSpec(2, 2, 1.0, 1.0, 1.0, 0.1);
  spec.U = MatrixXd(0, 2);
  spec.V = MatrixXd(0, 2);
  spec.b = VectorXd(0);
  spec.R = MatrixXd(0, 2);
  spec.z = VectorXd(0);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), N);
  const VectorXd x0 = VectorXd::Ones(2);
  const Synthesis synth =
      Synthesize(plant, N, ConstantStructure(BinaryMatrix::Identity(2), N), spec, cost, x0);
  ASSERT_EQ(synth.solution.status, SolveStatus::kOptimal);
  EXPECT_TRUE(synth.problem.layout.multipliers.empty());
  const testing::BatchLqrResult oracle = testing::BatchConstrainedLqr(
      plant, N, x0, MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), spec);
  EXPECT_NEAR(synth.solution.objective, oracle.cost, 1e-6 * oracle.cost);
}

TEST(AssembleTest, ScalarIntegratorMatchesOracle) {
  const Plant plant = ScalarIntegrator();
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 2);
  const InformationStructure full = ConstantStructure(BinaryMatrix::Ones(1, 1), 2);
  const VectorXd x0 = VectorXd::Ones(1);
  struct Case {
    double input_bound, terminal_bound;
  };
  for (const Case c : {Case{1.0, 1.0}, Case{0.5, 1.0}, Case{0.5, 0.3}, Case{0.45, 0.35}}) {
    const ConstraintSpec spec = BoxSpec(1, 1, 1.0, c.input_bound, c.terminal_bound, 0.1);
    const Synthesis synth = Synthesize(plant, 2, full, spec, cost, x0);
    ASSERT_EQ(synth.solution.status, SolveStatus::kOptimal);
    const double expected = ScalarOracle(1.0, 1.0, c.input_bound, c.terminal_bound, 0.1);
    EXPECT_NEAR(synth.solution.objective, expected, 1e-4)
        << c.input_bound << " " << c.terminal_bound;
  }
  EXPECT_NEAR(ScalarOracle(1.0, 1.0, 0.5, 1.0, 0.1), 1.625, 1e-9);

  // |gain| + |1 + gain| >= 1 makes a terminal bound of 0.25 unreachable.
  const ConstraintSpec tight = BoxSpec(1, 1, 1.0, 0.45, 0.25, 0.1);
  EXPECT_EQ(Synthesize(plant, 2, full, tight, cost, x0).solution.status, SolveStatus::kInfeasible);
  EXPECT_TRUE(std::isinf(ScalarOracle(1.0, 1.0, 0.45, 0.25, 0.1)));
}

TEST(AssembleTest, RejectsBadInputs) {
  const Plant plant = TwoByTwoPlant();
  const LiftedSystem lifted = BuildLifted(plant, 3);
  const InformationStructure info = ConstantStructure(BinaryMatrix::Ones(2, 2), 3);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), 3);
  ConstraintSpec unbounded = BoxSpec(2, 2, 1, 1, 1, 0.1);
  unbounded.Aw = unbounded.Aw.topRows(2).eval();
  unbounded.bw = unbounded.bw.head(2).eval();
  EXPECT_THROW(Assemble(lifted, info, unbounded, cost, VectorXd::Zero(2)), std::invalid_argument);
  EXPECT_THROW(Assemble(lifted, info, BoxSpec(2, 2, 1, 1, 1, 0.1), cost, VectorXd::Zero(3)),
               std::invalid_argument);
  EXPECT_THROW(Assemble(lifted, ConstantStructure(BinaryMatrix::Ones(2, 2), 2),
                        BoxSpec(2, 2, 1, 1, 1, 0.1), cost, VectorXd::Zero(2)),
               std::invalid_argument);
}

TEST(AssembleTest, WarnsWhenStructureIsNotQi) {
  Plant plant;
  plant.A.resize(2, 2);
  plant.A << 0, 0, 1, 0;
  plant.B = plant.C = plant.D = MatrixXd::Identity(2, 2);
  plant.H = MatrixXd::Zero(2, 2);
  const LiftedSystem lifted = BuildLifted(plant, 3);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), MatrixXd::Identity(2, 2), 3);
  const RobustProblem problem =
      Assemble(lifted, ConstantStructure(BinaryMatrix::Identity(2), 3),
               BoxSpec(2, 2, 5, 5, 5, 0.1), cost, VectorXd::Zero(2));
  EXPECT_FALSE(problem.qi_certified);
  EXPECT_FALSE(problem.warnings.empty());
  const RobustProblem full = Assemble(lifted, ConstantStructure(BinaryMatrix::Ones(2, 2), 3),
                                      BoxSpec(2, 2, 5, 5, 5, 0.1), cost, VectorXd::Zero(2));
  EXPECT_TRUE(full.qi_certified);
  EXPECT_TRUE(full.warnings.empty());
}

TEST(AssembleTest, LayoutCoversBigSSupport) {
  const LiftedSystem lifted = BuildLifted(testing::ForgettingPlant(), 3);
  const InformationStructure info = testing::ForgettingStructure();
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2), 3);
  const RobustProblem problem =
      Assemble(lifted, info, BoxSpec(3, 2, 20, 20, 20, 0.05), cost, VectorXd::Zero(3));
  const DecisionLayout& layout = problem.layout;
  const BinaryMatrix big = BigS(info);
  ASSERT_EQ(layout.q_entries.size(), big.count());
  for (const auto& [row, col] : layout.q_entries) {
    EXPECT_TRUE(big(row, col));
  }
  EXPECT_EQ(layout.v_offset, static_cast<Eigen::Index>(big.count()));
  EXPECT_EQ(layout.v_count, 6);
  EXPECT_EQ(layout.num_variables, problem.qp.num_variables());
  EXPECT_EQ(layout.VariableName(layout.v_offset + 1), "v[1]");
  EXPECT_EQ(layout.ConstraintRowName(0), "stage 0 row 0");
  EXPECT_EQ(layout.ConstraintRowName(layout.constraint_rows() - 1), "terminal row 5");
  Eigen::Index expected_offset = layout.v_offset + layout.v_count;
  for (const MultiplierBlock& block : layout.multipliers) {
    EXPECT_EQ(block.offset, expected_offset);
    expected_offset += layout.disturbance_rows;
  }
  EXPECT_EQ(expected_offset, layout.num_variables);
  EXPECT_FALSE(problem.DescribeRow(0).empty());
}

TEST(ExtractTest, ZeroVectorAndRoundTrip) {
  const LiftedSystem lifted = BuildLifted(testing::ForgettingPlant(), 3);
  const InformationStructure info = testing::ForgettingStructure();
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2), 3);
  const RobustProblem problem =
      Assemble(lifted, info, BoxSpec(3, 2, 20, 20, 20, 0.05), cost, VectorXd::Zero(3));
  const DecisionLayout& layout = problem.layout;

  QPSolution zero;
  zero.primal = VectorXd::Zero(layout.num_variables);
  zero.status = SolveStatus::kOptimal;
  const SynthesisResult empty = Extract(zero, layout);
  EXPECT_TRUE(empty.policy.Q.isZero(0.0));
  EXPECT_TRUE(empty.policy.v.isZero(0.0));

  testing::Rng rng(167);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const VectorXd x = VectorXd::NullaryExpr(layout.num_variables, [&] { return unit(rng); });
  const DisturbanceFeedbackPolicy policy = ScatterPolicy(x, layout);
  for (std::size_t i = 0; i < layout.q_entries.size(); ++i) {
    const auto [row, col] = layout.q_entries[i];
    EXPECT_EQ(policy.Q(row, col), x(static_cast<Eigen::Index>(i)));
  }
  EXPECT_EQ(policy.v.head(layout.v_count), x.segment(layout.v_offset, layout.v_count));
  EXPECT_TRUE(policy.v.tail(2).isZero(0.0));
  EXPECT_TRUE(Member(policy.Q, BigS(info), 0.0));
  EXPECT_EQ(static_cast<std::size_t>((policy.Q.array() != 0.0).count()), layout.q_entries.size());

  QPSolution unfinished = zero;
  unfinished.status = SolveStatus::kMaxIterations;
  EXPECT_THROW(Extract(unfinished, layout), std::runtime_error);
}

// Robust constraints checked at every vertex combination of the box.
TEST(RobustPropertyTest, DualizationIsExactAtVertices) {
  const Plant plant = TwoByTwoPlant();
  const std::size_t N = 3;
  const ConstraintSpec spec = BoxSpec(2, 2, 1.05, 0.4, 0.5, 0.1);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2), N);
  VectorXd x0(2);
  x0 << 1.0, -0.5;
  const InformationStructure info = CommPropagationStructure(
      BinaryMatrix::Identity(2), CommTopology(BinaryMatrix{{1, 0}, {1, 1}}), N);
  const Synthesis synth = Synthesize(plant, N, info, spec, cost, x0);
  ASSERT_EQ(synth.solution.status, SolveStatus::kOptimal);
  const DisturbanceFeedbackPolicy policy = ScatterPolicy(synth.solution.primal, synth.problem.layout);
  const LiftedSystem lifted = BuildLifted(plant, N);
  const ConstraintData& data = synth.problem.data;
  const MatrixXd coefficient = data.F * policy.Q * lifted.disturbance_to_output + data.G;
  double worst = std::numeric_limits<double>::infinity();
  for (unsigned mask = 0; mask < (1u << (2 * N)); ++mask) {
    VectorXd w = VectorXd::Zero(2 * (N + 1));
    for (std::size_t i = 0; i < 2 * N; ++i) w(i) = (mask >> i) & 1u ? 0.1 : -0.1;
    const VectorXd slack = data.c - data.F * policy.v - coefficient * w;
    worst = std::min(worst, slack.minCoeff());
  }
  EXPECT_GE(worst, -1e-6);
}

TEST(RobustPropertyTest, ObjectiveDoesNotDependOnQ) {
  const LiftedSystem lifted = BuildLifted(testing::ForgettingPlant(), 3);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(3, 3), MatrixXd::Identity(2, 2), 3);
  const RobustProblem problem = Assemble(lifted, testing::ForgettingStructure(),
                                         BoxSpec(3, 2, 20, 20, 20, 0.05), cost, VectorXd::Ones(3));
  const Eigen::Index nq = static_cast<Eigen::Index>(problem.layout.q_entries.size());
  EXPECT_TRUE(problem.qp.P.topRows(nq).isZero(0.0));
  EXPECT_TRUE(problem.qp.P.leftCols(nq).isZero(0.0));
  EXPECT_TRUE(problem.qp.q.head(nq).isZero(0.0));
  const Eigen::Index first_multiplier = problem.layout.v_offset + problem.layout.v_count;
  EXPECT_TRUE(problem.qp.P.rightCols(problem.qp.P.cols() - first_multiplier).isZero(0.0));

  // The objective at a point equals the nominal cost of the v part.
  testing::Rng rng(173);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  const VectorXd x = VectorXd::NullaryExpr(problem.layout.num_variables, [&] { return unit(rng); });
  const DisturbanceFeedbackPolicy policy = ScatterPolicy(x, problem.layout);
  const VectorXd states = NominalStates(lifted, VectorXd::Ones(3), policy.v);
  std::vector<VectorXd> xs, us;
  for (int k = 0; k <= 3; ++k) xs.push_back(states.segment(3 * k, 3));
  for (int k = 0; k < 3; ++k) us.push_back(policy.v.segment(2 * k, 2));
  EXPECT_NEAR(problem.qp.Objective(x), NominalCost(cost, xs, us), 1e-9);
}

TEST(RobustPropertyTest, LargerDisturbanceSetNeverLowersCost) {
  const Plant plant = ScalarIntegrator();
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Ones(1, 1), MatrixXd::Ones(1, 1), 2);
  const InformationStructure full = ConstantStructure(BinaryMatrix::Ones(1, 1), 2);
  double previous = -std::numeric_limits<double>::infinity();
  bool became_infeasible = false;
  int strict_increases = 0;
  for (int step = 0; step <= 12; ++step) {
    const double w_bound = 0.01 * step;
    const ConstraintSpec spec = BoxSpec(1, 1, 1.0, 0.5, 0.3, w_bound);
    const Synthesis synth = Synthesize(plant, 2, full, spec, cost, VectorXd::Ones(1));
    if (synth.solution.status == SolveStatus::kInfeasible) {
      became_infeasible = true;
      continue;
    }
    ASSERT_EQ(synth.solution.status, SolveStatus::kOptimal) << w_bound;
    ASSERT_FALSE(became_infeasible) << "feasible again at " << w_bound;
    EXPECT_GE(synth.solution.objective, previous - 1e-6) << w_bound;
    if (synth.solution.objective > previous + 1e-4) ++strict_increases;
    previous = synth.solution.objective;
  }
  EXPECT_GE(strict_increases, 3);
}

TEST(RobustPropertyTest, TikhonovKeepsCost) {
  const Plant plant = TwoByTwoPlant();
  const std::size_t N = 4;
  const LiftedSystem lifted = BuildLifted(plant, N);
  const CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(2, 2), 0.1 * MatrixXd::Identity(2, 2), N);
  const ConstraintSpec spec = BoxSpec(2, 2, 1.05, 0.4, 0.5, 0.1);
  const InformationStructure info = ConstantStructure(BinaryMatrix::Ones(2, 2), N);
  VectorXd x0(2);
  x0 << 1.0, -0.5;
  RobustOptions options;
  options.q_tikhonov = 1e-8;
  const RobustProblem plain = Assemble(lifted, info, spec, cost, x0);
  const RobustProblem damped = Assemble(lifted, info, spec, cost, x0, options);
  const QPSolution a = Solve(plain.qp);
  const QPSolution b = Solve(damped.qp);
  ASSERT_EQ(a.status, SolveStatus::kOptimal);
  ASSERT_EQ(b.status, SolveStatus::kOptimal);
  EXPECT_NEAR(a.objective, b.objective, 1e-5 * std::abs(a.objective));
}

}  // namespace
}  // namespace dcs
