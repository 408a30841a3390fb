// Acceptance run: one PASS/FAIL line per criterion. Exits nonzero if any fails.

#include <sys/wait.h>

#include <array>
#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "dcs/infostruct.hpp"
#include "dcs/io.hpp"
#include "dcs/lifted.hpp"
#include "dcs/policy.hpp"
#include "dcs/qi.hpp"
#include "dcs/qpsolve.hpp"
#include "dcs/robust.hpp"
#include "dcs/sim.hpp"
#include "support/examples.hpp"
#include "support/oracles.hpp"

namespace dcs {
namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string Fixture(const std::string& name) { return std::string(DCS_FIXTURE_DIR) + "/" + name; }

double RelativeError(const MatrixXd& got, const MatrixXd& expected) {
  return (got - expected).norm() / std::max(1.0, expected.norm());
}

VectorXd RandomVector(testing::Rng& rng, Eigen::Index size) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  return VectorXd::NullaryExpr(size, [&] { return unit(rng); });
}

VectorXd RandomOffset(testing::Rng& rng, Eigen::Index m, std::size_t N) {
  VectorXd g = VectorXd::Zero(m * (N + 1));
  g.head(m * N) = RandomVector(rng, m * N);
  return g;
}

BinaryMatrix FullPattern(Eigen::Index m, Eigen::Index p, std::size_t N) {
  return BigS(ConstantStructure(BinaryMatrix::Ones(m, p), N));
}

Outcome ForgettingFixture() {
  const std::string command = std::string(DCS_CLI_PATH) + " qi-check " +
                              Fixture("three_state_forgetting.json") +
                              " --no-timestamp 2>/dev/null";
  const Clock::time_point start = Clock::now();
  FILE* pipe = popen(command.c_str(), "r");
  if (pipe == nullptr) return {false, "cannot launch cli"};
  std::string out;
  char buffer[4096];
  std::size_t count = 0;
  while ((count = fread(buffer, 1, sizeof(buffer), pipe)) > 0) out.append(buffer, count);
  const int status = pclose(pipe);
  const double elapsed = Seconds(start);
  const int exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  const Json report = Json::parse(out);
  std::size_t holding = 0;
  for (const Json& c : report["conditions"]) holding += c["holds"].get<bool>() ? 1 : 0;
  const std::size_t conditions = report["num_conditions"].get<std::size_t>();
  std::ostringstream detail;
  detail << "exit " << exit_code << ", " << conditions << " conditions, " << holding
         << " holding, cli wall time " << elapsed << " s";
  return {exit_code == 0 && report["quadratically_invariant"] == true && conditions == 5 &&
              holding == 5 && elapsed < 0.1,
          detail.str()};
}

Outcome CrossTestEquivalence() {
  const Clock::time_point start = Clock::now();
  testing::Rng rng(1001);
  std::uniform_int_distribution<int> dim(1, 4);
  std::uniform_int_distribution<int> horizon(1, 6);
  std::uniform_real_distribution<double> density(0.1, 0.6);
  int sensing_instances = 0, comm_instances = 0, disagreements = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = dim(rng), m = dim(rng), p = dim(rng);
    const Plant plant = testing::RandomDyadicPlant(rng, n, m, p, density(rng));
    const BinaryMatrix S = testing::RandomBinary(rng, m, p, density(rng));
    const bool sensing = QiTestSensing(S, plant).quadratically_invariant;
    for (std::size_t N = n + 1; N <= 6; ++N) {
      if (sensing != QiTestGeneral(ConstantStructure(S, N), plant).quadratically_invariant) {
        ++disagreements;
      }
    }
    ++sensing_instances;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index n = dim(rng), m = dim(rng), p = dim(rng);
    const std::size_t N = horizon(rng);
    const Plant plant = testing::RandomDyadicPlant(rng, n, m, p, density(rng));
    const BinaryMatrix S = testing::RandomBinary(rng, m, p, density(rng));
    const CommTopology Z(testing::RandomUnitDiagonal(rng, m, density(rng)));
    for (const DeltaMode mode : {DeltaMode::kNumeric, DeltaMode::kStructural}) {
      if (QiTestComm(S, Z, plant, N, mode).quadratically_invariant !=
          QiTestGeneral(CommPropagationStructure(S, Z, N), plant, mode).quadratically_invariant) {
        ++disagreements;
      }
    }
    ++comm_instances;
  }
  const double elapsed = Seconds(start);
  std::ostringstream detail;
  detail << sensing_instances << " sensing + " << comm_instances << " comm instances, "
         << disagreements << " disagreements, " << elapsed << " s";
  return {disagreements == 0 && sensing_instances + comm_instances >= 200 && elapsed < 30.0,
          detail.str()};
}

Outcome OracleSoundness() {
  testing::Rng rng(1003);
  std::uniform_int_distribution<int> dim(1, 3);
  std::uniform_int_distribution<int> horizon(2, 5);
  std::uniform_real_distribution<double> density(0.15, 0.5);
  int passing = 0, failing = 0, oracle_violations = 0, missing_witnesses = 0, exceptions = 0;
  for (int trial = 0; trial < 200; ++trial) {
    try {
      const Eigen::Index n = dim(rng), m = dim(rng), p = dim(rng);
      const std::size_t N = horizon(rng);
      const Plant plant = testing::RandomDyadicPlant(rng, n, m, p, density(rng));
      const InformationStructure info =
          SampleBernoulliStructure(N, m, p, density(rng), 5000 + trial);
      const QIReport report = QiTestGeneral(info, plant);
      if (report.quadratically_invariant) {
        ++passing;
        if (!QiOracle(info, plant, 500, trial).consistent) ++oracle_violations;
        continue;
      }
      ++failing;
      const MatrixXd& CB = BuildLifted(plant, N).input_to_output;
      const BinaryMatrix big = BigS(info);
      for (const QICondition& c : report.conditions) {
        if (c.holds) continue;
        const auto witness = ConstructCounterexample(info, plant, c);
        if (!witness || !Member(witness->L, big) || !Member(witness->L_prime, big) ||
            Member(witness->L * CB * witness->L_prime, big)) {
          ++missing_witnesses;
        }
      }
    } catch (const std::exception&) {
      ++exceptions;
    }
  }
  std::ostringstream detail;
  detail << passing << " passing (" << oracle_violations << " oracle violations), " << failing
         << " failing (" << missing_witnesses << " missing witnesses), " << exceptions
         << " exceptions";
  return {passing > 0 && failing > 0 && oracle_violations == 0 && missing_witnesses == 0 &&
              exceptions == 0,
          detail.str()};
}

// Step-by-step rollout of u_k = sum_j L_{k,j} y_j + g_k.
VectorXd OutputFeedbackInputs(const Plant& plant, const OutputFeedbackController& ctrl,
                              const VectorXd& x0, const std::vector<VectorXd>& w) {
  const std::size_t N = w.size();
  const Eigen::Index m = plant.m(), p = plant.p();
  VectorXd x = x0;
  VectorXd y_history = VectorXd::Zero(p * (N + 1));
  VectorXd inputs = VectorXd::Zero(m * N);
  for (std::size_t k = 0; k < N; ++k) {
    y_history.segment(k * p, p) = plant.C * x + plant.H * w[k];
    VectorXd u = ctrl.g.segment(k * m, m);
    for (std::size_t j = 0; j <= k; ++j) {
      u += ctrl.L.block(k * m, j * p, m, p) * y_history.segment(j * p, p);
    }
    inputs.segment(k * m, m) = u;
    x = plant.A * x + plant.B * u + plant.D * w[k];
  }
  return inputs;
}

// u = Q y_w + v, with y_w the zero-input, zero-state output driven by w.
VectorXd DisturbanceFeedbackInputs(const Plant& plant, const DisturbanceFeedbackPolicy& policy,
                                   const std::vector<VectorXd>& w) {
  const std::size_t N = w.size();
  const Eigen::Index n = plant.n(), p = plant.p();
  VectorXd y_dist = VectorXd::Zero(p * (N + 1));
  VectorXd x = VectorXd::Zero(n);
  for (std::size_t k = 0; k <= N; ++k) {
    const VectorXd w_k = k < N ? w[k] : VectorXd::Zero(n);
    y_dist.segment(k * p, p) = plant.C * x + plant.H * w_k;
    x = plant.A * x + plant.D * w_k;
  }
  return (policy.Q * y_dist + policy.v).head(plant.m() * N);
}

Outcome MappingBijection() {
  testing::Rng rng(1005);
  std::normal_distribution<double> gauss;
  const std::vector<std::array<Eigen::Index, 4>> classes{{1, 1, 1, 2}, {2, 2, 2, 4}, {3, 2, 3, 5},
                                                         {4, 3, 2, 6}};
  double worst_round_trip = 0.0, worst_inputs = 0.0;
  int controllers = 0;
  for (const auto& [n, m, p, N] : classes) {
    for (int trial = 0; trial < 100; ++trial) {
      const Plant plant = testing::RandomRealPlant(rng, n, m, p);
      const LiftedSystem lifted = BuildLifted(plant, N);
      const VectorXd x0 = RandomVector(rng, n);
      const BinaryMatrix full = FullPattern(m, p, N);
      const DisturbanceFeedbackPolicy policy{testing::RandomOnPattern(rng, full),
                                             RandomOffset(rng, m, N)};
      const DisturbanceFeedbackPolicy back = LToQ(QToL(policy, lifted, x0), lifted, x0);
      worst_round_trip = std::max({worst_round_trip, RelativeError(back.Q, policy.Q),
                                   RelativeError(back.v, policy.v)});
      const OutputFeedbackController ctrl{testing::RandomOnPattern(rng, full),
                                          RandomOffset(rng, m, N)};
      const DisturbanceFeedbackPolicy as_policy = LToQ(ctrl, lifted, x0);
      const OutputFeedbackController again = QToL(as_policy, lifted, x0);
      worst_round_trip = std::max({worst_round_trip, RelativeError(again.L, ctrl.L),
                                   RelativeError(again.g, ctrl.g)});
      std::vector<VectorXd> w(N);
      for (auto& w_k : w) w_k = VectorXd::NullaryExpr(n, [&] { return gauss(rng); });
      worst_inputs = std::max(worst_inputs,
                              RelativeError(DisturbanceFeedbackInputs(plant, as_policy, w),
                                            OutputFeedbackInputs(plant, ctrl, x0, w)));
      ++controllers;
    }
  }
  std::ostringstream detail;
  detail << controllers << " controllers over " << classes.size()
         << " size classes, worst round-trip error " << worst_round_trip
         << ", worst input mismatch " << worst_inputs;
  return {worst_round_trip <= 1e-8 && worst_inputs <= 1e-8, detail.str()};
}

Outcome SparsityTransfer() {
  testing::Rng rng(1007);
  int qi_instances = 0, escapes_from_subspace = 0, non_qi_instances = 0, witnesses = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Plant plant = testing::RandomDyadicPlant(rng, 3, 2, 2, 0.4);
    const InformationStructure info =
        testing::QiClosure(SampleBernoulliStructure(4, 2, 2, 0.2, 7000 + trial), plant);
    if (!QiTestGeneral(info, plant).quadratically_invariant) {
      ++escapes_from_subspace;
      continue;
    }
    const LiftedSystem lifted = BuildLifted(plant, 4);
    const BinaryMatrix big = BigS(info);
    const VectorXd x0 = RandomVector(rng, 3);
    for (int draw = 0; draw < 10; ++draw) {
      const OutputFeedbackController ctrl{testing::RandomOnPattern(rng, big),
                                          RandomOffset(rng, 2, 4)};
      if (!CheckMembershipScaled(LToQ(ctrl, lifted, x0).Q, big)) ++escapes_from_subspace;
    }
    ++qi_instances;
  }
  {
    const LiftedSystem lifted = BuildLifted(testing::ForgettingPlant(), 3);
    const BinaryMatrix big = BigS(testing::ForgettingStructure());
    for (int draw = 0; draw < 100; ++draw) {
      const OutputFeedbackController ctrl{testing::RandomOnPattern(rng, big),
                                          RandomOffset(rng, 2, 3)};
      if (!CheckMembershipScaled(LToQ(ctrl, lifted, VectorXd::Zero(3)).Q, big)) {
        ++escapes_from_subspace;
      }
    }
    ++qi_instances;
  }
  for (int trial = 0; trial < 200; ++trial) {
    const Plant plant = testing::RandomDyadicPlant(rng, 3, 2, 2, 0.4);
    const InformationStructure info = SampleBernoulliStructure(4, 2, 2, 0.3, 8000 + trial);
    const QIReport report = QiTestGeneral(info, plant);
    if (report.quadratically_invariant) continue;
    ++non_qi_instances;
    const LiftedSystem lifted = BuildLifted(plant, 4);
    const BinaryMatrix big = BigS(info);
    const QICondition* failed = nullptr;
    for (const QICondition& c : report.conditions) {
      if (!c.holds) {
        failed = &c;
        break;
      }
    }
    const auto pair = ConstructCounterexample(info, plant, *failed);
    if (!pair) continue;
    for (const double t : {1.0, 2.0, -1.0, 0.5}) {
      const OutputFeedbackController ctrl{pair->L + t * pair->L_prime, VectorXd::Zero(10)};
      if (CheckMembership(ctrl.L, big, 0.0) &&
          !CheckMembershipScaled(LToQ(ctrl, lifted, VectorXd::Zero(3)).Q, big)) {
        ++witnesses;
        break;
      }
    }
  }
  std::ostringstream detail;
  detail << qi_instances << " QI instances with " << escapes_from_subspace
         << " escapes, witnesses on " << witnesses << "/" << non_qi_instances
         << " non-QI instances";
  return {qi_instances > 50 && escapes_from_subspace == 0 && non_qi_instances > 0 &&
              witnesses == non_qi_instances,
          detail.str()};
}

struct Synthesis {
  Problem problem;
  QPSolution solution;
  RobustProblem robust;
};

Synthesis Synthesize(const std::string& fixture, double eps) {
  Synthesis out{LoadProblem(Fixture(fixture)), {}, {}};
  const LiftedSystem lifted = BuildLifted(out.problem.plant, out.problem.horizon);
  out.robust = Assemble(lifted, out.problem.info, *out.problem.constraints, out.problem.cost,
                        out.problem.x0);
  SolverSettings settings;
  settings.eps_abs = eps;
  settings.eps_rel = eps;
  out.solution = Solve(out.robust.qp, settings);
  return out;
}

Outcome RobustFeasibility() {
  const Clock::time_point start = Clock::now();
  const Synthesis s = Synthesize("robust_2x2.json", 1e-6);
  if (s.solution.status != SolveStatus::kOptimal) {
    return {false, "solver status " + ToString(s.solution.status)};
  }
  const LiftedSystem lifted = BuildLifted(s.problem.plant, s.problem.horizon);
  const SynthesisResult result = Extract(s.solution, s.robust.layout);
  const OutputFeedbackController ctrl = QToL(result.policy, lifted, s.problem.x0);
  const VerifyReport report =
      VerifyRobust(s.problem.plant, ctrl, *s.problem.constraints, s.problem.x0);
  const double elapsed = Seconds(start);
  std::ostringstream detail;
  detail << "n=" << s.problem.plant.n() << " m=" << s.problem.plant.m()
         << " p=" << s.problem.plant.p() << " N=" << s.problem.horizon << ", "
         << report.realizations << " vertex sequences, worst slack " << report.worst_slack
         << ", " << elapsed << " s";
  return {report.method == VerifyMethod::kVertices && report.worst_slack >= -1e-6 &&
              elapsed < 10.0,
          detail.str()};
}

Outcome CentralizedSanity() {
  const Synthesis s = Synthesize("zero_disturbance.json", 1e-9);
  const BinaryMatrix all_ones =
      BigS(ConstantStructure(BinaryMatrix::Ones(s.problem.plant.m(), s.problem.plant.p()),
                             s.problem.horizon));
  const bool full_structure = BigS(s.problem.info) == all_ones;
  const bool zero_set = (s.problem.constraints->bw.array() == 0.0).all();
  if (s.solution.status != SolveStatus::kOptimal) {
    return {false, "solver status " + ToString(s.solution.status)};
  }
  const testing::BatchLqrResult oracle = testing::BatchConstrainedLqr(
      s.problem.plant, s.problem.horizon, s.problem.x0, s.problem.cost.Qx[0],
      s.problem.cost.Ru[0], *s.problem.constraints);
  const double relative =
      std::abs(s.solution.objective - oracle.cost) / std::max(1.0, std::abs(oracle.cost));
  std::ostringstream detail;
  detail.precision(10);
  detail << "synthesized " << s.solution.objective << ", batch LQR " << oracle.cost
         << ", relative error " << relative;
  return {full_structure && zero_set && relative <= 1e-5, detail.str()};
}

Outcome QpSolverCorrectness() {
  testing::Rng rng(1011);
  std::normal_distribution<double> gauss;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_int_distribution<int> dim(1, 30);
  auto random = [&](Eigen::Index r, Eigen::Index c) {
    return MatrixXd(MatrixXd::NullaryExpr(r, c, [&] { return gauss(rng); }));
  };
  double worst_error = 0.0, worst_residual = 0.0;
  int failures = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const Eigen::Index n = dim(rng);
    const Eigen::Index eq = std::uniform_int_distribution<Eigen::Index>(0, n / 3)(rng);
    const Eigen::Index in = std::uniform_int_distribution<Eigen::Index>(0, 2 * n)(rng);
    QuadraticProgram qp = QuadraticProgram::Empty(n);
    const MatrixXd M = random(n, n);
    qp.P = M * M.transpose() + 0.1 * MatrixXd::Identity(n, n);
    qp.q = 3.0 * random(n, 1);
    const VectorXd feasible = random(n, 1);
    qp.A_eq = random(eq, n);
    qp.b_eq = qp.A_eq * feasible;
    qp.A_in = random(in, n);
    qp.b_in = qp.A_in * feasible + VectorXd::NullaryExpr(in, [&] { return unit(rng); });
    const QPSolution sol = Solve(qp);
    if (sol.status != SolveStatus::kOptimal) {
      ++failures;
      continue;
    }
    const testing::ActiveSetResult oracle =
        testing::SolveActiveSet(qp.P, qp.q, qp.A_eq, qp.b_eq, qp.A_in, qp.b_in, feasible);
    worst_error = std::max(worst_error, (sol.primal - oracle.x).cwiseAbs().maxCoeff() /
                                            std::max(1.0, oracle.x.cwiseAbs().maxCoeff()));
    const KktResiduals r = ComputeKktResiduals(qp, sol.primal, sol.dual_eq, sol.dual_in);
    worst_residual = std::max({worst_residual, r.primal, r.dual, r.gap});
  }
  std::ostringstream detail;
  detail << "100 QPs, " << failures << " not optimal, worst deviation " << worst_error
         << ", worst KKT residual " << worst_residual;
  return {failures == 0 && worst_error <= 1e-5 && worst_residual <= 1e-6, detail.str()};
}

int Run() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"forgetting fixture qi-check", ForgettingFixture},
      {"cross-test equivalence", CrossTestEquivalence},
      {"oracle soundness", OracleSoundness},
      {"mapping bijection", MappingBijection},
      {"QI sparsity transfer", SparsityTransfer},
      {"robust feasibility end-to-end", RobustFeasibility},
      {"centralized sanity", CentralizedSanity},
      {"QP solver correctness", QpSolverCorrectness},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome outcome;
    try {
      outcome = criteria[i].second();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    if (!outcome.pass) ++failed;
    std::cout << (outcome.pass ? "PASS" : "FAIL") << " " << i + 1 << " " << criteria[i].first
              << ": " << outcome.detail << std::endl;
  }
  std::cout << (failed == 0 ? "all criteria passed" : std::to_string(failed) + " failed")
            << std::endl;
  return failed == 0 ? 0 : 1;
}

}  // namespace
}  // namespace dcs

int main() { return dcs::Run(); }
