#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "dcs/lifted.hpp"
#include "dcs/policy.hpp"
#include "dcs/robust.hpp"

namespace dcs {

struct Trajectory {
  std::vector<Eigen::VectorXd> states;        // x_0..x_N
  std::vector<Eigen::VectorXd> inputs;        // u_0..u_{N-1}
  std::vector<Eigen::VectorXd> outputs;       // y_0..y_N
  std::vector<Eigen::VectorXd> disturbances;  // w_0..w_{N-1}
  std::optional<double> nominal_cost;

  std::size_t horizon() const { return inputs.size(); }
  /// [x_0; ...; x_N].
  Eigen::VectorXd StackedStates() const;
  /// [u_0; ...; u_{N-1}; 0].
  Eigen::VectorXd StackedInputs() const;
};

/// Stacks w_0..w_{N-1} and appends the zero block at index N.
Eigen::VectorXd StackDisturbance(const std::vector<Eigen::VectorXd>& w,
                                 Eigen::Index n);

/// Rollout of u_k = sum_{j<=k} L_{k,j} y_j + g_k. The controller horizon
/// is inferred from its size.
Trajectory RolloutOutputFeedback(const Plant& plant,
                                 const OutputFeedbackController& controller,
                                 const Eigen::VectorXd& x0,
                                 const std::vector<Eigen::VectorXd>& w);

/// Rollout of u = Q P w + v.
Trajectory RolloutDisturbanceFeedback(const Plant& plant,
                                      const DisturbanceFeedbackPolicy& policy,
                                      const LiftedSystem& lifted,
                                      const Eigen::VectorXd& x0,
                                      const std::vector<Eigen::VectorXd>& w);

/// Smallest slack of the stage and terminal constraints along a trajectory.
double ConstraintSlack(const ConstraintSpec& spec, const Trajectory& trajectory);

/// Vertices of {w : Aw w <= bw} by enumerating n-row subsets (q <= 20).
/// Vertices are deduplicated and returned in a deterministic order.
std::vector<Eigen::VectorXd> EnumerateVertices(const Eigen::MatrixXd& Aw,
                                               const Eigen::VectorXd& bw,
                                               double tol = 1e-9);

enum class VerifyMethod { kVertices, kSamples };
std::string ToString(VerifyMethod method);

struct VerifyOptions {
  VerifyMethod method = VerifyMethod::kVertices;
  /// Maximum number of stacked vertex combinations.
  std::size_t vertex_budget = 4096;
  std::size_t samples = 1000;
  std::uint64_t seed = 0;
  /// Slack below -violation_tol counts as a violation.
  double violation_tol = 1e-6;
};

struct VerifyReport {
  double worst_slack = 0.0;
  std::vector<Eigen::VectorXd> worst_w;
  std::optional<std::vector<Eigen::VectorXd>> violating_w;
  VerifyMethod method = VerifyMethod::kVertices;
  std::size_t realizations = 0;
  Trajectory worst_trajectory;
};

/// Worst constraint slack of the closed loop over disturbance sequences in
/// W^N. With kVertices every combination of polytope vertices is checked
/// (the slack is affine in w, so this is exact); a polytope with more than
/// 20 rows or a combination count above the budget throws
/// std::runtime_error. With kSamples, points are drawn uniformly from W by
/// rejection from its bounding box.
VerifyReport VerifyRobust(const Plant& plant, const OutputFeedbackController& controller,
                          const ConstraintSpec& spec, const Eigen::VectorXd& x0,
                          const VerifyOptions& options = {});

}  // namespace dcs
