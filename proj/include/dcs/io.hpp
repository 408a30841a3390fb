#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "dcs/binmat.hpp"
#include "dcs/infostruct.hpp"
#include "dcs/lifted.hpp"
#include "dcs/policy.hpp"
#include "dcs/qi.hpp"
#include "dcs/qpsolve.hpp"
#include "dcs/robust.hpp"
#include "dcs/sim.hpp"

namespace dcs {

using Json = nlohmann::ordered_json;

/// Malformed input file. `path` is a JSON pointer-like location such as
/// "/plant/A/1" or "line 3, column 7" for syntax errors.
class SchemaError : public std::runtime_error {
 public:
  SchemaError(const std::string& path, const std::string& message)
      : std::runtime_error(path + ": " + message), path_(path) {}
  const std::string& path() const { return path_; }

 private:
  std::string path_;
};

/// Settings a problem file may carry; every field is optional.
struct ProblemOptions {
  std::optional<double> tol;
  std::optional<DeltaMode> delta_mode;
  std::optional<double> eps_abs;
  std::optional<double> eps_rel;
  std::optional<int> max_iters;
  std::optional<std::uint64_t> seed;
  std::optional<double> q_tikhonov;
};

/// One self-describing problem: plant, horizon, initial state, information
/// structure and, for synthesis, constraints and cost.
struct Problem {
  Plant plant;
  std::size_t horizon = 0;
  Eigen::VectorXd x0;
  InformationStructure info;
  /// "constant", "fixed_delay", "time_varying_delay", "comm" or "custom".
  std::string info_kind;
  /// Sensing pattern for the constant and comm kinds.
  std::optional<BinaryMatrix> sensing;
  /// Communication graph for the comm kind.
  std::optional<CommTopology> topology;
  std::optional<ConstraintSpec> constraints;
  CostSpec cost;
  ProblemOptions options;
};

/// Parses a problem from JSON text. `source` prefixes diagnostics.
Problem ParseProblem(const std::string& text, const std::string& source = "<input>");
Problem LoadProblem(const std::string& file);

/// Reads a whole file; throws std::runtime_error if it cannot be opened.
std::string ReadFile(const std::string& file);
/// Parses JSON text, reporting syntax errors with line and column.
Json ParseJsonText(const std::string& text, const std::string& source);

DeltaMode ParseDeltaMode(const std::string& name);

Json ToJson(const BinaryMatrix& X);
Json ToJson(const Eigen::MatrixXd& M);
Json ToJson(const Eigen::VectorXd& v);

BinaryMatrix BinaryFromJson(const Json& j, const std::string& path);
/// Dense row-major matrix. An empty array yields a 0 x `empty_cols` matrix.
Eigen::MatrixXd MatrixFromJson(const Json& j, const std::string& path,
                               Eigen::Index empty_cols = 0);
Eigen::VectorXd VectorFromJson(const Json& j, const std::string& path);

Json ToJson(const QICondition& condition);
Json ToJson(const QIReport& report);

/// Controller file: causal blocks keyed "k,j", per-step offsets. The
/// disturbance-feedback pair is included when given.
Json ControllerToJson(const OutputFeedbackController& controller,
                      const DisturbanceFeedbackPolicy* policy, std::size_t horizon,
                      Eigen::Index m, Eigen::Index p);
OutputFeedbackController ControllerFromJson(const Json& j, std::size_t horizon,
                                            Eigen::Index m, Eigen::Index p);

Json ToJson(const Trajectory& trajectory);
Json ToJson(const VerifyReport& report);
Json ToJson(const KktResiduals& residuals);

/// Sparse triplet export: objective (P, q, constant), equalities,
/// inequalities and variable names.
Json QpToJson(const QuadraticProgram& qp, const DecisionLayout& layout);

}  // namespace dcs
