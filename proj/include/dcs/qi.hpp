#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dcs/binmat.hpp"
#include "dcs/infostruct.hpp"
#include "dcs/lifted.hpp"

namespace dcs {

/// One binary inequality of a QI test. Index fields not used by a test
/// kind are left empty: the general test fills k, j, h, g; the sensing
/// test fills g; the communication test fills g and r.
struct QICondition {
  std::optional<std::size_t> k, j, h, g, r;
  BinaryMatrix lhs;
  BinaryMatrix rhs;
  bool holds = true;
  std::vector<std::pair<std::size_t, std::size_t>> violations;

  /// e.g. "(k=2,j=0,h=2,g=1)".
  std::string Label() const;
};

enum class QITestKind { kGeneral, kSensing, kComm, kOracle };
std::string ToString(QITestKind kind);
std::string ToString(DeltaMode mode);

struct QIReport {
  bool quadratically_invariant = true;
  /// Every condition in enumeration order, violated or not.
  std::vector<QICondition> conditions;
  DeltaMode mode = DeltaMode::kNumeric;
  double tol = kDefaultStructTol;
  QITestKind test_kind = QITestKind::kGeneral;

  std::size_t num_violated() const;
};

/// (k, j, h, g) with 1 <= k <= N-1, 0 <= j <= k-1, j+1 <= h <= k and
/// 0 <= g <= h-j-1, in lexicographic order.
struct ConditionIndex {
  std::size_t k, j, h, g;
  friend bool operator==(const ConditionIndex&, const ConditionIndex&) = default;
};

std::vector<ConditionIndex> EnumerateConditions(std::size_t horizon);

/// Finite test S_{k,h} Delta_g S_{h-g-1,j} <= S_{k,j} over all enumerated
/// indices; exact for any information structure.
QIReport QiTestGeneral(const InformationStructure& info, const Plant& plant,
                       DeltaMode mode = DeltaMode::kNumeric,
                       double tol = kDefaultStructTol);

/// Constant sensing pattern: S Delta_g S <= S for g = 0..n-1. Equivalent to
/// the general test on ConstantStructure(S, N) whenever N >= n + 1.
QIReport QiTestSensing(const BinaryMatrix& S, const Plant& plant,
                       DeltaMode mode = DeltaMode::kNumeric,
                       double tol = kDefaultStructTol);

/// Sensing plus propagating communication:
/// S Delta_g Z^r S <= Z^{g+r+1} S for g in [0, n-1], r in [0, D(Z)],
/// g + r <= N - 2. Equivalent to the general test on
/// CommPropagationStructure(S, Z, N).
QIReport QiTestComm(const BinaryMatrix& S, const CommTopology& Z,
                    const Plant& plant, std::size_t horizon,
                    DeltaMode mode = DeltaMode::kNumeric,
                    double tol = kDefaultStructTol);

/// Pattern of the stacked input-to-output map: block (i, l) = Delta_{i-l-1}
/// for i > l, zero otherwise.
BinaryMatrix BigDelta(const Plant& plant, std::size_t horizon,
                      DeltaMode mode = DeltaMode::kNumeric,
                      double tol = kDefaultStructTol);

/// Blocks of S Delta S accumulated per (k, j) as sums over h and g, for
/// 1 <= k <= N-1 and j < k. QI holds iff every block is <= S_{k,j}.
std::map<BlockKey, BinaryMatrix> PhiBlocks(const InformationStructure& info,
                                           const Plant& plant,
                                           DeltaMode mode = DeltaMode::kNumeric,
                                           double tol = kDefaultStructTol);

/// Pair L, L' in Sparse(BigS) whose product L CB L' leaves the subspace.
struct QICounterexample {
  Eigen::MatrixXd L;
  Eigen::MatrixXd L_prime;
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

struct OracleResult {
  bool consistent = true;
  std::optional<QICounterexample> counterexample;
  std::size_t trials_run = 0;
};

/// Randomized check of the QI definition: samples L, L' with entries
/// uniform in [-1, 1] on the support of BigS and tests whether L CB L'
/// stays in Sparse(BigS). Deterministic in `seed`.
OracleResult QiOracle(const InformationStructure& info, const Plant& plant,
                      std::size_t trials, std::uint64_t seed,
                      double tol = kDefaultStructTol);

/// Builds the single-entry pair that realizes a violated general-test
/// condition: L has one nonzero in block (k, h), L' one nonzero in block
/// (h-g-1, j), so L CB L' is nonzero at the violated entry of block (k, j).
/// Returns nullopt if the condition holds or the violation only exists in
/// the structural sense (no numerically nonzero path).
std::optional<QICounterexample> ConstructCounterexample(
    const InformationStructure& info, const Plant& plant,
    const QICondition& condition, double tol = kDefaultStructTol);

}  // namespace dcs
