#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <utility>
#include <vector>

#include "dcs/binmat.hpp"

namespace dcs {

/// Number of time steps for an output to reach an input. std::nullopt means
/// the output never arrives (a permanent sparsity constraint).
using Delay = std::optional<std::size_t>;
inline constexpr Delay kNeverDelivered = std::nullopt;

/// Row-major m x p table of delays.
using DelayMatrix = std::vector<std::vector<Delay>>;

/// Block key (k, j): what inputs at time k know about outputs at time j.
using BlockKey = std::pair<std::size_t, std::size_t>;

/// Family of m x p patterns S_{k,j}, 0 <= j <= k <= N-1, stating which
/// scalar outputs y_j^b the scalar input u_k^a may use.
class InformationStructure {
 public:
  /// Validates that `blocks` covers exactly the causal index set with m x p
  /// entries. Throws std::invalid_argument naming the offending key.
  InformationStructure(std::size_t horizon, std::size_t inputs,
                       std::size_t outputs,
                       const std::map<BlockKey, BinaryMatrix>& blocks);

  std::size_t horizon() const { return horizon_; }
  std::size_t inputs() const { return inputs_; }
  std::size_t outputs() const { return outputs_; }

  const BinaryMatrix& block(std::size_t k, std::size_t j) const;
  std::map<BlockKey, BinaryMatrix> blocks() const;

  friend bool operator==(const InformationStructure& a,
                         const InformationStructure& b) {
    return a.horizon_ == b.horizon_ && a.inputs_ == b.inputs_ &&
           a.outputs_ == b.outputs_ && a.blocks_ == b.blocks_;
  }

 private:
  static std::size_t Index(std::size_t k, std::size_t j) {
    return k * (k + 1) / 2 + j;
  }

  std::size_t horizon_;
  std::size_t inputs_;
  std::size_t outputs_;
  std::vector<BinaryMatrix> blocks_;
};

/// Square m x m communication pattern with unit diagonal: Z(i,l) = 1 iff
/// controller i receives what controller l has stored, one step later.
class CommTopology {
 public:
  /// Throws std::invalid_argument if Z is not square or has a zero on the
  /// diagonal.
  explicit CommTopology(BinaryMatrix Z);
  const BinaryMatrix& matrix() const { return Z_; }
  std::size_t size() const { return Z_.rows(); }

 private:
  BinaryMatrix Z_;
};

InformationStructure ConstantStructure(const BinaryMatrix& S,
                                       std::size_t horizon);

/// S_{k,l}(a,b) = 1 iff l + d(a,b) <= k.
InformationStructure FixedDelayStructure(const DelayMatrix& delays,
                                         std::size_t horizon);

/// S_{k,l}(a,b) = 1 iff l + e(k,a,b) <= k.
InformationStructure TimeVaryingDelayStructure(
    const std::function<Delay(std::size_t k, std::size_t a, std::size_t b)>&
        delay,
    std::size_t inputs, std::size_t outputs, std::size_t horizon);

/// Sensing pattern S propagated through a communication graph with memory:
/// S_{k,j} = Z^{min(D, k-j)} S where D is the diameter of Z.
InformationStructure CommPropagationStructure(const BinaryMatrix& S,
                                              const CommTopology& Z,
                                              std::size_t horizon);

InformationStructure CustomStructure(
    const std::map<BlockKey, BinaryMatrix>& blocks, std::size_t horizon,
    std::size_t inputs, std::size_t outputs);

/// Smallest D with Z^D = Z^{D+1}. Because Z has a unit diagonal the powers
/// are monotone, so this is the longest shortest path (in edges) of the
/// graph and Z^r = Z^D for every r >= D.
std::size_t Diameter(const CommTopology& Z);

/// The stacked m(N+1) x p(N+1) pattern: block (k,j) = S_{k,j} for
/// j <= k < N, zero above the block diagonal and in block row/column N.
BinaryMatrix BigS(const InformationStructure& info);

/// Inverse of BigS on its image: reads the causal blocks back out.
InformationStructure StructureFromBigS(const BinaryMatrix& big,
                                       std::size_t horizon, std::size_t inputs,
                                       std::size_t outputs);

/// Random structure where each block is drawn uniformly from `candidates`
/// (all of the same m x p shape). Deterministic in `seed`.
InformationStructure SampleStructure(const std::vector<BinaryMatrix>& candidates,
                                     std::size_t horizon, std::uint64_t seed);

/// Random structure with independent Bernoulli(density) entries.
InformationStructure SampleBernoulliStructure(std::size_t horizon,
                                              std::size_t inputs,
                                              std::size_t outputs,
                                              double density,
                                              std::uint64_t seed);

}  // namespace dcs
