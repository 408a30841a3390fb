#include "dcs/infostruct.hpp"

#include <random>
#include <sstream>
#include <stdexcept>

namespace dcs {
namespace {

std::string KeyString(const BlockKey& key) {
  std::ostringstream os;
  os << "(" << key.first << "," << key.second << ")";
  return os.str();
}

bool Arrived(const Delay& d, std::size_t k, std::size_t l) {
  return d.has_value() && l + *d <= k;
}

}  // namespace

InformationStructure::InformationStructure(
    std::size_t horizon, std::size_t inputs, std::size_t outputs,
    const std::map<BlockKey, BinaryMatrix>& blocks)
    : horizon_(horizon), inputs_(inputs), outputs_(outputs) {
  if (horizon == 0) {
    throw std::invalid_argument("InformationStructure: horizon must be >= 1");
  }
  for (const auto& [key, block] : blocks) {
    if (key.second > key.first) {
      throw std::invalid_argument("InformationStructure: acausal block " +
                                  KeyString(key));
    }
    if (key.first >= horizon) {
      throw std::invalid_argument("InformationStructure: block " +
                                  KeyString(key) + " beyond horizon");
    }
    if (block.rows() != inputs || block.cols() != outputs) {
      std::ostringstream msg;
      msg << "InformationStructure: block " << KeyString(key) << " is "
          << block.rows() << "x" << block.cols() << ", expected " << inputs
          << "x" << outputs;
      throw std::invalid_argument(msg.str());
    }
  }
  blocks_.reserve(horizon * (horizon + 1) / 2);
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      auto it = blocks.find({k, j});
      if (it == blocks.end()) {
        throw std::invalid_argument("InformationStructure: missing block " +
                                    KeyString({k, j}));
      }
      blocks_.push_back(it->second);
    }
  }
}

const BinaryMatrix& InformationStructure::block(std::size_t k,
                                                std::size_t j) const {
  if (j > k || k >= horizon_) {
    throw std::out_of_range("InformationStructure::block: no block " +
                            KeyString({k, j}));
  }
  return blocks_[Index(k, j)];
}

std::map<BlockKey, BinaryMatrix> InformationStructure::blocks() const {
  std::map<BlockKey, BinaryMatrix> out;
  for (std::size_t k = 0; k < horizon_; ++k) {
    for (std::size_t j = 0; j <= k; ++j) out.emplace(BlockKey{k, j}, block(k, j));
  }
  return out;
}

CommTopology::CommTopology(BinaryMatrix Z) : Z_(std::move(Z)) {
  if (Z_.rows() != Z_.cols()) {
    throw std::invalid_argument("CommTopology: matrix must be square");
  }
  for (std::size_t i = 0; i < Z_.rows(); ++i) {
    if (!Z_(i, i)) {
      throw std::invalid_argument(
          "CommTopology: diagonal entries must be 1 (controllers remember)");
    }
  }
}

InformationStructure ConstantStructure(const BinaryMatrix& S,
                                       std::size_t horizon) {
  std::map<BlockKey, BinaryMatrix> blocks;
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) blocks.emplace(BlockKey{k, j}, S);
  }
  return InformationStructure(horizon, S.rows(), S.cols(), blocks);
}

InformationStructure FixedDelayStructure(const DelayMatrix& delays,
                                         std::size_t horizon) {
  const std::size_t m = delays.size();
  const std::size_t p = m == 0 ? 0 : delays.front().size();
  for (const auto& row : delays) {
    if (row.size() != p) {
      throw std::invalid_argument("FixedDelayStructure: ragged delay matrix");
    }
  }
  return TimeVaryingDelayStructure(
      [&](std::size_t, std::size_t a, std::size_t b) { return delays[a][b]; },
      m, p, horizon);
}

InformationStructure TimeVaryingDelayStructure(
    const std::function<Delay(std::size_t, std::size_t, std::size_t)>& delay,
    std::size_t inputs, std::size_t outputs, std::size_t horizon) {
  std::map<BlockKey, BinaryMatrix> blocks;
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t l = 0; l <= k; ++l) {
      blocks.emplace(BlockKey{k, l},
                     BinaryMatrix::FromFunction(
                         inputs, outputs, [&](std::size_t a, std::size_t b) {
                           return Arrived(delay(k, a, b), k, l);
                         }));
    }
  }
  return InformationStructure(horizon, inputs, outputs, blocks);
}

std::size_t Diameter(const CommTopology& Z) {
  const BinaryMatrix& z = Z.matrix();
  BinaryMatrix power = BinaryMatrix::Identity(z.rows());
  for (std::size_t d = 0;; ++d) {
    BinaryMatrix next = BoolMul(power, z);
    if (next == power) return d;
    power = std::move(next);
  }
}

InformationStructure CommPropagationStructure(const BinaryMatrix& S,
                                              const CommTopology& Z,
                                              std::size_t horizon) {
  if (Z.size() != S.rows()) {
    throw std::invalid_argument(
        "CommPropagationStructure: Z must be m x m with m = rows of S");
  }
  const std::size_t diameter = Diameter(Z);
  // Z^a S for a = 0..diameter; larger ages reuse the last entry.
  std::vector<BinaryMatrix> by_age;
  BinaryMatrix power = BinaryMatrix::Identity(Z.size());
  for (std::size_t a = 0; a <= diameter; ++a) {
    by_age.push_back(BoolMul(power, S));
    power = BoolMul(power, Z.matrix());
  }
  std::map<BlockKey, BinaryMatrix> blocks;
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      blocks.emplace(BlockKey{k, j}, by_age[std::min(diameter, k - j)]);
    }
  }
  return InformationStructure(horizon, S.rows(), S.cols(), blocks);
}

InformationStructure CustomStructure(
    const std::map<BlockKey, BinaryMatrix>& blocks, std::size_t horizon,
    std::size_t inputs, std::size_t outputs) {
  return InformationStructure(horizon, inputs, outputs, blocks);
}

BinaryMatrix BigS(const InformationStructure& info) {
  const std::size_t N = info.horizon();
  const std::size_t m = info.inputs();
  const std::size_t p = info.outputs();
  BinaryMatrix big(m * (N + 1), p * (N + 1));
  for (std::size_t k = 0; k < N; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      big = big.WithBlock(k * m, j * p, info.block(k, j));
    }
  }
  return big;
}

InformationStructure StructureFromBigS(const BinaryMatrix& big,
                                       std::size_t horizon, std::size_t inputs,
                                       std::size_t outputs) {
  if (big.rows() != inputs * (horizon + 1) ||
      big.cols() != outputs * (horizon + 1)) {
    throw std::invalid_argument("StructureFromBigS: shape mismatch");
  }
  std::map<BlockKey, BinaryMatrix> blocks;
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      blocks.emplace(BlockKey{k, j},
                     big.Block(k * inputs, j * outputs, inputs, outputs));
    }
  }
  return InformationStructure(horizon, inputs, outputs, blocks);
}

InformationStructure SampleStructure(const std::vector<BinaryMatrix>& candidates,
                                     std::size_t horizon, std::uint64_t seed) {
  if (candidates.empty()) {
    throw std::invalid_argument("SampleStructure: no candidate patterns");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, candidates.size() - 1);
  std::map<BlockKey, BinaryMatrix> blocks;
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      blocks.emplace(BlockKey{k, j}, candidates[pick(rng)]);
    }
  }
  return InformationStructure(horizon, candidates.front().rows(),
                              candidates.front().cols(), blocks);
}

InformationStructure SampleBernoulliStructure(std::size_t horizon,
                                              std::size_t inputs,
                                              std::size_t outputs,
                                              double density,
                                              std::uint64_t seed) {
  if (!(density >= 0.0 && density <= 1.0)) {
    throw std::invalid_argument("SampleBernoulliStructure: density not in [0,1]");
  }
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution coin(density);
  std::map<BlockKey, BinaryMatrix> blocks;
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      blocks.emplace(BlockKey{k, j},
                     BinaryMatrix::FromFunction(
                         inputs, outputs,
                         [&](std::size_t, std::size_t) { return coin(rng); }));
    }
  }
  return InformationStructure(horizon, inputs, outputs, blocks);
}

}  // namespace dcs
