#include "dcs/qi.hpp"

#include <algorithm>
#include <random>
#include <sstream>
#include <stdexcept>

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;

void RequireMatchingPlant(const InformationStructure& info, const Plant& plant) {
  plant.Validate();
  if (static_cast<Index>(info.inputs()) != plant.m() ||
      static_cast<Index>(info.outputs()) != plant.p()) {
    std::ostringstream msg;
    msg << "information structure is " << info.inputs() << "x"
        << info.outputs() << " per block but the plant has m=" << plant.m()
        << ", p=" << plant.p();
    throw std::invalid_argument(msg.str());
  }
}

QICondition MakeCondition(BinaryMatrix lhs, BinaryMatrix rhs) {
  QICondition c;
  OrderReport order = Leq(lhs, rhs);
  c.lhs = std::move(lhs);
  c.rhs = std::move(rhs);
  c.holds = order.holds;
  c.violations = std::move(order.violations);
  return c;
}

QIReport Finish(std::vector<QICondition> conditions, DeltaMode mode, double tol,
                QITestKind kind) {
  QIReport report;
  report.conditions = std::move(conditions);
  report.mode = mode;
  report.tol = tol;
  report.test_kind = kind;
  report.quadratically_invariant =
      std::all_of(report.conditions.begin(), report.conditions.end(),
                  [](const QICondition& c) { return c.holds; });
  return report;
}

std::vector<BinaryMatrix> DeltaSequence(const Plant& plant, std::size_t count,
                                        DeltaMode mode, double tol) {
  std::vector<BinaryMatrix> out;
  out.reserve(count);
  for (std::size_t g = 0; g < count; ++g) out.push_back(Delta(plant, g, tol, mode));
  return out;
}

}  // namespace

std::string QICondition::Label() const {
  std::ostringstream os;
  os << "(";
  bool first = true;
  auto put = [&](const char* name, const std::optional<std::size_t>& v) {
    if (!v) return;
    os << (first ? "" : ",") << name << "=" << *v;
    first = false;
  };
  put("k", k);
  put("j", j);
  put("h", h);
  put("g", g);
  put("r", r);
  os << ")";
  return os.str();
}

std::string ToString(QITestKind kind) {
  switch (kind) {
    case QITestKind::kGeneral:
      return "general";
    case QITestKind::kSensing:
      return "sensing";
    case QITestKind::kComm:
      return "comm";
    case QITestKind::kOracle:
      return "oracle";
  }
  return "unknown";
}

std::string ToString(DeltaMode mode) {
  return mode == DeltaMode::kNumeric ? "numeric" : "structural";
}

std::size_t QIReport::num_violated() const {
  return static_cast<std::size_t>(
      std::count_if(conditions.begin(), conditions.end(),
                    [](const QICondition& c) { return !c.holds; }));
}

std::vector<ConditionIndex> EnumerateConditions(std::size_t horizon) {
  std::vector<ConditionIndex> out;
  for (std::size_t k = 1; k < horizon; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      for (std::size_t h = j + 1; h <= k; ++h) {
        for (std::size_t g = 0; g + j + 1 <= h; ++g) out.push_back({k, j, h, g});
      }
    }
  }
  return out;
}

QIReport QiTestGeneral(const InformationStructure& info, const Plant& plant,
                       DeltaMode mode, double tol) {
  RequireMatchingPlant(info, plant);
  const std::size_t N = info.horizon();
  const auto deltas = DeltaSequence(plant, N > 1 ? N - 1 : 0, mode, tol);
  std::vector<QICondition> conditions;
  for (const ConditionIndex& idx : EnumerateConditions(N)) {
    QICondition c = MakeCondition(
        info.block(idx.k, idx.h) * deltas[idx.g] *
            info.block(idx.h - idx.g - 1, idx.j),
        info.block(idx.k, idx.j));
    c.k = idx.k;
    c.j = idx.j;
    c.h = idx.h;
    c.g = idx.g;
    conditions.push_back(std::move(c));
  }
  return Finish(std::move(conditions), mode, tol, QITestKind::kGeneral);
}

QIReport QiTestSensing(const BinaryMatrix& S, const Plant& plant,
                       DeltaMode mode, double tol) {
  plant.Validate();
  if (static_cast<Index>(S.rows()) != plant.m() ||
      static_cast<Index>(S.cols()) != plant.p()) {
    throw std::invalid_argument("QiTestSensing: S must be m x p");
  }
  std::vector<QICondition> conditions;
  for (Index g = 0; g < plant.n(); ++g) {
    QICondition c = MakeCondition(S * Delta(plant, g, tol, mode) * S, S);
    c.g = static_cast<std::size_t>(g);
    conditions.push_back(std::move(c));
  }
  return Finish(std::move(conditions), mode, tol, QITestKind::kSensing);
}

QIReport QiTestComm(const BinaryMatrix& S, const CommTopology& Z,
                    const Plant& plant, std::size_t horizon, DeltaMode mode,
                    double tol) {
  plant.Validate();
  if (static_cast<Index>(S.rows()) != plant.m() ||
      static_cast<Index>(S.cols()) != plant.p()) {
    throw std::invalid_argument("QiTestComm: S must be m x p");
  }
  if (Z.size() != S.rows()) {
    throw std::invalid_argument("QiTestComm: Z must be m x m");
  }
  const std::size_t diameter = Diameter(Z);
  const std::size_t n = static_cast<std::size_t>(plant.n());
  // Z^a S for a = 0..n+diameter.
  std::vector<BinaryMatrix> propagated;
  BinaryMatrix power = BinaryMatrix::Identity(Z.size());
  for (std::size_t a = 0; a <= n + diameter; ++a) {
    propagated.push_back(power * S);
    power = power * Z.matrix();
  }
  std::vector<QICondition> conditions;
  for (std::size_t g = 0; g < n; ++g) {
    const BinaryMatrix delta = Delta(plant, g, tol, mode);
    for (std::size_t r = 0; r <= diameter; ++r) {
      if (g + r + 2 > horizon) continue;
      QICondition c = MakeCondition(S * delta * propagated[r], propagated[g + r + 1]);
      c.g = g;
      c.r = r;
      conditions.push_back(std::move(c));
    }
  }
  return Finish(std::move(conditions), mode, tol, QITestKind::kComm);
}

BinaryMatrix BigDelta(const Plant& plant, std::size_t horizon, DeltaMode mode,
                      double tol) {
  plant.Validate();
  const std::size_t m = static_cast<std::size_t>(plant.m());
  const std::size_t p = static_cast<std::size_t>(plant.p());
  BinaryMatrix big(p * (horizon + 1), m * (horizon + 1));
  for (std::size_t g = 0; g < horizon; ++g) {
    const BinaryMatrix delta = Delta(plant, g, tol, mode);
    for (std::size_t l = 0; l + g + 1 <= horizon; ++l) {
      big = big.WithBlock((l + g + 1) * p, l * m, delta);
    }
  }
  return big;
}

std::map<BlockKey, BinaryMatrix> PhiBlocks(const InformationStructure& info,
                                           const Plant& plant, DeltaMode mode,
                                           double tol) {
  RequireMatchingPlant(info, plant);
  const std::size_t N = info.horizon();
  const std::size_t m = info.inputs();
  const std::size_t p = info.outputs();
  const auto deltas = DeltaSequence(plant, N > 1 ? N - 1 : 0, mode, tol);
  std::map<BlockKey, BinaryMatrix> out;
  for (std::size_t k = 1; k < N; ++k) {
    for (std::size_t j = 0; j < k; ++j) {
      BinaryMatrix phi(m, p);
      for (std::size_t h = j + 1; h <= k; ++h) {
        BinaryMatrix inner(p, p);
        for (std::size_t g = 0; g + j + 1 <= h; ++g) {
          inner = inner + deltas[g] * info.block(h - g - 1, j);
        }
        phi = phi + info.block(k, h) * inner;
      }
      out.emplace(BlockKey{k, j}, std::move(phi));
    }
  }
  return out;
}

OracleResult QiOracle(const InformationStructure& info, const Plant& plant,
                      std::size_t trials, std::uint64_t seed, double tol) {
  RequireMatchingPlant(info, plant);
  if (trials == 0) throw std::invalid_argument("QiOracle: trials must be >= 1");
  const LiftedSystem lifted = BuildLifted(plant, info.horizon());
  const MatrixXd& cb = lifted.input_to_output;
  const BinaryMatrix big = BigS(info);
  const MatrixXd mask = big.ToReal();
  // Pattern that a generic sample must realize.
  const BinaryMatrix predicted = big * StructOf(cb, tol) * big;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  auto sample = [&] {
    MatrixXd L = MatrixXd::NullaryExpr(mask.rows(), mask.cols(),
                                       [&]() { return unit(rng); });
    return MatrixXd(L.cwiseProduct(mask));
  };

  OracleResult result;
  constexpr int kMaxResamples = 16;
  for (std::size_t t = 0; t < trials; ++t) {
    MatrixXd L, Lp, phi;
    for (int attempt = 0; attempt < kMaxResamples; ++attempt) {
      L = sample();
      Lp = sample();
      phi = L * cb * Lp;
      bool degenerate = false;
      for (Index i = 0; i < phi.rows() && !degenerate; ++i) {
        for (Index j = 0; j < phi.cols(); ++j) {
          if (predicted(i, j) && std::abs(phi(i, j)) <= tol) {
            degenerate = true;
            break;
          }
        }
      }
      if (!degenerate) break;
    }
    result.trials_run = t + 1;
    const double gauge = tol * (1.0 + phi.cwiseAbs().maxCoeff());
    for (Index i = 0; i < phi.rows(); ++i) {
      for (Index j = 0; j < phi.cols(); ++j) {
        if (!big(i, j) && std::abs(phi(i, j)) > gauge) {
          result.consistent = false;
          result.counterexample =
              QICounterexample{L, Lp, static_cast<std::size_t>(i),
                               static_cast<std::size_t>(j), phi(i, j)};
          return result;
        }
      }
    }
  }
  return result;
}

std::optional<QICounterexample> ConstructCounterexample(
    const InformationStructure& info, const Plant& plant,
    const QICondition& condition, double tol) {
  RequireMatchingPlant(info, plant);
  if (condition.holds || !condition.k || !condition.j || !condition.h ||
      !condition.g) {
    return std::nullopt;
  }
  const std::size_t k = *condition.k, j = *condition.j, h = *condition.h,
                    g = *condition.g;
  if (h < g + 1 || h > k || j >= h || k >= info.horizon()) {
    throw std::invalid_argument("ConstructCounterexample: index out of range");
  }
  const std::size_t m = info.inputs();
  const std::size_t p = info.outputs();
  const std::size_t N = info.horizon();
  const std::size_t source = h - g - 1;

  MatrixXd response = plant.C;
  for (std::size_t i = 0; i < g; ++i) response = response * plant.A;
  response = response * plant.B;

  const BinaryMatrix& later = info.block(k, h);
  const BinaryMatrix& earlier = info.block(source, j);
  for (const auto& [a, b] : condition.violations) {
    for (std::size_t c = 0; c < p; ++c) {
      if (!later(a, c)) continue;
      for (std::size_t d = 0; d < m; ++d) {
        if (!earlier(d, b) || std::abs(response(c, d)) <= tol) continue;
        QICounterexample out;
        out.L = MatrixXd::Zero(m * (N + 1), p * (N + 1));
        out.L_prime = MatrixXd::Zero(m * (N + 1), p * (N + 1));
        out.L(k * m + a, h * p + c) = 1.0;
        out.L_prime(source * m + d, j * p + b) = 1.0;
        out.row = k * m + a;
        out.col = j * p + b;
        out.value = response(c, d);
        return out;
      }
    }
  }
  return std::nullopt;
}

}  // namespace dcs
