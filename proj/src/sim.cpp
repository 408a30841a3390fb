#include "dcs/sim.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dcs/qpsolve.hpp"

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

void RequireDisturbances(const std::vector<VectorXd>& w, std::size_t horizon,
                         Index n) {
  if (w.size() != horizon) {
    std::ostringstream msg;
    msg << "expected " << horizon << " disturbance vectors, got " << w.size();
    throw std::invalid_argument(msg.str());
  }
  for (const VectorXd& wk : w) {
    if (wk.size() != n) throw std::invalid_argument("disturbance vector has wrong size");
  }
}

std::size_t HorizonOf(Index rows, Index m) {
  if (m <= 0 || rows % m != 0 || rows / m < 2) {
    throw std::invalid_argument("controller size is not m(N+1) with N >= 1");
  }
  return static_cast<std::size_t>(rows / m - 1);
}

// Shared recursion; `input` computes u_k from the trajectory so far.
template <typename InputFn>
Trajectory Rollout(const Plant& plant, const VectorXd& x0,
                   const std::vector<VectorXd>& w, std::size_t horizon,
                   InputFn input) {
  plant.Validate();
  if (x0.size() != plant.n()) throw std::invalid_argument("x0 has wrong dimension");
  RequireDisturbances(w, horizon, plant.n());
  Trajectory out;
  out.disturbances = w;
  out.states.push_back(x0);
  for (std::size_t k = 0; k <= horizon; ++k) {
    const VectorXd wk = k < horizon ? w[k] : VectorXd::Zero(plant.n());
    out.outputs.push_back(plant.C * out.states[k] + plant.H * wk);
    if (k == horizon) break;
    out.inputs.push_back(input(k, out));
    out.states.push_back(plant.A * out.states[k] + plant.B * out.inputs[k] +
                         plant.D * wk);
  }
  return out;
}

void ForEachSubset(Index q, Index size,
                   const std::function<void(const std::vector<Index>&)>& fn) {
  std::vector<Index> idx(size);
  for (Index i = 0; i < size; ++i) idx[i] = i;
  if (size > q) return;
  while (true) {
    fn(idx);
    Index i = size - 1;
    while (i >= 0 && idx[i] == q - size + i) --i;
    if (i < 0) return;
    ++idx[i];
    for (Index j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
  }
}

// Bounding box of the polytope by one LP per coordinate and direction.
std::pair<VectorXd, VectorXd> BoundingBox(const MatrixXd& Aw, const VectorXd& bw) {
  const Index n = Aw.cols();
  VectorXd lo(n), hi(n);
  for (Index i = 0; i < n; ++i) {
    for (int sign : {1, -1}) {
      QuadraticProgram lp = QuadraticProgram::Empty(n);
      lp.q(i) = sign;
      lp.A_in = Aw;
      lp.b_in = bw;
      const QPSolution sol = Solve(lp);
      if (sol.status != SolveStatus::kOptimal) {
        throw std::runtime_error("could not bound the disturbance polytope");
      }
      (sign > 0 ? lo : hi)(i) = sol.primal(i);
    }
  }
  return {lo, hi};
}

}  // namespace

VectorXd Trajectory::StackedStates() const {
  const Index n = states.empty() ? 0 : states.front().size();
  VectorXd out(n * static_cast<Index>(states.size()));
  for (std::size_t k = 0; k < states.size(); ++k) {
    out.segment(static_cast<Index>(k) * n, n) = states[k];
  }
  return out;
}

VectorXd Trajectory::StackedInputs() const {
  const Index m = inputs.empty() ? 0 : inputs.front().size();
  VectorXd out = VectorXd::Zero(m * static_cast<Index>(inputs.size() + 1));
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    out.segment(static_cast<Index>(k) * m, m) = inputs[k];
  }
  return out;
}

VectorXd StackDisturbance(const std::vector<VectorXd>& w, Index n) {
  VectorXd out = VectorXd::Zero(n * static_cast<Index>(w.size() + 1));
  for (std::size_t k = 0; k < w.size(); ++k) {
    if (w[k].size() != n) throw std::invalid_argument("disturbance vector has wrong size");
    out.segment(static_cast<Index>(k) * n, n) = w[k];
  }
  return out;
}

Trajectory RolloutOutputFeedback(const Plant& plant,
                                 const OutputFeedbackController& controller,
                                 const VectorXd& x0, const std::vector<VectorXd>& w) {
  const Index m = plant.m();
  const Index p = plant.p();
  const std::size_t horizon = HorizonOf(controller.L.rows(), m);
  CheckCausalPattern(controller.L, controller.g, horizon, m, p);
  return Rollout(plant, x0, w, horizon, [&](std::size_t k, const Trajectory& tr) {
    const Index kk = static_cast<Index>(k);
    VectorXd u = controller.g.segment(kk * m, m);
    for (Index j = 0; j <= kk; ++j) {
      u += controller.L.block(kk * m, j * p, m, p) * tr.outputs[j];
    }
    return u;
  });
}

Trajectory RolloutDisturbanceFeedback(const Plant& plant,
                                      const DisturbanceFeedbackPolicy& policy,
                                      const LiftedSystem& lifted, const VectorXd& x0,
                                      const std::vector<VectorXd>& w) {
  const Index m = plant.m();
  CheckCausalPattern(policy.Q, policy.v, lifted.horizon, m, plant.p());
  RequireDisturbances(w, lifted.horizon, plant.n());
  const VectorXd u =
      policy.Q * (lifted.disturbance_to_output * StackDisturbance(w, plant.n())) +
      policy.v;
  return Rollout(plant, x0, w, lifted.horizon, [&](std::size_t k, const Trajectory&) {
    return VectorXd(u.segment(static_cast<Index>(k) * m, m));
  });
}

double ConstraintSlack(const ConstraintSpec& spec, const Trajectory& trajectory) {
  double slack = std::numeric_limits<double>::infinity();
  const std::size_t N = trajectory.horizon();
  if (spec.stage_rows() > 0) {
    for (std::size_t k = 0; k < N; ++k) {
      const VectorXd s =
          spec.b - spec.U * trajectory.states[k] - spec.V * trajectory.inputs[k];
      slack = std::min(slack, s.minCoeff());
    }
  }
  if (spec.terminal_rows() > 0) {
    slack = std::min(slack, (spec.z - spec.R * trajectory.states[N]).minCoeff());
  }
  return slack;
}

std::vector<VectorXd> EnumerateVertices(const MatrixXd& Aw, const VectorXd& bw,
                                        double tol) {
  const Index q = Aw.rows();
  const Index n = Aw.cols();
  if (bw.size() != q) throw std::invalid_argument("Aw/bw shape mismatch");
  if (q > 20) {
    throw std::runtime_error("vertex enumeration supports at most 20 polytope rows");
  }
  if (n == 0) return {VectorXd(0)};
  const double scale = 1.0 + (q ? bw.cwiseAbs().maxCoeff() : 0.0);
  std::vector<VectorXd> out;
  ForEachSubset(q, n, [&](const std::vector<Index>& rows) {
    MatrixXd sub(n, n);
    VectorXd rhs(n);
    for (Index i = 0; i < n; ++i) {
      sub.row(i) = Aw.row(rows[i]);
      rhs(i) = bw(rows[i]);
    }
    Eigen::FullPivLU<MatrixXd> lu(sub);
    if (lu.rank() < n) return;
    const VectorXd w = lu.solve(rhs);
    if (((Aw * w - bw).array() > tol * scale).any()) return;
    for (const VectorXd& seen : out) {
      if ((seen - w).cwiseAbs().maxCoeff() <= tol * scale) return;
    }
    out.push_back(w);
  });
  std::sort(out.begin(), out.end(), [](const VectorXd& a, const VectorXd& b) {
    return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(),
                                        b.data() + b.size());
  });
  return out;
}

std::string ToString(VerifyMethod method) {
  return method == VerifyMethod::kVertices ? "vertices" : "samples";
}

VerifyReport VerifyRobust(const Plant& plant, const OutputFeedbackController& controller,
                          const ConstraintSpec& spec, const VectorXd& x0,
                          const VerifyOptions& options) {
  const Index n = plant.n();
  spec.Validate(n, plant.m());
  const std::size_t horizon = HorizonOf(controller.L.rows(), plant.m());

  VerifyReport report;
  report.method = options.method;
  report.worst_slack = std::numeric_limits<double>::infinity();
  auto consider = [&](std::vector<VectorXd> w) {
    Trajectory tr = RolloutOutputFeedback(plant, controller, x0, w);
    const double slack = ConstraintSlack(spec, tr);
    ++report.realizations;
    if (slack < report.worst_slack || report.realizations == 1) {
      report.worst_slack = slack;
      report.worst_w = std::move(w);
      report.worst_trajectory = std::move(tr);
    }
  };

  if (options.method == VerifyMethod::kVertices) {
    const std::vector<VectorXd> vertices = EnumerateVertices(spec.Aw, spec.bw);
    if (vertices.empty()) throw std::runtime_error("disturbance polytope has no vertices");
    double combos = 1.0;
    for (std::size_t k = 0; k < horizon; ++k) combos *= static_cast<double>(vertices.size());
    if (combos > static_cast<double>(options.vertex_budget)) {
      std::ostringstream msg;
      msg << "vertex budget exceeded: " << vertices.size() << "^" << horizon
          << " combinations > " << options.vertex_budget;
      throw std::runtime_error(msg.str());
    }
    std::vector<std::size_t> digit(horizon, 0);
    while (true) {
      std::vector<VectorXd> w(horizon);
      for (std::size_t k = 0; k < horizon; ++k) w[k] = vertices[digit[k]];
      consider(std::move(w));
      std::size_t k = 0;
      while (k < horizon && ++digit[k] == vertices.size()) digit[k++] = 0;
      if (k == horizon) break;
    }
  } else {
    if (options.samples == 0) throw std::invalid_argument("sample count must be >= 1");
    const auto [lo, hi] = BoundingBox(spec.Aw, spec.bw);
    const double scale = 1.0 + spec.bw.cwiseAbs().maxCoeff();
    std::mt19937_64 rng(options.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    constexpr std::size_t kMaxRejections = 1000000;
    auto draw = [&]() {
      for (std::size_t attempt = 0; attempt < kMaxRejections; ++attempt) {
        VectorXd w(n);
        for (Index i = 0; i < n; ++i) w(i) = lo(i) + (hi(i) - lo(i)) * unit(rng);
        if (((spec.Aw * w - spec.bw).array() <= 1e-12 * scale).all()) return w;
      }
      throw std::runtime_error("rejection sampling of the disturbance polytope failed");
    };
    for (std::size_t s = 0; s < options.samples; ++s) {
      std::vector<VectorXd> w(horizon);
      for (std::size_t k = 0; k < horizon; ++k) w[k] = draw();
      consider(std::move(w));
    }
  }
  if (report.worst_slack < -options.violation_tol) report.violating_w = report.worst_w;
  return report;
}

}  // namespace dcs
