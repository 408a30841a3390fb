#include "dcs/qpsolve.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

double InfNorm(const VectorXd& v) {
  return v.size() == 0 ? 0.0 : v.lpNorm<Eigen::Infinity>();
}

struct Scales {
  double primal = 0.0;
  double dual = 0.0;
  double objective = 0.0;
};

Scales ProblemScales(const QuadraticProgram& qp, const VectorXd& x,
                     const VectorXd& y, const VectorXd& z) {
  Scales sc;
  sc.primal = std::max({InfNorm(qp.A_eq * x), InfNorm(qp.b_eq),
                        InfNorm(qp.A_in * x), InfNorm(qp.b_in)});
  sc.dual = std::max({InfNorm(qp.P * x), InfNorm(qp.q),
                      InfNorm(qp.A_eq.transpose() * y),
                      InfNorm(qp.A_in.transpose() * z)});
  sc.objective = std::abs(0.5 * x.dot(qp.P * x) + qp.q.dot(x));
  return sc;
}

bool Converged(const KktResiduals& r, const Scales& sc,
               const SolverSettings& st) {
  return r.primal <= st.eps_abs + st.eps_rel * sc.primal &&
         r.dual <= st.eps_abs + st.eps_rel * sc.dual &&
         r.gap <= st.eps_abs + st.eps_rel * sc.objective;
}

double Worst(const KktResiduals& r) {
  return std::max({r.primal, r.dual, r.gap});
}

// Regularized LU of a symmetric saddle-point matrix, with iterative
// refinement against the unregularized matrix.
class SaddleSolver {
 public:
  SaddleSolver(MatrixXd kkt, Index primal_size, double delta)
      : exact_(std::move(kkt)) {
    const Index total = exact_.rows();
    MatrixXd regularized = exact_;
    for (Index i = 0; i < total; ++i) {
      regularized(i, i) += i < primal_size ? delta : -delta;
    }
    lu_.compute(regularized);
  }

  VectorXd Solve(const VectorXd& rhs, int refinements = 3) const {
    VectorXd sol = lu_.solve(rhs);
    for (int r = 0; r < refinements; ++r) {
      VectorXd residual = rhs - exact_ * sol;
      if (!residual.allFinite()) break;
      sol += lu_.solve(residual);
    }
    return sol;
  }

 private:
  MatrixXd exact_;
  Eigen::PartialPivLU<MatrixXd> lu_;
};

// Static regularization from the problem data only, so it stays small
// relative to the barrier terms as they grow.
double RegularizationFor(const QuadraticProgram& qp) {
  double scale = 1.0;
  for (const MatrixXd* M : {&qp.P, &qp.A_eq, &qp.A_in}) {
    if (M->size() > 0) scale = std::max(scale, M->cwiseAbs().maxCoeff());
  }
  return 1e-10 * scale;
}

struct Iterate {
  VectorXd x, y, z, s;
  int iterations = 0;
  bool converged = false;
};

// Nonzero column indices per row of a dense matrix, used to accumulate
// G' W G without touching structural zeros.
std::vector<std::vector<Index>> RowSupports(const MatrixXd& G) {
  std::vector<std::vector<Index>> out(G.rows());
  for (Index i = 0; i < G.rows(); ++i) {
    for (Index j = 0; j < G.cols(); ++j) {
      if (G(i, j) != 0.0) out[i].push_back(j);
    }
  }
  return out;
}

void AddWeightedGram(const MatrixXd& G,
                     const std::vector<std::vector<Index>>& supports,
                     const VectorXd& w, MatrixXd& out) {
  for (Index i = 0; i < G.rows(); ++i) {
    const auto& sup = supports[i];
    for (Index a : sup) {
      const double ga = w(i) * G(i, a);
      for (Index b : sup) out(a, b) += ga * G(i, b);
    }
  }
}

double MaxStep(const VectorXd& v, const VectorXd& dv) {
  double alpha = 1.0;
  for (Index i = 0; i < v.size(); ++i) {
    if (dv(i) < 0.0) alpha = std::min(alpha, -v(i) / dv(i));
  }
  return alpha;
}

Iterate RunInteriorPoint(const QuadraticProgram& qp,
                         const SolverSettings& st) {
  const Index n = qp.num_variables();
  const Index me = qp.num_equalities();
  const Index mi = qp.num_inequalities();
  const MatrixXd& A = qp.A_eq;
  const MatrixXd& G = qp.A_in;
  const auto supports = RowSupports(G);
  const double delta = RegularizationFor(qp);

  auto build_kkt = [&](const VectorXd& w) {
    MatrixXd kkt = MatrixXd::Zero(n + me, n + me);
    kkt.topLeftCorner(n, n) = qp.P;
    AddWeightedGram(G, supports, w, kkt);
    kkt.topRightCorner(n, me) = A.transpose();
    kkt.bottomLeftCorner(me, n) = A;
    return kkt;
  };

  Iterate it;
  {
    SaddleSolver init(build_kkt(VectorXd::Ones(mi)), n, delta);
    VectorXd rhs(n + me);
    rhs << -qp.q + G.transpose() * qp.b_in, qp.b_eq;
    VectorXd sol = init.Solve(rhs);
    it.x = sol.head(n);
    it.y = sol.tail(me);
  }
  if (mi == 0) {
    it.z = VectorXd(0);
    it.s = VectorXd(0);
    it.iterations = 1;
    const KktResiduals r = ComputeKktResiduals(qp, it.x, it.y, it.z);
    it.converged = Converged(r, ProblemScales(qp, it.x, it.y, it.z), st);
    return it;
  }
  it.s = qp.b_in - G * it.x;
  it.z = -it.s;
  const double shift_s = -it.s.minCoeff();
  if (shift_s >= 0.0) it.s.array() += 1.0 + shift_s;
  const double shift_z = -it.z.minCoeff();
  if (shift_z >= 0.0) it.z.array() += 1.0 + shift_z;

  Iterate best = it;
  double best_merit = std::numeric_limits<double>::infinity();
  int last_improvement = 0;
  int tiny_steps = 0;

  for (int k = 0; k < st.max_iters; ++k) {
    it.iterations = k;
    const VectorXd rd =
        qp.P * it.x + qp.q + A.transpose() * it.y + G.transpose() * it.z;
    const VectorXd rp = A * it.x - qp.b_eq;
    const VectorXd ri = G * it.x + it.s - qp.b_in;
    const double mu = it.s.dot(it.z) / static_cast<double>(mi);

    const KktResiduals res = ComputeKktResiduals(qp, it.x, it.y, it.z);
    const Scales sc = ProblemScales(qp, it.x, it.y, it.z);
    const double merit =
        std::max({res.primal / (1.0 + sc.primal), res.dual / (1.0 + sc.dual),
                  res.gap / (1.0 + sc.objective), InfNorm(ri), mu});
    if (!std::isfinite(merit)) break;
    if (merit < best_merit) {
      if (merit < 0.9 * best_merit) last_improvement = k;
      best_merit = merit;
      best = it;
    }
    if (Converged(res, sc, st) && InfNorm(ri) <= st.eps_abs + st.eps_rel * sc.primal) {
      it.converged = true;
      return it;
    }
    if (k - last_improvement > 30 || tiny_steps >= 5) break;
    if (InfNorm(it.z) > 1e14 || InfNorm(it.x) > 1e14) break;

    const VectorXd w = it.z.cwiseQuotient(it.s);
    SaddleSolver kkt(build_kkt(w), n, delta);

    auto direction = [&](const VectorXd& rc, VectorXd& dx, VectorXd& dy,
                         VectorXd& dz, VectorXd& ds) {
      const VectorXd t = (rc + it.z.cwiseProduct(ri)).cwiseQuotient(it.s);
      VectorXd rhs(n + me);
      rhs << -rd - G.transpose() * t, -rp;
      const VectorXd sol = kkt.Solve(rhs, 2);
      dx = sol.head(n);
      dy = sol.tail(me);
      const VectorXd gdx = G * dx;
      dz = w.cwiseProduct(gdx) + t;
      ds = -ri - gdx;
    };

    VectorXd dx, dy, dz, ds;
    const VectorXd sz = it.s.cwiseProduct(it.z);
    direction(-sz, dx, dy, dz, ds);
    const double alpha_aff = std::min(MaxStep(it.s, ds), MaxStep(it.z, dz));
    const double mu_aff = (it.s + alpha_aff * ds).dot(it.z + alpha_aff * dz) /
                          static_cast<double>(mi);
    const double sigma = std::pow(std::clamp(mu_aff / mu, 0.0, 1.0), 3);

    const VectorXd rc = (-sz - ds.cwiseProduct(dz)).array() + sigma * mu;
    direction(rc, dx, dy, dz, ds);
    const double alpha =
        std::min(1.0, 0.99 * std::min(MaxStep(it.s, ds), MaxStep(it.z, dz)));
    tiny_steps = alpha < 1e-10 ? tiny_steps + 1 : 0;

    it.x += alpha * dx;
    it.y += alpha * dy;
    it.z += alpha * dz;
    it.s += alpha * ds;
  }
  best.iterations = it.iterations;
  best.converged = false;
  return best;
}

// Active-set KKT re-solve, seeded with the inequalities the interior-point
// iterate treats as active. Rows with negative multipliers are dropped and
// violated rows added until the guess is consistent or the pass budget runs
// out. Returns nullopt unless the result strictly improves on `base`.
std::optional<QPSolution> Polish(const QuadraticProgram& qp,
                                 const Iterate& ipm, const QPSolution& base,
                                 const SolverSettings& st) {
  const Index n = qp.num_variables();
  const Index me = qp.num_equalities();
  const Index mi = qp.num_inequalities();
  std::vector<bool> is_active(mi, false);
  for (Index i = 0; i < mi; ++i) is_active[i] = ipm.z(i) > ipm.s(i);

  constexpr int kMaxPasses = 10;
  for (int pass = 0; pass < kMaxPasses; ++pass) {
    std::vector<Index> active;
    for (Index i = 0; i < mi; ++i) {
      if (is_active[i]) active.push_back(i);
    }
    const Index na = static_cast<Index>(active.size());
    MatrixXd kkt = MatrixXd::Zero(n + me + na, n + me + na);
    kkt.topLeftCorner(n, n) = qp.P;
    kkt.block(0, n, n, me) = qp.A_eq.transpose();
    kkt.block(n, 0, me, n) = qp.A_eq;
    VectorXd rhs(n + me + na);
    rhs.head(n) = -qp.q;
    rhs.segment(n, me) = qp.b_eq;
    for (Index a = 0; a < na; ++a) {
      kkt.block(0, n + me + a, n, 1) = qp.A_in.row(active[a]).transpose();
      kkt.block(n + me + a, 0, 1, n) = qp.A_in.row(active[a]);
      rhs(n + me + a) = qp.b_in(active[a]);
    }
    SaddleSolver solver(kkt, n, RegularizationFor(qp));
    const VectorXd sol = solver.Solve(rhs, 5);
    if (!sol.allFinite()) return std::nullopt;

    QPSolution out = base;
    out.primal = sol.head(n);
    out.dual_eq = sol.segment(n, me);
    out.dual_in = VectorXd::Zero(mi);
    for (Index a = 0; a < na; ++a) out.dual_in(active[a]) = sol(n + me + a);

    bool changed = false;
    for (Index a = 0; a < na; ++a) {
      if (out.dual_in(active[a]) < -st.eps_abs) {
        is_active[active[a]] = false;
        changed = true;
      }
    }
    const VectorXd violation = qp.A_in * out.primal - qp.b_in;
    for (Index i = 0; i < mi; ++i) {
      if (!is_active[i] && violation(i) > st.eps_abs) {
        is_active[i] = true;
        changed = true;
      }
    }
    if (changed) continue;

    out.dual_in = out.dual_in.cwiseMax(0.0);
    out.residuals = ComputeKktResiduals(qp, out.primal, out.dual_eq, out.dual_in);
    if (Worst(out.residuals) > Worst(base.residuals)) return std::nullopt;
    out.objective = qp.Objective(out.primal);
    out.polished = true;
    return out;
  }
  return std::nullopt;
}

// Minimum total violation: min t + 1'(e+ + e-) subject to
// A x - e+ + e- = b, G x - t <= h, t, e+, e- >= 0. Always feasible.
QPSolution PhaseOne(const QuadraticProgram& qp, const SolverSettings& st) {
  const Index n = qp.num_variables();
  const Index me = qp.num_equalities();
  const Index mi = qp.num_inequalities();
  const Index nv = n + 1 + 2 * me;
  QuadraticProgram lp = QuadraticProgram::Empty(nv);
  lp.q.segment(n, 1 + 2 * me).setOnes();
  lp.A_eq = MatrixXd::Zero(me, nv);
  lp.A_eq.leftCols(n) = qp.A_eq;
  lp.A_eq.block(0, n + 1, me, me) = -MatrixXd::Identity(me, me);
  lp.A_eq.block(0, n + 1 + me, me, me) = MatrixXd::Identity(me, me);
  lp.b_eq = qp.b_eq;
  lp.A_in = MatrixXd::Zero(mi + 1 + 2 * me, nv);
  lp.A_in.topLeftCorner(mi, n) = qp.A_in;
  lp.A_in.block(0, n, mi, 1).setConstant(-1.0);
  lp.A_in.bottomRightCorner(1 + 2 * me, 1 + 2 * me) =
      -MatrixXd::Identity(1 + 2 * me, 1 + 2 * me);
  lp.b_in = VectorXd::Zero(mi + 1 + 2 * me);
  lp.b_in.head(mi) = qp.b_in;

  SolverSettings inner = st;
  inner.polish = false;
  const Iterate ipm = RunInteriorPoint(lp, inner);
  QPSolution out;
  out.primal = ipm.x;
  out.objective = lp.Objective(ipm.x);
  out.status = ipm.converged ? SolveStatus::kOptimal : SolveStatus::kMaxIterations;
  return out;
}

}  // namespace

std::string ToString(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal:
      return "optimal";
    case SolveStatus::kMaxIterations:
      return "max_iters";
    case SolveStatus::kInfeasible:
      return "infeasible";
  }
  return "unknown";
}

QuadraticProgram QuadraticProgram::Empty(Index n) {
  QuadraticProgram qp;
  qp.P = MatrixXd::Zero(n, n);
  qp.q = VectorXd::Zero(n);
  qp.A_eq = MatrixXd::Zero(0, n);
  qp.b_eq = VectorXd::Zero(0);
  qp.A_in = MatrixXd::Zero(0, n);
  qp.b_in = VectorXd::Zero(0);
  return qp;
}

void QuadraticProgram::Validate() const {
  const Index n = q.size();
  if (P.rows() != n || P.cols() != n) {
    throw std::invalid_argument("QuadraticProgram: P must be n x n");
  }
  if (A_eq.cols() != n || A_eq.rows() != b_eq.size()) {
    throw std::invalid_argument("QuadraticProgram: A_eq/b_eq shape mismatch");
  }
  if (A_in.cols() != n || A_in.rows() != b_in.size()) {
    throw std::invalid_argument("QuadraticProgram: A_in/b_in shape mismatch");
  }
  if (!P.allFinite() || !q.allFinite() || !A_eq.allFinite() ||
      !b_eq.allFinite() || !A_in.allFinite() || !b_in.allFinite()) {
    throw std::invalid_argument("QuadraticProgram: non-finite data");
  }
  const double p_scale = n == 0 ? 1.0 : std::max(1.0, P.cwiseAbs().maxCoeff());
  if (n > 0 && (P - P.transpose()).cwiseAbs().maxCoeff() > 1e-10 * p_scale) {
    throw std::invalid_argument("QuadraticProgram: P must be symmetric");
  }
}

double QuadraticProgram::Objective(const Eigen::Ref<const VectorXd>& x) const {
  return 0.5 * x.dot(P * x) + q.dot(x) + constant;
}

KktResiduals ComputeKktResiduals(const QuadraticProgram& qp,
                                 const Eigen::Ref<const VectorXd>& x,
                                 const Eigen::Ref<const VectorXd>& y,
                                 const Eigen::Ref<const VectorXd>& z) {
  if (x.size() != qp.num_variables() || y.size() != qp.num_equalities() ||
      z.size() != qp.num_inequalities()) {
    throw std::invalid_argument("ComputeKktResiduals: dimension mismatch");
  }
  KktResiduals r;
  const VectorXd eq = qp.A_eq * x - qp.b_eq;
  const VectorXd in = (qp.A_in * x - qp.b_in).cwiseMax(0.0);
  r.primal = std::max(InfNorm(eq), InfNorm(in));
  const VectorXd stat =
      qp.P * x + qp.q + qp.A_eq.transpose() * y + qp.A_in.transpose() * z;
  const double sign = z.size() == 0 ? 0.0 : std::max(0.0, -z.minCoeff());
  r.dual = std::max(InfNorm(stat), sign);
  r.gap = std::abs(x.dot(qp.P * x) + qp.q.dot(x) + qp.b_eq.dot(y) +
                   qp.b_in.dot(z));
  return r;
}

bool WithinTolerance(const QuadraticProgram& problem, const QPSolution& point,
                     const SolverSettings& settings) {
  const KktResiduals r = ComputeKktResiduals(problem, point.primal,
                                             point.dual_eq, point.dual_in);
  return Converged(r,
                   ProblemScales(problem, point.primal, point.dual_eq,
                                 point.dual_in),
                   settings);
}

QPSolution Solve(const QuadraticProgram& problem,
                 const SolverSettings& settings) {
  problem.Validate();
  if (settings.max_iters < 1 || !(settings.eps_abs >= 0.0) ||
      !(settings.eps_rel >= 0.0)) {
    throw std::invalid_argument("Solve: invalid solver settings");
  }
  const Iterate ipm = RunInteriorPoint(problem, settings);

  QPSolution out;
  out.primal = ipm.x;
  out.dual_eq = ipm.y;
  out.dual_in = ipm.z;
  out.iterations = ipm.iterations;
  out.residuals = ComputeKktResiduals(problem, ipm.x, ipm.y, ipm.z);
  out.objective = problem.Objective(ipm.x);
  out.status =
      ipm.converged ? SolveStatus::kOptimal : SolveStatus::kMaxIterations;

  if (ipm.converged) {
    if (settings.polish) {
      if (auto polished = Polish(problem, ipm, out, settings)) {
        out = std::move(*polished);
      }
    }
    return out;
  }

  const QPSolution phase_one = PhaseOne(problem, settings);
  const double threshold =
      10.0 * (settings.eps_abs +
              settings.eps_rel * std::max(InfNorm(problem.b_eq),
                                          InfNorm(problem.b_in)));
  if (phase_one.status == SolveStatus::kOptimal &&
      phase_one.objective > threshold) {
    out.status = SolveStatus::kInfeasible;
    const VectorXd x = phase_one.primal.head(problem.num_variables());
    const VectorXd in = problem.A_in * x - problem.b_in;
    const VectorXd eq = problem.A_eq * x - problem.b_eq;
    for (Index i = 0; i < in.size() && !out.first_violated_row; ++i) {
      if (in(i) > threshold) out.first_violated_row = i;
    }
    for (Index i = 0; i < eq.size() && !out.first_violated_row; ++i) {
      if (std::abs(eq(i)) > threshold) {
        out.first_violated_row = problem.num_inequalities() + i;
      }
    }
  }
  return out;
}

}  // namespace dcs
