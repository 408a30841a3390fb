// dcs: certify information structures and synthesize robust structured
// controllers from a JSON problem file.
//
// Exit codes
//   qi-check    0 QI, 2 not QI, 1 error
//   synthesize  0 ok, 2 not QI (without --force-restrict), 3 infeasible, 1 error
//   simulate    0 constraints hold, 2 violation found, 1 error
//   explain     0 ok, 1 error

#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "dcs/io.hpp"
#include "dcs/qi.hpp"
#include "dcs/robust.hpp"
#include "dcs/sim.hpp"

namespace {

using dcs::Json;

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitNegative = 2;
constexpr int kExitInfeasible = 3;

struct CommonArgs {
  std::string problem_file;
  std::string out;
  std::optional<double> tol;
  std::optional<std::string> delta_mode;
  std::optional<std::uint64_t> seed;
  bool no_timestamp = false;
};

struct SolverArgs {
  std::optional<double> eps_abs;
  std::optional<double> eps_rel;
  std::optional<int> max_iters;
};

void AddCommon(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("problem", args.problem_file, "Problem JSON file")->required();
  cmd->add_option("--out", args.out, "Write the JSON result here instead of stdout")
      ->envname("DCS_OUT");
  cmd->add_option("--tol", args.tol, "Threshold for structural zeros of C A^g B")
      ->envname("DCS_TOL");
  cmd->add_option("--delta-mode", args.delta_mode, "numeric or structural")
      ->envname("DCS_DELTA_MODE");
  cmd->add_option("--seed", args.seed, "Random seed")->envname("DCS_SEED");
  cmd->add_flag("--no-timestamp", args.no_timestamp, "Omit the generation time")
      ->envname("DCS_NO_TIMESTAMP");
}

void AddSolver(CLI::App* cmd, SolverArgs& args) {
  cmd->add_option("--eps-abs", args.eps_abs, "Absolute KKT tolerance")
      ->envname("DCS_SOLVER_EPS_ABS")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--eps-rel", args.eps_rel, "Relative KKT tolerance")
      ->envname("DCS_SOLVER_EPS_REL")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iters", args.max_iters, "Iteration cap")
      ->envname("DCS_SOLVER_MAX_ITERS")
      ->check(CLI::PositiveNumber);
}

double ResolveTol(const CommonArgs& args, const dcs::Problem& problem) {
  const double tol = args.tol.value_or(problem.options.tol.value_or(dcs::kDefaultStructTol));
  if (!(tol >= 0.0)) throw std::invalid_argument("tol must be nonnegative");
  return tol;
}

dcs::DeltaMode ResolveMode(const CommonArgs& args, const dcs::Problem& problem) {
  if (args.delta_mode) return dcs::ParseDeltaMode(*args.delta_mode);
  return problem.options.delta_mode.value_or(dcs::DeltaMode::kNumeric);
}

std::uint64_t ResolveSeed(const CommonArgs& args, const dcs::Problem& problem) {
  return args.seed.value_or(problem.options.seed.value_or(0));
}

dcs::SolverSettings ResolveSolver(const SolverArgs& args, const dcs::Problem& problem) {
  dcs::SolverSettings settings;
  settings.eps_abs = args.eps_abs.value_or(problem.options.eps_abs.value_or(settings.eps_abs));
  settings.eps_rel = args.eps_rel.value_or(problem.options.eps_rel.value_or(settings.eps_rel));
  settings.max_iters =
      args.max_iters.value_or(problem.options.max_iters.value_or(settings.max_iters));
  return settings;
}

std::string Timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::ostringstream os;
  os << std::put_time(&utc, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void Emit(Json doc, const CommonArgs& args) {
  if (!args.no_timestamp) doc["generated_at"] = Timestamp();
  const std::string text = doc.dump(2) + "\n";
  if (args.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(args.out, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + args.out);
  out << text;
}

dcs::DeltaMode Other(dcs::DeltaMode mode) {
  return mode == dcs::DeltaMode::kNumeric ? dcs::DeltaMode::kStructural
                                          : dcs::DeltaMode::kNumeric;
}

// ---------------------------------------------------------------- qi-check

struct QiArgs {
  CommonArgs common;
  std::string test = "auto";
  std::size_t trials = 1000;
};

dcs::QIReport RunQiTest(const std::string& kind, const dcs::Problem& problem,
                        dcs::DeltaMode mode, double tol) {
  const std::size_t n = static_cast<std::size_t>(problem.plant.n());
  if (kind == "sensing") {
    if (problem.info_kind != "constant") {
      throw std::invalid_argument("--test sensing needs a constant structure");
    }
    if (problem.horizon < n + 1) {
      throw std::invalid_argument("--test sensing needs N >= n + 1");
    }
    return dcs::QiTestSensing(*problem.sensing, problem.plant, mode, tol);
  }
  if (kind == "comm") {
    if (problem.info_kind != "comm") {
      throw std::invalid_argument("--test comm needs a comm structure");
    }
    return dcs::QiTestComm(*problem.sensing, *problem.topology, problem.plant,
                           problem.horizon, mode, tol);
  }
  return dcs::QiTestGeneral(problem.info, problem.plant, mode, tol);
}

std::string ResolveTestKind(const std::string& requested, const dcs::Problem& problem) {
  if (requested != "auto") return requested;
  const std::size_t n = static_cast<std::size_t>(problem.plant.n());
  if (problem.info_kind == "constant" && problem.horizon >= n + 1) return "sensing";
  if (problem.info_kind == "comm") return "comm";
  return "general";
}

int RunQiCheck(const QiArgs& args) {
  const dcs::Problem problem = dcs::LoadProblem(args.common.problem_file);
  const double tol = ResolveTol(args.common, problem);
  const dcs::DeltaMode mode = ResolveMode(args.common, problem);
  const std::string kind = ResolveTestKind(args.test, problem);

  Json doc;
  doc["problem"] = args.common.problem_file;
  bool qi = false;
  if (kind == "oracle") {
    const dcs::OracleResult oracle =
        dcs::QiOracle(problem.info, problem.plant, args.trials,
                      ResolveSeed(args.common, problem), tol);
    qi = oracle.consistent;
    doc["quadratically_invariant"] = qi;
    doc["test_kind"] = "oracle";
    doc["tol"] = tol;
    doc["trials_run"] = oracle.trials_run;
    if (oracle.counterexample) {
      doc["counterexample"] = {{"row", oracle.counterexample->row},
                               {"col", oracle.counterexample->col},
                               {"value", oracle.counterexample->value}};
    }
  } else {
    const dcs::QIReport report = RunQiTest(kind, problem, mode, tol);
    const dcs::QIReport other = RunQiTest(kind, problem, Other(mode), tol);
    qi = report.quadratically_invariant;
    doc.update(dcs::ToJson(report));
    const dcs::QIReport& structural =
        mode == dcs::DeltaMode::kStructural ? report : other;
    const dcs::QIReport& numeric = mode == dcs::DeltaMode::kNumeric ? report : other;
    doc["verdicts"] = {
        {"numeric", numeric.quadratically_invariant},
        {"structural", structural.quadratically_invariant},
        {"structural_is_sufficient_only", true},
        {"modes_agree",
         numeric.quadratically_invariant == structural.quadratically_invariant}};
    if (kind == "general" && !qi) {
      for (const dcs::QICondition& c : report.conditions) {
        if (c.holds) continue;
        if (auto cx = dcs::ConstructCounterexample(problem.info, problem.plant, c, tol)) {
          doc["counterexample"] = {{"condition", c.Label()},
                                   {"row", cx->row},
                                   {"col", cx->col},
                                   {"value", cx->value}};
          break;
        }
      }
    }
  }
  Emit(std::move(doc), args.common);
  return qi ? kExitOk : kExitNegative;
}

// -------------------------------------------------------------- synthesize

struct SynthArgs {
  CommonArgs common;
  SolverArgs solver;
  bool force_restrict = false;
  std::optional<double> q_tikhonov;
  std::string export_qp;
  bool no_polish = false;
};

int RunSynthesize(const SynthArgs& args) {
  const dcs::Problem problem = dcs::LoadProblem(args.common.problem_file);
  if (!problem.constraints) {
    throw dcs::SchemaError(args.common.problem_file + ":/constraints",
                           "synthesize needs a constraints section");
  }
  const double tol = ResolveTol(args.common, problem);
  const dcs::DeltaMode mode = ResolveMode(args.common, problem);
  const dcs::QIReport qi = dcs::QiTestGeneral(problem.info, problem.plant, mode, tol);
  if (!qi.quadratically_invariant && !args.force_restrict) {
    std::cerr << "information structure is not quadratically invariant ("
              << qi.num_violated() << " violated conditions); rerun with "
              << "--force-restrict to synthesize over the conservative restriction\n";
    return kExitNegative;
  }

  dcs::RobustOptions options;
  options.qi_tol = tol;
  options.qi_mode = mode;
  options.q_tikhonov = args.q_tikhonov.value_or(problem.options.q_tikhonov.value_or(0.0));
  const dcs::LiftedSystem lifted = dcs::BuildLifted(problem.plant, problem.horizon);
  const dcs::RobustProblem robust = dcs::Assemble(lifted, problem.info, *problem.constraints,
                                                  problem.cost, problem.x0, options);
  for (const std::string& w : robust.warnings) std::cerr << "warning: " << w << "\n";
  if (!args.export_qp.empty()) {
    std::ofstream out(args.export_qp, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + args.export_qp);
    out << dcs::QpToJson(robust.qp, robust.layout).dump() << "\n";
  }

  dcs::SolverSettings settings = ResolveSolver(args.solver, problem);
  settings.polish = !args.no_polish;
  const dcs::QPSolution solution = dcs::Solve(robust.qp, settings);

  Json doc;
  doc["problem"] = args.common.problem_file;
  doc["status"] = dcs::ToString(solution.status);
  doc["qi_certified"] = robust.qi_certified;
  doc["delta_mode"] = dcs::ToString(mode);
  doc["tol"] = tol;
  doc["iterations"] = solution.iterations;
  doc["residuals"] = dcs::ToJson(solution.residuals);
  doc["warnings"] = robust.warnings;

  if (solution.status == dcs::SolveStatus::kInfeasible) {
    if (solution.first_violated_row) {
      doc["first_violated"] = {{"row", *solution.first_violated_row},
                               {"description",
                                robust.DescribeRow(*solution.first_violated_row)}};
    }
    std::cerr << "robust synthesis problem is infeasible\n";
    Emit(std::move(doc), args.common);
    return kExitInfeasible;
  }
  if (solution.status != dcs::SolveStatus::kOptimal) {
    Emit(std::move(doc), args.common);
    std::cerr << "solver stopped without converging (" << dcs::ToString(solution.status)
              << ")\n";
    return kExitError;
  }

  const dcs::SynthesisResult result = dcs::Extract(solution, robust.layout);
  const dcs::OutputFeedbackController controller =
      dcs::QToL(result.policy, lifted, problem.x0);
  doc["objective"] = result.objective;
  doc["controller"] = dcs::ControllerToJson(controller, &result.policy, problem.horizon,
                                            problem.plant.m(), problem.plant.p());
  std::cerr << "optimal nominal cost " << std::setprecision(10) << result.objective
            << " (" << solution.iterations << " iterations, primal residual "
            << solution.residuals.primal << ")\n";
  Emit(std::move(doc), args.common);
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
  CommonArgs common;
  std::string controller_file;
  bool vertices = false;
  std::optional<std::size_t> samples;
  std::size_t vertex_budget = 4096;
};

int RunSimulate(const SimArgs& args) {
  const dcs::Problem problem = dcs::LoadProblem(args.common.problem_file);
  if (!problem.constraints) {
    throw dcs::SchemaError(args.common.problem_file + ":/constraints",
                           "simulate needs a constraints section");
  }
  Json controller_json =
      dcs::ParseJsonText(dcs::ReadFile(args.controller_file), args.controller_file);
  // Accept either a bare controller or a synthesize result document.
  if (controller_json.contains("controller")) {
    controller_json = Json(controller_json["controller"]);
  }
  const dcs::OutputFeedbackController controller = dcs::ControllerFromJson(
      controller_json, problem.horizon, problem.plant.m(), problem.plant.p());

  dcs::VerifyOptions options;
  options.vertex_budget = args.vertex_budget;
  if (args.samples) {
    options.method = dcs::VerifyMethod::kSamples;
    options.samples = *args.samples;
    options.seed = ResolveSeed(args.common, problem);
  }
  const dcs::VerifyReport report = dcs::VerifyRobust(problem.plant, controller,
                                                     *problem.constraints, problem.x0,
                                                     options);

  std::vector<Eigen::VectorXd> zero(problem.horizon,
                                    Eigen::VectorXd::Zero(problem.plant.n()));
  dcs::Trajectory nominal =
      dcs::RolloutOutputFeedback(problem.plant, controller, problem.x0, zero);
  nominal.nominal_cost = dcs::NominalCost(problem.cost, nominal.states, nominal.inputs);

  Json doc;
  doc["problem"] = args.common.problem_file;
  doc["report"] = dcs::ToJson(report);
  doc["nominal"] = dcs::ToJson(nominal);
  doc["worst_case"] = dcs::ToJson(report.worst_trajectory);
  Emit(std::move(doc), args.common);
  return report.violating_w ? kExitNegative : kExitOk;
}

// ----------------------------------------------------------------- explain

int RunExplain(const CommonArgs& args) {
  const dcs::Problem problem = dcs::LoadProblem(args.problem_file);
  const double tol = ResolveTol(args, problem);
  const dcs::DeltaMode mode = ResolveMode(args, problem);
  const dcs::QIReport report = dcs::QiTestGeneral(problem.info, problem.plant, mode, tol);
  std::ostringstream os;
  if (report.conditions.empty()) os << "no conditions\n";
  for (const dcs::QICondition& c : report.conditions) {
    const std::size_t k = *c.k, j = *c.j, h = *c.h, g = *c.g;
    os << "(" << k << "," << j << "," << h << "," << g << ") S_{" << k << "," << h
       << "} D_" << g << " S_{" << h - g - 1 << "," << j << "} <= S_{" << k << "," << j
       << "}: controllers at time " << k << " that know y_" << h
       << " must know the time-" << j << " outputs used at time " << h - g - 1
       << ", which reach y_" << h << " through C A^" << g << " B";
    if (c.holds) {
      os << " [holds]";
    } else {
      os << " [violated at";
      for (const auto& [a, b] : c.violations) os << " (" << a << "," << b << ")";
      os << "]";
    }
    os << "\n";
  }
  if (args.out.empty()) {
    std::cout << os.str();
  } else {
    std::ofstream out(args.out);
    if (!out) throw std::runtime_error("cannot write " + args.out);
    out << os.str();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Quadratic-invariance certification and robust structured synthesis"};
  app.require_subcommand(1);

  QiArgs qi_args;
  CLI::App* qi = app.add_subcommand("qi-check", "Certify quadratic invariance");
  AddCommon(qi, qi_args.common);
  qi->add_option("--test", qi_args.test, "auto, general, sensing, comm or oracle")
      ->check(CLI::IsMember({"auto", "general", "sensing", "comm", "oracle"}));
  qi->add_option("--trials", qi_args.trials, "Oracle trials")->check(CLI::PositiveNumber);

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synthesize", "Solve the robust synthesis problem");
  AddCommon(synth, synth_args.common);
  AddSolver(synth, synth_args.solver);
  synth->add_flag("--force-restrict", synth_args.force_restrict,
                  "Synthesize over Sparse(S) even if it is not quadratically invariant");
  synth->add_option("--q-tikhonov", synth_args.q_tikhonov,
                    "Penalty weight on Q entries (e.g. 1e-8)")
      ->envname("DCS_Q_TIKHONOV")
      ->check(CLI::NonNegativeNumber);
  synth->add_option("--export-qp", synth_args.export_qp,
                    "Write the assembled QP as sparse triplet JSON");
  synth->add_flag("--no-polish", synth_args.no_polish, "Skip the active-set polish step");

  SimArgs sim_args;
  CLI::App* sim = app.add_subcommand("simulate", "Verify a controller against W");
  AddCommon(sim, sim_args.common);
  sim->add_option("--controller", sim_args.controller_file, "Controller JSON")
      ->required();
  CLI::Option* vert = sim->add_flag("--vertices", sim_args.vertices,
                                    "Enumerate polytope vertices (default)");
  CLI::Option* samp =
      sim->add_option("--samples", sim_args.samples, "Sample K disturbance sequences")
          ->check(CLI::PositiveNumber);
  vert->excludes(samp);
  sim->add_option("--vertex-budget", sim_args.vertex_budget,
                  "Maximum stacked vertex combinations");

  CommonArgs explain_args;
  CLI::App* explain = app.add_subcommand("explain", "List the QI conditions");
  AddCommon(explain, explain_args);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitError;
  }

  try {
    if (*qi) return RunQiCheck(qi_args);
    if (*synth) return RunSynthesize(synth_args);
    if (*sim) return RunSimulate(sim_args);
    if (*explain) return RunExplain(explain_args);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
