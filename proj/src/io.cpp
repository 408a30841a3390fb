#include "dcs/io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace dcs {
namespace {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

std::string Child(const std::string& path, const std::string& key) {
  return path + "/" + key;
}
std::string Child(const std::string& path, std::size_t index) {
  return path + "/" + std::to_string(index);
}

const Json& Require(const Json& obj, const std::string& key, const std::string& path) {
  if (!obj.is_object()) throw SchemaError(path, "expected an object");
  auto it = obj.find(key);
  if (it == obj.end()) throw SchemaError(Child(path, key), "missing required field");
  return *it;
}

const Json* Find(const Json& obj, const std::string& key) {
  auto it = obj.find(key);
  return it == obj.end() ? nullptr : &*it;
}

double NumberFromJson(const Json& j, const std::string& path) {
  if (!j.is_number()) throw SchemaError(path, "expected a number");
  const double x = j.get<double>();
  if (!std::isfinite(x)) throw SchemaError(path, "expected a finite number");
  return x;
}

std::size_t CountFromJson(const Json& j, const std::string& path) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw SchemaError(path, "expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

Delay DelayFromJson(const Json& j, const std::string& path) {
  if (j.is_string()) {
    if (j.get<std::string>() == "inf") return kNeverDelivered;
    throw SchemaError(path, "expected a nonnegative integer or \"inf\"");
  }
  return CountFromJson(j, path);
}

DelayMatrix DelaysFromJson(const Json& j, const std::string& path, std::size_t m,
                           std::size_t p) {
  if (!j.is_array() || j.size() != m) {
    throw SchemaError(path, "expected " + std::to_string(m) + " rows of delays");
  }
  DelayMatrix out(m);
  for (std::size_t a = 0; a < m; ++a) {
    const Json& row = j[a];
    const std::string rp = Child(path, a);
    if (!row.is_array() || row.size() != p) {
      throw SchemaError(rp, "expected " + std::to_string(p) + " delays");
    }
    for (std::size_t b = 0; b < p; ++b) out[a].push_back(DelayFromJson(row[b], Child(rp, b)));
  }
  return out;
}

void RequireShape(const MatrixXd& M, Index rows, Index cols, const std::string& path) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream msg;
    msg << "expected a " << rows << "x" << cols << " matrix, got " << M.rows() << "x"
        << M.cols();
    throw SchemaError(path, msg.str());
  }
}

void RequireSize(const VectorXd& v, Index size, const std::string& path) {
  if (v.size() != size) {
    throw SchemaError(path, "expected a vector of length " + std::to_string(size) +
                                ", got " + std::to_string(v.size()));
  }
}

// One matrix or a list of `count` matrices.
std::vector<MatrixXd> WeightsFromJson(const Json& j, const std::string& path,
                                      std::size_t count, Index dim) {
  const bool is_list = j.is_array() && !j.empty() && j[0].is_array() &&
                       !j[0].empty() && j[0][0].is_array();
  std::vector<MatrixXd> out;
  if (!is_list) {
    const MatrixXd W = MatrixFromJson(j, path, dim);
    RequireShape(W, dim, dim, path);
    out.assign(count, W);
    return out;
  }
  if (j.size() != count) {
    throw SchemaError(path, "expected " + std::to_string(count) + " weight matrices");
  }
  for (std::size_t k = 0; k < count; ++k) {
    out.push_back(MatrixFromJson(j[k], Child(path, k), dim));
    RequireShape(out.back(), dim, dim, Child(path, k));
  }
  return out;
}

Plant PlantFromJson(const Json& j, const std::string& path) {
  Plant plant;
  plant.A = MatrixFromJson(Require(j, "A", path), Child(path, "A"));
  const Index n = plant.A.rows();
  RequireShape(plant.A, n, n, Child(path, "A"));
  plant.B = MatrixFromJson(Require(j, "B", path), Child(path, "B"));
  if (plant.B.rows() != n) {
    throw SchemaError(Child(path, "B"), "expected " + std::to_string(n) + " rows");
  }
  plant.C = MatrixFromJson(Require(j, "C", path), Child(path, "C"), n);
  if (plant.C.cols() != n) {
    throw SchemaError(Child(path, "C"), "expected " + std::to_string(n) + " columns");
  }
  const Index p = plant.C.rows();
  if (const Json* D = Find(j, "D")) {
    plant.D = MatrixFromJson(*D, Child(path, "D"), n);
    RequireShape(plant.D, n, n, Child(path, "D"));
  } else {
    plant.D = MatrixXd::Identity(n, n);
  }
  if (const Json* H = Find(j, "H")) {
    plant.H = MatrixFromJson(*H, Child(path, "H"), n);
    RequireShape(plant.H, p, n, Child(path, "H"));
  } else {
    plant.H = MatrixXd::Zero(p, n);
  }
  return plant;
}

struct ParsedInfo {
  std::optional<InformationStructure> info;
  std::string kind;
  std::optional<BinaryMatrix> sensing;
  std::optional<CommTopology> topology;
};

BinaryMatrix SensingFromJson(const Json& j, const std::string& path, std::size_t m,
                             std::size_t p) {
  BinaryMatrix S = BinaryFromJson(j, path);
  if (S.rows() != m || S.cols() != p) {
    throw SchemaError(path, "expected a " + std::to_string(m) + "x" +
                                std::to_string(p) + " binary matrix");
  }
  return S;
}

ParsedInfo InfoFromJson(const Json& j, const std::string& path, std::size_t horizon,
                        std::size_t m, std::size_t p) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  for (const auto& [key, expected] :
       {std::pair<const char*, std::size_t>{"N", horizon}, {"m", m}, {"p", p}}) {
    if (const Json* v = Find(j, key)) {
      if (CountFromJson(*v, Child(path, key)) != expected) {
        throw SchemaError(Child(path, key),
                          "does not match the plant/horizon (" +
                              std::to_string(expected) + ")");
      }
    }
  }
  const Json& kind_json = Require(j, "kind", path);
  if (!kind_json.is_string()) throw SchemaError(Child(path, "kind"), "expected a string");
  ParsedInfo out;
  out.kind = kind_json.get<std::string>();
  try {
    if (out.kind == "constant") {
      out.sensing = SensingFromJson(Require(j, "S", path), Child(path, "S"), m, p);
      out.info = ConstantStructure(*out.sensing, horizon);
    } else if (out.kind == "fixed_delay") {
      out.info = FixedDelayStructure(
          DelaysFromJson(Require(j, "delays", path), Child(path, "delays"), m, p),
          horizon);
    } else if (out.kind == "time_varying_delay") {
      const Json& list = Require(j, "delays", path);
      const std::string lp = Child(path, "delays");
      if (!list.is_array() || list.size() != horizon) {
        throw SchemaError(lp, "expected one delay matrix per step (" +
                                  std::to_string(horizon) + ")");
      }
      std::vector<DelayMatrix> per_step;
      for (std::size_t k = 0; k < horizon; ++k) {
        per_step.push_back(DelaysFromJson(list[k], Child(lp, k), m, p));
      }
      out.info = TimeVaryingDelayStructure(
          [&](std::size_t k, std::size_t a, std::size_t b) { return per_step[k][a][b]; },
          m, p, horizon);
    } else if (out.kind == "comm") {
      out.sensing = SensingFromJson(Require(j, "S", path), Child(path, "S"), m, p);
      const std::string zp = Child(path, "Z");
      BinaryMatrix Z = SensingFromJson(Require(j, "Z", path), zp, m, m);
      try {
        out.topology.emplace(std::move(Z));
      } catch (const std::invalid_argument& e) {
        throw SchemaError(zp, e.what());
      }
      out.info = CommPropagationStructure(*out.sensing, *out.topology, horizon);
    } else if (out.kind == "custom") {
      const Json& blocks = Require(j, "blocks", path);
      const std::string bp = Child(path, "blocks");
      if (!blocks.is_object()) throw SchemaError(bp, "expected an object keyed \"k,j\"");
      std::map<BlockKey, BinaryMatrix> parsed;
      for (const auto& [key, value] : blocks.items()) {
        std::size_t k = 0, jj = 0;
        char comma = 0;
        std::istringstream is(key);
        if (!(is >> k >> comma >> jj) || comma != ',' || !is.eof()) {
          throw SchemaError(Child(bp, key), "block key must look like \"k,j\"");
        }
        parsed.emplace(BlockKey{k, jj}, BinaryFromJson(value, Child(bp, key)));
      }
      out.info = CustomStructure(parsed, horizon, m, p);
    } else {
      throw SchemaError(Child(path, "kind"), "unknown kind \"" + out.kind + "\"");
    }
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
  return out;
}

ConstraintSpec ConstraintsFromJson(const Json& j, const std::string& path, Index n,
                                   Index m) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  ConstraintSpec spec;
  auto vec = [&](const char* key, bool required) {
    const Json* v = Find(j, key);
    if (!v) {
      if (required) throw SchemaError(Child(path, key), "missing required field");
      return VectorXd(0);
    }
    return VectorFromJson(*v, Child(path, key));
  };
  auto mat = [&](const char* key, Index rows, Index cols) {
    const Json* v = Find(j, key);
    if (!v) {
      if (rows == 0) return MatrixXd(0, cols);
      throw SchemaError(Child(path, key), "missing required field");
    }
    MatrixXd M = MatrixFromJson(*v, Child(path, key), cols);
    RequireShape(M, rows, cols, Child(path, key));
    return M;
  };
  spec.b = vec("b", false);
  spec.U = mat("U", spec.b.size(), n);
  spec.V = mat("V", spec.b.size(), m);
  spec.z = vec("z", false);
  spec.R = mat("R", spec.z.size(), n);
  spec.bw = vec("bw", true);
  spec.Aw = mat("Aw", spec.bw.size(), n);
  try {
    spec.Validate(n, m);
    ValidateDisturbanceSet(spec.Aw, spec.bw);
  } catch (const std::invalid_argument& e) {
    throw SchemaError(path, e.what());
  }
  return spec;
}

ProblemOptions OptionsFromJson(const Json& j, const std::string& path) {
  if (!j.is_object()) throw SchemaError(path, "expected an object");
  ProblemOptions out;
  for (const auto& [key, value] : j.items()) {
    const std::string kp = Child(path, key);
    if (key == "tol") {
      out.tol = NumberFromJson(value, kp);
    } else if (key == "delta_mode") {
      if (!value.is_string()) throw SchemaError(kp, "expected a string");
      try {
        out.delta_mode = ParseDeltaMode(value.get<std::string>());
      } catch (const std::invalid_argument& e) {
        throw SchemaError(kp, e.what());
      }
    } else if (key == "eps_abs") {
      out.eps_abs = NumberFromJson(value, kp);
    } else if (key == "eps_rel") {
      out.eps_rel = NumberFromJson(value, kp);
    } else if (key == "max_iters") {
      out.max_iters = static_cast<int>(CountFromJson(value, kp));
    } else if (key == "seed") {
      out.seed = static_cast<std::uint64_t>(CountFromJson(value, kp));
    } else if (key == "q_tikhonov") {
      out.q_tikhonov = NumberFromJson(value, kp);
    } else {
      throw SchemaError(kp, "unknown option");
    }
  }
  return out;
}

Json BlocksToJson(const MatrixXd& M, std::size_t horizon, Index m, Index p) {
  Json out = Json::object();
  for (std::size_t k = 0; k < horizon; ++k) {
    for (std::size_t j = 0; j <= k; ++j) {
      out[std::to_string(k) + "," + std::to_string(j)] = ToJson(
          MatrixXd(M.block(static_cast<Index>(k) * m, static_cast<Index>(j) * p, m, p)));
    }
  }
  return out;
}

Json StepsToJson(const VectorXd& v, std::size_t horizon, Index m) {
  Json out = Json::array();
  for (std::size_t k = 0; k < horizon; ++k) {
    out.push_back(ToJson(VectorXd(v.segment(static_cast<Index>(k) * m, m))));
  }
  return out;
}

Json SequenceToJson(const std::vector<VectorXd>& seq) {
  Json out = Json::array();
  for (const VectorXd& v : seq) out.push_back(ToJson(v));
  return out;
}

// Sparse triplets of a dense matrix.
Json Triplets(const MatrixXd& M) {
  Json rows = Json::array(), cols = Json::array(), vals = Json::array();
  for (Index j = 0; j < M.cols(); ++j) {
    for (Index i = 0; i < M.rows(); ++i) {
      if (M(i, j) == 0.0) continue;
      rows.push_back(i);
      cols.push_back(j);
      vals.push_back(M(i, j));
    }
  }
  Json out;
  out["shape"] = {M.rows(), M.cols()};
  out["rows"] = std::move(rows);
  out["cols"] = std::move(cols);
  out["values"] = std::move(vals);
  return out;
}

}  // namespace

std::string ReadFile(const std::string& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + file);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Json ParseJsonText(const std::string& text, const std::string& source) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& e) {
    std::size_t line = 1, column = 1;
    const std::size_t end = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, text.size());
    for (std::size_t i = 0; i < end; ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw SchemaError(source + ":" + std::to_string(line) + ":" + std::to_string(column),
                      "invalid JSON");
  }
}

DeltaMode ParseDeltaMode(const std::string& name) {
  if (name == "numeric") return DeltaMode::kNumeric;
  if (name == "structural") return DeltaMode::kStructural;
  throw std::invalid_argument("delta mode must be \"numeric\" or \"structural\"");
}

Problem ParseProblem(const std::string& text, const std::string& source) {
  const Json root = ParseJsonText(text, source);
  const std::string path = source + ":";
  if (!root.is_object()) throw SchemaError(path + "/", "expected an object");

  Plant plant = PlantFromJson(Require(root, "plant", path), Child(path, "plant"));
  try {
    plant.Validate();
  } catch (const std::invalid_argument& e) {
    throw SchemaError(Child(path, "plant"), e.what());
  }
  const Index n = plant.n(), m = plant.m(), p = plant.p();
  const std::size_t horizon = CountFromJson(Require(root, "N", path), Child(path, "N"));
  if (horizon == 0) throw SchemaError(Child(path, "N"), "horizon must be >= 1");

  VectorXd x0 = VectorXd::Zero(n);
  if (const Json* j = Find(root, "x0")) {
    x0 = VectorFromJson(*j, Child(path, "x0"));
    RequireSize(x0, n, Child(path, "x0"));
  }

  ParsedInfo parsed = InfoFromJson(Require(root, "info", path), Child(path, "info"),
                                   horizon, static_cast<std::size_t>(m),
                                   static_cast<std::size_t>(p));

  std::optional<ConstraintSpec> constraints;
  if (const Json* j = Find(root, "constraints")) {
    constraints = ConstraintsFromJson(*j, Child(path, "constraints"), n, m);
  }

  CostSpec cost = CostSpec::Uniform(MatrixXd::Identity(n, n), MatrixXd::Identity(m, m),
                                    horizon);
  if (const Json* j = Find(root, "cost")) {
    const std::string cp = Child(path, "cost");
    if (!j->is_object()) throw SchemaError(cp, "expected an object");
    if (const Json* w = Find(*j, "Qx")) {
      cost.Qx = WeightsFromJson(*w, Child(cp, "Qx"), horizon + 1, n);
    }
    if (const Json* w = Find(*j, "Ru")) {
      cost.Ru = WeightsFromJson(*w, Child(cp, "Ru"), horizon, m);
    }
    try {
      cost.Validate(n, m, horizon);
    } catch (const std::invalid_argument& e) {
      throw SchemaError(cp, e.what());
    }
  }

  ProblemOptions options;
  if (const Json* j = Find(root, "options")) {
    options = OptionsFromJson(*j, Child(path, "options"));
  }

  for (const auto& [key, value] : root.items()) {
    static const char* kKnown[] = {"plant", "N", "x0", "info", "constraints",
                                   "cost", "options", "description"};
    if (std::find(std::begin(kKnown), std::end(kKnown), key) == std::end(kKnown)) {
      throw SchemaError(Child(path, key), "unknown field");
    }
  }

  return Problem{std::move(plant),       horizon,
                 std::move(x0),          std::move(*parsed.info),
                 std::move(parsed.kind), std::move(parsed.sensing),
                 std::move(parsed.topology), std::move(constraints),
                 std::move(cost),        options};
}

Problem LoadProblem(const std::string& file) { return ParseProblem(ReadFile(file), file); }

Json ToJson(const BinaryMatrix& X) {
  Json out = Json::array();
  for (std::size_t i = 0; i < X.rows(); ++i) {
    Json row = Json::array();
    for (std::size_t j = 0; j < X.cols(); ++j) row.push_back(X(i, j) ? 1 : 0);
    out.push_back(std::move(row));
  }
  return out;
}

Json ToJson(const MatrixXd& M) {
  Json out = Json::array();
  for (Index i = 0; i < M.rows(); ++i) {
    Json row = Json::array();
    for (Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    out.push_back(std::move(row));
  }
  return out;
}

Json ToJson(const VectorXd& v) {
  Json out = Json::array();
  for (Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

BinaryMatrix BinaryFromJson(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of 0/1 rows");
  std::vector<std::vector<int>> rows;
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Json& row = j[i];
    if (!row.is_array()) throw SchemaError(Child(path, i), "expected an array of 0/1");
    std::vector<int> r;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (!row[c].is_number_integer() ||
          (row[c].get<long long>() != 0 && row[c].get<long long>() != 1)) {
        throw SchemaError(Child(Child(path, i), c), "expected 0 or 1");
      }
      r.push_back(row[c].get<int>());
    }
    if (!rows.empty() && r.size() != rows.front().size()) {
      throw SchemaError(Child(path, i), "row length differs from row 0");
    }
    rows.push_back(std::move(r));
  }
  return BinaryMatrix(rows);
}

MatrixXd MatrixFromJson(const Json& j, const std::string& path, Index empty_cols) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of rows");
  if (j.empty()) return MatrixXd(0, empty_cols);
  if (!j[0].is_array()) throw SchemaError(Child(path, 0), "expected an array of numbers");
  const Index rows = static_cast<Index>(j.size());
  const Index cols = static_cast<Index>(j[0].size());
  MatrixXd M(rows, cols);
  for (Index i = 0; i < rows; ++i) {
    const Json& row = j[static_cast<std::size_t>(i)];
    const std::string rp = Child(path, static_cast<std::size_t>(i));
    if (!row.is_array()) throw SchemaError(rp, "expected an array of numbers");
    if (static_cast<Index>(row.size()) != cols) {
      throw SchemaError(rp, "row length differs from row 0");
    }
    for (Index c = 0; c < cols; ++c) {
      M(i, c) = NumberFromJson(row[static_cast<std::size_t>(c)],
                               Child(rp, static_cast<std::size_t>(c)));
    }
  }
  return M;
}

VectorXd VectorFromJson(const Json& j, const std::string& path) {
  if (!j.is_array()) throw SchemaError(path, "expected an array of numbers");
  VectorXd v(static_cast<Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    v(static_cast<Index>(i)) = NumberFromJson(j[i], Child(path, i));
  }
  return v;
}

Json ToJson(const QICondition& c) {
  Json out;
  for (const auto& [name, value] : {std::pair<const char*, const std::optional<std::size_t>*>{
                                        "k", &c.k},
                                    {"j", &c.j},
                                    {"h", &c.h},
                                    {"g", &c.g},
                                    {"r", &c.r}}) {
    if (*value) out[name] = **value;
  }
  out["holds"] = c.holds;
  out["lhs"] = ToJson(c.lhs);
  out["rhs"] = ToJson(c.rhs);
  Json violations = Json::array();
  for (const auto& [i, j] : c.violations) violations.push_back({i, j});
  out["violations"] = std::move(violations);
  return out;
}

Json ToJson(const QIReport& report) {
  Json out;
  out["quadratically_invariant"] = report.quadratically_invariant;
  out["test_kind"] = ToString(report.test_kind);
  out["delta_mode"] = ToString(report.mode);
  out["tol"] = report.tol;
  out["num_conditions"] = report.conditions.size();
  out["num_violated"] = report.num_violated();
  Json conditions = Json::array();
  for (const QICondition& c : report.conditions) conditions.push_back(ToJson(c));
  out["conditions"] = std::move(conditions);
  return out;
}

Json ControllerToJson(const OutputFeedbackController& controller,
                      const DisturbanceFeedbackPolicy* policy, std::size_t horizon,
                      Index m, Index p) {
  CheckCausalPattern(controller.L, controller.g, horizon, m, p);
  Json out;
  out["N"] = horizon;
  out["m"] = m;
  out["p"] = p;
  out["L"] = BlocksToJson(controller.L, horizon, m, p);
  out["g"] = StepsToJson(controller.g, horizon, m);
  if (policy) {
    CheckCausalPattern(policy->Q, policy->v, horizon, m, p);
    out["Q"] = BlocksToJson(policy->Q, horizon, m, p);
    out["v"] = StepsToJson(policy->v, horizon, m);
  }
  return out;
}

OutputFeedbackController ControllerFromJson(const Json& j, std::size_t horizon, Index m,
                                            Index p) {
  const std::string path = "controller:";
  if (!j.is_object()) throw SchemaError(path + "/", "expected an object");
  for (const auto& [key, expected] :
       {std::pair<const char*, std::size_t>{"N", horizon},
        {"m", static_cast<std::size_t>(m)},
        {"p", static_cast<std::size_t>(p)}}) {
    if (CountFromJson(Require(j, key, path), Child(path, key)) != expected) {
      throw SchemaError(Child(path, key), "does not match the problem (" +
                                              std::to_string(expected) + ")");
    }
  }
  const Index T = static_cast<Index>(horizon) + 1;
  OutputFeedbackController out;
  out.L = MatrixXd::Zero(m * T, p * T);
  out.g = VectorXd::Zero(m * T);
  const Json& blocks = Require(j, "L", path);
  const std::string lp = Child(path, "L");
  if (!blocks.is_object()) throw SchemaError(lp, "expected an object keyed \"k,j\"");
  for (const auto& [key, value] : blocks.items()) {
    std::size_t k = 0, jj = 0;
    char comma = 0;
    std::istringstream is(key);
    if (!(is >> k >> comma >> jj) || comma != ',' || !is.eof() || jj > k ||
        k >= horizon) {
      throw SchemaError(Child(lp, key), "expected a causal key \"k,j\" with j <= k < N");
    }
    const MatrixXd block = MatrixFromJson(value, Child(lp, key), p);
    RequireShape(block, m, p, Child(lp, key));
    out.L.block(static_cast<Index>(k) * m, static_cast<Index>(jj) * p, m, p) = block;
  }
  const Json& g = Require(j, "g", path);
  const std::string gp = Child(path, "g");
  if (!g.is_array() || g.size() != horizon) {
    throw SchemaError(gp, "expected " + std::to_string(horizon) + " offset vectors");
  }
  for (std::size_t k = 0; k < horizon; ++k) {
    const VectorXd gk = VectorFromJson(g[k], Child(gp, k));
    RequireSize(gk, m, Child(gp, k));
    out.g.segment(static_cast<Index>(k) * m, m) = gk;
  }
  return out;
}

Json ToJson(const Trajectory& trajectory) {
  Json out;
  out["states"] = SequenceToJson(trajectory.states);
  out["inputs"] = SequenceToJson(trajectory.inputs);
  out["outputs"] = SequenceToJson(trajectory.outputs);
  out["disturbances"] = SequenceToJson(trajectory.disturbances);
  if (trajectory.nominal_cost) out["nominal_cost"] = *trajectory.nominal_cost;
  return out;
}

Json ToJson(const VerifyReport& report) {
  Json out;
  out["method"] = ToString(report.method);
  out["realizations"] = report.realizations;
  if (std::isfinite(report.worst_slack)) {
    out["worst_slack"] = report.worst_slack;
  } else {
    out["worst_slack"] = nullptr;
  }
  out["worst_w"] = SequenceToJson(report.worst_w);
  out["violating_w"] = report.violating_w ? SequenceToJson(*report.violating_w) : Json();
  return out;
}

Json ToJson(const KktResiduals& residuals) {
  Json out;
  out["primal"] = residuals.primal;
  out["dual"] = residuals.dual;
  out["gap"] = residuals.gap;
  return out;
}

Json QpToJson(const QuadraticProgram& qp, const DecisionLayout& layout) {
  Json out;
  out["num_variables"] = qp.num_variables();
  Json names = Json::array();
  for (Index i = 0; i < layout.num_variables; ++i) names.push_back(layout.VariableName(i));
  out["variables"] = std::move(names);
  out["objective"] = {{"P", Triplets(qp.P)}, {"q", ToJson(qp.q)}, {"constant", qp.constant}};
  out["equalities"] = {{"A", Triplets(qp.A_eq)}, {"b", ToJson(qp.b_eq)}};
  out["inequalities"] = {{"A", Triplets(qp.A_in)}, {"b", ToJson(qp.b_in)}};
  return out;
}

}  // namespace dcs
