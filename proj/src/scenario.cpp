#include "dals/scenario.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace dals::harness {

system::LtiSystem Scenario::to_system() const {
  system::LtiSystem sys;
  sys.F = use_turning_rate ? system::turning_rate_F(eta, Ts) : F;
  sys.Q_true = Q_true;
  sys.x0 = x0;
  for (const auto& a : agents)
    sys.agents.push_back({a.H, a.R_true, a.sensing_range});
  return sys;
}

std::vector<network::SensorPose> Scenario::initial_poses() const {
  std::vector<network::SensorPose> out;
  for (const auto& a : agents) out.push_back({a.px, a.py, sensor_speed});
  return out;
}

namespace {
linalg::StructureMap make_structure(const std::string& kind, Eigen::Index dim) {
  if (kind == "full-symmetric") return linalg::StructureMap::full_symmetric(dim);
  if (kind == "diagonal") return linalg::StructureMap::diagonal(dim);
  if (kind == "scalar") {
    if (dim != 1) throw ConfigError("scalar structure requires dimension 1");
    return linalg::StructureMap::scalar();
  }
  throw ConfigError("unknown structure kind: " + kind);
}
}  // namespace

linalg::StructureMap Scenario::q_structure() const {
  return make_structure(q_kind, Q_true.rows());
}

linalg::StructureMap Scenario::r_structure(int agent) const {
  return make_structure(r_kind, agents[static_cast<size_t>(agent)].R_true.rows());
}

filter::NoiseHypothesis Scenario::initial_hypothesis(const std::vector<int>& participants) const {
  filter::NoiseHypothesis hyp;
  hyp.Q = Q0.size() > 0 ? Q0 : Q_true;
  for (int j : participants) {
    if (!R0.empty()) {
      const auto& r0 = R0.size() == 1 ? R0.front() : R0[static_cast<size_t>(j)];
      hyp.R.push_back(r0);
    } else {
      hyp.R.push_back(agents[static_cast<size_t>(j)].R_true);
    }
  }
  return hyp;
}

fusion::DalsParams Scenario::dals_params() const {
  fusion::DalsParams p;
  p.mu = mu;
  p.nu = nu;
  p.tau = tau;
  p.lags = lags;
  p.burn_in = burn_in;
  p.segment_warmup = segment_warmup;
  p.shared_q = coupling != "block-diag";
  // Identical measurement models admit the neighbor-averaged autocovariance
  // fusion; heterogeneous H falls back to the stacked joint problem.
  bool identical = agents.size() > 1;
  for (const auto& a : agents)
    if (a.H.rows() != agents.front().H.rows() || a.H != agents.front().H) {
      identical = false;
      break;
    }
  p.average_b = p.shared_q && identical;
  return p;
}

void Scenario::validate() const {
  if (agents.empty()) throw ConfigError("scenario: at least one agent required");
  if (horizon <= burn_in + tau && horizon <= burn_in + lags)
    throw ConfigError("scenario: horizon must exceed burn_in + tau");
  if (tau <= lags) throw ConfigError("scenario: tau must exceed the lag count");
  if (coupling != "shared-q" && coupling != "block-diag")
    throw ConfigError("scenario: coupling must be shared-q or block-diag");
  to_system().validate();
}

namespace {
Matrix diag_of(const std::vector<double>& d) {
  const auto n = static_cast<Eigen::Index>(d.size());
  Matrix m = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) m(i, i) = d[static_cast<size_t>(i)];
  return m;
}
}  // namespace

Scenario fig1_scenario() {
  Scenario s;
  s.name = "fig1";
  s.F = Matrix::Constant(1, 1, -0.8);
  s.Q_true = Matrix::Constant(1, 1, 8.0);
  s.x0 = Vector::Zero(1);
  for (int i = 1; i <= 10; ++i) {
    Scenario::Agent a;
    a.H = Matrix::Constant(1, 1, 1.0);
    a.R_true = Matrix::Constant(1, 1, static_cast<double>(i));
    s.agents.push_back(a);
  }
  s.q_kind = "scalar";
  s.r_kind = "scalar";
  s.horizon = 160;
  s.tau = 100;
  s.lags = 15;
  s.trials = 500;
  return s;
}

Scenario ssn_scenario() {
  Scenario s;
  s.name = "ssn";
  s.F = 0.8 * Matrix::Identity(2, 2);
  s.Q_true = 4.0 * Matrix::Identity(2, 2);
  s.x0 = Vector::Zero(2);

  Scenario::Agent a1;
  a1.H = (Matrix(1, 2) << 1.0, 0.0).finished();
  a1.R_true = Matrix::Constant(1, 1, 0.81);
  Scenario::Agent a2;
  a2.H = Matrix::Identity(2, 2);
  a2.R_true = (Matrix(2, 2) << 4.0, 0.0, 0.0, 0.64).finished();
  Scenario::Agent a3;
  a3.H = (Matrix(1, 2) << 1.0, 0.0).finished();
  a3.R_true = Matrix::Constant(1, 1, 2.25);
  s.agents = {a1, a2, a3};

  s.q_kind = "full-symmetric";
  s.r_kind = "full-symmetric";
  s.horizon = 200;
  s.tau = 100;
  s.lags = 15;
  s.trials = 500;
  // Initial hypothesis for the iterative loop, deliberately off the truth.
  s.Q0 = 2.0 * Matrix::Identity(2, 2);
  s.R0 = {Matrix::Constant(1, 1, 1.0), Matrix::Identity(2, 2), Matrix::Constant(1, 1, 1.0)};
  return s;
}

Scenario msn_scenario() {
  Scenario s;
  s.name = "msn";
  s.use_turning_rate = true;
  // Clockwise turn keeps the loiter circle centred inside the deployment
  // square; a counter-clockwise turn from this initial state exits the arena.
  s.eta = -std::numbers::pi / 60.0;
  s.Ts = 1.0;
  s.Q_true = diag_of({10.0, 0.0, 10.0, 0.0});
  s.x0 = (Vector(4) << 10.0, 2.0, 100.0, 2.0).finished();

  const double init[10][2] = {{18, 27}, {31, 43}, {62, 41}, {86, 33}, {15, 45},
                              {13, 98}, {38, 105}, {60, 99}, {89, 93}, {110, 106}};
  for (const auto& p : init) {
    Scenario::Agent a;
    a.H = (Matrix(2, 4) << 1, 0, 0, 0, 0, 0, 1, 0).finished();
    a.R_true = 2.0 * Matrix::Identity(2, 2);
    a.sensing_range = 60.0;
    a.px = p[0];
    a.py = p[1];
    s.agents.push_back(a);
  }
  s.mobile = true;
  s.comm_range = 45.0;
  s.sensor_speed = 0.5;
  s.q_kind = "diagonal";
  s.r_kind = "diagonal";
  s.horizon = 160;
  s.burn_in = 20;
  s.tau = 100;
  s.lags = 10;
  s.segment_warmup = 10;
  s.trials = 100;
  s.Q0 = diag_of({5.0, 0.0, 5.0, 0.0});
  s.R0 = {Matrix::Identity(2, 2)};
  return s;
}

Scenario builtin_scenario(const std::string& name) {
  if (name == "fig1") return fig1_scenario();
  if (name == "ssn") return ssn_scenario();
  if (name == "msn") return msn_scenario();
  throw ConfigError("unknown scenario: " + name);
}

namespace {

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

Matrix parse_matrix(const std::string& text) {
  std::string body = trim(text);
  if (body.size() >= 2 && body.front() == '[' && body.back() == ']')
    body = body.substr(1, body.size() - 2);
  std::vector<std::vector<double>> rows;
  std::stringstream rs(body);
  std::string row;
  while (std::getline(rs, row, ';')) {
    std::vector<double> vals;
    std::stringstream cs(row);
    std::string cell;
    while (std::getline(cs, cell, ',')) {
      const std::string t = trim(cell);
      if (t.empty()) continue;
      size_t used = 0;
      const double v = std::stod(t, &used);
      if (used != t.size()) throw ConfigError("scenario: bad number '" + t + "'");
      vals.push_back(v);
    }
    if (!vals.empty()) rows.push_back(vals);
  }
  if (rows.empty()) throw ConfigError("scenario: empty matrix literal");
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.front().size()));
  for (size_t i = 0; i < rows.size(); ++i) {
    if (rows[i].size() != rows.front().size())
      throw ConfigError("scenario: ragged matrix literal");
    for (size_t j = 0; j < rows[i].size(); ++j)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
  }
  return m;
}

}  // namespace

Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file: " + path);

  Scenario s;
  bool based = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("scenario file line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(t.substr(0, eq));
    const std::string val = trim(t.substr(eq + 1));

    auto as_int = [&] { return std::stoi(val); };
    auto as_double = [&] { return std::stod(val); };

    if (key == "base") {
      s = builtin_scenario(val);
      based = true;
    } else if (key == "name") {
      s.name = val;
    } else if (key == "F") {
      s.F = parse_matrix(val);
      s.use_turning_rate = false;
    } else if (key == "eta") {
      s.eta = as_double();
      s.use_turning_rate = true;
    } else if (key == "Ts") {
      s.Ts = as_double();
    } else if (key == "Q_true") {
      s.Q_true = parse_matrix(val);
    } else if (key == "Q0") {
      s.Q0 = parse_matrix(val);
    } else if (key == "x0") {
      const Matrix m = parse_matrix(val);
      s.x0 = Eigen::Map<const Vector>(m.data(), m.size());
    } else if (key == "mobile") {
      s.mobile = (val == "true" || val == "1");
    } else if (key == "comm_range") {
      s.comm_range = as_double();
    } else if (key == "sensor_speed") {
      s.sensor_speed = as_double();
    } else if (key == "horizon") {
      s.horizon = as_int();
    } else if (key == "burn_in") {
      s.burn_in = as_int();
    } else if (key == "tau") {
      s.tau = as_int();
    } else if (key == "lags") {
      s.lags = as_int();
    } else if (key == "segment_warmup") {
      s.segment_warmup = as_int();
    } else if (key == "mu") {
      s.mu = as_double();
    } else if (key == "nu") {
      s.nu = as_double();
    } else if (key == "trials") {
      s.trials = as_int();
    } else if (key == "seed") {
      s.seed = static_cast<std::uint64_t>(std::stoull(val));
    } else if (key == "q_kind") {
      s.q_kind = val;
    } else if (key == "r_kind") {
      s.r_kind = val;
    } else if (key == "coupling") {
      s.coupling = val;
    } else if (key.rfind("agent.", 0) == 0) {
      // agent.<idx>.H / .R / .R0 / .pos / .sensing_range
      const auto dot = key.find('.', 6);
      if (dot == std::string::npos)
        throw ConfigError("scenario: malformed agent key '" + key + "'");
      const size_t idx = static_cast<size_t>(std::stoi(key.substr(6, dot - 6)));
      const std::string field = key.substr(dot + 1);
      if (s.agents.size() <= idx) s.agents.resize(idx + 1);
      if (field == "H") {
        s.agents[idx].H = parse_matrix(val);
      } else if (field == "R") {
        s.agents[idx].R_true = parse_matrix(val);
      } else if (field == "R0") {
        if (s.R0.size() <= idx) s.R0.resize(idx + 1);
        s.R0[idx] = parse_matrix(val);
      } else if (field == "pos") {
        const Matrix m = parse_matrix(val);
        if (m.size() != 2) throw ConfigError("scenario: agent pos needs two entries");
        s.agents[idx].px = m(0);
        s.agents[idx].py = m(1);
      } else if (field == "sensing_range") {
        s.agents[idx].sensing_range = std::stod(val);
      } else {
        throw ConfigError("scenario: unknown agent field '" + field + "'");
      }
    } else {
      throw ConfigError("scenario: unknown key '" + key + "'");
    }
  }
  (void)based;
  s.validate();
  return s;
}

}  // namespace dals::harness
