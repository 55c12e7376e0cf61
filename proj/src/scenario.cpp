#include "coopreg/scenario.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace coopreg {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what) {
  throw ConfigError(where + ": " + what);
}

Eigen::MatrixXd parse_matrix(const json& j, const std::string& where) {
  if (!j.is_array() || j.empty() || !j.front().is_array())
    fail(where, "expected a matrix as a list of rows");
  const std::size_t rows = j.size();
  const std::size_t cols = j.front().size();
  Eigen::MatrixXd M(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (!j[i].is_array() || j[i].size() != cols) fail(where, "ragged matrix rows");
    for (std::size_t k = 0; k < cols; ++k) {
      if (!j[i][k].is_number()) fail(where, "matrix entries must be numbers");
      M(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = j[i][k].get<double>();
    }
  }
  return M;
}

json matrix_to_json(const Eigen::MatrixXd& M) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < M.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < M.cols(); ++j) row.push_back(M(i, j));
    rows.push_back(row);
  }
  return rows;
}

std::vector<Eigen::MatrixXd> parse_matrix_list(const json& j, std::size_t count,
                                               const std::string& where) {
  if (!j.is_array() || j.size() != count)
    fail(where, "expected one matrix per delay (" + std::to_string(count) + ")");
  std::vector<Eigen::MatrixXd> out;
  for (std::size_t l = 0; l < count; ++l)
    out.push_back(parse_matrix(j[l], where + "[" + std::to_string(l) + "]"));
  return out;
}

json matrix_list_to_json(const std::vector<Eigen::MatrixXd>& list) {
  json out = json::array();
  for (const auto& M : list) out.push_back(matrix_to_json(M));
  return out;
}

const json& field(const json& j, const std::string& key, const std::string& where) {
  const auto it = j.find(key);
  if (it == j.end()) fail(where, "missing field '" + key + "'");
  return *it;
}

void check_shape(const Eigen::MatrixXd& M, Eigen::Index rows, Eigen::Index cols,
                 const std::string& where) {
  if (M.rows() != rows || M.cols() != cols) {
    std::ostringstream msg;
    msg << "expected " << rows << "x" << cols << ", got " << M.rows() << "x" << M.cols();
    fail(where, msg.str());
  }
}

}  // namespace

void Scenario::validate() const {
  if (delays.empty() || delays.front() != 0) fail("delays", "must start at 0");
  for (std::size_t l = 1; l < delays.size(); ++l)
    if (delays[l] <= delays[l - 1]) fail("delays", "must be strictly increasing");
  if (S0.rows() != S0.cols() || S0.rows() == 0) fail("leader.S0", "must be square");
  const int N = n_agents();
  if (N == 0) fail("agents", "at least one agent required");
  if (network.adjacency.rows() != N + 1) fail("network.adjacency", "must be (N+1) x (N+1)");
  if (user_K1.size() != agents.size() || user_L.size() != agents.size())
    fail("agents", "internal gain slot mismatch");
  for (int i = 0; i < N; ++i) {
    const std::string where = "agents[" + std::to_string(i) + "]";
    const AgentPlant& a = agents[static_cast<std::size_t>(i)];
    if (a.delays != delays) fail(where, "delay schedule differs from the shared one");
    try {
      a.validate();
    } catch (const std::invalid_argument& e) {
      fail(where, e.what());
    }
    if (a.q() != static_cast<int>(S0.rows())) fail(where + ".E_x", "column count must equal dim S0");
    if (const auto& K1 = user_K1[static_cast<std::size_t>(i)])
      check_shape(*K1, a.m(), a.n(), where + ".K1");
    if (const auto& L = user_L[static_cast<std::size_t>(i)])
      check_shape(*L, a.n() + a.s(), a.pm(), where + ".L");
  }
  if (sim.horizon < 1) fail("simulation.horizon", "must be positive");
  if (!(sim.tail_fraction > 0.0 && sim.tail_fraction < 1.0))
    fail("simulation.tail_fraction", "must lie in (0,1)");
  if (sim.tail_tolerance <= 0.0) fail("simulation.tail_tolerance", "must be positive");
}

Scenario parse_scenario(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config parse error: ") + e.what());
  }

  Scenario sc;
  sc.S0 = parse_matrix(field(field(j, "leader", "config"), "S0", "leader"), "leader.S0");

  const json& jd = field(j, "delays", "config");
  if (!jd.is_array() || jd.empty()) fail("delays", "expected a nonempty list of integers");
  for (const auto& d : jd) {
    if (!d.is_number_integer() || d.get<int>() < 0) fail("delays", "entries must be integers >= 0");
    sc.delays.push_back(d.get<int>());
  }

  const Eigen::MatrixXd adj =
      parse_matrix(field(field(j, "network", "config"), "adjacency", "network"),
                   "network.adjacency");
  try {
    sc.network = make_network(adj);
  } catch (const std::invalid_argument& e) {
    fail("network.adjacency", e.what());
  }

  const json& ja = field(j, "agents", "config");
  if (!ja.is_array() || ja.empty()) fail("agents", "expected a nonempty list");
  const std::size_t n_delays = sc.delays.size();
  for (std::size_t i = 0; i < ja.size(); ++i) {
    const std::string where = "agents[" + std::to_string(i) + "]";
    const json& a = ja[i];
    AgentPlant plant;
    plant.delays = sc.delays;
    plant.A = parse_matrix(field(a, "A", where), where + ".A");
    plant.B = parse_matrix_list(field(a, "B", where), n_delays, where + ".B");
    plant.Ex = parse_matrix(field(a, "E_x", where), where + ".E_x");
    plant.Ew = parse_matrix(field(a, "E_w", where), where + ".E_w");
    plant.C = parse_matrix(field(a, "C", where), where + ".C");
    plant.D = parse_matrix_list(field(a, "D", where), n_delays, where + ".D");
    plant.Fx = parse_matrix(field(a, "F_x", where), where + ".F_x");
    plant.Fw = parse_matrix(field(a, "F_w", where), where + ".F_w");
    plant.Cm = parse_matrix(field(a, "C_m", where), where + ".C_m");
    plant.Dm = parse_matrix_list(field(a, "D_m", where), n_delays, where + ".D_m");
    plant.Fxm = parse_matrix(field(a, "F_xm", where), where + ".F_xm");
    plant.Fwm = parse_matrix(field(a, "F_wm", where), where + ".F_wm");
    plant.Q = parse_matrix(field(a, "Q", where), where + ".Q");
    sc.agents.push_back(std::move(plant));
    sc.user_K1.push_back(a.contains("K1")
                             ? std::optional<Eigen::MatrixXd>(parse_matrix(a["K1"], where + ".K1"))
                             : std::nullopt);
    sc.user_L.push_back(a.contains("L")
                            ? std::optional<Eigen::MatrixXd>(parse_matrix(a["L"], where + ".L"))
                            : std::nullopt);
  }

  if (j.contains("simulation")) {
    const json& s = j["simulation"];
    if (s.contains("horizon")) sc.sim.horizon = s["horizon"].get<int>();
    if (s.contains("seed")) sc.sim.seed = s["seed"].get<unsigned>();
    if (s.contains("mu")) sc.sim.mu = s["mu"].get<double>();
    if (s.contains("initial")) {
      const std::string mode = s["initial"].get<std::string>();
      if (mode == "zero")
        sc.sim.initial = InitialMode::Zero;
      else if (mode == "random")
        sc.sim.initial = InitialMode::Random;
      else
        fail("simulation.initial", "must be 'zero' or 'random'");
    }
    if (s.contains("tail_fraction")) sc.sim.tail_fraction = s["tail_fraction"].get<double>();
    if (s.contains("tail_tolerance")) sc.sim.tail_tolerance = s["tail_tolerance"].get<double>();
  }

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

std::string scenario_to_json(const Scenario& sc) {
  json j;
  j["leader"]["S0"] = matrix_to_json(sc.S0);
  j["delays"] = sc.delays;
  j["network"]["adjacency"] = matrix_to_json(sc.network.adjacency);
  j["agents"] = json::array();
  for (std::size_t i = 0; i < sc.agents.size(); ++i) {
    const AgentPlant& a = sc.agents[i];
    json ja;
    ja["A"] = matrix_to_json(a.A);
    ja["B"] = matrix_list_to_json(a.B);
    ja["E_x"] = matrix_to_json(a.Ex);
    ja["E_w"] = matrix_to_json(a.Ew);
    ja["C"] = matrix_to_json(a.C);
    ja["D"] = matrix_list_to_json(a.D);
    ja["F_x"] = matrix_to_json(a.Fx);
    ja["F_w"] = matrix_to_json(a.Fw);
    ja["C_m"] = matrix_to_json(a.Cm);
    ja["D_m"] = matrix_list_to_json(a.Dm);
    ja["F_xm"] = matrix_to_json(a.Fxm);
    ja["F_wm"] = matrix_to_json(a.Fwm);
    ja["Q"] = matrix_to_json(a.Q);
    if (sc.user_K1[i]) ja["K1"] = matrix_to_json(*sc.user_K1[i]);
    if (sc.user_L[i]) ja["L"] = matrix_to_json(*sc.user_L[i]);
    j["agents"].push_back(ja);
  }
  j["simulation"]["horizon"] = sc.sim.horizon;
  j["simulation"]["seed"] = sc.sim.seed;
  if (sc.sim.mu) j["simulation"]["mu"] = *sc.sim.mu;
  j["simulation"]["initial"] = sc.sim.initial == InitialMode::Zero ? "zero" : "random";
  j["simulation"]["tail_fraction"] = sc.sim.tail_fraction;
  j["simulation"]["tail_tolerance"] = sc.sim.tail_tolerance;
  return j.dump(2);
}

void save_scenario(const Scenario& scenario, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << scenario_to_json(scenario) << "\n";
}

GainBundle parse_gains(const std::string& json_text, const Scenario& scenario) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("gain bundle parse error: ") + e.what());
  }
  GainBundle bundle;
  bundle.mu = field(j, "mu", "gains").get<double>();
  const json& ja = field(j, "agents", "gains");
  if (!ja.is_array() || ja.size() != scenario.agents.size())
    fail("gains.agents", "agent count must match the scenario");
  for (std::size_t i = 0; i < ja.size(); ++i) {
    const std::string where = "gains.agents[" + std::to_string(i) + "]";
    const AgentPlant& a = scenario.agents[i];
    ControllerRealization c;
    c.K1 = parse_matrix(field(ja[i], "K1", where), where + ".K1");
    c.K2x = parse_matrix(field(ja[i], "K2x", where), where + ".K2x");
    c.K2w = parse_matrix(field(ja[i], "K2w", where), where + ".K2w");
    c.L = parse_matrix(field(ja[i], "L", where), where + ".L");
    c.mu = bundle.mu;
    check_shape(c.K1, a.m(), a.n(), where + ".K1");
    check_shape(c.K2x, a.m(), a.q(), where + ".K2x");
    check_shape(c.K2w, a.m(), a.s(), where + ".K2w");
    check_shape(c.L, a.n() + a.s(), a.pm(), where + ".L");
    if (ja[i].contains("certificates")) {
      const json& cert = ja[i]["certificates"];
      if (cert.contains("k1_radius")) c.k1_radius = cert["k1_radius"].get<double>();
      if (cert.contains("estimator_radius"))
        c.estimator_radius = cert["estimator_radius"].get<double>();
      if (cert.contains("observer_radius"))
        c.observer_radius = cert["observer_radius"].get<double>();
    }
    bundle.controllers.push_back(std::move(c));
  }
  return bundle;
}

GainBundle load_gains(const std::string& path, const Scenario& scenario) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open gain bundle: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_gains(buf.str(), scenario);
}

std::string gains_to_json(const GainBundle& bundle) {
  json j;
  j["mu"] = bundle.mu;
  j["agents"] = json::array();
  for (const auto& c : bundle.controllers) {
    json jc;
    jc["K1"] = matrix_to_json(c.K1);
    jc["K2x"] = matrix_to_json(c.K2x);
    jc["K2w"] = matrix_to_json(c.K2w);
    jc["L"] = matrix_to_json(c.L);
    jc["certificates"]["k1_radius"] = c.k1_radius;
    jc["certificates"]["estimator_radius"] = c.estimator_radius;
    jc["certificates"]["observer_radius"] = c.observer_radius;
    j["agents"].push_back(jc);
  }
  return j.dump(2);
}

void save_gains(const GainBundle& bundle, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write gain bundle: " + path);
  out << gains_to_json(bundle) << "\n";
}

}  // namespace coopreg
