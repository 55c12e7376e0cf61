#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopreg/synthesis.hpp"
#include "coopreg/topology.hpp"

namespace coopreg {

enum class InitialMode { Zero, Random };

struct SimulationSettings {
  int horizon = 500;
  unsigned seed = 1;
  std::optional<double> mu;  // observer gain override
  InitialMode initial = InitialMode::Random;
  double tail_fraction = 0.6;    // final fraction of steps scored
  double tail_tolerance = 1e-2;  // pass threshold on the tail error
};

/// Full problem instance as loaded from a config document.
struct Scenario {
  Eigen::MatrixXd S0;
  std::vector<int> delays;
  Network network;
  std::vector<AgentPlant> agents;
  // Optional user-supplied gains, one slot per agent.
  std::vector<std::optional<Eigen::MatrixXd>> user_K1;
  std::vector<std::optional<Eigen::MatrixXd>> user_L;
  SimulationSettings sim;

  int n_agents() const { return static_cast<int>(agents.size()); }
  int max_delay() const { return delays.back(); }
  /// Cross-field consistency; throws ConfigError naming the offending field.
  void validate() const;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& json_text);
std::string scenario_to_json(const Scenario& scenario);
void save_scenario(const Scenario& scenario, const std::string& path);

/// All per-agent controllers plus the shared observer gain.
struct GainBundle {
  double mu = 0.0;
  std::vector<ControllerRealization> controllers;
};

GainBundle load_gains(const std::string& path, const Scenario& scenario);
std::string gains_to_json(const GainBundle& bundle);
void save_gains(const GainBundle& bundle, const std::string& path);
GainBundle parse_gains(const std::string& json_text, const Scenario& scenario);

}  // namespace coopreg
