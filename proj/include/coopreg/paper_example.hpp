#pragma once

#include <Eigen/Dense>
#include <vector>

#include "coopreg/scenario.hpp"

namespace coopreg {

/// Built-in reference scenario ("paper_example"): four identical
/// double-integrator followers with one-step input delay tracking a
/// sinusoidal leader under per-agent sinusoidal disturbances, on a tree
/// network pinned at the leader. Trigonometric entries are evaluated in
/// closed form at load time.
Scenario paper_example_scenario();

/// Published reference values for the bundled scenario, used by the
/// reproduce command and the acceptance suite.
struct PaperReference {
  Eigen::VectorXcd h_spectrum;         // {1, 1, 1, 1}
  double mu_lower = 0.0;               // (0, 2)
  double mu_upper = 2.0;
  double mu_choice = 0.5;
  Eigen::VectorXcd loop_roots;         // published nonzero closed-loop roots
  Eigen::MatrixXd X;                   // shared across agents
  std::vector<Eigen::MatrixXd> U;      // per agent
  std::vector<Eigen::MatrixXd> K2;     // per agent, [K2x K2w]
};

PaperReference paper_example_reference();

}  // namespace coopreg
