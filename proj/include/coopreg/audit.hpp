#pragma once

#include <optional>
#include <string>
#include <vector>

#include "coopreg/observer_design.hpp"
#include "coopreg/regulator.hpp"
#include "coopreg/scenario.hpp"

namespace coopreg {

struct AgentAudit {
  // A1: a stabilizing delayed state feedback exists (user gain verified, or
  // best-effort search).
  bool k1_found = false;
  bool k1_user_supplied = false;
  double k1_radius = 0.0;
  std::optional<Eigen::MatrixXd> K1;
  // A2: composite pair detectability (PBH).
  DetectabilityReport detectability;
  // A3: regulator-equation solvability certificate plus the actual solve.
  RankReport rank;
  RegulatorSolution regulator;
  bool rank_anomaly = false;  // certificate failed but the solve succeeded
};

struct AuditReport {
  ConnectivityResult connectivity;  // A4
  LeaderSpectrum leader;            // A5
  HMatrix h;
  MuInterval interval;  // observer-gain feasibility (reported independently)
  std::optional<double> chosen_mu;
  NaiveFeasibility naive;  // uncorrected-observer comparison
  std::vector<AgentAudit> agents;

  bool all_assumptions_pass = false;  // A1-A5 and a feasible observer gain
  bool solvable = false;              // A1-A4 and a feasible observer gain

  std::string to_text() const;
  std::string to_json() const;
};

/// Runs every assumption check with certificates. Reporting only: failures
/// are recorded, never thrown. The search budget bounds the per-agent
/// feedback-gain search when no user gain is supplied.
AuditReport audit_assumptions(const Scenario& scenario, int search_budget = 20000);

}  // namespace coopreg
