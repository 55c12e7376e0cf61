#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <vector>

#include "coopreg/regulator.hpp"
#include "coopreg/scenario.hpp"

namespace coopreg {

/// Fixed-length window over the last max_delay+1 values of a signal.
/// After push(v) at time t, at(k) returns the value at time t-k.
class DelayHistory {
 public:
  DelayHistory(int max_delay, const Eigen::VectorXd& fill);
  void push(const Eigen::VectorXd& v);
  const Eigen::VectorXd& at(int steps_back) const;
  int max_delay() const { return static_cast<int>(buffer_.size()) - 1; }

 private:
  std::vector<Eigen::VectorXd> buffer_;  // ring, length max_delay+1
  std::size_t head_ = 0;                 // slot of the most recent value
};

struct InitialConditions {
  Eigen::VectorXd x0;
  std::vector<Eigen::VectorXd> x, w, xi, eta;
  // Pre-horizon inputs u(-r)..u(-1) per agent (oldest first); may be empty
  // when the scenario has no positive delay.
  std::vector<std::vector<Eigen::VectorXd>> u_history;
};

InitialConditions zero_initial_conditions(const Scenario& scenario);
/// Every state entry and pre-horizon input drawn uniform[-1, 1]; the leader
/// is seeded by its time-0 value only (its recursion is delay-free).
InitialConditions random_initial_conditions(const Scenario& scenario, unsigned seed);

struct AgentTrace {
  std::vector<Eigen::VectorXd> x, w, eta, xi, u, e, ym;
};

struct SimulationTrace {
  int horizon = 0;
  std::vector<Eigen::VectorXd> x0;
  std::vector<AgentTrace> agents;
  // Set when a non-finite state aborted the run at that step.
  std::optional<int> overflow_step;
  int steps_recorded() const { return static_cast<int>(x0.size()); }
};

/// Lockstep closed-loop simulation over t = 0..horizon. Per-step order:
/// inputs and outputs from the time-t snapshot, then leader, disturbances,
/// observers, estimators and plants advance simultaneously. Identical inputs
/// produce bitwise identical traces.
SimulationTrace run(const Scenario& scenario, const GainBundle& gains,
                    const InitialConditions& init, int horizon);

struct IdentityResiduals {
  double control = 0.0;  // shifted control identity
  double state = 0.0;    // shifted state recursion in deviation coordinates
  double error = 0.0;    // shifted error output identity
  bool ok = false;       // all three below 1e-9 relative
  int worst_step = 0;
};

struct ErrorCoordinates {
  // Per agent: xbar = x - X v, ubar = u - U v, xie = xi - col(x, w),
  // etatil = eta - x0, with v = col(x0, w).
  std::vector<std::vector<Eigen::VectorXd>> xbar, ubar, xie, etatil;
  IdentityResiduals certificate;
};

/// Transforms a trace into deviation coordinates and certifies the three
/// closed-loop identities at every applicable step. A violation beyond 1e-9
/// relative signals an implementation bug: throws std::logic_error naming the
/// step and residual.
ErrorCoordinates error_coordinates(const SimulationTrace& trace, const Scenario& scenario,
                                   const GainBundle& gains,
                                   const std::vector<RegulatorSolution>& regulator);

struct AgentConvergence {
  double tail_max = 0.0;     // max error norm over the tail window
  double fitted_rate = 0.0;  // geometric rate from a log-envelope fit
  bool decaying = false;
};

struct ConvergenceMetrics {
  std::vector<AgentConvergence> agents;
  double worst_tail = 0.0;
  double worst_rate = 0.0;
};

/// Scores the final tail_fraction of the trace. Requires horizon >= 50.
ConvergenceMetrics convergence_metrics(const SimulationTrace& trace, double tail_fraction);

/// One row per step: t, e{i}_{k}, u{i}_{k}, eta{i}_{k}, then x0_{k}, x{i}_{k},
/// w{i}_{k}, xi{i}_{k}; full-precision scientific notation, header mandatory.
void write_trace_csv(const SimulationTrace& trace, std::ostream& out);
void write_trace_csv(const SimulationTrace& trace, const std::string& path);

}  // namespace coopreg
