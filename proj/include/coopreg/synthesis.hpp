#pragma once

#include <Eigen/Dense>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "coopreg/observer_design.hpp"
#include "coopreg/spectral.hpp"
#include "coopreg/topology.hpp"

namespace coopreg {

/// One follower's plant data. B, D, Dm hold one block per entry of `delays`
/// (0 = delays[0] < delays[1] < ... = r). C/D/Fx/Fw shape the regulated error,
/// Cm/Dm/Fxm/Fwm the measured output.
struct AgentPlant {
  Eigen::MatrixXd A;               // n x n
  std::vector<Eigen::MatrixXd> B;  // n x m per delay
  Eigen::MatrixXd Ex;              // n x q
  Eigen::MatrixXd Ew;              // n x s
  Eigen::MatrixXd C;               // p x n
  std::vector<Eigen::MatrixXd> D;  // p x m per delay
  Eigen::MatrixXd Fx;              // p x q
  Eigen::MatrixXd Fw;              // p x s
  Eigen::MatrixXd Cm;               // pm x n
  std::vector<Eigen::MatrixXd> Dm;  // pm x m per delay
  Eigen::MatrixXd Fxm;              // pm x q
  Eigen::MatrixXd Fwm;              // pm x s
  Eigen::MatrixXd Q;  // s x s disturbance generator
  std::vector<int> delays;

  int n() const { return static_cast<int>(A.rows()); }
  int m() const { return static_cast<int>(B.front().cols()); }
  int p() const { return static_cast<int>(C.rows()); }
  int pm() const { return static_cast<int>(Cm.rows()); }
  int q() const { return static_cast<int>(Ex.cols()); }
  int s() const { return static_cast<int>(Q.rows()); }
  int max_delay() const { return delays.back(); }

  /// Throws std::invalid_argument naming the offending block.
  void validate() const;
};

/// col(x, w) propagation matrix [[A, Ew], [0, Q]].
Eigen::MatrixXd composite_system_matrix(const AgentPlant& agent);
/// Measured-output map [Cm, Fwm] on col(x, w).
Eigen::MatrixXd composite_output_matrix(const AgentPlant& agent);

struct K1Certificate {
  bool stable = false;
  double radius = 0.0;
};

/// Certifies x(t+1) = A x(t) + sum_l B_l K1 x(t - r_l) via the lifted radius.
K1Certificate verify_k1(const AgentPlant& agent, const Eigen::MatrixXd& K1);

/// Best-effort stabilizing gain search: Riccati-seeded candidates, random
/// sampling, then coordinate refinement of the best candidate, spending at
/// most `budget` radius evaluations. Not finding a gain is a clean outcome.
std::optional<Eigen::MatrixXd> search_k1(const AgentPlant& agent, int budget = 20000,
                                         unsigned seed = 12345);

struct EigenvalueRank {
  std::complex<double> z;
  int rank = 0;
  int required = 0;
  bool pass = false;
};

struct DetectabilityReport {
  bool pass = false;
  std::vector<EigenvalueRank> per_eigenvalue;  // modes with |z| >= 1 - margin
};

/// PBH test of ([[A, Ew], [0, Q]], [Cm, Fwm]) at every marginal/unstable mode.
DetectabilityReport check_detectability(const AgentPlant& agent);

struct EstimatorGain {
  Eigen::MatrixXd L;  // (n+s) x pm
  double radius = 0.0;
  int iterations = 0;
};

/// Steady-state one-step-predictor gain from the discrete filtering Riccati
/// recursion with unit weights; always post-verified Schur. Throws
/// std::runtime_error with diagnostics when the post-check fails.
EstimatorGain design_l(const AgentPlant& agent);

struct ControllerRealization {
  Eigen::MatrixXd K1;   // m x n
  Eigen::MatrixXd K2x;  // m x q
  Eigen::MatrixXd K2w;  // m x s
  Eigen::MatrixXd L;    // (n+s) x pm
  double mu = 0.0;
  // Certificates: lifted feedback-loop radius, estimator radius, shared
  // observer radius.
  double k1_radius = 0.0;
  double estimator_radius = 0.0;
  double observer_radius = 0.0;
};

struct AssumptionViolation : std::runtime_error {
  std::string assumption;
  AssumptionViolation(std::string which, const std::string& msg)
      : std::runtime_error(msg), assumption(std::move(which)) {}
};

/// Bundles the gains, partitions K2 = U - K1 X at column q, and re-runs all
/// three certificates. Throws AssumptionViolation naming the failed one.
ControllerRealization assemble_controller(const AgentPlant& agent, const Eigen::MatrixXd& X,
                                          const Eigen::MatrixXd& U, const Eigen::MatrixXd& K1,
                                          const Eigen::MatrixXd& L, double mu,
                                          const Eigen::MatrixXd& S0, const HMatrix& H);

}  // namespace coopreg
