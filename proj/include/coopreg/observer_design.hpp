#pragma once

#include <Eigen/Dense>
#include <limits>
#include <optional>
#include <vector>

#include "coopreg/spectral.hpp"
#include "coopreg/topology.hpp"

namespace coopreg {

struct LeaderSpectrum {
  double radius = 0.0;      // |lambda_q|, largest leader eigenvalue modulus
  bool within_unit = true;  // radius <= 1 + margin
};

LeaderSpectrum leader_spectral_radius(const Eigen::MatrixXd& S0);

/// Open mu range carved out by one H eigenvalue a + jb.
struct EigenConstraint {
  double a = 0.0;
  double b = 0.0;
  double delta = 0.0;  // (a^2+b^2)/|lambda_q|^2 - b^2
  double lo = 0.0;
  double hi = 0.0;
  bool empty = false;
  bool whole_line = false;
};

struct MuInterval {
  bool feasible = false;
  double lower = 0.0;  // -inf when unbounded below
  double upper = 0.0;  // +inf when unbounded above
  std::vector<EigenConstraint> diagnostics;

  bool unbounded() const {
    return lower == -std::numeric_limits<double>::infinity() &&
           upper == std::numeric_limits<double>::infinity();
  }
  /// Stable strictly inside, marginal within kStabilityMargin of an endpoint.
  Stability classify(double mu) const;
};

/// Observer error propagation matrix (I_N - mu H) ⊗ S0.
Eigen::MatrixXd observer_matrix(const Eigen::MatrixXd& S0, const HMatrix& H, double mu);

/// Gain range making (I - mu H) ⊗ S0 Schur: per H-eigenvalue quadratic
/// |1 - mu(a+jb)|^2 < 1/|lambda_q|^2, intersected over the spectrum.
/// |lambda_q| below 1e-12*scale is the nilpotent case: always feasible,
/// unbounded interval.
MuInterval mu_interval(const Eigen::MatrixXd& S0, const HMatrix& H);

/// Specialization for symmetric positive definite H (undirected graphs):
/// bounds ((|lq|-1)/(a_l |lq|), (|lq|+1)/(a_l |lq|)). Throws
/// std::invalid_argument when H is not symmetric positive definite.
MuInterval mu_interval_undirected(const Eigen::MatrixXd& S0, const HMatrix& H);

struct GuaranteeResult {
  bool applicable = false;  // leader modulus <= 1 and the graph is connected
  bool holds = false;       // mu_interval reported feasible
};

/// A marginally stable leader over a connected graph always admits a gain.
GuaranteeResult marginal_leader_guarantee(const Eigen::MatrixXd& S0, const HMatrix& H,
                                          bool graph_connected);

/// One quadratic |lambda - mu nu|^2 < 1 for a (leader, H) eigenvalue pair.
struct PairConstraint {
  std::complex<double> leader_eig;
  std::complex<double> h_eig;
  double lo = 0.0;
  double hi = 0.0;
  bool empty = false;
  bool whole_line = false;
};

struct NaiveFeasibility {
  bool feasible = false;
  double lower = 0.0;
  double upper = 0.0;
  std::vector<PairConstraint> trace;
};

/// Feasibility of the uncorrected observer, whose error matrix is
/// (I_N ⊗ S0) - mu (H ⊗ I_q): exact intersection of the per-pair quadratic
/// solution intervals.
NaiveFeasibility naive_observer_feasibility(const Eigen::MatrixXd& S0, const HMatrix& H);

/// Midpoint of a bounded feasible interval (1.0 for the unbounded case, via a
/// (0,2) clamp); an override must lie strictly inside. The returned gain is
/// re-verified Schur on (I - mu H) ⊗ S0. Throws on infeasible intervals,
/// out-of-interval overrides, or a failed re-verification.
double pick_mu(const MuInterval& interval, const Eigen::MatrixXd& S0, const HMatrix& H,
               std::optional<double> override_mu = std::nullopt);

}  // namespace coopreg
