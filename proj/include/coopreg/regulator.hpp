#pragma once

#include <Eigen/Dense>
#include <vector>

#include "coopreg/synthesis.hpp"

namespace coopreg {

/// Composite exogenous generator for one agent: v = col(x0, w) advances by
/// Sbar = blkdiag(S0, Q); E = [Ex, Ew] and F = [Fx, Fw] collect the forcing.
struct CompositeExo {
  Eigen::MatrixXd Sbar;  // (q+s) x (q+s) block diagonal
  Eigen::MatrixXd E;     // n x (q+s)
  Eigen::MatrixXd F;     // p x (q+s)
  int q = 0;
  int s = 0;
};

CompositeExo make_composite_exo(const Eigen::MatrixXd& S0, const AgentPlant& agent);

struct RankReport {
  bool pass = false;
  std::vector<EigenvalueRank> per_eigenvalue;
};

/// Solvability certificate: at every z in the spectrum of Sbar the stacked
/// complex matrix [[z^r A - z^(r+1) I, sum_l B_l z^(r-r_l)],
///                 [z^r C,             sum_l D_l z^(r-r_l)]]
/// must have full row rank n+p (numerical rank, 1e-9 relative threshold).
/// The certificate is sufficient only; a failure means "not certified".
RankReport rank_condition(const AgentPlant& agent, const CompositeExo& exo);

struct RegulatorSolution {
  Eigen::MatrixXd X;  // n x (q+s)
  Eigen::MatrixXd U;  // m x (q+s)
  double residual = 0.0;
  double tolerance = 0.0;
  bool ok = false;  // residual <= tolerance
};

/// Minimum-norm least-squares solution of
///   X Sbar^(r+1) = A X Sbar^r + sum_l B_l U Sbar^(r-r_l) + E Sbar^r
///   0            = C X Sbar^r + sum_l D_l U Sbar^(r-r_l) + F Sbar^r
/// via vec(M Sbar^k) = ((Sbar^k)^T ⊗ I) vec(M). The returned residual is an
/// independent plug-back into both equations; ok is false when it exceeds
/// 1e-8 * (1 + norm of the assembled system).
RegulatorSolution solve_regulator(const AgentPlant& agent, const CompositeExo& exo);

/// Separate implementation of the classical delay-free equations
/// X Sbar = A X + B U + E, 0 = C X + D U + F. Requires a single zero delay.
RegulatorSolution delay_free_regulator(const AgentPlant& agent, const CompositeExo& exo);

/// Plug-back residual of a candidate pair; the defining check for solutions.
double regulator_residual(const AgentPlant& agent, const CompositeExo& exo,
                          const Eigen::MatrixXd& X, const Eigen::MatrixXd& U);

}  // namespace coopreg
