#pragma once

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <complex>
#include <optional>
#include <vector>

namespace coopreg {

/// Margin used by every Schur / exponential-stability verdict. Radii within
/// this band of 1 are classified as marginal rather than silently rounded.
inline constexpr double kStabilityMargin = 1e-9;

enum class Stability { Stable, Marginal, Unstable };

inline Stability classify_radius(double radius) {
  if (radius < 1.0 - kStabilityMargin) return Stability::Stable;
  if (radius > 1.0 + kStabilityMargin) return Stability::Unstable;
  return Stability::Marginal;
}

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& M);

double spectral_radius(const Eigen::MatrixXd& M);

inline bool is_schur(const Eigen::MatrixXd& M) {
  return spectral_radius(M) < 1.0 - kStabilityMargin;
}

/// x(t+1) = sum_l coeffs[l] * x(t - delays[l]) with 0 = delays[0] < delays[1] < ...
struct DelaySystem {
  int dim = 0;
  std::vector<int> delays;
  std::vector<Eigen::MatrixXd> coeffs;
};

/// Throws std::invalid_argument on malformed schedules or dimension mismatch.
DelaySystem make_delay_system(std::vector<int> delays, std::vector<Eigen::MatrixXd> coeffs);

struct LiftedSystem {
  int base_dim = 0;
  int max_delay = 0;
  Eigen::MatrixXd augmented;  // dim n*(max_delay+1), block-companion form
};

/// Augment the delay recursion into an equivalent delay-free system: the
/// stacked state col(x(t), ..., x(t-tau)) advances by `augmented`.
LiftedSystem lift(const DelaySystem& sys);

struct StabilityResult {
  bool stable = false;
  double radius = 0.0;
  Stability verdict = Stability::Unstable;
};

StabilityResult is_exponentially_stable(const DelaySystem& sys);

/// One delayed feedback term B_l*K applied at an integer delay.
struct DelayTerm {
  int delay = 0;
  Eigen::MatrixXd gain;  // n x n product (e.g. B_l * K)
};

struct CharPolyRoots {
  Eigen::VectorXcd all;      // full root multiset of the cleared polynomial
  Eigen::VectorXcd nonzero;  // roots with |z| above the artifact threshold
  int artifact_count = 0;    // zero roots introduced by clearing with z^(n*r)
  bool cleared = false;      // true iff max delay r > 0 (clearing applied)
};

/// Roots of z^(n*r) * det(zI - A - sum_l gains[l] z^(-delay_l)), computed by
/// lifting the loop and taking eigenvalues. Zero roots are clearing artifacts
/// whenever r > 0 and are flagged, not dropped.
CharPolyRoots char_poly_roots(const Eigen::MatrixXd& A, const std::vector<DelayTerm>& terms);

/// Determinant-form evaluation of the same cleared polynomial at z; the
/// independent cross-check for char_poly_roots on small systems.
std::complex<double> char_poly_eval(const Eigen::MatrixXd& A,
                                    const std::vector<DelayTerm>& terms,
                                    std::complex<double> z);

/// Greedy nearest-neighbour multiset match; returns the max pairing distance
/// or nullopt when sizes differ or some pairing exceeds tol.
std::optional<double> match_root_multisets(const Eigen::VectorXcd& a,
                                           const Eigen::VectorXcd& b, double tol);

struct CascadeCheck {
  bool factorization_holds = false;  // cascade roots == union of block roots
  double max_match_distance = 0.0;
  bool stable = false;
  double radius = 0.0;
};

/// Block-triangular cascade zeta(t+1) = sum F_l zeta(t-d_l) + sum G_l xi(t-d_l),
/// xi(t+1) = sum H_l xi(t-d_l): confirms the characteristic roots are the
/// union of the two diagonal blocks' roots and reports the stability verdict.
CascadeCheck factored_char_poly_check(const std::vector<int>& delays,
                                      const std::vector<Eigen::MatrixXd>& F,
                                      const std::vector<Eigen::MatrixXd>& G,
                                      const std::vector<Eigen::MatrixXd>& H);

}  // namespace coopreg
