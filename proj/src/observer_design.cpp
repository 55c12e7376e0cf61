#include "coopreg/observer_design.hpp"

#include <cmath>
#include <stdexcept>

#include "coopreg/kron.hpp"

namespace coopreg {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct OpenInterval {
  double lo = -kInf;
  double hi = kInf;
  bool empty = false;
  bool whole_line = false;
};

// Solutions of c2 mu^2 - 2 c1 mu + c0 < 0 with c2 >= 0.
OpenInterval solve_quadratic(double c2, double c1, double c0) {
  OpenInterval iv;
  if (c2 > 0.0) {
    const double disc = c1 * c1 - c2 * c0;
    if (disc <= 0.0) {
      iv.empty = true;
      return iv;
    }
    const double root = std::sqrt(disc);
    iv.lo = (c1 - root) / c2;
    iv.hi = (c1 + root) / c2;
    return iv;
  }
  // Degenerate linear/constant cases (zero H eigenvalue on malformed input).
  if (c1 != 0.0) {
    if (c1 > 0.0)
      iv.lo = c0 / (2.0 * c1);
    else
      iv.hi = c0 / (2.0 * c1);
    return iv;
  }
  if (c0 < 0.0) {
    iv.whole_line = true;
    return iv;
  }
  iv.empty = true;
  return iv;
}

}  // namespace

LeaderSpectrum leader_spectral_radius(const Eigen::MatrixXd& S0) {
  if (S0.rows() != S0.cols())
    throw std::invalid_argument("leader_spectral_radius: S0 must be square");
  LeaderSpectrum out;
  out.radius = spectral_radius(S0);
  out.within_unit = out.radius <= 1.0 + kStabilityMargin;
  return out;
}

Stability MuInterval::classify(double mu) const {
  if (!feasible) return Stability::Unstable;
  if (mu > lower + kStabilityMargin && mu < upper - kStabilityMargin) return Stability::Stable;
  if (mu < lower - kStabilityMargin || mu > upper + kStabilityMargin) return Stability::Unstable;
  return Stability::Marginal;
}

Eigen::MatrixXd observer_matrix(const Eigen::MatrixXd& S0, const HMatrix& H, double mu) {
  const Eigen::Index N = H.entries.rows();
  const Eigen::MatrixXd gain = Eigen::MatrixXd::Identity(N, N) - mu * H.entries;
  return kron(gain, S0);
}

MuInterval mu_interval(const Eigen::MatrixXd& S0, const HMatrix& H) {
  const LeaderSpectrum leader = leader_spectral_radius(S0);
  MuInterval out;

  const double scale = std::max(1.0, S0.norm());
  if (leader.radius <= 1e-12 * scale) {
    // Nilpotent leader spectrum: (I - mu H) ⊗ S0 has only zero eigenvalues.
    out.feasible = true;
    out.lower = -kInf;
    out.upper = kInf;
    return out;
  }

  const double inv_lq2 = 1.0 / (leader.radius * leader.radius);
  double lo = -kInf, hi = kInf;
  bool any_empty = false;
  for (Eigen::Index l = 0; l < H.spectrum.size(); ++l) {
    const double a = H.spectrum(l).real();
    const double b = H.spectrum(l).imag();
    const double a2b2 = a * a + b * b;
    EigenConstraint c;
    c.a = a;
    c.b = b;
    c.delta = a2b2 * inv_lq2 - b * b;
    // |1 - mu(a+jb)|^2 < 1/|lq|^2  <=>  a2b2 mu^2 - 2a mu + 1 - 1/|lq|^2 < 0.
    const OpenInterval iv = solve_quadratic(a2b2, a, 1.0 - inv_lq2);
    c.lo = iv.lo;
    c.hi = iv.hi;
    c.empty = iv.empty;
    c.whole_line = iv.whole_line;
    out.diagnostics.push_back(c);
    if (iv.empty) {
      any_empty = true;
      continue;
    }
    lo = std::max(lo, iv.lo);
    hi = std::min(hi, iv.hi);
  }
  out.lower = lo;
  out.upper = hi;
  out.feasible = !any_empty && lo < hi;
  return out;
}

MuInterval mu_interval_undirected(const Eigen::MatrixXd& S0, const HMatrix& H) {
  const Eigen::MatrixXd& M = H.entries;
  if (!M.isApprox(M.transpose(), 1e-12))
    throw std::invalid_argument("mu_interval_undirected: H must be symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("mu_interval_undirected: H must be positive definite");

  const LeaderSpectrum leader = leader_spectral_radius(S0);
  MuInterval out;
  const double scale = std::max(1.0, S0.norm());
  if (leader.radius <= 1e-12 * scale) {
    out.feasible = true;
    out.lower = -kInf;
    out.upper = kInf;
    return out;
  }
  const double lq = leader.radius;
  double lo = -kInf, hi = kInf;
  for (Eigen::Index l = 0; l < es.eigenvalues().size(); ++l) {
    const double a = es.eigenvalues()(l);
    EigenConstraint c;
    c.a = a;
    c.b = 0.0;
    c.delta = (a * a) / (lq * lq);
    c.lo = (lq - 1.0) / (a * lq);
    c.hi = (lq + 1.0) / (a * lq);
    out.diagnostics.push_back(c);
    lo = std::max(lo, c.lo);
    hi = std::min(hi, c.hi);
  }
  out.lower = lo;
  out.upper = hi;
  out.feasible = lo < hi;
  return out;
}

GuaranteeResult marginal_leader_guarantee(const Eigen::MatrixXd& S0, const HMatrix& H,
                                          bool graph_connected) {
  GuaranteeResult out;
  out.applicable = graph_connected && leader_spectral_radius(S0).within_unit;
  if (!out.applicable) return out;
  out.holds = mu_interval(S0, H).feasible;
  return out;
}

NaiveFeasibility naive_observer_feasibility(const Eigen::MatrixXd& S0, const HMatrix& H) {
  const Eigen::VectorXcd leader_eigs = eigenvalues(S0);
  NaiveFeasibility out;
  double lo = -kInf, hi = kInf;
  bool any_empty = false;
  for (Eigen::Index k = 0; k < leader_eigs.size(); ++k) {
    for (Eigen::Index l = 0; l < H.spectrum.size(); ++l) {
      const std::complex<double> lam = leader_eigs(k);
      const std::complex<double> nu = H.spectrum(l);
      // |lam - mu nu|^2 < 1  <=>  |nu|^2 mu^2 - 2 Re(lam conj(nu)) mu + |lam|^2 - 1 < 0.
      const OpenInterval iv = solve_quadratic(std::norm(nu), (lam * std::conj(nu)).real(),
                                              std::norm(lam) - 1.0);
      PairConstraint c;
      c.leader_eig = lam;
      c.h_eig = nu;
      c.lo = iv.lo;
      c.hi = iv.hi;
      c.empty = iv.empty;
      c.whole_line = iv.whole_line;
      out.trace.push_back(c);
      if (iv.empty) {
        any_empty = true;
        continue;
      }
      lo = std::max(lo, iv.lo);
      hi = std::min(hi, iv.hi);
    }
  }
  out.lower = lo;
  out.upper = hi;
  out.feasible = !any_empty && lo < hi;
  return out;
}

double pick_mu(const MuInterval& interval, const Eigen::MatrixXd& S0, const HMatrix& H,
               std::optional<double> override_mu) {
  if (!interval.feasible)
    throw std::runtime_error("pick_mu: no feasible observer gain interval");
  double mu;
  if (override_mu) {
    mu = *override_mu;
    if (!(mu > interval.lower && mu < interval.upper))
      throw std::runtime_error("pick_mu: requested gain lies outside the feasible interval");
  } else if (interval.unbounded()) {
    mu = 1.0;  // midpoint of the (0, 2) clamp
  } else {
    double lo = interval.lower, hi = interval.upper;
    if (lo == -kInf) lo = hi - 2.0;
    if (hi == kInf) hi = lo + 2.0;
    mu = 0.5 * (lo + hi);
  }
  if (!is_schur(observer_matrix(S0, H, mu)))
    throw std::runtime_error("pick_mu: chosen gain failed the Schur re-verification");
  return mu;
}

}  // namespace coopreg
