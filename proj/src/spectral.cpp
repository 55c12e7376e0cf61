#include "coopreg/spectral.hpp"

#include <algorithm>
#include <stdexcept>

namespace coopreg {

Eigen::VectorXcd eigenvalues(const Eigen::MatrixXd& M) {
  if (M.rows() != M.cols()) throw std::invalid_argument("eigenvalues: matrix must be square");
  if (M.rows() == 0) return Eigen::VectorXcd();
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("eigenvalues: QR iteration did not converge");
  return es.eigenvalues();
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  return eigenvalues(M).cwiseAbs().maxCoeff();
}

DelaySystem make_delay_system(std::vector<int> delays, std::vector<Eigen::MatrixXd> coeffs) {
  if (delays.empty() || delays.size() != coeffs.size())
    throw std::invalid_argument("make_delay_system: need one coefficient per delay");
  if (delays.front() != 0)
    throw std::invalid_argument("make_delay_system: first delay must be 0");
  for (std::size_t l = 1; l < delays.size(); ++l)
    if (delays[l] <= delays[l - 1])
      throw std::invalid_argument("make_delay_system: delays must be strictly increasing");
  const Eigen::Index n = coeffs.front().rows();
  for (const auto& F : coeffs)
    if (F.rows() != n || F.cols() != n)
      throw std::invalid_argument("make_delay_system: all coefficients must be n x n");
  DelaySystem sys;
  sys.dim = static_cast<int>(n);
  sys.delays = std::move(delays);
  sys.coeffs = std::move(coeffs);
  return sys;
}

LiftedSystem lift(const DelaySystem& sys) {
  const int n = sys.dim;
  const int tau = sys.delays.back();
  const int dim = n * (tau + 1);
  LiftedSystem out;
  out.base_dim = n;
  out.max_delay = tau;
  out.augmented = Eigen::MatrixXd::Zero(dim, dim);
  for (std::size_t l = 0; l < sys.delays.size(); ++l)
    out.augmented.block(0, n * sys.delays[l], n, n) = sys.coeffs[l];
  for (int k = 1; k <= tau; ++k)
    out.augmented.block(n * k, n * (k - 1), n, n).setIdentity();
  return out;
}

StabilityResult is_exponentially_stable(const DelaySystem& sys) {
  StabilityResult res;
  res.radius = spectral_radius(lift(sys).augmented);
  res.verdict = classify_radius(res.radius);
  res.stable = res.verdict == Stability::Stable;
  return res;
}

namespace {

DelaySystem loop_system(const Eigen::MatrixXd& A, const std::vector<DelayTerm>& terms) {
  if (A.rows() != A.cols()) throw std::invalid_argument("char_poly_roots: A must be square");
  const Eigen::Index n = A.rows();
  std::vector<int> delays{0};
  for (const auto& t : terms) {
    if (t.delay < 0) throw std::invalid_argument("char_poly_roots: negative delay");
    if (t.gain.rows() != n || t.gain.cols() != n)
      throw std::invalid_argument("char_poly_roots: gain dimension mismatch");
    if (t.delay != 0 && std::find(delays.begin(), delays.end(), t.delay) == delays.end())
      delays.push_back(t.delay);
  }
  std::sort(delays.begin(), delays.end());
  std::vector<Eigen::MatrixXd> coeffs(delays.size(), Eigen::MatrixXd::Zero(n, n));
  coeffs[0] = A;
  for (const auto& t : terms) {
    const auto it = std::find(delays.begin(), delays.end(), t.delay);
    coeffs[static_cast<std::size_t>(it - delays.begin())] += t.gain;
  }
  return make_delay_system(std::move(delays), std::move(coeffs));
}

}  // namespace

CharPolyRoots char_poly_roots(const Eigen::MatrixXd& A, const std::vector<DelayTerm>& terms) {
  const DelaySystem sys = loop_system(A, terms);
  const Eigen::VectorXcd ev = eigenvalues(lift(sys).augmented);
  const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());

  CharPolyRoots out;
  out.all = ev;
  out.cleared = sys.delays.back() > 0;
  std::vector<std::complex<double>> nz;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (std::abs(ev(i)) <= 1e-9 * scale && out.cleared)
      ++out.artifact_count;
    else
      nz.push_back(ev(i));
  }
  out.nonzero.resize(static_cast<Eigen::Index>(nz.size()));
  for (std::size_t i = 0; i < nz.size(); ++i) out.nonzero(static_cast<Eigen::Index>(i)) = nz[i];
  return out;
}

std::complex<double> char_poly_eval(const Eigen::MatrixXd& A, const std::vector<DelayTerm>& terms,
                                    std::complex<double> z) {
  const DelaySystem sys = loop_system(A, terms);
  const int n = sys.dim;
  const int r = sys.delays.back();
  // Integer powers by repeated multiplication: std::pow(complex, int) goes
  // through exp/log and returns NaN at z = 0.
  const auto zpow = [&](int k) {
    std::complex<double> out(1.0, 0.0);
    for (int i = 0; i < k; ++i) out *= z;
    return out;
  };
  // z^(n*r) det(zI - A - sum F_l z^(-d_l)) = det(z^(r+1) I - sum F_l z^(r - d_l))
  Eigen::MatrixXcd M = zpow(r + 1) * Eigen::MatrixXcd::Identity(n, n);
  for (std::size_t l = 0; l < sys.delays.size(); ++l)
    M -= zpow(r - sys.delays[l]) * sys.coeffs[l].cast<std::complex<double>>();
  return Eigen::FullPivLU<Eigen::MatrixXcd>(M).determinant();
}

std::optional<double> match_root_multisets(const Eigen::VectorXcd& a, const Eigen::VectorXcd& b,
                                           double tol) {
  if (a.size() != b.size()) return std::nullopt;
  std::vector<std::complex<double>> rem(b.data(), b.data() + b.size());
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < rem.size(); ++j) {
      const double d = std::abs(a(i) - rem[j]);
      if (d < best_d) {
        best_d = d;
        best = j;
      }
    }
    if (rem.empty() || best_d > tol) return std::nullopt;
    worst = std::max(worst, best_d);
    rem.erase(rem.begin() + static_cast<std::ptrdiff_t>(best));
  }
  return worst;
}

CascadeCheck factored_char_poly_check(const std::vector<int>& delays,
                                      const std::vector<Eigen::MatrixXd>& F,
                                      const std::vector<Eigen::MatrixXd>& G,
                                      const std::vector<Eigen::MatrixXd>& H) {
  if (F.size() != delays.size() || G.size() != delays.size() || H.size() != delays.size())
    throw std::invalid_argument("factored_char_poly_check: one block triple per delay");
  const Eigen::Index n = F.front().rows();
  const Eigen::Index m = H.front().rows();
  std::vector<Eigen::MatrixXd> cascade(delays.size());
  for (std::size_t l = 0; l < delays.size(); ++l) {
    if (G[l].rows() != n || G[l].cols() != m)
      throw std::invalid_argument("factored_char_poly_check: coupling block dimension mismatch");
    Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + m, n + m);
    M.topLeftCorner(n, n) = F[l];
    M.topRightCorner(n, m) = G[l];
    M.bottomRightCorner(m, m) = H[l];
    cascade[l] = M;
  }
  const DelaySystem full = make_delay_system(delays, cascade);
  const DelaySystem top = make_delay_system(delays, F);
  const DelaySystem bottom = make_delay_system(delays, H);

  const Eigen::VectorXcd roots_full = eigenvalues(lift(full).augmented);
  const Eigen::VectorXcd roots_top = eigenvalues(lift(top).augmented);
  const Eigen::VectorXcd roots_bottom = eigenvalues(lift(bottom).augmented);
  Eigen::VectorXcd roots_union(roots_top.size() + roots_bottom.size());
  roots_union << roots_top, roots_bottom;

  CascadeCheck out;
  const auto match = match_root_multisets(roots_full, roots_union, 1e-6);
  out.factorization_holds = match.has_value();
  out.max_match_distance = match.value_or(std::numeric_limits<double>::infinity());
  out.radius = roots_full.size() ? roots_full.cwiseAbs().maxCoeff() : 0.0;
  out.stable = classify_radius(out.radius) == Stability::Stable;
  return out;
}

}  // namespace coopreg
