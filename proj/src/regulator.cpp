#include "coopreg/regulator.hpp"

#include <Eigen/SVD>
#include <stdexcept>

#include "coopreg/kron.hpp"
#include "coopreg/spectral.hpp"

namespace coopreg {

namespace {

// Sbar^0 .. Sbar^(r+1) by repeated multiplication; delays are small integers
// and this avoids eigendecompositions of possibly defective generators.
std::vector<Eigen::MatrixXd> powers(const Eigen::MatrixXd& Sbar, int top) {
  std::vector<Eigen::MatrixXd> P;
  P.reserve(static_cast<std::size_t>(top) + 1);
  P.push_back(Eigen::MatrixXd::Identity(Sbar.rows(), Sbar.cols()));
  for (int k = 1; k <= top; ++k) P.push_back(P.back() * Sbar);
  return P;
}

// Integer power by repeated multiplication; std::pow(complex, int) goes
// through exp/log and returns NaN at z = 0.
std::complex<double> cpow_int(std::complex<double> z, int k) {
  std::complex<double> out(1.0, 0.0);
  for (int i = 0; i < k; ++i) out *= z;
  return out;
}

int numerical_rank(const Eigen::MatrixXcd& M) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  const auto& sv = svd.singularValues();
  if (sv.size() == 0) return 0;
  const double thresh = 1e-9 * sv(0);
  int rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i)
    if (sv(i) > thresh) ++rank;
  return rank;
}

}  // namespace

CompositeExo make_composite_exo(const Eigen::MatrixXd& S0, const AgentPlant& agent) {
  CompositeExo exo;
  exo.q = static_cast<int>(S0.rows());
  exo.s = agent.s();
  exo.Sbar = Eigen::MatrixXd::Zero(exo.q + exo.s, exo.q + exo.s);
  exo.Sbar.topLeftCorner(exo.q, exo.q) = S0;
  exo.Sbar.bottomRightCorner(exo.s, exo.s) = agent.Q;
  exo.E.resize(agent.n(), exo.q + exo.s);
  exo.E << agent.Ex, agent.Ew;
  exo.F.resize(agent.p(), exo.q + exo.s);
  exo.F << agent.Fx, agent.Fw;
  return exo;
}

RankReport rank_condition(const AgentPlant& agent, const CompositeExo& exo) {
  const int n = agent.n(), m = agent.m(), p = agent.p();
  const int r = agent.max_delay();

  // Spectrum of the block diagonal Sbar = union of the block spectra.
  Eigen::VectorXcd zs(exo.q + exo.s);
  zs << eigenvalues(exo.Sbar.topLeftCorner(exo.q, exo.q)),
      eigenvalues(exo.Sbar.bottomRightCorner(exo.s, exo.s));

  RankReport report;
  report.pass = true;
  for (Eigen::Index k = 0; k < zs.size(); ++k) {
    const std::complex<double> z = zs(k);
    Eigen::MatrixXcd M = Eigen::MatrixXcd::Zero(n + p, n + m);
    M.topLeftCorner(n, n) = cpow_int(z, r) * agent.A.cast<std::complex<double>>() -
                            cpow_int(z, r + 1) * Eigen::MatrixXcd::Identity(n, n);
    M.bottomLeftCorner(p, n) = cpow_int(z, r) * agent.C.cast<std::complex<double>>();
    for (std::size_t l = 0; l < agent.delays.size(); ++l) {
      const std::complex<double> zl = cpow_int(z, r - agent.delays[l]);
      M.topRightCorner(n, m) += zl * agent.B[l].cast<std::complex<double>>();
      M.bottomRightCorner(p, m) += zl * agent.D[l].cast<std::complex<double>>();
    }
    EigenvalueRank e;
    e.z = z;
    e.required = n + p;
    e.rank = numerical_rank(M);
    e.pass = e.rank == e.required;
    report.pass = report.pass && e.pass;
    report.per_eigenvalue.push_back(e);
  }
  return report;
}

double regulator_residual(const AgentPlant& agent, const CompositeExo& exo,
                          const Eigen::MatrixXd& X, const Eigen::MatrixXd& U) {
  const int r = agent.max_delay();
  const auto P = powers(exo.Sbar, r + 1);
  Eigen::MatrixXd eq1 = X * P[static_cast<std::size_t>(r) + 1] - agent.A * X * P[static_cast<std::size_t>(r)] -
                        exo.E * P[static_cast<std::size_t>(r)];
  Eigen::MatrixXd eq2 = agent.C * X * P[static_cast<std::size_t>(r)] + exo.F * P[static_cast<std::size_t>(r)];
  for (std::size_t l = 0; l < agent.delays.size(); ++l) {
    const auto& Pk = P[static_cast<std::size_t>(r - agent.delays[l])];
    eq1 -= agent.B[l] * U * Pk;
    eq2 += agent.D[l] * U * Pk;
  }
  return eq1.norm() + eq2.norm();
}

namespace {

RegulatorSolution finish_solution(const AgentPlant& agent, const CompositeExo& exo,
                                  const Eigen::MatrixXd& K, const Eigen::VectorXd& rhs) {
  const int n = agent.n(), m = agent.m();
  const int qs = exo.q + exo.s;

  Eigen::BDCSVD<Eigen::MatrixXd> svd(K, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd sol = svd.solve(rhs);

  RegulatorSolution out;
  out.X = Eigen::Map<const Eigen::MatrixXd>(sol.data(), n, qs);
  out.U = Eigen::Map<const Eigen::MatrixXd>(sol.data() + n * qs, m, qs);
  out.residual = regulator_residual(agent, exo, out.X, out.U);
  out.tolerance = 1e-8 * (1.0 + std::hypot(K.norm(), rhs.norm()));
  out.ok = out.residual <= out.tolerance;
  return out;
}

}  // namespace

RegulatorSolution solve_regulator(const AgentPlant& agent, const CompositeExo& exo) {
  const int n = agent.n(), m = agent.m(), p = agent.p();
  const int qs = exo.q + exo.s;
  const int r = agent.max_delay();
  const auto P = powers(exo.Sbar, r + 1);

  const auto In = Eigen::MatrixXd::Identity(n, n);
  const int rows = (n + p) * qs;
  const int cols = (n + m) * qs;
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero(rows, cols);
  Eigen::VectorXd rhs(rows);

  // Unknowns stacked as [vec(X); vec(U)].
  K.topLeftCorner(n * qs, n * qs) =
      kron(P[static_cast<std::size_t>(r) + 1].transpose(), In) -
      kron(P[static_cast<std::size_t>(r)].transpose(), agent.A);
  K.bottomLeftCorner(p * qs, n * qs) = kron(P[static_cast<std::size_t>(r)].transpose(), agent.C);
  for (std::size_t l = 0; l < agent.delays.size(); ++l) {
    const Eigen::MatrixXd Pt = P[static_cast<std::size_t>(r - agent.delays[l])].transpose();
    K.block(0, n * qs, n * qs, m * qs) -= kron(Pt, agent.B[l]);
    K.block(n * qs, n * qs, p * qs, m * qs) += kron(Pt, agent.D[l]);
  }
  rhs.head(n * qs) = vec(exo.E * P[static_cast<std::size_t>(r)]);
  rhs.tail(p * qs) = -vec(exo.F * P[static_cast<std::size_t>(r)]);

  return finish_solution(agent, exo, K, rhs);
}

RegulatorSolution delay_free_regulator(const AgentPlant& agent, const CompositeExo& exo) {
  if (agent.delays.size() != 1 || agent.delays.front() != 0)
    throw std::invalid_argument("delay_free_regulator: plant must have the single delay 0");
  const int n = agent.n(), m = agent.m(), p = agent.p();
  const int qs = exo.q + exo.s;

  const auto In = Eigen::MatrixXd::Identity(n, n);
  const auto Iqs = Eigen::MatrixXd::Identity(qs, qs);
  Eigen::MatrixXd K = Eigen::MatrixXd::Zero((n + p) * qs, (n + m) * qs);
  K.topLeftCorner(n * qs, n * qs) = kron(exo.Sbar.transpose(), In) - kron(Iqs, agent.A);
  K.topRightCorner(n * qs, m * qs) = -kron(Iqs, agent.B.front());
  K.bottomLeftCorner(p * qs, n * qs) = kron(Iqs, agent.C);
  K.bottomRightCorner(p * qs, m * qs) = kron(Iqs, agent.D.front());

  Eigen::VectorXd rhs((n + p) * qs);
  rhs.head(n * qs) = vec(exo.E);
  rhs.tail(p * qs) = -vec(exo.F);

  return finish_solution(agent, exo, K, rhs);
}

}  // namespace coopreg
