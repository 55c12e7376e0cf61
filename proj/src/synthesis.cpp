#include "coopreg/synthesis.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <random>
#include <sstream>

namespace coopreg {

namespace {

void require(bool cond, const std::string& msg) {
  if (!cond) throw std::invalid_argument(msg);
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

void AgentPlant::validate() const {
  require(!delays.empty() && delays.front() == 0, "plant: delays must start at 0");
  for (std::size_t l = 1; l < delays.size(); ++l)
    require(delays[l] > delays[l - 1], "plant: delays must be strictly increasing");
  require(A.rows() == A.cols() && A.rows() > 0, "plant: A must be square");
  require(B.size() == delays.size(), "plant: one B block per delay");
  require(D.size() == delays.size(), "plant: one D block per delay");
  require(Dm.size() == delays.size(), "plant: one Dm block per delay");
  const int nn = n(), mm = m(), pp = p(), pmm = pm(), qq = q(), ss = s();
  require(Q.rows() == Q.cols(), "plant: Q must be square");
  for (const auto& Bl : B) require(Bl.rows() == nn && Bl.cols() == mm, "plant: B block shape");
  for (const auto& Dl : D) require(Dl.rows() == pp && Dl.cols() == mm, "plant: D block shape");
  for (const auto& Dl : Dm) require(Dl.rows() == pmm && Dl.cols() == mm, "plant: Dm block shape");
  require(Ex.rows() == nn && Ex.cols() == qq, "plant: Ex shape");
  require(Ew.rows() == nn && Ew.cols() == ss, "plant: Ew shape");
  require(C.cols() == nn, "plant: C shape");
  require(Fx.rows() == pp && Fx.cols() == qq, "plant: Fx shape");
  require(Fw.rows() == pp && Fw.cols() == ss, "plant: Fw shape");
  require(Cm.cols() == nn, "plant: Cm shape");
  require(Fxm.rows() == pmm && Fxm.cols() == qq, "plant: Fxm shape");
  require(Fwm.rows() == pmm && Fwm.cols() == ss, "plant: Fwm shape");
}

Eigen::MatrixXd composite_system_matrix(const AgentPlant& agent) {
  const int n = agent.n(), s = agent.s();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n + s, n + s);
  M.topLeftCorner(n, n) = agent.A;
  M.topRightCorner(n, s) = agent.Ew;
  M.bottomRightCorner(s, s) = agent.Q;
  return M;
}

Eigen::MatrixXd composite_output_matrix(const AgentPlant& agent) {
  Eigen::MatrixXd Cc(agent.pm(), agent.n() + agent.s());
  Cc << agent.Cm, agent.Fwm;
  return Cc;
}

namespace {

DelaySystem feedback_loop(const AgentPlant& agent, const Eigen::MatrixXd& K1) {
  std::vector<Eigen::MatrixXd> coeffs(agent.delays.size());
  coeffs[0] = agent.A + agent.B[0] * K1;
  for (std::size_t l = 1; l < agent.delays.size(); ++l) coeffs[l] = agent.B[l] * K1;
  return make_delay_system(agent.delays, std::move(coeffs));
}

}  // namespace

K1Certificate verify_k1(const AgentPlant& agent, const Eigen::MatrixXd& K1) {
  require(K1.rows() == agent.m() && K1.cols() == agent.n(), "verify_k1: gain must be m x n");
  const StabilityResult res = is_exponentially_stable(feedback_loop(agent, K1));
  return {res.stable, res.radius};
}

namespace {

// Iterative discrete Riccati; returns the gain G with A - B G stable when the
// iteration converges, nullopt otherwise. Candidate generator only.
std::optional<Eigen::MatrixXd> dlqr_gain(const Eigen::MatrixXd& A, const Eigen::MatrixXd& B,
                                         double control_weight) {
  const Eigen::Index n = A.rows(), m = B.cols();
  if (B.norm() == 0.0) return std::nullopt;
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(n, n);
  const Eigen::MatrixXd R = control_weight * Eigen::MatrixXd::Identity(m, m);
  for (int it = 0; it < 10000; ++it) {
    const Eigen::MatrixXd S = R + B.transpose() * P * B;
    const Eigen::MatrixXd G = S.ldlt().solve(B.transpose() * P * A);
    const Eigen::MatrixXd Pn =
        A.transpose() * P * A - A.transpose() * P * B * G + Eigen::MatrixXd::Identity(n, n);
    const double diff = (Pn - P).norm();
    P = 0.5 * (Pn + Pn.transpose());
    if (!P.allFinite() || P.norm() > 1e14) return std::nullopt;
    if (diff < 1e-12 * (1.0 + P.norm())) break;
  }
  const Eigen::MatrixXd S = R + B.transpose() * P * B;
  return Eigen::MatrixXd(S.ldlt().solve(B.transpose() * P * A));
}

}  // namespace

std::optional<Eigen::MatrixXd> search_k1(const AgentPlant& agent, int budget, unsigned seed) {
  const int n = agent.n(), m = agent.m();
  int evals = 0;
  double best_radius = std::numeric_limits<double>::infinity();
  Eigen::MatrixXd best = Eigen::MatrixXd::Zero(m, n);

  const auto radius_of = [&](const Eigen::MatrixXd& K) {
    ++evals;
    return is_exponentially_stable(feedback_loop(agent, K)).radius;
  };
  const auto consider = [&](const Eigen::MatrixXd& K) {
    const double r = radius_of(K);
    if (r < best_radius) {
      best_radius = r;
      best = K;
    }
  };

  consider(Eigen::MatrixXd::Zero(m, n));
  Eigen::MatrixXd B_total = Eigen::MatrixXd::Zero(n, m);
  for (const auto& Bl : agent.B) B_total += Bl;
  for (const auto& B_seed : {agent.B.front(), B_total})
    for (double w : {1.0, 1e-2})
      if (auto G = dlqr_gain(agent.A, B_seed, w)) consider(-*G);

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const double scales[] = {0.1, 0.3, 1.0, 3.0};
  const int random_budget = budget * 3 / 5;
  while (evals < random_budget && best_radius >= 1.0 - kStabilityMargin) {
    Eigen::MatrixXd K(m, n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) K(i, j) = gauss(rng) * scales[evals % 4];
    consider(K);
  }

  // Coordinate refinement of the incumbent with a shrinking step.
  double step = 0.5;
  while (evals + 2 <= budget && step > 1e-6) {
    bool improved = false;
    for (int i = 0; i < m && evals + 2 <= budget; ++i) {
      for (int j = 0; j < n && evals + 2 <= budget; ++j) {
        for (double sgn : {1.0, -1.0}) {
          Eigen::MatrixXd K = best;
          K(i, j) += sgn * step;
          const double r = radius_of(K);
          if (r < best_radius) {
            best_radius = r;
            best = K;
            improved = true;
          }
        }
      }
    }
    if (!improved) step *= 0.5;
  }

  if (best_radius < 1.0 - kStabilityMargin) return best;
  return std::nullopt;
}

DetectabilityReport check_detectability(const AgentPlant& agent) {
  const Eigen::MatrixXd M = composite_system_matrix(agent);
  const Eigen::MatrixXd Cc = composite_output_matrix(agent);
  const Eigen::Index dim = M.rows();

  DetectabilityReport report;
  report.pass = true;
  const Eigen::VectorXcd eigs = eigenvalues(M);
  for (Eigen::Index k = 0; k < eigs.size(); ++k) {
    if (std::abs(eigs(k)) < 1.0 - kStabilityMargin) continue;  // stable modes decay on their own
    Eigen::MatrixXcd pbh(dim + Cc.rows(), dim);
    pbh.topRows(dim) = eigs(k) * Eigen::MatrixXcd::Identity(dim, dim) -
                       M.cast<std::complex<double>>();
    pbh.bottomRows(Cc.rows()) = Cc.cast<std::complex<double>>();
    EigenvalueRank e;
    e.z = eigs(k);
    e.required = static_cast<int>(dim);
    e.rank = numerical_rank(pbh);
    e.pass = e.rank == e.required;
    report.pass = report.pass && e.pass;
    report.per_eigenvalue.push_back(e);
  }
  return report;
}

EstimatorGain design_l(const AgentPlant& agent) {
  const Eigen::MatrixXd M = composite_system_matrix(agent);
  const Eigen::MatrixXd Cc = composite_output_matrix(agent);
  const Eigen::Index dim = M.rows();
  const Eigen::Index pm = Cc.rows();

  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(dim, dim);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(dim, pm);
  int it = 0;
  for (; it < 10000; ++it) {
    const Eigen::MatrixXd S = Cc * P * Cc.transpose() + Eigen::MatrixXd::Identity(pm, pm);
    const Eigen::MatrixXd Ln = (S.ldlt().solve(Cc * P * M.transpose())).transpose();
    const Eigen::MatrixXd Pn =
        M * P * M.transpose() - Ln * Cc * P * M.transpose() + Eigen::MatrixXd::Identity(dim, dim);
    const double change = (Ln - L).norm() / (1.0 + Ln.norm());
    L = Ln;
    P = 0.5 * (Pn + Pn.transpose());
    if (!P.allFinite()) {
      std::ostringstream msg;
      msg << "design_l: Riccati iteration diverged at iteration " << it;
      throw std::runtime_error(msg.str());
    }
    if (change < 1e-10) break;
  }

  EstimatorGain out;
  out.L = L;
  out.iterations = it;
  out.radius = spectral_radius(M - L * Cc);
  if (out.radius >= 1.0 - kStabilityMargin) {
    std::ostringstream msg;
    msg << "design_l: post-check failed, estimator radius " << out.radius << " after " << it
        << " iterations";
    throw std::runtime_error(msg.str());
  }
  return out;
}

ControllerRealization assemble_controller(const AgentPlant& agent, const Eigen::MatrixXd& X,
                                          const Eigen::MatrixXd& U, const Eigen::MatrixXd& K1,
                                          const Eigen::MatrixXd& L, double mu,
                                          const Eigen::MatrixXd& S0, const HMatrix& H) {
  ControllerRealization ctrl;
  ctrl.K1 = K1;
  ctrl.L = L;
  ctrl.mu = mu;

  const K1Certificate k1cert = verify_k1(agent, K1);
  ctrl.k1_radius = k1cert.radius;
  if (!k1cert.stable) {
    std::ostringstream msg;
    msg << "assumption A1 (stabilizing state feedback) violated: lifted radius " << k1cert.radius;
    throw AssumptionViolation("A1", msg.str());
  }

  ctrl.estimator_radius =
      spectral_radius(composite_system_matrix(agent) - L * composite_output_matrix(agent));
  if (ctrl.estimator_radius >= 1.0 - kStabilityMargin) {
    std::ostringstream msg;
    msg << "assumption A2 (detectable estimator) violated: radius " << ctrl.estimator_radius;
    throw AssumptionViolation("A2", msg.str());
  }

  ctrl.observer_radius = spectral_radius(observer_matrix(S0, H, mu));
  if (ctrl.observer_radius >= 1.0 - kStabilityMargin) {
    std::ostringstream msg;
    msg << "observer gain mu=" << mu << " is not Schur: radius " << ctrl.observer_radius;
    throw AssumptionViolation("observer", msg.str());
  }

  const int q = agent.q(), s = agent.s();
  const Eigen::MatrixXd K2 = U - K1 * X;
  require(K2.cols() == q + s, "assemble_controller: K2 must have q+s columns");
  ctrl.K2x = K2.leftCols(q);
  ctrl.K2w = K2.rightCols(s);
  return ctrl;
}

}  // namespace coopreg
