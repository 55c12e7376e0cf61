#pragma once

#include <Eigen/Dense>
#include <random>
#include <vector>

#include "coopreg/spectral.hpp"
#include "coopreg/topology.hpp"

namespace coopreg::testing {

inline Eigen::MatrixXd random_matrix(std::mt19937_64& rng, Eigen::Index rows, Eigen::Index cols,
                                     double scale = 1.0) {
  std::uniform_real_distribution<double> unit(-1.0, 1.0);
  Eigen::MatrixXd M(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) M(i, j) = scale * unit(rng);
  return M;
}

/// Random square matrix rescaled to the requested spectral radius.
inline Eigen::MatrixXd random_with_radius(std::mt19937_64& rng, Eigen::Index n, double radius) {
  Eigen::MatrixXd M = random_matrix(rng, n, n);
  const double r = spectral_radius(M);
  if (r > 0.0) M *= radius / r;
  return M;
}

inline Eigen::VectorXd random_vector(std::mt19937_64& rng, Eigen::Index n) {
  return random_matrix(rng, n, 1);
}

/// Plain delay recursion, the independent oracle for the lifting.
inline std::vector<Eigen::VectorXd> simulate_delay_recursion(
    const DelaySystem& sys, const std::vector<Eigen::VectorXd>& history, int steps) {
  // history holds x(-tau) .. x(0), oldest first.
  std::vector<Eigen::VectorXd> x(history.begin(), history.end());
  for (int t = 0; t < steps; ++t) {
    Eigen::VectorXd next = Eigen::VectorXd::Zero(sys.dim);
    const std::size_t now = x.size() - 1;
    for (std::size_t l = 0; l < sys.delays.size(); ++l)
      next += sys.coeffs[l] * x[now - static_cast<std::size_t>(sys.delays[l])];
    x.push_back(next);
  }
  return x;
}

/// Random digraph over N followers where every follower is reachable from
/// the leader: a random arborescence rooted at 0 plus extra random edges.
inline Network random_connected_network(std::mt19937_64& rng, int n_followers,
                                        int extra_edges = 3) {
  std::uniform_real_distribution<double> weight(0.2, 2.0);
  std::uniform_int_distribution<int> any_node(0, n_followers);
  Eigen::MatrixXd adj = Eigen::MatrixXd::Zero(n_followers + 1, n_followers + 1);
  for (int i = 1; i <= n_followers; ++i) {
    std::uniform_int_distribution<int> parent(0, i - 1);
    adj(i, parent(rng)) = weight(rng);
  }
  for (int k = 0; k < extra_edges; ++k) {
    const int i = std::uniform_int_distribution<int>(1, n_followers)(rng);
    const int j = any_node(rng);
    if (i != j) adj(i, j) = weight(rng);
  }
  return make_network(adj);
}

/// Brute-force observer-gain check: true iff (I - mu H) ⊗ S0 is Schur.
inline bool observer_stable_at(const Eigen::MatrixXd& S0, const HMatrix& H, double mu) {
  const Eigen::Index N = H.entries.rows();
  const Eigen::MatrixXd M = Eigen::MatrixXd::Identity(N, N) - mu * H.entries;
  Eigen::MatrixXd big = Eigen::MatrixXd::Zero(N * S0.rows(), N * S0.cols());
  for (Eigen::Index i = 0; i < N; ++i)
    for (Eigen::Index j = 0; j < N; ++j)
      big.block(i * S0.rows(), j * S0.cols(), S0.rows(), S0.cols()) = M(i, j) * S0;
  return spectral_radius(big) < 1.0;
}

}  // namespace coopreg::testing
