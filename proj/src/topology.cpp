#include "coopreg/topology.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>

namespace coopreg {

Network make_network(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols() || adjacency.rows() < 2)
    throw std::invalid_argument("network: adjacency must be (N+1) x (N+1) with N >= 1");
  for (Eigen::Index i = 0; i < adjacency.rows(); ++i) {
    for (Eigen::Index j = 0; j < adjacency.cols(); ++j) {
      const double a = adjacency(i, j);
      if (!std::isfinite(a)) throw std::invalid_argument("network: weights must be finite");
      if (a < 0.0) throw std::invalid_argument("network: weights must be nonnegative");
    }
    if (adjacency(i, i) != 0.0)
      throw std::invalid_argument("network: diagonal must be zero (no self loops)");
  }
  Network net;
  net.n_followers = static_cast<int>(adjacency.rows()) - 1;
  net.adjacency = adjacency;
  return net;
}

ConnectivityResult check_connectivity(const Network& net) {
  const int N = net.n_followers;
  std::vector<bool> seen(static_cast<std::size_t>(N) + 1, false);
  seen[0] = true;
  std::deque<int> frontier{0};
  while (!frontier.empty()) {
    const int j = frontier.front();
    frontier.pop_front();
    for (int i = 1; i <= N; ++i) {
      if (!seen[static_cast<std::size_t>(i)] && net.adjacency(i, j) > 0.0) {
        seen[static_cast<std::size_t>(i)] = true;
        frontier.push_back(i);
      }
    }
  }
  ConnectivityResult res;
  for (int i = 1; i <= N; ++i)
    if (!seen[static_cast<std::size_t>(i)]) res.unreachable.push_back(i);
  res.connected = res.unreachable.empty();
  return res;
}

namespace {

// Kahn topological check of the follower-to-follower subgraph (edge j -> i
// iff a_ij > 0, i,j >= 1). Acyclic means a permutation triangularizes H.
bool follower_subgraph_acyclic(const Network& net) {
  const int N = net.n_followers;
  std::vector<int> indegree(static_cast<std::size_t>(N) + 1, 0);
  for (int i = 1; i <= N; ++i)
    for (int j = 1; j <= N; ++j)
      if (net.adjacency(i, j) > 0.0) ++indegree[static_cast<std::size_t>(i)];
  std::deque<int> ready;
  for (int i = 1; i <= N; ++i)
    if (indegree[static_cast<std::size_t>(i)] == 0) ready.push_back(i);
  int emitted = 0;
  while (!ready.empty()) {
    const int j = ready.front();
    ready.pop_front();
    ++emitted;
    for (int i = 1; i <= N; ++i) {
      if (net.adjacency(i, j) > 0.0 && --indegree[static_cast<std::size_t>(i)] == 0)
        ready.push_back(i);
    }
  }
  return emitted == N;
}

}  // namespace

HMatrix build_h_matrix(const Network& net) {
  const int N = net.n_followers;
  HMatrix out;
  out.entries = Eigen::MatrixXd::Zero(N, N);
  for (int i = 1; i <= N; ++i) {
    out.entries(i - 1, i - 1) = net.adjacency.row(i).sum();
    for (int j = 1; j <= N; ++j)
      if (j != i) out.entries(i - 1, j - 1) = -net.adjacency(i, j);
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(out.entries, /*computeEigenvectors=*/true);
  if (es.info() != Eigen::Success)
    throw std::runtime_error("build_h_matrix: eigensolver did not converge");
  const double h_norm = std::max(out.entries.norm(), 1e-300);
  out.max_residual = 0.0;
  for (int k = 0; k < N; ++k) {
    const Eigen::VectorXcd v = es.eigenvectors().col(k);
    const double resid =
        (out.entries.cast<std::complex<double>>() * v - es.eigenvalues()(k) * v).norm() / h_norm;
    out.max_residual = std::max(out.max_residual, resid);
  }
  if (out.max_residual > 1e-10)
    throw std::runtime_error("build_h_matrix: eigenpair residual certificate failed");

  out.exact_spectrum = follower_subgraph_acyclic(net);
  if (out.exact_spectrum) {
    out.spectrum = out.entries.diagonal().cast<std::complex<double>>();
  } else {
    out.spectrum = es.eigenvalues();
  }
  std::sort(out.spectrum.data(), out.spectrum.data() + out.spectrum.size(),
            [](const std::complex<double>& x, const std::complex<double>& y) {
              return x.real() != y.real() ? x.real() < y.real() : x.imag() < y.imag();
            });
  return out;
}

}  // namespace coopreg
