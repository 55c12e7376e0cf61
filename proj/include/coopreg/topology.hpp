#pragma once

#include <Eigen/Dense>
#include <vector>

namespace coopreg {

/// Leader-follower digraph over nodes {0..N}, node 0 the leader. Entry
/// adjacency(i, j) is the weight of the edge from j into i; row 0 (edges into
/// the leader) is ignored by every downstream computation.
struct Network {
  int n_followers = 0;
  Eigen::MatrixXd adjacency;  // (N+1) x (N+1), nonnegative, zero diagonal
};

/// Validates shape, zero diagonal, nonnegative finite weights.
Network make_network(const Eigen::MatrixXd& adjacency);

struct ConnectivityResult {
  bool connected = false;
  std::vector<int> unreachable;  // follower indices 1..N not reachable from 0
};

/// Breadth-first search from the leader along directed edges.
ConnectivityResult check_connectivity(const Network& net);

struct HMatrix {
  Eigen::MatrixXd entries;    // N x N: h_ii = sum_j a_ij, h_ij = -a_ij
  Eigen::VectorXcd spectrum;  // sorted by (real, imag)
  double max_residual = 0.0;  // max ||Hv - nu v|| / ||H||_F over eigensolver pairs
  bool exact_spectrum = false;  // follower subgraph acyclic: diagonal read-off
};

/// Builds H from the adjacency and computes its spectrum. When the
/// follower-to-follower subgraph is acyclic a permutation makes H triangular,
/// so the spectrum is exactly the diagonal multiset {h_ii}; otherwise the
/// dense eigensolver result is used. Either way the eigensolver pairs must
/// certify residuals below 1e-10 * ||H||_F.
HMatrix build_h_matrix(const Network& net);

}  // namespace coopreg
