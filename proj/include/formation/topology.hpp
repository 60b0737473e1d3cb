#pragma once

// Communication graph among followers plus leader links, and the Laplacian /
// leader-augmented matrices derived from it.

#include <cstddef>
#include <queue>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "formation/common.hpp"

namespace formation {

/// Undirected follower graph. adjacency[i][j] = a_ij, leader_links[i] = a_i0.
struct Topology {
  std::vector<std::vector<int>> adjacency;
  std::vector<int> leader_links;

  std::size_t size() const noexcept { return leader_links.size(); }

  /// Neighbors of follower i (0-based).
  std::vector<std::size_t> neighbors(std::size_t i) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < adjacency[i].size(); ++j)
      if (adjacency[i][j] != 0) out.push_back(j);
    return out;
  }

  bool hears_leader(std::size_t i) const { return leader_links[i] != 0; }

  /// Throws ConfigError naming the offending field when an invariant fails.
  void validate() const {
    const std::size_t n = leader_links.size();
    if (n == 0) throw ConfigError("topology.leader_links", "at least one follower is required");
    if (adjacency.size() != n)
      throw ConfigError("topology.adjacency", "expected " + std::to_string(n) + " rows");
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency[i].size() != n)
        throw ConfigError("topology.adjacency", "row " + std::to_string(i) + " must have " +
                                                    std::to_string(n) + " entries");
      if (leader_links[i] != 0 && leader_links[i] != 1)
        throw ConfigError("topology.leader_links", "entries must be 0 or 1");
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (adjacency[i][i] != 0)
        throw ConfigError("topology.adjacency", "diagonal entry " + std::to_string(i) + " must be 0");
      for (std::size_t j = 0; j < n; ++j) {
        const int a = adjacency[i][j];
        if (a != 0 && a != 1) throw ConfigError("topology.adjacency", "entries must be 0 or 1");
        if (a != adjacency[j][i])
          throw ConfigError("topology.adjacency", "matrix is not symmetric at (" + std::to_string(i) +
                                                      "," + std::to_string(j) + ")");
      }
    }
  }
};

struct GraphMatrices {
  Eigen::MatrixXd laplacian;
  Eigen::MatrixXd h_matrix;
  Eigen::VectorXd degrees;  // xi_i = sum_j a_ij + a_i0
};

/// L (off-diagonal -a_ij, diagonal row degree) and H = L + diag(leader_links).
inline GraphMatrices build_matrices(const Topology& topo) {
  topo.validate();
  const auto n = static_cast<Eigen::Index>(topo.size());
  GraphMatrices gm;
  gm.laplacian = Eigen::MatrixXd::Zero(n, n);
  gm.degrees = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double row = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (i == j) continue;
      const double a = topo.adjacency[i][j];
      gm.laplacian(i, j) = -a;
      row += a;
    }
    gm.laplacian(i, i) = row;
    gm.degrees(i) = row + topo.leader_links[i];
  }
  gm.h_matrix = gm.laplacian;
  for (Eigen::Index i = 0; i < n; ++i) gm.h_matrix(i, i) += topo.leader_links[i];
  return gm;
}

struct EstimationCheck {
  bool valid = false;
  std::string diagnostic;
};

/// Followers' graph connected (leader does not mediate) and some follower hears the leader.
inline EstimationCheck is_valid_for_estimation(const Topology& topo) {
  try {
    topo.validate();
  } catch (const ConfigError& e) {
    return {false, e.what()};
  }
  const std::size_t n = topo.size();
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> frontier;
  frontier.push(0);
  seen[0] = true;
  std::size_t reached = 1;
  while (!frontier.empty()) {
    const std::size_t i = frontier.front();
    frontier.pop();
    for (std::size_t j : topo.neighbors(i)) {
      if (!seen[j]) {
        seen[j] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  if (reached != n)
    return {false, "follower graph is disconnected (" + std::to_string(reached) + " of " +
                       std::to_string(n) + " followers reachable from follower 1)"};
  bool any_leader = false;
  for (int a : topo.leader_links) any_leader = any_leader || a != 0;
  if (!any_leader) return {false, "no follower is linked to the leader"};
  return {true, "ok"};
}

/// Smallest eigenvalue of the (symmetric) H matrix.
inline double min_eigenvalue_h(const GraphMatrices& gm) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(gm.h_matrix, Eigen::EigenvaluesOnly);
  return solver.eigenvalues().minCoeff();
}

/// Definiteness classification used with min_eigenvalue_h; |lambda| < 1e-9 counts as zero.
inline constexpr double kEigenZeroTolerance = 1e-9;

inline bool is_positive_definite(double min_eigenvalue) { return min_eigenvalue >= kEigenZeroTolerance; }

}  // namespace formation
