#include <gtest/gtest.h>

#include <cmath>

#include "formation/topology.hpp"

using namespace formation;

namespace {

Topology chain4() {
  Topology t;
  t.adjacency = {{0, 1, 0, 0}, {1, 0, 1, 0}, {0, 1, 0, 1}, {0, 0, 1, 0}};
  t.leader_links = {1, 0, 0, 0};
  return t;
}

// Connected components of the follower graph, each must contain a leader link
// for H to be positive definite.
bool every_component_hears_leader(const Topology& t) {
  const std::size_t n = t.size();
  std::vector<int> comp(n, -1);
  int c = 0;
  for (std::size_t s = 0; s < n; ++s) {
    if (comp[s] >= 0) continue;
    std::vector<std::size_t> stack{s};
    comp[s] = c;
    while (!stack.empty()) {
      const std::size_t u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < n; ++v)
        if (t.adjacency[u][v] && comp[v] < 0) {
          comp[v] = c;
          stack.push_back(v);
        }
    }
    ++c;
  }
  for (int k = 0; k < c; ++k) {
    bool heard = false;
    for (std::size_t i = 0; i < n; ++i) heard |= comp[i] == k && t.leader_links[i];
    if (!heard) return false;
  }
  return true;
}

}  // namespace

TEST(Topology, ChainMatrices) {
  const GraphMatrices gm = build_matrices(chain4());
  Eigen::MatrixXd expected_l(4, 4);
  expected_l << 1, -1, 0, 0, -1, 2, -1, 0, 0, -1, 2, -1, 0, 0, -1, 1;
  EXPECT_TRUE(gm.laplacian.isApprox(expected_l));
  Eigen::MatrixXd expected_h = expected_l;
  expected_h(0, 0) += 1.0;
  EXPECT_TRUE(gm.h_matrix.isApprox(expected_h));
}

TEST(Topology, ChainSmallestEigenvalueMatchesClosedForm) {
  // Path graph grounded at one end: lambda_min = 2 - 2 cos(pi / (2n + 1)).
  EXPECT_NEAR(min_eigenvalue_h(build_matrices(chain4())), 0.12061475842818316, 1e-12);
}

TEST(Topology, LaplacianAnnihilatesOnes) {
  for (unsigned mask = 0; mask < 64; ++mask) {
    Topology t;
    t.adjacency.assign(4, std::vector<int>(4, 0));
    t.leader_links = {1, 0, 0, 0};
    int bit = 0;
    for (int i = 0; i < 4; ++i)
      for (int j = i + 1; j < 4; ++j, ++bit)
        t.adjacency[i][j] = t.adjacency[j][i] = (mask >> bit) & 1;
    const GraphMatrices gm = build_matrices(t);
    EXPECT_LT((gm.laplacian * Eigen::VectorXd::Ones(4)).norm(), 1e-15);
  }
}

TEST(Topology, ValidityMatchesPositiveDefinitenessExhaustively) {
  for (std::size_t n = 1; n <= 4; ++n) {
    const std::size_t pairs = n * (n - 1) / 2;
    for (unsigned edges = 0; edges < (1u << pairs); ++edges)
      for (unsigned leaders = 0; leaders < (1u << n); ++leaders) {
        Topology t;
        t.adjacency.assign(n, std::vector<int>(n, 0));
        t.leader_links.assign(n, 0);
        int bit = 0;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = i + 1; j < n; ++j, ++bit)
            t.adjacency[i][j] = t.adjacency[j][i] = (edges >> bit) & 1;
        for (std::size_t i = 0; i < n; ++i) t.leader_links[i] = (leaders >> i) & 1;

        const bool pd = is_positive_definite(min_eigenvalue_h(build_matrices(t)));
        const bool valid = is_valid_for_estimation(t).valid;
        EXPECT_EQ(pd, every_component_hears_leader(t)) << "n=" << n << " edges=" << edges << " leaders=" << leaders;
        if (valid) {
          EXPECT_TRUE(pd);
        }
        if (!pd) {
          EXPECT_FALSE(valid);
        }
      }
  }
}

TEST(Topology, Diagnostics) {
  Topology t = chain4();
  t.leader_links = {0, 0, 0, 0};
  const auto check = is_valid_for_estimation(t);
  EXPECT_FALSE(check.valid);
  EXPECT_FALSE(check.diagnostic.empty());

  Topology split = chain4();
  split.adjacency[1][2] = split.adjacency[2][1] = 0;
  EXPECT_FALSE(is_valid_for_estimation(split).valid);
}

TEST(Topology, ValidateRejectsAsymmetry) {
  Topology t = chain4();
  t.adjacency[0][1] = 0;
  try {
    t.validate();
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_EQ(e.field(), "topology.adjacency");
  }
}

TEST(Topology, ValidateRejectsSelfLoopAndBadLeaderLinks) {
  Topology t = chain4();
  t.adjacency[2][2] = 1;
  EXPECT_THROW(t.validate(), ConfigError);
  Topology u = chain4();
  u.leader_links = {1, 0};
  EXPECT_THROW(u.validate(), ConfigError);
}
