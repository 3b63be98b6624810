#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "vpp/mrf.hpp"

using namespace vpp;
using Catch::Approx;

namespace {

PairwiseMRF make_mrf(const Graph& g, int n_actions) {
  PairwiseMRF mrf;
  mrf.graph = g;
  mrf.n_actions = n_actions;
  mrf.node_potentials.assign(g.n_agents, std::vector<double>(n_actions, 0.0));
  for (const auto& e : g.edges) mrf.edge_potentials[e] = std::vector<double>(n_actions * n_actions, 0.0);
  return mrf;
}

PairwiseMRF random_mrf(int n_agents, int n_actions, std::mt19937_64& rng, double edge_prob = 0.6) {
  std::set<std::pair<int, int>> es;
  std::uniform_real_distribution<double> unif(-1, 1);
  std::uniform_real_distribution<double> coin(0, 1);
  for (int i = 0; i < n_agents; ++i)
    for (int j = i + 1; j < n_agents; ++j)
      if (coin(rng) < edge_prob) es.insert({i, j});
  PairwiseMRF mrf = make_mrf(Graph::from_edge_set(n_agents, es), n_actions);
  for (auto& row : mrf.node_potentials)
    for (auto& v : row) v = unif(rng);
  for (auto& [e, tab] : mrf.edge_potentials)
    for (auto& v : tab) v = unif(rng);
  return mrf;
}

// the attractive 2-agent example: psi_i = 0, psi_12(a, a') = log 2 if a == a'
PairwiseMRF attractive_pair() {
  PairwiseMRF mrf = make_mrf(Graph::from_edge_set(2, {{0, 1}}), 2);
  mrf.edge_potentials[{0, 1}] = {std::log(2.0), 0.0, 0.0, std::log(2.0)};
  return mrf;
}

}  // namespace

TEST_CASE("single-agent uniform joint", "[mrf]") {
  PairwiseMRF mrf = make_mrf(Graph::from_edge_set(1, {}), 2);
  JointTable jt = brute_force_joint(mrf);
  REQUIRE(jt.probabilities[0] == Approx(0.5).margin(1e-15));
  REQUIRE(jt.probabilities[1] == Approx(0.5).margin(1e-15));
  REQUIRE(jt.log_partition == Approx(std::log(2.0)).margin(1e-14));
}

TEST_CASE("all-zero potentials give the uniform joint", "[mrf]") {
  PairwiseMRF mrf = make_mrf(build_grid(1, 3), 2);
  JointTable jt = brute_force_joint(mrf);
  REQUIRE(jt.n_configs() == 8);
  for (double p : jt.probabilities) REQUIRE(p == Approx(1.0 / 8).margin(1e-14));
}

TEST_CASE("attractive pair joint and marginals", "[mrf]") {
  JointTable jt = brute_force_joint(attractive_pair());
  // configs little-endian in agent id: (0,0), (1,0), (0,1), (1,1)
  REQUIRE(jt.probabilities[jt.encode({0, 0})] == Approx(2.0 / 6).margin(1e-14));
  REQUIRE(jt.probabilities[jt.encode({1, 0})] == Approx(1.0 / 6).margin(1e-14));
  REQUIRE(jt.probabilities[jt.encode({0, 1})] == Approx(1.0 / 6).margin(1e-14));
  REQUIRE(jt.probabilities[jt.encode({1, 1})] == Approx(2.0 / 6).margin(1e-14));
  Marginals m = exact_marginals(jt);
  for (int i = 0; i < 2; ++i)
    for (int a = 0; a < 2; ++a) REQUIRE(m.q[i][a] == Approx(0.5).margin(1e-14));
}

TEST_CASE("exact marginals of uniform and deterministic joints", "[mrf]") {
  PairwiseMRF mrf = make_mrf(build_grid(1, 3), 2);
  JointTable jt = brute_force_joint(mrf);
  Marginals m = exact_marginals(jt);
  for (const auto& row : m.q)
    for (double v : row) REQUIRE(v == Approx(0.5).margin(1e-13));

  // all mass on one configuration -> one-hot marginals
  JointTable det;
  det.n_agents = 3;
  det.n_actions = 2;
  det.probabilities.assign(8, 0.0);
  det.probabilities[det.encode({1, 0, 1})] = 1.0;
  Marginals dm = exact_marginals(det);
  REQUIRE(dm.q[0][1] == 1.0);
  REQUIRE(dm.q[1][0] == 1.0);
  REQUIRE(dm.q[2][1] == 1.0);
}

TEST_CASE("kl of identical factorized distributions is zero", "[mrf]") {
  std::mt19937_64 rng(3);
  PairwiseMRF mrf = random_mrf(3, 3, rng, 0.0);  // no edges -> joint factorizes
  JointTable jt = brute_force_joint(mrf);
  Marginals m = exact_marginals(jt);
  REQUIRE(kl_product_vs_joint(m, jt) == Approx(0.0).margin(1e-12));
}

TEST_CASE("kl of uniform product vs attractive pair matches enumeration", "[mrf]") {
  JointTable jt = brute_force_joint(attractive_pair());
  Marginals uni = Marginals::uniform(2, 2);
  // direct sum over the 4 configurations
  double expect = 0;
  for (long long idx = 0; idx < 4; ++idx) expect += 0.25 * (std::log(0.25) - std::log(jt.probabilities[idx]));
  REQUIRE(kl_product_vs_joint(uni, jt) == Approx(expect).margin(1e-14));
  REQUIRE(expect >= -1e-12);
}

TEST_CASE("kl is nonnegative on random instances", "[mrf]") {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 30; ++trial) {
    PairwiseMRF mrf = random_mrf(3, 2, rng);
    JointTable jt = brute_force_joint(mrf);
    std::uniform_real_distribution<double> unif(0.05, 1.0);
    Marginals q;
    q.q.assign(3, std::vector<double>(2));
    for (auto& row : q.q) {
      double a = unif(rng), b = unif(rng);
      row = {a / (a + b), b / (a + b)};
    }
    REQUIRE(kl_product_vs_joint(q, jt) >= -1e-12);
  }
}

TEST_CASE("kl signals infinite divergence on unsupported states", "[mrf]") {
  JointTable det;
  det.n_agents = 1;
  det.n_actions = 2;
  det.probabilities = {1.0, 0.0};
  det.log_partition = 0.0;
  Marginals q;
  q.q = {{0.5, 0.5}};
  REQUIRE(std::isinf(kl_product_vs_joint(q, det)));
}

TEST_CASE("sampling: determinism and deterministic joints", "[mrf]") {
  JointTable det;
  det.n_agents = 2;
  det.n_actions = 2;
  det.probabilities.assign(4, 0.0);
  det.probabilities[det.encode({1, 0})] = 1.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) REQUIRE(sample_joint(det, seed) == std::vector<int>{1, 0});

  PairwiseMRF mrf = make_mrf(build_grid(1, 3), 2);
  JointTable jt = brute_force_joint(mrf);
  REQUIRE(sample_joint(jt, 99) == sample_joint(jt, 99));
}

TEST_CASE("sample frequencies converge to probabilities", "[mrf]") {
  PairwiseMRF mrf = make_mrf(build_grid(1, 3), 2);
  JointTable jt = brute_force_joint(mrf);
  JointSampler sampler(jt, 2024);
  std::vector<int> counts(8, 0);
  const int n = 80000;
  for (int s = 0; s < n; ++s) ++counts[jt.encode(sampler.draw())];
  for (int idx = 0; idx < 8; ++idx) REQUIRE(std::abs(counts[idx] / double(n) - 0.125) < 0.01);
}

TEST_CASE("zero-edge mrf marginals equal per-agent softmax", "[mrf]") {
  std::mt19937_64 rng(5);
  PairwiseMRF mrf = random_mrf(4, 3, rng, 0.0);
  Marginals m = exact_marginals(brute_force_joint(mrf));
  for (int i = 0; i < 4; ++i) {
    auto expect = softmax(mrf.node_potentials[i]);
    for (int a = 0; a < 3; ++a) REQUIRE(m.q[i][a] == Approx(expect[a]).margin(1e-12));
  }
}

TEST_CASE("joint probabilities are invariant to per-agent constant shifts", "[mrf]") {
  std::mt19937_64 rng(9);
  PairwiseMRF mrf = random_mrf(3, 3, rng);
  JointTable base = brute_force_joint(mrf);
  PairwiseMRF shifted = mrf;
  for (auto& v : shifted.node_potentials[1]) v += 2.5;
  JointTable after = brute_force_joint(shifted);
  for (long long idx = 0; idx < base.n_configs(); ++idx)
    REQUIRE(after.probabilities[idx] == Approx(base.probabilities[idx]).margin(1e-12));
  REQUIRE(after.log_partition == Approx(base.log_partition + 2.5).margin(1e-10));
}

TEST_CASE("enumeration cap fails loudly", "[mrf]") {
  PairwiseMRF mrf = make_mrf(Graph::from_edge_set(30, {}), 4);  // 4^30 >> cap
  REQUIRE_THROWS_AS(brute_force_joint(mrf), capacity_error);
}

TEST_CASE("mrf validation rejects non-finite potentials", "[mrf]") {
  PairwiseMRF mrf = make_mrf(build_grid(1, 2), 2);
  mrf.node_potentials[0][1] = std::numeric_limits<double>::quiet_NaN();
  REQUIRE_THROWS_AS(brute_force_joint(mrf), std::invalid_argument);
}

TEST_CASE("mrf json round trip", "[mrf]") {
  std::mt19937_64 rng(21);
  PairwiseMRF mrf = random_mrf(3, 2, rng, 1.0);
  auto j = mrf_to_json(mrf);
  for (const auto& [key, val] : j["edge_potentials"].items()) {
    auto dash = key.find('-');
    REQUIRE(std::stoi(key.substr(0, dash)) < std::stoi(key.substr(dash + 1)));
  }
  PairwiseMRF back = mrf_from_json(j);
  JointTable a = brute_force_joint(mrf), b = brute_force_joint(back);
  for (long long idx = 0; idx < a.n_configs(); ++idx) REQUIRE(a.probabilities[idx] == b.probabilities[idx]);
}
