// Pairwise MRF over discrete joint actions, with exact enumeration oracles.
#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "vpp/graph.hpp"

namespace vpp {

inline constexpr long long kEnumerationCap = 1LL << 24;

struct numeric_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct capacity_error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Unnormalized log joint: log pi(a) + log Z = sum_i psi_i(a_i) + sum_{ij in E} psi_ij(a_i, a_j).
// Edge tables are stored once per undirected edge, oriented (i, j) with i < j.
struct PairwiseMRF {
  Graph graph;
  int n_actions = 0;
  std::vector<std::vector<double>> node_potentials;             // [agent][a]
  std::map<std::pair<int, int>, std::vector<double>> edge_potentials;  // [(i,j)][a_i * A + a_j]

  int n_agents() const { return graph.n_agents; }

  double node_pot(int i, int a) const { return node_potentials[i][a]; }

  // psi on the undirected edge {u, v} evaluated at (a_u, a_v); handles orientation.
  double edge_pot(int u, int v, int a_u, int a_v) const {
    if (u < v) return edge_potentials.at({u, v})[a_u * n_actions + a_v];
    return edge_potentials.at({v, u})[a_v * n_actions + a_u];
  }

  void validate() const {
    if (n_actions < 1) throw std::invalid_argument("mrf: n_actions must be >= 1");
    if (static_cast<int>(node_potentials.size()) != n_agents())
      throw std::invalid_argument("mrf: node potential count mismatch");
    for (const auto& row : node_potentials) {
      if (static_cast<int>(row.size()) != n_actions) throw std::invalid_argument("mrf: node potential size");
      for (double v : row)
        if (!std::isfinite(v)) throw std::invalid_argument("mrf: non-finite node potential");
    }
    if (edge_potentials.size() != graph.edges.size()) throw std::invalid_argument("mrf: edge table count mismatch");
    for (const auto& [e, tab] : edge_potentials) {
      if (!graph.has_edge(e.first, e.second) || e.first >= e.second)
        throw std::invalid_argument("mrf: edge table key not an oriented graph edge");
      if (static_cast<int>(tab.size()) != n_actions * n_actions) throw std::invalid_argument("mrf: edge table size");
      for (double v : tab)
        if (!std::isfinite(v)) throw std::invalid_argument("mrf: non-finite edge potential");
    }
  }

  // Unnormalized log mass of one joint configuration.
  double log_score(const std::vector<int>& a) const {
    double s = 0;
    for (int i = 0; i < n_agents(); ++i) s += node_potentials[i][a[i]];
    for (const auto& [e, tab] : edge_potentials) s += tab[a[e.first] * n_actions + a[e.second]];
    return s;
  }
};

// Exact joint over all n_actions^n_agents configurations.
// Configuration index is little-endian in the agent id: a_i = (idx / A^i) % A.
struct JointTable {
  int n_agents = 0;
  int n_actions = 0;
  std::vector<double> probabilities;
  double log_partition = 0;

  long long n_configs() const { return static_cast<long long>(probabilities.size()); }

  std::vector<int> decode(long long idx) const {
    std::vector<int> a(n_agents);
    for (int i = 0; i < n_agents; ++i) {
      a[i] = static_cast<int>(idx % n_actions);
      idx /= n_actions;
    }
    return a;
  }

  long long encode(const std::vector<int>& a) const {
    long long idx = 0;
    for (int i = n_agents - 1; i >= 0; --i) idx = idx * n_actions + a[i];
    return idx;
  }
};

// Per-agent categorical approximation q_i.
struct Marginals {
  std::vector<std::vector<double>> q;  // [agent][a]

  int n_agents() const { return static_cast<int>(q.size()); }

  static Marginals uniform(int n_agents, int n_actions) {
    Marginals m;
    m.q.assign(n_agents, std::vector<double>(n_actions, 1.0 / n_actions));
    return m;
  }

  void validate(double tol = 1e-12) const {
    for (const auto& row : q) {
      double s = 0;
      for (double v : row) {
        if (!(v >= 0)) throw std::invalid_argument("marginals: negative entry");
        s += v;
      }
      if (std::abs(s - 1.0) > tol * 10 + 1e-9) throw std::invalid_argument("marginals: row does not sum to 1");
    }
  }
};

inline double log_sum_exp(const std::vector<double>& xs) {
  double m = -std::numeric_limits<double>::infinity();
  for (double x : xs) m = std::max(m, x);
  if (!std::isfinite(m)) return m;
  double s = 0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

inline std::vector<double> softmax(const std::vector<double>& xs) {
  double lz = log_sum_exp(xs);
  std::vector<double> out(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) out[i] = std::exp(xs[i] - lz);
  return out;
}

inline long long joint_state_count(int n_agents, int n_actions) {
  long long count = 1;
  for (int i = 0; i < n_agents; ++i) {
    count *= n_actions;
    if (count > kEnumerationCap) throw capacity_error("enumeration cap exceeded");
  }
  return count;
}

// Exact normalized joint and log Z, computed in log domain with max subtraction.
inline JointTable brute_force_joint(const PairwiseMRF& mrf) {
  mrf.validate();
  const long long n = joint_state_count(mrf.n_agents(), mrf.n_actions);
  std::vector<double> logw(n);
  std::vector<int> a(mrf.n_agents(), 0);
  for (long long idx = 0; idx < n; ++idx) {
    logw[idx] = mrf.log_score(a);
    for (int i = 0; i < mrf.n_agents(); ++i) {
      if (++a[i] < mrf.n_actions) break;
      a[i] = 0;
    }
  }
  JointTable jt;
  jt.n_agents = mrf.n_agents();
  jt.n_actions = mrf.n_actions;
  jt.log_partition = log_sum_exp(logw);
  jt.probabilities.resize(n);
  for (long long idx = 0; idx < n; ++idx) jt.probabilities[idx] = std::exp(logw[idx] - jt.log_partition);
  return jt;
}

inline Marginals exact_marginals(const JointTable& joint) {
  Marginals m;
  m.q.assign(joint.n_agents, std::vector<double>(joint.n_actions, 0.0));
  long long stride = 1;
  for (int i = 0; i < joint.n_agents; ++i) {
    for (long long idx = 0; idx < joint.n_configs(); ++idx)
      m.q[i][(idx / stride) % joint.n_actions] += joint.probabilities[idx];
    stride *= joint.n_actions;
  }
  return m;
}

// KL( prod_i q_i || joint ). Product mass on a zero-probability joint state
// yields +infinity (signaled via the return value, never NaN).
inline double kl_product_vs_joint(const Marginals& q, const JointTable& joint) {
  if (q.n_agents() != joint.n_agents) throw std::invalid_argument("kl: agent count mismatch");
  q.validate();
  double kl = 0;
  std::vector<int> a(joint.n_agents, 0);
  for (long long idx = 0; idx < joint.n_configs(); ++idx) {
    double logq = 0, pq = 1;
    for (int i = 0; i < joint.n_agents; ++i) {
      double qi = q.q[i][a[i]];
      pq *= qi;
      logq += qi > 0 ? std::log(qi) : 0;  // guarded: pq == 0 skips the term below
    }
    if (pq > 0) {
      double pj = joint.probabilities[idx];
      if (pj <= 0) return std::numeric_limits<double>::infinity();
      kl += pq * (logq - std::log(pj));
    }
    for (int i = 0; i < joint.n_agents; ++i) {
      if (++a[i] < joint.n_actions) break;
      a[i] = 0;
    }
  }
  return kl;
}

// Inverse-CDF sample of one joint configuration.
inline std::vector<int> sample_joint(const JointTable& joint, std::uint64_t rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  double u = unif(rng);
  double cum = 0;
  for (long long idx = 0; idx < joint.n_configs(); ++idx) {
    cum += joint.probabilities[idx];
    if (u <= cum) return joint.decode(idx);
  }
  return joint.decode(joint.n_configs() - 1);
}

// Repeated sampling from one seeded stream.
struct JointSampler {
  const JointTable& joint;
  std::mt19937_64 rng;
  JointSampler(const JointTable& j, std::uint64_t seed) : joint(j), rng(seed) {}
  std::vector<int> draw() {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    double u = unif(rng);
    double cum = 0;
    for (long long idx = 0; idx < joint.n_configs(); ++idx) {
      cum += joint.probabilities[idx];
      if (u <= cum) return joint.decode(idx);
    }
    return joint.decode(joint.n_configs() - 1);
  }
};

inline nlohmann::json mrf_to_json(const PairwiseMRF& mrf) {
  nlohmann::json j;
  j["graph"] = graph_to_json(mrf.graph);
  j["n_actions"] = mrf.n_actions;
  j["node_potentials"] = mrf.node_potentials;
  nlohmann::json ep = nlohmann::json::object();
  for (const auto& [e, tab] : mrf.edge_potentials) {
    std::vector<std::vector<double>> rows(mrf.n_actions, std::vector<double>(mrf.n_actions));
    for (int a = 0; a < mrf.n_actions; ++a)
      for (int b = 0; b < mrf.n_actions; ++b) rows[a][b] = tab[a * mrf.n_actions + b];
    ep[std::to_string(e.first) + "-" + std::to_string(e.second)] = rows;
  }
  j["edge_potentials"] = ep;
  return j;
}

inline PairwiseMRF mrf_from_json(const nlohmann::json& j) {
  PairwiseMRF mrf;
  mrf.graph = graph_from_json(j.at("graph"));
  mrf.n_actions = j.at("n_actions").get<int>();
  mrf.node_potentials = j.at("node_potentials").get<std::vector<std::vector<double>>>();
  for (const auto& [key, rows] : j.at("edge_potentials").items()) {
    auto dash = key.find('-');
    int a = std::stoi(key.substr(0, dash)), b = std::stoi(key.substr(dash + 1));
    std::vector<double> tab(mrf.n_actions * mrf.n_actions);
    for (int x = 0; x < mrf.n_actions; ++x)
      for (int y = 0; y < mrf.n_actions; ++y) tab[x * mrf.n_actions + y] = rows.at(x).at(y).get<double>();
    mrf.edge_potentials[{a, b}] = tab;
  }
  mrf.validate();
  return mrf;
}

}  // namespace vpp
