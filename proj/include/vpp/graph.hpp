// Agent interaction graphs: grid / k-nearest-neighbor / random construction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace vpp {

// Undirected simple graph over agent ids 0..n_agents-1.
// Immutable after construction; neighbor lists are kept sorted.
struct Graph {
  int n_agents = 0;
  std::vector<std::pair<int, int>> edges;        // (i, j) with i < j, lexicographically sorted
  std::vector<std::vector<int>> neighbor_lists;  // adjacency induced by edges

  static Graph from_edge_set(int n, const std::set<std::pair<int, int>>& edge_set) {
    Graph g;
    if (n < 1) throw std::invalid_argument("graph: n_agents must be >= 1");
    g.n_agents = n;
    g.neighbor_lists.assign(n, {});
    for (const auto& [i, j] : edge_set) {
      if (i == j) throw std::invalid_argument("graph: self-loop");
      if (i < 0 || j < 0 || i >= n || j >= n) throw std::invalid_argument("graph: vertex out of range");
      g.edges.emplace_back(std::min(i, j), std::max(i, j));
    }
    std::sort(g.edges.begin(), g.edges.end());
    g.edges.erase(std::unique(g.edges.begin(), g.edges.end()), g.edges.end());
    for (const auto& [i, j] : g.edges) {
      g.neighbor_lists[i].push_back(j);
      g.neighbor_lists[j].push_back(i);
    }
    for (auto& nl : g.neighbor_lists) std::sort(nl.begin(), nl.end());
    return g;
  }

  const std::vector<int>& neighbors(int i) const { return neighbor_lists.at(i); }
  int degree(int i) const { return static_cast<int>(neighbor_lists.at(i).size()); }
  int n_edges() const { return static_cast<int>(edges.size()); }

  bool has_edge(int i, int j) const {
    if (i == j) return false;
    const auto& nl = neighbor_lists.at(i);
    return std::binary_search(nl.begin(), nl.end(), j);
  }

  // Directed edge view (both orientations of every undirected edge), sorted by (src, dst).
  std::vector<std::pair<int, int>> directed_edges() const {
    std::vector<std::pair<int, int>> out;
    out.reserve(2 * edges.size());
    for (const auto& [i, j] : edges) {
      out.emplace_back(i, j);
      out.emplace_back(j, i);
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  // BFS hop distances from source; -1 for unreachable.
  std::vector<int> distances_from(int src) const {
    std::vector<int> dist(n_agents, -1);
    std::vector<int> queue{src};
    dist[src] = 0;
    for (std::size_t h = 0; h < queue.size(); ++h) {
      int u = queue[h];
      for (int v : neighbor_lists[u])
        if (dist[v] < 0) {
          dist[v] = dist[u] + 1;
          queue.push_back(v);
        }
    }
    return dist;
  }
};

// 4-connected lattice; vertex id = row * cols + col.
inline Graph build_grid(int rows, int cols) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("build_grid: dimensions must be >= 1");
  std::set<std::pair<int, int>> es;
  auto id = [cols](int r, int c) { return r * cols + c; };
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (c + 1 < cols) es.insert({id(r, c), id(r, c + 1)});
      if (r + 1 < rows) es.insert({id(r, c), id(r + 1, c)});
    }
  return Graph::from_edge_set(rows * cols, es);
}

// Per-vertex k nearest neighbors by Euclidean distance, symmetrized by union.
// Distance ties are broken toward the lower vertex id.
inline Graph build_knn(const std::vector<std::vector<double>>& positions, int k) {
  const int n = static_cast<int>(positions.size());
  if (n < 1) throw std::invalid_argument("build_knn: need at least one point");
  if (k < 1 || k >= n) throw std::invalid_argument("build_knn: require 1 <= k < n_agents");
  const std::size_t dim = positions.front().size();
  for (const auto& p : positions) {
    if (p.size() != dim) throw std::invalid_argument("build_knn: inconsistent point dimension");
    for (double x : p)
      if (!std::isfinite(x)) throw std::invalid_argument("build_knn: non-finite coordinate");
  }
  auto dist2 = [&](int a, int b) {
    double s = 0;
    for (std::size_t d = 0; d < dim; ++d) {
      double diff = positions[a][d] - positions[b][d];
      s += diff * diff;
    }
    return s;
  };
  std::set<std::pair<int, int>> es;
  for (int i = 0; i < n; ++i) {
    std::vector<int> others;
    others.reserve(n - 1);
    for (int j = 0; j < n; ++j)
      if (j != i) others.push_back(j);
    std::stable_sort(others.begin(), others.end(), [&](int a, int b) {
      double da = dist2(i, a), db = dist2(i, b);
      if (da != db) return da < db;
      return a < b;
    });
    for (int t = 0; t < k; ++t) es.insert({std::min(i, others[t]), std::max(i, others[t])});
  }
  return Graph::from_edge_set(n, es);
}

// Each vertex picks `degree` distinct partners uniformly at random; union-symmetrized.
inline Graph build_random(int n_agents, int degree, std::uint64_t seed) {
  if (n_agents < 1) throw std::invalid_argument("build_random: n_agents must be >= 1");
  if (degree < 1 || degree >= n_agents) throw std::invalid_argument("build_random: require 1 <= degree < n_agents");
  std::mt19937_64 rng(seed);
  std::set<std::pair<int, int>> es;
  for (int i = 0; i < n_agents; ++i) {
    std::vector<int> others;
    others.reserve(n_agents - 1);
    for (int j = 0; j < n_agents; ++j)
      if (j != i) others.push_back(j);
    // partial Fisher-Yates: first `degree` entries are the chosen partners
    for (int t = 0; t < degree; ++t) {
      std::uniform_int_distribution<int> pick(t, static_cast<int>(others.size()) - 1);
      std::swap(others[t], others[pick(rng)]);
      es.insert({std::min(i, others[t]), std::max(i, others[t])});
    }
  }
  return Graph::from_edge_set(n_agents, es);
}

// True exactly when the k-NN graph should be rebuilt at this step.
inline bool refresh_schedule(long long current_step, int interval) {
  if (interval < 1) throw std::invalid_argument("refresh_schedule: interval must be >= 1");
  return current_step % interval == 0;
}

inline nlohmann::json graph_to_json(const Graph& g) {
  nlohmann::json j;
  j["n"] = g.n_agents;
  auto edges = nlohmann::json::array();
  for (const auto& [a, b] : g.edges) edges.push_back({a, b});
  j["edges"] = edges;
  return j;
}

inline Graph graph_from_json(const nlohmann::json& j) {
  std::set<std::pair<int, int>> es;
  for (const auto& e : j.at("edges")) es.insert({e.at(0).get<int>(), e.at(1).get<int>()});
  return Graph::from_edge_set(j.at("n").get<int>(), es);
}

}  // namespace vpp
