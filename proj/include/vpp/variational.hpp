// Classical variational inference on PairwiseMRF: mean-field coordinate
// ascent, loopy belief propagation, and the two free energies.
#pragma once

#include <cmath>
#include <map>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "vpp/mrf.hpp"

namespace vpp {

// One normalized categorical message per directed edge (i -> j), over the
// receiver's actions.
struct BPMessages {
  std::map<std::pair<int, int>, std::vector<double>> m;  // key (i, j) = message i -> j

  static BPMessages uniform(const PairwiseMRF& mrf) {
    BPMessages msgs;
    for (auto [i, j] : mrf.graph.directed_edges())
      msgs.m[{i, j}] = std::vector<double>(mrf.n_actions, 1.0 / mrf.n_actions);
    return msgs;
  }

  void validate(const PairwiseMRF& mrf, double tol = 1e-12) const {
    if (m.size() != mrf.graph.directed_edges().size()) throw std::invalid_argument("bp: message count mismatch");
    for (const auto& [e, msg] : m) {
      if (!mrf.graph.has_edge(e.first, e.second)) throw std::invalid_argument("bp: message on non-edge");
      double s = 0;
      for (double v : msg) {
        if (!(v > 0)) throw std::invalid_argument("bp: non-positive message entry");
        s += v;
      }
      if (std::abs(s - 1.0) > tol * 10 + 1e-9) throw std::invalid_argument("bp: message not normalized");
    }
  }
};

struct VIReport {
  int iterations_run = 0;
  bool converged = false;
  double final_residual = 0;
  std::vector<double> objective_trace;  // one entry per sweep
};

inline nlohmann::json vireport_to_json(const VIReport& r) {
  return {{"iterations_run", r.iterations_run},
          {"converged", r.converged},
          {"final_residual", r.final_residual},
          {"objective_trace", r.objective_trace}};
}

// One sequential (Gauss-Seidel) coordinate-ascent pass in agent-id order:
//   log q_i(a_i) <- psi_i(a_i) + sum_{j in N_i} sum_{a_j} q_j(a_j) psi_ij(a_i, a_j)
// then normalize. Updated q_j values are used immediately within the sweep.
inline Marginals mean_field_sweep(const PairwiseMRF& mrf, const Marginals& q_in) {
  q_in.validate();
  Marginals q = q_in;
  const int A = mrf.n_actions;
  for (int i = 0; i < mrf.n_agents(); ++i) {
    std::vector<double> logq(A);
    for (int a = 0; a < A; ++a) {
      double s = mrf.node_pot(i, a);
      for (int j : mrf.graph.neighbors(i))
        for (int b = 0; b < A; ++b) s += q.q[j][b] * mrf.edge_pot(i, j, a, b);
      logq[a] = s;
    }
    q.q[i] = softmax(logq);
  }
  return q;
}

inline double max_abs_diff(const Marginals& a, const Marginals& b) {
  double r = 0;
  for (int i = 0; i < a.n_agents(); ++i)
    for (std::size_t k = 0; k < a.q[i].size(); ++k) r = std::max(r, std::abs(a.q[i][k] - b.q[i][k]));
  return r;
}

// Mean-field free energy E_{prod q}[ sum_i log q_i - log unnormalized pi ].
// Equals KL(prod q || pi) - log Z.
inline double mean_field_free_energy(const PairwiseMRF& mrf, const Marginals& q) {
  q.validate();
  const int A = mrf.n_actions;
  double fe = 0;
  for (int i = 0; i < mrf.n_agents(); ++i)
    for (int a = 0; a < A; ++a) {
      double qi = std::max(q.q[i][a], 1e-300);
      fe += q.q[i][a] * (std::log(qi) - mrf.node_pot(i, a));
    }
  for (const auto& [e, tab] : mrf.edge_potentials)
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < A; ++b) fe -= q.q[e.first][a] * q.q[e.second][b] * tab[a * A + b];
  return fe;
}

inline std::pair<Marginals, VIReport> mean_field_solve(const PairwiseMRF& mrf, const Marginals& init,
                                                       int max_sweeps = 500, double tol = 1e-10) {
  if (max_sweeps < 1) throw std::invalid_argument("mean_field_solve: max_sweeps must be >= 1");
  const bool enumerable = [&] {
    double states = std::pow(static_cast<double>(mrf.n_actions), mrf.n_agents());
    return states <= static_cast<double>(kEnumerationCap);
  }();
  JointTable joint;
  if (enumerable) joint = brute_force_joint(mrf);
  Marginals q = init;
  VIReport rep;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    Marginals next = mean_field_sweep(mrf, q);
    rep.final_residual = max_abs_diff(next, q);
    q = std::move(next);
    ++rep.iterations_run;
    rep.objective_trace.push_back(enumerable ? kl_product_vs_joint(q, joint) : mean_field_free_energy(mrf, q));
    if (rep.final_residual < tol) {
      rep.converged = true;
      break;
    }
  }
  return {q, rep};
}

// One synchronous update of all directed messages in log domain:
//   m_ij(a_j) <- sum_{a_i} prod_{k in N_i \ j} m_ki(a_i) * exp(psi_i(a_i) + psi_ij(a_i, a_j))
// Damped in log space: new = (1 - damping) * update + damping * old, renormalized.
inline BPMessages lbp_message_sweep(const PairwiseMRF& mrf, const BPMessages& msgs, double damping = 0.0) {
  msgs.validate(mrf);
  if (!(damping >= 0.0 && damping < 1.0)) throw std::invalid_argument("lbp: damping must be in [0, 1)");
  const int A = mrf.n_actions;
  BPMessages out;
  for (auto [i, j] : mrf.graph.directed_edges()) {
    std::vector<double> logm(A);
    for (int aj = 0; aj < A; ++aj) {
      std::vector<double> terms(A);
      for (int ai = 0; ai < A; ++ai) {
        double t = mrf.node_pot(i, ai) + mrf.edge_pot(i, j, ai, aj);
        for (int k : mrf.graph.neighbors(i))
          if (k != j) t += std::log(msgs.m.at({k, i})[ai]);
        terms[ai] = t;
      }
      logm[aj] = log_sum_exp(terms);
    }
    if (damping > 0) {
      const auto& old = msgs.m.at({i, j});
      for (int aj = 0; aj < A; ++aj) logm[aj] = (1 - damping) * logm[aj] + damping * std::log(old[aj]);
    }
    out.m[{i, j}] = softmax(logm);
  }
  return out;
}

// Node beliefs: normalized exp(psi_i) * prod_{j in N_i} m_ji, log domain.
inline Marginals lbp_beliefs(const PairwiseMRF& mrf, const BPMessages& msgs) {
  msgs.validate(mrf);
  const int A = mrf.n_actions;
  Marginals beliefs;
  beliefs.q.resize(mrf.n_agents());
  for (int i = 0; i < mrf.n_agents(); ++i) {
    std::vector<double> logb(A);
    for (int a = 0; a < A; ++a) {
      double t = mrf.node_pot(i, a);
      for (int j : mrf.graph.neighbors(i)) t += std::log(msgs.m.at({j, i})[a]);
      logb[a] = t;
    }
    beliefs.q[i] = softmax(logb);
  }
  return beliefs;
}

// Pairwise beliefs at the message fixed point, for Bethe accounting:
//   b_ij(a_i, a_j) ~ exp(psi_i + psi_j + psi_ij) * prod_{k in N_i \ j} m_ki(a_i) * prod_{k in N_j \ i} m_kj(a_j)
inline std::map<std::pair<int, int>, std::vector<double>> lbp_edge_beliefs(const PairwiseMRF& mrf,
                                                                           const BPMessages& msgs) {
  msgs.validate(mrf);
  const int A = mrf.n_actions;
  std::map<std::pair<int, int>, std::vector<double>> eb;
  for (const auto& [e, tab] : mrf.edge_potentials) {
    auto [i, j] = e;
    std::vector<double> logb(A * A);
    for (int a = 0; a < A; ++a)
      for (int b = 0; b < A; ++b) {
        double t = mrf.node_pot(i, a) + mrf.node_pot(j, b) + tab[a * A + b];
        for (int k : mrf.graph.neighbors(i))
          if (k != j) t += std::log(msgs.m.at({k, i})[a]);
        for (int k : mrf.graph.neighbors(j))
          if (k != i) t += std::log(msgs.m.at({k, j})[b]);
        logb[a * A + b] = t;
      }
    eb[e] = softmax(logb);
  }
  return eb;
}

// Bethe free energy over node and edge beliefs:
//   sum_ij sum q_ij [log q_ij - (psi_ij + psi_i + psi_j)]
//   - sum_i (|N_i| - 1) sum q_i [log q_i - psi_i]
// Requires edge beliefs to marginalize onto node beliefs within `consistency_tol`.
inline double bethe_free_energy(const PairwiseMRF& mrf, const Marginals& node_beliefs,
                                const std::map<std::pair<int, int>, std::vector<double>>& edge_beliefs,
                                double consistency_tol = 1e-8) {
  node_beliefs.validate();
  const int A = mrf.n_actions;
  if (edge_beliefs.size() != mrf.graph.edges.size()) throw std::invalid_argument("bethe: edge belief count mismatch");
  for (const auto& [e, b] : edge_beliefs) {
    auto [i, j] = e;
    double total = 0;
    for (double v : b) {
      if (!(v >= 0)) throw std::invalid_argument("bethe: negative edge belief");
      total += v;
    }
    if (std::abs(total - 1.0) > 1e-9) throw std::invalid_argument("bethe: edge belief not normalized");
    for (int a = 0; a < A; ++a) {
      double row = 0, col = 0;
      for (int c = 0; c < A; ++c) {
        row += b[a * A + c];
        col += b[c * A + a];
      }
      if (std::abs(row - node_beliefs.q[i][a]) > consistency_tol ||
          std::abs(col - node_beliefs.q[j][a]) > consistency_tol)
        throw std::invalid_argument("bethe: edge beliefs inconsistent with node beliefs");
    }
  }
  double fe = 0;
  for (const auto& [e, b] : edge_beliefs) {
    auto [i, j] = e;
    const auto& tab = mrf.edge_potentials.at(e);
    for (int a = 0; a < A; ++a)
      for (int c = 0; c < A; ++c) {
        double q = b[a * A + c];
        if (q > 0) fe += q * (std::log(q) - (tab[a * A + c] + mrf.node_pot(i, a) + mrf.node_pot(j, c)));
      }
  }
  for (int i = 0; i < mrf.n_agents(); ++i) {
    double deg = static_cast<double>(mrf.graph.degree(i));
    for (int a = 0; a < A; ++a) {
      double q = node_beliefs.q[i][a];
      if (q > 0) fe -= (deg - 1.0) * q * (std::log(q) - mrf.node_pot(i, a));
    }
  }
  return fe;
}

// Run synchronous LBP to a fixed point.
inline std::pair<BPMessages, VIReport> lbp_solve(const PairwiseMRF& mrf, const BPMessages& init, double damping = 0.0,
                                                 int max_sweeps = 500, double tol = 1e-12) {
  if (max_sweeps < 1) throw std::invalid_argument("lbp_solve: max_sweeps must be >= 1");
  BPMessages msgs = init;
  VIReport rep;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    BPMessages next = lbp_message_sweep(mrf, msgs, damping);
    double resid = 0;
    for (const auto& [e, msg] : next.m)
      for (std::size_t a = 0; a < msg.size(); ++a) resid = std::max(resid, std::abs(msg[a] - msgs.m.at(e)[a]));
    msgs = std::move(next);
    ++rep.iterations_run;
    rep.final_residual = resid;
    rep.objective_trace.push_back(resid);
    if (resid < tol) {
      rep.converged = true;
      break;
    }
  }
  return {msgs, rep};
}

}  // namespace vpp
