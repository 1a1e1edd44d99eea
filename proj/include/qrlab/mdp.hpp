#pragma once

// Explicit desk-scale MDPs: value iteration, expected steps-to-reward,
// recurrent classes, bisimulation quotients, and exact finite-horizon
// open-loop (state-blind) versus closed-loop optima.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace qrlab {

struct Arc {
  int next = 0;
  int reward = 0;
  // Probability as an exact rational (pnum/pden) plus its double image.
  std::uint64_t pnum = 1;
  std::uint64_t pden = 1;
  double prob = 1.0;
};

struct ExplicitMdp {
  std::vector<std::string> labels;  // state 0 is the initial state
  int num_actions = 0;
  std::vector<std::vector<std::vector<Arc>>> trans;  // [state][action] -> arcs

  int num_states() const { return static_cast<int>(labels.size()); }
};

struct ValueIterationResult {
  std::vector<double> value;
  std::vector<std::vector<double>> q;  // [state][action]
  std::vector<int> policy;             // lowest-index argmax
  double residual = 0.0;
  int iterations = 0;
};

inline ValueIterationResult value_iteration(const ExplicitMdp& mdp, double gamma,
                                            double tol = 1e-12, int max_iter = 1000000) {
  int S = mdp.num_states();
  ValueIterationResult r;
  r.value.assign(static_cast<std::size_t>(S), 0.0);
  std::vector<double> next(static_cast<std::size_t>(S), 0.0);
  for (r.iterations = 0; r.iterations < max_iter; ++r.iterations) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = -1e300;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double q = 0.0;
        for (const auto& arc : mdp.trans[s][a])
          q += arc.prob * (arc.reward + gamma * r.value[static_cast<std::size_t>(arc.next)]);
        best = std::max(best, q);
      }
      next[static_cast<std::size_t>(s)] = best;
      delta = std::max(delta, std::abs(best - r.value[static_cast<std::size_t>(s)]));
    }
    r.value.swap(next);
    r.residual = delta;
    if (delta < tol) break;
  }
  r.q.assign(static_cast<std::size_t>(S), std::vector<double>(static_cast<std::size_t>(mdp.num_actions), 0.0));
  r.policy.assign(static_cast<std::size_t>(S), 0);
  for (int s = 0; s < S; ++s) {
    double best = -1e300;
    for (int a = 0; a < mdp.num_actions; ++a) {
      double q = 0.0;
      for (const auto& arc : mdp.trans[s][a])
        q += arc.prob * (arc.reward + gamma * r.value[static_cast<std::size_t>(arc.next)]);
      r.q[static_cast<std::size_t>(s)][static_cast<std::size_t>(a)] = q;
      if (q > best + 1e-12) {
        best = q;
        r.policy[static_cast<std::size_t>(s)] = a;
      }
    }
  }
  return r;
}

/// Minimum expected number of steps until a reward is collected, per state
/// (stochastic shortest path; the rewarding transition counts as a step).
inline std::vector<double> expected_steps_to_reward(const ExplicitMdp& mdp,
                                                    double tol = 1e-12) {
  int S = mdp.num_states();
  std::vector<double> t(static_cast<std::size_t>(S), 0.0), next(static_cast<std::size_t>(S), 0.0);
  for (int iter = 0; iter < 1000000; ++iter) {
    double delta = 0.0;
    for (int s = 0; s < S; ++s) {
      double best = 1e300;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double v = 1.0;
        for (const auto& arc : mdp.trans[s][a])
          if (!arc.reward) v += arc.prob * t[static_cast<std::size_t>(arc.next)];
        best = std::min(best, v);
      }
      next[static_cast<std::size_t>(s)] = best;
      delta = std::max(delta, std::abs(best - t[static_cast<std::size_t>(s)]));
    }
    t.swap(next);
    if (delta < tol) break;
  }
  return t;
}

/// States inside closed recurrent classes of the policy chain, restricted to
/// states reachable from state 0.
inline std::vector<int> recurrent_states(const ExplicitMdp& mdp, const std::vector<int>& policy) {
  int S = mdp.num_states();
  std::vector<std::vector<int>> succ(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s)
    for (const auto& arc : mdp.trans[s][static_cast<std::size_t>(policy[static_cast<std::size_t>(s)])])
      if (arc.prob > 0) succ[static_cast<std::size_t>(s)].push_back(arc.next);

  std::vector<char> reach(static_cast<std::size_t>(S), 0);
  std::vector<int> stack{0};
  reach[0] = 1;
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (int nx : succ[static_cast<std::size_t>(s)])
      if (!reach[static_cast<std::size_t>(nx)]) {
        reach[static_cast<std::size_t>(nx)] = 1;
        stack.push_back(nx);
      }
  }

  // Kosaraju SCC on the reachable subgraph.
  std::vector<int> order;
  std::vector<char> seen(static_cast<std::size_t>(S), 0);
  for (int s0 = 0; s0 < S; ++s0) {
    if (!reach[static_cast<std::size_t>(s0)] || seen[static_cast<std::size_t>(s0)]) continue;
    std::vector<std::pair<int, std::size_t>> st{{s0, 0}};
    seen[static_cast<std::size_t>(s0)] = 1;
    while (!st.empty()) {
      auto& [s, i] = st.back();
      if (i < succ[static_cast<std::size_t>(s)].size()) {
        int nx = succ[static_cast<std::size_t>(s)][i++];
        if (reach[static_cast<std::size_t>(nx)] && !seen[static_cast<std::size_t>(nx)]) {
          seen[static_cast<std::size_t>(nx)] = 1;
          st.push_back({nx, 0});
        }
      } else {
        order.push_back(s);
        st.pop_back();
      }
    }
  }
  std::vector<std::vector<int>> pred(static_cast<std::size_t>(S));
  for (int s = 0; s < S; ++s)
    if (reach[static_cast<std::size_t>(s)])
      for (int nx : succ[static_cast<std::size_t>(s)]) pred[static_cast<std::size_t>(nx)].push_back(s);
  std::vector<int> comp(static_cast<std::size_t>(S), -1);
  int ncomp = 0;
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    if (comp[static_cast<std::size_t>(*it)] >= 0) continue;
    std::vector<int> st2{*it};
    comp[static_cast<std::size_t>(*it)] = ncomp;
    while (!st2.empty()) {
      int s = st2.back();
      st2.pop_back();
      for (int p : pred[static_cast<std::size_t>(s)])
        if (comp[static_cast<std::size_t>(p)] < 0) {
          comp[static_cast<std::size_t>(p)] = ncomp;
          st2.push_back(p);
        }
    }
    ++ncomp;
  }
  std::vector<char> closed(static_cast<std::size_t>(ncomp), 1);
  for (int s = 0; s < S; ++s)
    if (reach[static_cast<std::size_t>(s)])
      for (int nx : succ[static_cast<std::size_t>(s)])
        if (comp[static_cast<std::size_t>(nx)] != comp[static_cast<std::size_t>(s)])
          closed[static_cast<std::size_t>(comp[static_cast<std::size_t>(s)])] = 0;
  std::vector<int> out;
  for (int s = 0; s < S; ++s)
    if (reach[static_cast<std::size_t>(s)] && closed[static_cast<std::size_t>(comp[static_cast<std::size_t>(s)])])
      out.push_back(s);
  return out;
}

// ---------------------------------------------------------------------------
// Bisimulation quotient (coarsest partition preserving dynamics + rewards).

struct Quotient {
  ExplicitMdp mdp;              // over blocks; state 0 = block of original state 0
  std::vector<int> block_of;    // original state -> block
};

inline Quotient bisimulation_quotient(const ExplicitMdp& mdp) {
  int S = mdp.num_states();
  std::vector<int> block(static_cast<std::size_t>(S), 0);
  int nblocks = 1;
  for (;;) {
    // Signature: per action, the sorted aggregated (next block, reward, prob).
    std::map<std::vector<std::vector<std::tuple<int, int, std::uint64_t, std::uint64_t>>>, int> sig_ids;
    std::vector<int> next_block(static_cast<std::size_t>(S));
    for (int s = 0; s < S; ++s) {
      std::vector<std::vector<std::tuple<int, int, std::uint64_t, std::uint64_t>>> sig;
      for (int a = 0; a < mdp.num_actions; ++a) {
        std::map<std::pair<int, int>, std::pair<std::uint64_t, std::uint64_t>> agg;
        for (const auto& arc : mdp.trans[s][a]) {
          auto key = std::make_pair(block[static_cast<std::size_t>(arc.next)], arc.reward);
          auto [it, fresh] = agg.emplace(key, std::make_pair(arc.pnum, arc.pden));
          if (!fresh) {
            // a/b + c/d with small denominators
            auto& [num, den] = it->second;
            std::uint64_t nden = std::lcm(den, arc.pden);
            num = num * (nden / den) + arc.pnum * (nden / arc.pden);
            den = nden;
            std::uint64_t g = std::gcd(num, den);
            num /= g;
            den /= g;
          }
        }
        std::vector<std::tuple<int, int, std::uint64_t, std::uint64_t>> row;
        for (const auto& [key, val] : agg)
          row.emplace_back(key.first, key.second, val.first, val.second);
        sig.push_back(std::move(row));
      }
      auto [it, fresh] = sig_ids.emplace(std::move(sig), static_cast<int>(sig_ids.size()));
      next_block[static_cast<std::size_t>(s)] = it->second;
    }
    int newcount = static_cast<int>(sig_ids.size());
    if (newcount == nblocks && std::equal(block.begin(), block.end(), next_block.begin())) break;
    block = next_block;
    nblocks = newcount;
    if (nblocks == S) break;
  }

  // Renumber so the initial state's block is 0.
  std::vector<int> remap(static_cast<std::size_t>(nblocks), -1);
  int counter = 0;
  remap[static_cast<std::size_t>(block[0])] = counter++;
  for (int s = 0; s < S; ++s)
    if (remap[static_cast<std::size_t>(block[static_cast<std::size_t>(s)])] < 0)
      remap[static_cast<std::size_t>(block[static_cast<std::size_t>(s)])] = counter++;

  Quotient q;
  q.block_of.assign(static_cast<std::size_t>(S), 0);
  for (int s = 0; s < S; ++s)
    q.block_of[static_cast<std::size_t>(s)] = remap[static_cast<std::size_t>(block[static_cast<std::size_t>(s)])];
  q.mdp.num_actions = mdp.num_actions;
  q.mdp.labels.assign(static_cast<std::size_t>(nblocks), "");
  q.mdp.trans.assign(static_cast<std::size_t>(nblocks), {});
  std::vector<char> done(static_cast<std::size_t>(nblocks), 0);
  for (int s = 0; s < S; ++s) {
    int b = q.block_of[static_cast<std::size_t>(s)];
    if (done[static_cast<std::size_t>(b)]) continue;
    done[static_cast<std::size_t>(b)] = 1;
    q.mdp.labels[static_cast<std::size_t>(b)] = mdp.labels[static_cast<std::size_t>(s)];
    auto& rows = q.mdp.trans[static_cast<std::size_t>(b)];
    rows.resize(static_cast<std::size_t>(mdp.num_actions));
    for (int a = 0; a < mdp.num_actions; ++a) {
      std::map<std::pair<int, int>, std::pair<std::uint64_t, std::uint64_t>> agg;
      for (const auto& arc : mdp.trans[s][a]) {
        auto key = std::make_pair(q.block_of[static_cast<std::size_t>(arc.next)], arc.reward);
        auto [it, fresh] = agg.emplace(key, std::make_pair(arc.pnum, arc.pden));
        if (!fresh) {
          auto& [num, den] = it->second;
          std::uint64_t nden = std::lcm(den, arc.pden);
          num = num * (nden / den) + arc.pnum * (nden / arc.pden);
          den = nden;
          std::uint64_t g = std::gcd(num, den);
          num /= g;
          den /= g;
        }
      }
      for (const auto& [key, val] : agg) {
        Arc arc;
        arc.next = key.first;
        arc.reward = key.second;
        arc.pnum = val.first;
        arc.pden = val.second;
        arc.prob = static_cast<double>(val.first) / static_cast<double>(val.second);
        rows[static_cast<std::size_t>(a)].push_back(arc);
      }
    }
  }
  return q;
}

// ---------------------------------------------------------------------------
// Finite-horizon optima: closed loop (state feedback) and open loop (fixed
// action sequence, state-blind). The open-loop side is an exact belief DP
// with rational beliefs, memoized, over the quotient.

inline double closed_loop_optimum(const ExplicitMdp& mdp, int horizon, int start = 0) {
  int S = mdp.num_states();
  std::vector<double> v(static_cast<std::size_t>(S), 0.0), nv(static_cast<std::size_t>(S), 0.0);
  for (int t = horizon - 1; t >= 0; --t) {
    for (int s = 0; s < S; ++s) {
      double best = -1e300;
      for (int a = 0; a < mdp.num_actions; ++a) {
        double q = 0.0;
        for (const auto& arc : mdp.trans[s][a])
          q += arc.prob * (arc.reward + v[static_cast<std::size_t>(arc.next)]);
        best = std::max(best, q);
      }
      nv[static_cast<std::size_t>(s)] = best;
    }
    v.swap(nv);
  }
  return v[static_cast<std::size_t>(start)];
}

namespace detail {

struct Belief {
  std::uint64_t denom = 1;
  std::vector<std::pair<int, std::uint64_t>> mass;  // (state, numerator), sorted

  void normalize() {
    std::uint64_t g = denom;
    for (auto& [s, n] : mass) g = std::gcd(g, n);
    if (g > 1) {
      denom /= g;
      for (auto& [s, n] : mass) n /= g;
    }
  }

  bool operator<(const Belief& o) const {
    if (denom != o.denom) return denom < o.denom;
    return mass < o.mass;
  }
};

}  // namespace detail

inline double open_loop_optimum(const ExplicitMdp& mdp, int horizon, int start = 0) {
  using detail::Belief;
  std::map<std::pair<int, Belief>, double> memo;

  std::function<double(int, const Belief&)> rec = [&](int t, const Belief& b) -> double {
    if (t == horizon) return 0.0;
    auto key = std::make_pair(t, b);
    auto found = memo.find(key);
    if (found != memo.end()) return found->second;

    double best = -1e300;
    for (int a = 0; a < mdp.num_actions; ++a) {
      // One common denominator for all outgoing arcs under this action.
      std::uint64_t step_den = 1;
      for (const auto& [s, num] : b.mass)
        for (const auto& arc : mdp.trans[s][a]) step_den = std::lcm(step_den, arc.pden);

      double immediate = 0.0;
      std::map<int, std::uint64_t> next_mass;
      for (const auto& [s, num] : b.mass) {
        for (const auto& arc : mdp.trans[s][a]) {
          std::uint64_t w = num * arc.pnum * (step_den / arc.pden);
          if (arc.reward)
            immediate += static_cast<double>(w);
          next_mass[arc.next] += w;
        }
      }
      Belief nb;
      nb.denom = b.denom * step_den;
      nb.mass.assign(next_mass.begin(), next_mass.end());
      nb.normalize();
      immediate /= static_cast<double>(b.denom) * static_cast<double>(step_den);
      best = std::max(best, immediate + rec(t + 1, nb));
    }
    memo.emplace(key, best);
    return best;
  };

  Belief init;
  init.mass = {{start, 1}};
  return rec(0, init);
}

/// Value CSV row helper for edge-list export.
inline std::string mdp_edge_csv(const ExplicitMdp& mdp) {
  std::string out = "state,action,next,prob,reward\n";
  for (int s = 0; s < mdp.num_states(); ++s)
    for (int a = 0; a < mdp.num_actions; ++a)
      for (const auto& arc : mdp.trans[s][a]) {
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.9g", arc.prob);
        out += mdp.labels[static_cast<std::size_t>(s)] + "," + std::to_string(a) + "," +
               mdp.labels[static_cast<std::size_t>(arc.next)] + "," + buf + "," +
               std::to_string(arc.reward) + "\n";
      }
  return out;
}

}  // namespace qrlab
