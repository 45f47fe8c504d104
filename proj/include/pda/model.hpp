// Agents, valuations, reports, and the reported graph. Everything downstream
// (welfare, mechanisms, audits) works on the dense-index Profile defined here:
// agent 0 is the seller, agents 1..n are buyers in id order.
#pragma once

#include "pda/errors.hpp"
#include "pda/rational.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace pda {

using AgentIndex = int;
using Mask = std::uint64_t;  // bit i set <=> agent i in the set

constexpr AgentIndex kSeller = 0;
constexpr int kMaxAgents = 64;

inline Mask bit(AgentIndex i) { return Mask{1} << i; }
inline bool contains(Mask m, AgentIndex i) { return (m >> i) & 1; }
inline int count(Mask m) { return std::popcount(m); }
inline Mask all_agents(int total) {
  return total == kMaxAgents ? ~Mask{0} : (Mask{1} << total) - 1;
}

enum class ItemKind { homogeneous, combinatorial };

// One buyer's valuation. Homogeneous: marginal value of the j-th unit (so the
// value of holding q units is the sum of the first q marginals). Combinatorial:
// a dense table over item subsets, indexed by bundle bitmask.
struct Valuation {
  ItemKind kind = ItemKind::homogeneous;
  std::vector<Rational> marginals;  // homogeneous, size k
  std::vector<Rational> prefix;     // prefix[q] = value of q units, size k+1
  std::vector<Rational> bundle;     // combinatorial, size 2^m, bundle[0] == 0

  static Valuation homogeneous(std::vector<Rational> m) {
    Valuation v;
    v.kind = ItemKind::homogeneous;
    v.prefix.assign(1, Rational(0));
    for (const auto& x : m) v.prefix.push_back(v.prefix.back() + x);
    v.marginals = std::move(m);
    return v;
  }

  static Valuation combinatorial(std::vector<Rational> table) {
    Valuation v;
    v.kind = ItemKind::combinatorial;
    v.bundle = std::move(table);
    return v;
  }

  // holding = quantity (homogeneous) or bundle mask (combinatorial).
  const Rational& value(std::uint32_t holding) const {
    return kind == ItemKind::homogeneous ? prefix.at(holding)
                                         : bundle.at(holding);
  }
};

// Ground truth: ids, the real social graph, and real valuations.
struct Instance {
  ItemKind kind = ItemKind::homogeneous;
  int k = 1;                       // homogeneous supply
  std::vector<std::string> items;  // combinatorial item names, bit j = items[j]
  std::vector<std::string> ids;    // ids[0] == "s", buyers sorted by id
  std::vector<Mask> neighbors;     // symmetric adjacency, no self loops
  std::vector<Valuation> vals;     // vals[0] unused

  int total_agents() const { return static_cast<int>(ids.size()); }
  int buyers() const { return total_agents() - 1; }
  int item_count() const {
    return kind == ItemKind::homogeneous ? k : static_cast<int>(items.size());
  }
  AgentIndex index_of(const std::string& id) const {
    for (int i = 0; i < total_agents(); ++i)
      if (ids[i] == id) return i;
    throw MalformedProfileError("unknown agent id: " + id);
  }
};

// A full report profile: every agent's declared neighbor set, every buyer's
// declared valuation. Deviations are expressed by editing a copy.
struct Profile {
  ItemKind kind = ItemKind::homogeneous;
  int k = 1;
  int m = 0;                    // combinatorial item count
  std::vector<Mask> neighbors;  // reported neighbor sets, index 0 = seller
  std::vector<Valuation> vals;  // reported valuations, vals[0] unused

  int total_agents() const { return static_cast<int>(neighbors.size()); }
  int buyers() const { return total_agents() - 1; }
  int item_count() const { return kind == ItemKind::homogeneous ? k : m; }
};

inline Profile truthful(const Instance& inst) {
  Profile p;
  p.kind = inst.kind;
  p.k = inst.k;
  p.m = static_cast<int>(inst.items.size());
  p.neighbors = inst.neighbors;
  p.vals = inst.vals;
  return p;
}

// An edge exists if either endpoint reports it.
struct Graph {
  std::vector<Mask> adj;

  // Agents reachable from the seller walking only inside `allowed` (the seller
  // must itself be in `allowed` to get anywhere).
  Mask reach_from_seller(Mask allowed) const {
    if (!contains(allowed, kSeller)) return 0;
    Mask seen = bit(kSeller);
    Mask frontier = seen;
    while (frontier) {
      Mask next = 0;
      for (Mask f = frontier; f;) {
        const int i = std::countr_zero(f);
        f &= f - 1;
        next |= adj[i] & allowed & ~seen;
      }
      seen |= next;
      frontier = next;
    }
    return seen;
  }
};

inline Graph reported_graph(const Profile& p) {
  Graph g;
  g.adj.assign(p.total_agents(), 0);
  for (int i = 0; i < p.total_agents(); ++i) {
    for (Mask m = p.neighbors[i]; m;) {
      const int j = std::countr_zero(m);
      m &= m - 1;
      if (j == i || j >= p.total_agents()) continue;
      g.adj[i] |= bit(j);
      g.adj[j] |= bit(i);
    }
  }
  return g;
}

// Buyers in `coalition` that the reports connect to the seller through
// `coalition` alone. Empty whenever the seller is absent.
inline Mask feasible_set(const Graph& g, Mask coalition) {
  return g.reach_from_seller(coalition) & ~bit(kSeller);
}

inline Mask feasible_set(const Profile& p, Mask coalition) {
  return feasible_set(reported_graph(p), coalition);
}

// Structural checks on ground truth. Returns human-readable problems; an empty
// result means the instance is well formed.
inline std::vector<std::string> validate_instance(const Instance& inst) {
  std::vector<std::string> problems;
  const int total = inst.total_agents();
  if (total < 1) return {"instance has no agents"};
  if (inst.ids[0] != "s") problems.push_back("agent 0 must be the seller 's'");
  if (total > kMaxAgents) problems.push_back("more than 64 agents");
  for (int i = 1; i < total; ++i) {
    if (inst.ids[i].empty() || inst.ids[i] == "s")
      problems.push_back("bad buyer id at index " + std::to_string(i));
    if (i + 1 < total && !(inst.ids[i] < inst.ids[i + 1]))
      problems.push_back("buyer ids not strictly increasing at index " +
                         std::to_string(i));
  }
  if (static_cast<int>(inst.neighbors.size()) != total ||
      static_cast<int>(inst.vals.size()) != total) {
    problems.push_back("neighbor/valuation arrays must cover every agent");
    return problems;  // sizes are off; the loops below would be unsafe
  }
  for (int i = 0; i < total; ++i) {
    if (contains(inst.neighbors[i], i))
      problems.push_back("self loop at " + inst.ids[i]);
    if (total < kMaxAgents && (inst.neighbors[i] & ~all_agents(total)))
      problems.push_back("neighbor bit out of range at " + inst.ids[i]);
    for (Mask m = inst.neighbors[i]; m;) {
      const int j = std::countr_zero(m);
      m &= m - 1;
      if (j < total && !contains(inst.neighbors[j], i))
        problems.push_back("asymmetric edge " + inst.ids[i] + "-" + inst.ids[j]);
    }
  }
  if (inst.kind == ItemKind::homogeneous) {
    if (inst.k < 1) problems.push_back("k must be at least 1");
    for (int i = 1; i < total; ++i) {
      const auto& v = inst.vals[i];
      if (v.kind != ItemKind::homogeneous ||
          static_cast<int>(v.marginals.size()) != inst.k) {
        problems.push_back("buyer " + inst.ids[i] + " needs exactly " +
                           std::to_string(inst.k) + " marginal values");
        continue;
      }
      for (int q = 0; q < inst.k; ++q) {
        if (v.marginals[q] < 0)
          problems.push_back("negative marginal for " + inst.ids[i]);
        if (q > 0 && v.marginals[q] > v.marginals[q - 1])
          problems.push_back("marginals increase for " + inst.ids[i]);
      }
    }
  } else {
    const int m = static_cast<int>(inst.items.size());
    if (m < 1 || m > 20) problems.push_back("item count must be in 1..20");
    const std::size_t table = std::size_t{1} << m;
    for (int i = 1; i < total; ++i) {
      const auto& v = inst.vals[i];
      if (v.kind != ItemKind::combinatorial || v.bundle.size() != table) {
        problems.push_back("buyer " + inst.ids[i] +
                           " needs a full bundle table");
        continue;
      }
      if (v.bundle[0] != 0)
        problems.push_back("empty bundle must be worth 0 for " + inst.ids[i]);
      for (std::size_t b = 0; b < table; ++b)
        if (v.bundle[b] < 0)
          problems.push_back("negative bundle value for " + inst.ids[i]);
    }
  }
  return problems;
}

// A traversal order: a permutation of all agents, seller included. Mechanisms
// skip the seller when they walk it.
using Order = std::vector<AgentIndex>;

inline void validate_order(const Order& o, int total_agents) {
  if (static_cast<int>(o.size()) != total_agents)
    throw MalformedOrderError("order must list every agent exactly once");
  Mask seen = 0;
  for (AgentIndex a : o) {
    if (a < 0 || a >= total_agents || contains(seen, a))
      throw MalformedOrderError("order must list every agent exactly once");
    seen |= bit(a);
  }
}

inline Order identity_order(int total_agents) {
  Order o(total_agents);
  for (int i = 0; i < total_agents; ++i) o[i] = i;
  return o;
}

}  // namespace pda
