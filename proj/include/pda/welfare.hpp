// Constrained welfare maximization: the best allocation over a feasible set
// that extends an already-committed allocation. WelfareContext memoizes per
// report profile; brute_force_welfare is a deliberately naive cross-check.
#pragma once

#include "pda/errors.hpp"
#include "pda/model.hpp"
#include "pda/rational.hpp"

#include <algorithm>
#include <cstdint>
#include <unordered_map>
#include <utility>
#include <vector>

namespace pda {

// Per-agent holdings: a quantity (homogeneous) or an item bitmask
// (combinatorial). Index 0 is the seller and always holds nothing.
struct Allocation {
  std::vector<std::uint32_t> h;

  static Allocation none(int total_agents) {
    return Allocation{std::vector<std::uint32_t>(total_agents, 0)};
  }
  bool operator==(const Allocation&) const = default;
};

struct WelfareResult {
  Allocation alloc;
  Rational welfare;
};

// Memoizing solver bound to one report profile. Results are keyed on the
// feasible set (not the coalition), so coalitions that reach the same buyers
// share work; the committed allocation is packed into the key when it fits.
class WelfareContext {
 public:
  explicit WelfareContext(Profile profile)
      : p_(std::move(profile)), g_(reported_graph(p_)) {
    const int total = p_.total_agents();
    empty_ = Allocation::none(total);
    if (p_.kind == ItemKind::homogeneous) {
      for (int i = 1; i < total; ++i) {
        const auto& m = p_.vals[i].marginals;
        if (p_.vals[i].kind != ItemKind::homogeneous ||
            static_cast<int>(m.size()) != p_.k)
          throw MalformedProfileError("buyer valuation does not match supply");
        for (std::size_t q = 1; q < m.size(); ++q)
          if (m[q] > m[q - 1])
            throw MalformedProfileError("marginal values must not increase");
      }
      holding_bits_ = std::bit_width(static_cast<unsigned>(p_.k));
    } else {
      const std::size_t table = std::size_t{1} << p_.m;
      for (int i = 1; i < total; ++i) {
        const auto& v = p_.vals[i];
        if (v.kind != ItemKind::combinatorial || v.bundle.size() != table ||
            v.bundle[0] != 0)
          throw MalformedProfileError("buyer needs a full bundle table");
      }
      holding_bits_ = p_.m;
    }
    cacheable_ = total + (total - 1) * holding_bits_ <= 64;
  }

  const Profile& profile() const { return p_; }

  // False when a cache key (feasible set + committed holdings) does not fit
  // in 64 bits; every query then runs on the uncached scratch path.
  bool cache_enabled() const { return cacheable_; }
  const Graph& graph() const { return g_; }

  Mask feasible(Mask coalition) {
    auto it = feas_.find(coalition);
    if (it != feas_.end()) return it->second;
    const Mask fs = feasible_set(g_, coalition);
    feas_.emplace(coalition, fs);
    return fs;
  }

  // Best welfare over allocations that extend `committed` on feasible buyers.
  Rational welfare(Mask coalition, const Allocation& committed) {
    return lookup(coalition, committed).welfare;
  }
  Rational welfare(Mask coalition) { return welfare(coalition, empty_); }

  WelfareResult solve(Mask coalition, const Allocation& committed) {
    return lookup(coalition, committed);
  }
  WelfareResult solve(Mask coalition) { return solve(coalition, empty_); }

 private:
  const WelfareResult& lookup(Mask coalition, const Allocation& committed) {
    check_committed(committed);
    const Mask fs = feasible(coalition);
    std::uint64_t key = 0;
    if (cacheable_) {
      key = fs;
      int shift = p_.total_agents();
      for (int i = 1; i < p_.total_agents(); ++i) {
        key |= static_cast<std::uint64_t>(committed.h[i]) << shift;
        shift += holding_bits_;
      }
      auto it = memo_.find(key);
      if (it != memo_.end()) return it->second;
    }
    WelfareResult r = p_.kind == ItemKind::homogeneous
                          ? solve_homogeneous(fs, committed)
                          : solve_combinatorial(fs, committed);
    if (!cacheable_) {
      scratch_ = std::move(r);
      return scratch_;
    }
    return memo_.emplace(key, std::move(r)).first->second;
  }

  void check_committed(const Allocation& c) const {
    if (static_cast<int>(c.h.size()) != p_.total_agents())
      throw InfeasibleCommittedError("committed allocation has wrong size");
    if (c.h[kSeller] != 0)
      throw InfeasibleCommittedError("seller cannot hold items");
    if (p_.kind == ItemKind::homogeneous) {
      std::uint64_t sum = 0;
      for (auto q : c.h) sum += q;
      if (sum > static_cast<std::uint64_t>(p_.k))
        throw InfeasibleCommittedError("committed quantities exceed supply");
    } else {
      const std::uint32_t all_items = (std::uint32_t{1} << p_.m) - 1;
      std::uint32_t taken = 0;
      for (auto b : c.h) {
        if (b & ~all_items)
          throw InfeasibleCommittedError("committed bundle has unknown item");
        if (b & taken)
          throw InfeasibleCommittedError("item committed to two buyers");
        taken |= b;
      }
    }
  }

  // Greedy on marginal values; valid because each buyer's marginals are
  // non-increasing. Ties go to the lowest index, and items with zero marginal
  // value stay with the seller, so the result is the smallest optimal
  // allocation in that order.
  WelfareResult solve_homogeneous(Mask fs, const Allocation& committed) const {
    WelfareResult r{committed, Rational(0)};
    int remaining = p_.k;
    for (int i = 1; i < p_.total_agents(); ++i) {
      r.welfare += p_.vals[i].value(committed.h[i]);
      remaining -= static_cast<int>(committed.h[i]);
    }
    while (remaining > 0) {
      const Rational* best_m = nullptr;
      int best_i = -1;
      for (Mask m = fs; m;) {
        const int i = std::countr_zero(m);
        m &= m - 1;
        const auto q = r.alloc.h[i];
        if (q >= static_cast<std::uint32_t>(p_.k)) continue;
        const Rational& mv = p_.vals[i].marginals[q];
        if (mv > 0 && (best_m == nullptr || mv > *best_m)) {
          best_m = &mv;
          best_i = i;
        }
      }
      if (best_i < 0) break;
      r.welfare += *best_m;
      ++r.alloc.h[best_i];
      --remaining;
    }
    return r;
  }

  // Depth-first search over the uncommitted items in declared order, trying
  // "leave with the seller" first and then feasible buyers by index. Strict
  // improvement keeps the first maximizer found, i.e. the lexicographically
  // smallest one in that owner order.
  WelfareResult solve_combinatorial(Mask fs, const Allocation& committed) const {
    std::vector<int> buyers;
    for (Mask m = fs; m;) {
      buyers.push_back(std::countr_zero(m));
      m &= m - 1;
    }
    std::uint32_t taken = 0;
    for (auto b : committed.h) taken |= b;
    std::vector<int> free_items;
    for (int j = 0; j < p_.m; ++j)
      if (!((taken >> j) & 1)) free_items.push_back(j);

    double leaves = 1;
    for (std::size_t t = 0; t < free_items.size(); ++t)
      leaves *= static_cast<double>(buyers.size() + 1);
    if (leaves > 1e6)
      throw SizeLimitError("combinatorial search exceeds 1e6 assignments");

    Allocation cur = committed;
    Rational cur_w = 0;
    for (int i = 1; i < p_.total_agents(); ++i)
      cur_w += p_.vals[i].value(committed.h[i]);
    WelfareResult best{committed, cur_w};  // the leave-everything extension
    dfs(buyers, free_items, 0, cur, cur_w, best);
    return best;
  }

  void dfs(const std::vector<int>& buyers, const std::vector<int>& free_items,
           std::size_t depth, Allocation& cur, const Rational& cur_w,
           WelfareResult& best) const {
    if (depth == free_items.size()) {
      if (cur_w > best.welfare) best = {cur, cur_w};
      return;
    }
    const std::uint32_t item = std::uint32_t{1} << free_items[depth];
    dfs(buyers, free_items, depth + 1, cur, cur_w, best);  // unassigned
    for (int i : buyers) {
      const auto& v = p_.vals[i];
      const Rational gain = v.value(cur.h[i] | item) - v.value(cur.h[i]);
      cur.h[i] |= item;
      dfs(buyers, free_items, depth + 1, cur, cur_w + gain, best);
      cur.h[i] &= ~item;
    }
  }

  Profile p_;
  Graph g_;
  Allocation empty_;
  int holding_bits_ = 0;
  bool cacheable_ = false;
  std::unordered_map<Mask, Mask> feas_;
  std::unordered_map<std::uint64_t, WelfareResult> memo_;
  WelfareResult scratch_;
};

// One-shot convenience around WelfareContext.
inline WelfareResult max_welfare(const Profile& p, Mask coalition,
                                 const Allocation& committed) {
  WelfareContext ctx(p);
  return ctx.solve(coalition, committed);
}

inline WelfareResult max_welfare(const Profile& p, Mask coalition) {
  return max_welfare(p, coalition, Allocation::none(p.total_agents()));
}

// Independent oracle: enumerate every extension outright and take the maximum.
// Exponential on purpose; throws OracleTooLargeError beyond ~1e6 candidates.
inline WelfareResult brute_force_welfare(const Profile& p, Mask coalition,
                                         const Allocation& committed) {
  const int total = p.total_agents();
  if (static_cast<int>(committed.h.size()) != total)
    throw InfeasibleCommittedError("committed allocation has wrong size");
  const Mask fs = feasible_set(p, coalition);
  std::vector<int> buyers;
  for (int i = 1; i < total; ++i)
    if (contains(fs, i)) buyers.push_back(i);

  if (p.kind == ItemKind::homogeneous) {
    int remaining = p.k;
    for (auto q : committed.h) remaining -= static_cast<int>(q);
    if (remaining < 0)
      throw InfeasibleCommittedError("committed quantities exceed supply");
    double leaves = 1;
    for (std::size_t t = 0; t < buyers.size(); ++t)
      leaves *= static_cast<double>(remaining + 1);
    if (leaves > 1e6)
      throw OracleTooLargeError("brute force exceeds 1e6 candidates");
    std::vector<int> extra(buyers.size(), 0);
    WelfareResult best;
    bool have = false;
    for (;;) {
      int sum = 0;
      for (int e : extra) sum += e;
      if (sum <= remaining) {
        Allocation a = committed;
        for (std::size_t t = 0; t < buyers.size(); ++t) a.h[buyers[t]] += extra[t];
        Rational w = 0;
        for (int i = 1; i < total; ++i) w += p.vals[i].value(a.h[i]);
        if (!have || w > best.welfare) {
          best = {std::move(a), std::move(w)};
          have = true;
        }
      }
      std::size_t d = 0;
      while (d < extra.size() && extra[d] == remaining) extra[d++] = 0;
      if (d == extra.size()) break;
      ++extra[d];
    }
    return best;
  }

  const std::uint32_t all_items = (std::uint32_t{1} << p.m) - 1;
  std::uint32_t taken = 0;
  for (auto b : committed.h) {
    if (b & taken)
      throw InfeasibleCommittedError("item committed to two buyers");
    taken |= b;
  }
  if (taken & ~all_items)
    throw InfeasibleCommittedError("committed bundle has unknown item");
  std::vector<int> free_items;
  for (int j = 0; j < p.m; ++j)
    if (!((taken >> j) & 1)) free_items.push_back(j);
  double leaves = 1;
  for (std::size_t t = 0; t < free_items.size(); ++t)
    leaves *= static_cast<double>(buyers.size() + 1);
  if (leaves > 1e6)
    throw OracleTooLargeError("brute force exceeds 1e6 candidates");
  std::vector<std::size_t> owner(free_items.size(), 0);  // 0 = unassigned
  WelfareResult best;
  bool have = false;
  for (;;) {
    Allocation a = committed;
    for (std::size_t t = 0; t < free_items.size(); ++t)
      if (owner[t] != 0)
        a.h[buyers[owner[t] - 1]] |= std::uint32_t{1} << free_items[t];
    Rational w = 0;
    for (int i = 1; i < total; ++i) w += p.vals[i].value(a.h[i]);
    if (!have || w > best.welfare) {
      best = {std::move(a), std::move(w)};
      have = true;
    }
    std::size_t d = 0;
    while (d < owner.size() && owner[d] == buyers.size()) owner[d++] = 0;
    if (d == owner.size()) break;
    ++owner[d];
  }
  return best;
}

inline WelfareResult brute_force_welfare(const Profile& p, Mask coalition) {
  return brute_force_welfare(p, coalition, Allocation::none(p.total_agents()));
}

}  // namespace pda
