// The permutation mechanism for both item models, a classical pivot-payment
// baseline, and expected outcomes over arrival orders (full enumeration or
// Monte Carlo).
#pragma once

#include "pda/errors.hpp"
#include "pda/model.hpp"
#include "pda/rational.hpp"
#include "pda/rng.hpp"
#include "pda/welfare.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace pda {

constexpr int kMaxExactOrderAgents = 9;  // |V|! enumerated outcomes

struct Outcome {
  Order order;
  Allocation alloc;           // holdings actually committed by the run
  std::vector<Rational> pay;  // pay[0] (seller) stays 0
  Mask traversed = 0;         // buyers reached before the supply ran out
  Rational revenue;
  int sold = 0;  // units or items handed out
};

inline int holding_count(ItemKind kind, std::uint32_t h) {
  return kind == ItemKind::homogeneous ? static_cast<int>(h) : std::popcount(h);
}

// Walk the order, growing the known coalition one agent at a time. Each buyer
// receives its holding in the currently optimal extension and pays the harm
// its presence does to the rest: (optimum without it) - (optimum with it) +
// (its own reported value). Only the walked buyer's holding is committed; the
// rest of the hypothetical optimum stays hypothetical. The walk stops once
// every item is committed.
inline Outcome run_mechanism(WelfareContext& ctx, const Order& order) {
  const Profile& p = ctx.profile();
  const int total = p.total_agents();
  validate_order(order, total);

  Outcome out;
  out.order = order;
  out.alloc = Allocation::none(total);
  out.pay.assign(total, Rational(0));
  int remaining = p.item_count();
  Mask coalition = 0;
  for (AgentIndex a : order) {
    const Mask before = coalition;
    coalition |= bit(a);
    if (a == kSeller) continue;
    const Rational sw_before = ctx.welfare(before, out.alloc);
    WelfareResult opt = ctx.solve(coalition, out.alloc);
    const std::uint32_t pi = opt.alloc.h[a];
    out.pay[a] = sw_before - opt.welfare + p.vals[a].value(pi);
    out.alloc.h[a] = pi;
    out.traversed |= bit(a);
    remaining -= holding_count(p.kind, pi);
    if (remaining == 0) break;
  }
  out.sold = p.item_count() - remaining;
  out.revenue = 0;
  for (const auto& x : out.pay) out.revenue += x;
  return out;
}

inline Outcome pda_run(WelfareContext& ctx, const Order& order) {
  if (ctx.profile().kind != ItemKind::homogeneous)
    throw MalformedProfileError("pda_run expects the homogeneous item model");
  return run_mechanism(ctx, order);
}

inline Outcome cpda_run(WelfareContext& ctx, const Order& order) {
  if (ctx.profile().kind != ItemKind::combinatorial)
    throw MalformedProfileError("cpda_run expects the combinatorial item model");
  return run_mechanism(ctx, order);
}

// Pivot-payment baseline: allocate the full-coalition optimum; each winner
// pays the welfare others lose from its presence, with the agent's whole
// vertex (reports and all) removed from the counterfactual.
inline Outcome vcg_run(WelfareContext& ctx) {
  const Profile& p = ctx.profile();
  const int total = p.total_agents();
  const Mask everyone = all_agents(total);
  WelfareResult opt = ctx.solve(everyone);

  Outcome out;
  out.order = identity_order(total);
  out.alloc = opt.alloc;
  out.pay.assign(total, Rational(0));
  out.traversed = everyone & ~bit(kSeller);
  out.sold = 0;
  for (int i = 1; i < total; ++i) {
    out.sold += holding_count(p.kind, opt.alloc.h[i]);
    out.pay[i] = ctx.welfare(everyone & ~bit(i)) -
                 (opt.welfare - p.vals[i].value(opt.alloc.h[i]));
  }
  out.revenue = 0;
  for (const auto& x : out.pay) out.revenue += x;
  return out;
}

// Utility under the valuations in `vals` (pass the ground truth to judge a
// deviation, or the reported ones for the truthful case).
inline Rational utility(const std::vector<Valuation>& vals, const Outcome& out,
                        AgentIndex i) {
  return vals[i].value(out.alloc.h[i]) - out.pay[i];
}

// Averages over every arrival order, all exact.
struct ExpectedOutcome {
  std::vector<Rational> eu;    // expected utility per agent
  std::vector<Rational> epay;  // expected payment per agent
  Rational revenue;
  Rational sold;        // expected number of items handed out
  Rational all_unsold;  // probability that a run ends with nothing sold
  Rational loss;        // expected optimal-extension welfare minus committed
  std::uint64_t orders = 0;
};

// `true_vals`: valuations used for the utility averages; defaults to the
// profile's reported ones.
inline ExpectedOutcome expected_exact(WelfareContext& ctx,
                                      const std::vector<Valuation>* true_vals =
                                          nullptr) {
  const Profile& p = ctx.profile();
  const int total = p.total_agents();
  if (total > kMaxExactOrderAgents)
    throw SizeLimitError("exact order enumeration is limited to " +
                         std::to_string(kMaxExactOrderAgents) +
                         " agents; use sampling instead");
  const std::vector<Valuation>& vals = true_vals ? *true_vals : p.vals;
  const Mask everyone = all_agents(total);

  ExpectedOutcome e;
  e.eu.assign(total, Rational(0));
  e.epay.assign(total, Rational(0));
  e.revenue = e.sold = e.all_unsold = e.loss = 0;
  std::uint64_t empty_runs = 0;
  Order o = identity_order(total);
  do {
    ++e.orders;
    Outcome out = run_mechanism(ctx, o);
    for (int i = 1; i < total; ++i) {
      e.eu[i] += utility(vals, out, i);
      e.epay[i] += out.pay[i];
    }
    e.revenue += out.revenue;
    e.sold += out.sold;
    if (out.sold == 0) ++empty_runs;
    Rational committed_value = 0;
    for (int i = 1; i < total; ++i)
      committed_value += p.vals[i].value(out.alloc.h[i]);
    e.loss += ctx.welfare(everyone, out.alloc) - committed_value;
  } while (std::next_permutation(o.begin(), o.end()));
  for (auto& x : e.eu) x /= e.orders;
  for (auto& x : e.epay) x /= e.orders;
  e.revenue /= e.orders;
  e.sold /= e.orders;
  e.loss /= e.orders;
  e.all_unsold = Rational(empty_runs, e.orders);
  return e;
}

// Monte Carlo counterpart; means are exact rationals over the drawn orders,
// standard errors are double precision.
struct SampledOutcome {
  std::vector<Rational> eu;
  std::vector<double> eu_se;
  Rational revenue;
  double revenue_se = 0;
  Rational sold;
  Rational all_unsold;  // fraction of sampled runs that sold nothing
  int samples = 0;
  std::uint64_t seed = 0;
};

inline SampledOutcome expected_sampled(WelfareContext& ctx, int samples,
                                       std::uint64_t seed,
                                       const std::vector<Valuation>* true_vals =
                                           nullptr) {
  const Profile& p = ctx.profile();
  const int total = p.total_agents();
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  const std::vector<Valuation>& vals = true_vals ? *true_vals : p.vals;

  SampledOutcome e;
  e.samples = samples;
  e.seed = seed;
  e.eu.assign(total, Rational(0));
  e.eu_se.assign(total, 0.0);
  e.revenue = e.sold = e.all_unsold = 0;
  std::uint64_t empty_runs = 0;
  std::vector<double> eu_sq(total, 0.0);
  double rev_sq = 0;
  std::mt19937_64 rng(mix_seed(seed, 0));
  Order o = identity_order(total);
  for (int s = 0; s < samples; ++s) {
    shuffle(o, rng);
    Outcome out = run_mechanism(ctx, o);
    for (int i = 1; i < total; ++i) {
      const Rational u = utility(vals, out, i);
      e.eu[i] += u;
      const double ud = to_double(u);
      eu_sq[i] += ud * ud;
    }
    e.revenue += out.revenue;
    const double rd = to_double(out.revenue);
    rev_sq += rd * rd;
    e.sold += out.sold;
    if (out.sold == 0) ++empty_runs;
  }
  for (int i = 0; i < total; ++i) {
    e.eu[i] /= samples;
    const double m = to_double(e.eu[i]);
    e.eu_se[i] = std::sqrt(std::max(0.0, eu_sq[i] / samples - m * m) / samples);
  }
  e.revenue /= samples;
  const double rm = to_double(e.revenue);
  e.revenue_se = std::sqrt(std::max(0.0, rev_sq / samples - rm * rm) / samples);
  e.sold /= samples;
  e.all_unsold = Rational(empty_runs, static_cast<std::uint64_t>(samples));
  return e;
}

}  // namespace pda
