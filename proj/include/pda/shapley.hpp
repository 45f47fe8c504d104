// Shapley contributions of the cooperative game whose coalition value is the
// optimal welfare reachable through that coalition. Two exact routes (subset
// sum and order enumeration) plus a sampled estimator for larger instances.
#pragma once

#include "pda/errors.hpp"
#include "pda/model.hpp"
#include "pda/rational.hpp"
#include "pda/rng.hpp"
#include "pda/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace pda {

constexpr int kMaxExactShapleyAgents = 12;   // 2^12 coalition values
constexpr int kMaxOrderEnumerationAgents = 9;  // 9! orders

// phi[i] for every agent, seller included. sw_star is the full-coalition
// optimum; in exact mode the phi sum to it.
struct ShapleyResult {
  std::vector<Rational> phi;
  Rational sw_star;
};

// The welfare a single agent adds when it joins behind its predecessors in
// one fixed order. Non-negative: enlarging a coalition never hurts.
inline Rational marginal_contribution(WelfareContext& ctx, const Order& order,
                                      AgentIndex agent) {
  const int total = ctx.profile().total_agents();
  validate_order(order, total);
  Mask before = 0;
  for (AgentIndex a : order) {
    if (a == agent) break;
    before |= bit(a);
  }
  return ctx.welfare(before | bit(agent)) - ctx.welfare(before);
}

// Subset formulation: phi_i = sum over coalitions B without i of
// |B|! (N-1-|B|)! / N! * (v(B+i) - v(B)).
inline ShapleyResult shapley_exact(WelfareContext& ctx) {
  const int total = ctx.profile().total_agents();
  if (total > kMaxExactShapleyAgents)
    throw SizeLimitError("exact Shapley is limited to " +
                         std::to_string(kMaxExactShapleyAgents) +
                         " agents; use sampling instead");
  const std::size_t subsets = std::size_t{1} << total;
  std::vector<Rational> value(subsets);
  for (std::size_t b = 0; b < subsets; ++b)
    value[b] = ctx.welfare(static_cast<Mask>(b));

  const BigInt n_fact = factorial(total);
  std::vector<Rational> weight(total);  // indexed by |B|
  for (int b = 0; b < total; ++b)
    weight[b] = Rational(factorial(b) * factorial(total - 1 - b), n_fact);

  ShapleyResult r;
  r.sw_star = value[subsets - 1];
  r.phi.assign(total, Rational(0));
  for (int i = 0; i < total; ++i) {
    const Mask me = bit(i);
    for (std::size_t b = 0; b < subsets; ++b) {
      if (b & me) continue;
      r.phi[i] += weight[count(static_cast<Mask>(b))] * (value[b | me] - value[b]);
    }
  }
  return r;
}

// Order formulation: phi_i is i's average marginal value over every arrival
// order. Kept separate from shapley_exact so the two can check each other.
inline ShapleyResult shapley_by_orders(WelfareContext& ctx) {
  const int total = ctx.profile().total_agents();
  if (total > kMaxOrderEnumerationAgents)
    throw SizeLimitError("order enumeration is limited to " +
                         std::to_string(kMaxOrderEnumerationAgents) +
                         " agents; use sampling instead");
  ShapleyResult r;
  r.sw_star = ctx.welfare(all_agents(total));
  r.phi.assign(total, Rational(0));
  Order o = identity_order(total);
  std::uint64_t orders = 0;
  do {
    ++orders;
    Mask coalition = 0;
    Rational prev = 0;
    for (AgentIndex a : o) {
      coalition |= bit(a);
      Rational cur = ctx.welfare(coalition);
      r.phi[a] += cur - prev;
      prev = std::move(cur);
    }
  } while (std::next_permutation(o.begin(), o.end()));
  for (auto& phi : r.phi) phi /= orders;
  return r;
}

// Monte Carlo over uniformly random orders. mean[] is the exact rational mean
// of the sampled marginals; se[] the usual standard-error estimate.
struct SampledShapley {
  std::vector<Rational> mean;
  std::vector<double> se;
  Rational sw_star;
  int samples = 0;
  std::uint64_t seed = 0;
};

inline SampledShapley shapley_sampled(WelfareContext& ctx, int samples,
                                      std::uint64_t seed) {
  const int total = ctx.profile().total_agents();
  if (samples < 1) throw std::invalid_argument("need at least one sample");
  SampledShapley r;
  r.sw_star = ctx.welfare(all_agents(total));
  r.samples = samples;
  r.seed = seed;
  r.mean.assign(total, Rational(0));
  r.se.assign(total, 0.0);
  std::vector<double> sumsq(total, 0.0);
  std::mt19937_64 rng(mix_seed(seed, 0));
  Order o = identity_order(total);
  for (int s = 0; s < samples; ++s) {
    shuffle(o, rng);
    Mask coalition = 0;
    Rational prev = 0;
    for (AgentIndex a : o) {
      coalition |= bit(a);
      Rational cur = ctx.welfare(coalition);
      const Rational marginal = cur - prev;
      r.mean[a] += marginal;
      const double md = to_double(marginal);
      sumsq[a] += md * md;
      prev = std::move(cur);
    }
  }
  for (int i = 0; i < total; ++i) {
    r.mean[i] /= samples;
    const double m = to_double(r.mean[i]);
    const double var = std::max(0.0, sumsq[i] / samples - m * m);
    r.se[i] = std::sqrt(var / samples);
  }
  return r;
}

}  // namespace pda
