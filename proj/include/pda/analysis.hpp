// Audits that turn the mechanism's advertised properties into executable
// checks: fairness ratios against Shapley contributions, deviation scans,
// per-order rationality, the zero-sale probability bound, and the expected
// revenue identity.
#pragma once

#include "pda/errors.hpp"
#include "pda/mechanism.hpp"
#include "pda/model.hpp"
#include "pda/rational.hpp"
#include "pda/shapley.hpp"
#include "pda/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace pda {

enum class Mechanism { pda, cpda, vcg };

inline const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::pda: return "pda";
    case Mechanism::cpda: return "cpda";
    default: return "vcg";
  }
}

inline void check_mechanism_kind(Mechanism m, const Instance& inst) {
  if (m == Mechanism::pda && inst.kind != ItemKind::homogeneous)
    throw MalformedProfileError("pda requires the homogeneous item model");
  if (m == Mechanism::cpda && inst.kind != ItemKind::combinatorial)
    throw MalformedProfileError("cpda requires the combinatorial item model");
}

// The lower fairness bound asserted for each mechanism. The pivot baseline has
// none; its report still checks the upper direction.
inline Rational fairness_bound(Mechanism m, const Instance& inst) {
  const int n = inst.buyers();
  switch (m) {
    case Mechanism::pda:
      return std::max(Rational(1, inst.k + 1), Rational(1, n));
    case Mechanism::cpda:
      return Rational(1, n);
    default:
      return Rational(0);
  }
}

struct AuditMode {
  bool exact = true;
  int samples = 10000;
  std::uint64_t seed = 1;

  static AuditMode sampled(int samples, std::uint64_t seed) {
    return AuditMode{false, samples, seed};
  }
};

// ---------------------------------------------------------------------------
// Fairness: bound <= E[u_i]/phi_i <= 1 for every buyer that contributes, and
// E[u_i] = 0 for every buyer that does not.
// ---------------------------------------------------------------------------

struct BuyerFairness {
  AgentIndex agent = 0;
  Rational phi;
  Rational eu;
  bool null_player = false;  // phi == 0; then eu must be 0
  Rational ratio;            // eu / phi, only meaningful when !null_player
  bool pass_lower = true;
  bool pass_upper = true;
};

struct FairnessReport {
  Mechanism mechanism = Mechanism::pda;
  bool exact = true;
  Rational bound;
  std::vector<BuyerFairness> buyers;
  bool has_eps_min = false;
  Rational eps_min;  // min ratio over contributing buyers
  bool pass_lower = true;
  bool pass_upper = true;
  bool pass = true;
  int samples = 0;
  std::uint64_t seed = 0;
};

namespace detail {

// Assemble the per-buyer verdicts from already computed contributions and
// utilities. Exact inputs are compared with zero tolerance; sampled ones get
// three standard errors of slack.
inline FairnessReport build_fairness(Mechanism mech, bool exact, Rational bound,
                                     const std::vector<Rational>& phi,
                                     const std::vector<double>& phi_se,
                                     const std::vector<Rational>& eu,
                                     const std::vector<double>& eu_se) {
  FairnessReport rep;
  rep.mechanism = mech;
  rep.exact = exact;
  rep.bound = std::move(bound);
  const double bound_d = to_double(rep.bound);
  for (int i = 1; i < static_cast<int>(phi.size()); ++i) {
    BuyerFairness b;
    b.agent = i;
    b.phi = phi[i];
    b.eu = eu[i];
    if (phi[i] == 0) {
      b.null_player = true;
      // Exact: a null player must get exactly zero. Sampled: within noise.
      b.pass_lower = b.pass_upper =
          exact ? eu[i] == 0 : std::abs(to_double(eu[i])) <= 3 * eu_se[i];
    } else {
      b.ratio = eu[i] / phi[i];
      if (exact) {
        b.pass_lower = b.ratio >= rep.bound;
        b.pass_upper = b.ratio <= 1;
      } else {
        const double phid = to_double(phi[i]);
        const double eud = to_double(eu[i]);
        const double lo_se =
            std::sqrt(eu_se[i] * eu_se[i] +
                      bound_d * bound_d * phi_se[i] * phi_se[i]);
        const double hi_se =
            std::sqrt(eu_se[i] * eu_se[i] + phi_se[i] * phi_se[i]);
        b.pass_lower = eud >= bound_d * phid - 3 * lo_se;
        b.pass_upper = eud <= phid + 3 * hi_se;
      }
      if (!rep.has_eps_min || b.ratio < rep.eps_min) {
        rep.has_eps_min = true;
        rep.eps_min = b.ratio;
      }
    }
    rep.pass_lower = rep.pass_lower && b.pass_lower;
    rep.pass_upper = rep.pass_upper && b.pass_upper;
    rep.buyers.push_back(std::move(b));
  }
  rep.pass = rep.pass_lower && rep.pass_upper;
  return rep;
}

}  // namespace detail

inline FairnessReport sf_audit(const Instance& inst, Mechanism mech,
                               const AuditMode& mode = {}) {
  check_mechanism_kind(mech, inst);
  WelfareContext ctx(truthful(inst));
  const int total = inst.total_agents();

  std::vector<Rational> phi(total);
  std::vector<double> phi_se(total, 0.0);
  if (mode.exact || total <= kMaxExactShapleyAgents) {
    phi = shapley_exact(ctx).phi;
  } else {
    auto s = shapley_sampled(ctx, mode.samples, mode.seed);
    phi = std::move(s.mean);
    phi_se = std::move(s.se);
  }

  std::vector<Rational> eu(total);
  std::vector<double> eu_se(total, 0.0);
  if (mech == Mechanism::vcg) {
    Outcome out = vcg_run(ctx);  // deterministic: no orders involved
    for (int i = 1; i < total; ++i) eu[i] = utility(inst.vals, out, i);
  } else if (mode.exact) {
    eu = expected_exact(ctx).eu;
  } else {
    auto s = expected_sampled(ctx, mode.samples, mode.seed);
    eu = std::move(s.eu);
    eu_se = std::move(s.eu_se);
  }

  FairnessReport rep =
      detail::build_fairness(mech, mode.exact, fairness_bound(mech, inst), phi,
                             phi_se, eu, eu_se);
  if (!mode.exact) {
    rep.samples = mode.samples;
    rep.seed = mode.seed;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Incentive scan: no buyer may gain in expectation by shading its value
// report or by withholding invitations.
// ---------------------------------------------------------------------------

// Each reported number x may be replaced by mul*x + add. Hiding a neighbor
// models an invitation never sent, so the edge disappears from both reports.
struct DeviationGrid {
  std::vector<std::pair<Rational, Rational>> transforms;
  bool hide_subsets = true;

  static DeviationGrid standard() {
    DeviationGrid g;
    g.transforms = {{Rational(0), Rational(0)},
                    {Rational(1, 2), Rational(0)},
                    {Rational(1), Rational(0)},
                    {Rational(2), Rational(0)},
                    {Rational(1), Rational(1)}};
    return g;
  }
};

struct DeviationFinding {
  AgentIndex buyer = 0;
  std::string description;
  Rational truthful_eu;
  Rational deviant_eu;
  Rational gain;  // deviant - truthful, recorded only when > 0
};

namespace detail {

inline std::string transform_name(const std::pair<Rational, Rational>& t) {
  std::string s = "x" + to_string(t.first);
  if (t.second != 0) s += "+" + to_string(t.second);
  return s;
}

// Value slots a deviation may rewrite: the k per-unit marginals, or every
// non-empty bundle entry.
inline int value_slots(const Instance& inst) {
  return inst.kind == ItemKind::homogeneous
             ? inst.k
             : (1 << inst.items.size()) - 1;
}

inline Valuation apply_transforms(
    const Instance& inst, const Valuation& truth,
    const DeviationGrid& grid, const std::vector<int>& pick) {
  if (inst.kind == ItemKind::homogeneous) {
    std::vector<Rational> m(truth.marginals);
    for (std::size_t j = 0; j < m.size(); ++j) {
      const auto& t = grid.transforms[pick[j]];
      m[j] = t.first * m[j] + t.second;
    }
    for (std::size_t j = 1; j < m.size(); ++j)  // keep marginals non-increasing
      if (m[j] > m[j - 1]) m[j] = m[j - 1];
    return Valuation::homogeneous(std::move(m));
  }
  std::vector<Rational> b(truth.bundle);
  for (std::size_t j = 1; j < b.size(); ++j) {
    const auto& t = grid.transforms[pick[j - 1]];
    b[j] = t.first * b[j] + t.second;
  }
  return Valuation::combinatorial(std::move(b));
}

}  // namespace detail

inline std::uint64_t ic_grid_size(const Instance& inst,
                                  const DeviationGrid& grid) {
  const int slots = detail::value_slots(inst);
  std::uint64_t per_value = 1;
  for (int j = 0; j < slots; ++j) per_value *= grid.transforms.size();
  std::uint64_t n = 0;
  for (int i = 1; i < inst.total_agents(); ++i) {
    const std::uint64_t subsets =
        grid.hide_subsets ? std::uint64_t{1} << count(inst.neighbors[i]) : 1;
    n += subsets * per_value;
  }
  return n;
}

inline std::vector<DeviationFinding> ic_audit(
    const Instance& inst, Mechanism mech,
    const DeviationGrid& grid = DeviationGrid::standard()) {
  check_mechanism_kind(mech, inst);
  if (grid.transforms.empty())
    throw std::invalid_argument("deviation grid needs at least one transform");
  const int total = inst.total_agents();
  const int slots = detail::value_slots(inst);

  // One exact truthful run serves as the baseline for every buyer.
  WelfareContext truthful_ctx(truthful(inst));
  std::vector<Rational> base_eu(total);
  if (mech == Mechanism::vcg) {
    Outcome out = vcg_run(truthful_ctx);
    for (int i = 1; i < total; ++i) base_eu[i] = utility(inst.vals, out, i);
  } else {
    base_eu = expected_exact(truthful_ctx).eu;
  }

  std::vector<DeviationFinding> findings;
  for (int i = 1; i < total; ++i) {
    const Mask reported = inst.neighbors[i];
    Mask hidden = 0;
    for (;;) {  // submasks of the true neighbor set, in increasing mask order
      if (!grid.hide_subsets && hidden != 0) break;
      std::vector<int> pick(slots, 0);
      for (;;) {
        Profile dev = truthful(inst);
        dev.neighbors[i] = reported & ~hidden;
        for (Mask h = hidden; h;) {
          const int j = std::countr_zero(h);
          h &= h - 1;
          if (j < total) dev.neighbors[j] &= ~bit(i);
        }
        dev.vals[i] = detail::apply_transforms(inst, inst.vals[i], grid, pick);

        WelfareContext ctx(std::move(dev));
        Rational dev_eu;
        if (mech == Mechanism::vcg) {
          Outcome out = vcg_run(ctx);
          dev_eu = utility(inst.vals, out, i);
        } else {
          dev_eu = expected_exact(ctx, &inst.vals).eu[i];
        }
        if (dev_eu > base_eu[i]) {
          DeviationFinding f;
          f.buyer = i;
          f.description = "hide=";
          if (hidden == 0) f.description += "-";
          for (Mask h = hidden; h;) {
            const int j = std::countr_zero(h);
            h &= h - 1;
            f.description += inst.ids[j];
            if (h) f.description += "+";
          }
          f.description += " value=";
          for (int j = 0; j < slots; ++j) {
            if (j) f.description += ",";
            f.description += detail::transform_name(grid.transforms[pick[j]]);
          }
          f.truthful_eu = base_eu[i];
          f.deviant_eu = dev_eu;
          f.gain = dev_eu - base_eu[i];
          findings.push_back(std::move(f));
        }

        int d = 0;
        while (d < slots &&
               pick[d] + 1 == static_cast<int>(grid.transforms.size()))
          pick[d++] = 0;
        if (d == slots) break;
        ++pick[d];
      }
      if (hidden == reported) break;
      hidden = ((hidden | ~reported) + 1) & reported;
    }
  }
  return findings;
}

// ---------------------------------------------------------------------------
// Per-order rationality: a truthful buyer never ends an order out of pocket.
// ---------------------------------------------------------------------------

struct IrViolation {
  Order order;
  AgentIndex buyer = 0;
  Rational u;
};

inline std::vector<IrViolation> ir_audit(const Instance& inst, Mechanism mech,
                                         const AuditMode& mode = {}) {
  check_mechanism_kind(mech, inst);
  WelfareContext ctx(truthful(inst));
  const int total = inst.total_agents();
  std::vector<IrViolation> violations;
  auto record = [&](const Outcome& out) {
    for (int i = 1; i < total; ++i) {
      const Rational u = utility(inst.vals, out, i);
      if (u < 0 && violations.size() < 1000)
        violations.push_back({out.order, i, u});
    }
  };
  if (mech == Mechanism::vcg) {
    record(vcg_run(ctx));
    return violations;
  }
  if (mode.exact) {
    if (total > kMaxExactOrderAgents)
      throw SizeLimitError("exact order enumeration is limited to " +
                           std::to_string(kMaxExactOrderAgents) +
                           " agents; use sampling instead");
    Order o = identity_order(total);
    do {
      record(run_mechanism(ctx, o));
    } while (std::next_permutation(o.begin(), o.end()));
  } else {
    std::mt19937_64 rng(mix_seed(mode.seed, 0));
    Order o = identity_order(total);
    for (int s = 0; s < mode.samples; ++s) {
      shuffle(o, rng);
      record(run_mechanism(ctx, o));
    }
  }
  return violations;
}

// ---------------------------------------------------------------------------
// Zero-sale probability: the chance that a run ends with nothing sold is at
// least 1/(k+1).
// ---------------------------------------------------------------------------

struct UnsoldReport {
  Rational mu;  // probability that no item is sold
  Rational bound;
  bool pass = false;
};

inline UnsoldReport unsold_rate_audit(const Instance& inst) {
  if (inst.kind != ItemKind::homogeneous)
    throw MalformedProfileError(
        "the zero-sale bound applies to the homogeneous item model");
  WelfareContext ctx(truthful(inst));
  UnsoldReport r;
  r.mu = expected_exact(ctx).all_unsold;
  r.bound = Rational(1, inst.k + 1);
  r.pass = r.mu >= r.bound;
  return r;
}

// ---------------------------------------------------------------------------
// Revenue identity: expected revenue equals the seller's Shapley contribution
// minus the expected welfare lost to early commitment.
// ---------------------------------------------------------------------------

struct RevenueReport {
  Rational revenue;     // expected, from summed payments
  Rational phi_seller;  // seller's Shapley contribution
  Rational loss;        // expected completion welfare minus committed welfare
  bool identity_holds = false;
};

inline RevenueReport revenue_audit(const Instance& inst) {
  WelfareContext ctx(truthful(inst));
  RevenueReport r;
  ExpectedOutcome e = expected_exact(ctx);
  r.revenue = e.revenue;
  r.loss = e.loss;
  r.phi_seller = shapley_exact(ctx).phi[kSeller];
  r.identity_holds = r.revenue == r.phi_seller - r.loss;
  return r;
}

}  // namespace pda
