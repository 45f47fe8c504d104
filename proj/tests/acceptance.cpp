// Acceptance gate: one line per criterion, nonzero exit if any fails.
#include <cstdio>
#include <string>
#include <vector>

#include "pda/pda.hpp"
#include "test_fixtures.hpp"

using namespace pda;

namespace {

int g_failures = 0;

void report(int num, bool pass, const std::string& detail) {
  std::printf("%s  criterion %2d: %s\n", pass ? "PASS" : "FAIL", num,
              detail.c_str());
  std::fflush(stdout);
  if (!pass) ++g_failures;
}

Instance random_homog(std::mt19937_64& rng, int n, int k, double p, int lo,
                      int hi) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.k = k;
  cfg.p = p;
  cfg.lo = lo;
  cfg.hi = hi;
  cfg.seed = rng();
  return gen_instance(cfg, 0);
}

Instance random_comb(std::mt19937_64& rng, int n, int items, double p, int lo,
                     int hi) {
  ExperimentConfig cfg;
  cfg.kind = ItemKind::combinatorial;
  cfg.n = n;
  cfg.k = items;
  cfg.p = p;
  cfg.lo = lo;
  cfg.hi = hi;
  cfg.seed = rng();
  return gen_instance(cfg, 0);
}

bool same_outcome(const Outcome& a, const Outcome& b) {
  return a.order == b.order && a.alloc == b.alloc && a.pay == b.pay &&
         a.traversed == b.traversed && a.revenue == b.revenue &&
         a.sold == b.sold;
}

}  // namespace

int main() {
  // ---- 1. k=1 fairness sandwich over 1000 generated markets -----------------
  ExperimentConfig c1;
  c1.count = 1000;
  c1.n = 6;
  c1.p = 0.3;
  c1.lo = 1;
  c1.hi = 100;
  c1.k = 1;
  c1.seed = 1;
  const ExperimentResult r1 = run_experiment(c1);
  {
    const bool pass = r1.summary.pass && r1.summary.errors.empty() &&
                      r1.summary.row_failures == 0 && r1.summary.has_ratio &&
                      r1.summary.min_ratio >= Rational(1, 2) &&
                      r1.summary.max_ratio <= 1;
    report(1, pass,
           "k=1, 1000 instances (n=6, p=0.3, values 1-100): ratios in [" +
               to_string(r1.summary.min_ratio) + ", " +
               to_string(r1.summary.max_ratio) + "], " +
               std::to_string(r1.summary.row_failures) + " row failures");
  }

  // ---- 2. k=2..5 sandwich, 200 markets each ---------------------------------
  int unsold_failures = r1.summary.unsold_failures;
  int identity_failures = r1.summary.identity_failures;
  {
    bool pass = true;
    bool above_two_fifths = true;
    std::string detail;
    for (int k = 2; k <= 5; ++k) {
      ExperimentConfig c2 = c1;
      c2.count = 200;
      c2.k = k;
      c2.seed = k;
      const ExperimentResult r2 = run_experiment(c2);
      pass = pass && r2.summary.pass && r2.summary.errors.empty() &&
             r2.summary.has_ratio &&
             r2.summary.min_ratio >= Rational(1, k + 1) &&
             r2.summary.max_ratio <= 1;
      above_two_fifths = above_two_fifths && r2.summary.all_above_two_fifths;
      unsold_failures += r2.summary.unsold_failures;
      identity_failures += r2.summary.identity_failures;
      if (!detail.empty()) detail += ", ";
      detail += "k=" + std::to_string(k) + " min " +
                to_string(r2.summary.min_ratio);
    }
    detail += std::string("; all ratios above 2/5 (reported): ") +
              (above_two_fifths ? "yes" : "no");
    report(2, pass, "k=2..5, 200 instances each: " + detail);
  }

  const Instance chain3 = fixtures::chain3_instance();

  // ---- 3. The chain makes the k=1 lower bound tight -------------------------
  {
    const FairnessReport rep = sf_audit(chain3, Mechanism::pda);
    const BuyerFairness& b = rep.buyers[1];
    const bool pass = rep.pass && b.eu == Rational(3, 2) && b.phi == 3 &&
                      b.ratio == Rational(1, 2) &&
                      rep.eps_min == Rational(1, 2);
    report(3, pass,
           "chain tightness: E[u_B]/phi_B = " + to_string(b.ratio) +
               " against bound 1/2");
  }

  // ---- 4. No profitable deviation in the full grid --------------------------
  std::vector<Instance> homog_pool;
  std::vector<Instance> comb_pool;
  {
    std::mt19937_64 rng(41);
    for (int i = 0; i < 50; ++i)
      homog_pool.push_back(
          random_homog(rng, 2 + i % 3, 1 + i % 2, 0.45, 1, 10));
    for (int i = 0; i < 20; ++i)
      comb_pool.push_back(random_comb(rng, 2 + i % 2, 2, 0.6, 0, 8));

    std::uint64_t grid = 0;
    std::size_t findings = 0;
    for (const Instance& inst : homog_pool) {
      findings += ic_audit(inst, Mechanism::pda).size();
      grid += ic_grid_size(inst, DeviationGrid::standard());
    }
    for (const Instance& inst : comb_pool) {
      findings += ic_audit(inst, Mechanism::cpda).size();
      grid += ic_grid_size(inst, DeviationGrid::standard());
    }
    report(4, findings == 0,
           "deviation scan: " + std::to_string(findings) +
               " strict gains across " + std::to_string(grid) +
               " deviations on 50 + 20 instances");
  }

  // ---- 5. Truthful per-order utility never goes negative --------------------
  {
    std::size_t violations = 0;
    for (const Instance& inst : homog_pool)
      violations += ir_audit(inst, Mechanism::pda).size();
    for (const Instance& inst : comb_pool)
      violations += ir_audit(inst, Mechanism::cpda).size();
    violations += ir_audit(chain3, Mechanism::pda).size();
    violations += ir_audit(fixtures::single_instance(), Mechanism::pda).size();
    violations += ir_audit(fixtures::pq_instance(), Mechanism::cpda).size();
    report(5, violations == 0,
           "rationality: " + std::to_string(violations) +
               " negative-utility orders across every tested instance");
  }

  // ---- 6. Zero-sale probability stays above 1/(k+1) -------------------------
  {
    const Instance three = fixtures::homog_instance(
        {{"A", {5, 5, 0}}, {"B", {4, 4, 4}}}, {{"s", "A"}, {"s", "B"}}, 3);
    const UnsoldReport small = unsold_rate_audit(three);
    const bool pass = unsold_failures == 0 && small.pass &&
                      small.mu == Rational(1, 3);
    report(6, pass,
           "zero-sale bound: " + std::to_string(unsold_failures) +
               " failures over criteria 1-2; two-buyer k=3 market has mu = " +
               to_string(small.mu) + " >= 1/4");
  }

  // ---- 7. Expected revenue equals phi_s minus expected loss -----------------
  {
    const RevenueReport rev = revenue_audit(chain3);
    bool pass = identity_failures == 0 && rev.identity_holds &&
                rev.revenue == Rational(-19, 6) &&
                rev.phi_seller == Rational(7, 2) && rev.loss == Rational(20, 3);
    pass = pass && revenue_audit(fixtures::single_instance()).identity_holds;
    pass = pass && revenue_audit(fixtures::pq_instance()).identity_holds;
    for (int i = 0; i < 10; ++i)
      pass = pass && revenue_audit(homog_pool[i]).identity_holds;
    report(7, pass,
           "revenue identity: " + std::to_string(identity_failures) +
               " failures over criteria 1-2; chain gives " +
               to_string(rev.revenue) + " = " + to_string(rev.phi_seller) +
               " - " + to_string(rev.loss));
  }

  // ---- 8. The pivot baseline is provably unfair here ------------------------
  {
    const FairnessReport rep = sf_audit(chain3, Mechanism::vcg);
    const BuyerFairness& a = rep.buyers[0];
    const bool pass = !rep.pass && !a.pass_upper && a.eu == 10 &&
                      a.phi == Rational(7, 2);
    report(8, pass,
           "pivot baseline: u_A = " + to_string(a.eu) + " > phi_A = " +
               to_string(a.phi) + ", upper bound violated as expected");
  }

  // ---- 9. Greedy and search solvers match their exhaustive oracles ----------
  {
    std::mt19937_64 rng(777);
    int mismatches = 0;
    for (int t = 0; t < 500; ++t) {
      const int n = 2 + static_cast<int>(bounded(rng, 4));  // 2..5
      const int k = 1 + static_cast<int>(bounded(rng, 4));  // 1..4
      const Instance inst = random_homog(rng, n, k, 0.5, 0, 12);
      const Profile p = truthful(inst);
      WelfareContext ctx(p);
      const Mask everyone = all_agents(inst.total_agents());
      const Mask coalition =
          static_cast<Mask>(bounded(rng, everyone + 1)) & everyone;
      Allocation committed = Allocation::none(inst.total_agents());
      int left = k;
      for (int i = 1; i < inst.total_agents() && left > 0; ++i) {
        const int q = static_cast<int>(bounded(rng, left + 1)) / 2;
        committed.h[i] = q;
        left -= q;
      }
      if (ctx.welfare(coalition, committed) !=
          brute_force_welfare(p, coalition, committed).welfare)
        ++mismatches;
    }
    for (int t = 0; t < 100; ++t) {
      const int n = 2 + static_cast<int>(bounded(rng, 3));  // 2..4
      const Instance inst = random_comb(rng, n, 2, 0.5, 0, 9);
      const Profile p = truthful(inst);
      WelfareContext ctx(p);
      const Mask everyone = all_agents(inst.total_agents());
      const Mask coalition =
          static_cast<Mask>(bounded(rng, everyone + 1)) & everyone;
      Allocation committed = Allocation::none(inst.total_agents());
      if (bounded(rng, 2))
        committed.h[1 + bounded(rng, inst.buyers())] =
            1 + static_cast<std::uint32_t>(bounded(rng, 3));
      if (ctx.welfare(coalition, committed) !=
          brute_force_welfare(p, coalition, committed).welfare)
        ++mismatches;
      if (ctx.welfare(everyone) != brute_force_welfare(p, everyone).welfare)
        ++mismatches;
    }
    report(9, mismatches == 0,
           "solver vs oracle: " + std::to_string(mismatches) +
               " mismatches on 500 homogeneous + 100 two-item draws");
  }

  // ---- 10. Infeasible buyers' reports cannot matter -------------------------
  {
    std::mt19937_64 rng(888);
    int done = 0;
    int diffs = 0;
    int idx = 0;
    while (done < 100 && idx < 4000) {
      const int n = 3 + idx % 2;
      const Instance inst = random_homog(rng, n, 1 + idx % 2, 0.35, 1, 9);
      ++idx;
      const Profile base = truthful(inst);
      const Mask everyone = all_agents(inst.total_agents());
      const Mask fs = feasible_set(base, everyone);
      std::vector<int> infeasible;
      for (int i = 1; i < inst.total_agents(); ++i)
        if (!contains(fs, i)) infeasible.push_back(i);
      if (infeasible.empty()) continue;
      const int i = infeasible[bounded(rng, infeasible.size())];

      Profile dev = base;
      std::vector<Rational> marg(inst.k);
      for (auto& x : marg) x = Rational(bounded(rng, 50));
      std::sort(marg.begin(), marg.end(), std::greater<Rational>());
      dev.vals[i] = Valuation::homogeneous(std::move(marg));
      dev.neighbors[i] = inst.neighbors[i] &
                         static_cast<Mask>(bounded(rng, everyone + 1));

      WelfareContext base_ctx(base);
      WelfareContext dev_ctx(dev);
      Order o = identity_order(inst.total_agents());
      do {
        if (!same_outcome(run_mechanism(base_ctx, o),
                          run_mechanism(dev_ctx, o)))
          ++diffs;
      } while (std::next_permutation(o.begin(), o.end()));
      ++done;
    }
    report(10, done == 100 && diffs == 0,
           "report independence: " + std::to_string(diffs) +
               " diverging orders across " + std::to_string(done) +
               " mutations of infeasible buyers");
  }

  // ---- 11. The attribution engine behaves like one --------------------------
  {
    std::mt19937_64 rng(999);
    std::vector<Instance> pool = {fixtures::single_instance(), chain3,
                                  fixtures::pq_instance(),
                                  fixtures::pair_only_instance()};
    for (int t = 0; t < 16; ++t)
      pool.push_back(random_homog(rng, 2 + t % 4, 1 + t % 3, 0.5, 0, 10));
    bool pass = true;
    for (const Instance& inst : pool) {
      const int total = inst.total_agents();
      WelfareContext ctx(truthful(inst));
      const ShapleyResult ex = shapley_exact(ctx);
      const ShapleyResult by = shapley_by_orders(ctx);
      pass = pass && ex.phi == by.phi && ex.sw_star == by.sw_star;
      Rational sum = 0;
      for (const Rational& phi : ex.phi) sum += phi;
      pass = pass && sum == ctx.welfare(all_agents(total));
      // Null players take nothing; symmetric agents take the same.
      for (int i = 0; i < total; ++i) {
        bool null_player = true;
        for (Mask b = 0; null_player && b < all_agents(total); ++b) {
          if (contains(b, i)) continue;
          if (ctx.welfare(b | bit(i)) != ctx.welfare(b)) null_player = false;
        }
        if (null_player) pass = pass && ex.phi[i] == 0;
        for (int j = i + 1; j < total; ++j) {
          bool twins = true;
          for (Mask b = 0; twins && b < all_agents(total); ++b) {
            if (contains(b, i) || contains(b, j)) continue;
            if (ctx.welfare(b | bit(i)) != ctx.welfare(b | bit(j)))
              twins = false;
          }
          if (twins) pass = pass && ex.phi[i] == ex.phi[j];
        }
      }
    }
    // Monte Carlo estimates stay within three standard errors.
    for (const Instance& inst :
         {chain3, random_homog(rng, 5, 2, 0.5, 1, 10)}) {
      WelfareContext ctx(truthful(inst));
      const ShapleyResult ex = shapley_exact(ctx);
      const SampledShapley mc = shapley_sampled(ctx, 10000, 2);
      for (int i = 0; i < inst.total_agents(); ++i) {
        const double err = std::abs(to_double(mc.mean[i] - ex.phi[i]));
        pass = pass && err <= 3 * mc.se[i] + 1e-9;
      }
    }
    report(11, pass,
           "attribution engine: efficiency, null players, symmetry, two "
           "formulations, and 10^4-sample estimates all consistent");
  }

  // ---- 12. The worked ten-buyer example, step by step -----------------------
  {
    const Instance tree10 = fixtures::tree10_instance();
    WelfareContext ctx(truthful(tree10));
    auto order_of = [&](std::initializer_list<const char*> ids) {
      Order o;
      for (const char* id : ids) o.push_back(tree10.index_of(id));
      return o;
    };
    const Outcome g = pda_run(
        ctx, order_of({"D", "I", "s", "B", "F", "G", "A", "C", "E", "H", "J"}));
    const Outcome h = pda_run(
        ctx, order_of({"D", "I", "s", "B", "F", "H", "A", "C", "E", "G", "J"}));
    const AgentIndex G = tree10.index_of("G"), H = tree10.index_of("H");
    const bool pass = g.pay[G] == 5 && g.alloc.h[G] == 1 && h.pay[H] == -5 &&
                      h.alloc.h[H] == 0 &&
                      utility(ctx.profile().vals, h, H) == 5;
    report(12, pass,
           "worked example: G pays 5 - 7 + 7 = " + to_string(g.pay[G]) +
               " and wins; H is rewarded " + to_string(-h.pay[H]) +
               " for connecting I");
  }

  if (g_failures == 0) {
    std::printf("acceptance: all 12 criteria pass\n");
    return 0;
  }
  std::printf("acceptance: %d criteria FAILED\n", g_failures);
  return 1;
}
