#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "pda/shapley.hpp"
#include "test_fixtures.hpp"

using namespace pda;

namespace {

Order order_of(const Instance& inst, std::initializer_list<const char*> ids) {
  Order o;
  for (const char* id : ids) o.push_back(inst.index_of(id));
  return o;
}

}  // namespace

TEST_CASE("attribution on the single-buyer market splits the surplus") {
  WelfareContext ctx(truthful(fixtures::single_instance()));
  const ShapleyResult r = shapley_exact(ctx);
  CHECK(r.phi[0] == 5);
  CHECK(r.phi[1] == 5);
  CHECK(r.sw_star == 10);
}

TEST_CASE("attribution on the chain rewards the intermediary") {
  const Instance inst = fixtures::chain3_instance();
  WelfareContext ctx(truthful(inst));
  const ShapleyResult r = shapley_exact(ctx);
  CHECK(r.phi[inst.index_of("s")] == Rational(7, 2));
  CHECK(r.phi[inst.index_of("A")] == Rational(7, 2));
  CHECK(r.phi[inst.index_of("B")] == 3);
  CHECK(r.sw_star == 10);
  CHECK(r.phi[0] + r.phi[1] + r.phi[2] == r.sw_star);
}

TEST_CASE("marginal contributions for fixed orders") {
  const Instance inst = fixtures::chain3_instance();
  WelfareContext ctx(truthful(inst));
  CHECK(marginal_contribution(ctx, order_of(inst, {"s", "A", "B"}),
                              inst.index_of("B")) == 9);
  CHECK(marginal_contribution(ctx, order_of(inst, {"B", "A", "s"}),
                              inst.index_of("B")) == 0);
  CHECK(marginal_contribution(ctx, order_of(inst, {"A", "B", "s"}),
                              inst.index_of("s")) == 10);

  CHECK_THROWS_AS(marginal_contribution(ctx, Order{0, 1}, 1),
                  MalformedOrderError);

  // Welfare is monotone, so no marginal contribution is ever negative; and
  // along one order they telescope to the grand-coalition welfare.
  const Instance tree10 = fixtures::tree10_instance();
  WelfareContext fctx(truthful(tree10));
  std::mt19937_64 rng(17);
  Order o = identity_order(tree10.total_agents());
  for (int t = 0; t < 20; ++t) {
    shuffle(o, rng);
    Rational sum = 0;
    for (AgentIndex a : o) {
      const Rational mc = marginal_contribution(fctx, o, a);
      CHECK(mc >= 0);
      sum += mc;
    }
    CHECK(sum == fctx.welfare(all_agents(tree10.total_agents())));
  }
}

TEST_CASE("subset and order formulations agree") {
  for (const Instance& inst :
       {fixtures::single_instance(), fixtures::chain3_instance(),
        fixtures::pq_instance(), fixtures::pair_only_instance()}) {
    WelfareContext ctx(truthful(inst));
    const ShapleyResult a = shapley_exact(ctx);
    const ShapleyResult b = shapley_by_orders(ctx);
    CHECK(a.phi == b.phi);
    CHECK(a.sw_star == b.sw_star);
  }
}

TEST_CASE("efficiency holds on the ten-buyer tree") {
  const Instance inst = fixtures::tree10_instance();
  WelfareContext ctx(truthful(inst));
  const ShapleyResult r = shapley_exact(ctx);
  Rational sum = 0;
  for (const Rational& phi : r.phi) {
    CHECK(phi >= 0);
    sum += phi;
  }
  CHECK(sum == 10);
  // J values the item at zero and bridges nobody: a null player.
  CHECK(r.phi[inst.index_of("J")] == 0);
}

TEST_CASE("disconnected buyers earn nothing, twins earn the same") {
  const Instance iso = fixtures::homog_instance(
      {{"A", {10}}, {"Z", {4}}}, {{"s", "A"}}, 1);
  WelfareContext ictx(truthful(iso));
  const ShapleyResult ir = shapley_exact(ictx);
  CHECK(ir.phi[iso.index_of("Z")] == 0);
  CHECK(ir.phi[iso.index_of("A")] == 5);
  CHECK(ir.phi[iso.index_of("s")] == 5);

  const Instance twins = fixtures::homog_instance(
      {{"A", {6}}, {"B", {6}}}, {{"s", "A"}, {"s", "B"}}, 1);
  WelfareContext tctx(truthful(twins));
  const ShapleyResult tr = shapley_exact(tctx);
  CHECK(tr.phi[1] == tr.phi[2]);
}

TEST_CASE("size limits guard the exponential paths") {
  std::vector<std::pair<std::string, std::vector<Rational>>> buyers;
  std::vector<fixtures::Edge> edges;
  for (int i = 1; i <= 12; ++i) {
    const std::string id = (i < 10 ? "b0" : "b") + std::to_string(i);
    buyers.push_back({id, {Rational(i)}});
    edges.push_back({"s", id});
  }
  const Instance big = fixtures::homog_instance(buyers, edges, 1);
  WelfareContext ctx(truthful(big));  // 13 agents
  CHECK_THROWS_AS(shapley_exact(ctx), SizeLimitError);

  WelfareContext tree10(truthful(fixtures::tree10_instance()));  // 11 agents
  CHECK_THROWS_AS(shapley_by_orders(tree10), SizeLimitError);
  CHECK_NOTHROW(shapley_exact(tree10));
}

TEST_CASE("sampling is deterministic and converges to the exact values") {
  const Instance inst = fixtures::chain3_instance();
  WelfareContext ctx(truthful(inst));
  const ShapleyResult exact = shapley_exact(ctx);

  const SampledShapley a = shapley_sampled(ctx, 4000, 7);
  const SampledShapley b = shapley_sampled(ctx, 4000, 7);
  CHECK(a.mean == b.mean);
  CHECK(a.se == b.se);
  CHECK(a.sw_star == 10);

  for (int i = 0; i < 3; ++i) {
    const double err = std::abs(to_double(a.mean[i] - exact.phi[i]));
    CHECK(err <= 3 * a.se[i] + 1e-12);
  }

  CHECK_THROWS_AS(shapley_sampled(ctx, 0, 7), std::invalid_argument);
}

TEST_CASE("a single sampled order telescopes to full welfare") {
  const Instance inst = fixtures::tree10_instance();
  WelfareContext ctx(truthful(inst));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const SampledShapley s = shapley_sampled(ctx, 1, seed);
    Rational sum = 0;
    for (const Rational& m : s.mean) sum += m;
    CHECK(sum == s.sw_star);
  }
}
