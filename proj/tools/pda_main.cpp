// Command-line front end: run a mechanism on an instance file, compute
// contributions, audit properties, batch experiments, and generate instances.
#include "pda/pda.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdint>
#include <exception>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace {

using pda::Json;
using pda::Rational;

// Exact value plus a float convenience for downstream tools.
Json rat(const Rational& r) {
  return Json{{"exact", pda::to_string(r)}, {"float", pda::to_double(r)}};
}

Json id_list(const pda::Instance& inst, pda::Mask m) {
  Json a = Json::array();
  while (m) {
    const int i = std::countr_zero(m);
    m &= m - 1;
    a.push_back(inst.ids[i]);
  }
  return a;
}

Json order_ids(const pda::Instance& inst, const pda::Order& o) {
  Json a = Json::array();
  for (auto i : o) a.push_back(inst.ids[i]);
  return a;
}

Json holding_json(const pda::Instance& inst, std::uint32_t h) {
  if (inst.kind == pda::ItemKind::homogeneous) return h;
  Json items = Json::array();
  for (std::size_t j = 0; j < inst.items.size(); ++j)
    if ((h >> j) & 1) items.push_back(inst.items[j]);
  return items;
}

Json outcome_json(const pda::Instance& inst, const pda::Outcome& out) {
  Json alloc = Json::object();
  Json pay = Json::object();
  for (int i = 1; i < inst.total_agents(); ++i) {
    alloc[inst.ids[i]] = holding_json(inst, out.alloc.h[i]);
    pay[inst.ids[i]] = rat(out.pay[i]);
  }
  return Json{{"order", order_ids(inst, out.order)},
              {"traversed", id_list(inst, out.traversed)},
              {"alloc", std::move(alloc)},
              {"pay", std::move(pay)},
              {"revenue", rat(out.revenue)},
              {"sold", out.sold}};
}

pda::Mechanism parse_mechanism(const std::string& name) {
  if (name == "pda") return pda::Mechanism::pda;
  if (name == "cpda") return pda::Mechanism::cpda;
  return pda::Mechanism::vcg;
}

pda::Order parse_order(const pda::Instance& inst, const std::string& text) {
  pda::Order o;
  std::stringstream ss(text);
  std::string id;
  while (std::getline(ss, id, ',')) o.push_back(inst.index_of(id));
  pda::validate_order(o, inst.total_agents());
  return o;
}

void emit(const Json& j) { std::cout << j.dump(2) << "\n"; }

struct ModeFlags {
  std::string order;
  bool exact = false;
  int samples = 0;
  std::uint64_t seed = 1;

  void attach(CLI::App* cmd, bool with_order) {
    CLI::Option* s = cmd->add_option("--samples", samples,
                                     "Monte Carlo over this many orders");
    cmd->add_option("--seed", seed, "sampling seed")->needs(s);
    CLI::Option* e =
        cmd->add_flag("--exact", exact, "enumerate every order exactly");
    e->excludes(s);
    if (with_order) {
      CLI::Option* o = cmd->add_option(
          "--order", order, "comma-separated agent ids, e.g. s,b1,b2");
      o->excludes(e);
      o->excludes(s);
    }
  }
};

int cmd_run(const std::string& path, const std::string& mech_name,
            const ModeFlags& mode) {
  const pda::Instance inst = pda::load_instance(path);
  const pda::Mechanism mech = parse_mechanism(mech_name);
  pda::check_mechanism_kind(mech, inst);
  pda::WelfareContext ctx(pda::truthful(inst));

  Json j{{"instance", path}, {"mechanism", mech_name}};
  if (mech == pda::Mechanism::vcg) {
    if (!mode.order.empty())
      throw std::invalid_argument("vcg is order-free; drop --order");
    Json out = outcome_json(inst, pda::vcg_run(ctx));
    out.erase("order");
    out.erase("traversed");
    j["outcome"] = std::move(out);
  } else if (!mode.order.empty()) {
    j["outcome"] = outcome_json(inst, ctx.profile().kind ==
                                              pda::ItemKind::homogeneous
                                          ? pda::pda_run(ctx, parse_order(inst, mode.order))
                                          : pda::cpda_run(ctx, parse_order(inst, mode.order)));
  } else if (mode.exact) {
    pda::ExpectedOutcome e = pda::expected_exact(ctx);
    Json eu = Json::object();
    Json pay = Json::object();
    for (int i = 1; i < inst.total_agents(); ++i) {
      eu[inst.ids[i]] = rat(e.eu[i]);
      pay[inst.ids[i]] = rat(e.epay[i]);
    }
    j["expected"] = Json{{"orders", e.orders},
                         {"eu", std::move(eu)},
                         {"pay", std::move(pay)},
                         {"revenue", rat(e.revenue)},
                         {"sold", rat(e.sold)},
                         {"all_unsold", rat(e.all_unsold)},
                         {"loss", rat(e.loss)}};
  } else if (mode.samples > 0) {
    pda::SampledOutcome e = pda::expected_sampled(ctx, mode.samples, mode.seed);
    Json eu = Json::object();
    for (int i = 1; i < inst.total_agents(); ++i) {
      Json b = rat(e.eu[i]);
      b["se"] = e.eu_se[i];
      eu[inst.ids[i]] = std::move(b);
    }
    Json rev = rat(e.revenue);
    rev["se"] = e.revenue_se;
    j["expected"] = Json{{"samples", e.samples},
                         {"seed", e.seed},
                         {"eu", std::move(eu)},
                         {"revenue", std::move(rev)},
                         {"sold", rat(e.sold)},
                         {"all_unsold", rat(e.all_unsold)}};
  } else {
    throw std::invalid_argument("pick one of --order, --exact, --samples");
  }
  emit(j);
  return 0;
}

int cmd_shapley(const std::string& path, const ModeFlags& mode) {
  const pda::Instance inst = pda::load_instance(path);
  pda::WelfareContext ctx(pda::truthful(inst));
  Json j{{"instance", path}};
  Json phi = Json::object();
  if (mode.samples > 0) {
    pda::SampledShapley s =
        pda::shapley_sampled(ctx, mode.samples, mode.seed);
    for (int i = 0; i < inst.total_agents(); ++i) {
      Json b = rat(s.mean[i]);
      b["se"] = s.se[i];
      phi[inst.ids[i]] = std::move(b);
    }
    j["mode"] = "sampled";
    j["samples"] = s.samples;
    j["seed"] = s.seed;
    j["welfare"] = rat(s.sw_star);
  } else {
    pda::ShapleyResult s = pda::shapley_exact(ctx);
    Rational sum = 0;
    for (int i = 0; i < inst.total_agents(); ++i) {
      phi[inst.ids[i]] = rat(s.phi[i]);
      sum += s.phi[i];
    }
    j["mode"] = "exact";
    j["welfare"] = rat(s.sw_star);
    j["efficiency"] = rat(sum);  // equals the optimal full-coalition welfare
  }
  j["phi"] = std::move(phi);
  emit(j);
  return 0;
}

int cmd_audit(const std::string& path, const std::string& mech_name,
              const std::string& checks_text, const ModeFlags& mode) {
  const pda::Instance inst = pda::load_instance(path);
  const pda::Mechanism mech = parse_mechanism(mech_name);
  pda::check_mechanism_kind(mech, inst);
  const pda::AuditMode audit_mode =
      mode.samples > 0 ? pda::AuditMode::sampled(mode.samples, mode.seed)
                       : pda::AuditMode{};

  std::vector<std::string> checks;
  std::stringstream ss(checks_text);
  std::string c;
  while (std::getline(ss, c, ',')) checks.push_back(c);
  if (checks.empty()) throw std::invalid_argument("--checks lists no checks");

  Json report{{"instance", path}, {"mechanism", mech_name}};
  Json out_checks = Json::array();
  bool all_pass = true;
  for (const auto& name : checks) {
    Json entry{{"name", name}};
    if (name == "sf") {
      pda::FairnessReport r = pda::sf_audit(inst, mech, audit_mode);
      Json buyers = Json::array();
      for (const auto& b : r.buyers) {
        Json bj{{"agent", inst.ids[b.agent]},
                {"phi", rat(b.phi)},
                {"eu", rat(b.eu)},
                {"null_player", b.null_player},
                {"pass_lower", b.pass_lower},
                {"pass_upper", b.pass_upper}};
        bj["ratio"] = b.null_player ? Json() : rat(b.ratio);
        buyers.push_back(std::move(bj));
      }
      entry["pass"] = r.pass;
      entry["details"] = Json{{"exact", r.exact},
                              {"bound", rat(r.bound)},
                              {"eps_min", r.has_eps_min ? rat(r.eps_min) : Json()},
                              {"pass_lower", r.pass_lower},
                              {"pass_upper", r.pass_upper},
                              {"buyers", std::move(buyers)}};
    } else if (name == "ic") {
      auto grid = pda::DeviationGrid::standard();
      auto findings = pda::ic_audit(inst, mech, grid);
      Json fj = Json::array();
      for (const auto& f : findings)
        fj.push_back(Json{{"buyer", inst.ids[f.buyer]},
                          {"deviation", f.description},
                          {"truthful_eu", rat(f.truthful_eu)},
                          {"deviant_eu", rat(f.deviant_eu)},
                          {"gain", rat(f.gain)}});
      entry["pass"] = findings.empty();
      entry["details"] = Json{{"deviations", pda::ic_grid_size(inst, grid)},
                              {"findings", std::move(fj)}};
    } else if (name == "ir") {
      auto violations = pda::ir_audit(inst, mech, audit_mode);
      Json vj = Json::array();
      for (const auto& v : violations)
        vj.push_back(Json{{"order", order_ids(inst, v.order)},
                          {"buyer", inst.ids[v.buyer]},
                          {"utility", rat(v.u)}});
      entry["pass"] = violations.empty();
      entry["details"] =
          Json{{"exact", audit_mode.exact}, {"violations", std::move(vj)}};
    } else if (name == "unsold") {
      if (mech != pda::Mechanism::pda)
        throw std::invalid_argument(
            "the unsold check applies to the pda mechanism only");
      pda::UnsoldReport r = pda::unsold_rate_audit(inst);
      entry["pass"] = r.pass;
      entry["details"] = Json{{"mu", rat(r.mu)}, {"bound", rat(r.bound)}};
    } else if (name == "revenue") {
      if (mech == pda::Mechanism::vcg)
        throw std::invalid_argument(
            "the revenue identity applies to pda/cpda, not vcg");
      pda::RevenueReport r = pda::revenue_audit(inst);
      entry["pass"] = r.identity_holds;
      entry["details"] = Json{{"revenue", rat(r.revenue)},
                              {"phi_s", rat(r.phi_seller)},
                              {"loss", rat(r.loss)}};
    } else {
      throw std::invalid_argument("unknown check '" + name +
                                  "' (expected sf,ic,ir,unsold,revenue)");
    }
    all_pass = all_pass && entry["pass"].get<bool>();
    out_checks.push_back(std::move(entry));
  }
  report["checks"] = std::move(out_checks);
  report["pass"] = all_pass;
  emit(report);
  return all_pass ? 0 : 1;
}

int cmd_experiment(const pda::ExperimentConfig& cfg) {
  pda::ExperimentResult res = pda::run_experiment(cfg);
  const auto& s = res.summary;
  Json j{{"instances", s.instances},
         {"rows", s.rows},
         {"row_failures", s.row_failures},
         {"unsold_failures", s.unsold_failures},
         {"identity_failures", s.identity_failures},
         {"bound", rat(s.bound)},
         {"min_ratio", s.has_ratio ? rat(s.min_ratio) : Json()},
         {"max_ratio", s.has_ratio ? rat(s.max_ratio) : Json()},
         {"all_above_2_5", s.all_above_two_fifths},
         {"errors", s.errors},
         {"pass", s.pass}};
  if (cfg.out.empty()) {
    std::cout << res.csv;
    std::cerr << j.dump(2) << "\n";
  } else {
    j["csv"] = cfg.out;
    emit(j);
  }
  return s.pass ? 0 : 1;
}

int cmd_gen(const pda::ExperimentConfig& cfg, int index,
            const std::string& out) {
  const pda::Instance inst = pda::gen_instance(cfg, index);
  if (out.empty())
    std::cout << pda::instance_to_json(inst).dump(2) << "\n";
  else
    pda::save_instance(inst, out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"permutation auction laboratory"};
  app.require_subcommand(1);

  std::string instance_path;
  std::string mech_name = "pda";
  std::string checks = "sf,ic,ir,unsold,revenue";
  ModeFlags mode;
  pda::ExperimentConfig cfg;
  std::string kind_name = "homogeneous";
  std::string out_path;
  int gen_index = 0;

  CLI::App* run = app.add_subcommand("run", "run a mechanism on an instance");
  run->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  run->add_option("--mechanism", mech_name, "pda|cpda|vcg")
      ->check(CLI::IsMember({"pda", "cpda", "vcg"}))
      ->required();
  mode.attach(run, /*with_order=*/true);

  CLI::App* shapley = app.add_subcommand("shapley", "contribution report");
  shapley->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  ModeFlags shapley_mode;
  shapley_mode.attach(shapley, /*with_order=*/false);

  CLI::App* audit = app.add_subcommand("audit", "property checks");
  audit->add_option("--instance", instance_path, "instance JSON file")
      ->required();
  audit->add_option("--mechanism", mech_name, "pda|cpda|vcg")
      ->check(CLI::IsMember({"pda", "cpda", "vcg"}))
      ->required();
  audit->add_option("--checks", checks, "comma list: sf,ic,ir,unsold,revenue");
  ModeFlags audit_mode;
  audit_mode.attach(audit, /*with_order=*/false);

  CLI::App* experiment = app.add_subcommand("experiment", "batch run + CSV");
  experiment->add_option("--count", cfg.count, "number of instances");
  experiment->add_option("--n", cfg.n, "buyers per instance");
  experiment->add_option("--p", cfg.p, "edge probability")
      ->check(CLI::Range(0.0, 1.0));
  experiment->add_option("--lo", cfg.lo, "lowest valuation");
  experiment->add_option("--hi", cfg.hi, "highest valuation");
  experiment->add_option("--k", cfg.k, "supply (or item count)");
  experiment->add_option("--seed", cfg.seed, "generator seed");
  experiment->add_option("--kind", kind_name, "homogeneous|combinatorial")
      ->check(CLI::IsMember({"homogeneous", "combinatorial"}));
  std::string exp_mode = "exact";
  experiment->add_option("--mode", exp_mode, "exact|sampled")
      ->check(CLI::IsMember({"exact", "sampled"}));
  experiment->add_option("--samples", cfg.samples,
                         "orders per instance in sampled mode");
  experiment->add_option("--out", cfg.out, "CSV output path");

  CLI::App* gen = app.add_subcommand("gen", "generate an instance file");
  gen->add_option("--n", cfg.n, "buyers")->required();
  gen->add_option("--p", cfg.p, "edge probability")
      ->check(CLI::Range(0.0, 1.0))
      ->required();
  gen->add_option("--k", cfg.k, "supply (or item count)");
  gen->add_option("--seed", cfg.seed, "generator seed");
  gen->add_option("--lo", cfg.lo, "lowest valuation");
  gen->add_option("--hi", cfg.hi, "highest valuation");
  gen->add_option("--kind", kind_name, "homogeneous|combinatorial")
      ->check(CLI::IsMember({"homogeneous", "combinatorial"}));
  gen->add_option("--index", gen_index, "instance index within the seed");
  gen->add_option("--out", out_path, "output path (stdout when omitted)");

  CLI11_PARSE(app, argc, argv);

  try {
    cfg.kind = kind_name == "combinatorial" ? pda::ItemKind::combinatorial
                                            : pda::ItemKind::homogeneous;
    if (run->parsed()) return cmd_run(instance_path, mech_name, mode);
    if (shapley->parsed()) return cmd_shapley(instance_path, shapley_mode);
    if (audit->parsed())
      return cmd_audit(instance_path, mech_name, checks, audit_mode);
    if (experiment->parsed()) {
      cfg.exact = exp_mode == "exact";
      return cmd_experiment(cfg);
    }
    if (gen->parsed()) return cmd_gen(cfg, gen_index, out_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
