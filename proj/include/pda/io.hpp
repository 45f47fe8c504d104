// Instance files: a strict JSON reader (unknown fields are errors, problems
// carry field context) and a canonical writer that round-trips.
#pragma once

#include "pda/errors.hpp"
#include "pda/model.hpp"
#include "pda/rational.hpp"

#include "json.hpp"

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace pda {

using Json = nlohmann::json;

namespace detail {

inline Rational rational_from_json(const Json& j, const std::string& where) {
  if (j.is_number_unsigned()) return Rational(j.get<std::uint64_t>());
  if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
  if (j.is_string()) {
    try {
      return parse_rational(j.get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ParseError(where + ": " + e.what());
    }
  }
  throw ParseError(where + ": expected an integer or a \"p/q\" string");
}

inline Json rational_to_json(const Rational& r) {
  const BigInt num = numerator(r);
  if (denominator(r) == 1 && num >= std::numeric_limits<std::int64_t>::min() &&
      num <= std::numeric_limits<std::int64_t>::max())
    return num.convert_to<std::int64_t>();
  return to_string(r);
}

inline void reject_unknown_fields(const Json& j, const std::string& where,
                                  const std::set<std::string>& allowed) {
  for (const auto& [key, value] : j.items())
    if (!allowed.contains(key))
      throw ParseError(where + ": unknown field '" + key + "'");
}

inline const Json& require_field(const Json& j, const std::string& where,
                                 const std::string& key) {
  auto it = j.find(key);
  if (it == j.end()) throw ParseError(where + ": missing field '" + key + "'");
  return *it;
}

}  // namespace detail

inline Instance instance_from_json(const Json& j) {
  using detail::rational_from_json;
  using detail::require_field;
  if (!j.is_object()) throw ParseError("instance: expected a JSON object");

  Instance inst;
  const std::string kind =
      require_field(j, "instance", "kind").get<std::string>();
  if (kind == "homogeneous") {
    inst.kind = ItemKind::homogeneous;
    detail::reject_unknown_fields(j, "instance",
                                  {"kind", "k", "seller_neighbors", "buyers"});
    const Json& k = require_field(j, "instance", "k");
    if (!k.is_number_integer() || k.get<std::int64_t>() < 1)
      throw ParseError("instance.k: expected a positive integer");
    inst.k = k.get<int>();
  } else if (kind == "combinatorial") {
    inst.kind = ItemKind::combinatorial;
    detail::reject_unknown_fields(
        j, "instance", {"kind", "items", "seller_neighbors", "buyers"});
    const Json& items = require_field(j, "instance", "items");
    if (!items.is_array() || items.empty())
      throw ParseError("instance.items: expected a non-empty array");
    std::set<std::string> seen;
    for (const auto& it : items) {
      if (!it.is_string() || it.get<std::string>().empty())
        throw ParseError("instance.items: item names must be strings");
      if (!seen.insert(it.get<std::string>()).second)
        throw ParseError("instance.items: duplicate item '" +
                         it.get<std::string>() + "'");
      inst.items.push_back(it.get<std::string>());
    }
    if (inst.items.size() > 20)
      throw ParseError("instance.items: at most 20 items supported");
  } else {
    throw ParseError("instance.kind: expected 'homogeneous' or 'combinatorial'");
  }

  const Json& buyers = require_field(j, "instance", "buyers");
  if (!buyers.is_array()) throw ParseError("instance.buyers: expected an array");

  // First pass: collect and sort buyer ids so that indices follow id order.
  std::vector<std::string> buyer_ids;
  for (std::size_t b = 0; b < buyers.size(); ++b) {
    const std::string where = "buyers[" + std::to_string(b) + "]";
    if (!buyers[b].is_object()) throw ParseError(where + ": expected an object");
    const Json& id = require_field(buyers[b], where, "id");
    if (!id.is_string() || id.get<std::string>().empty())
      throw ParseError(where + ".id: expected a non-empty string");
    if (id.get<std::string>() == "s")
      throw ParseError(where + ".id: 's' names the seller");
    buyer_ids.push_back(id.get<std::string>());
  }
  std::vector<std::string> sorted = buyer_ids;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    throw ParseError("instance.buyers: duplicate buyer id");
  inst.ids.push_back("s");
  inst.ids.insert(inst.ids.end(), sorted.begin(), sorted.end());
  if (inst.total_agents() > kMaxAgents)
    throw ParseError("instance.buyers: at most 63 buyers supported");
  std::map<std::string, AgentIndex> index;
  for (int i = 0; i < inst.total_agents(); ++i) index[inst.ids[i]] = i;

  inst.neighbors.assign(inst.total_agents(), 0);
  inst.vals.assign(inst.total_agents(), Valuation{});

  auto neighbor_mask = [&](const Json& arr, const std::string& where) {
    if (!arr.is_array()) throw ParseError(where + ": expected an array of ids");
    Mask m = 0;
    for (const auto& e : arr) {
      if (!e.is_string())
        throw ParseError(where + ": expected an array of ids");
      auto it = index.find(e.get<std::string>());
      if (it == index.end())
        throw ParseError(where + ": unknown agent id '" +
                         e.get<std::string>() + "'");
      m |= bit(it->second);
    }
    return m;
  };

  inst.neighbors[kSeller] = neighbor_mask(
      require_field(j, "instance", "seller_neighbors"), "seller_neighbors");

  for (std::size_t b = 0; b < buyers.size(); ++b) {
    const std::string where = "buyers[" + std::to_string(b) + "]";
    const Json& buyer = buyers[b];
    const AgentIndex i = index[buyer_ids[b]];
    inst.neighbors[i] =
        neighbor_mask(require_field(buyer, where, "neighbors"), where + ".neighbors");

    if (inst.kind == ItemKind::homogeneous) {
      detail::reject_unknown_fields(buyer, where, {"id", "neighbors", "marginals"});
      const Json& marg = require_field(buyer, where, "marginals");
      if (!marg.is_array())
        throw ParseError(where + ".marginals: expected an array");
      std::vector<Rational> m;
      for (std::size_t q = 0; q < marg.size(); ++q)
        m.push_back(rational_from_json(
            marg[q], where + ".marginals[" + std::to_string(q) + "]"));
      inst.vals[i] = Valuation::homogeneous(std::move(m));
    } else {
      detail::reject_unknown_fields(buyer, where, {"id", "neighbors", "bundles"});
      const Json& bundles = require_field(buyer, where, "bundles");
      if (!bundles.is_object())
        throw ParseError(where + ".bundles: expected an object");
      const int m = static_cast<int>(inst.items.size());
      std::vector<Rational> table(std::size_t{1} << m, Rational(0));
      for (const auto& [key, value] : bundles.items()) {
        const std::string bwhere = where + ".bundles[\"" + key + "\"]";
        if (static_cast<int>(key.size()) != m)
          throw ParseError(bwhere + ": key length must equal the item count");
        std::uint32_t mask = 0;
        for (int c = 0; c < m; ++c) {
          if (key[c] == '1')
            mask |= std::uint32_t{1} << c;
          else if (key[c] != '0')
            throw ParseError(bwhere + ": key must be a 0/1 bitstring");
        }
        table[mask] = rational_from_json(value, bwhere);
      }
      inst.vals[i] = Valuation::combinatorial(std::move(table));
    }
  }

  const auto problems = validate_instance(inst);
  if (!problems.empty()) {
    std::string msg = "invalid instance";
    for (const auto& p : problems) msg += "; " + p;
    throw ParseError(msg);
  }
  return inst;
}

inline Instance instance_from_text(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw ParseError(std::string("not valid JSON: ") + e.what());
  }
  return instance_from_json(j);
}

inline Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  try {
    return instance_from_text(buf.str());
  } catch (ParseError& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline Json instance_to_json(const Instance& inst) {
  Json j;
  j["kind"] =
      inst.kind == ItemKind::homogeneous ? "homogeneous" : "combinatorial";
  if (inst.kind == ItemKind::homogeneous)
    j["k"] = inst.k;
  else
    j["items"] = inst.items;

  auto id_list = [&](Mask m) {
    std::vector<std::string> ids;
    while (m) {
      const int i = std::countr_zero(m);
      m &= m - 1;
      ids.push_back(inst.ids[i]);
    }
    return ids;
  };
  j["seller_neighbors"] = id_list(inst.neighbors[kSeller]);

  Json buyers = Json::array();
  for (int i = 1; i < inst.total_agents(); ++i) {
    Json b;
    b["id"] = inst.ids[i];
    b["neighbors"] = id_list(inst.neighbors[i]);
    if (inst.kind == ItemKind::homogeneous) {
      Json marg = Json::array();
      for (const auto& m : inst.vals[i].marginals)
        marg.push_back(detail::rational_to_json(m));
      b["marginals"] = std::move(marg);
    } else {
      Json bundles = Json::object();
      const int m = static_cast<int>(inst.items.size());
      for (std::uint32_t mask = 1; mask < (std::uint32_t{1} << m); ++mask) {
        if (inst.vals[i].bundle[mask] == 0) continue;
        std::string key(m, '0');
        for (int c = 0; c < m; ++c)
          if ((mask >> c) & 1) key[c] = '1';
        bundles[key] = detail::rational_to_json(inst.vals[i].bundle[mask]);
      }
      b["bundles"] = std::move(bundles);
    }
    buyers.push_back(std::move(b));
  }
  j["buyers"] = std::move(buyers);
  return j;
}

inline void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ParseError("cannot open " + path + " for writing");
  out << instance_to_json(inst).dump(2) << "\n";
}

}  // namespace pda
