#pragma once

// JSON serialization: systems, couplings, validation results, and analysis
// reports. Emission is canonical and byte-stable: objects with sorted keys,
// rationals in lowest terms, distributions in canonical support order. Every
// probability is printed exactly as p/q plus a "~decimal" convenience field.
// Parsing is lenient about unknown keys so emitted files re-parse cleanly.

#include <charconv>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cbd/contextuality.hpp"
#include "cbd/coupling.hpp"
#include "cbd/error.hpp"
#include "cbd/model.hpp"
#include "cbd/rational.hpp"

namespace cbd {

/// nlohmann::json keeps object keys sorted, which is exactly the canonical
/// form the emitters promise.
using Json = nlohmann::json;

/// Decimal approximation marked as such: shortest round-trip double
/// representation with a leading "~".
inline std::string approx_str(const Q& r) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, to_double(r));
  return "~" + std::string(buf, res.ptr);
}

inline Json label_json(const Label& l) {
  if (std::holds_alternative<std::int64_t>(l))
    return Json(std::get<std::int64_t>(l));
  return Json(std::get<std::string>(l));
}

inline Label label_from_json(const Json& j, const std::string& where) {
  if (j.is_number_integer()) return Label{j.get<std::int64_t>()};
  if (j.is_string()) return Label{j.get<std::string>()};
  throw Error(Errc::parse_error,
              where + ": value labels must be integers or strings");
}

namespace detail {

inline const Json& need(const Json& j, const char* key,
                        const std::string& where) {
  auto it = j.find(key);
  if (it == j.end())
    throw Error(Errc::parse_error,
                where + ": missing key '" + std::string(key) + "'");
  return *it;
}

inline std::string need_string(const Json& j, const char* key,
                               const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_string())
    throw Error(Errc::parse_error,
                where + ": '" + std::string(key) + "' must be a string");
  return v.get<std::string>();
}

inline const Json& need_array(const Json& j, const char* key,
                              const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_array())
    throw Error(Errc::parse_error,
                where + ": '" + std::string(key) + "' must be an array");
  return v;
}

inline const Json& need_object(const Json& j, const char* key,
                               const std::string& where) {
  const Json& v = need(j, key, where);
  if (!v.is_object())
    throw Error(Errc::parse_error,
                where + ": '" + std::string(key) + "' must be an object");
  return v;
}

inline Q mass_from_json(const Json& j, const std::string& where) {
  if (!j.is_string())
    throw Error(Errc::parse_error,
                where + ": masses must be strings parsed exactly");
  return parse_rational(j.get<std::string>());
}

/// Distribution entries over named positions; `sets[i]` supplies the labels
/// for position `i`. Entries appear in canonical support order.
inline Json distribution_json(Distribution d,
                              const std::vector<std::string>& keys,
                              const std::vector<const ValueSet*>& sets) {
  canonicalize(d);
  Json out = Json::array();
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    Json outcome = Json::object();
    for (std::size_t p = 0; p < keys.size(); ++p) {
      int v = d.support[i][p];
      outcome[keys[p]] = label_json(sets[p]->labels[static_cast<std::size_t>(v)]);
    }
    Json entry;
    entry["outcome"] = std::move(outcome);
    entry["p"] = rational_str(d.mass[i]);
    entry["p_approx"] = approx_str(d.mass[i]);
    out.push_back(std::move(entry));
  }
  return out;
}

}  // namespace detail

inline Json system_json(const CCSystem& sys) {
  Json out;
  out["contents"] = sys.contents;
  Json vs = Json::object();
  for (const auto& [q, set] : sys.value_sets) {
    Json labels = Json::array();
    for (const Label& l : set.labels) labels.push_back(label_json(l));
    vs[q] = std::move(labels);
  }
  out["value_sets"] = std::move(vs);
  Json contexts = Json::array();
  for (const Bunch& b : sys.bunches) {
    Json ctx;
    ctx["id"] = b.context;
    Json cells = Json::array();
    std::vector<std::string> keys;
    std::vector<const ValueSet*> sets;
    for (const Cell& c : b.cells) {
      cells.push_back(c.content);
      keys.push_back(c.content);
      sets.push_back(&sys.value_set(c.content));
    }
    ctx["cells"] = std::move(cells);
    ctx["distribution"] = detail::distribution_json(b.dist, keys, sets);
    contexts.push_back(std::move(ctx));
  }
  out["contexts"] = std::move(contexts);
  return out;
}

inline CCSystem system_from_json(const Json& j) {
  if (!j.is_object())
    throw Error(Errc::parse_error, "system: top level must be an object");
  CCSystem sys;
  for (const Json& q : detail::need_array(j, "contents", "system")) {
    if (!q.is_string())
      throw Error(Errc::parse_error, "system: contents must be strings");
    sys.contents.push_back(q.get<std::string>());
  }
  for (const auto& [q, labels] :
       detail::need_object(j, "value_sets", "system").items()) {
    if (!labels.is_array())
      throw Error(Errc::parse_error,
                  "value set of " + q + ": must be an array");
    ValueSet vs;
    for (const Json& l : labels)
      vs.labels.push_back(label_from_json(l, "value set of " + q));
    sys.value_sets.emplace(q, std::move(vs));
  }
  for (const Json& ctx : detail::need_array(j, "contexts", "system")) {
    if (!ctx.is_object())
      throw Error(Errc::parse_error, "contexts entries must be objects");
    Bunch b;
    b.context = detail::need_string(ctx, "id", "context");
    const std::string where = "context " + b.context;
    for (const Json& q : detail::need_array(ctx, "cells", where)) {
      if (!q.is_string())
        throw Error(Errc::parse_error, where + ": cells must be content names");
      b.cells.push_back(Cell{q.get<std::string>(), b.context});
    }
    for (const Json& entry : detail::need_array(ctx, "distribution", where)) {
      if (!entry.is_object())
        throw Error(Errc::parse_error,
                    where + ": distribution entries must be objects");
      const Json& outcome = detail::need_object(entry, "outcome", where);
      std::vector<int> tuple;
      for (const Cell& c : b.cells) {
        auto it = outcome.find(c.content);
        if (it == outcome.end())
          throw Error(Errc::parse_error,
                      where + ": outcome misses " + cell_str(c));
        auto set = sys.value_sets.find(c.content);
        if (set == sys.value_sets.end())
          throw Error(Errc::missing_value_set, c.content);
        Label l = label_from_json(*it, cell_str(c));
        auto idx = set->second.index_of(l);
        if (!idx)
          throw Error(Errc::bad_outcome, "label '" + label_str(l) +
                                             "' not in the value set of " +
                                             cell_str(c));
        tuple.push_back(*idx);
      }
      b.dist.support.push_back(std::move(tuple));
      b.dist.mass.push_back(
          detail::mass_from_json(detail::need(entry, "p", where), where));
    }
    sys.contexts.push_back(b.context);
    sys.bunches.push_back(std::move(b));
  }
  return sys;
}

inline std::string json_text(const Json& j) { return j.dump(2) + "\n"; }

inline Json json_from_text(const std::string& text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, e.what());
  }
}

inline std::string system_text(const CCSystem& sys) {
  return json_text(system_json(sys));
}

inline CCSystem system_from_text(const std::string& text) {
  return system_from_json(json_from_text(text));
}

/// Connection coupling: cells are keyed "content@context"; every cell shares
/// the connection's value set.
inline Json coupling_json(const CouplingDistribution& cpl, const ValueSet& vs) {
  Json out;
  std::vector<std::string> keys;
  std::vector<const ValueSet*> sets;
  Json cells = Json::array();
  for (const Cell& c : cpl.cells) {
    keys.push_back(cell_str(c));
    sets.push_back(&vs);
    cells.push_back(cell_str(c));
  }
  out["cells"] = std::move(cells);
  out["distribution"] = detail::distribution_json(cpl.dist, keys, sets);
  return out;
}

/// Joint law over arbitrary system cells, keyed "content@context"; labels
/// come from each cell's own value set. Also serializes signed quasi-joints.
inline Json joint_json(const std::vector<Cell>& cells, const Distribution& d,
                       const CCSystem& sys) {
  Json out;
  std::vector<std::string> keys;
  std::vector<const ValueSet*> sets;
  Json names = Json::array();
  for (const Cell& c : cells) {
    keys.push_back(cell_str(c));
    sets.push_back(&sys.value_set(c.content));
    names.push_back(cell_str(c));
  }
  out["cells"] = std::move(names);
  out["distribution"] = detail::distribution_json(d, keys, sets);
  return out;
}

inline Json issues_json(const std::vector<Issue>& issues) {
  Json out;
  out["valid"] = issues.empty();
  Json arr = Json::array();
  for (const Issue& is : issues) {
    Json item;
    item["code"] = std::string(errc_name(is.code));
    item["where"] = is.where;
    item["detail"] = is.detail;
    arr.push_back(std::move(item));
  }
  out["issues"] = std::move(arr);
  return out;
}

/// Analysis report. Certificate rows split into the bunch-law family and the
/// connection family so a violated combination reads like an inequality over
/// bunch probabilities; only nonzero multipliers are listed.
inline Json report_json(const ContextualityReport& rep, const CCSystem& sys) {
  Json out;
  out["verdict"] = std::string(verdict_str(rep.verdict));
  if (rep.measure) {
    out["measure"] = rational_str(*rep.measure);
    out["measure_approx"] = approx_str(*rep.measure);
  }
  if (rep.total_variation) {
    out["total_variation"] = rational_str(*rep.total_variation);
    out["total_variation_approx"] = approx_str(*rep.total_variation);
  }
  if (rep.coupling)
    out["coupling"] = joint_json(rep.coupling->cells, rep.coupling->dist, sys);
  if (rep.quasi_coupling) {
    Json qc = joint_json(rep.quasi_coupling->cells, rep.quasi_coupling->masses,
                         sys);
    qc["total_variation"] = rational_str(rep.quasi_coupling->total_variation);
    qc["total_variation_approx"] =
        approx_str(rep.quasi_coupling->total_variation);
    out["quasi_coupling"] = std::move(qc);
  }
  if (rep.certificate) {
    Json bunch_rows = Json::array();
    Json connection_rows = Json::array();
    const auto& mult = rep.certificate->row_mult;
    for (std::size_t i = 0; i < mult.size(); ++i) {
      if (mult[i] == 0) continue;
      Json row;
      row["index"] = i;
      std::string name =
          i < rep.certificate_row_names.size() ? rep.certificate_row_names[i]
                                               : std::string();
      row["row"] = name;
      row["multiplier"] = rational_str(mult[i]);
      if (name.rfind("bunch:", 0) == 0)
        bunch_rows.push_back(std::move(row));
      else
        connection_rows.push_back(std::move(row));
    }
    Json cert;
    cert["bunch_rows"] = std::move(bunch_rows);
    cert["connection_rows"] = std::move(connection_rows);
    out["certificate"] = std::move(cert);
  }
  if (!rep.connections_without_multimaximal.empty())
    out["connections_without_multimaximal"] =
        rep.connections_without_multimaximal;
  if (!rep.note.empty()) out["note"] = rep.note;
  if (rep.numeric_fallback) out["numeric_fallback"] = true;
  return out;
}

}  // namespace cbd
