#pragma once

// System-level contextuality analysis: the joint-mass linear program whose
// feasible points are couplings with multimaximal connection subcouplings,
// the noncontextuality decision, the minimal-total-variation measure over
// signed quasi-couplings, subsystem extraction, and a per-context-pair
// diagnostic.

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbd/coupling.hpp"
#include "cbd/error.hpp"
#include "cbd/lp.hpp"
#include "cbd/model.hpp"
#include "cbd/rational.hpp"

namespace cbd {

/// One linear constraint on joint cell masses. Each case pins a set of cells
/// to values; cases are pairwise disjoint events, so the constrained quantity
/// is the sum of joint masses matching any case.
struct LinearCondition {
  struct Pin {
    std::size_t cell;  // index into CouplingSpec::joint_cells
    int value;
  };
  std::vector<std::vector<Pin>> cases;
  Rel rel = Rel::eq;
  Q rhs;
  std::string name;
};

/// Constraint system over the full joint outcome space of all cells:
/// per-context blocks pin every bunch marginal, per-content blocks constrain
/// connection subcouplings (binary: pinned to the unique staircase coupling;
/// categorical: nonnegative marginals plus pairwise maximality equalities).
/// Every cell appears in exactly one bunch block and one connection block.
struct CouplingSpec {
  CCSystem system;
  std::vector<Cell> joint_cells;  // canonical order: bunches, then cells
  OutcomeSpace space;             // over joint_cells' value-set sizes
  std::vector<std::vector<LinearCondition>> bunch_blocks;       // per context
  std::vector<std::vector<LinearCondition>> connection_blocks;  // per content

  std::size_t cell_index(const Cell& c) const {
    for (std::size_t i = 0; i < joint_cells.size(); ++i)
      if (joint_cells[i] == c) return i;
    throw Error(Errc::unknown_cell, cell_str(c));
  }
};

namespace detail {

inline std::string tuple_str(const std::vector<int>& t) {
  std::string s;
  bool wide = false;
  for (int v : t) wide = wide || v > 8;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (i && wide) s += ',';
    s += std::to_string(t[i] + 1);
  }
  return s;
}

/// Calls fn(index) for every joint outcome matching the pinned cells.
template <typename Fn>
void for_each_matching(const OutcomeSpace& space,
                       const std::vector<LinearCondition::Pin>& pins, Fn&& fn) {
  std::uint64_t base = 0;
  std::vector<char> pinned(space.radix.size(), 0);
  for (const auto& pin : pins) {
    if (pin.cell >= space.radix.size() || pin.value < 0 ||
        pin.value >= space.radix[pin.cell])
      throw Error(Errc::internal, "condition pin out of range");
    if (pinned[pin.cell]) throw Error(Errc::internal, "condition pins a cell twice");
    pinned[pin.cell] = 1;
    base += space.stride[pin.cell] * static_cast<std::uint64_t>(pin.value);
  }
  std::vector<std::size_t> free_pos;
  for (std::size_t i = 0; i < space.radix.size(); ++i)
    if (!pinned[i]) free_pos.push_back(i);

  std::vector<int> counter(free_pos.size(), 0);
  std::uint64_t idx = base;
  for (;;) {
    fn(idx);
    std::size_t p = free_pos.size();
    while (p > 0) {
      --p;
      idx += space.stride[free_pos[p]];
      if (++counter[p] < space.radix[free_pos[p]]) break;
      idx -= space.stride[free_pos[p]] *
             static_cast<std::uint64_t>(counter[p]);
      counter[p] = 0;
      if (p == 0) return;
    }
    if (free_pos.empty()) return;
  }
}

}  // namespace detail

inline CouplingSpec build_coupling_spec(const CCSystem& sys,
                                        std::uint64_t budget = kDefaultBudget) {
  CouplingSpec spec;
  spec.system = sys;
  spec.joint_cells = sys.all_cells();
  if (spec.joint_cells.empty()) throw Error(Errc::empty_system, "system has no cells");
  std::vector<int> radices;
  std::map<Cell, std::size_t> index_of;
  for (std::size_t i = 0; i < spec.joint_cells.size(); ++i) {
    radices.push_back(sys.value_set(spec.joint_cells[i].content).size());
    index_of[spec.joint_cells[i]] = i;
  }
  spec.space = OutcomeSpace::create(radices, budget);

  // Bunch blocks: one equality per bunch outcome, zero-mass outcomes included.
  for (const Bunch& b : sys.bunches) {
    std::vector<int> br;
    std::vector<std::size_t> cells;
    for (const Cell& c : b.cells) {
      br.push_back(sys.value_set(c.content).size());
      cells.push_back(index_of.at(c));
    }
    OutcomeSpace bs = OutcomeSpace::create(br, budget);
    std::vector<Q> dense(bs.size, Q(0));
    for (std::size_t r = 0; r < b.dist.support.size(); ++r)
      dense[bs.index(b.dist.support[r])] += b.dist.mass[r];

    std::vector<LinearCondition> block;
    for (std::uint64_t o = 0; o < bs.size; ++o) {
      auto t = bs.decode(o);
      LinearCondition cond;
      cond.cases.emplace_back();
      for (std::size_t i = 0; i < cells.size(); ++i)
        cond.cases[0].push_back({cells[i], t[i]});
      cond.rel = Rel::eq;
      cond.rhs = dense[o];
      cond.name = "bunch:" + b.context + "=" + detail::tuple_str(t);
      block.push_back(std::move(cond));
    }
    spec.bunch_blocks.push_back(std::move(block));
  }

  // Connection blocks: binary contents pin the unique staircase coupling;
  // categorical contents get nonnegative connection marginals plus pairwise
  // maximality equalities.
  for (const std::string& q : sys.contents) {
    Connection conn = connection_of(sys, q);
    const int m = sys.value_set(q).size();
    std::vector<std::size_t> cells;
    for (const Cell& c : conn.cells) cells.push_back(index_of.at(c));
    OutcomeSpace cs =
        OutcomeSpace::create(std::vector<int>(cells.size(), m), budget);

    std::vector<LinearCondition> block;
    if (m == 2) {
      CouplingDistribution stair = multimaximal_binary(conn);
      std::vector<Q> dense(cs.size, Q(0));
      for (std::size_t r = 0; r < stair.dist.support.size(); ++r)
        dense[cs.index(stair.dist.support[r])] += stair.dist.mass[r];
      for (std::uint64_t o = 0; o < cs.size; ++o) {
        auto t = cs.decode(o);
        LinearCondition cond;
        cond.cases.emplace_back();
        for (std::size_t i = 0; i < cells.size(); ++i)
          cond.cases[0].push_back({cells[i], t[i]});
        cond.rel = Rel::eq;
        cond.rhs = dense[o];
        cond.name = "conn:" + q + "=" + detail::tuple_str(t);
        block.push_back(std::move(cond));
      }
    } else {
      for (std::uint64_t o = 0; o < cs.size; ++o) {
        auto t = cs.decode(o);
        LinearCondition cond;
        cond.cases.emplace_back();
        for (std::size_t i = 0; i < cells.size(); ++i)
          cond.cases[0].push_back({cells[i], t[i]});
        cond.rel = Rel::ge;
        cond.rhs = 0;
        cond.name = "connpos:" + q + "=" + detail::tuple_str(t);
        block.push_back(std::move(cond));
      }
      for (std::size_t i = 0; i < cells.size(); ++i)
        for (std::size_t j = i + 1; j < cells.size(); ++j) {
          LinearCondition cond;
          for (int v = 0; v < m; ++v)
            cond.cases.push_back({{cells[i], v}, {cells[j], v}});
          cond.rel = Rel::eq;
          cond.rhs = max_pair_probability(conn.marginals[i], conn.marginals[j]);
          cond.name = "connpair:" + q + ":" + conn.cells[i].context + "~" +
                      conn.cells[j].context;
          block.push_back(std::move(cond));
        }
    }
    spec.connection_blocks.push_back(std::move(block));
  }
  return spec;
}

/// Realizes the spec as an LP over joint masses: nonnegative for proper
/// couplings, free for signed quasi-couplings. Row order: bunch blocks in
/// context order, then connection blocks in content order.
inline LinearProgram coupling_lp(const CouplingSpec& spec, bool signed_masses) {
  LinearProgram lp;
  VarBounds vb = signed_masses ? VarBounds{std::nullopt, std::nullopt}
                               : VarBounds{Q(0), std::nullopt};
  for (std::uint64_t a = 0; a < spec.space.size; ++a) lp.add_var(vb);

  auto add_block = [&](const std::vector<LinearCondition>& block) {
    for (const LinearCondition& cond : block) {
      // Nonnegative-marginal rows are implied by the mass bounds when the
      // joint is proper; they only bind for signed quasi-couplings.
      if (!signed_masses && cond.rel == Rel::ge && cond.rhs == 0) continue;
      LPRow row;
      row.rel = cond.rel;
      row.rhs = cond.rhs;
      row.name = cond.name;
      for (const auto& pins : cond.cases)
        detail::for_each_matching(spec.space, pins, [&](std::uint64_t idx) {
          row.terms.push_back({static_cast<int>(idx), Q(1)});
        });
      lp.add_row(std::move(row));
    }
  };
  for (const auto& block : spec.bunch_blocks) add_block(block);
  for (const auto& block : spec.connection_blocks) add_block(block);
  return lp;
}

/// A proper coupling of the whole system, sparse over joint outcomes.
struct SystemCoupling {
  std::vector<Cell> cells;
  Distribution dist;
};

/// A signed joint mass assignment; masses sum to 1 and total_variation is
/// the sum of their absolute values (1 exactly when the coupling is proper).
struct QuasiCoupling {
  std::vector<Cell> cells;
  Distribution masses;  // signed, sparse, canonical order
  Q total_variation;
};

enum class Verdict { noncontextual, contextual };

inline std::string_view verdict_str(Verdict v) {
  return v == Verdict::noncontextual ? "noncontextual" : "contextual";
}

struct ContextualityReport {
  Verdict verdict = Verdict::contextual;
  std::optional<Q> measure;           // total_variation - 1, when defined
  std::optional<Q> total_variation;   // raw minimal total variation
  std::optional<SystemCoupling> coupling;        // proper witness
  std::optional<QuasiCoupling> quasi_coupling;   // improper minimal witness
  std::optional<FarkasCertificate> certificate;  // infeasibility proof
  std::vector<std::string> certificate_row_names;  // aligned with row_mult
  std::vector<std::string> connections_without_multimaximal;
  std::string note;  // set when the measure is undefined
  bool numeric_fallback = false;
};

namespace detail {

inline Distribution sparse_joint(const OutcomeSpace& space,
                                 const std::vector<Q>& point) {
  Distribution d;
  for (std::uint64_t a = 0; a < space.size; ++a)
    if (point[static_cast<std::size_t>(a)] != 0) {
      d.support.push_back(space.decode(a));
      d.mass.push_back(point[static_cast<std::size_t>(a)]);
    }
  return d;
}

inline std::vector<std::string> row_names(const LinearProgram& lp) {
  std::vector<std::string> names;
  names.reserve(lp.rows.size());
  for (const LPRow& r : lp.rows) names.push_back(r.name);
  return names;
}

}  // namespace detail

/// Decides noncontextuality: is there a proper joint coupling whose bunch
/// marginals match and whose connection subcouplings are multimaximal?
inline ContextualityReport check(const CCSystem& sys,
                                 SolveMode mode = SolveMode::exact,
                                 std::uint64_t budget = kDefaultBudget) {
  CouplingSpec spec = build_coupling_spec(sys, budget);
  LinearProgram lp = coupling_lp(spec, false);
  LPSolution sol = solve(lp, mode);
  ContextualityReport rep;
  rep.numeric_fallback = sol.numeric_fallback;
  switch (sol.status) {
    case LPStatus::feasible:
      rep.verdict = Verdict::noncontextual;
      rep.measure = Q(0);
      rep.total_variation = Q(1);
      rep.coupling =
          SystemCoupling{spec.joint_cells, detail::sparse_joint(spec.space, sol.point)};
      break;
    case LPStatus::infeasible:
      rep.verdict = Verdict::contextual;
      rep.certificate = std::move(sol.certificate);
      rep.certificate_row_names = detail::row_names(lp);
      break;
    default:
      throw Error(Errc::internal, "coupling feasibility reported " +
                                      std::string(status_str(sol.status)));
  }
  return rep;
}

/// Minimal total variation of a signed quasi-coupling whose bunch marginals
/// match exactly and whose connection subcouplings are proper multimaximal
/// couplings; reports total_variation - 1 as the contextuality measure.
/// When some connection admits no multimaximal coupling at all, the measure
/// is undefined: the verdict is contextual, offenders are named in `note`,
/// and the LP infeasibility certificate is attached.
inline ContextualityReport measure(const CCSystem& sys,
                                   SolveMode mode = SolveMode::exact,
                                   std::uint64_t budget = kDefaultBudget) {
  CouplingSpec spec = build_coupling_spec(sys, budget);
  LinearProgram lp = coupling_lp(spec, true);
  LPSolution sol = minimize_l1(lp, mode);
  ContextualityReport rep;
  rep.numeric_fallback = sol.numeric_fallback;
  if (sol.status == LPStatus::optimal) {
    Q tv = sol.objective_value;
    rep.total_variation = tv;
    rep.measure = tv - 1;
    if (tv < 1) throw Error(Errc::internal, "total variation below one");
    Distribution masses = detail::sparse_joint(spec.space, sol.point);
    if (tv == 1) {
      rep.verdict = Verdict::noncontextual;
      rep.coupling = SystemCoupling{spec.joint_cells, std::move(masses)};
    } else {
      rep.verdict = Verdict::contextual;
      rep.quasi_coupling = QuasiCoupling{spec.joint_cells, std::move(masses), tv};
    }
    return rep;
  }
  if (sol.status != LPStatus::infeasible)
    throw Error(Errc::internal, "quasi-coupling program reported " +
                                    std::string(status_str(sol.status)));
  // Signed joints exist for any marginal constraints that agree on overlaps,
  // so infeasibility means some connection has no multimaximal coupling.
  rep.verdict = Verdict::contextual;
  rep.certificate = std::move(sol.certificate);
  rep.certificate_row_names = detail::row_names(lp);
  std::string offenders;
  for (const std::string& q : sys.contents) {
    Connection conn = connection_of(sys, q);
    if (sys.value_set(q).size() == 2) continue;
    if (!multimaximal_exists(conn, mode, budget).coupling.has_value()) {
      if (!offenders.empty()) offenders += ", ";
      offenders += q;
      rep.connections_without_multimaximal.push_back(q);
    }
  }
  rep.note = "measure undefined: no multimaximal coupling exists for " +
             (offenders.empty() ? std::string("some connection") : offenders);
  return rep;
}

/// Removes the given cells; bunch laws are marginalized exactly. A bunch
/// losing all cells is deleted with its context, and contents left without
/// cells are removed.
inline CCSystem subsystem(const CCSystem& sys, const std::vector<Cell>& drop) {
  for (const Cell& c : drop)
    if (!sys.has_cell(c)) throw Error(Errc::unknown_cell, cell_str(c));
  auto dropped = [&](const Cell& c) {
    return std::find(drop.begin(), drop.end(), c) != drop.end();
  };
  CCSystem out;
  for (const Bunch& b : sys.bunches) {
    std::vector<int> keep;
    Bunch nb;
    nb.context = b.context;
    for (std::size_t i = 0; i < b.cells.size(); ++i)
      if (!dropped(b.cells[i])) {
        keep.push_back(static_cast<int>(i));
        nb.cells.push_back(b.cells[i]);
      }
    if (nb.cells.empty()) continue;
    nb.dist = marginal(b.dist, keep);
    out.contexts.push_back(nb.context);
    out.bunches.push_back(std::move(nb));
  }
  for (const std::string& q : sys.contents) {
    bool alive = false;
    for (const Bunch& b : out.bunches)
      alive = alive || b.position_of(q).has_value();
    if (alive) {
      out.contents.push_back(q);
      out.value_sets[q] = sys.value_set(q);
    }
  }
  return out;
}

struct PairInconsistency {
  std::string context_a;
  std::string context_b;
  ContextualityReport report;
};

/// Contextual two-context subsystems. An empty list does not certify that
/// the full system is noncontextual: contextuality can be global, as the
/// uniform-marginal box shows.
struct PairConsistencyReport {
  std::vector<PairInconsistency> contextual_pairs;
};

inline PairConsistencyReport check_pair_consistency(
    const CCSystem& sys, SolveMode mode = SolveMode::exact,
    std::uint64_t budget = kDefaultBudget) {
  PairConsistencyReport out;
  for (std::size_t i = 0; i < sys.contexts.size(); ++i)
    for (std::size_t j = i + 1; j < sys.contexts.size(); ++j) {
      std::vector<Cell> drop;
      for (const Cell& c : sys.all_cells())
        if (c.context != sys.contexts[i] && c.context != sys.contexts[j])
          drop.push_back(c);
      CCSystem sub = subsystem(sys, drop);
      if (sub.bunches.empty()) continue;
      ContextualityReport rep = check(sub, mode, budget);
      if (rep.verdict == Verdict::contextual)
        out.contextual_pairs.push_back(
            {sys.contexts[i], sys.contexts[j], std::move(rep)});
    }
  return out;
}

}  // namespace cbd
