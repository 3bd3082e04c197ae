#pragma once

// Maximal and multimaximal couplings of a connection: the closed-form
// staircase construction for binary cells, pairwise maximality checks, and
// the LP route for categorical cells (existence witness or infeasibility
// certificate, plus vertex enumeration).

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "cbd/error.hpp"
#include "cbd/lp.hpp"
#include "cbd/model.hpp"
#include "cbd/rational.hpp"

namespace cbd {

/// Joint law over one connection's cells; `dist` tuples align with `cells`.
struct CouplingDistribution {
  std::vector<Cell> cells;
  Distribution dist;
};

struct PairMaximality {
  Cell a;
  Cell b;
  Q achieved;
  Q maximum;

  bool maximal() const { return achieved == maximum; }
};

struct PairMaximalityReport {
  std::vector<PairMaximality> pairs;
  bool all_maximal = true;
};

/// Largest Pr[X = Y] over all couplings of two laws on one value set:
/// sum of the pointwise minima.
inline Q max_pair_probability(const Pmf& a, const Pmf& b) {
  if (a.size() != b.size())
    throw Error(Errc::value_set_mismatch, "pmfs of different length");
  Q total = 0;
  for (std::size_t v = 0; v < a.size(); ++v) total += std::min(a[v], b[v]);
  return total;
}

/// The unique multimaximal coupling of a binary connection: cells sorted by
/// p_i = Pr[first value] ascending (stable in context order); outcome l flips
/// the first l sorted cells to the second value and carries mass
/// p_{l+1} - p_l, with p_0 = 0 and p_{k+1} = 1. Zero-mass rows are dropped.
inline CouplingDistribution multimaximal_binary(const Connection& conn) {
  const int k = conn.arity();
  if (k == 0) throw Error(Errc::dimension_mismatch, "empty connection");
  for (int i = 0; i < k; ++i)
    if (conn.marginals[static_cast<std::size_t>(i)].size() != 2)
      throw Error(Errc::not_binary, cell_str(conn.cells[static_cast<std::size_t>(i)]));

  std::vector<int> order(static_cast<std::size_t>(k));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return conn.marginals[static_cast<std::size_t>(i)][0] <
           conn.marginals[static_cast<std::size_t>(j)][0];
  });

  CouplingDistribution out;
  out.cells = conn.cells;
  Q prev = 0;
  for (int l = 0; l <= k; ++l) {
    Q next = (l < k) ? conn.marginals[static_cast<std::size_t>(order[static_cast<std::size_t>(l)])][0]
                     : Q(1);
    Q mass = next - prev;
    if (mass < 0) throw Error(Errc::negative_mass, "marginal above one");
    if (mass != 0) {
      std::vector<int> tuple(static_cast<std::size_t>(k), 0);
      for (int j = 0; j < l; ++j)
        tuple[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = 1;
      out.dist.support.push_back(std::move(tuple));
      out.dist.mass.push_back(std::move(mass));
    }
    prev = next;
  }
  canonicalize(out.dist);
  return out;
}

namespace detail {

/// Shared precondition check: the coupling must sit on the connection's cells
/// with nonnegative masses and exactly the connection's marginals. Returns
/// the common value-set size.
inline int check_coupling_against(const CouplingDistribution& cpl,
                                  const Connection& conn) {
  const std::size_t k = conn.cells.size();
  if (k == 0) throw Error(Errc::dimension_mismatch, "empty connection");
  if (cpl.cells.size() != k)
    throw Error(Errc::unknown_cell, "coupling arity differs from connection");
  for (std::size_t i = 0; i < k; ++i)
    if (!(cpl.cells[i] == conn.cells[i]))
      throw Error(Errc::unknown_cell, cell_str(cpl.cells[i]));
  const std::size_t m = conn.marginals[0].size();
  if (m == 0) throw Error(Errc::empty_value_set, conn.content);
  for (const Pmf& p : conn.marginals)
    if (p.size() != m)
      throw Error(Errc::value_set_mismatch, "connection marginals disagree in length");

  std::vector<Pmf> got(k, Pmf(m, Q(0)));
  for (std::size_t r = 0; r < cpl.dist.support.size(); ++r) {
    const auto& t = cpl.dist.support[r];
    if (t.size() != k)
      throw Error(Errc::dimension_mismatch, "coupling tuple length");
    if (cpl.dist.mass[r] < 0)
      throw Error(Errc::negative_mass, "coupling mass below zero");
    for (std::size_t i = 0; i < k; ++i) {
      if (t[i] < 0 || t[i] >= static_cast<int>(m))
        throw Error(Errc::bad_outcome, "coupling value index out of range");
      got[i][static_cast<std::size_t>(t[i])] += cpl.dist.mass[r];
    }
  }
  for (std::size_t i = 0; i < k; ++i)
    if (got[i] != conn.marginals[i])
      throw Error(Errc::marginal_mismatch, cell_str(conn.cells[i]));
  return static_cast<int>(m);
}

inline Q equal_pair_mass(const Distribution& d, std::size_t i, std::size_t j) {
  Q total = 0;
  for (std::size_t r = 0; r < d.support.size(); ++r)
    if (d.support[r][i] == d.support[r][j]) total += d.mass[r];
  return total;
}

}  // namespace detail

/// Achieved vs maximal Pr[T_i = T_j] for every unordered cell pair.
inline PairMaximalityReport pair_maximality(const CouplingDistribution& cpl,
                                            const Connection& conn) {
  detail::check_coupling_against(cpl, conn);
  PairMaximalityReport rep;
  for (std::size_t i = 0; i < conn.cells.size(); ++i)
    for (std::size_t j = i + 1; j < conn.cells.size(); ++j) {
      PairMaximality pm{conn.cells[i], conn.cells[j],
                        detail::equal_pair_mass(cpl.dist, i, j),
                        max_pair_probability(conn.marginals[i], conn.marginals[j])};
      rep.all_maximal = rep.all_maximal && pm.maximal();
      rep.pairs.push_back(std::move(pm));
    }
  return rep;
}

/// True iff every pair of cells achieves its maximal equality probability.
inline bool is_multimaximal(const CouplingDistribution& cpl, const Connection& conn,
                            PairMaximalityReport* report = nullptr) {
  PairMaximalityReport rep = pair_maximality(cpl, conn);
  bool ok = rep.all_maximal;
  if (report) *report = std::move(rep);
  return ok;
}

/// Binary shortcut: checking only consecutive pairs in the p_i-sorted order
/// decides multimaximality of the whole coupling.
inline bool is_multimaximal_consecutive(const CouplingDistribution& cpl,
                                        const Connection& conn,
                                        PairMaximalityReport* report = nullptr) {
  for (std::size_t i = 0; i < conn.marginals.size(); ++i)
    if (conn.marginals[i].size() != 2)
      throw Error(Errc::not_binary, cell_str(conn.cells[i]));
  detail::check_coupling_against(cpl, conn);

  std::vector<int> order(conn.cells.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int i, int j) {
    return conn.marginals[static_cast<std::size_t>(i)][0] <
           conn.marginals[static_cast<std::size_t>(j)][0];
  });

  PairMaximalityReport rep;
  for (std::size_t t = 0; t + 1 < order.size(); ++t) {
    std::size_t i = static_cast<std::size_t>(order[t]);
    std::size_t j = static_cast<std::size_t>(order[t + 1]);
    PairMaximality pm{conn.cells[i], conn.cells[j],
                      detail::equal_pair_mass(cpl.dist, i, j),
                      max_pair_probability(conn.marginals[i], conn.marginals[j])};
    rep.all_maximal = rep.all_maximal && pm.maximal();
    rep.pairs.push_back(std::move(pm));
  }
  bool ok = rep.all_maximal;
  if (report) *report = std::move(rep);
  return ok;
}

/// Feasibility program whose points are exactly the multimaximal couplings:
/// one nonnegative mass variable per joint outcome, equality rows fixing each
/// cell's marginal, and one equality row per cell pair pinning Pr[T_i = T_j]
/// to its maximum. Subset maximality beyond pairs is implied, so no further
/// rows are generated.
struct ConnectionLP {
  LinearProgram lp;
  OutcomeSpace space;
};

inline ConnectionLP connection_lp(const Connection& conn,
                                  std::uint64_t budget = kDefaultBudget) {
  const std::size_t k = conn.cells.size();
  if (k == 0) throw Error(Errc::dimension_mismatch, "empty connection");
  const std::size_t m = conn.marginals[0].size();
  if (m == 0) throw Error(Errc::empty_value_set, conn.content);
  for (const Pmf& p : conn.marginals)
    if (p.size() != m)
      throw Error(Errc::value_set_mismatch, "connection marginals disagree in length");

  ConnectionLP out;
  out.space = OutcomeSpace::create(std::vector<int>(k, static_cast<int>(m)), budget);
  const std::uint64_t n = out.space.size;
  const bool name_vars = n <= 4096;
  for (std::uint64_t a = 0; a < n; ++a) {
    std::string name;
    if (name_vars) {
      auto t = out.space.decode(a);
      name = "p(";
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i) name += ',';
        name += std::to_string(t[i] + 1);
      }
      name += ')';
    }
    out.lp.add_var(VarBounds{Q(0), std::nullopt}, std::move(name));
  }

  std::vector<LPRow> marg_rows(k * m);
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t v = 0; v < m; ++v) {
      LPRow& r = marg_rows[i * m + v];
      r.rel = Rel::eq;
      r.rhs = conn.marginals[i][v];
      r.name = "marg:" + cell_str(conn.cells[i]) + "=" + std::to_string(v + 1);
    }
  std::vector<LPRow> pair_rows;
  std::vector<std::pair<std::size_t, std::size_t>> pair_index;
  for (std::size_t i = 0; i < k; ++i)
    for (std::size_t j = i + 1; j < k; ++j) {
      LPRow r;
      r.rel = Rel::eq;
      r.rhs = max_pair_probability(conn.marginals[i], conn.marginals[j]);
      r.name = "pair:" + cell_str(conn.cells[i]) + "~" + cell_str(conn.cells[j]);
      pair_index.emplace_back(i, j);
      pair_rows.push_back(std::move(r));
    }

  for (std::uint64_t a = 0; a < n; ++a) {
    auto t = out.space.decode(a);
    int var = static_cast<int>(a);
    for (std::size_t i = 0; i < k; ++i)
      marg_rows[i * m + static_cast<std::size_t>(t[i])].terms.push_back({var, Q(1)});
    for (std::size_t p = 0; p < pair_index.size(); ++p)
      if (t[pair_index[p].first] == t[pair_index[p].second])
        pair_rows[p].terms.push_back({var, Q(1)});
  }
  for (LPRow& r : marg_rows) out.lp.add_row(std::move(r));
  for (LPRow& r : pair_rows) out.lp.add_row(std::move(r));
  return out;
}

namespace detail {

inline CouplingDistribution point_to_coupling(const Connection& conn,
                                              const OutcomeSpace& space,
                                              const std::vector<Q>& point) {
  CouplingDistribution out;
  out.cells = conn.cells;
  for (std::uint64_t a = 0; a < space.size; ++a)
    if (point[static_cast<std::size_t>(a)] != 0) {
      out.dist.support.push_back(space.decode(a));
      out.dist.mass.push_back(point[static_cast<std::size_t>(a)]);
    }
  canonicalize(out.dist);
  return out;
}

}  // namespace detail

/// Outcome of the LP search: a witness coupling when one exists, otherwise an
/// infeasibility certificate for `lp` (verifiable with verify_farkas).
struct CouplingSearch {
  std::optional<CouplingDistribution> coupling;
  std::optional<FarkasCertificate> certificate;
  LinearProgram lp;
  bool numeric_fallback = false;
};

inline CouplingSearch multimaximal_exists(const Connection& conn,
                                          SolveMode mode = SolveMode::exact,
                                          std::uint64_t budget = kDefaultBudget) {
  ConnectionLP built = connection_lp(conn, budget);
  LPSolution sol = solve(built.lp, mode);
  CouplingSearch out;
  out.numeric_fallback = sol.numeric_fallback;
  switch (sol.status) {
    case LPStatus::feasible:
    case LPStatus::optimal:
      out.coupling = detail::point_to_coupling(conn, built.space, sol.point);
      break;
    case LPStatus::infeasible:
      out.certificate = std::move(sol.certificate);
      break;
    case LPStatus::unbounded:
      throw Error(Errc::internal, "feasibility program reported unbounded");
  }
  out.lp = std::move(built.lp);
  return out;
}

/// Up to `limit` distinct vertices of the multimaximal-coupling polytope,
/// found by maximizing each atom's mass in turn (atoms whose marginal cap is
/// zero are skipped). Binary connections yield exactly one vertex.
inline std::vector<CouplingDistribution> enumerate_multimaximal(
    const Connection& conn, std::size_t limit = 16,
    SolveMode mode = SolveMode::exact, std::uint64_t budget = kDefaultBudget) {
  if (limit == 0) return {};
  ConnectionLP built = connection_lp(conn, budget);
  LPSolution first = solve(built.lp, mode);
  if (first.status == LPStatus::infeasible) return {};
  if (first.status != LPStatus::feasible)
    throw Error(Errc::internal, "feasibility program reported " +
                                    std::string(status_str(first.status)));

  std::vector<std::vector<Q>> points{first.point};
  for (std::uint64_t a = 0; a < built.space.size && points.size() < limit; ++a) {
    auto t = built.space.decode(a);
    Q cap = conn.marginals[0][static_cast<std::size_t>(t[0])];
    for (std::size_t i = 1; i < t.size(); ++i)
      cap = std::min(cap, conn.marginals[i][static_cast<std::size_t>(t[i])]);
    if (cap == 0) continue;
    built.lp.objective = {{static_cast<int>(a), Q(-1)}};
    LPSolution sol = solve(built.lp, mode);
    if (sol.status != LPStatus::optimal)
      throw Error(Errc::internal, "atom maximization reported " +
                                      std::string(status_str(sol.status)));
    if (std::find(points.begin(), points.end(), sol.point) == points.end())
      points.push_back(std::move(sol.point));
  }

  std::vector<CouplingDistribution> out;
  out.reserve(points.size());
  for (const auto& p : points)
    out.push_back(detail::point_to_coupling(conn, built.space, p));
  return out;
}

}  // namespace cbd
