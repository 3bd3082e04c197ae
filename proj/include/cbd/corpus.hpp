#pragma once

// System generators and structural transforms: cyclic systems, the
// three-context example shapes, the 18-ray Kochen-Specker incidence,
// dichotomization of categorical contents, and value coarse-graining.

#include <algorithm>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cbd/error.hpp"
#include "cbd/model.hpp"
#include "cbd/rational.hpp"

namespace cbd {

namespace detail {

inline ValueSet binary_values() {
  return ValueSet{{Label{std::int64_t{1}}, Label{std::int64_t{2}}}};
}

}  // namespace detail

/// Bivariate binary law from its four masses, indexed by value pair.
inline Distribution joint2x2(Q p00, Q p01, Q p10, Q p11) {
  Distribution d;
  d.support = {{0, 0}, {0, 1}, {1, 0}, {1, 1}};
  d.mass = {std::move(p00), std::move(p01), std::move(p10), std::move(p11)};
  canonicalize(d);
  return d;
}

/// Rank and per-context bunch laws of a cyclic system: bunch i holds
/// (q_{i+1}, q_{i+2 mod n}) in 1-based naming, all cells binary.
struct CyclicSpec {
  int rank = 0;
  std::vector<Distribution> bunch_dists;
};

/// Cyclic system of `rank` binary contents: context c_i measures
/// (q_i, q_{i+1 mod n}), so content q_i appears in c_{i-1} and c_i.
inline CCSystem gen_cyclic(const CyclicSpec& spec) {
  if (spec.rank < 2) throw Error(Errc::invalid_rank, "cyclic rank below two");
  const int n = spec.rank;
  if (static_cast<int>(spec.bunch_dists.size()) != n)
    throw Error(Errc::dimension_mismatch, "need one bunch law per context");
  CCSystem sys;
  for (int i = 1; i <= n; ++i) {
    sys.contents.push_back("q" + std::to_string(i));
    sys.contexts.push_back("c" + std::to_string(i));
    sys.value_sets[sys.contents.back()] = detail::binary_values();
  }
  for (int i = 0; i < n; ++i) {
    Bunch b;
    b.context = sys.contexts[static_cast<std::size_t>(i)];
    b.cells = {Cell{sys.contents[static_cast<std::size_t>(i)], b.context},
               Cell{sys.contents[static_cast<std::size_t>((i + 1) % n)], b.context}};
    b.dist = spec.bunch_dists[static_cast<std::size_t>(i)];
    canonicalize(b.dist);
    sys.bunches.push_back(std::move(b));
  }
  return sys;
}

/// The rank-4 box with uniform marginals: three contexts perfectly
/// correlated, the fourth perfectly anticorrelated.
inline CCSystem gen_prbox() {
  Distribution same = joint2x2(Q(1, 2), Q(0), Q(0), Q(1, 2));
  Distribution diff = joint2x2(Q(0), Q(1, 2), Q(1, 2), Q(0));
  return gen_cyclic(CyclicSpec{4, {same, same, same, diff}});
}

/// Fills every bunch with the uniform joint law over its product space.
inline void fill_uniform(CCSystem& sys) {
  for (Bunch& b : sys.bunches) {
    std::vector<int> radices;
    for (const Cell& c : b.cells) radices.push_back(sys.value_set(c.content).size());
    OutcomeSpace space = OutcomeSpace::create(radices);
    Distribution d;
    Q mass(1, static_cast<long long>(space.size));
    for (std::uint64_t a = 0; a < space.size; ++a) {
      d.support.push_back(space.decode(a));
      d.mass.push_back(mass);
    }
    b.dist = std::move(d);
  }
}

/// Three binary contexts over four contents with the overlap pattern
/// c1 = (q1, q2, q4), c2 = (q1, q3), c3 = (q1, q2, q3, q4); bunch laws are
/// uniform placeholders for callers to replace.
inline CCSystem gen_rex_shape() {
  CCSystem sys;
  sys.contents = {"q1", "q2", "q3", "q4"};
  sys.contexts = {"c1", "c2", "c3"};
  for (const std::string& q : sys.contents)
    sys.value_sets[q] = detail::binary_values();
  auto bunch = [&](const std::string& ctx, std::vector<std::string> qs) {
    Bunch b;
    b.context = ctx;
    for (std::string& q : qs) b.cells.push_back(Cell{std::move(q), ctx});
    return b;
  };
  sys.bunches.push_back(bunch("c1", {"q1", "q2", "q4"}));
  sys.bunches.push_back(bunch("c2", {"q1", "q3"}));
  sys.bunches.push_back(bunch("c3", {"q1", "q2", "q3", "q4"}));
  fill_uniform(sys);
  return sys;
}

/// Incidence skeleton of the 18-ray, 9-basis Kochen-Specker system: 18
/// binary contents in 9 contexts of 4 cells each, every content in exactly
/// 2 contexts. Bunch laws are left empty for the caller to attach.
inline CCSystem gen_cea18() {
  // Rows: content name, then its two contexts (1-based).
  struct Row {
    const char* name;
    int a;
    int b;
  };
  constexpr Row rows[] = {
      {"q0001", 1, 2}, {"q0010", 1, 5}, {"q1100", 1, 3}, {"q1200", 1, 7},
      {"q0100", 2, 5}, {"q1010", 2, 8}, {"q1020", 2, 4}, {"q1212", 3, 4},
      {"q1221", 3, 6}, {"q0011", 3, 7}, {"q1111", 4, 6}, {"q0102", 4, 8},
      {"q1001", 5, 9}, {"q1002", 5, 6}, {"q0120", 6, 9}, {"q1121", 7, 8},
      {"q1112", 7, 9}, {"q2111", 8, 9},
  };
  CCSystem sys;
  for (int c = 1; c <= 9; ++c) {
    sys.contexts.push_back("c" + std::to_string(c));
    Bunch b;
    b.context = sys.contexts.back();
    sys.bunches.push_back(std::move(b));
  }
  for (const Row& r : rows) {
    sys.contents.push_back(r.name);
    sys.value_sets[r.name] = detail::binary_values();
  }
  // Cells enter each bunch in star-matrix row order.
  for (const Row& r : rows)
    for (int c : {r.a, r.b})
      sys.bunches[static_cast<std::size_t>(c - 1)].cells.push_back(
          Cell{r.name, "c" + std::to_string(c)});
  return sys;
}

/// One three-valued content whose three contexts pairwise overlap in a
/// single value of mass 1/2; the pair maxima demand three mutually exclusive
/// events of probability 1/2 each, so no multimaximal coupling exists.
inline CCSystem gen_conflict_triple() {
  CCSystem sys;
  sys.contents = {"r"};
  sys.contexts = {"c1", "c2", "c3"};
  sys.value_sets["r"] =
      ValueSet{{Label{std::int64_t{1}}, Label{std::int64_t{2}}, Label{std::int64_t{3}}}};
  auto bunch = [&](const std::string& ctx, int v, int w) {
    Bunch b;
    b.context = ctx;
    b.cells = {Cell{"r", ctx}};
    b.dist.support = {{v}, {w}};
    b.dist.mass = {Q(1, 2), Q(1, 2)};
    canonicalize(b.dist);
    return b;
  };
  sys.bunches.push_back(bunch("c1", 1, 2));
  sys.bunches.push_back(bunch("c2", 0, 2));
  sys.bunches.push_back(bunch("c3", 0, 1));
  return sys;
}

/// Six-valued refinement of the conflict triple (values 1,1',2,2',3,3').
/// Multimaximal couplings exist here; lumping {i, i'} -> i recovers the
/// conflict triple exactly.
inline CCSystem gen_refined_triple() {
  CCSystem sys;
  sys.contents = {"r"};
  sys.contexts = {"c1", "c2", "c3"};
  sys.value_sets["r"] = ValueSet{{Label{std::int64_t{1}}, Label{std::string{"1'"}},
                                  Label{std::int64_t{2}}, Label{std::string{"2'"}},
                                  Label{std::int64_t{3}}, Label{std::string{"3'"}}}};
  auto bunch = [&](const std::string& ctx, int v, int w) {
    Bunch b;
    b.context = ctx;
    b.cells = {Cell{"r", ctx}};
    b.dist.support = {{v}, {w}};
    b.dist.mass = {Q(1, 2), Q(1, 2)};
    canonicalize(b.dist);
    return b;
  };
  sys.bunches.push_back(bunch("c1", 3, 5));  // 2', 3'
  sys.bunches.push_back(bunch("c2", 1, 4));  // 1', 3
  sys.bunches.push_back(bunch("c3", 0, 2));  // 1, 2
  return sys;
}

/// One content's replacement plan: each split is the set of original value
/// indices the new binary content maps to its first value.
struct DichotomizationMap {
  std::string content;
  std::vector<std::vector<int>> splits;
};

/// Every canonical split of `content`'s value set: nonempty proper subsets
/// identified with their lexicographically smaller side, 2^{m-1} - 1 in all,
/// ordered by subset bitmask.
inline DichotomizationMap all_splits(const CCSystem& sys, const std::string& content) {
  const ValueSet& vs = sys.value_set(content);
  const int m = vs.size();
  if (m > 20) throw Error(Errc::too_large, "value set too large to enumerate splits");
  DichotomizationMap map;
  map.content = content;
  for (std::uint32_t mask = 1; mask + 1 < (std::uint32_t{1} << m); ++mask) {
    std::vector<int> side, other;
    for (int v = 0; v < m; ++v)
      ((mask >> v) & 1u ? side : other).push_back(v);
    if (side < other) map.splits.push_back(std::move(side));
  }
  return map;
}

namespace detail {

inline void check_splits(const std::vector<std::vector<int>>& splits, int m) {
  if (splits.empty()) throw Error(Errc::invalid_split, "no splits given");
  for (const auto& s : splits) {
    if (s.empty() || static_cast<int>(s.size()) >= m)
      throw Error(Errc::invalid_split, "split must be a nonempty proper subset");
    for (std::size_t i = 0; i < s.size(); ++i) {
      if (s[i] < 0 || s[i] >= m)
        throw Error(Errc::invalid_split, "split value index out of range");
      if (i > 0 && s[i] <= s[i - 1])
        throw Error(Errc::invalid_split, "split indices must be strictly ascending");
    }
  }
}

inline std::string split_name(const std::string& content, const ValueSet& vs,
                              const std::vector<int>& split) {
  std::string name = content + "[";
  for (std::size_t i = 0; i < split.size(); ++i) {
    if (i) name += ',';
    name += label_str(vs.labels[static_cast<std::size_t>(split[i])]);
  }
  return name + "]";
}

}  // namespace detail

/// Replaces `map.content` with one binary content per split. Within each
/// context measuring it, the new cells are the jointly distributed
/// indicators of their splits (first value = "inside"), so each bunch law is
/// the exact pushforward of the original.
inline CCSystem dichotomize(const CCSystem& sys, const DichotomizationMap& map) {
  const ValueSet& vs = sys.value_set(map.content);  // throws unknown_content
  const int m = vs.size();
  detail::check_splits(map.splits, m);

  std::vector<std::string> names;
  for (const auto& s : map.splits) {
    names.push_back(detail::split_name(map.content, vs, s));
    for (const std::string& q : sys.contents)
      if (q == names.back())
        throw Error(Errc::duplicate_content, names.back());
  }

  CCSystem out;
  out.contexts = sys.contexts;
  for (const std::string& q : sys.contents) {
    if (q == map.content) {
      for (const std::string& nq : names) {
        out.contents.push_back(nq);
        out.value_sets[nq] = detail::binary_values();
      }
    } else {
      out.contents.push_back(q);
      out.value_sets[q] = sys.value_set(q);
    }
  }
  for (const Bunch& b : sys.bunches) {
    auto pos = b.position_of(map.content);
    Bunch nb;
    nb.context = b.context;
    if (!pos) {
      nb.cells = b.cells;
      nb.dist = b.dist;
      out.bunches.push_back(std::move(nb));
      continue;
    }
    const std::size_t p = static_cast<std::size_t>(*pos);
    for (std::size_t i = 0; i < b.cells.size(); ++i) {
      if (i == p) {
        for (const std::string& nq : names) nb.cells.push_back(Cell{nq, b.context});
      } else {
        nb.cells.push_back(b.cells[i]);
      }
    }
    for (std::size_t r = 0; r < b.dist.support.size(); ++r) {
      const auto& t = b.dist.support[r];
      std::vector<int> nt;
      nt.reserve(t.size() - 1 + names.size());
      for (std::size_t i = 0; i < t.size(); ++i) {
        if (i == p) {
          for (const auto& s : map.splits)
            nt.push_back(std::binary_search(s.begin(), s.end(), t[i]) ? 0 : 1);
        } else {
          nt.push_back(t[i]);
        }
      }
      nb.dist.support.push_back(std::move(nt));
      nb.dist.mass.push_back(b.dist.mass[r]);
    }
    canonicalize(nb.dist);
    out.bunches.push_back(std::move(nb));
  }
  return out;
}

/// Lumps `content`'s values along `classes` (a partition of value indices).
/// Classes are ordered by smallest member; each lumped value keeps the label
/// of its class's smallest member. Bunch laws are pushed forward exactly.
inline CCSystem coarse_grain(const CCSystem& sys, const std::string& content,
                             std::vector<std::vector<int>> classes) {
  const ValueSet& vs = sys.value_set(content);  // throws unknown_content
  const int m = vs.size();
  std::vector<int> to_class(static_cast<std::size_t>(m), -1);
  for (auto& cls : classes) {
    if (cls.empty()) throw Error(Errc::invalid_partition, "empty class");
    std::sort(cls.begin(), cls.end());
    for (int v : cls) {
      if (v < 0 || v >= m)
        throw Error(Errc::invalid_partition, "value index out of range");
      if (to_class[static_cast<std::size_t>(v)] != -1)
        throw Error(Errc::invalid_partition, "value index repeated");
      to_class[static_cast<std::size_t>(v)] = 0;
    }
  }
  for (int v = 0; v < m; ++v)
    if (to_class[static_cast<std::size_t>(v)] == -1)
      throw Error(Errc::invalid_partition, "value index " + std::to_string(v) +
                                               " not covered");
  std::sort(classes.begin(), classes.end(),
            [](const auto& a, const auto& b) { return a.front() < b.front(); });
  for (std::size_t c = 0; c < classes.size(); ++c)
    for (int v : classes[c]) to_class[static_cast<std::size_t>(v)] = static_cast<int>(c);

  CCSystem out;
  out.contents = sys.contents;
  out.contexts = sys.contexts;
  out.value_sets = sys.value_sets;
  ValueSet lumped;
  for (const auto& cls : classes)
    lumped.labels.push_back(vs.labels[static_cast<std::size_t>(cls.front())]);
  out.value_sets[content] = std::move(lumped);

  for (const Bunch& b : sys.bunches) {
    Bunch nb;
    nb.context = b.context;
    nb.cells = b.cells;
    auto pos = b.position_of(content);
    nb.dist = b.dist;
    if (pos) {
      const std::size_t p = static_cast<std::size_t>(*pos);
      for (auto& t : nb.dist.support) {
        if (t[p] < 0 || t[p] >= m)
          throw Error(Errc::bad_outcome, "value index out of range");
        t[p] = to_class[static_cast<std::size_t>(t[p])];
      }
      canonicalize(nb.dist);
    }
    out.bunches.push_back(std::move(nb));
  }
  return out;
}

}  // namespace cbd
