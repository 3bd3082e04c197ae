#ifndef CBD_MODEL_HPP
#define CBD_MODEL_HPP

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cbd/error.hpp"
#include "cbd/rational.hpp"

namespace cbd {

/// Outcome label: either an integer or a symbolic name.
using Label = std::variant<std::int64_t, std::string>;

inline std::string label_str(const Label& l) {
  if (std::holds_alternative<std::int64_t>(l))
    return std::to_string(std::get<std::int64_t>(l));
  return std::get<std::string>(l);
}

/// Ordered set of admissible values for one content.
/// Indices into `labels` are the wire format everywhere below.
struct ValueSet {
  std::vector<Label> labels;

  int size() const { return static_cast<int>(labels.size()); }

  std::optional<int> index_of(const Label& l) const {
    for (int i = 0; i < size(); ++i)
      if (labels[i] == l) return i;
    return std::nullopt;
  }
};

/// One measured quantity: a content recorded in a context.
struct Cell {
  std::string content;
  std::string context;

  friend bool operator==(const Cell&, const Cell&) = default;
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

inline std::string cell_str(const Cell& c) {
  return c.content + "@" + c.context;
}

/// Finite distribution over tuples of value indices.
/// Canonical form: supports distinct, sorted lexicographically, masses nonzero.
struct Distribution {
  std::vector<std::vector<int>> support;
  std::vector<Q> mass;

  std::size_t size() const { return support.size(); }
};

/// Sorts the support, merges duplicate tuples, and drops zero masses.
inline void canonicalize(Distribution& d) {
  std::vector<std::size_t> order(d.support.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d.support[a] < d.support[b];
  });
  Distribution out;
  for (std::size_t i : order) {
    if (!out.support.empty() && out.support.back() == d.support[i]) {
      out.mass.back() += d.mass[i];
    } else {
      out.support.push_back(d.support[i]);
      out.mass.push_back(d.mass[i]);
    }
  }
  Distribution trimmed;
  for (std::size_t i = 0; i < out.support.size(); ++i) {
    if (out.mass[i] != 0) {
      trimmed.support.push_back(std::move(out.support[i]));
      trimmed.mass.push_back(std::move(out.mass[i]));
    }
  }
  d = std::move(trimmed);
}

/// Equality up to canonical form.
inline bool same_distribution(Distribution a, Distribution b) {
  canonicalize(a);
  canonicalize(b);
  return a.support == b.support && a.mass == b.mass;
}

/// All quantities measured together in one context, with their joint law.
/// `dist` tuples are aligned with `cells`.
struct Bunch {
  std::string context;
  std::vector<Cell> cells;
  Distribution dist;

  std::optional<int> position_of(const std::string& content) const {
    for (std::size_t i = 0; i < cells.size(); ++i)
      if (cells[i].content == content) return static_cast<int>(i);
    return std::nullopt;
  }
};

/// Dense single-cell law over a value set, indexed by value index.
using Pmf = std::vector<Q>;

/// A content-context system: bunches as rows, connections as columns.
struct CCSystem {
  std::vector<std::string> contents;  // first-appearance order
  std::vector<std::string> contexts;  // first-appearance order
  std::map<std::string, ValueSet> value_sets;
  std::vector<Bunch> bunches;  // aligned with `contexts`

  int content_index(const std::string& q) const {
    for (std::size_t i = 0; i < contents.size(); ++i)
      if (contents[i] == q) return static_cast<int>(i);
    throw Error(Errc::unknown_content, q);
  }

  int context_index(const std::string& c) const {
    for (std::size_t i = 0; i < contexts.size(); ++i)
      if (contexts[i] == c) return static_cast<int>(i);
    throw Error(Errc::unknown_context, c);
  }

  const Bunch& bunch_of(const std::string& context) const {
    return bunches.at(static_cast<std::size_t>(context_index(context)));
  }

  const ValueSet& value_set(const std::string& content) const {
    auto it = value_sets.find(content);
    if (it == value_sets.end()) throw Error(Errc::unknown_content, content);
    return it->second;
  }

  bool has_cell(const Cell& c) const {
    for (const Bunch& b : bunches)
      if (b.context == c.context && b.position_of(c.content)) return true;
    return false;
  }

  /// Canonical joint cell order: bunches in context order, cells in bunch order.
  std::vector<Cell> all_cells() const {
    std::vector<Cell> out;
    for (const Bunch& b : bunches)
      out.insert(out.end(), b.cells.begin(), b.cells.end());
    return out;
  }

  bool binary() const {
    for (const auto& [q, vs] : value_sets)
      if (vs.size() != 2) return false;
    return true;
  }
};

/// One content's cells across contexts, with their observed marginals.
/// Cells follow context order; `marginals[i]` is the pmf of `cells[i]`.
struct Connection {
  std::string content;
  std::vector<Cell> cells;
  std::vector<Pmf> marginals;

  int arity() const { return static_cast<int>(cells.size()); }
};

inline constexpr std::uint64_t kDefaultBudget = std::uint64_t{1} << 20;

/// Mixed-radix index space over outcome tuples; the last position varies
/// fastest, so index order equals lexicographic order on tuples.
struct OutcomeSpace {
  std::vector<int> radix;
  std::vector<std::uint64_t> stride;
  std::uint64_t size = 1;

  static OutcomeSpace create(std::vector<int> radices,
                             std::uint64_t budget = kDefaultBudget) {
    OutcomeSpace s;
    s.radix = std::move(radices);
    for (int r : s.radix) {
      if (r < 1) throw Error(Errc::dimension_mismatch, "radix below one");
      if (s.size > budget / static_cast<std::uint64_t>(r))
        throw Error(Errc::too_large,
                    "outcome space exceeds budget of " + std::to_string(budget));
      s.size *= static_cast<std::uint64_t>(r);
    }
    s.stride.assign(s.radix.size(), 1);
    for (std::size_t i = s.radix.size(); i-- > 1;)
      s.stride[i - 1] = s.stride[i] * static_cast<std::uint64_t>(s.radix[i]);
    return s;
  }

  std::uint64_t index(const std::vector<int>& tuple) const {
    if (tuple.size() != radix.size())
      throw Error(Errc::dimension_mismatch, "tuple length");
    std::uint64_t idx = 0;
    for (std::size_t i = 0; i < tuple.size(); ++i) {
      if (tuple[i] < 0 || tuple[i] >= radix[i])
        throw Error(Errc::bad_outcome, "value index out of range");
      idx += stride[i] * static_cast<std::uint64_t>(tuple[i]);
    }
    return idx;
  }

  std::vector<int> decode(std::uint64_t idx) const {
    std::vector<int> tuple(radix.size());
    for (std::size_t i = 0; i < radix.size(); ++i) {
      tuple[i] = static_cast<int>(idx / stride[i]);
      idx %= stride[i];
    }
    return tuple;
  }
};

/// Projects a distribution onto a subset of positions and merges masses.
inline Distribution marginal(const Distribution& d,
                             const std::vector<int>& keep) {
  Distribution out;
  for (std::size_t i = 0; i < d.support.size(); ++i) {
    std::vector<int> t;
    t.reserve(keep.size());
    for (int p : keep) {
      if (p < 0 || static_cast<std::size_t>(p) >= d.support[i].size())
        throw Error(Errc::dimension_mismatch, "marginal position out of range");
      t.push_back(d.support[i][static_cast<std::size_t>(p)]);
    }
    out.support.push_back(std::move(t));
    out.mass.push_back(d.mass[i]);
  }
  canonicalize(out);
  return out;
}

/// Marginal of a bunch onto named cells, in the order given.
inline Distribution marginal(const Bunch& b, const std::vector<Cell>& cells) {
  std::vector<int> keep;
  for (const Cell& c : cells) {
    if (c.context != b.context) throw Error(Errc::unknown_cell, cell_str(c));
    auto pos = b.position_of(c.content);
    if (!pos) throw Error(Errc::unknown_cell, cell_str(c));
    keep.push_back(*pos);
  }
  return marginal(b.dist, keep);
}

/// Dense pmf of one cell inside its bunch.
inline Pmf cell_pmf(const Bunch& b, const Cell& c, const ValueSet& vs) {
  auto pos = b.position_of(c.content);
  if (!pos || c.context != b.context)
    throw Error(Errc::unknown_cell, cell_str(c));
  Pmf pmf(static_cast<std::size_t>(vs.size()), Q(0));
  for (std::size_t i = 0; i < b.dist.support.size(); ++i) {
    int v = b.dist.support[i][static_cast<std::size_t>(*pos)];
    if (v < 0 || v >= vs.size())
      throw Error(Errc::bad_outcome, "value index out of range in " + cell_str(c));
    pmf[static_cast<std::size_t>(v)] += b.dist.mass[i];
  }
  return pmf;
}

/// Column view: every cell of `content` with its per-context marginal.
inline Connection connection_of(const CCSystem& sys, const std::string& content) {
  const ValueSet& vs = sys.value_set(content);
  Connection conn;
  conn.content = content;
  for (const Bunch& b : sys.bunches) {
    if (auto pos = b.position_of(content)) {
      Cell c{content, b.context};
      conn.cells.push_back(c);
      conn.marginals.push_back(cell_pmf(b, c, vs));
    }
  }
  if (conn.cells.empty()) throw Error(Errc::unknown_content, content);
  return conn;
}

struct ConsistencyReport {
  bool consistent = true;
  std::vector<std::string> offending_contents;
};

/// A system is consistently connected when every content has identical
/// marginals across all its contexts.
inline ConsistencyReport is_consistently_connected(const CCSystem& sys) {
  ConsistencyReport rep;
  for (const std::string& q : sys.contents) {
    Connection conn = connection_of(sys, q);
    for (std::size_t i = 1; i < conn.marginals.size(); ++i) {
      if (conn.marginals[i] != conn.marginals[0]) {
        rep.consistent = false;
        rep.offending_contents.push_back(q);
        break;
      }
    }
  }
  return rep;
}

/// Structural and probabilistic checks; an empty result means valid.
inline std::vector<Issue> validate(const CCSystem& sys) {
  std::vector<Issue> issues;
  auto add = [&](Errc code, std::string where, std::string detail) {
    issues.push_back(Issue{code, std::move(where), std::move(detail)});
  };

  if (sys.contexts.empty() || sys.contents.empty())
    add(Errc::empty_system, "system", "no contexts or no contents");

  {
    std::set<std::string> seen;
    for (const auto& c : sys.contexts)
      if (!seen.insert(c).second) add(Errc::duplicate_context, c, "context listed twice");
  }
  {
    std::set<std::string> seen;
    for (const auto& q : sys.contents)
      if (!seen.insert(q).second)
        add(Errc::duplicate_content, q, "content listed twice");
  }

  for (const auto& [q, vs] : sys.value_sets) {
    if (vs.labels.empty()) add(Errc::empty_value_set, q, "no values");
    std::set<std::string> seen;
    for (const Label& l : vs.labels)
      if (!seen.insert(label_str(l)).second)
        add(Errc::duplicate_label, q, "label '" + label_str(l) + "' repeats");
    if (std::find(sys.contents.begin(), sys.contents.end(), q) ==
        sys.contents.end())
      add(Errc::orphan_content, q, "value set for unlisted content");
  }

  if (sys.bunches.size() != sys.contexts.size()) {
    add(Errc::dimension_mismatch, "system", "bunch count differs from context count");
    return issues;  // alignment below would be meaningless
  }

  std::set<std::string> used_contents;
  for (std::size_t bi = 0; bi < sys.bunches.size(); ++bi) {
    const Bunch& b = sys.bunches[bi];
    const std::string where = "context " + b.context;
    if (b.context != sys.contexts[bi])
      add(Errc::dimension_mismatch, where, "bunch order differs from context order");

    std::set<std::string> cell_contents;
    std::vector<int> radices;
    bool cells_ok = true;
    for (const Cell& c : b.cells) {
      if (c.context != b.context) {
        add(Errc::unknown_cell, where, cell_str(c) + " carries a foreign context");
        cells_ok = false;
      }
      if (!cell_contents.insert(c.content).second)
        add(Errc::duplicate_cell, where, c.content + " listed twice");
      used_contents.insert(c.content);
      auto it = sys.value_sets.find(c.content);
      if (std::find(sys.contents.begin(), sys.contents.end(), c.content) ==
          sys.contents.end()) {
        add(Errc::unknown_content, where, c.content + " not in content list");
        cells_ok = false;
      } else if (it == sys.value_sets.end()) {
        add(Errc::missing_value_set, where, c.content + " has no value set");
        cells_ok = false;
      } else {
        radices.push_back(it->second.size());
      }
    }
    if (b.cells.empty()) add(Errc::empty_system, where, "bunch has no cells");
    if (!cells_ok || b.cells.empty()) continue;

    Q total(0);
    std::set<std::vector<int>> tuples;
    for (std::size_t i = 0; i < b.dist.support.size(); ++i) {
      const auto& t = b.dist.support[i];
      if (t.size() != b.cells.size()) {
        add(Errc::bad_outcome, where, "outcome arity differs from cell count");
        continue;
      }
      bool in_range = true;
      for (std::size_t p = 0; p < t.size(); ++p)
        if (t[p] < 0 || t[p] >= radices[p]) in_range = false;
      if (!in_range) {
        add(Errc::bad_outcome, where, "value index out of range");
        continue;
      }
      if (!tuples.insert(t).second)
        add(Errc::bad_outcome, where, "duplicate outcome tuple");
      if (b.dist.mass[i] < 0)
        add(Errc::negative_mass, where, "mass " + rational_str(b.dist.mass[i]));
      total += b.dist.mass[i];
    }
    if (b.dist.support.size() != b.dist.mass.size())
      add(Errc::dimension_mismatch, where, "support/mass size mismatch");
    else if (total != 1)
      add(Errc::non_normalized, where, "masses sum to " + rational_str(total));
  }

  for (const std::string& q : sys.contents)
    if (!used_contents.contains(q))
      add(Errc::orphan_content, q, "content appears in no context");

  return issues;
}

}  // namespace cbd

#endif  // CBD_MODEL_HPP
