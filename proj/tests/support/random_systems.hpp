#ifndef CBD_TESTS_RANDOM_SYSTEMS_HPP
#define CBD_TESTS_RANDOM_SYSTEMS_HPP

// Seeded generators for small c-c systems, marginal-preserving bunch
// perturbations, relabeling helpers, and exact validity checks for the
// couplings and quasi-couplings the library reports.

#include <algorithm>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cbd/contextuality.hpp"
#include "cbd/corpus.hpp"
#include "cbd/coupling.hpp"
#include "cbd/model.hpp"

namespace testgen {

using cbd::Bunch;
using cbd::CCSystem;
using cbd::Cell;
using cbd::Distribution;
using cbd::OutcomeSpace;
using cbd::Q;
using Rng = std::mt19937;

inline int rand_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

// den balls dropped into m bins: a pmf whose masses share denominator den.
inline std::vector<Q> random_pmf(Rng& rng, int m, int den) {
  std::vector<int> count(static_cast<std::size_t>(m), 0);
  for (int i = 0; i < den; ++i)
    ++count[static_cast<std::size_t>(rand_int(rng, 0, m - 1))];
  std::vector<Q> p;
  for (int k : count) p.emplace_back(k, den);
  return p;
}

inline Distribution random_joint(Rng& rng, const std::vector<int>& radices,
                                 int den) {
  OutcomeSpace space = OutcomeSpace::create(radices);
  std::vector<Q> mass = random_pmf(rng, static_cast<int>(space.size), den);
  Distribution d;
  for (std::uint64_t a = 0; a < space.size; ++a)
    if (mass[static_cast<std::size_t>(a)] != 0) {
      d.support.push_back(space.decode(a));
      d.mass.push_back(mass[static_cast<std::size_t>(a)]);
    }
  return d;
}

inline CCSystem cyclic_shape(int rank) {
  Distribution u = cbd::joint2x2(Q(1, 4), Q(1, 4), Q(1, 4), Q(1, 4));
  return cbd::gen_cyclic(
      cbd::CyclicSpec{rank, std::vector<Distribution>(static_cast<std::size_t>(rank), u)});
}

// One of the library shapes: the three-context four-content example shape or
// a cyclic system of rank 2..4. All binary, at most nine cells.
inline CCSystem random_shape(Rng& rng) {
  int pick = rand_int(rng, 0, 3);
  if (pick == 0) return cbd::gen_rex_shape();
  return cyclic_shape(pick + 1);
}

inline void randomize_bunches(CCSystem& sys, Rng& rng, int den) {
  for (Bunch& b : sys.bunches) {
    std::vector<int> radices;
    for (const Cell& c : b.cells)
      radices.push_back(sys.value_set(c.content).size());
    b.dist = random_joint(rng, radices, den);
  }
}

// Independent random bunch laws; generically not consistently connected.
inline CCSystem random_system(Rng& rng, int den = 16) {
  CCSystem sys = random_shape(rng);
  randomize_bunches(sys, rng, den);
  return sys;
}

// Every bunch law is a marginal of one global law over all contents, so
// copying each content to its cells is a proper coupling whose connection
// subcouplings are diagonal, hence multimaximal: consistently connected and
// noncontextual by construction.
inline CCSystem random_noncontextual(Rng& rng, int den = 16) {
  CCSystem sys = random_shape(rng);
  std::vector<int> radices;
  for (const std::string& q : sys.contents)
    radices.push_back(sys.value_set(q).size());
  Distribution mu = random_joint(rng, radices, den);
  for (Bunch& b : sys.bunches) {
    std::vector<int> keep;
    for (const Cell& c : b.cells) keep.push_back(sys.content_index(c.content));
    b.dist = cbd::marginal(mu, keep);
  }
  return sys;
}

// Moves mass around a two-cell rectangle with every other coordinate fixed,
// inside one bunch. All univariate marginals of the bunch survive, so the
// system stays consistently connected while its joint behavior changes.
inline bool bunch_rectangle_move(CCSystem& sys, Rng& rng, std::size_t bi) {
  Bunch& b = sys.bunches[bi];
  int k = static_cast<int>(b.cells.size());
  if (k < 2) return false;
  std::vector<int> radices;
  for (const Cell& c : b.cells)
    radices.push_back(sys.value_set(c.content).size());
  OutcomeSpace space = OutcomeSpace::create(radices);
  std::vector<Q> dense(space.size, Q(0));
  for (std::size_t r = 0; r < b.dist.support.size(); ++r)
    dense[static_cast<std::size_t>(space.index(b.dist.support[r]))] += b.dist.mass[r];

  int i = rand_int(rng, 0, k - 1);
  int j = rand_int(rng, 0, k - 2);
  if (j >= i) ++j;
  std::vector<int> t(static_cast<std::size_t>(k));
  for (int p = 0; p < k; ++p)
    t[static_cast<std::size_t>(p)] = rand_int(rng, 0, radices[static_cast<std::size_t>(p)] - 1);
  int ai = t[static_cast<std::size_t>(i)];
  int aj = t[static_cast<std::size_t>(j)];
  int bi2 = rand_int(rng, 0, radices[static_cast<std::size_t>(i)] - 2);
  if (bi2 >= ai) ++bi2;
  int bj2 = rand_int(rng, 0, radices[static_cast<std::size_t>(j)] - 2);
  if (bj2 >= aj) ++bj2;
  auto slot = [&](int vi, int vj) -> Q& {
    auto u = t;
    u[static_cast<std::size_t>(i)] = vi;
    u[static_cast<std::size_t>(j)] = vj;
    return dense[static_cast<std::size_t>(space.index(u))];
  };
  Q lo = std::min(slot(ai, bj2), slot(bi2, aj));
  if (lo == 0) return false;
  Q delta = lo * Q(rand_int(rng, 1, 4), 4);
  slot(ai, aj) += delta;
  slot(bi2, bj2) += delta;
  slot(ai, bj2) -= delta;
  slot(bi2, aj) -= delta;

  Distribution nd;
  for (std::uint64_t a = 0; a < space.size; ++a)
    if (dense[static_cast<std::size_t>(a)] != 0) {
      nd.support.push_back(space.decode(a));
      nd.mass.push_back(dense[static_cast<std::size_t>(a)]);
    }
  b.dist = std::move(nd);
  return true;
}

// Consistently connected and possibly contextual: a noncontextual base plus
// a few marginal-preserving shuffles.
inline CCSystem random_consistent(Rng& rng, int den = 16, int moves = 6) {
  CCSystem sys = random_noncontextual(rng, den);
  for (int m = 0; m < moves; ++m)
    bunch_rectangle_move(
        sys, rng,
        static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(sys.bunches.size()) - 1)));
  return sys;
}

// Rewrites one content's value indices (new index of old value v is perm[v]);
// labels follow, so the result describes the same experiment.
inline CCSystem permute_values(const CCSystem& sys, const std::string& content,
                               const std::vector<int>& perm) {
  CCSystem out = sys;
  const cbd::ValueSet& vs = sys.value_set(content);
  cbd::ValueSet nvs;
  nvs.labels.resize(vs.labels.size());
  for (int v = 0; v < vs.size(); ++v)
    nvs.labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(v)])] =
        vs.labels[static_cast<std::size_t>(v)];
  out.value_sets[content] = std::move(nvs);
  for (Bunch& b : out.bunches) {
    auto pos = b.position_of(content);
    if (!pos) continue;
    for (auto& tup : b.dist.support)
      tup[static_cast<std::size_t>(*pos)] =
          perm[static_cast<std::size_t>(tup[static_cast<std::size_t>(*pos)])];
    cbd::canonicalize(b.dist);
  }
  return out;
}

inline CCSystem rename_content(const CCSystem& sys, const std::string& from,
                               const std::string& to) {
  CCSystem out = sys;
  for (auto& q : out.contents)
    if (q == from) q = to;
  auto node = out.value_sets.extract(from);
  node.key() = to;
  out.value_sets.insert(std::move(node));
  for (Bunch& b : out.bunches)
    for (Cell& c : b.cells)
      if (c.content == from) c.content = to;
  return out;
}

inline CCSystem rename_context(const CCSystem& sys, const std::string& from,
                               const std::string& to) {
  CCSystem out = sys;
  for (auto& c : out.contexts)
    if (c == from) c = to;
  for (Bunch& b : out.bunches) {
    if (b.context == from) b.context = to;
    for (Cell& c : b.cells)
      if (c.context == from) c.context = to;
  }
  return out;
}

// Rotates context (and bunch) order without touching any law.
inline CCSystem rotate_contexts(const CCSystem& sys, std::size_t by) {
  CCSystem out = sys;
  std::rotate(out.contexts.begin(), out.contexts.begin() + static_cast<std::ptrdiff_t>(by),
              out.contexts.end());
  std::rotate(out.bunches.begin(), out.bunches.begin() + static_cast<std::ptrdiff_t>(by),
              out.bunches.end());
  return out;
}

// Marginal of a joint distribution onto named cells.
inline Distribution cells_marginal(const Distribution& joint,
                                   const std::vector<Cell>& all,
                                   const std::vector<Cell>& want) {
  std::vector<int> keep;
  for (const Cell& c : want) {
    auto it = std::find(all.begin(), all.end(), c);
    keep.push_back(static_cast<int>(it - all.begin()));
  }
  return cbd::marginal(joint, keep);
}

// A proper coupling of the whole system: nonnegative masses summing to one,
// exact bunch marginals, and multimaximal connection subcouplings.
inline bool valid_system_coupling(const CCSystem& sys,
                                  const cbd::SystemCoupling& sc) {
  Q total(0);
  for (const Q& m : sc.dist.mass) {
    if (m < 0) return false;
    total += m;
  }
  if (total != 1) return false;
  for (const Bunch& b : sys.bunches)
    if (!cbd::same_distribution(cells_marginal(sc.dist, sc.cells, b.cells), b.dist))
      return false;
  for (const std::string& q : sys.contents) {
    cbd::Connection conn = cbd::connection_of(sys, q);
    cbd::CouplingDistribution sub{conn.cells,
                                  cells_marginal(sc.dist, sc.cells, conn.cells)};
    try {
      if (!cbd::is_multimaximal(sub, conn)) return false;
    } catch (const cbd::Error&) {
      return false;  // mismatched subcoupling
    }
  }
  return true;
}

// A signed joint witness: masses sum to one, the reported total variation is
// the mass norm, bunch subcouplings equal the bunch laws exactly, and every
// connection subcoupling is a proper multimaximal coupling.
inline bool valid_quasi_coupling(const CCSystem& sys,
                                 const cbd::QuasiCoupling& qc) {
  Q total(0), tv(0);
  for (const Q& m : qc.masses.mass) {
    total += m;
    tv += cbd::q_abs(m);
  }
  if (total != 1 || tv != qc.total_variation) return false;
  for (const Bunch& b : sys.bunches)
    if (!cbd::same_distribution(cells_marginal(qc.masses, qc.cells, b.cells), b.dist))
      return false;
  for (const std::string& q : sys.contents) {
    cbd::Connection conn = cbd::connection_of(sys, q);
    cbd::CouplingDistribution sub{conn.cells,
                                  cells_marginal(qc.masses, qc.cells, conn.cells)};
    try {
      if (!cbd::is_multimaximal(sub, conn)) return false;
    } catch (const cbd::Error&) {
      return false;  // improper or mismatched subcoupling
    }
  }
  return true;
}

}  // namespace testgen

#endif  // CBD_TESTS_RANDOM_SYSTEMS_HPP
