#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <random>
#include <vector>

#include "cbd/corpus.hpp"
#include "cbd/coupling.hpp"
#include "cbd/lp.hpp"
#include "cbd/model.hpp"
#include "support/matchers.hpp"

using namespace cbd;

namespace {

// Binary connection of one content across contexts c1..ck with
// Pr[first value] = p[i] in context i+1.
Connection binary_conn(std::vector<Q> p) {
  Connection c;
  c.content = "q";
  for (std::size_t i = 0; i < p.size(); ++i) {
    c.cells.push_back(Cell{"q", "c" + std::to_string(i + 1)});
    c.marginals.push_back(Pmf{p[i], Q(1) - p[i]});
  }
  return c;
}

CouplingDistribution coupling_of(const Connection& conn,
                                 std::vector<std::vector<int>> sup,
                                 std::vector<Q> mass) {
  CouplingDistribution cpl;
  cpl.cells = conn.cells;
  cpl.dist = Distribution{std::move(sup), std::move(mass)};
  canonicalize(cpl.dist);
  return cpl;
}

// Independent product coupling of the connection's marginals.
CouplingDistribution product_coupling(const Connection& conn) {
  const std::size_t k = conn.cells.size();
  std::vector<int> radices;
  for (const Pmf& m : conn.marginals) radices.push_back(static_cast<int>(m.size()));
  OutcomeSpace space = OutcomeSpace::create(radices);
  CouplingDistribution cpl;
  cpl.cells = conn.cells;
  for (std::uint64_t a = 0; a < space.size; ++a) {
    auto t = space.decode(a);
    Q mass = 1;
    for (std::size_t i = 0; i < k; ++i)
      mass *= conn.marginals[i][static_cast<std::size_t>(t[i])];
    if (mass != 0) {
      cpl.dist.support.push_back(std::move(t));
      cpl.dist.mass.push_back(std::move(mass));
    }
  }
  return cpl;
}

// Exchanges mass between an incomparable atom pair {a, b} and its
// componentwise meet/join pair, in either direction. Both directions
// preserve every univariate marginal exactly; the meet/join -> {a, b}
// direction strictly lowers pair-equality masses.
CouplingDistribution rectangle_shuffle(const Connection& conn,
                                       const CouplingDistribution& start,
                                       std::mt19937& rng, int moves) {
  std::vector<int> radices;
  for (const Pmf& m : conn.marginals) radices.push_back(static_cast<int>(m.size()));
  OutcomeSpace space = OutcomeSpace::create(radices);
  std::vector<Q> x(space.size, Q(0));
  for (std::size_t r = 0; r < start.dist.support.size(); ++r)
    x[space.index(start.dist.support[r])] += start.dist.mass[r];

  std::uniform_int_distribution<std::uint64_t> pick(0, space.size - 1);
  std::uniform_int_distribution<int> quarter(0, 4);
  std::uniform_int_distribution<int> coin(0, 1);
  for (int s = 0; s < moves; ++s) {
    std::uint64_t a = pick(rng), b = pick(rng);
    if (a == b) continue;
    auto ta = space.decode(a), tb = space.decode(b);
    std::vector<int> lo(ta.size()), hi(ta.size());
    for (std::size_t i = 0; i < ta.size(); ++i) {
      lo[i] = std::min(ta[i], tb[i]);
      hi[i] = std::max(ta[i], tb[i]);
    }
    if (lo == ta || lo == tb) continue;  // comparable pair: move is a no-op
    std::uint64_t l = space.index(lo), h = space.index(hi);
    if (coin(rng)) {
      Q delta = std::min(x[a], x[b]) * quarter(rng) / 4;
      x[a] -= delta;
      x[b] -= delta;
      x[l] += delta;
      x[h] += delta;
    } else {
      Q delta = std::min(x[l], x[h]) * quarter(rng) / 4;
      x[l] -= delta;
      x[h] -= delta;
      x[a] += delta;
      x[b] += delta;
    }
  }

  CouplingDistribution out;
  out.cells = conn.cells;
  for (std::uint64_t a = 0; a < space.size; ++a)
    if (x[a] != 0) {
      out.dist.support.push_back(space.decode(a));
      out.dist.mass.push_back(x[a]);
    }
  return out;
}

Q subset_equal_mass(const Distribution& d, const std::vector<std::size_t>& subset) {
  Q total = 0;
  for (std::size_t r = 0; r < d.support.size(); ++r) {
    bool equal = true;
    for (std::size_t i = 1; i < subset.size(); ++i)
      equal = equal && d.support[r][subset[i]] == d.support[r][subset[0]];
    if (equal) total += d.mass[r];
  }
  return total;
}

// Largest Pr[all cells in `subset` agree] any coupling can reach.
Q subset_maximum(const Connection& conn, const std::vector<std::size_t>& subset) {
  Q total = 0;
  for (std::size_t v = 0; v < conn.marginals[0].size(); ++v) {
    Q low = conn.marginals[subset[0]][v];
    for (std::size_t i = 1; i < subset.size(); ++i)
      low = std::min(low, conn.marginals[subset[i]][v]);
    total += low;
  }
  return total;
}

Q random_q(std::mt19937& rng, int max_den) {
  std::uniform_int_distribution<int> den(1, max_den);
  int d = den(rng);
  std::uniform_int_distribution<int> num(0, d);
  return Q(num(rng), d);
}

}  // namespace

TEST_CASE("max_pair_probability sums pointwise minima") {
  CHECK(max_pair_probability({Q(1, 2), Q(1, 2)}, {Q(1, 2), Q(1, 2)}) == 1);
  CHECK(max_pair_probability({Q(1), Q(0)}, {Q(0), Q(1)}) == 0);
  Pmf r1{Q(0), Q(1, 2), Q(1, 2)};
  Pmf r2{Q(1, 2), Q(0), Q(1, 2)};
  Pmf r3{Q(1, 2), Q(1, 2), Q(0)};
  CHECK(max_pair_probability(r1, r2) == Q(1, 2));
  CHECK(max_pair_probability(r2, r3) == Q(1, 2));
  CHECK(max_pair_probability(r1, r3) == Q(1, 2));
  CHECK(max_pair_probability({Q(1, 4), Q(3, 4)}, {Q(3, 4), Q(1, 4)}) == Q(1, 2));
  CHECK_THROWS_MATCHES(max_pair_probability({Q(1)}, {Q(1, 2), Q(1, 2)}), Error,
                       ErrcIs(Errc::value_set_mismatch));
}

TEST_CASE("multimaximal_binary builds the staircase") {
  SECTION("sorted three-cell example") {
    auto cpl = multimaximal_binary(binary_conn({Q(1, 5), Q(1, 2), Q(7, 10)}));
    Distribution want{{{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {1, 1, 1}},
                      {Q(1, 5), Q(3, 10), Q(1, 5), Q(3, 10)}};
    CHECK(same_distribution(cpl.dist, want));
  }
  SECTION("identity coupling for an identically distributed pair") {
    auto cpl = multimaximal_binary(binary_conn({Q(1, 2), Q(1, 2)}));
    Distribution want{{{0, 0}, {1, 1}}, {Q(1, 2), Q(1, 2)}};
    CHECK(same_distribution(cpl.dist, want));
  }
  SECTION("zero-mass rows are dropped") {
    auto cpl = multimaximal_binary(binary_conn({Q(0), Q(1, 2), Q(1, 2)}));
    Distribution want{{{1, 0, 0}, {1, 1, 1}}, {Q(1, 2), Q(1, 2)}};
    CHECK(same_distribution(cpl.dist, want));
  }
  SECTION("unsorted marginals are ordered internally, output stays cell-aligned") {
    auto cpl = multimaximal_binary(binary_conn({Q(7, 10), Q(1, 5), Q(1, 2)}));
    Distribution want{{{0, 0, 0}, {0, 1, 0}, {0, 1, 1}, {1, 1, 1}},
                      {Q(1, 5), Q(3, 10), Q(1, 5), Q(3, 10)}};
    CHECK(same_distribution(cpl.dist, want));
    CHECK(is_multimaximal(cpl, binary_conn({Q(7, 10), Q(1, 5), Q(1, 2)})));
  }
  SECTION("rejects non-binary cells") {
    Connection c = binary_conn({Q(1, 2)});
    c.marginals[0] = Pmf{Q(1, 3), Q(1, 3), Q(1, 3)};
    CHECK_THROWS_MATCHES(multimaximal_binary(c), Error, ErrcIs(Errc::not_binary));
  }
}

TEST_CASE("is_multimaximal checks every pair against its maximum") {
  Connection conn = binary_conn({Q(1, 5), Q(1, 2), Q(7, 10)});
  SECTION("staircase passes with a full report") {
    PairMaximalityReport rep;
    CHECK(is_multimaximal(multimaximal_binary(conn), conn, &rep));
    REQUIRE(rep.pairs.size() == 3);
    for (const auto& pm : rep.pairs) {
      CHECK(pm.achieved == pm.maximum);
      CHECK(pm.maximal());
    }
  }
  SECTION("product coupling of a fair pair fails") {
    Connection pair = binary_conn({Q(1, 2), Q(1, 2)});
    PairMaximalityReport rep;
    CHECK_FALSE(is_multimaximal(product_coupling(pair), pair, &rep));
    REQUIRE(rep.pairs.size() == 1);
    CHECK(rep.pairs[0].achieved == Q(1, 2));
    CHECK(rep.pairs[0].maximum == 1);
  }
  SECTION("marginal mismatch is rejected") {
    auto cpl = coupling_of(conn, {{0, 0, 0}, {1, 1, 1}}, {Q(1, 2), Q(1, 2)});
    CHECK_THROWS_MATCHES(is_multimaximal(cpl, conn), Error,
                         ErrcIs(Errc::marginal_mismatch));
  }
  SECTION("negative mass is rejected") {
    auto cpl = multimaximal_binary(conn);
    cpl.dist.support.push_back({0, 0, 1});
    cpl.dist.mass.push_back(Q(-1, 10));
    cpl.dist.support.push_back({0, 1, 1});
    cpl.dist.mass.push_back(Q(1, 10));
    CHECK_THROWS_MATCHES(is_multimaximal(cpl, conn), Error,
                         ErrcIs(Errc::negative_mass));
  }
  SECTION("cell list must match the connection") {
    auto cpl = multimaximal_binary(conn);
    cpl.cells[1].context = "elsewhere";
    CHECK_THROWS_MATCHES(is_multimaximal(cpl, conn), Error,
                         ErrcIs(Errc::unknown_cell));
  }
}

TEST_CASE("refined-triple couplings from the six-valued connection") {
  CCSystem sys = gen_refined_triple();
  Connection conn = connection_of(sys, "r");
  REQUIRE(conn.arity() == 3);

  // Value indices: 1->0, 1'->1, 2->2, 2'->3, 3->4, 3'->5.
  auto t_dot = coupling_of(conn, {{3, 1, 0}, {5, 4, 2}}, {Q(1, 2), Q(1, 2)});
  auto t_ddot = coupling_of(conn, {{3, 4, 2}, {5, 1, 0}}, {Q(1, 2), Q(1, 2)});

  SECTION("both displayed couplings are multimaximal") {
    CHECK(is_multimaximal(t_dot, conn));
    CHECK(is_multimaximal(t_ddot, conn));
  }
  SECTION("existence search returns a witness") {
    CouplingSearch search = multimaximal_exists(conn);
    REQUIRE(search.coupling.has_value());
    CHECK_FALSE(search.certificate.has_value());
    CHECK(is_multimaximal(*search.coupling, conn));
  }
  SECTION("enumeration finds both displayed couplings") {
    auto found = enumerate_multimaximal(conn, 16);
    CHECK(found.size() >= 2);
    auto contains = [&](const CouplingDistribution& want) {
      return std::any_of(found.begin(), found.end(), [&](const auto& got) {
        return same_distribution(got.dist, want.dist);
      });
    };
    CHECK(contains(t_dot));
    CHECK(contains(t_ddot));
    for (const auto& cpl : found) CHECK(is_multimaximal(cpl, conn));
  }
  SECTION("triple-equality maximum is zero and achieved") {
    CHECK(subset_maximum(conn, {0, 1, 2}) == 0);
    CHECK(subset_equal_mass(t_dot.dist, {0, 1, 2}) == 0);
  }
}

TEST_CASE("conflict triple admits no multimaximal coupling") {
  CCSystem sys = gen_conflict_triple();
  Connection conn = connection_of(sys, "r");

  SECTION("all three pair maxima equal one half") {
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = i + 1; j < 3; ++j)
        CHECK(max_pair_probability(conn.marginals[i], conn.marginals[j]) == Q(1, 2));
  }
  SECTION("existence search is infeasible with a verifiable certificate") {
    CouplingSearch search = multimaximal_exists(conn);
    CHECK_FALSE(search.coupling.has_value());
    REQUIRE(search.certificate.has_value());
    CHECK(verify_farkas(search.lp, *search.certificate));
    CHECK_FALSE(search.numeric_fallback);
  }
  SECTION("fast mode agrees") {
    CouplingSearch search = multimaximal_exists(conn, SolveMode::fast);
    CHECK_FALSE(search.coupling.has_value());
    REQUIRE(search.certificate.has_value());
    CHECK(verify_farkas(search.lp, *search.certificate));
  }
  SECTION("enumeration over an empty polytope is empty") {
    CHECK(enumerate_multimaximal(conn, 8).empty());
  }
}

TEST_CASE("enumerate_multimaximal endpoints") {
  SECTION("binary connection yields exactly one vertex") {
    Connection conn = binary_conn({Q(1, 4), Q(3, 4)});
    auto found = enumerate_multimaximal(conn, 16);
    REQUIRE(found.size() == 1);
    CHECK(same_distribution(found[0].dist, multimaximal_binary(conn).dist));
  }
  SECTION("single-cell connection yields its own marginal") {
    Connection conn;
    conn.content = "q";
    conn.cells = {Cell{"q", "c1"}};
    conn.marginals = {Pmf{Q(1, 3), Q(0), Q(2, 3)}};
    auto found = enumerate_multimaximal(conn, 16);
    REQUIRE(found.size() == 1);
    Distribution want{{{0}, {2}}, {Q(1, 3), Q(2, 3)}};
    CHECK(same_distribution(found[0].dist, want));
  }
  SECTION("limit zero and limit one") {
    Connection conn = binary_conn({Q(1, 4), Q(3, 4)});
    CHECK(enumerate_multimaximal(conn, 0).empty());
    CHECK(enumerate_multimaximal(conn, 1).size() == 1);
  }
}

TEST_CASE("outcome budget bounds the LP route") {
  std::vector<Q> big(21, Q(1, 2));
  Connection wide = binary_conn(big);
  CHECK_THROWS_MATCHES(connection_lp(wide), Error, ErrcIs(Errc::too_large));
  CHECK_THROWS_MATCHES(multimaximal_exists(wide), Error, ErrcIs(Errc::too_large));
  CHECK_THROWS_MATCHES(enumerate_multimaximal(wide, 4), Error,
                       ErrcIs(Errc::too_large));
  // The closed form is untouched by the budget.
  CHECK_NOTHROW(multimaximal_binary(wide));

  // Raising the budget admits a space the default would also have taken;
  // shrinking it below the space size refuses cheaply.
  Connection small = binary_conn({Q(1, 4), Q(1, 2), Q(3, 4)});
  CHECK_THROWS_MATCHES(connection_lp(small, 4), Error, ErrcIs(Errc::too_large));
  CHECK_NOTHROW(connection_lp(small, 8));
  CHECK(multimaximal_exists(small, SolveMode::exact, 8).coupling.has_value());
}

TEST_CASE("random binary staircases: marginals, subsets, uniqueness") {
  std::mt19937 rng(552901u);
  int checked_lp = 0;
  for (int iter = 0; iter < 60; ++iter) {
    const int k = 2 + static_cast<int>(rng() % 5);
    std::vector<Q> p;
    for (int i = 0; i < k; ++i) p.push_back(random_q(rng, 64));
    Connection conn = binary_conn(p);
    CouplingDistribution stair = multimaximal_binary(conn);

    // Marginals are exact and every pair achieves its maximum.
    CHECK(is_multimaximal(stair, conn));
    CHECK(is_multimaximal_consecutive(stair, conn));

    // Exhaustive subset maximality for k <= 5.
    if (k <= 5) {
      for (unsigned mask = 1; mask < (1u << k); ++mask) {
        std::vector<std::size_t> subset;
        for (int i = 0; i < k; ++i)
          if ((mask >> i) & 1u) subset.push_back(static_cast<std::size_t>(i));
        if (subset.size() < 2) continue;
        CHECK(subset_equal_mass(stair.dist, subset) == subset_maximum(conn, subset));
      }
    }

    // The multimaximal polytope is a single point: the LP witness is the
    // staircase itself.
    if (k <= 4) {
      CouplingSearch search = multimaximal_exists(conn);
      REQUIRE(search.coupling.has_value());
      CHECK(same_distribution(search.coupling->dist, stair.dist));
      auto found = enumerate_multimaximal(conn, 8);
      REQUIRE(found.size() == 1);
      CHECK(same_distribution(found[0].dist, stair.dist));
      ++checked_lp;
    }
  }
  CHECK(checked_lp > 10);
}

TEST_CASE("all-pairs and consecutive-pairs checks agree on random couplings") {
  std::mt19937 rng(77120u);
  int passed = 0, failed = 0;
  for (int iter = 0; iter < 40; ++iter) {
    const int k = 2 + static_cast<int>(rng() % 4);
    std::vector<Q> p;
    for (int i = 0; i < k; ++i) p.push_back(random_q(rng, 16));
    Connection conn = binary_conn(p);
    CouplingDistribution stair = multimaximal_binary(conn);
    for (int variant = 0; variant < 3; ++variant) {
      CouplingDistribution cpl = rectangle_shuffle(conn, stair, rng, 4 * variant);
      bool full = is_multimaximal(cpl, conn);
      bool consecutive = is_multimaximal_consecutive(cpl, conn);
      CHECK(full == consecutive);
      (full ? passed : failed) += 1;
    }
  }
  // The shuffle must exercise both outcomes.
  CHECK(passed > 0);
  CHECK(failed > 0);
}
