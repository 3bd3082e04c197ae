#ifndef CBD_TESTS_L1_CERTIFICATE_HPP
#define CBD_TESTS_L1_CERTIFICATE_HPP

// Exact optimality certificate for min sum|x| over {A x = b, x free}.
// Splitting x into nonnegative parts dualizes to max b.y subject to
// |A^T y|_inf <= 1, so any dual-feasible y with b.y equal to a feasible
// primal value proves that value optimal. The certificate below is found
// with the library solver but verified by direct arithmetic, so trusting
// it does not require trusting the solver.

#include <vector>

#include "cbd/lp.hpp"
#include "cbd/rational.hpp"

namespace l1cert {

using cbd::LinearProgram;
using cbd::Q;

// True when `value` is provably the minimum of sum|x| over lp's equality
// rows with all variables free. Requires such an lp; returns false rather
// than certifying anything it cannot check.
inline bool certifies_minimum(const LinearProgram& lp, const Q& value) {
  for (const auto& row : lp.rows)
    if (row.rel != cbd::Rel::eq) return false;
  for (const auto& bd : lp.bounds)
    if (bd.lo || bd.hi) return false;

  LinearProgram dual;
  for (std::size_t r = 0; r < lp.rows.size(); ++r)
    dual.add_var(cbd::VarBounds{std::nullopt, std::nullopt});
  std::vector<std::vector<cbd::LinTerm>> cols(static_cast<std::size_t>(lp.num_vars));
  for (std::size_t r = 0; r < lp.rows.size(); ++r)
    for (const cbd::LinTerm& t : lp.rows[r].terms)
      cols[static_cast<std::size_t>(t.var)].push_back({static_cast<int>(r), t.coef});
  for (int j = 0; j < lp.num_vars; ++j) {
    cbd::LPRow hi{cols[static_cast<std::size_t>(j)], cbd::Rel::le, Q(1), ""};
    cbd::LPRow lo{cols[static_cast<std::size_t>(j)], cbd::Rel::ge, Q(-1), ""};
    dual.add_row(std::move(hi));
    dual.add_row(std::move(lo));
  }
  for (std::size_t r = 0; r < lp.rows.size(); ++r)
    dual.objective.push_back({static_cast<int>(r), -lp.rows[r].rhs});  // max b.y

  cbd::LPSolution sol = cbd::solve(dual, cbd::SolveMode::exact);
  if (sol.status != cbd::LPStatus::optimal) return false;
  const std::vector<Q>& y = sol.point;

  // Independent verification: dual feasibility and objective match.
  for (int j = 0; j < lp.num_vars; ++j) {
    Q dot(0);
    for (const cbd::LinTerm& t : cols[static_cast<std::size_t>(j)])
      dot += t.coef * y[static_cast<std::size_t>(t.var)];
    if (dot > 1 || dot < -1) return false;
  }
  Q obj(0);
  for (std::size_t r = 0; r < lp.rows.size(); ++r)
    obj += lp.rows[r].rhs * y[r];
  return obj == value;
}

}  // namespace l1cert

#endif  // CBD_TESTS_L1_CERTIFICATE_HPP
