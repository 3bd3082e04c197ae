#ifndef CBD_LP_HPP
#define CBD_LP_HPP

#include <algorithm>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "cbd/error.hpp"
#include "cbd/rational.hpp"

namespace cbd {

enum class Rel { le, ge, eq };

inline std::string_view rel_str(Rel r) {
  switch (r) {
    case Rel::le: return "<=";
    case Rel::ge: return ">=";
    case Rel::eq: return "=";
  }
  return "?";
}

struct LinTerm {
  int var;
  Q coef;
};

struct LPRow {
  std::vector<LinTerm> terms;
  Rel rel = Rel::eq;
  Q rhs{0};
  std::string name;
};

struct VarBounds {
  std::optional<Q> lo;
  std::optional<Q> hi;
};

/// Minimization problem over rational variables with box bounds and
/// le/ge/eq rows. Default bounds are [0, +inf).
struct LinearProgram {
  int num_vars = 0;
  std::vector<VarBounds> bounds;
  std::vector<std::string> var_names;  // optional, for dumps
  std::vector<LinTerm> objective;      // minimized; empty = feasibility
  std::vector<LPRow> rows;

  int add_var(VarBounds b = VarBounds{Q(0), std::nullopt},
              std::string name = {}) {
    bounds.push_back(std::move(b));
    var_names.push_back(std::move(name));
    return num_vars++;
  }

  void add_row(LPRow r) { rows.push_back(std::move(r)); }
};

enum class LPStatus { optimal, feasible, infeasible, unbounded };

inline std::string_view status_str(LPStatus s) {
  switch (s) {
    case LPStatus::optimal: return "optimal";
    case LPStatus::feasible: return "feasible";
    case LPStatus::infeasible: return "infeasible";
    case LPStatus::unbounded: return "unbounded";
  }
  return "?";
}

/// Proof of infeasibility: one multiplier per row (<=0 for le rows,
/// >=0 for ge rows, free for eq rows). Aggregating rows with these
/// weights yields c.x >= beta whose maximum over the variable box
/// falls short of beta.
struct FarkasCertificate {
  std::vector<Q> row_mult;  // aligned with LinearProgram::rows
};

struct LPSolution {
  LPStatus status = LPStatus::infeasible;
  std::vector<Q> point;      // optimal/feasible/unbounded: a feasible point
  Q objective_value{0};      // c.point for optimal; 0 for pure feasibility
  std::optional<FarkasCertificate> certificate;  // infeasible only
  std::optional<std::vector<Q>> ray;  // unbounded: improving direction
  bool numeric_fallback = false;  // fast mode had to re-solve exactly
  std::uint64_t pivots = 0;
};

enum class SolveMode { exact, fast };

/// Exact check of all rows and bounds at a point.
inline bool satisfies(const LinearProgram& lp, const std::vector<Q>& x) {
  if (static_cast<int>(x.size()) != lp.num_vars) return false;
  for (int j = 0; j < lp.num_vars; ++j) {
    const auto& b = lp.bounds[static_cast<std::size_t>(j)];
    if (b.lo && x[static_cast<std::size_t>(j)] < *b.lo) return false;
    if (b.hi && x[static_cast<std::size_t>(j)] > *b.hi) return false;
  }
  for (const LPRow& r : lp.rows) {
    Q lhs(0);
    for (const LinTerm& t : r.terms) lhs += t.coef * x[static_cast<std::size_t>(t.var)];
    if (r.rel == Rel::le && lhs > r.rhs) return false;
    if (r.rel == Rel::ge && lhs < r.rhs) return false;
    if (r.rel == Rel::eq && lhs != r.rhs) return false;
  }
  return true;
}

inline Q objective_at(const LinearProgram& lp, const std::vector<Q>& x) {
  Q v(0);
  for (const LinTerm& t : lp.objective) v += t.coef * x[static_cast<std::size_t>(t.var)];
  return v;
}

/// Exact verification of a Farkas certificate against rows and bounds.
inline bool verify_farkas(const LinearProgram& lp, const FarkasCertificate& cert) {
  if (cert.row_mult.size() != lp.rows.size()) return false;
  std::vector<Q> c(static_cast<std::size_t>(lp.num_vars), Q(0));
  Q beta(0);
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const Q& m = cert.row_mult[r];
    if (lp.rows[r].rel == Rel::le && m > 0) return false;
    if (lp.rows[r].rel == Rel::ge && m < 0) return false;
    if (m == 0) continue;
    for (const LinTerm& t : lp.rows[r].terms) c[static_cast<std::size_t>(t.var)] += m * t.coef;
    beta += m * lp.rows[r].rhs;
  }
  Q box_max(0);
  for (int j = 0; j < lp.num_vars; ++j) {
    const Q& cj = c[static_cast<std::size_t>(j)];
    if (cj == 0) continue;
    const auto& b = lp.bounds[static_cast<std::size_t>(j)];
    if (cj > 0) {
      if (!b.hi) return false;  // sup is +inf, no contradiction
      box_max += cj * *b.hi;
    } else {
      if (!b.lo) return false;
      box_max += cj * *b.lo;
    }
  }
  return box_max < beta;
}

/// Exact verification of an unbounded ray at a feasible point.
inline bool verify_ray(const LinearProgram& lp, const std::vector<Q>& x,
                       const std::vector<Q>& d) {
  if (!satisfies(lp, x)) return false;
  if (static_cast<int>(d.size()) != lp.num_vars) return false;
  for (int j = 0; j < lp.num_vars; ++j) {
    const auto& b = lp.bounds[static_cast<std::size_t>(j)];
    if (b.lo && d[static_cast<std::size_t>(j)] < 0) return false;
    if (b.hi && d[static_cast<std::size_t>(j)] > 0) return false;
  }
  for (const LPRow& r : lp.rows) {
    Q lhs(0);
    for (const LinTerm& t : r.terms) lhs += t.coef * d[static_cast<std::size_t>(t.var)];
    if (r.rel == Rel::le && lhs > 0) return false;
    if (r.rel == Rel::ge && lhs < 0) return false;
    if (r.rel == Rel::eq && lhs != 0) return false;
  }
  Q drop(0);
  for (const LinTerm& t : lp.objective) drop += t.coef * d[static_cast<std::size_t>(t.var)];
  return drop < 0;
}

namespace detail {

/// Standardized model: minimize cost.z subject to A z = rhs, z >= 0,
/// rhs >= 0. Columns are sparse; cap rows encode two-sided bounds.
struct StdModel {
  int m = 0;  // rows
  int n = 0;  // structural + slack columns (artificials are n..n+m-1)
  std::vector<std::vector<std::pair<int, Q>>> cols;
  std::vector<Q> rhs;
  std::vector<Q> cost;
  std::vector<int> row_orig;   // original row index, -1 for cap rows
  std::vector<int> row_sigma;  // +-1 sign applied during normalization
  std::vector<int> seed;       // initial basic column per row (slack or artificial)

  enum class Kind { shifted, mirrored, split };
  struct VarMap {
    Kind kind;
    int col = -1, col2 = -1;
    Q lo{0}, hi{0};
  };
  std::vector<VarMap> vars;

  std::vector<Q> to_point(const std::vector<Q>& z) const {
    std::vector<Q> x(vars.size(), Q(0));
    for (std::size_t j = 0; j < vars.size(); ++j) {
      const VarMap& v = vars[j];
      switch (v.kind) {
        case Kind::shifted: x[j] = v.lo + z[static_cast<std::size_t>(v.col)]; break;
        case Kind::mirrored: x[j] = v.hi - z[static_cast<std::size_t>(v.col)]; break;
        case Kind::split:
          x[j] = z[static_cast<std::size_t>(v.col)] - z[static_cast<std::size_t>(v.col2)];
          break;
      }
    }
    return x;
  }

  std::vector<Q> to_direction(const std::vector<Q>& dz) const {
    std::vector<Q> d(vars.size(), Q(0));
    for (std::size_t j = 0; j < vars.size(); ++j) {
      const VarMap& v = vars[j];
      switch (v.kind) {
        case Kind::shifted: d[j] = dz[static_cast<std::size_t>(v.col)]; break;
        case Kind::mirrored: d[j] = -dz[static_cast<std::size_t>(v.col)]; break;
        case Kind::split:
          d[j] = dz[static_cast<std::size_t>(v.col)] - dz[static_cast<std::size_t>(v.col2)];
          break;
      }
    }
    return d;
  }
};

inline StdModel standardize(const LinearProgram& lp) {
  StdModel sm;
  sm.vars.resize(static_cast<std::size_t>(lp.num_vars));

  struct CapRow {
    int col;
    Q rhs;
  };
  std::vector<CapRow> caps;

  int ncols = 0;
  for (int j = 0; j < lp.num_vars; ++j) {
    const VarBounds& b = lp.bounds[static_cast<std::size_t>(j)];
    StdModel::VarMap& v = sm.vars[static_cast<std::size_t>(j)];
    if (b.lo && b.hi && *b.lo > *b.hi)
      throw Error(Errc::dimension_mismatch,
                  "contradictory bounds on variable " + std::to_string(j));
    if (b.lo) {
      v.kind = StdModel::Kind::shifted;
      v.lo = *b.lo;
      v.col = ncols++;
      if (b.hi) {
        v.hi = *b.hi;
        caps.push_back(CapRow{v.col, *b.hi - *b.lo});
      }
    } else if (b.hi) {
      v.kind = StdModel::Kind::mirrored;
      v.hi = *b.hi;
      v.col = ncols++;
    } else {
      v.kind = StdModel::Kind::split;
      v.col = ncols++;
      v.col2 = ncols++;
    }
  }

  // Row-major assembly in z-coordinates, then sign normalization.
  struct RawRow {
    std::vector<std::pair<int, Q>> terms;  // (col, coef)
    Q rhs{0};
    int slack_sign = 0;  // +1 le, -1 ge, 0 eq
    int orig = -1;
  };
  std::vector<RawRow> raw;
  raw.reserve(lp.rows.size() + caps.size());

  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const LPRow& row = lp.rows[r];
    std::vector<Q> dense(static_cast<std::size_t>(lp.num_vars), Q(0));
    for (const LinTerm& t : row.terms) {
      if (t.var < 0 || t.var >= lp.num_vars)
        throw Error(Errc::dimension_mismatch, "row references unknown variable");
      dense[static_cast<std::size_t>(t.var)] += t.coef;
    }
    RawRow rr;
    rr.orig = static_cast<int>(r);
    rr.rhs = row.rhs;
    rr.slack_sign = row.rel == Rel::le ? 1 : row.rel == Rel::ge ? -1 : 0;
    for (int j = 0; j < lp.num_vars; ++j) {
      const Q& a = dense[static_cast<std::size_t>(j)];
      if (a == 0) continue;
      const StdModel::VarMap& v = sm.vars[static_cast<std::size_t>(j)];
      switch (v.kind) {
        case StdModel::Kind::shifted:
          rr.terms.emplace_back(v.col, a);
          rr.rhs -= a * v.lo;
          break;
        case StdModel::Kind::mirrored:
          rr.terms.emplace_back(v.col, -a);
          rr.rhs -= a * v.hi;
          break;
        case StdModel::Kind::split:
          rr.terms.emplace_back(v.col, a);
          rr.terms.emplace_back(v.col2, -a);
          break;
      }
    }
    raw.push_back(std::move(rr));
  }
  for (const CapRow& c : caps) {
    RawRow rr;
    rr.terms.emplace_back(c.col, Q(1));
    rr.rhs = c.rhs;  // hi - lo >= 0
    rr.slack_sign = 1;
    raw.push_back(std::move(rr));
  }

  sm.m = static_cast<int>(raw.size());
  // Slack columns, then transpose to column-major with sign normalization.
  std::vector<int> slack_col(raw.size(), -1);
  for (std::size_t r = 0; r < raw.size(); ++r)
    if (raw[r].slack_sign != 0) slack_col[r] = ncols++;
  sm.n = ncols;
  sm.cols.assign(static_cast<std::size_t>(sm.n), {});
  sm.rhs.resize(raw.size());
  sm.row_orig.resize(raw.size());
  sm.row_sigma.resize(raw.size());
  sm.seed.assign(raw.size(), -1);

  for (std::size_t r = 0; r < raw.size(); ++r) {
    int sigma = raw[r].rhs < 0 ? -1 : 1;
    sm.rhs[r] = sigma == 1 ? raw[r].rhs : Q(-raw[r].rhs);
    sm.row_orig[r] = raw[r].orig;
    sm.row_sigma[r] = sigma;
    for (auto& [col, coef] : raw[r].terms) {
      Q v = sigma == 1 ? coef : Q(-coef);
      if (v != 0) sm.cols[static_cast<std::size_t>(col)].emplace_back(static_cast<int>(r), std::move(v));
    }
    if (slack_col[r] >= 0) {
      int sc = raw[r].slack_sign * sigma;
      sm.cols[static_cast<std::size_t>(slack_col[r])].emplace_back(static_cast<int>(r), Q(sc));
      if (sc == 1) sm.seed[r] = slack_col[r];
    }
  }

  // Phase-2 costs in z-coordinates (constant offset not tracked; the
  // reported objective is re-evaluated at the mapped-back point).
  sm.cost.assign(static_cast<std::size_t>(sm.n), Q(0));
  std::vector<Q> cdense(static_cast<std::size_t>(lp.num_vars), Q(0));
  for (const LinTerm& t : lp.objective) {
    if (t.var < 0 || t.var >= lp.num_vars)
      throw Error(Errc::dimension_mismatch, "objective references unknown variable");
    cdense[static_cast<std::size_t>(t.var)] += t.coef;
  }
  for (int j = 0; j < lp.num_vars; ++j) {
    const Q& c = cdense[static_cast<std::size_t>(j)];
    if (c == 0) continue;
    const StdModel::VarMap& v = sm.vars[static_cast<std::size_t>(j)];
    switch (v.kind) {
      case StdModel::Kind::shifted: sm.cost[static_cast<std::size_t>(v.col)] += c; break;
      case StdModel::Kind::mirrored: sm.cost[static_cast<std::size_t>(v.col)] -= c; break;
      case StdModel::Kind::split:
        sm.cost[static_cast<std::size_t>(v.col)] += c;
        sm.cost[static_cast<std::size_t>(v.col2)] -= c;
        break;
    }
  }
  return sm;
}

/// Revised simplex with an explicit basis inverse. T is Q (exact, all
/// epsilons zero) or double (tolerant). Pricing is Dantzig until a long
/// degenerate stall, then Bland, which guarantees termination.
template <typename T>
struct Simplex {
  int m = 0, n = 0;
  std::vector<std::vector<std::pair<int, T>>> cols;  // structural + slack
  std::vector<T> rhs;
  std::vector<T> cost;  // phase-2 structural costs

  T eps_zero{};   // |v| <= eps_zero treated as zero
  T eps_cost{};   // entering needs d < -eps_cost
  T eps_pivot{};  // ratio candidates need w > eps_pivot
  std::uint64_t max_pivots = 0;

  std::vector<std::vector<T>> Binv;
  std::vector<int> basis;  // column index; >= n means artificial (row = idx - n)
  std::vector<T> xB;
  std::vector<char> nonbasic_flag;  // size n; true when eligible to enter
  std::uint64_t pivots = 0;
  int stall = 0;
  bool bland = false;

  enum class Outcome { optimal, unbounded, iteration_cap };

  bool is_zero(const T& v) const { return v <= eps_zero && v >= -eps_zero; }

  void init() {
    Binv.assign(static_cast<std::size_t>(m), std::vector<T>(static_cast<std::size_t>(m), T(0)));
    for (int i = 0; i < m; ++i) Binv[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)] = T(1);
    basis.resize(static_cast<std::size_t>(m));
    xB = rhs;
    nonbasic_flag.assign(static_cast<std::size_t>(n), 1);
  }

  void seed_basis(const std::vector<int>& seed) {
    for (int i = 0; i < m; ++i) {
      if (seed[static_cast<std::size_t>(i)] >= 0) {
        basis[static_cast<std::size_t>(i)] = seed[static_cast<std::size_t>(i)];
        nonbasic_flag[static_cast<std::size_t>(seed[static_cast<std::size_t>(i)])] = 0;
      } else {
        basis[static_cast<std::size_t>(i)] = n + i;
      }
    }
  }

  // w = Binv * A_col for a structural/slack column.
  std::vector<T> ftran(int col) const {
    std::vector<T> w(static_cast<std::size_t>(m), T(0));
    for (const auto& [r, v] : cols[static_cast<std::size_t>(col)]) {
      for (int i = 0; i < m; ++i) {
        const T& b = Binv[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
        if (!(b <= eps_zero && b >= -eps_zero)) w[static_cast<std::size_t>(i)] += b * v;
      }
    }
    return w;
  }

  // y = cB^T Binv for the given phase costs.
  std::vector<T> duals(bool phase1) const {
    std::vector<T> y(static_cast<std::size_t>(m), T(0));
    for (int i = 0; i < m; ++i) {
      T cb = basic_cost(i, phase1);
      if (is_zero(cb)) continue;
      const auto& row = Binv[static_cast<std::size_t>(i)];
      for (int k = 0; k < m; ++k) {
        const T& v = row[static_cast<std::size_t>(k)];
        if (!(v <= eps_zero && v >= -eps_zero)) y[static_cast<std::size_t>(k)] += cb * v;
      }
    }
    return y;
  }

  T basic_cost(int i, bool phase1) const {
    int b = basis[static_cast<std::size_t>(i)];
    if (b >= n) return phase1 ? T(1) : T(0);
    return phase1 ? T(0) : cost[static_cast<std::size_t>(b)];
  }

  T reduced_cost(int j, const std::vector<T>& y, bool phase1) const {
    T d = phase1 ? T(0) : cost[static_cast<std::size_t>(j)];
    for (const auto& [r, v] : cols[static_cast<std::size_t>(j)])
      d -= y[static_cast<std::size_t>(r)] * v;
    return d;
  }

  // Returns entering column or -1 when optimal.
  int price(bool phase1) {
    std::vector<T> y = duals(phase1);
    int best = -1;
    T best_d{};
    for (int j = 0; j < n; ++j) {
      if (!nonbasic_flag[static_cast<std::size_t>(j)]) continue;
      T d = reduced_cost(j, y, phase1);
      if (d < -eps_cost) {
        if (bland) return j;
        if (best < 0 || d < best_d) {
          best = j;
          best_d = d;
        }
      }
    }
    return best;
  }

  // Leaving row for entering direction w; -1 when unbounded.
  int ratio_test(const std::vector<T>& w) const {
    int row = -1;
    T best{};
    for (int i = 0; i < m; ++i) {
      const T& wi = w[static_cast<std::size_t>(i)];
      if (wi <= eps_pivot) continue;
      T xi = xB[static_cast<std::size_t>(i)];
      if (xi < T(0)) xi = T(0);  // float drift guard; exact never negative
      T ratio = xi / wi;
      if (row < 0 || ratio < best ||
          (ratio == best && leave_key(i) < leave_key(row))) {
        row = i;
        best = ratio;
      }
    }
    return row;
  }

  // Fixed variable order for the leaving tie-break: artificials first so
  // they drain out of the basis, then columns by index.
  long long leave_key(int i) const {
    int b = basis[static_cast<std::size_t>(i)];
    return b >= n ? b - n : static_cast<long long>(b) + m;
  }

  void pivot(int row, int enter_col, const std::vector<T>& w) {
    const std::size_t r = static_cast<std::size_t>(row);
    T theta = xB[r] / w[r];
    if (theta < T(0)) theta = T(0);
    if (theta == T(0)) {
      if (++stall > 4 * m + 64) bland = true;
    } else {
      stall = 0;
    }
    int leaving = basis[r];
    if (leaving < n) nonbasic_flag[static_cast<std::size_t>(leaving)] = 1;
    basis[r] = enter_col;
    nonbasic_flag[static_cast<std::size_t>(enter_col)] = 0;

    const T inv = T(1) / w[r];
    auto& prow = Binv[r];
    for (int k = 0; k < m; ++k) {
      T& v = prow[static_cast<std::size_t>(k)];
      if (!(v <= eps_zero && v >= -eps_zero)) v *= inv;
      else v = T(0);
    }
    xB[r] *= inv;
    for (int i = 0; i < m; ++i) {
      if (i == row) continue;
      const T& wi = w[static_cast<std::size_t>(i)];
      if (wi <= eps_zero && wi >= -eps_zero) continue;
      auto& irow = Binv[static_cast<std::size_t>(i)];
      for (int k = 0; k < m; ++k) {
        const T& pv = prow[static_cast<std::size_t>(k)];
        if (!(pv <= eps_zero && pv >= -eps_zero)) irow[static_cast<std::size_t>(k)] -= wi * pv;
      }
      xB[static_cast<std::size_t>(i)] -= wi * xB[r];
    }
    ++pivots;
  }

  Outcome run(bool phase1, int& unbounded_col) {
    for (;;) {
      if (pivots >= max_pivots) return Outcome::iteration_cap;
      int enter = price(phase1);
      if (enter < 0) return Outcome::optimal;
      std::vector<T> w = ftran(enter);
      int row = ratio_test(w);
      if (row < 0) {
        unbounded_col = enter;
        return Outcome::unbounded;
      }
      pivot(row, enter, w);
    }
  }

  T phase1_value() const {
    T v(0);
    for (int i = 0; i < m; ++i)
      if (basis[static_cast<std::size_t>(i)] >= n) v += xB[static_cast<std::size_t>(i)];
    return v;
  }

  // Pivots artificials out of the basis where a structural column can
  // replace them; remaining artificial rows are inert (identically zero
  // across all structural columns, so later pivots never touch them).
  void purge_artificials() {
    for (int i = 0; i < m; ++i) {
      if (basis[static_cast<std::size_t>(i)] < n) continue;
      for (int j = 0; j < n; ++j) {
        if (!nonbasic_flag[static_cast<std::size_t>(j)]) continue;
        T wij(0);
        for (const auto& [r, v] : cols[static_cast<std::size_t>(j)])
          wij += Binv[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)] * v;
        if (wij <= eps_pivot && wij >= -eps_pivot) continue;
        std::vector<T> w = ftran(j);
        pivot(i, j, w);
        break;
      }
    }
  }

  std::vector<T> solution() const {
    std::vector<T> z(static_cast<std::size_t>(n), T(0));
    for (int i = 0; i < m; ++i)
      if (basis[static_cast<std::size_t>(i)] < n)
        z[static_cast<std::size_t>(basis[static_cast<std::size_t>(i)])] = xB[static_cast<std::size_t>(i)];
    return z;
  }
};

/// Gauss-Jordan inverse; nullopt when singular. Exact.
inline std::optional<std::vector<std::vector<Q>>> invert(
    std::vector<std::vector<Q>> a) {
  const std::size_t m = a.size();
  std::vector<std::vector<Q>> inv(m, std::vector<Q>(m, Q(0)));
  for (std::size_t i = 0; i < m; ++i) inv[i][i] = 1;
  for (std::size_t col = 0; col < m; ++col) {
    std::size_t piv = col;
    while (piv < m && a[piv][col] == 0) ++piv;
    if (piv == m) return std::nullopt;
    std::swap(a[piv], a[col]);
    std::swap(inv[piv], inv[col]);
    Q d = a[col][col];
    for (std::size_t k = 0; k < m; ++k) {
      if (a[col][k] != 0) a[col][k] /= d;
      if (inv[col][k] != 0) inv[col][k] /= d;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (i == col || a[i][col] == 0) continue;
      Q f = a[i][col];
      for (std::size_t k = 0; k < m; ++k) {
        if (a[col][k] != 0) a[i][k] -= f * a[col][k];
        if (inv[col][k] != 0) inv[i][k] -= f * inv[col][k];
      }
    }
  }
  return inv;
}

/// Dense basis matrix for a set of basis column ids (>= n: artificial).
inline std::vector<std::vector<Q>> basis_matrix(const StdModel& sm,
                                                const std::vector<int>& basis) {
  const std::size_t m = static_cast<std::size_t>(sm.m);
  std::vector<std::vector<Q>> B(m, std::vector<Q>(m, Q(0)));
  for (std::size_t i = 0; i < m; ++i) {
    int b = basis[i];
    if (b >= sm.n) {
      B[static_cast<std::size_t>(b - sm.n)][i] = 1;
    } else {
      for (const auto& [r, v] : sm.cols[static_cast<std::size_t>(b)])
        B[static_cast<std::size_t>(r)][i] = v;
    }
  }
  return B;
}

inline FarkasCertificate extract_certificate(const LinearProgram& lp,
                                             const StdModel& sm,
                                             const std::vector<Q>& y) {
  FarkasCertificate cert;
  cert.row_mult.assign(lp.rows.size(), Q(0));
  for (int i = 0; i < sm.m; ++i) {
    int orig = sm.row_orig[static_cast<std::size_t>(i)];
    if (orig < 0) continue;  // cap rows are absorbed by the box check
    cert.row_mult[static_cast<std::size_t>(orig)] =
        y[static_cast<std::size_t>(i)] * sm.row_sigma[static_cast<std::size_t>(i)];
  }
  return cert;
}

inline LPSolution solve_exact(const LinearProgram& lp, const StdModel& sm) {
  Simplex<Q> sx;
  sx.m = sm.m;
  sx.n = sm.n;
  sx.cols = sm.cols;
  sx.rhs = sm.rhs;
  sx.cost = sm.cost;
  sx.max_pivots = 2'000'000ull;
  sx.bland = true;  // anti-cycling by construction; coupling LPs are degenerate
  sx.init();
  sx.seed_basis(sm.seed);

  int ub_col = -1;
  auto out = sx.run(true, ub_col);
  if (out != Simplex<Q>::Outcome::optimal)
    throw Error(Errc::internal, "phase one did not terminate");

  LPSolution sol;
  if (sx.phase1_value() != 0) {
    std::vector<Q> y = sx.duals(true);
    sol.status = LPStatus::infeasible;
    sol.certificate = extract_certificate(lp, sm, y);
    sol.pivots = sx.pivots;
    if (!verify_farkas(lp, *sol.certificate))
      throw Error(Errc::internal, "infeasibility certificate failed verification");
    return sol;
  }

  sx.purge_artificials();
  bool pure_feasibility = lp.objective.empty();
  if (!pure_feasibility) {
    out = sx.run(false, ub_col);
    if (out == Simplex<Q>::Outcome::iteration_cap)
      throw Error(Errc::internal, "phase two did not terminate");
    if (out == Simplex<Q>::Outcome::unbounded) {
      std::vector<Q> w = sx.ftran(ub_col);
      std::vector<Q> dz(static_cast<std::size_t>(sm.n), Q(0));
      dz[static_cast<std::size_t>(ub_col)] = 1;
      for (int i = 0; i < sm.m; ++i)
        if (sx.basis[static_cast<std::size_t>(i)] < sm.n)
          dz[static_cast<std::size_t>(sx.basis[static_cast<std::size_t>(i)])] =
              -w[static_cast<std::size_t>(i)];
      sol.status = LPStatus::unbounded;
      sol.point = sm.to_point(sx.solution());
      sol.ray = sm.to_direction(dz);
      sol.pivots = sx.pivots;
      if (!verify_ray(lp, sol.point, *sol.ray))
        throw Error(Errc::internal, "unbounded ray failed verification");
      return sol;
    }
  }
  sol.status = pure_feasibility ? LPStatus::feasible : LPStatus::optimal;
  sol.point = sm.to_point(sx.solution());
  sol.objective_value = objective_at(lp, sol.point);
  sol.pivots = sx.pivots;
  return sol;
}

/// Float run first, then exact refactorization of the final basis and
/// exact verification of whatever the float run claims. Returns nullopt
/// when anything fails to verify; the caller falls back to exact.
inline std::optional<LPSolution> solve_fast(const LinearProgram& lp,
                                            const StdModel& sm) {
  Simplex<double> sx;
  sx.m = sm.m;
  sx.n = sm.n;
  sx.cols.resize(sm.cols.size());
  for (std::size_t j = 0; j < sm.cols.size(); ++j)
    for (const auto& [r, v] : sm.cols[j])
      sx.cols[j].emplace_back(r, to_double(v));
  sx.rhs.reserve(sm.rhs.size());
  for (const Q& v : sm.rhs) sx.rhs.push_back(to_double(v));
  sx.cost.reserve(sm.cost.size());
  for (const Q& v : sm.cost) sx.cost.push_back(to_double(v));
  sx.eps_zero = 1e-12;
  sx.eps_cost = 1e-9;
  sx.eps_pivot = 1e-9;
  sx.max_pivots = 20'000ull + 50ull * static_cast<std::uint64_t>(sm.m + sm.n);
  sx.init();
  sx.seed_basis(sm.seed);

  int ub_col = -1;
  if (sx.run(true, ub_col) != Simplex<double>::Outcome::optimal) return std::nullopt;

  double scale = 1.0;
  for (double b : sx.rhs) scale += b > 0 ? b : -b;

  auto exact_basis_state = [&](const std::vector<int>& basis)
      -> std::optional<std::pair<std::vector<std::vector<Q>>, std::vector<Q>>> {
    auto inv = invert(basis_matrix(sm, basis));
    if (!inv) return std::nullopt;
    std::vector<Q> xb(static_cast<std::size_t>(sm.m), Q(0));
    for (int i = 0; i < sm.m; ++i) {
      Q acc(0);
      for (int k = 0; k < sm.m; ++k) {
        const Q& v = (*inv)[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        if (v != 0 && sm.rhs[static_cast<std::size_t>(k)] != 0)
          acc += v * sm.rhs[static_cast<std::size_t>(k)];
      }
      xb[static_cast<std::size_t>(i)] = std::move(acc);
    }
    return std::make_pair(std::move(*inv), std::move(xb));
  };

  auto exact_duals = [&](const std::vector<std::vector<Q>>& binv,
                         const std::vector<int>& basis, bool phase1) {
    std::vector<Q> y(static_cast<std::size_t>(sm.m), Q(0));
    for (int i = 0; i < sm.m; ++i) {
      int b = basis[static_cast<std::size_t>(i)];
      Q cb = b >= sm.n ? (phase1 ? Q(1) : Q(0))
                       : (phase1 ? Q(0) : sm.cost[static_cast<std::size_t>(b)]);
      if (cb == 0) continue;
      for (int k = 0; k < sm.m; ++k) {
        const Q& v = binv[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
        if (v != 0) y[static_cast<std::size_t>(k)] += cb * v;
      }
    }
    return y;
  };

  if (sx.phase1_value() > 1e-7 * scale) {
    // Claimed infeasible: rebuild the phase-1 duals exactly and verify.
    auto st = exact_basis_state(sx.basis);
    if (!st) return std::nullopt;
    std::vector<Q> y = exact_duals(st->first, sx.basis, true);
    LPSolution sol;
    sol.status = LPStatus::infeasible;
    sol.certificate = extract_certificate(lp, sm, y);
    sol.pivots = sx.pivots;
    if (!verify_farkas(lp, *sol.certificate)) return std::nullopt;
    return sol;
  }

  sx.purge_artificials();
  bool pure_feasibility = lp.objective.empty();
  bool unbounded = false;
  if (!pure_feasibility) {
    auto out = sx.run(false, ub_col);
    if (out == Simplex<double>::Outcome::iteration_cap) return std::nullopt;
    unbounded = out == Simplex<double>::Outcome::unbounded;
  }

  auto st = exact_basis_state(sx.basis);
  if (!st) return std::nullopt;
  const auto& binv = st->first;
  const auto& xb = st->second;
  for (const Q& v : xb)
    if (v < 0) return std::nullopt;  // float basis not feasible in exact terms

  auto z_from_basis = [&]() {
    std::vector<Q> z(static_cast<std::size_t>(sm.n), Q(0));
    for (int i = 0; i < sm.m; ++i)
      if (sx.basis[static_cast<std::size_t>(i)] < sm.n)
        z[static_cast<std::size_t>(sx.basis[static_cast<std::size_t>(i)])] =
            xb[static_cast<std::size_t>(i)];
    return z;
  };

  LPSolution sol;
  sol.pivots = sx.pivots;
  if (unbounded) {
    std::vector<Q> w(static_cast<std::size_t>(sm.m), Q(0));
    for (const auto& [r, v] : sm.cols[static_cast<std::size_t>(ub_col)])
      for (int i = 0; i < sm.m; ++i) {
        const Q& b = binv[static_cast<std::size_t>(i)][static_cast<std::size_t>(r)];
        if (b != 0) w[static_cast<std::size_t>(i)] += b * v;
      }
    std::vector<Q> dz(static_cast<std::size_t>(sm.n), Q(0));
    dz[static_cast<std::size_t>(ub_col)] = 1;
    for (int i = 0; i < sm.m; ++i)
      if (sx.basis[static_cast<std::size_t>(i)] < sm.n)
        dz[static_cast<std::size_t>(sx.basis[static_cast<std::size_t>(i)])] =
            -w[static_cast<std::size_t>(i)];
    sol.status = LPStatus::unbounded;
    sol.point = sm.to_point(z_from_basis());
    sol.ray = sm.to_direction(dz);
    if (!verify_ray(lp, sol.point, *sol.ray)) return std::nullopt;
    return sol;
  }

  sol.point = sm.to_point(z_from_basis());
  if (!satisfies(lp, sol.point)) return std::nullopt;
  if (pure_feasibility) {
    sol.status = LPStatus::feasible;
    return sol;
  }
  // Optimality: exact reduced costs must be nonnegative everywhere.
  std::vector<Q> y = exact_duals(binv, sx.basis, false);
  for (int j = 0; j < sm.n; ++j) {
    Q d = sm.cost[static_cast<std::size_t>(j)];
    for (const auto& [r, v] : sm.cols[static_cast<std::size_t>(j)])
      d -= y[static_cast<std::size_t>(r)] * v;
    if (d < 0) return std::nullopt;
  }
  sol.status = LPStatus::optimal;
  sol.objective_value = objective_at(lp, sol.point);
  return sol;
}

}  // namespace detail

/// Solves a rational LP. Exact mode runs pure rational simplex; fast mode
/// runs a double-precision simplex and verifies the final basis exactly,
/// falling back to the exact path (flagged) when verification fails.
inline LPSolution solve(const LinearProgram& lp, SolveMode mode = SolveMode::exact) {
  detail::StdModel sm = detail::standardize(lp);
  if (mode == SolveMode::fast) {
    if (auto sol = detail::solve_fast(lp, sm)) return *sol;
    LPSolution sol = detail::solve_exact(lp, sm);
    sol.numeric_fallback = true;
    return sol;
  }
  return detail::solve_exact(lp, sm);
}

/// Minimizes sum(|x_j|) over the signed variables subject to lp's rows.
/// Signed variables must be free (no bounds); each becomes u - w with
/// u, w >= 0 and cost u + w. Other variables keep their bounds and cost
/// nothing. The returned point is in the original variables, and the
/// objective equals the L1 mass of the signed part exactly.
inline LPSolution minimize_l1(const LinearProgram& lp,
                              const std::vector<int>& signed_vars,
                              SolveMode mode = SolveMode::exact) {
  if (!lp.objective.empty())
    throw Error(Errc::dimension_mismatch, "minimize_l1 needs an empty objective");
  std::vector<char> is_signed(static_cast<std::size_t>(lp.num_vars), 0);
  for (int j : signed_vars) {
    if (j < 0 || j >= lp.num_vars)
      throw Error(Errc::dimension_mismatch, "signed variable out of range");
    const VarBounds& b = lp.bounds[static_cast<std::size_t>(j)];
    if (b.lo || b.hi)
      throw Error(Errc::dimension_mismatch, "signed variables must be free");
    is_signed[static_cast<std::size_t>(j)] = 1;
  }

  // Split columns: signed j -> (pos[j], pos[j]+1); others map one to one.
  LinearProgram split;
  std::vector<int> pos(static_cast<std::size_t>(lp.num_vars), -1);
  for (int j = 0; j < lp.num_vars; ++j) {
    if (is_signed[static_cast<std::size_t>(j)]) {
      pos[static_cast<std::size_t>(j)] = split.add_var(VarBounds{Q(0), std::nullopt});
      split.add_var(VarBounds{Q(0), std::nullopt});
      split.objective.push_back(LinTerm{pos[static_cast<std::size_t>(j)], Q(1)});
      split.objective.push_back(LinTerm{pos[static_cast<std::size_t>(j)] + 1, Q(1)});
    } else {
      pos[static_cast<std::size_t>(j)] = split.add_var(lp.bounds[static_cast<std::size_t>(j)]);
    }
  }
  for (const LPRow& r : lp.rows) {
    LPRow rr;
    rr.rel = r.rel;
    rr.rhs = r.rhs;
    rr.name = r.name;
    for (const LinTerm& t : r.terms) {
      int p = pos[static_cast<std::size_t>(t.var)];
      rr.terms.push_back(LinTerm{p, t.coef});
      if (is_signed[static_cast<std::size_t>(t.var)])
        rr.terms.push_back(LinTerm{p + 1, Q(-t.coef)});
    }
    split.add_row(std::move(rr));
  }

  LPSolution inner = solve(split, mode);
  LPSolution sol;
  sol.status = inner.status;
  sol.numeric_fallback = inner.numeric_fallback;
  sol.pivots = inner.pivots;
  if (inner.status == LPStatus::infeasible) {
    sol.certificate = std::move(inner.certificate);  // rows align one to one
    return sol;
  }
  if (inner.status != LPStatus::optimal)
    throw Error(Errc::internal, "L1 objective is bounded below by zero");
  sol.point.resize(static_cast<std::size_t>(lp.num_vars));
  Q total(0);
  for (int j = 0; j < lp.num_vars; ++j) {
    int p = pos[static_cast<std::size_t>(j)];
    if (is_signed[static_cast<std::size_t>(j)]) {
      sol.point[static_cast<std::size_t>(j)] =
          inner.point[static_cast<std::size_t>(p)] -
          inner.point[static_cast<std::size_t>(p + 1)];
      total += q_abs(sol.point[static_cast<std::size_t>(j)]);
    } else {
      sol.point[static_cast<std::size_t>(j)] = inner.point[static_cast<std::size_t>(p)];
    }
  }
  if (total != inner.objective_value)
    throw Error(Errc::internal, "L1 optimum is not tight at a vertex");
  sol.objective_value = std::move(total);
  return sol;
}

/// Convenience form: every variable is signed.
inline LPSolution minimize_l1(const LinearProgram& lp,
                              SolveMode mode = SolveMode::exact) {
  std::vector<int> all(static_cast<std::size_t>(lp.num_vars));
  for (int j = 0; j < lp.num_vars; ++j) all[static_cast<std::size_t>(j)] = j;
  return minimize_l1(lp, all, mode);
}

/// Human-readable dump of an LP in its exact rational form.
inline std::string lp_dump(const LinearProgram& lp) {
  auto var = [&](int j) {
    if (j < static_cast<int>(lp.var_names.size()) &&
        !lp.var_names[static_cast<std::size_t>(j)].empty())
      return lp.var_names[static_cast<std::size_t>(j)];
    return "x" + std::to_string(j);
  };
  auto terms = [&](const std::vector<LinTerm>& ts) {
    std::ostringstream os;
    bool first = true;
    for (const LinTerm& t : ts) {
      if (t.coef == 0) continue;
      Q a = t.coef;
      if (first) {
        if (a < 0) { os << "- "; a = -a; }
      } else {
        os << (a < 0 ? " - " : " + ");
        if (a < 0) a = -a;
      }
      if (a != 1) os << rational_str(a) << " ";
      os << var(t.var);
      first = false;
    }
    if (first) os << "0";
    return os.str();
  };

  std::ostringstream os;
  os << (lp.objective.empty() ? "feasibility" : "minimize: " + terms(lp.objective)) << "\n";
  os << "subject to:\n";
  for (std::size_t r = 0; r < lp.rows.size(); ++r) {
    const LPRow& row = lp.rows[r];
    os << "  " << (row.name.empty() ? "r" + std::to_string(r) : row.name) << ": "
       << terms(row.terms) << " " << rel_str(row.rel) << " " << rational_str(row.rhs)
       << "\n";
  }
  os << "bounds:\n";
  for (int j = 0; j < lp.num_vars; ++j) {
    const VarBounds& b = lp.bounds[static_cast<std::size_t>(j)];
    os << "  " << var(j) << " in "
       << (b.lo ? "[" + rational_str(*b.lo) : "(-inf") << ", "
       << (b.hi ? rational_str(*b.hi) + "]" : "+inf)") << "\n";
  }
  return os.str();
}

}  // namespace cbd

#endif  // CBD_LP_HPP
