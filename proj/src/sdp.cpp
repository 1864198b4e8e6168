#include "delayiqc/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "delayiqc/error.hpp"
#include "delayiqc/kernels.hpp"

namespace delayiqc::sdp {

LinExpr& LinExpr::operator+=(const LinExpr& o) {
  constant += o.constant;
  terms.insert(terms.end(), o.terms.begin(), o.terms.end());
  return *this;
}

LinExpr& LinExpr::operator-=(const LinExpr& o) {
  constant -= o.constant;
  for (const auto& [v, c] : o.terms) terms.emplace_back(v, -c);
  return *this;
}

LinExpr& LinExpr::operator*=(double k) {
  constant *= k;
  for (auto& t : terms) t.second *= k;
  return *this;
}

void LinExpr::compress() {
  std::sort(terms.begin(), terms.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::vector<std::pair<Var, double>> out;
  for (const auto& t : terms) {
    if (!out.empty() && out.back().first == t.first) {
      out.back().second += t.second;
    } else {
      out.push_back(t);
    }
  }
  std::erase_if(out, [](const auto& t) { return t.second == 0.0; });
  terms = std::move(out);
}

LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
LinExpr operator*(double k, LinExpr a) { return a *= k; }

std::size_t SymExpr::index(int r, int c) const {
  if (r > c) std::swap(r, c);
  if (r < 0 || c >= n_) throw Error(ErrorCode::kDimensionMismatch, "SymExpr index out of range");
  return static_cast<std::size_t>(c) * (c + 1) / 2 + r;
}

LinExpr& SymExpr::at(int r, int c) { return upper_[index(r, c)]; }
const LinExpr& SymExpr::at(int r, int c) const { return upper_[index(r, c)]; }

void SymExpr::add_constant(const Matrix& m, int r0, double k) {
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r <= c; ++r) {
      if (m(r, c) != 0.0) at(r0 + r, r0 + c).constant += k * m(r, c);
    }
  }
}

Var Problem::add_free() { return Var{VarKind::kFree, free_count_++, 0, 0}; }
Var Problem::add_lp() { return Var{VarKind::kLp, lp_count_++, 0, 0}; }

int Problem::add_psd(int n) {
  if (n < 1) throw Error(ErrorCode::kInvalidArgument, "PSD block must be nonempty");
  psd_sizes_.push_back(n);
  return static_cast<int>(psd_sizes_.size()) - 1;
}

Var Problem::psd(int block, int r, int c) {
  if (r > c) std::swap(r, c);
  return Var{VarKind::kPsd, block, r, c};
}

void Problem::add_equality(LinExpr expr) {
  expr.compress();
  if (expr.terms.empty()) {
    if (std::abs(expr.constant) > 1e-12) {
      throw Error(ErrorCode::kInfeasible, "constant equality constraint cannot hold");
    }
    return;
  }
  equalities_.push_back(std::move(expr));
}

void Problem::add_nonnegative(LinExpr expr) {
  expr.compress();
  if (expr.terms.empty()) {
    if (expr.constant < -1e-12) throw Error(ErrorCode::kInfeasible, "constant inequality cannot hold");
    return;
  }
  inequalities_.push_back(std::move(expr));
}

int Problem::add_lmi(const SymExpr& f) {
  if (f.size() < 1) throw Error(ErrorCode::kInvalidArgument, "LMI must be nonempty");
  SymExpr g = f;
  for (int c = 0; c < g.size(); ++c) {
    for (int r = 0; r <= c; ++r) g.at(r, c).compress();
  }
  lmis_.push_back(std::move(g));
  return static_cast<int>(lmis_.size()) - 1;
}

void Problem::minimize(LinExpr objective) {
  objective.compress();
  objective_ = std::move(objective);
}

std::string to_string(Status s) {
  switch (s) {
    case Status::kOptimal: return "optimal";
    case Status::kNearOptimal: return "near-optimal";
    case Status::kFailed: return "failed";
  }
  return "failed";
}

double Solution::value(const Var& v) const {
  switch (v.kind) {
    case VarKind::kFree: return free(v.index);
    case VarKind::kLp: return lp(v.index);
    case VarKind::kPsd: return psd[v.index](v.row, v.col);
  }
  return 0.0;
}

double Solution::value(const LinExpr& e) const {
  double s = e.constant;
  for (const auto& [v, c] : e.terms) s += c * value(v);
  return s;
}

Matrix Solution::value(const SymExpr& e) const {
  Matrix m(e.size(), e.size());
  for (int c = 0; c < e.size(); ++c) {
    for (int r = 0; r <= c; ++r) m(r, c) = m(c, r) = value(e.at(r, c));
  }
  return m;
}

namespace {

struct Triplet {
  int r;
  int s;
  double a;
};

struct BlockRow {
  int constraint;
  std::vector<Triplet> entries;  // full symmetric expansion
};

struct Compiled {
  int m = 0;
  int nf = 0;
  int nl = 0;
  std::vector<int> sizes;
  Matrix af;
  Matrix al;
  Vector b;
  Vector cf;
  Vector cl;
  std::vector<Matrix> c;
  std::vector<std::vector<BlockRow>> rows;  // per block
  Vector row_scale;                          // equality i was divided by row_scale(i)
  bool embedded = false;                     // decision variables live in y
  std::vector<int> kept_eq;                  // embedded: statement equality of each free column
  int total_eq = 0;
};

void drop_dependent_equalities(Compiled& d);

void scale_rows(Compiled& d);

// Index of each decision variable in the dual vector y.
struct VarIndex {
  int nf = 0;
  int nl = 0;
  std::vector<int> offset;
  int m = 0;

  explicit VarIndex(const Problem& p) : nf(p.free_count()), nl(p.lp_count()) {
    m = nf + nl;
    for (int n : p.psd_sizes()) {
      offset.push_back(m);
      m += n * (n + 1) / 2;
    }
  }
  int operator()(const Var& v) const {
    switch (v.kind) {
      case VarKind::kFree: return v.index;
      case VarKind::kLp: return nf + v.index;
      case VarKind::kPsd: return offset[v.index] + v.col * (v.col + 1) / 2 + v.row;
    }
    return 0;
  }
};

// The stated problem (variables, equalities, inequalities, LMIs) is the
// dual of a standard-form primal: every decision variable is one entry of y,
// every cone of the statement becomes a primal block with Z = C - A^T y.
Compiled compile(const Problem& p, const VarIndex& idx) {
  Compiled d;
  d.m = idx.m;
  const auto& eqs = p.equalities();
  const auto& ineqs = p.inequalities();
  d.nf = static_cast<int>(eqs.size());
  d.nl = p.lp_count() + static_cast<int>(ineqs.size());
  d.sizes = p.psd_sizes();
  for (const SymExpr& f : p.lmis()) d.sizes.push_back(f.size());
  const std::size_t nb = d.sizes.size();
  d.af = Matrix::Zero(d.m, d.nf);
  d.al = Matrix::Zero(d.m, d.nl);
  d.b = Vector::Zero(d.m);
  d.cf = Vector::Zero(d.nf);
  d.cl = Vector::Zero(d.nl);
  for (int n : d.sizes) d.c.push_back(Matrix::Zero(n, n));
  std::vector<std::map<int, std::vector<Triplet>>> rows(nb);

  auto push = [](std::vector<Triplet>& out, int r, int c, double v) {
    out.push_back({r, c, v});
    if (r != c) out.push_back({c, r, v});
  };
  // Variable blocks: Y >= 0 with Y = sum y_i E_i.
  for (std::size_t b = 0; b < p.psd_sizes().size(); ++b) {
    const int n = p.psd_sizes()[b];
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r <= c; ++r) push(rows[b][idx(Problem::psd(static_cast<int>(b), r, c))], r, c, -1.0);
    }
  }
  for (std::size_t k = 0; k < p.lmis().size(); ++k) {
    const SymExpr& f = p.lmis()[k];
    const std::size_t b = p.psd_sizes().size() + k;
    for (int c = 0; c < f.size(); ++c) {
      for (int r = 0; r <= c; ++r) {
        const LinExpr& e = f.at(r, c);
        d.c[b](r, c) = d.c[b](c, r) = e.constant;
        for (const auto& [v, coef] : e.terms) push(rows[b][idx(v)], r, c, -coef);
      }
    }
  }
  d.rows.resize(nb);
  for (std::size_t b = 0; b < nb; ++b) {
    for (auto& [i, entries] : rows[b]) d.rows[b].push_back({i, std::move(entries)});
  }
  for (int j = 0; j < p.lp_count(); ++j) d.al(idx(Var{VarKind::kLp, j, 0, 0}), j) = -1.0;
  for (std::size_t k = 0; k < ineqs.size(); ++k) {
    const int col = p.lp_count() + static_cast<int>(k);
    d.cl(col) = ineqs[k].constant;
    for (const auto& [v, coef] : ineqs[k].terms) d.al(idx(v), col) -= coef;
  }
  for (std::size_t k = 0; k < eqs.size(); ++k) {
    d.cf(static_cast<int>(k)) = eqs[k].constant;
    for (const auto& [v, coef] : eqs[k].terms) d.af(idx(v), static_cast<int>(k)) -= coef;
  }
  for (const auto& [v, coef] : p.objective().terms) d.b(idx(v)) -= coef;

  d.embedded = true;
  scale_rows(d);
  drop_dependent_equalities(d);
  return d;
}

// Standard form taken literally: the variables of the statement are the
// primal cones and every equality is one row. Used when there are no LMIs.
Compiled compile_direct(const Problem& p) {
  Compiled d;
  const auto& eqs = p.equalities();
  const auto& ineqs = p.inequalities();
  d.m = static_cast<int>(eqs.size() + ineqs.size());
  d.nf = p.free_count();
  d.nl = p.lp_count() + static_cast<int>(ineqs.size());
  d.sizes = p.psd_sizes();
  d.af = Matrix::Zero(d.m, d.nf);
  d.al = Matrix::Zero(d.m, d.nl);
  d.b = Vector::Zero(d.m);
  d.cf = Vector::Zero(d.nf);
  d.cl = Vector::Zero(d.nl);
  d.rows.resize(d.sizes.size());
  for (int n : d.sizes) d.c.push_back(Matrix::Zero(n, n));
  auto add_row = [&](int i, const LinExpr& e) {
    d.b(i) = -e.constant;
    std::vector<std::vector<Triplet>> per_block(d.sizes.size());
    for (const auto& [v, coef] : e.terms) {
      switch (v.kind) {
        case VarKind::kFree: d.af(i, v.index) += coef; break;
        case VarKind::kLp: d.al(i, v.index) += coef; break;
        case VarKind::kPsd:
          if (v.row == v.col) {
            per_block[v.index].push_back({v.row, v.row, coef});
          } else {
            per_block[v.index].push_back({v.row, v.col, 0.5 * coef});
            per_block[v.index].push_back({v.col, v.row, 0.5 * coef});
          }
          break;
      }
    }
    for (std::size_t j = 0; j < per_block.size(); ++j) {
      if (!per_block[j].empty()) d.rows[j].push_back({i, std::move(per_block[j])});
    }
  };
  for (std::size_t i = 0; i < eqs.size(); ++i) add_row(static_cast<int>(i), eqs[i]);
  for (std::size_t k = 0; k < ineqs.size(); ++k) {
    const int i = static_cast<int>(eqs.size() + k);
    add_row(i, ineqs[k]);
    d.al(i, p.lp_count() + static_cast<int>(k)) = -1.0;  // expr - slack = 0
  }
  for (const auto& [v, coef] : p.objective().terms) {
    switch (v.kind) {
      case VarKind::kFree: d.cf(v.index) += coef; break;
      case VarKind::kLp: d.cl(v.index) += coef; break;
      case VarKind::kPsd:
        if (v.row == v.col) {
          d.c[v.index](v.row, v.row) += coef;
        } else {
          d.c[v.index](v.row, v.col) += 0.5 * coef;
          d.c[v.index](v.col, v.row) += 0.5 * coef;
        }
        break;
    }
  }
  scale_rows(d);
  return d;
}

void scale_rows(Compiled& d) {
  // Unit-norm rows.
  Vector s2 = d.af.rowwise().squaredNorm() + d.al.rowwise().squaredNorm();
  for (const auto& block : d.rows) {
    for (const BlockRow& r : block) {
      for (const Triplet& t : r.entries) s2(r.constraint) += t.a * t.a;
    }
  }
  d.row_scale = (s2.array() > 0.0).select(s2.cwiseSqrt(), 1.0);
  for (int i = 0; i < d.m; ++i) {
    d.af.row(i) /= d.row_scale(i);
    d.al.row(i) /= d.row_scale(i);
    d.b(i) /= d.row_scale(i);
  }
  for (auto& block : d.rows) {
    for (BlockRow& r : block) {
      for (Triplet& t : r.entries) t.a /= d.row_scale(r.constraint);
    }
  }
}

// Linearly dependent equalities leave the KKT system singular; keep a
// maximal independent subset. An inconsistent dependent equality shows up
// later as a residual in the recovered solution.
void drop_dependent_equalities(Compiled& d) {
  d.total_eq = d.nf;
  d.kept_eq.resize(d.nf);
  for (int k = 0; k < d.nf; ++k) d.kept_eq[k] = k;
  if (d.nf == 0) return;
  Eigen::ColPivHouseholderQR<Matrix> qr(d.af);
  qr.setThreshold(1e-10);
  const int rank = static_cast<int>(qr.rank());
  if (rank == d.nf) return;
  std::vector<int> cols;
  for (int k = 0; k < rank; ++k) cols.push_back(qr.colsPermutation().indices()(k));
  std::sort(cols.begin(), cols.end());
  Matrix af(d.m, rank);
  Vector cf(rank);
  for (int k = 0; k < rank; ++k) {
    af.col(k) = d.af.col(cols[k]);
    cf(k) = d.cf(cols[k]);
  }
  d.af = std::move(af);
  d.cf = std::move(cf);
  d.kept_eq = std::move(cols);
  d.nf = rank;
}

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

// out_i += <A_i, G> for one block.
void apply_a(const std::vector<BlockRow>& rows, const Matrix& g, Vector& out) {
  for (const BlockRow& row : rows) {
    double s = 0.0;
    for (const Triplet& t : row.entries) s += t.a * g(t.r, t.s);
    out(row.constraint) += s;
  }
}

// Σ y_i A_i for one block.
Matrix apply_at(const std::vector<BlockRow>& rows, const Vector& y, int n) {
  Matrix out = Matrix::Zero(n, n);
  for (const BlockRow& row : rows) {
    const double yi = y(row.constraint);
    if (yi == 0.0) continue;
    for (const Triplet& t : row.entries) out(t.r, t.s) += yi * t.a;
  }
  return out;
}

// Largest step α with X + α dX PSD (infinity when unbounded).
double max_step(const Matrix& x, const Matrix& dx) {
  Eigen::LLT<Matrix> llt(x);
  if (llt.info() != Eigen::Success) return 0.0;
  Matrix w = llt.matrixL().solve(dx);
  w = llt.matrixL().solve(w.transpose()).transpose();
  const double lmin = min_eigenvalue_sym(w);
  return lmin >= 0.0 ? std::numeric_limits<double>::infinity() : -1.0 / lmin;
}

double max_step_lp(const Vector& x, const Vector& dx) {
  double a = std::numeric_limits<double>::infinity();
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    if (dx(k) < 0.0) a = std::min(a, -x(k) / dx(k));
  }
  return a;
}

// Schur complement contribution of one PSD block: M_ij += tr(A_i X A_j Z^{-1}).
void add_schur_block(const std::vector<BlockRow>& rows, const Matrix& x, const Matrix& zinv,
                     Matrix& m) {
  const int n = static_cast<int>(x.rows());
  Matrix bj(n, n);
  for (const BlockRow& rj : rows) {
    bj.setZero();
    // B_j = X A_j Z^{-1}, accumulated column by column.
    for (const Triplet& t : rj.entries) {
      const double* xcol = x.col(t.r).data();
      for (int q = 0; q < n; ++q) {
        const double coef = t.a * zinv(t.s, q);
        if (coef == 0.0) continue;
        kernels::axpy(coef, {xcol, static_cast<std::size_t>(n)},
                      {bj.col(q).data(), static_cast<std::size_t>(n)});
      }
    }
    for (const BlockRow& ri : rows) {
      double s = 0.0;
      for (const Triplet& t : ri.entries) s += t.a * bj(t.s, t.r);
      m(ri.constraint, rj.constraint) += s;
    }
  }
}

void fill_solution(Solution& sol, const Problem& p, const VarIndex& idx, const Vector& vals) {
  sol.free = Vector::Zero(p.free_count());
  sol.lp = Vector::Zero(p.lp_count());
  sol.psd.clear();
  if (vals.size() == 0) {
    for (int n : p.psd_sizes()) sol.psd.push_back(Matrix::Zero(n, n));
    return;
  }
  sol.free = vals.head(idx.nf);
  sol.lp = vals.segment(idx.nf, idx.nl);
  for (std::size_t b = 0; b < p.psd_sizes().size(); ++b) {
    const int n = p.psd_sizes()[b];
    Matrix y(n, n);
    for (int c = 0; c < n; ++c) {
      for (int r = 0; r <= c; ++r) y(r, c) = y(c, r) = vals(idx(Problem::psd(static_cast<int>(b), r, c)));
    }
    sol.psd.push_back(y);
  }
}

}  // namespace

Solution InteriorPoint::solve(const Problem& problem, const Options& opt) const {
  const VarIndex idx(problem);
  const Compiled d = problem.lmis().empty() ? compile_direct(problem) : compile(problem, idx);
  const int m = d.m;
  const int nb = static_cast<int>(d.sizes.size());
  int cone_dim = d.nl;
  for (int n : d.sizes) cone_dim += n;

  Solution sol;
  if (m == 0) {
    sol.status = Status::kOptimal;
    fill_solution(sol, problem, idx, Vector());
    sol.primal_objective = sol.dual_objective = problem.objective().constant;
    return sol;
  }

  // Starting point scaled to the data.
  std::vector<Matrix> x(nb), z(nb);
  for (int j = 0; j < nb; ++j) {
    const int n = d.sizes[j];
    double ratio = 0.0, anorm = d.c[j].norm();
    std::vector<double> row_norm(m, 0.0);
    for (const BlockRow& r : d.rows[j]) {
      double s = 0.0;
      for (const Triplet& t : r.entries) s += t.a * t.a;
      row_norm[r.constraint] = std::sqrt(s);
      anorm = std::max(anorm, std::sqrt(s));
    }
    for (int i = 0; i < m; ++i) ratio = std::max(ratio, (1.0 + std::abs(d.b(i))) / (1.0 + row_norm[i]));
    const double xi_p = std::max({10.0, std::sqrt(n), n * ratio});
    const double xi_d = std::max({10.0, std::sqrt(n), anorm});
    x[j] = xi_p * Matrix::Identity(n, n);
    z[j] = xi_d * Matrix::Identity(n, n);
  }
  double lp_p = 10.0, lp_d = 10.0;
  for (int k = 0; k < d.nl; ++k) {
    const double col = d.al.col(k).norm();
    lp_d = std::max(lp_d, std::max(col, std::abs(d.cl(k))));
  }
  for (int i = 0; i < m; ++i) {
    lp_p = std::max(lp_p, (1.0 + std::abs(d.b(i))) / (1.0 + d.al.row(i).norm()));
  }
  Vector xl = Vector::Constant(d.nl, lp_p);
  Vector zl = Vector::Constant(d.nl, lp_d);
  Vector xf = Vector::Zero(d.nf);
  Vector y = Vector::Zero(m);

  const double bnorm = d.b.norm();
  double cnorm2 = d.cf.squaredNorm() + d.cl.squaredNorm();
  for (const Matrix& c : d.c) cnorm2 += c.squaredNorm();
  const double cnorm = std::sqrt(cnorm2);

  struct Snapshot {
    double merit = std::numeric_limits<double>::infinity();
    Vector xf, xl, y;
    std::vector<Matrix> x;
    double pobj = 0, dobj = 0, gap = 0, pinf = 0, dinf = 0;
    int iter = 0;
  } best;

  double step_prev = 0.0;
  Status status = Status::kFailed;
  int iter = 0;
  for (; iter <= opt.max_iterations; ++iter) {
    // Residuals.
    Vector ax = d.af * xf + d.al * xl;
    for (int j = 0; j < nb; ++j) apply_a(d.rows[j], x[j], ax);
    const Vector rp = d.b - ax;
    std::vector<Matrix> rd(nb);
    double dres2 = 0.0, xz = 0.0;
    double pobj = d.cf.dot(xf) + d.cl.dot(xl);
    for (int j = 0; j < nb; ++j) {
      rd[j] = d.c[j] - apply_at(d.rows[j], y, d.sizes[j]) - z[j];
      dres2 += rd[j].squaredNorm();
      xz += inner(x[j], z[j]);
      pobj += inner(d.c[j], x[j]);
    }
    const Vector rl = d.cl - d.al.transpose() * y - zl;
    const Vector rf = d.cf - d.af.transpose() * y;
    dres2 += rl.squaredNorm() + rf.squaredNorm();
    xz += xl.dot(zl);
    const double dobj = d.b.dot(y);
    const double mu = xz / std::max(1, cone_dim);
    const double pinf = rp.norm() / (1.0 + bnorm);
    const double dinf = std::sqrt(dres2) / (1.0 + cnorm);
    const double gap = std::max(xz, std::abs(pobj - dobj)) / (1.0 + std::abs(pobj) + std::abs(dobj));
    if (!std::isfinite(pobj) || !std::isfinite(dobj) || !std::isfinite(mu)) break;
    const double merit = std::max({gap / opt.gap_tol, pinf / opt.feas_tol, dinf / opt.feas_tol});
    if (merit < best.merit) {
      best = Snapshot{merit, xf, xl, y, x, pobj, dobj, gap, pinf, dinf, iter};
    }
    if (opt.verbose) {
      std::fprintf(stderr, "ipm %3d pobj %+.8e dobj %+.8e gap %.2e pinf %.2e dinf %.2e step %.3f\n",
                   iter, pobj, dobj, gap, pinf, dinf, step_prev);
    }
    if (gap < opt.gap_tol && pinf < opt.feas_tol && dinf < opt.feas_tol) {
      best = Snapshot{merit, xf, xl, y, x, pobj, dobj, gap, pinf, dinf, iter};
      status = Status::kOptimal;
      break;
    }
    if (iter == opt.max_iterations || iter - best.iter > 15) break;

    // Schur complement system.
    std::vector<Matrix> zinv(nb);
    bool chol_ok = true;
    for (int j = 0; j < nb; ++j) {
      Eigen::LLT<Matrix> llt(z[j]);
      if (llt.info() != Eigen::Success) {
        chol_ok = false;
        break;
      }
      zinv[j] = llt.solve(Matrix::Identity(d.sizes[j], d.sizes[j]));
      zinv[j] = symmetrize(zinv[j]);
    }
    if (!chol_ok) break;
    Matrix mschur = Matrix::Zero(m, m);
    for (int j = 0; j < nb; ++j) add_schur_block(d.rows[j], x[j], zinv[j], mschur);
    const Vector lp_ratio = xl.cwiseQuotient(zl);
    mschur += d.al * lp_ratio.asDiagonal() * d.al.transpose();
    mschur = symmetrize(mschur);
    Matrix kkt = Matrix::Zero(m + d.nf, m + d.nf);
    kkt.topLeftCorner(m, m) = mschur;
    kkt.topRightCorner(m, d.nf) = d.af;
    kkt.bottomLeftCorner(d.nf, m) = d.af.transpose();
    const double diag_scale = mschur.diagonal().cwiseAbs().maxCoeff();
    kkt.topLeftCorner(m, m).diagonal().array() += 1e-15 * std::max(1.0, diag_scale);
    const Eigen::PartialPivLU<Matrix> lu(kkt);

    struct Direction {
      Vector dxf, dxl, dy, dzl;
      std::vector<Matrix> dx, dz;
    };
    auto solve_direction = [&](double sigma_mu, const Direction* pred) {
      std::vector<Matrix> g(nb);
      Vector rhs = rp;
      for (int j = 0; j < nb; ++j) {
        g[j] = sigma_mu * zinv[j] - x[j] - x[j] * rd[j] * zinv[j];
        if (pred) g[j] -= pred->dx[j] * pred->dz[j] * zinv[j];
        Vector tmp = Vector::Zero(m);
        apply_a(d.rows[j], g[j], tmp);
        rhs -= tmp;
      }
      Vector gl = (sigma_mu - (xl.array() * zl.array())).matrix().cwiseQuotient(zl) -
                  xl.cwiseProduct(rl).cwiseQuotient(zl);
      if (pred) gl -= pred->dxl.cwiseProduct(pred->dzl).cwiseQuotient(zl);
      rhs -= d.al * gl;
      Vector full(m + d.nf);
      full << rhs, rf;
      Vector sol_vec = lu.solve(full);
      sol_vec += lu.solve(full - kkt * sol_vec);
      Direction dir;
      dir.dy = sol_vec.head(m);
      dir.dxf = sol_vec.tail(d.nf);
      dir.dzl = rl - d.al.transpose() * dir.dy;
      dir.dxl = gl + lp_ratio.cwiseProduct(d.al.transpose() * dir.dy);
      dir.dx.resize(nb);
      dir.dz.resize(nb);
      for (int j = 0; j < nb; ++j) {
        dir.dz[j] = rd[j] - apply_at(d.rows[j], dir.dy, d.sizes[j]);
        Matrix dxj = sigma_mu * zinv[j] - x[j] - x[j] * dir.dz[j] * zinv[j];
        if (pred) dxj -= pred->dx[j] * pred->dz[j] * zinv[j];
        dir.dx[j] = symmetrize(dxj);
      }
      return dir;
    };
    auto step_lengths = [&](const Direction& dir) {
      double ap = max_step_lp(xl, dir.dxl);
      double ad = max_step_lp(zl, dir.dzl);
      for (int j = 0; j < nb; ++j) {
        ap = std::min(ap, max_step(x[j], dir.dx[j]));
        ad = std::min(ad, max_step(z[j], dir.dz[j]));
      }
      return std::pair<double, double>{ap, ad};
    };

    const Direction pred = solve_direction(0.0, nullptr);
    if (!pred.dy.allFinite() || !pred.dxf.allFinite()) break;
    auto [ap_max, ad_max] = step_lengths(pred);
    const double ap = std::min(1.0, ap_max);
    const double ad = std::min(1.0, ad_max);
    double xz_aff = (xl + ap * pred.dxl).dot(zl + ad * pred.dzl);
    for (int j = 0; j < nb; ++j) xz_aff += inner(x[j] + ap * pred.dx[j], z[j] + ad * pred.dz[j]);
    const double mu_aff = xz_aff / std::max(1, cone_dim);
    double sigma = std::clamp(std::pow(std::max(0.0, mu_aff) / mu, 3.0), 0.0, 1.0);
    if (!std::isfinite(sigma)) sigma = 0.5;

    const Direction corr = solve_direction(sigma * mu, &pred);
    if (!corr.dy.allFinite() || !corr.dxf.allFinite()) break;
    auto [cp_max, cd_max] = step_lengths(corr);
    const double frac = 0.9 + 0.09 * step_prev;
    const double alpha_p = std::min(1.0, frac * cp_max);
    const double alpha_d = std::min(1.0, frac * cd_max);
    step_prev = std::min(alpha_p, alpha_d);
    if (step_prev < 1e-10) break;

    xf += alpha_p * corr.dxf;
    xl += alpha_p * corr.dxl;
    y += alpha_d * corr.dy;
    zl += alpha_d * corr.dzl;
    for (int j = 0; j < nb; ++j) {
      x[j] = symmetrize(x[j] + alpha_p * corr.dx[j]);
      z[j] = symmetrize(z[j] + alpha_d * corr.dz[j]);
    }
  }

  if (status != Status::kOptimal) {
    const bool near = best.gap < 1e3 * opt.gap_tol && best.pinf < 1e3 * opt.feas_tol &&
                      best.dinf < 1e3 * opt.feas_tol;
    status = near ? Status::kNearOptimal : Status::kFailed;
    xf = best.xf;
    xl = best.xl;
    y = best.y;
    x = best.x;
  }
  sol.status = status;
  sol.iterations = std::min(iter, opt.max_iterations);
  sol.relative_gap = best.gap;
  if (d.embedded) {
    fill_solution(sol, problem, idx, y.cwiseQuotient(d.row_scale));
    sol.y = Vector::Zero(d.total_eq);
    for (int k = 0; k < d.nf; ++k) sol.y(d.kept_eq[k]) = xf(k);
    sol.primal_objective = -best.dobj + problem.objective().constant;
    sol.dual_objective = -best.pobj + problem.objective().constant;
    sol.primal_infeasibility = best.dinf;
    sol.dual_infeasibility = best.pinf;
  } else {
    sol.free = xf;
    sol.lp = xl.head(problem.lp_count());
    sol.psd = x;
    sol.y = y.cwiseQuotient(d.row_scale).head(static_cast<Eigen::Index>(problem.equalities().size()));
    sol.primal_objective = best.pobj + problem.objective().constant;
    sol.dual_objective = best.dobj + problem.objective().constant;
    sol.primal_infeasibility = best.pinf;
    sol.dual_infeasibility = best.dinf;
  }
  return sol;
}

const Backend& default_backend() {
  static const InteriorPoint backend;
  return backend;
}

}  // namespace delayiqc::sdp
