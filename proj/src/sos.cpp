#include "delayiqc/sos.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <set>

#include "delayiqc/error.hpp"

namespace delayiqc {

using sdp::LinExpr;
using sdp::Problem;
using sdp::Var;

namespace {

using PolyExpr = std::map<Monomial, LinExpr>;

void add_poly(PolyExpr& e, const Polynomial& p, const Var& v, double k = 1.0) {
  for (const auto& [m, c] : p.terms()) e[m].add(v, k * c);
}

void add_const(PolyExpr& e, const Polynomial& p, double k = 1.0) {
  for (const auto& [m, c] : p.terms()) e[m].constant += k * c;
}

double coef_norm(const std::vector<Polynomial>& ps) {
  double s = 0.0;
  for (const Polynomial& p : ps) {
    for (const auto& [m, c] : p.terms()) s += c * c;
  }
  return std::sqrt(s);
}

// Quadratic form z^T M z of polynomial vectors.
Polynomial quad(const std::vector<Polynomial>& z, const Matrix& m, int nvars) {
  Polynomial out(nvars);
  for (int i = 0; i < m.rows(); ++i) {
    for (int j = 0; j < m.cols(); ++j) {
      if (m(i, j) != 0.0) out += m(i, j) * (z[i] * z[j]);
    }
  }
  return out;
}

Polynomial drop_inputs(const Polynomial& p, int first, int count) {
  Polynomial out(p.nvars());
  for (const auto& [m, c] : p.terms()) {
    bool keep = true;
    for (int i = first; i < first + count; ++i) keep = keep && m[i] == 0;
    if (keep) out.add_term(m, c);
  }
  return out;
}

Polynomial sum_of_squares(int nvars, int first, int count) {
  Polynomial out(nvars);
  for (int i = first; i < first + count; ++i) {
    Monomial m(nvars, 0);
    m[i] = 2;
    out.add_term(m, 1.0);
  }
  return out;
}

// Half-degree basis from the structural support, then repeated removal of
// monomials whose square cannot appear (diagonal Gram entry forced to zero).
std::vector<Monomial> gram_basis(const std::set<Monomial>& support, int nvars, bool prune,
                                 const std::set<Monomial>& drop) {
  if (support.empty()) return {};
  int lo = 1 << 20, hi = 0;
  std::vector<int> max_exp(nvars, 0), min_exp(nvars, 1 << 20);
  for (const Monomial& m : support) {
    lo = std::min(lo, degree(m));
    hi = std::max(hi, degree(m));
    for (int i = 0; i < nvars; ++i) {
      max_exp[i] = std::max(max_exp[i], m[i]);
      min_exp[i] = std::min(min_exp[i], m[i]);
    }
  }
  std::vector<Monomial> basis;
  for (const Monomial& m : monomials_up_to(nvars, (lo + 1) / 2, hi / 2)) {
    bool ok = true;
    for (int i = 0; i < nvars && ok; ++i) ok = 2 * m[i] <= max_exp[i] && 2 * m[i] >= min_exp[i];
    if (ok && !drop.count(m)) basis.push_back(m);
  }
  if (!prune) return basis;
  // Newton polytope: 2b must not exceed the support along any of a fixed set
  // of directions.
  std::vector<std::vector<int>> dirs;
  for (int i = 0; i < nvars; ++i) {
    for (int k : {-1, 1}) {
      std::vector<int> c(nvars, 0);
      c[i] = k;
      dirs.push_back(c);
    }
    for (int k = -4; k <= 4; ++k) {
      if (k == 0) continue;
      std::vector<int> c(nvars, 1);
      c[i] += k;
      dirs.push_back(c);
    }
    for (int j = i + 1; j < nvars; ++j) {
      for (int k : {-1, 1}) {
        std::vector<int> c(nvars, 0);
        c[i] = 1;
        c[j] = k;
        dirs.push_back(c);
        std::vector<int> c1(nvars, 1);
        c1[i] += 2;
        c1[j] += 2 * k;
        dirs.push_back(c1);
      }
    }
  }
  for (const std::vector<int>& c : dirs) {
    long top = std::numeric_limits<long>::min();
    for (const Monomial& m : support) {
      long v = 0;
      for (int i = 0; i < nvars; ++i) v += static_cast<long>(c[i]) * m[i];
      top = std::max(top, v);
    }
    std::erase_if(basis, [&](const Monomial& b) {
      long v = 0;
      for (int i = 0; i < nvars; ++i) v += 2L * c[i] * b[i];
      return v > top;
    });
  }
  for (bool changed = true; changed;) {
    changed = false;
    std::set<Monomial> cross;
    for (std::size_t i = 0; i < basis.size(); ++i) {
      for (std::size_t j = i + 1; j < basis.size(); ++j) cross.insert(basis[i] + basis[j]);
    }
    std::vector<Monomial> kept;
    for (const Monomial& b : basis) {
      const Monomial sq = b + b;
      if (support.count(sq) || cross.count(sq)) {
        kept.push_back(b);
      } else {
        changed = true;
      }
    }
    basis = std::move(kept);
  }
  return basis;
}

struct GramBlock {
  std::vector<Monomial> basis;
  sdp::SymExpr q;
};

// Adds g == basis^T Q basis with Q >= 0 in image form: each coefficient fixes
// one representative entry of Q and the remaining entries of its class are
// free, so the match is exact for any decision values.
GramBlock add_sos_constraint(Problem& prob, const PolyExpr& g, int nvars, bool prune,
                             const std::set<Monomial>& drop = {}, const Var* margin = nullptr) {
  std::set<Monomial> support;
  for (const auto& [m, e] : g) {
    if (!e.terms.empty() || e.constant != 0.0) support.insert(m);
  }
  GramBlock gb;
  gb.basis = gram_basis(support, nvars, prune, drop);
  const int nb = static_cast<int>(gb.basis.size());
  std::map<Monomial, std::vector<std::pair<int, int>>> products;
  for (int i = 0; i < nb; ++i) {
    for (int j = i; j < nb; ++j) products[gb.basis[i] + gb.basis[j]].emplace_back(i, j);
  }
  for (const Monomial& m : support) {
    if (!products.count(m)) prob.add_equality(g.at(m));
  }
  gb.q = sdp::SymExpr(nb);
  for (const auto& [m, pairs] : products) {
    auto it = g.find(m);
    LinExpr rep = it != g.end() ? it->second : LinExpr();
    std::size_t r0 = 0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (pairs[k].first == pairs[k].second) r0 = k;
    }
    const auto [i0, j0] = pairs[r0];
    const double c0 = i0 == j0 ? 1.0 : 2.0;
    for (std::size_t k = 0; k < pairs.size(); ++k) {
      if (k == r0) continue;
      const auto [i, j] = pairs[k];
      const Var theta = prob.add_free();
      gb.q.at(i, j).add(theta, 1.0);
      rep.add(theta, -(i == j ? 1.0 : 2.0));
    }
    gb.q.at(i0, j0) = (1.0 / c0) * rep;
  }
  if (nb > 0) {
    sdp::SymExpr f = gb.q;
    if (margin) {
      for (int i = 0; i < nb; ++i) f.at(i, i).add(*margin, -1.0);
    }
    prob.add_lmi(f);
  }
  return gb;
}

Polynomial value_of(const PolyExpr& g, const sdp::Solution& sol, int nvars) {
  Polynomial p(nvars);
  for (const auto& [m, e] : g) p.add_term(m, sol.value(e));
  return p;
}

struct Storage {
  std::vector<Monomial> basis;  // monomials in x, embedded in all variables
  int block = -1;
};

// V = b^T P b and the affine map P -> ∇V·F.
Storage add_storage(Problem& prob, PolyExpr& d, const ExtendedPoly& ext, const std::vector<Polynomial>& f,
                    int v_degree, const std::set<Monomial>& drop) {
  if (v_degree < 2 || v_degree % 2 != 0) {
    throw Error(ErrorCode::kDegreeTooLow, "storage degree must be even and at least 2");
  }
  const int n = ext.nvars();
  Storage s;
  for (const Monomial& mx : monomials_up_to(ext.nx, 1, v_degree / 2)) {
    Monomial m(n, 0);
    std::copy(mx.begin(), mx.end(), m.begin());
    if (!drop.count(m)) s.basis.push_back(m);
  }
  const int nb = static_cast<int>(s.basis.size());
  s.block = prob.add_psd(nb);
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i <= j; ++i) {
      const Polynomial bb = Polynomial::monomial(s.basis[i] + s.basis[j], i == j ? 1.0 : 2.0);
      Polynomial lie(n);
      for (int k = 0; k < ext.nx; ++k) {
        const Polynomial dk = bb.derivative(k);
        if (!dk.is_zero() && !f[k].is_zero()) lie += dk * f[k];
      }
      add_poly(d, lie, Problem::psd(s.block, i, j));
    }
  }
  return s;
}

struct Multipliers {
  std::vector<Var> lambda;
  std::vector<int> x_block;
};

Multipliers add_multipliers(Problem& prob, PolyExpr& d, const ExtendedPoly& ext,
                            const std::vector<IqcTerm>& terms, const std::vector<Polynomial>& z) {
  const int n = ext.nvars();
  Multipliers mu;
  int z0 = 0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const int nz = ext.z_sizes[k];
    const std::vector<Polynomial> zk(z.begin() + z0, z.begin() + z0 + nz);
    z0 += nz;
    if (terms[k].base) {
      const int nv = ext.nw;
      const int blk = prob.add_psd(nv);
      mu.lambda.push_back(Var{});
      mu.x_block.push_back(blk);
      for (int q = 0; q < nv; ++q) {
        for (int p = 0; p <= q; ++p) {
          Matrix e = Matrix::Zero(nv, nv);
          e(p, q) = e(q, p) = 1.0;
          add_poly(d, quad(zk, kron(*terms[k].base, e), n), Problem::psd(blk, p, q));
        }
      }
    } else {
      const Var l = prob.add_lp();
      mu.lambda.push_back(l);
      mu.x_block.push_back(-1);
      add_poly(d, quad(zk, terms[k].factor.m, n), l);
    }
  }
  return mu;
}

void fill_common(SosResult& r, const sdp::Solution& sol, const Storage& st, const Multipliers& mu,
                 const GramBlock& gb, const PolyExpr& g, int n) {
  r.v_gram.basis = st.basis;
  r.v_gram.q = sol.psd[st.block];
  r.v = gram_polynomial(r.v_gram, n);
  r.lambda.clear();
  r.scalings.clear();
  for (std::size_t k = 0; k < mu.lambda.size(); ++k) {
    if (mu.x_block[k] >= 0) {
      const Matrix x = sol.psd[mu.x_block[k]];
      r.scalings.push_back(x);
      r.lambda.push_back(x.trace() / x.rows());
    } else {
      const double l = sol.value(mu.lambda[k]);
      r.scalings.push_back(Matrix::Constant(1, 1, l));
      r.lambda.push_back(l);
    }
  }
  r.dissipation = value_of(g, sol, n);
  r.dissipation_gram.basis = gb.basis;
  r.dissipation_gram.q = gb.basis.empty() ? Matrix() : sol.value(gb.q);
  r.certificate_error = certificate_mismatch(r.dissipation, r.dissipation_gram, &r.min_gram_eig);
}

bool certificate_ok(const SosResult& r) {
  double scale = 1.0;
  for (const auto& [m, c] : r.dissipation.terms()) scale = std::max(scale, std::abs(c));
  return r.certificate_error <= 1e-8 * scale && r.min_gram_eig >= 0.0 &&
         min_eigenvalue_sym(r.v_gram.q) >= 0.0 && r.solver.primal_infeasibility <= 1e-6;
}

struct Reduction {
  std::set<Monomial> v, g;
};

// Optimizing phase, or centering phase: the bound is fixed and the smallest
// eigenvalue of both Gram matrices is pushed up to `margin_cap`.
struct Phase {
  bool center = false;
  double fixed = 0.0;
  double margin_cap = 0.0;
};

// Basis monomials whose diagonal Gram entry vanished relative to the block.
void collect_null(const GramCertificate& c, std::set<Monomial>& out) {
  if (c.q.size() == 0) return;
  const double top = c.q.diagonal().cwiseAbs().maxCoeff();
  for (int i = 0; i < c.q.rows(); ++i) {
    if (c.q(i, i) <= 1e-7 * top) out.insert(c.basis[i]);
  }
}

// Solves the optimizing phase and, while the solver stalls on a face of the
// cone, drops the Gram monomials that were forced to zero and solves again.
// The reduced program is a restriction, so any certificate it returns stands.
template <class Build>
std::pair<SosResult, Reduction> solve_reduced(const Build& build) {
  Reduction red;
  SosResult r = build(red, Phase{});
  for (int round = 0; round < 6 && !r.solver.ok(); ++round) {
    const std::size_t before = red.v.size() + red.g.size();
    collect_null(r.v_gram, red.v);
    collect_null(r.dissipation_gram, red.g);
    if (red.v.size() + red.g.size() == before) break;
    r = build(red, Phase{});
  }
  return {std::move(r), std::move(red)};
}

double cap_for(const SosResult& r) {
  double top = 1.0;
  if (r.dissipation_gram.q.size()) top = std::max(top, r.dissipation_gram.q.diagonal().maxCoeff());
  return 1e-6 * top;
}

// Adds P - r I >= 0 and Q - r I >= 0 through `margin` when centering.
Var add_margin(Problem& prob, const Phase& phase, const Storage& st, int nv_basis) {
  const Var r = prob.add_free();
  prob.add_nonnegative(LinExpr(phase.margin_cap) - LinExpr(r));
  sdp::SymExpr f(nv_basis);
  for (int j = 0; j < nv_basis; ++j) {
    for (int i = 0; i <= j; ++i) f.at(i, j).add(Problem::psd(st.block, i, j), 1.0);
    f.at(j, j).add(r, -1.0);
  }
  prob.add_lmi(f);
  prob.minimize(LinExpr(r, -1.0));
  return r;
}

const sdp::Backend& backend_of(const SosOptions& o) {
  return o.backend ? *o.backend : sdp::default_backend();
}

}  // namespace

ExtendedPoly build_extended_poly(const PolynomialSystem& sys, const std::vector<IqcTerm>& terms) {
  sys.validate();
  int npsi = 0;
  for (const IqcTerm& t : terms) {
    if (t.factor.psi.inputs() != 2 * sys.nw) {
      throw Error(ErrorCode::kDimensionMismatch, t.name + ": filter must take (v, w)");
    }
    npsi += t.factor.psi.states();
  }
  ExtendedPoly ext;
  ext.nx = sys.nx + npsi;
  ext.nw = sys.nw;
  ext.nd = sys.nd;
  const int n = ext.nvars();
  std::vector<int> index(sys.nvars());
  for (int i = 0; i < sys.nx; ++i) index[i] = i;
  for (int j = 0; j < sys.nw + sys.nd; ++j) index[sys.nx + j] = ext.nx + j;
  for (const Polynomial& p : sys.f) ext.f.push_back(p.embed(n, index));
  std::vector<Polynomial> v;
  for (const Polynomial& p : sys.h1) v.push_back(p.embed(n, index));
  for (const Polynomial& p : sys.h2) ext.e.push_back(p.embed(n, index));
  std::vector<Polynomial> vw = v;
  for (int j = 0; j < sys.nw; ++j) vw.push_back(Polynomial::variable(n, ext.nx + j));

  int offset = sys.nx;
  for (const IqcTerm& t : terms) {
    const StateSpace& psi = t.factor.psi;
    const int np = psi.states();
    std::vector<Polynomial> state;
    for (int i = 0; i < np; ++i) state.push_back(Polynomial::variable(n, offset + i));
    for (int i = 0; i < np; ++i) {
      Polynomial r(n);
      for (int j = 0; j < np; ++j) r += psi.a()(i, j) * state[j];
      for (int j = 0; j < psi.inputs(); ++j) r += psi.b()(i, j) * vw[j];
      ext.f.push_back(r);
    }
    for (int i = 0; i < psi.outputs(); ++i) {
      Polynomial r(n);
      for (int j = 0; j < np; ++j) r += psi.c()(i, j) * state[j];
      for (int j = 0; j < psi.inputs(); ++j) r += psi.d()(i, j) * vw[j];
      ext.z.push_back(r);
    }
    ext.z_sizes.push_back(psi.outputs());
    offset += np;
  }
  ext.plant_scale = std::max({1.0, coef_norm(sys.f), coef_norm(sys.h1), coef_norm(sys.h2)});
  return ext;
}

Polynomial gram_polynomial(const GramCertificate& c, int nvars) {
  Polynomial p(nvars);
  const int nb = static_cast<int>(c.basis.size());
  for (int j = 0; j < nb; ++j) {
    for (int i = 0; i <= j; ++i) p.add_term(c.basis[i] + c.basis[j], (i == j ? 1.0 : 2.0) * c.q(i, j));
  }
  return p;
}

double certificate_mismatch(const Polynomial& p, const GramCertificate& c, double* min_eig) {
  if (min_eig) *min_eig = c.q.size() ? min_eigenvalue_sym(c.q) : 0.0;
  const Polynomial diff = p - gram_polynomial(c, p.nvars());
  double worst = 0.0;
  for (const auto& [m, v] : diff.terms()) worst = std::max(worst, std::abs(v));
  return worst;
}

std::optional<GramCertificate> is_sos(const Polynomial& p, const sdp::Options& options) {
  if (p.is_zero()) return GramCertificate{};
  if (p.degree() % 2 != 0) return std::nullopt;
  Problem prob;
  PolyExpr g;
  add_const(g, p);
  // Maximize a lower bound on the smallest Gram eigenvalue for a well-centred certificate.
  const Var s = prob.add_free();
  const GramBlock gb = add_sos_constraint(prob, g, p.nvars(), true, {}, &s);
  if (gb.basis.empty()) return std::nullopt;
  prob.add_nonnegative(LinExpr(1.0) - LinExpr(s));
  prob.minimize(LinExpr(s, -1.0));
  sdp::Solution sol;
  try {
    sol = sdp::default_backend().solve(prob, options);
  } catch (const Error&) {
    return std::nullopt;
  }
  GramCertificate c{gb.basis, sol.value(gb.q)};
  double min_eig = 0.0;
  double scale = 1.0;
  for (const auto& [m, v] : p.terms()) scale = std::max(scale, std::abs(v));
  const double err = certificate_mismatch(p, c, &min_eig);
  if (err > 1e-8 * scale || min_eig < 0.0 || sol.primal_infeasibility > 1e-6) return std::nullopt;
  return c;
}

SosResult sos_feasibility(const ExtendedPoly& ext, const std::vector<IqcTerm>& terms,
                          const SosOptions& options) {
  const int n = ext.nvars();
  const int d0 = ext.nx + ext.nw;
  std::vector<Polynomial> f, z;
  for (const Polynomial& p : ext.f) f.push_back(drop_inputs(p, d0, ext.nd));
  for (const Polynomial& p : ext.z) z.push_back(drop_inputs(p, d0, ext.nd));
  auto build = [&](const Reduction& red, const Phase& phase) {
    Problem prob;
    PolyExpr d;  // λ z^T M z + ∇V·F
    const Storage st = add_storage(prob, d, ext, f, options.v_degree, red.v);
    const Multipliers mu = add_multipliers(prob, d, ext, terms, z);
    const Var s = prob.add_free();
    PolyExpr g;
    for (const auto& [m, e] : d) g[m] = -1.0 * e;
    add_poly(g, sum_of_squares(n, 0, d0), s);
    std::optional<Var> margin;
    if (phase.center) {
      margin = add_margin(prob, phase, st, static_cast<int>(st.basis.size()));
      prob.add_equality(LinExpr(s) - LinExpr(phase.fixed));
    } else {
      prob.minimize(LinExpr(s));
    }
    const GramBlock gb = add_sos_constraint(prob, g, n, options.prune, red.g, margin ? &*margin : nullptr);

    LinExpr norm(-1.0);
    for (std::size_t i = 0; i < st.basis.size(); ++i) {
      norm.add(Problem::psd(st.block, static_cast<int>(i), static_cast<int>(i)), 1.0);
    }
    for (std::size_t k = 0; k < mu.lambda.size(); ++k) {
      if (mu.x_block[k] >= 0) {
        for (int i = 0; i < ext.nw; ++i) norm.add(Problem::psd(mu.x_block[k], i, i), 1.0);
      } else {
        norm.add(mu.lambda[k], 1.0);
      }
    }
    prob.add_equality(norm);

    SosResult r;
    r.solver = backend_of(options).solve(prob, options.sdp);
    r.feasibility_margin = r.solver.value(s);
    fill_common(r, r.solver, st, mu, gb, g, n);
    return r;
  };
  auto [r, red] = solve_reduced(build);
  const double s_star = r.feasibility_margin;
  if (!(s_star < -options.feasibility_tol * ext.plant_scale)) {
    const bool accurate = r.solver.ok() || r.solver.primal_infeasibility <= 1e-6;
    r.status = accurate ? AnalysisStatus::kInfeasible : AnalysisStatus::kNumericalFailure;
    if (!accurate) r.message = "solver failed on the SOS stability program";
    return r;
  }
  SosResult c = build(red, Phase{true, 0.5 * s_star, cap_for(r)});
  if (certificate_ok(c)) {
    c.feasibility_margin = s_star;
    c.status = AnalysisStatus::kFeasible;
    return c;
  }
  if (certificate_ok(r)) {
    r.status = AnalysisStatus::kFeasible;
    return r;
  }
  r.status = AnalysisStatus::kNumericalFailure;
  r.message = "stability certificate could not be centred";
  return r;
}

SosResult sos_gain(const ExtendedPoly& ext, const std::vector<IqcTerm>& terms, const SosOptions& options) {
  SosResult feas = sos_feasibility(ext, terms, options);
  if (feas.status != AnalysisStatus::kFeasible) return feas;
  if (ext.nd == 0 || ext.e.empty()) {
    feas.message = "no performance channel; stability only";
    return feas;
  }
  const int n = ext.nvars();
  auto build = [&](const Reduction& red, const Phase& phase) {
    Problem prob;
    PolyExpr d;
    const Storage st = add_storage(prob, d, ext, ext.f, options.v_degree, red.v);
    const Multipliers mu = add_multipliers(prob, d, ext, terms, ext.z);
    const Var t = prob.add_lp();
    PolyExpr g;
    for (const auto& [m, e] : d) g[m] = -1.0 * e;
    Polynomial ee(n);
    for (const Polynomial& e : ext.e) ee += e * e;
    add_const(g, ee, -1.0);
    add_poly(g, sum_of_squares(n, ext.nx + ext.nw, ext.nd), t);
    add_const(g, sum_of_squares(n, 0, n), -options.strict_eps * ext.plant_scale);
    std::optional<Var> margin;
    if (phase.center) {
      margin = add_margin(prob, phase, st, static_cast<int>(st.basis.size()));
      prob.add_equality(LinExpr(t) - LinExpr(phase.fixed));
    } else {
      prob.minimize(LinExpr(t));
    }
    const GramBlock gb = add_sos_constraint(prob, g, n, options.prune, red.g, margin ? &*margin : nullptr);

    SosResult r;
    r.solver = backend_of(options).solve(prob, options.sdp);
    r.gamma = std::sqrt(std::max(0.0, r.solver.value(t)));
    fill_common(r, r.solver, st, mu, gb, g, n);
    return r;
  };
  auto [r, red] = solve_reduced(build);
  const double t_star = r.gamma * r.gamma;
  SosResult c = build(red, Phase{true, t_star * (1.0 + 1e-4) + options.strict_eps * ext.plant_scale, cap_for(r)});
  SosResult& out = certificate_ok(c) ? c : r;
  out.feasibility_margin = feas.feasibility_margin;
  if (certificate_ok(out)) {
    out.status = AnalysisStatus::kFeasible;
  } else {
    out.gamma = std::numeric_limits<double>::infinity();
    out.status = AnalysisStatus::kNumericalFailure;
    out.message = "SOS gain program not certified";
  }
  return std::move(out);
}

double dissipation_value(const ExtendedPoly& ext, const std::vector<IqcTerm>& terms, const SosResult& r,
                         const Vector& point) {
  const int n = ext.nvars();
  double val = 0.0;
  for (int k = 0; k < ext.nx; ++k) val += r.v.derivative(k).evaluate(point) * ext.f[k].evaluate(point);
  int z0 = 0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const int nz = ext.z_sizes[k];
    Vector zk(nz);
    for (int i = 0; i < nz; ++i) zk(i) = ext.z[z0 + i].evaluate(point);
    z0 += nz;
    const Matrix mk = terms[k].base ? kron(*terms[k].base, r.scalings[k])
                                    : Matrix(r.scalings[k](0, 0) * terms[k].factor.m);
    val += zk.dot(mk * zk);
  }
  for (const Polynomial& e : ext.e) {
    const double ev = e.evaluate(point);
    val += ev * ev;
  }
  const double g2 = std::isfinite(r.gamma) ? r.gamma * r.gamma : 0.0;
  for (int i = ext.nx + ext.nw; i < n; ++i) val -= g2 * point(i) * point(i);
  return val;
}

MarginResult sos_delay_margin(const PolynomialSystem& sys, const RecipeFn& recipe, const BisectOptions& bisect,
                              const SosOptions& options) {
  auto feasible = [&](double tau) {
    const std::vector<IqcTerm> terms = recipe(tau);
    return sos_gain(build_extended_poly(sys, terms), terms, options).status == AnalysisStatus::kFeasible;
  };
  return bisect_margin(feasible, bisect);
}

PolynomialSystem nl_classical_loop() {
  PolynomialSystem s;
  s.nx = 2;
  s.nw = 1;
  s.nd = 1;
  s.names = {"x1", "x2", "w", "d"};
  const auto& nm = s.names;
  // x' = A x + B (w + v) + p(x) with v = d - C x.
  s.f.push_back(parse_polynomial("-49*x1 + 8*w + 8*d + 36*x1 - 12*x2 + 2*x1^2 + 3*x2^2 - 0.2*x1^3", nm));
  s.f.push_back(parse_polynomial("x1 - x2^3", nm));
  s.h1.push_back(parse_polynomial("4.5*x1 - 1.5*x2 + d", nm));
  s.h2.push_back(s.h1.front());
  return s;
}

}  // namespace delayiqc
