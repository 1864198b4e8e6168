#include "delayiqc/lpv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "delayiqc/error.hpp"

namespace delayiqc {

using sdp::LinExpr;
using sdp::Problem;
using sdp::SymExpr;
using sdp::Var;

void LpvPlant::validate() const {
  if (vertices.empty()) throw Error(ErrorCode::kInvalidArgument, "plant has no grid points");
  const StateSpace& v0 = vertices.front();
  if (nv < 1 || v0.inputs() < nv || v0.outputs() < nv) {
    throw Error(ErrorCode::kDimensionMismatch, "delay channel wider than the plant");
  }
  for (const StateSpace& v : vertices) {
    if (v.states() != v0.states() || v.inputs() != v0.inputs() || v.outputs() != v0.outputs()) {
      throw Error(ErrorCode::kDimensionMismatch, "grid points have different dimensions");
    }
  }
  if (!rho.empty() && rho.size() != vertices.size()) {
    throw Error(ErrorCode::kDimensionMismatch, "one parameter value per grid point");
  }
}

LpvPlant loop_shift(const LpvPlant& tilde) {
  tilde.validate();
  LpvPlant out = tilde;
  const int nu = tilde.vertices.front().inputs();
  const int ny = tilde.vertices.front().outputs();
  Wiring w;
  w.internal = Matrix::Zero(nu, ny);
  w.internal.topLeftCorner(tilde.nv, tilde.nv) = Matrix::Identity(tilde.nv, tilde.nv);
  w.input = Matrix::Identity(nu, nu);
  w.output = Matrix::Identity(ny, ny);
  w.feedthrough = Matrix::Zero(ny, nu);
  for (StateSpace& v : out.vertices) {
    const StateSpace parts[] = {v};
    v = interconnect(parts, w);
  }
  return out;
}

int ExtendedPlant::nz() const {
  int s = 0;
  for (int z : z_sizes) s += z;
  return s;
}

ExtendedPlant build_extended(const LpvPlant& g, const std::vector<IqcTerm>& terms) {
  g.validate();
  const int nv = g.nv;
  StateSpace psi;
  bool first = true;
  ExtendedPlant ext;
  for (const IqcTerm& t : terms) {
    const StateSpace& p = t.factor.psi;
    if (p.inputs() != 2 * nv) {
      throw Error(ErrorCode::kDimensionMismatch, t.name + ": filter must take (v, w)");
    }
    psi = first ? p : stack_outputs(psi, p);
    first = false;
    ext.z_sizes.push_back(p.outputs());
  }
  ext.nw = nv;
  ext.nd = g.nd();
  ext.ne = g.ne();
  for (const StateSpace& v : g.vertices) {
    ext.plant_scale = std::max({ext.plant_scale, v.a().norm(), v.b().norm(), v.c().norm(), v.d().norm()});
  }
  for (const StateSpace& v : g.vertices) {
    if (terms.empty()) {
      ext.vertices.push_back(v);
      continue;
    }
    const int ng = v.states();
    const int np = psi.states();
    const int nz = psi.outputs();
    const Matrix cv = v.c().topRows(nv);
    const Matrix dv = v.d().topRows(nv);  // [D_vw, D_vd]
    const Matrix bpv = psi.b().leftCols(nv);
    const Matrix bpw = psi.b().rightCols(nv);
    const Matrix dpv = psi.d().leftCols(nv);
    const Matrix dpw = psi.d().rightCols(nv);
    Matrix inject_w = Matrix::Zero(nv, v.inputs());
    inject_w.leftCols(nv) = Matrix::Identity(nv, nv);

    Matrix a = Matrix::Zero(ng + np, ng + np);
    a.topLeftCorner(ng, ng) = v.a();
    a.bottomLeftCorner(np, ng) = bpv * cv;
    a.bottomRightCorner(np, np) = psi.a();
    Matrix b(ng + np, v.inputs());
    b << v.b(), bpv * dv + bpw * inject_w;
    Matrix c = Matrix::Zero(nz + g.ne(), ng + np);
    c.topLeftCorner(nz, ng) = dpv * cv;
    c.topRightCorner(nz, np) = psi.c();
    c.bottomLeftCorner(g.ne(), ng) = v.c().bottomRows(g.ne());
    Matrix d(nz + g.ne(), v.inputs());
    d << dpv * dv + dpw * inject_w, v.d().bottomRows(g.ne());
    ext.vertices.emplace_back(a, b, c, d);
  }
  return ext;
}

std::string to_string(AnalysisStatus s) {
  switch (s) {
    case AnalysisStatus::kFeasible: return "feasible";
    case AnalysisStatus::kInfeasible: return "infeasible";
    case AnalysisStatus::kNumericalFailure: return "numerical-failure";
  }
  return "numerical-failure";
}

namespace {

// Adds k * m (constant, symmetric) times `var` to the expression matrix.
void add_scaled(SymExpr& f, const Matrix& m, const Var& var, double k = 1.0) {
  for (int c = 0; c < m.cols(); ++c) {
    for (int r = 0; r <= c; ++r) {
      if (m(r, c) != 0.0) f.at(r, c).add(var, k * m(r, c));
    }
  }
}

Matrix sym_unit(int n, int p, int q) {
  Matrix e = Matrix::Zero(n, n);
  e(p, q) = 1.0;
  e(q, p) = 1.0;
  return e;
}

struct Decisions {
  int p_block = -1;
  std::vector<Var> lambda;          // scalar terms
  std::vector<int> x_block;         // matrix-scaled terms (-1 otherwise)
};

Decisions add_decisions(Problem& prob, int n, const std::vector<IqcTerm>& terms, int nv) {
  Decisions d;
  d.p_block = prob.add_psd(n);
  for (const IqcTerm& t : terms) {
    if (t.base) {
      d.lambda.push_back(Var{});
      d.x_block.push_back(prob.add_psd(nv));
    } else {
      d.lambda.push_back(prob.add_lp());
      d.x_block.push_back(-1);
    }
  }
  return d;
}

// Diagonal similarity x = T x̃ equalizing row and column norms of the state
// coupling (Osborne iteration with power-of-two factors).
constexpr double kMaxBalance = 1024.0;

Vector balancing(const ExtendedPlant& ext) {
  const int n = ext.states();
  Matrix mag = Matrix::Zero(n, n + 1);
  Matrix out_mag = Matrix::Zero(1, n);
  for (const StateSpace& v : ext.vertices) {
    mag.leftCols(n) = mag.leftCols(n).cwiseMax(v.a().cwiseAbs());
    for (int i = 0; i < n; ++i) {
      mag(i, n) = std::max(mag(i, n), v.b().row(i).cwiseAbs().sum());
      out_mag(0, i) = std::max(out_mag(0, i), v.c().col(i).cwiseAbs().sum());
    }
  }
  Vector t = Vector::Ones(n);
  for (int sweep = 0; sweep < 30; ++sweep) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      double row = mag(i, n) / t(i), col = out_mag(0, i) * t(i);
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        row += mag(i, j) * t(j) / t(i);
        col += mag(j, i) * t(i) / t(j);
      }
      if (row == 0.0 || col == 0.0) continue;
      const double f = std::exp2(std::round(0.5 * std::log2(row / col)));
      const double next = std::clamp(t(i) * f, 1.0 / kMaxBalance, kMaxBalance);
      if (next != t(i)) {
        t(i) = next;
        changed = true;
      }
    }
    if (!changed) break;
  }
  return t;
}

ExtendedPlant transformed(const ExtendedPlant& ext, const Vector& t) {
  ExtendedPlant out = ext;
  const Vector inv = t.cwiseInverse();
  for (StateSpace& v : out.vertices) {
    v = StateSpace(inv.asDiagonal() * v.a() * t.asDiagonal(), inv.asDiagonal() * v.b(),
                   v.c() * t.asDiagonal(), v.d());
  }
  return out;
}

double scale_of(const ExtendedPlant& ext) {
  double s = 1.0;
  for (const StateSpace& v : ext.vertices) {
    s = std::max({s, v.a().norm(), v.b().norm(), v.c().norm(), v.d().norm()});
  }
  return s;
}

// H(P, λ) over (x, w[, d]) without the γ² and e terms.
SymExpr dissipation_expr(const StateSpace& v, const ExtendedPlant& ext,
                         const std::vector<IqcTerm>& terms, const Decisions& dec, bool with_d) {
  const int n = v.states();
  const int ncols = ext.nw + (with_d ? ext.nd : 0);
  const int size = n + ncols;
  SymExpr f(size);
  Matrix r(n, size);
  r << v.a(), v.b().leftCols(ncols);
  // Aᵀ P + P A, P B and Bᵀ P blocks.
  for (int c = 0; c < size; ++c) {
    for (int rr = 0; rr <= c; ++rr) {
      LinExpr& e = f.at(rr, c);
      if (rr < n) {
        for (int b = 0; b < n; ++b) {
          if (r(b, c) != 0.0) e.add(Problem::psd(dec.p_block, rr, b), r(b, c));
        }
      }
      if (c < n) {
        for (int a = 0; a < n; ++a) {
          if (r(a, rr) != 0.0) e.add(Problem::psd(dec.p_block, a, c), r(a, rr));
        }
      }
    }
  }
  int z0 = 0;
  for (std::size_t k = 0; k < terms.size(); ++k) {
    const int nz = ext.z_sizes[k];
    Matrix nk(nz, size);
    nk << v.c().block(z0, 0, nz, n), v.d().block(z0, 0, nz, ncols);
    z0 += nz;
    if (terms[k].base) {
      const int nv = ext.nw;
      for (int q = 0; q < nv; ++q) {
        for (int p = 0; p <= q; ++p) {
          const Matrix e = sym_unit(nv, p, q);
          const Matrix mk = nk.transpose() * kron(*terms[k].base, e) * nk;
          add_scaled(f, mk, Problem::psd(dec.x_block[k], p, q));
        }
      }
    } else {
      const Matrix mk = nk.transpose() * terms[k].factor.m * nk;
      add_scaled(f, mk, dec.lambda[k]);
    }
  }
  return f;
}

LinExpr normalization(const Decisions& dec, int n, int nv) {
  LinExpr e;
  for (int i = 0; i < n; ++i) e.add(Problem::psd(dec.p_block, i, i), 1.0);
  for (std::size_t k = 0; k < dec.lambda.size(); ++k) {
    if (dec.x_block[k] >= 0) {
      for (int i = 0; i < nv; ++i) e.add(Problem::psd(dec.x_block[k], i, i), 1.0);
    } else {
      e.add(dec.lambda[k], 1.0);
    }
  }
  return e;
}

void fill_decisions(AnalysisResult& res, const sdp::Solution& sol, const Decisions& dec, int n,
                    int nv) {
  res.p = sol.psd[dec.p_block];
  res.lambda.clear();
  res.scalings.clear();
  for (std::size_t k = 0; k < dec.lambda.size(); ++k) {
    if (dec.x_block[k] >= 0) {
      const Matrix x = sol.psd[dec.x_block[k]];
      res.scalings.push_back(x);
      res.lambda.push_back(x.trace() / nv);
    } else {
      const double l = sol.value(dec.lambda[k]);
      res.scalings.push_back(Matrix::Constant(1, 1, l));
      res.lambda.push_back(l);
    }
  }
  (void)n;
}

std::vector<std::string> hardness_of(const std::vector<IqcTerm>& terms) {
  std::vector<std::string> h;
  for (const IqcTerm& t : terms) h.push_back(t.name + ":" + to_string(t.factor.hardness));
  return h;
}

const sdp::Backend& backend_of(const AnalysisOptions& o) {
  return o.backend ? *o.backend : sdp::default_backend();
}

}  // namespace

AnalysisResult check_feasibility(const ExtendedPlant& original, const std::vector<IqcTerm>& terms,
                                 const AnalysisOptions& options) {
  const Vector tb = balancing(original);
  const ExtendedPlant ext = transformed(original, tb);
  const int n = ext.states();
  Problem prob;
  const Decisions dec = add_decisions(prob, n, terms, ext.nw);
  const Var s = prob.add_free();
  for (const StateSpace& v : ext.vertices) {
    SymExpr f = dissipation_expr(v, ext, terms, dec, false);
    SymExpr g(f.size());
    for (int c = 0; c < f.size(); ++c) {
      for (int r = 0; r <= c; ++r) g.at(r, c) = -1.0 * f.at(r, c);
      g.at(c, c).add(s, 1.0);
    }
    prob.add_lmi(g);
  }
  LinExpr norm = normalization(dec, n, ext.nw);
  norm.constant -= 1.0;
  prob.add_equality(norm);
  prob.minimize(LinExpr(s));
  AnalysisResult res;
  res.hardness = hardness_of(terms);
  res.solver = backend_of(options).solve(prob, options.sdp);
  res.feasibility_margin = res.solver.value(s);
  fill_decisions(res, res.solver, dec, n, ext.nw);
  res.p = tb.cwiseInverse().asDiagonal() * res.p * tb.cwiseInverse().asDiagonal();
  res.lmi_max_eig = assemble_stability_max_eig(original, terms, res.p, res.scalings);
  // Accepts any iterate that passes the independent check.
  const bool certified = res.feasibility_margin < -options.feasibility_tol * ext.plant_scale &&
                         res.lmi_max_eig < 0.0 && min_eigenvalue_sym(res.p) >= 0.0;
  if (certified) {
    res.status = AnalysisStatus::kFeasible;
  } else if (res.solver.ok()) {
    res.status = AnalysisStatus::kInfeasible;
  } else {
    res.status = AnalysisStatus::kNumericalFailure;
    res.message = "solver failed on the stability LMI";
  }
  return res;
}

AnalysisResult solve_gain(const ExtendedPlant& original, const std::vector<IqcTerm>& terms,
                          const AnalysisOptions& options) {
  AnalysisResult feas = check_feasibility(original, terms, options);
  if (feas.status != AnalysisStatus::kFeasible) return feas;
  const Vector tb = balancing(original);
  const ExtendedPlant ext = transformed(original, tb);
  if (ext.nd == 0 || ext.ne == 0) {
    feas.message = "no performance channel; stability only";
    return feas;
  }
  const int n = ext.states();
  const double scale = scale_of(ext);
  const double eps = options.strict_eps * scale;
  Problem prob;
  const Decisions dec = add_decisions(prob, n, terms, ext.nw);
  const Var t = prob.add_lp();
  const int size = n + ext.nw + ext.nd;
  for (const StateSpace& v : ext.vertices) {
    SymExpr f = dissipation_expr(v, ext, terms, dec, true);
    Matrix ne(ext.ne, size);
    ne << v.c().bottomRows(ext.ne), v.d().bottomRows(ext.ne);
    SymExpr g(size);
    for (int c = 0; c < size; ++c) {
      for (int r = 0; r <= c; ++r) g.at(r, c) = -1.0 * f.at(r, c);
    }
    g.add_constant(ne.transpose() * ne, 0, -1.0);
    for (int i = 0; i < size; ++i) g.at(i, i).constant -= eps;
    for (int i = n + ext.nw; i < size; ++i) g.at(i, i).add(t, 1.0);
    prob.add_lmi(g);
  }
  prob.minimize(LinExpr(t));
  AnalysisResult res;
  res.hardness = feas.hardness;
  res.feasibility_margin = feas.feasibility_margin;
  res.solver = backend_of(options).solve(prob, options.sdp);
  fill_decisions(res, res.solver, dec, n, ext.nw);
  res.p = tb.cwiseInverse().asDiagonal() * res.p * tb.cwiseInverse().asDiagonal();
  const double t_val = std::max(0.0, res.solver.value(t));
  res.lmi_max_eig = assemble_lmi_max_eig(original, terms, res.p, res.scalings, t_val);
  if (res.lmi_max_eig < 0.0 && min_eigenvalue_sym(res.p) >= 0.0) {
    res.gamma = std::sqrt(t_val);
    res.status = AnalysisStatus::kFeasible;
    if (!res.solver.ok() || res.solver.status == sdp::Status::kNearOptimal) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "certified bound; solver stopped at relative gap %.2e",
                    res.solver.relative_gap);
      res.message = buf;
    }
  } else {
    res.status = AnalysisStatus::kNumericalFailure;
    res.message = "gain LMI not certified by the re-assembly check";
  }
  return res;
}

namespace {

double assemble_max_eig(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms, const Matrix& p,
                        const std::vector<Matrix>& scalings, double gamma_sq, bool with_d) {
  double worst = -std::numeric_limits<double>::infinity();
  const int n = ext.states();
  const int ncols = ext.nw + (with_d ? ext.nd : 0);
  const int size = n + ncols;
  for (const StateSpace& v : ext.vertices) {
    Matrix r(n, size);
    r << v.a(), v.b().leftCols(ncols);
    Matrix l = Matrix::Zero(n, size);
    l.leftCols(n) = Matrix::Identity(n, n);
    Matrix h = l.transpose() * p * r + r.transpose() * p * l;
    if (with_d) {
      Matrix ne(ext.ne, size);
      ne << v.c().bottomRows(ext.ne), v.d().bottomRows(ext.ne);
      h += ne.transpose() * ne;
      h.bottomRightCorner(ext.nd, ext.nd) -= gamma_sq * Matrix::Identity(ext.nd, ext.nd);
    }
    int z0 = 0;
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const int nz = ext.z_sizes[k];
      Matrix nk(nz, size);
      nk << v.c().middleRows(z0, nz), v.d().block(z0, 0, nz, ncols);
      z0 += nz;
      const Matrix mk = terms[k].base ? kron(*terms[k].base, scalings[k])
                                      : Matrix(scalings[k](0, 0) * terms[k].factor.m);
      h += nk.transpose() * mk * nk;
    }
    worst = std::max(worst, max_eigenvalue_sym(h));
  }
  return worst;
}

}  // namespace

double assemble_lmi_max_eig(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms,
                            const Matrix& p, const std::vector<Matrix>& scalings, double gamma_sq) {
  return assemble_max_eig(ext, terms, p, scalings, gamma_sq, true);
}

double assemble_stability_max_eig(const ExtendedPlant& ext, const std::vector<IqcTerm>& terms,
                                  const Matrix& p, const std::vector<Matrix>& scalings) {
  return assemble_max_eig(ext, terms, p, scalings, 0.0, false);
}

MarginResult bisect_margin(const FeasibleFn& feasible, const BisectOptions& o) {
  if (!(o.lo > 0.0 && o.hi > o.lo && o.tol > 0.0)) {
    throw Error(ErrorCode::kInvalidArgument, "bisection needs 0 < lo < hi and tol > 0");
  }
  MarginResult out;
  const bool lo_ok = feasible(o.lo);
  out.probes.emplace_back(o.lo, lo_ok);
  if (!lo_ok) throw Error(ErrorCode::kInfeasibleAtLo, "analysis is infeasible at the lower bound");
  const bool hi_ok = feasible(o.hi);
  out.probes.emplace_back(o.hi, hi_ok);
  if (hi_ok) {
    out.margin = o.hi;
    out.exceeds_cap = true;
    return out;
  }
  double lo = o.lo, hi = o.hi;
  while (hi - lo > o.tol) {
    const double mid = 0.5 * (lo + hi);
    const bool ok = feasible(mid);
    out.probes.emplace_back(mid, ok);
    ++out.steps;
    (ok ? lo : hi) = mid;
  }
  out.margin = lo;
  return out;
}

MarginResult delay_margin(const LpvPlant& g, const RecipeFn& recipe, const BisectOptions& bisect,
                          const AnalysisOptions& options) {
  auto feasible = [&](double tau) {
    const std::vector<IqcTerm> terms = recipe(tau);
    const ExtendedPlant ext = build_extended(g, terms);
    return check_feasibility(ext, terms, options).status == AnalysisStatus::kFeasible;
  };
  return bisect_margin(feasible, bisect);
}

std::vector<SweepPoint> gain_sweep(const LpvPlant& g, const RecipeFn& recipe,
                                   const std::vector<double>& taus, const AnalysisOptions& options) {
  std::vector<SweepPoint> out;
  for (double tau : taus) {
    SweepPoint pt;
    pt.tau = tau;
    try {
      const std::vector<IqcTerm> terms = recipe(tau);
      pt.result = solve_gain(build_extended(g, terms), terms, options);
    } catch (const Error& e) {
      pt.result.status = AnalysisStatus::kNumericalFailure;
      pt.result.message = e.what();
    }
    out.push_back(std::move(pt));
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepPoint>& points) {
  std::size_t k = 0;
  for (const auto& p : points) k = std::max(k, p.result.lambda.size());
  std::ostringstream os;
  os << "tau,gamma,status";
  for (std::size_t i = 1; i <= k; ++i) os << ",lambda_" << i;
  os << '\n';
  char buf[64];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof buf, "%.10g", p.tau);
    os << buf << ',';
    if (std::isfinite(p.result.gamma) && p.result.status == AnalysisStatus::kFeasible) {
      std::snprintf(buf, sizeof buf, "%.10g", p.result.gamma);
      os << buf;
    } else {
      os << "inf";
    }
    os << ',' << to_string(p.result.status);
    for (std::size_t i = 0; i < k; ++i) {
      os << ',';
      if (i < p.result.lambda.size()) {
        std::snprintf(buf, sizeof buf, "%.10g", p.result.lambda[i]);
        os << buf;
      }
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace delayiqc
