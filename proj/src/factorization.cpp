#include "delayiqc/factorization.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

double grid_scale(const Multiplier& pi) { return std::isinf(pi.tau_bar) ? 1.0 : pi.tau_bar; }

Matrix signature_matrix(int p, int q) {
  Vector d(p + q);
  d.head(p).setOnes();
  d.tail(q).setConstant(-1.0);
  return d.asDiagonal();
}

}  // namespace

std::string to_string(FactorKind k) {
  switch (k) {
    case FactorKind::kNatural: return "natural";
    case FactorKind::kGeneric: return "generic";
    case FactorKind::kJSpectral: return "j-spectral";
  }
  return "generic";
}

std::string to_string(FactorHardness h) {
  switch (h) {
    case FactorHardness::kHardCertified: return "hard-certified";
    case FactorHardness::kNaturalHard: return "natural-hard";
    case FactorHardness::kEmpiricalOnly: return "empirical-only";
  }
  return "empirical-only";
}

FrequencyGrid verification_grid(double tau_bar) {
  return FrequencyGrid::log_spaced(1e-3 / tau_bar, 1e3 / tau_bar, 200, true, true);
}

double factorization_residual(const StateSpace& psi, const Matrix& m, const Multiplier& pi,
                              const FrequencyGrid& grid) {
  const CMatrix mc = m.cast<Complex>();
  double worst = 0.0;
  for (double w : grid) {
    const CMatrix p = freq_response(psi, w);
    const CMatrix target = pi.evaluate(w);
    worst = std::max(worst, (p.adjoint() * mc * p - target).norm() / (1.0 + target.norm()));
  }
  return worst;
}

Factorization natural_factorization(const Multiplier& pi) {
  if (!pi.natural) {
    throw Error(ErrorCode::kInvalidArgument, pi.name + " has no closed-form factor");
  }
  Factorization f;
  f.psi = pi.natural->psi;
  f.m = pi.natural->m;
  f.kind = FactorKind::kNatural;
  f.hardness = pi.hardness == HardnessClass::kNaturalHard ? FactorHardness::kNaturalHard
                                                          : FactorHardness::kEmpiricalOnly;
  if (!f.psi.is_stable() && !f.psi.is_static()) {
    throw Error(ErrorCode::kSolverFailure, "closed-form factor is not stable");
  }
  f.residual = factorization_residual(f.psi, f.m, pi, verification_grid(grid_scale(pi)));
  return f;
}

Factorization factorize_generic(const Multiplier& pi) {
  const StableSplit split = stable_unstable_split(pi.as_system());
  const StateSpace& gs = split.stable;
  const int n = gs.states();
  const int m = gs.inputs();
  Matrix c_psi = Matrix::Zero(n + m, n);
  c_psi.topRows(n) = Matrix::Identity(n, n);
  Matrix d_psi = Matrix::Zero(n + m, m);
  d_psi.bottomRows(m) = Matrix::Identity(m, m);
  Matrix mm = Matrix::Zero(n + m, n + m);
  mm.topRightCorner(n, m) = gs.c().transpose();
  mm.bottomLeftCorner(m, n) = gs.c();
  mm.bottomRightCorner(m, m) = symmetrize(gs.d());
  Factorization f;
  f.psi = StateSpace(gs.a(), gs.b(), c_psi, d_psi);
  f.m = mm;
  f.kind = FactorKind::kGeneric;
  f.hardness = FactorHardness::kEmpiricalOnly;
  f.residual = factorization_residual(f.psi, f.m, pi, verification_grid(grid_scale(pi)));
  return f;
}

Signature signature_decomposition(const Matrix& d) {
  if (d.rows() != d.cols()) throw Error(ErrorCode::kDimensionMismatch, "Dπ must be square");
  const Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(d));
  const Vector& ev = es.eigenvalues();
  const double tol = 1e-12 * std::max(1.0, d.norm());
  std::vector<int> order(ev.size());
  std::iota(order.begin(), order.end(), 0);
  for (int i : order) {
    if (std::abs(ev(i)) <= tol) throw Error(ErrorCode::kSingularDpi, "Dπ is singular");
  }
  // Positive eigenvalues first, each group by decreasing magnitude.
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    if ((ev(a) > 0) != (ev(b) > 0)) return ev(a) > 0;
    return std::abs(ev(a)) > std::abs(ev(b));
  });
  Signature s;
  s.w.resize(d.rows(), d.cols());
  for (std::size_t k = 0; k < order.size(); ++k) {
    Vector v = es.eigenvectors().col(order[k]);
    Eigen::Index big = 0;
    v.cwiseAbs().maxCoeff(&big);
    if (v(big) < 0) v = -v;
    s.w.row(static_cast<Eigen::Index>(k)) = std::sqrt(std::abs(ev(order[k]))) * v.transpose();
    if (ev(order[k]) > 0) ++s.p; else ++s.q;
  }
  return s;
}

Factorization j_spectral(const Multiplier& pi, double regularization) {
  const StableSplit split = stable_unstable_split(pi.as_system());
  const StateSpace& gs = split.stable;
  const int n = pi.channels();
  Matrix dpi = symmetrize(gs.d());
  dpi.topLeftCorner(n, n) += regularization * Matrix::Identity(n, n);
  const Signature sig = signature_decomposition(dpi);
  const Matrix j = signature_matrix(sig.p, sig.q);
  Factorization f;
  f.kind = FactorKind::kJSpectral;
  f.m = j;
  f.p = sig.p;
  f.q = sig.q;
  f.regularization = regularization;
  if (gs.states() == 0) {
    f.psi = StateSpace::gain(sig.w);
  } else {
    const Matrix x = solve_are(gs.a(), gs.b(), gs.c(), dpi);
    f.are_residual = are_residual(gs.a(), gs.b(), gs.c(), dpi, x);
    const Matrix k = gs.b().transpose() * x + gs.c();
    const Matrix c_psi = j * sig.w.transpose().fullPivLu().solve(k);
    f.psi = StateSpace(gs.a(), gs.b(), c_psi, sig.w);
    if (!inverse(f.psi).is_stable()) {
      throw Error(ErrorCode::kNoStabilizingSolution, "spectral factor is not stably invertible");
    }
  }
  const HardCheck hc = check_hard_conditions(pi, verification_grid(grid_scale(pi)), 1e-9, regularization);
  f.hardness = hc.pass ? FactorHardness::kHardCertified : FactorHardness::kEmpiricalOnly;
  f.residual = factorization_residual(f.psi, f.m, pi, verification_grid(grid_scale(pi)));
  return f;
}

HardCheck check_hard_conditions(const Multiplier& pi, const FrequencyGrid& grid, double delta,
                                double regularization) {
  const int n = pi.channels();
  for (double w : grid) {
    const CMatrix v = pi.evaluate(w);
    Eigen::SelfAdjointEigenSolver<CMatrix> e11(v.topLeftCorner(n, n), Eigen::EigenvaluesOnly);
    const double lo = e11.eigenvalues().minCoeff() + regularization;
    if (!(lo > delta)) return HardCheck{false, w, "pi11", lo};
    Eigen::SelfAdjointEigenSolver<CMatrix> e22(v.bottomRightCorner(n, n), Eigen::EigenvaluesOnly);
    const double hi = e22.eigenvalues().maxCoeff();
    if (!(hi < -delta)) return HardCheck{false, w, "pi22", hi};
  }
  return HardCheck{};
}

Factorization factorize(const Multiplier& pi, FactorPolicy policy) {
  switch (policy) {
    case FactorPolicy::kNatural: return natural_factorization(pi);
    case FactorPolicy::kGeneric: return factorize_generic(pi);
    case FactorPolicy::kJSpectral: return j_spectral(pi);
    case FactorPolicy::kAuto: break;
  }
  return pi.natural ? natural_factorization(pi) : factorize_generic(pi);
}

Json factorization_to_json(const Factorization& f) {
  return Json{{"psi", state_space_to_json(f.psi)},
              {"M", matrix_to_json(f.m)},
              {"kind", to_string(f.kind)},
              {"hardness", to_string(f.hardness)},
              {"residual", f.residual},
              {"are_residual", f.are_residual},
              {"regularization", f.regularization}};
}

}  // namespace delayiqc
