#include "delayiqc/lti.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "delayiqc/error.hpp"

namespace delayiqc {

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorCode::kDimensionMismatch, what);
}

Matrix block_diag(const Matrix& x, const Matrix& y) {
  Matrix out = Matrix::Zero(x.rows() + y.rows(), x.cols() + y.cols());
  out.topLeftCorner(x.rows(), x.cols()) = x;
  out.bottomRightCorner(y.rows(), y.cols()) = y;
  return out;
}

Matrix vstack(const Matrix& x, const Matrix& y) {
  Matrix out(x.rows() + y.rows(), std::max(x.cols(), y.cols()));
  require(x.cols() == y.cols(), "vstack column mismatch");
  out << x, y;
  return out;
}

Matrix hstack(const Matrix& x, const Matrix& y) {
  require(x.rows() == y.rows(), "hstack row mismatch");
  Matrix out(x.rows(), x.cols() + y.cols());
  out << x, y;
  return out;
}

// Orthonormal basis of the smallest A-invariant subspace containing range(B).
Matrix krylov_basis(const Matrix& a, const Matrix& b, double tol) {
  const Eigen::Index n = a.rows();
  const double scale = std::max({1.0, a.norm(), b.norm()});
  Matrix basis = orthonormal_range(b, tol * scale / std::max(1.0, b.norm()));
  for (Eigen::Index k = 0; k < n && basis.cols() < n; ++k) {
    if (basis.cols() == 0) break;
    Matrix next = orthonormal_range(hstack(basis, a * basis), tol);
    if (next.cols() == basis.cols()) break;
    basis = std::move(next);
  }
  return basis;
}

Matrix psd_sqrt(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return es.eigenvectors() * ev.asDiagonal();
}

}  // namespace

StateSpace::StateSpace(Matrix a, Matrix b, Matrix c, Matrix d)
    : a_(std::move(a)), b_(std::move(b)), c_(std::move(c)), d_(std::move(d)) {
  const auto n = a_.rows();
  require(a_.cols() == n, "A must be square");
  require(b_.rows() == n, "B rows must equal state count");
  require(c_.cols() == n, "C columns must equal state count");
  require(d_.rows() == c_.rows(), "D rows must equal C rows");
  require(d_.cols() == b_.cols(), "D columns must equal B columns");
}

StateSpace StateSpace::gain(const Matrix& d) {
  return StateSpace(Matrix(0, 0), Matrix(0, d.cols()), Matrix(d.rows(), 0), d);
}

StateSpace StateSpace::zero(int outputs, int inputs) {
  return gain(Matrix::Zero(outputs, inputs));
}

StateSpace StateSpace::identity(int n) { return gain(Matrix::Identity(n, n)); }

bool StateSpace::is_stable(double margin) const { return is_hurwitz(a_, margin); }

FrequencyGrid::FrequencyGrid(std::vector<double> omegas) : points_(std::move(omegas)) {
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (!(points_[i] >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "negative frequency");
    if (i > 0 && !(points_[i] > points_[i - 1])) {
      throw Error(ErrorCode::kInvalidArgument, "frequency grid must be strictly increasing");
    }
  }
}

FrequencyGrid FrequencyGrid::log_spaced(double lo, double hi, int count, bool include_zero,
                                        bool include_infinity) {
  if (!(lo > 0.0 && hi > lo && count >= 2)) {
    throw Error(ErrorCode::kInvalidArgument, "log grid needs 0 < lo < hi and count >= 2");
  }
  std::vector<double> pts;
  if (include_zero) pts.push_back(0.0);
  const double l0 = std::log10(lo);
  const double l1 = std::log10(hi);
  for (int i = 0; i < count; ++i) {
    pts.push_back(std::pow(10.0, l0 + (l1 - l0) * i / (count - 1)));
  }
  if (include_infinity) pts.push_back(kInfiniteFrequency);
  return FrequencyGrid(std::move(pts));
}

void DelayChannelSpec::validate() const {
  if (width < 1) throw Error(ErrorCode::kInvalidArgument, "delay channel width must be >= 1");
  if (!(max_delay > 0.0)) throw Error(ErrorCode::kInvalidArgument, "max delay must be positive");
  if (kind == DelayKind::kVarying && !(rate_bound >= 0.0 && rate_bound < 1.0)) {
    throw Error(ErrorCode::kRateBoundTooLarge, "varying delays need 0 <= r < 1");
  }
}

CMatrix evaluate(const StateSpace& sys, Complex s) {
  CMatrix out = sys.d().cast<Complex>();
  if (sys.states() == 0) return out;
  const auto n = sys.states();
  CMatrix resolvent = s * CMatrix::Identity(n, n) - sys.a().cast<Complex>();
  Eigen::PartialPivLU<CMatrix> lu(resolvent);
  // Pivot-based singularity test; PartialPivLU does not report rank.
  const auto& lu_mat = lu.matrixLU();
  double min_pivot = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < n; ++i) min_pivot = std::min(min_pivot, std::abs(lu_mat(i, i)));
  const double scale = std::max(1.0, resolvent.norm());
  if (min_pivot <= 1e-10 * scale) {
    throw Error(ErrorCode::kSingularResolvent, "sI - A is singular at the requested point");
  }
  out += sys.c().cast<Complex>() * lu.solve(sys.b().cast<Complex>());
  return out;
}

CMatrix freq_response(const StateSpace& sys, double omega) {
  if (std::isinf(omega)) return sys.d().cast<Complex>();
  return evaluate(sys, Complex(0.0, omega));
}

Complex delay_deviation_response(double tau, double omega) {
  if (tau < 0.0) throw Error(ErrorCode::kInvalidArgument, "delay must be nonnegative");
  return std::polar(1.0, -omega * tau) - 1.0;
}

StateSpace para_hermitian_conjugate(const StateSpace& sys) {
  return StateSpace(-sys.a().transpose(), -sys.c().transpose(), sys.b().transpose(),
                    sys.d().transpose());
}

StateSpace from_transfer_function(std::span<const double> num, std::span<const double> den) {
  if (den.empty() || den[0] == 0.0) {
    throw Error(ErrorCode::kInvalidArgument, "leading denominator coefficient must be nonzero");
  }
  if (num.size() > den.size()) throw Error(ErrorCode::kInvalidArgument, "improper transfer function");
  const int n = static_cast<int>(den.size()) - 1;
  std::vector<double> a(den.begin(), den.end());
  for (double& v : a) v /= den[0];
  std::vector<double> b(den.size(), 0.0);
  std::copy(num.begin(), num.end(), b.begin() + (den.size() - num.size()));
  for (double& v : b) v /= den[0];
  const double d = b[0];
  // Controllable canonical form.
  Matrix am = Matrix::Zero(n, n);
  Matrix bm = Matrix::Zero(n, 1);
  Matrix cm = Matrix::Zero(1, n);
  if (n > 0) {
    for (int i = 0; i + 1 < n; ++i) am(i, i + 1) = 1.0;
    for (int j = 0; j < n; ++j) am(n - 1, j) = -a[n - j];
    bm(n - 1, 0) = 1.0;
    for (int j = 0; j < n; ++j) cm(0, j) = b[n - j] - a[n - j] * d;
  }
  Matrix dm(1, 1);
  dm(0, 0) = d;
  return StateSpace(am, bm, cm, dm);
}

StateSpace scale_frequency(const StateSpace& sys, double c) {
  if (!(c > 0.0)) throw Error(ErrorCode::kInvalidArgument, "frequency scale must be positive");
  return StateSpace(sys.a() / c, sys.b() / c, sys.c(), sys.d());
}

StateSpace operator*(double k, const StateSpace& sys) {
  return StateSpace(sys.a(), sys.b(), k * sys.c(), k * sys.d());
}

StateSpace operator*(const Matrix& left, const StateSpace& sys) {
  require(left.cols() == sys.outputs(), "left gain dimension");
  return StateSpace(sys.a(), sys.b(), left * sys.c(), left * sys.d());
}

StateSpace operator*(const StateSpace& sys, const Matrix& right) {
  require(right.rows() == sys.inputs(), "right gain dimension");
  return StateSpace(sys.a(), sys.b() * right, sys.c(), sys.d() * right);
}

StateSpace series(const StateSpace& first, const StateSpace& second) {
  require(first.outputs() == second.inputs(), "series dimension mismatch");
  const int n1 = first.states();
  const int n2 = second.states();
  Matrix a = Matrix::Zero(n1 + n2, n1 + n2);
  a.topLeftCorner(n1, n1) = first.a();
  a.bottomLeftCorner(n2, n1) = second.b() * first.c();
  a.bottomRightCorner(n2, n2) = second.a();
  Matrix b(n1 + n2, first.inputs());
  b << first.b(), second.b() * first.d();
  Matrix c(second.outputs(), n1 + n2);
  c << second.d() * first.c(), second.c();
  return StateSpace(a, b, c, second.d() * first.d());
}

StateSpace parallel(const StateSpace& g1, const StateSpace& g2) {
  require(g1.inputs() == g2.inputs() && g1.outputs() == g2.outputs(), "parallel dimension mismatch");
  return StateSpace(block_diag(g1.a(), g2.a()), vstack(g1.b(), g2.b()), hstack(g1.c(), g2.c()),
                    g1.d() + g2.d());
}

StateSpace operator+(const StateSpace& g1, const StateSpace& g2) { return parallel(g1, g2); }

StateSpace operator-(const StateSpace& g1, const StateSpace& g2) { return parallel(g1, -1.0 * g2); }

StateSpace append(const StateSpace& g1, const StateSpace& g2) {
  return StateSpace(block_diag(g1.a(), g2.a()), block_diag(g1.b(), g2.b()),
                    block_diag(g1.c(), g2.c()), block_diag(g1.d(), g2.d()));
}

StateSpace stack_outputs(const StateSpace& g1, const StateSpace& g2) {
  require(g1.inputs() == g2.inputs(), "stack_outputs input mismatch");
  return StateSpace(block_diag(g1.a(), g2.a()), vstack(g1.b(), g2.b()), block_diag(g1.c(), g2.c()),
                    vstack(g1.d(), g2.d()));
}

StateSpace stack_inputs(const StateSpace& g1, const StateSpace& g2) {
  require(g1.outputs() == g2.outputs(), "stack_inputs output mismatch");
  return StateSpace(block_diag(g1.a(), g2.a()), block_diag(g1.b(), g2.b()), hstack(g1.c(), g2.c()),
                    hstack(g1.d(), g2.d()));
}

StateSpace select_outputs(const StateSpace& sys, int first, int count) {
  require(first >= 0 && count >= 0 && first + count <= sys.outputs(), "output selection range");
  return StateSpace(sys.a(), sys.b(), sys.c().middleRows(first, count),
                    sys.d().middleRows(first, count));
}

StateSpace select_inputs(const StateSpace& sys, int first, int count) {
  require(first >= 0 && count >= 0 && first + count <= sys.inputs(), "input selection range");
  return StateSpace(sys.a(), sys.b().middleCols(first, count), sys.c(),
                    sys.d().middleCols(first, count));
}

StateSpace interconnect(std::span<const StateSpace> parts, const Wiring& w) {
  StateSpace p;
  bool first = true;
  for (const auto& part : parts) {
    p = first ? part : append(p, part);
    first = false;
  }
  const int nu = p.inputs();
  const int ny = p.outputs();
  require(w.internal.rows() == nu && w.internal.cols() == ny, "wiring internal block");
  require(w.input.rows() == nu, "wiring input block rows");
  const auto nr = w.input.cols();
  require(w.output.cols() == ny && w.feedthrough.rows() == w.output.rows() &&
              w.feedthrough.cols() == nr,
          "wiring output blocks");
  // y = C x + D (Q y + R r)  ->  (I - D Q) y = C x + D R r
  const Matrix loop = Matrix::Identity(ny, ny) - p.d() * w.internal;
  Eigen::FullPivLU<Matrix> lu(loop);
  if (!lu.isInvertible() || lu.rcond() < 1e-12) {
    throw Error(ErrorCode::kIllPosedLoop, "I - D*Q is singular");
  }
  const Matrix yx = lu.solve(p.c());
  const Matrix yr = lu.solve(p.d() * w.input);
  const Matrix a = p.a() + p.b() * w.internal * yx;
  const Matrix b = p.b() * (w.internal * yr + w.input);
  const Matrix c = w.output * yx;
  const Matrix d = w.output * yr + w.feedthrough;
  return StateSpace(a, b, c, d);
}

StateSpace feedback(const StateSpace& g, const StateSpace& k, double sign) {
  require(k.inputs() == g.outputs() && k.outputs() == g.inputs(), "feedback dimension mismatch");
  const int gu = g.inputs();
  const int gy = g.outputs();
  const int ku = k.inputs();
  const int ky = k.outputs();
  // Parts: [G; K]; u_G = r + sign*y_K, u_K = y_G.
  Wiring w;
  w.internal = Matrix::Zero(gu + ku, gy + ky);
  w.internal.block(0, gy, gu, ky) = sign * Matrix::Identity(gu, ky);
  w.internal.block(gu, 0, ku, gy) = Matrix::Identity(ku, gy);
  w.input = Matrix::Zero(gu + ku, gu);
  w.input.topRows(gu) = Matrix::Identity(gu, gu);
  w.output = Matrix::Zero(gy, gy + ky);
  w.output.leftCols(gy) = Matrix::Identity(gy, gy);
  w.feedthrough = Matrix::Zero(gy, gu);
  const StateSpace parts[] = {g, k};
  return interconnect(parts, w);
}

StateSpace lft_upper(const StateSpace& g, const StateSpace& delta) {
  const int nw = delta.outputs();  // closes the first nw inputs of G
  const int nv = delta.inputs();   // driven by the first nv outputs of G
  require(nw <= g.inputs() && nv <= g.outputs(), "lft dimension mismatch");
  const int nd = g.inputs() - nw;
  const int ne = g.outputs() - nv;
  // Parts: [G; Δ]. u_G = [y_Δ; r], u_Δ = y_G(0:nv).
  Wiring w;
  w.internal = Matrix::Zero(g.inputs() + nv, g.outputs() + nw);
  w.internal.block(0, g.outputs(), nw, nw) = Matrix::Identity(nw, nw);
  w.internal.block(g.inputs(), 0, nv, nv) = Matrix::Identity(nv, nv);
  w.input = Matrix::Zero(g.inputs() + nv, nd);
  w.input.block(nw, 0, nd, nd) = Matrix::Identity(nd, nd);
  w.output = Matrix::Zero(ne, g.outputs() + nw);
  w.output.block(0, nv, ne, ne) = Matrix::Identity(ne, ne);
  w.feedthrough = Matrix::Zero(ne, nd);
  const StateSpace parts[] = {g, delta};
  return interconnect(parts, w);
}

StateSpace inverse(const StateSpace& sys) {
  require(sys.inputs() == sys.outputs(), "inverse needs a square system");
  Eigen::FullPivLU<Matrix> lu(sys.d());
  if (!lu.isInvertible()) throw Error(ErrorCode::kInvalidArgument, "D is singular; no proper inverse");
  const Matrix dinv = lu.inverse();
  return StateSpace(sys.a() - sys.b() * dinv * sys.c(), sys.b() * dinv, -dinv * sys.c(), dinv);
}

StableSplit stable_unstable_split(const StateSpace& sys, double margin) {
  const int n = sys.states();
  if (n == 0) {
    return {sys, StateSpace::zero(sys.outputs(), sys.inputs())};
  }
  if (imaginary_axis_distance(sys.a()) <= margin) {
    throw Error(ErrorCode::kImaginaryAxisPole, "pole within the stability margin of the jω axis");
  }
  const OrderedSchur schur = ordered_real_schur(sys.a());
  const int ns = schur.stable_count;
  const int nu = n - ns;
  const Matrix t11 = schur.t.topLeftCorner(ns, ns);
  const Matrix t12 = schur.t.topRightCorner(ns, nu);
  const Matrix t22 = schur.t.bottomRightCorner(nu, nu);
  // T11 X - X T22 = -T12 decouples the two diagonal blocks.
  const Matrix x = (ns > 0 && nu > 0) ? solve_sylvester(t11, -t22, -t12) : Matrix::Zero(ns, nu);
  Matrix w = Matrix::Identity(n, n);
  w.topRightCorner(ns, nu) = x;
  Matrix winv = Matrix::Identity(n, n);
  winv.topRightCorner(ns, nu) = -x;
  const Matrix bt = winv * schur.u.transpose() * sys.b();
  const Matrix ct = sys.c() * schur.u * w;
  StableSplit out{
      StateSpace(t11, bt.topRows(ns), ct.leftCols(ns), sys.d()),
      StateSpace(t22, bt.bottomRows(nu), ct.rightCols(nu),
                 Matrix::Zero(sys.outputs(), sys.inputs())),
  };
  return out;
}

StateSpace minimal_realization(const StateSpace& sys, double tol) {
  if (sys.states() == 0) return sys;
  const Matrix qc = krylov_basis(sys.a(), sys.b(), tol);
  StateSpace ctrb(qc.transpose() * sys.a() * qc, qc.transpose() * sys.b(), sys.c() * qc, sys.d());
  if (ctrb.states() == 0) return StateSpace::gain(sys.d());
  const Matrix qo = krylov_basis(ctrb.a().transpose(), ctrb.c().transpose(), tol);
  if (qo.cols() == 0) return StateSpace::gain(sys.d());
  return StateSpace(qo.transpose() * ctrb.a() * qo, qo.transpose() * ctrb.b(), ctrb.c() * qo,
                    ctrb.d());
}

StateSpace balanced_truncation(const StateSpace& sys, double tol) {
  if (sys.states() == 0) return sys;
  if (!sys.is_stable()) {
    throw Error(ErrorCode::kInvalidArgument, "balanced truncation needs a stable model");
  }
  const Matrix wc = solve_lyapunov(sys.a(), sys.b() * sys.b().transpose());
  const Matrix wo = solve_lyapunov(sys.a().transpose(), sys.c().transpose() * sys.c());
  const Matrix lc = psd_sqrt(wc);
  const Matrix lo = psd_sqrt(wo);
  Eigen::JacobiSVD<Matrix> svd(lo.transpose() * lc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector& hsv = svd.singularValues();
  const double smax = hsv.size() ? hsv(0) : 0.0;
  int r = 0;
  while (r < hsv.size() && hsv(r) > tol * smax) ++r;
  if (r == 0) return StateSpace::gain(sys.d());
  const Vector inv_sqrt = hsv.head(r).cwiseSqrt().cwiseInverse();
  const Matrix t = lc * svd.matrixV().leftCols(r) * inv_sqrt.asDiagonal();
  const Matrix tinv = inv_sqrt.asDiagonal() * svd.matrixU().leftCols(r).transpose() * lo.transpose();
  return StateSpace(tinv * sys.a() * t, tinv * sys.b(), sys.c() * t, sys.d());
}

double max_relative_gap(const StateSpace& g, const StateSpace& h, const FrequencyGrid& grid) {
  require(g.inputs() == h.inputs() && g.outputs() == h.outputs(), "gap dimension mismatch");
  double worst = 0.0;
  for (double w : grid) {
    const CMatrix gv = freq_response(g, w);
    const CMatrix hv = freq_response(h, w);
    worst = std::max(worst, (gv - hv).norm() / (1.0 + gv.norm()));
  }
  return worst;
}

}  // namespace delayiqc
