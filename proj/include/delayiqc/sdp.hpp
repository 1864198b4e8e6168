#pragma once

#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "delayiqc/linalg.hpp"

namespace delayiqc::sdp {

// Problems are stated over free scalars, nonnegative scalars and symmetric
// PSD matrix variables, with affine equalities, affine inequalities and
// linear matrix inequalities, and a linear objective to minimize.
//
// A PSD entry variable (block, r, c) with r <= c denotes the single matrix
// entry Y_rc; a coefficient v on it contributes v * Y_rc once.
//
// The solver works on the conic dual of this statement, so the matrix
// inequalities hold exactly at every interior iterate.

enum class VarKind { kFree, kLp, kPsd };

struct Var {
  VarKind kind = VarKind::kFree;
  int index = 0;  // variable index, or block index for kPsd
  int row = 0;
  int col = 0;
  friend bool operator<(const Var& a, const Var& b) {
    return std::tie(a.kind, a.index, a.row, a.col) < std::tie(b.kind, b.index, b.row, b.col);
  }
  friend bool operator==(const Var& a, const Var& b) = default;
};

/// Affine scalar expression constant + Σ coef * var.
struct LinExpr {
  double constant = 0.0;
  std::vector<std::pair<Var, double>> terms;

  LinExpr() = default;
  LinExpr(double c) : constant(c) {}  // NOLINT: implicit by design
  LinExpr(Var v, double coef = 1.0) { terms.emplace_back(v, coef); }

  LinExpr& add(Var v, double coef) {
    if (coef != 0.0) terms.emplace_back(v, coef);
    return *this;
  }
  LinExpr& operator+=(const LinExpr& o);
  LinExpr& operator-=(const LinExpr& o);
  LinExpr& operator*=(double k);
  /// Sorts and merges duplicate variables, dropping zeros.
  void compress();
};

LinExpr operator+(LinExpr a, const LinExpr& b);
LinExpr operator-(LinExpr a, const LinExpr& b);
LinExpr operator*(double k, LinExpr a);

/// Symmetric matrix of affine expressions (upper triangle stored).
class SymExpr {
 public:
  explicit SymExpr(int n = 0) : n_(n), upper_(static_cast<std::size_t>(n) * (n + 1) / 2) {}
  int size() const { return n_; }
  LinExpr& at(int r, int c);
  const LinExpr& at(int r, int c) const;
  /// this += k * m for a constant symmetric matrix m placed at (r0, r0).
  void add_constant(const Matrix& m, int r0 = 0, double k = 1.0);

 private:
  std::size_t index(int r, int c) const;
  int n_;
  std::vector<LinExpr> upper_;
};

class Problem {
 public:
  Var add_free();
  Var add_lp();
  /// Adds an n x n PSD block and returns its index.
  int add_psd(int n);
  static Var psd(int block, int r, int c);

  /// expr == 0
  void add_equality(LinExpr expr);
  /// expr >= 0
  void add_nonnegative(LinExpr expr);
  /// F >= 0. Returns the index of the inequality.
  int add_lmi(const SymExpr& f);
  void minimize(LinExpr objective);

  int free_count() const { return free_count_; }
  int lp_count() const { return lp_count_; }
  const std::vector<int>& psd_sizes() const { return psd_sizes_; }
  const std::vector<LinExpr>& equalities() const { return equalities_; }
  const std::vector<LinExpr>& inequalities() const { return inequalities_; }
  const std::vector<SymExpr>& lmis() const { return lmis_; }
  const LinExpr& objective() const { return objective_; }

 private:
  int free_count_ = 0;
  int lp_count_ = 0;
  std::vector<int> psd_sizes_;
  std::vector<LinExpr> equalities_;
  std::vector<LinExpr> inequalities_;
  std::vector<SymExpr> lmis_;
  LinExpr objective_;
};

struct Options {
  double gap_tol = 1e-8;
  double feas_tol = 1e-9;
  int max_iterations = 120;
  bool verbose = false;
};

enum class Status { kOptimal, kNearOptimal, kFailed };
std::string to_string(Status s);

struct Solution {
  Status status = Status::kFailed;
  double primal_objective = 0.0;
  double dual_objective = 0.0;
  double relative_gap = 0.0;
  double primal_infeasibility = 0.0;
  double dual_infeasibility = 0.0;
  int iterations = 0;
  Vector free;
  Vector lp;
  std::vector<Matrix> psd;
  Vector y;  // equality multipliers

  double value(const Var& v) const;
  double value(const LinExpr& e) const;
  Matrix value(const SymExpr& e) const;
  bool ok() const { return status != Status::kFailed; }
};

/// Solver backend interface; any conic solver with PSD support can implement it.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual Solution solve(const Problem& problem, const Options& options) const = 0;
};

/// Primal-dual interior point method: HKM search direction, Mehrotra
/// predictor-corrector, infeasible start.
class InteriorPoint final : public Backend {
 public:
  Solution solve(const Problem& problem, const Options& options) const override;
};

/// Default backend instance.
const Backend& default_backend();

}  // namespace delayiqc::sdp
