#pragma once

#include <map>
#include <string>
#include <vector>

#include "delayiqc/lti.hpp"

namespace delayiqc {

/// Exponent vector, one entry per indeterminate.
using Monomial = std::vector<int>;

int degree(const Monomial& m);
Monomial operator+(const Monomial& a, const Monomial& b);

/// Sparse real polynomial in a fixed number of indeterminates. Terms are kept
/// sorted by exponent with no zero coefficients.
class Polynomial {
 public:
  explicit Polynomial(int nvars = 0) : nvars_(nvars) {}

  static Polynomial constant(int nvars, double c);
  static Polynomial variable(int nvars, int i);
  static Polynomial monomial(const Monomial& m, double c = 1.0);

  int nvars() const { return nvars_; }
  const std::map<Monomial, double>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;
  /// Largest exponent of variable i.
  int degree_in(int i) const;
  double coefficient(const Monomial& m) const;

  void add_term(const Monomial& m, double c);
  Polynomial& operator+=(const Polynomial& o);
  Polynomial& operator-=(const Polynomial& o);
  Polynomial& operator*=(double k);

  Polynomial derivative(int i) const;
  double evaluate(const Vector& x) const;
  /// Substitutes polynomials (all in the same new variable set) for each variable.
  Polynomial compose(const std::vector<Polynomial>& subs) const;
  /// Renames variable i to new_index[i] in a space of new_nvars variables.
  Polynomial embed(int new_nvars, const std::vector<int>& new_index) const;

  std::string to_string(const std::vector<std::string>& names) const;

 private:
  int nvars_;
  std::map<Monomial, double> terms_;
};

Polynomial operator+(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a, const Polynomial& b);
Polynomial operator-(Polynomial a);
Polynomial operator*(const Polynomial& a, const Polynomial& b);
Polynomial operator*(double k, Polynomial a);

/// Linear form Σ row(j) x_j over nvars variables, offset by `first`.
Polynomial linear_form(int nvars, const Matrix& row, int first = 0);

/// Parses text such as "-49*x1 + 2*x1^2 - 0.2*x1^3 + 8*w" over the given
/// variable names. Throws ConfigError with the offending position.
Polynomial parse_polynomial(const std::string& text, const std::vector<std::string>& names);

/// All monomials of total degree in [lo, hi] over n variables, graded order.
std::vector<Monomial> monomials_up_to(int n, int lo, int hi);

/// Polynomial plant x' = f(x, w, d), v = h1(x, w, d), e = h2(x, w, d) with
/// indeterminates ordered (x, w, d).
struct PolynomialSystem {
  int nx = 0;
  int nw = 0;
  int nd = 0;
  std::vector<Polynomial> f;
  std::vector<Polynomial> h1;
  std::vector<Polynomial> h2;
  std::vector<std::string> names;

  int nvars() const { return nx + nw + nd; }
  int degree() const;
  /// Checks dimensions and f(0, 0, 0) = 0.
  void validate() const;
};

/// Linear system (inputs (w, d), outputs (v, e), first nv channels delayed)
/// as a polynomial system.
PolynomialSystem from_state_space(const StateSpace& g, int nv);

/// Default names x1.., w1.., d1...
std::vector<std::string> default_names(int nx, int nw, int nd);

}  // namespace delayiqc
