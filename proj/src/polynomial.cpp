#include "delayiqc/polynomial.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <numeric>

#include "delayiqc/error.hpp"

namespace delayiqc {

int degree(const Monomial& m) { return std::accumulate(m.begin(), m.end(), 0); }

Monomial operator+(const Monomial& a, const Monomial& b) {
  Monomial out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Polynomial Polynomial::constant(int nvars, double c) {
  Polynomial p(nvars);
  p.add_term(Monomial(nvars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int nvars, int i) {
  Monomial m(nvars, 0);
  m.at(i) = 1;
  return monomial(m);
}

Polynomial Polynomial::monomial(const Monomial& m, double c) {
  Polynomial p(static_cast<int>(m.size()));
  p.add_term(m, c);
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, delayiqc::degree(m));
  return d;
}

int Polynomial::degree_in(int i) const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, m[i]);
  return d;
}

double Polynomial::coefficient(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  if (static_cast<int>(m.size()) != nvars_) {
    throw Error(ErrorCode::kDimensionMismatch, "monomial has the wrong number of variables");
  }
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0.0) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& o) {
  if (o.nvars_ != nvars_) throw Error(ErrorCode::kDimensionMismatch, "polynomial variable counts differ");
  for (const auto& [m, c] : o.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& o) {
  if (o.nvars_ != nvars_) throw Error(ErrorCode::kDimensionMismatch, "polynomial variable counts differ");
  for (const auto& [m, c] : o.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double k) {
  if (k == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= k;
  return *this;
}

Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
Polynomial operator-(Polynomial a) { return a *= -1.0; }
Polynomial operator*(double k, Polynomial a) { return a *= k; }

Polynomial operator*(const Polynomial& a, const Polynomial& b) {
  if (a.nvars() != b.nvars()) throw Error(ErrorCode::kDimensionMismatch, "polynomial variable counts differ");
  Polynomial out(a.nvars());
  for (const auto& [ma, ca] : a.terms()) {
    for (const auto& [mb, cb] : b.terms()) out.add_term(ma + mb, ca * cb);
  }
  return out;
}

Polynomial Polynomial::derivative(int i) const {
  Polynomial out(nvars_);
  for (const auto& [m, c] : terms_) {
    if (m[i] == 0) continue;
    Monomial d = m;
    --d[i];
    out.add_term(d, c * m[i]);
  }
  return out;
}

double Polynomial::evaluate(const Vector& x) const {
  double s = 0.0;
  for (const auto& [m, c] : terms_) {
    double t = c;
    for (int i = 0; i < nvars_; ++i) {
      if (m[i] > 0) t *= std::pow(x(i), m[i]);
    }
    s += t;
  }
  return s;
}

Polynomial Polynomial::compose(const std::vector<Polynomial>& subs) const {
  if (static_cast<int>(subs.size()) != nvars_) {
    throw Error(ErrorCode::kDimensionMismatch, "one substitution per variable");
  }
  const int n = subs.empty() ? 0 : subs.front().nvars();
  Polynomial out(n);
  for (const auto& [m, c] : terms_) {
    Polynomial t = Polynomial::constant(n, c);
    for (int i = 0; i < nvars_; ++i) {
      for (int k = 0; k < m[i]; ++k) t = t * subs[i];
    }
    out += t;
  }
  return out;
}

Polynomial Polynomial::embed(int new_nvars, const std::vector<int>& new_index) const {
  Polynomial out(new_nvars);
  for (const auto& [m, c] : terms_) {
    Monomial e(new_nvars, 0);
    for (int i = 0; i < nvars_; ++i) e.at(new_index.at(i)) += m[i];
    out.add_term(e, c);
  }
  return out;
}

std::string Polynomial::to_string(const std::vector<std::string>& names) const {
  if (terms_.empty()) return "0";
  std::string out;
  char buf[64];
  for (const auto& [m, c] : terms_) {
    std::snprintf(buf, sizeof buf, "%.17g", std::abs(c));
    out += out.empty() ? (c < 0 ? "-" : "") : (c < 0 ? " - " : " + ");
    std::string body;
    for (int i = 0; i < nvars_; ++i) {
      if (m[i] == 0) continue;
      if (!body.empty()) body += "*";
      body += names.at(i);
      if (m[i] > 1) body += "^" + std::to_string(m[i]);
    }
    if (body.empty()) {
      out += buf;
    } else if (std::abs(c) == 1.0) {
      out += body;
    } else {
      out += std::string(buf) + "*" + body;
    }
  }
  return out;
}

Polynomial linear_form(int nvars, const Matrix& row, int first) {
  Polynomial p(nvars);
  for (int j = 0; j < row.size(); ++j) {
    Monomial m(nvars, 0);
    m.at(first + j) = 1;
    p.add_term(m, row(j));
  }
  return p;
}

namespace {

class Parser {
 public:
  Parser(const std::string& text, const std::vector<std::string>& names) : s_(text), names_(names) {}

  Polynomial parse() {
    Polynomial out(static_cast<int>(names_.size()));
    skip();
    if (pos_ == s_.size()) fail("empty polynomial");
    bool first = true;
    while (pos_ < s_.size()) {
      double sign = 1.0;
      if (peek() == '+' || peek() == '-') {
        sign = peek() == '-' ? -1.0 : 1.0;
        ++pos_;
        skip();
      } else if (!first) {
        fail("expected '+' or '-'");
      }
      out += sign * term();
      first = false;
      skip();
    }
    return out;
  }

 private:
  Polynomial term() {
    Polynomial t = factor();
    skip();
    while (peek() == '*') {
      ++pos_;
      skip();
      t = t * factor();
      skip();
    }
    return t;
  }

  Polynomial factor() {
    const int n = static_cast<int>(names_.size());
    if (std::isdigit(static_cast<unsigned char>(peek())) || peek() == '.') {
      const char* begin = s_.c_str() + pos_;
      char* end = nullptr;
      const double v = std::strtod(begin, &end);
      if (end == begin) fail("bad number");
      pos_ += static_cast<std::size_t>(end - begin);
      return Polynomial::constant(n, v);
    }
    std::size_t start = pos_;
    while (pos_ < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_')) ++pos_;
    if (start == pos_) fail("expected a number or a variable");
    const std::string name = s_.substr(start, pos_ - start);
    int index = -1;
    for (int i = 0; i < n; ++i) {
      if (names_[i] == name) index = i;
    }
    if (index < 0) {
      pos_ = start;
      fail("unknown variable '" + name + "'");
    }
    int power = 1;
    skip();
    if (peek() == '^') {
      ++pos_;
      skip();
      std::size_t ps = pos_;
      while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
      if (ps == pos_) fail("expected an integer exponent");
      power = std::stoi(s_.substr(ps, pos_ - ps));
    }
    Monomial m(n, 0);
    m[index] = power;
    return Polynomial::monomial(m);
  }

  char peek() const { return pos_ < s_.size() ? s_[pos_] : '\0'; }
  void skip() {
    while (pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]))) ++pos_;
  }
  [[noreturn]] void fail(const std::string& what) const {
    throw Error(ErrorCode::kConfig, what + " at column " + std::to_string(pos_ + 1) + " of '" + s_ + "'");
  }

  const std::string& s_;
  const std::vector<std::string>& names_;
  std::size_t pos_ = 0;
};

void graded(int n, int deg, int var, Monomial& cur, std::vector<Monomial>& out) {
  if (var == n - 1) {
    cur[var] = deg;
    out.push_back(cur);
    cur[var] = 0;
    return;
  }
  for (int k = deg; k >= 0; --k) {
    cur[var] = k;
    graded(n, deg - k, var + 1, cur, out);
  }
  cur[var] = 0;
}

}  // namespace

Polynomial parse_polynomial(const std::string& text, const std::vector<std::string>& names) {
  return Parser(text, names).parse();
}

std::vector<Monomial> monomials_up_to(int n, int lo, int hi) {
  std::vector<Monomial> out;
  if (n == 0) {
    if (lo <= 0 && hi >= 0) out.emplace_back();
    return out;
  }
  Monomial cur(n, 0);
  for (int d = std::max(0, lo); d <= hi; ++d) graded(n, d, 0, cur, out);
  return out;
}

int PolynomialSystem::degree() const {
  int d = 0;
  for (const auto* v : {&f, &h1, &h2}) {
    for (const Polynomial& p : *v) d = std::max(d, p.degree());
  }
  return d;
}

void PolynomialSystem::validate() const {
  const int n = nvars();
  if (static_cast<int>(f.size()) != nx || static_cast<int>(h1.size()) != nw) {
    throw Error(ErrorCode::kDimensionMismatch, "polynomial system: one equation per state and channel");
  }
  for (const auto* v : {&f, &h1, &h2}) {
    for (const Polynomial& p : *v) {
      if (p.nvars() != n) throw Error(ErrorCode::kDimensionMismatch, "polynomial system: variable count");
    }
  }
  if (!names.empty() && static_cast<int>(names.size()) != n) {
    throw Error(ErrorCode::kDimensionMismatch, "polynomial system: one name per variable");
  }
  const Monomial zero(n, 0);
  for (const Polynomial& p : f) {
    if (p.coefficient(zero) != 0.0) {
      throw Error(ErrorCode::kInvalidArgument, "the origin must be an equilibrium");
    }
  }
}

std::vector<std::string> default_names(int nx, int nw, int nd) {
  std::vector<std::string> names;
  for (int i = 1; i <= nx; ++i) names.push_back("x" + std::to_string(i));
  for (int i = 1; i <= nw; ++i) names.push_back("w" + std::to_string(i));
  for (int i = 1; i <= nd; ++i) names.push_back("d" + std::to_string(i));
  return names;
}

PolynomialSystem from_state_space(const StateSpace& g, int nv) {
  PolynomialSystem s;
  s.nx = g.states();
  s.nw = nv;
  s.nd = g.inputs() - nv;
  const int n = s.nvars();
  Matrix ab(g.states(), n);
  ab << g.a(), g.b();
  Matrix cd(g.outputs(), n);
  cd << g.c(), g.d();
  for (int i = 0; i < s.nx; ++i) s.f.push_back(linear_form(n, ab.row(i)));
  for (int i = 0; i < g.outputs(); ++i) {
    (i < nv ? s.h1 : s.h2).push_back(linear_form(n, cd.row(i)));
  }
  s.names = default_names(s.nx, s.nw, s.nd);
  return s;
}

}  // namespace delayiqc
