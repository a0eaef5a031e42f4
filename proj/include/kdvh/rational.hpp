#pragma once

#include <gmpxx.h>

#include <string>
#include <vector>

namespace kdvh {

using Rational = mpq_class;

// Canonicalized a/b; plain mpq_class(a, b) is not reduced.
Rational frac(long a, long b);

// "p/q" with q > 0 always present, so integers print as "3/1".
std::string to_fraction_string(const Rational& r);
// Accepts "p/q" or a bare integer "p".
Rational parse_rational(const std::string& text);
Rational binomial(long n, long k);
bool is_integer(const Rational& r);

// Polynomial in the Sobolev index s with rational coefficients.  Binomial
// weights C(s, m) and everything built from them live here.
class SPoly {
 public:
  SPoly() = default;
  SPoly(const Rational& c);  // NOLINT: constants convert implicitly
  SPoly(long c) : SPoly(Rational(c)) {}  // NOLINT
  static SPoly s();
  // C(s + shift, m) as a polynomial of degree m.
  static SPoly binomial_s(long shift, int m);

  int degree() const { return static_cast<int>(c_.size()) - 1; }  // -1 for zero
  bool is_zero() const { return c_.empty(); }
  const std::vector<Rational>& coeffs() const { return c_; }
  Rational coeff(int n) const;
  bool is_constant() const { return c_.size() <= 1; }

  Rational eval(const Rational& s) const;
  double eval(double s) const;

  SPoly& operator+=(const SPoly& o);
  SPoly& operator-=(const SPoly& o);
  SPoly& operator*=(const SPoly& o);
  SPoly& operator*=(const Rational& r);
  friend SPoly operator+(SPoly a, const SPoly& b) { return a += b; }
  friend SPoly operator-(SPoly a, const SPoly& b) { return a -= b; }
  friend SPoly operator*(SPoly a, const SPoly& b) { return a *= b; }
  friend SPoly operator*(SPoly a, const Rational& r) { return a *= r; }
  SPoly operator-() const;
  friend bool operator==(const SPoly& a, const SPoly& b) { return a.c_ == b.c_; }

  std::string to_string() const;
  // Coefficient array, lowest power first, each entry "p/q".
  std::vector<std::string> to_strings() const;

 private:
  void trim();
  std::vector<Rational> c_;
};

}  // namespace kdvh
