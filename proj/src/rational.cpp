#include "kdvh/rational.hpp"

#include <stdexcept>

namespace kdvh {

Rational frac(long a, long b) {
  Rational r(a, b);
  r.canonicalize();
  return r;
}

std::string to_fraction_string(const Rational& r) {
  return r.get_num().get_str() + "/" + r.get_den().get_str();
}

Rational parse_rational(const std::string& text) {
  Rational r;
  if (r.set_str(text, 10) != 0) throw std::invalid_argument("bad rational: " + text);
  if (r.get_den() == 0) throw std::invalid_argument("zero denominator: " + text);
  r.canonicalize();
  return r;
}

Rational binomial(long n, long k) {
  if (k < 0 || k > n) return 0;
  mpz_class b;
  mpz_bin_uiui(b.get_mpz_t(), static_cast<unsigned long>(n), static_cast<unsigned long>(k));
  return Rational(b);
}

bool is_integer(const Rational& r) { return r.get_den() == 1; }

SPoly::SPoly(const Rational& c) {
  if (c != 0) c_.push_back(c);
}

SPoly SPoly::s() {
  SPoly p;
  p.c_ = {Rational(0), Rational(1)};
  return p;
}

SPoly SPoly::binomial_s(long shift, int m) {
  SPoly out(1);
  for (int i = 0; i < m; ++i) {
    SPoly factor = s();
    factor += SPoly(Rational(shift - i));
    out *= factor;
    out *= Rational(1, i + 1);
  }
  return out;
}

Rational SPoly::coeff(int n) const {
  if (n < 0 || n >= static_cast<int>(c_.size())) return 0;
  return c_[n];
}

Rational SPoly::eval(const Rational& s) const {
  Rational acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + *it;
  return acc;
}

double SPoly::eval(double s) const {
  double acc = 0;
  for (auto it = c_.rbegin(); it != c_.rend(); ++it) acc = acc * s + it->get_d();
  return acc;
}

void SPoly::trim() {
  while (!c_.empty() && c_.back() == 0) c_.pop_back();
}

SPoly& SPoly::operator+=(const SPoly& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (size_t i = 0; i < o.c_.size(); ++i) c_[i] += o.c_[i];
  trim();
  return *this;
}

SPoly& SPoly::operator-=(const SPoly& o) {
  if (o.c_.size() > c_.size()) c_.resize(o.c_.size());
  for (size_t i = 0; i < o.c_.size(); ++i) c_[i] -= o.c_[i];
  trim();
  return *this;
}

SPoly& SPoly::operator*=(const SPoly& o) {
  if (c_.empty() || o.c_.empty()) {
    c_.clear();
    return *this;
  }
  std::vector<Rational> out(c_.size() + o.c_.size() - 1);
  for (size_t i = 0; i < c_.size(); ++i)
    for (size_t j = 0; j < o.c_.size(); ++j) out[i + j] += c_[i] * o.c_[j];
  c_ = std::move(out);
  trim();
  return *this;
}

SPoly& SPoly::operator*=(const Rational& r) {
  for (auto& c : c_) c *= r;
  trim();
  return *this;
}

SPoly SPoly::operator-() const {
  SPoly p = *this;
  for (auto& c : p.c_) c = -c;
  return p;
}

std::string SPoly::to_string() const {
  if (c_.empty()) return "0";
  std::string out;
  for (int n = degree(); n >= 0; --n) {
    const Rational& c = c_[n];
    if (c == 0) continue;
    Rational mag = abs(c);
    if (out.empty()) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    bool unit = mag == 1 && n > 0;
    if (!unit) out += mag.get_str();
    if (n > 0) {
      if (!unit) out += "*";
      out += "s";
      if (n > 1) out += "^" + std::to_string(n);
    }
  }
  return out;
}

std::vector<std::string> SPoly::to_strings() const {
  std::vector<std::string> out;
  for (const auto& c : c_) out.push_back(to_fraction_string(c));
  return out;
}

}  // namespace kdvh
