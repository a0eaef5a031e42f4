#pragma once

#include <compare>
#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "kdvh/rational.hpp"

namespace kdvh {

// One factor ∂_x^order(symbol).
struct Factor {
  std::string symbol;
  int order = 0;
  auto operator<=>(const Factor&) const = default;
};

// Always kept sorted by (symbol, order).
using FactorList = std::vector<Factor>;

int degree_of(const FactorList& f);
int weight_of(const FactorList& f);
FactorList sorted_factors(FactorList f);

struct DiffMonomial {
  Rational coeff;
  FactorList factors;
  int degree() const { return degree_of(factors); }
  int weight() const { return weight_of(factors); }
};

class DiffPoly {
 public:
  using TermMap = std::map<FactorList, Rational>;

  DiffPoly() = default;
  static DiffPoly constant(const Rational& c);
  static DiffPoly var(const std::string& symbol, int order = 0);
  static DiffPoly monomial(const Rational& c, FactorList factors);

  // Adds c times the monomial; factors need not be sorted.
  void add_term(FactorList factors, const Rational& c);

  const TermMap& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }
  size_t size() const { return terms_.size(); }
  Rational coefficient(const FactorList& factors) const;
  Rational constant_term() const { return coefficient({}); }
  std::set<std::string> symbols() const;
  int max_order() const;  // -1 for the zero polynomial
  int max_degree() const;
  DiffPoly homogeneous_part(int degree) const;

  // Deterministic display order: by degree, then highest orders first.
  std::vector<DiffMonomial> monomials() const;

  DiffPoly& operator+=(const DiffPoly& o);
  DiffPoly& operator-=(const DiffPoly& o);
  DiffPoly& operator*=(const Rational& r);
  friend DiffPoly operator+(DiffPoly a, const DiffPoly& b) { return a += b; }
  friend DiffPoly operator-(DiffPoly a, const DiffPoly& b) { return a -= b; }
  friend DiffPoly operator*(DiffPoly a, const Rational& r) { return a *= r; }
  friend DiffPoly operator*(const Rational& r, DiffPoly a) { return a *= r; }
  friend DiffPoly operator*(const DiffPoly& a, const DiffPoly& b);
  DiffPoly operator-() const;
  friend bool operator==(const DiffPoly& a, const DiffPoly& b) { return a.terms_ == b.terms_; }

 private:
  TermMap terms_;
};

DiffPoly multiply(const DiffPoly& p, const DiffPoly& q);
DiffPoly total_derivative(const DiffPoly& p);
DiffPoly total_derivative(const DiffPoly& p, int times);
// ∂p/∂(factor) treating each jet coordinate as an independent variable.
DiffPoly partial(const DiffPoly& p, const Factor& f);
DiffPoly euler_operator(const DiffPoly& p, const std::string& symbol);
bool is_exact(const DiffPoly& p);
// Throws NotExact when p is not a total derivative.
DiffPoly integrate_exact(const DiffPoly& p);
// d/dt p when symbol evolves by symbol_t = rhs.
DiffPoly evolution_derivative(const DiffPoly& p, const std::string& symbol, const DiffPoly& rhs);
// Raises the order of every factor of `symbol` by `shift`.
DiffPoly shift_symbol(const DiffPoly& p, const std::string& symbol, int shift);
// Replaces every factor of `from` by the same order of `to`.
DiffPoly rename_symbol(const DiffPoly& p, const std::string& from, const std::string& to);

Rational rank_of(const DiffMonomial& m);

// Ordering used to pick the canonical representative modulo total
// derivatives: monomials with the larger key are rewritten away first.
struct MonomialOrder {
  std::string name;
  std::function<std::vector<long>(const FactorList&)> key;
  static const MonomialOrder& lowest_max_order();
};

DiffPoly ibp_normal_form(const DiffPoly& p, const MonomialOrder& order = MonomialOrder::lowest_max_order());

// A functional ∫p dx.
struct IntegralExpr {
  DiffPoly integrand;
  DiffPoly canonical;
  static IntegralExpr of(const DiffPoly& p);
  bool same_functional(const IntegralExpr& o) const { return canonical == o.canonical; }
};

inline DiffPoly ibp_normal_form(const IntegralExpr& e) { return e.canonical; }

IntegralExpr homotopy_hamiltonian(const DiffPoly& G, const std::string& symbol = "u");

nlohmann::json to_json(const DiffPoly& p);
DiffPoly diffpoly_from_json(const nlohmann::json& j);
std::string to_latex(const DiffPoly& p);
std::string to_string(const DiffPoly& p);

}  // namespace kdvh
