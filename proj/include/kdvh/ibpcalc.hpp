#pragma once

#include <vector>

#include "kdvh/diffpoly.hpp"

namespace kdvh {

// alphas[j-1] = α_{j,l}:
//   I_{2l+1}(w,f,g) = Σ_{j=1..l} α_{j,l} ∫ ∂^{2(l-j)+1}w ∂^j f ∂^j g.
struct AlphaTable {
  int l = 0;
  std::vector<Rational> alphas;
  const Rational& alpha(int j) const { return alphas.at(j - 1); }
  const Rational& diagonal() const { return alphas.back(); }
};

AlphaTable alpha_coeffs(int l);

// I_{2l+1}(w,f,g) = ∫ (∂^{2l+1}w f g + w ∂^{2l+1}f g + w f ∂^{2l+1}g).
DiffPoly triple_integrand(int l, const std::string& w = "w", const std::string& f = "f",
                          const std::string& g = "g");

struct IntegralIdentity {
  int l = 0;
  IntegralExpr lhs;
  IntegralExpr rhs;
};

IntegralIdentity reduce_integral(int l);
// Certifies the identity at level l with the Euler operator, independently of
// the recursion that produced the α table.
bool verify_identity(int l);

}  // namespace kdvh
