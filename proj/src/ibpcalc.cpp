#include "kdvh/ibpcalc.hpp"

#include <map>
#include <mutex>
#include <stdexcept>

namespace kdvh {

namespace {

// Integrating ∂^{2l+1} off w and pairing the terms ∂^j f ∂^{2l+1-j} g with
// their mirror images gives
//   I_{2l+1}(w,f,g) = Σ_j C(2l+1,j) [∫∂^{2(l-j)+1}w f_j g_j - I_{2(l-j)+1}(w,f_j,g_j)],
// and each inner I is expanded by the same rule one level down.
std::vector<Rational> expand(int l, std::map<int, std::vector<Rational>>& memo) {
  auto it = memo.find(l);
  if (it != memo.end()) return it->second;
  std::vector<Rational> a(l);
  for (int j = 1; j <= l; ++j) {
    const Rational c = binomial(2 * l + 1, j);
    a[j - 1] += c;
    if (l - j == 0) continue;  // I_1 = 0
    const auto inner = expand(l - j, memo);
    for (int i = 1; i <= l - j; ++i) a[j + i - 1] -= c * inner[i - 1];
  }
  memo.emplace(l, a);
  return a;
}

}  // namespace

AlphaTable alpha_coeffs(int l) {
  if (l < 1) throw std::invalid_argument("alpha table needs l >= 1");
  static std::mutex mu;
  static std::map<int, std::vector<Rational>> memo;
  std::lock_guard<std::mutex> lock(mu);
  return {l, expand(l, memo)};
}

DiffPoly triple_integrand(int l, const std::string& w, const std::string& f, const std::string& g) {
  const int n = 2 * l + 1;
  DiffPoly p;
  p.add_term({{w, n}, {f, 0}, {g, 0}}, 1);
  p.add_term({{w, 0}, {f, n}, {g, 0}}, 1);
  p.add_term({{w, 0}, {f, 0}, {g, n}}, 1);
  return p;
}

IntegralIdentity reduce_integral(int l) {
  if (l < 0) throw std::invalid_argument("level must be nonnegative");
  IntegralIdentity id;
  id.l = l;
  id.lhs = IntegralExpr::of(triple_integrand(l));
  DiffPoly rhs;
  if (l >= 1) {
    const AlphaTable t = alpha_coeffs(l);
    for (int j = 1; j <= l; ++j) rhs.add_term({{"w", 2 * (l - j) + 1}, {"f", j}, {"g", j}}, t.alpha(j));
  }
  id.rhs = IntegralExpr::of(rhs);
  return id;
}

bool verify_identity(int l) {
  const IntegralIdentity id = reduce_integral(l);
  return is_exact(id.lhs.integrand - id.rhs.integrand);
}

}  // namespace kdvh
