#include <doctest.h>

#include "kdvh/ibpcalc.hpp"

using namespace kdvh;

TEST_CASE("alpha tables") {
  CHECK(alpha_coeffs(1).alphas == std::vector<Rational>{3});
  CHECK(alpha_coeffs(2).alphas == std::vector<Rational>{5, -5});
  CHECK(alpha_coeffs(12).diagonal() == -25);
  for (int l = 1; l <= 12; ++l) {
    auto t = alpha_coeffs(l);
    CHECK(t.diagonal() == Rational((l % 2 ? 1 : -1) * (2 * l + 1)));
    for (const auto& a : t.alphas) CHECK(is_integer(a));
  }
}

TEST_CASE("first alpha is the binomial 2l+1") {
  // Only the first-step term reaches ∫∂^{2l-1}w f' g'.
  for (int l = 1; l <= 8; ++l) CHECK(alpha_coeffs(l).alpha(1) == 2 * l + 1);
}

TEST_CASE("reduced identities") {
  CHECK(reduce_integral(0).rhs.integrand.is_zero());
  CHECK(reduce_integral(0).lhs.canonical.is_zero());
  CHECK(reduce_integral(1).rhs.integrand == DiffPoly::monomial(3, {{"w", 1}, {"f", 1}, {"g", 1}}));
  DiffPoly l2 = DiffPoly::monomial(5, {{"w", 3}, {"f", 1}, {"g", 1}}) -
                DiffPoly::monomial(5, {{"w", 1}, {"f", 2}, {"g", 2}});
  CHECK(reduce_integral(2).rhs.integrand == l2);
  for (int l = 0; l <= 4; ++l) {
    auto id = reduce_integral(l);
    CHECK(id.lhs.same_functional(id.rhs));
  }
}

TEST_CASE("euler certification") {
  for (int l = 0; l <= 6; ++l) CHECK(verify_identity(l));
}

TEST_CASE("a perturbed table is rejected by the oracle") {
  auto id = reduce_integral(3);
  DiffPoly wrong = id.rhs.integrand + DiffPoly::monomial(1, {{"w", 1}, {"f", 3}, {"g", 3}});
  CHECK_FALSE(is_exact(id.lhs.integrand - wrong));
}
