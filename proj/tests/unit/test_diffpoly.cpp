#include <doctest.h>

#include <random>

#include "../support/random_poly.hpp"
#include "kdvh/diffpoly.hpp"
#include "kdvh/errors.hpp"

using namespace kdvh;

namespace {

DiffPoly u(int n = 0) { return DiffPoly::var("u", n); }
Rational q(long a, long b = 1) { return frac(a, b); }

}  // namespace

TEST_CASE("total derivative follows the Leibniz rule") {
  CHECK(total_derivative(u() * u(1)) == u(1) * u(1) + u() * u(2));
  CHECK(total_derivative(DiffPoly()).is_zero());
  CHECK(total_derivative(DiffPoly::constant(5)).is_zero());
  CHECK(total_derivative(u() * u() * u()) == q(3) * (u() * u() * u(1)));
}

TEST_CASE("multiply merges like terms") {
  CHECK(multiply(u(), u(1)) == DiffPoly::monomial(1, {{"u", 0}, {"u", 1}}));
  CHECK(multiply(u() + u(1), u() - u(1)) == u() * u() - u(1) * u(1));
  CHECK(multiply(q(1, 2) * (u() * u()), DiffPoly::constant(2)) == u() * u());
}

TEST_CASE("euler operator") {
  CHECK(euler_operator(u(1) * u(1), "u") == q(-2) * u(2));
  CHECK(euler_operator(u() * u(2) + u(1) * u(1), "u").is_zero());
  CHECK(euler_operator(u() * u() * u(), "u") == q(3) * (u() * u()));
}

TEST_CASE("exactness") {
  CHECK(is_exact(u(1) * u(1) + u() * u(2)));
  CHECK(is_exact(u() * u(1)));
  CHECK_FALSE(is_exact(u() * u()));
  CHECK_FALSE(is_exact(DiffPoly::constant(1)));
}

TEST_CASE("integrate_exact") {
  CHECK(integrate_exact(q(3) * (u(1) * u(2))) == q(3, 2) * (u(1) * u(1)));
  CHECK(integrate_exact(u(1) * u(1) + u() * u(2)) == u() * u(1));
  DiffPoly fifth = u(5) + q(10, 3) * (u(1) * u(2)) + q(5, 3) * (u() * u(3)) + q(5, 6) * (u() * u() * u(1));
  DiffPoly g2 = u(4) + q(5, 3) * (u() * u(2)) + q(5, 6) * (u(1) * u(1)) + q(5, 18) * (u() * u() * u());
  CHECK(integrate_exact(fifth) == g2);
  CHECK_THROWS_AS(integrate_exact(u() * u()), NotExact);
  CHECK_THROWS_AS(integrate_exact(u(2) * u(2)), NotExact);
  CHECK_THROWS_AS(integrate_exact(u(1) * u(1)), NotExact);
}

TEST_CASE("multi-symbol antiderivative") {
  DiffPoly f1 = DiffPoly::var("f", 1), g1 = DiffPoly::var("g", 1);
  DiffPoly p = DiffPoly::var("f", 2) * g1 + f1 * DiffPoly::var("g", 2);
  CHECK(integrate_exact(p) == f1 * g1);
}

TEST_CASE("normal form examples") {
  CHECK(ibp_normal_form(u() * u(2)) == -(u(1) * u(1)));
  CHECK(ibp_normal_form(total_derivative(u(3) * u() * u(1))).is_zero());
  CHECK(ibp_normal_form(u(1) * u(2)).is_zero());
  CHECK(IntegralExpr::of(u() * u(2)).same_functional(IntegralExpr::of(-(u(1) * u(1)))));
}

TEST_CASE("rank") {
  CHECK(rank_of({1, {{"u", 0}, {"u", 3}}}) == q(7, 2));
  CHECK(rank_of({1, {{"u", 0}}}) == 1);
  CHECK(rank_of({1, {{"u", 1}, {"u", 1}}}) == 3);
  // Pulling an outer derivative into the factors keeps the rank.
  DiffPoly d = total_derivative(u() * u(2));
  for (const auto& m : d.monomials()) CHECK(rank_of(m) == q(7, 2));
}

TEST_CASE("homotopy hamiltonian") {
  CHECK(homotopy_hamiltonian(u()).canonical == q(1, 2) * (u() * u()));
  DiffPoly g1 = u(2) + q(1, 2) * (u() * u());
  IntegralExpr h1 = homotopy_hamiltonian(g1);
  CHECK(h1.canonical == q(-1, 2) * (u(1) * u(1)) + q(1, 6) * (u() * u() * u()));
  CHECK(euler_operator(h1.canonical, "u") == g1);
  CHECK(homotopy_hamiltonian(DiffPoly()).canonical.is_zero());
  CHECK_THROWS_AS(homotopy_hamiltonian(u(1)), GradientMismatch);
}

TEST_CASE("json round trip and printers") {
  DiffPoly p = u(4) + q(5, 3) * (u() * u(2)) - q(3) * (u(1) * u(1));
  auto j = to_json(p);
  CHECK(j[0]["coeff"] == "1/1");
  CHECK(diffpoly_from_json(j) == p);
  CHECK(diffpoly_from_json(nlohmann::json::parse(R"([{"coeff":"2","factors":[["u",1]]}])")) == q(2) * u(1));
  CHECK(to_string(p) == "u_{4x} + 5/3*u*u_xx - 3*u_x^2");
  CHECK(to_latex(p) == "\\partial_x^{4} u + \\frac{5}{3} u \\partial_x^{2} u - 3 (\\partial_x u)^{2}");
}

TEST_CASE("randomized: derivatives are annihilated by the euler operator") {
  std::mt19937_64 rng(20240611);
  for (int trial = 0; trial < 60; ++trial) {
    DiffPoly p = testing::random_poly(rng, {"u"}, 4, 10, 6);
    DiffPoly dp = total_derivative(p);
    CHECK(euler_operator(dp, "u").is_zero());
    if (!dp.is_zero()) CHECK(is_exact(dp));
  }
}

TEST_CASE("randomized: integrate_exact inverts total_derivative") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 60; ++trial) {
    DiffPoly p = testing::random_poly(rng, {"u", "v"}, 4, 10, 5);
    p -= DiffPoly::constant(p.constant_term());
    // Without a constant term the antiderivative is unique.
    CHECK(integrate_exact(total_derivative(p)) == p);
  }
}

TEST_CASE("randomized: normal form is canonical") {
  std::mt19937_64 rng(99);
  for (int trial = 0; trial < 40; ++trial) {
    DiffPoly p = testing::random_poly(rng, {"u"}, 4, 10, 6);
    DiffPoly r = testing::random_poly(rng, {"u"}, 4, 9, 4);
    DiffPoly n = ibp_normal_form(p);
    CHECK(ibp_normal_form(n) == n);
    CHECK(ibp_normal_form(p + total_derivative(r)) == n);
    DiffPoly diff = p - n;
    diff -= DiffPoly::constant(diff.constant_term());
    CHECK(is_exact(diff));
  }
}

TEST_CASE("randomized: two-symbol normal form") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    DiffPoly p = testing::random_poly(rng, {"u", "v"}, 3, 8, 5);
    DiffPoly r = testing::random_poly(rng, {"u", "v"}, 3, 7, 4);
    CHECK(ibp_normal_form(p + total_derivative(r)) == ibp_normal_form(p));
  }
}
