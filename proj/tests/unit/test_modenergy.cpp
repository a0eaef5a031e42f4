#include <doctest.h>

#include <cmath>

#include "kdvh/errors.hpp"
#include "kdvh/ibpcalc.hpp"
#include "kdvh/modenergy.hpp"
#include "kdvh/spectral.hpp"

using namespace kdvh;
using namespace kdvh::energy;

namespace {

SPoly sp(long a, long b = 1) { return SPoly(frac(a, b)); }
SPoly S() { return SPoly::s(); }

const SobTerm* find(const std::vector<SobTerm>& v, std::vector<int> low, int off, int j) {
  for (const auto& t : v)
    if (t.low == low && t.off == off && t.j == j) return &t;
  return nullptr;
}

// ∫ ∏ ∂^{low} u · (D^{s+off}∂^j u)^2 by brute-force quadrature.
double quad_term(const SobTerm& t, double s, const SpectralField& u) {
  using namespace spectral;
  SpectralField w = multiplier(multiplier(u, Multiplier::D(s + t.off)), Multiplier::deriv(t.j));
  DiffPoly low = DiffPoly::constant(1);
  for (int o : t.low) low = low * DiffPoly::var("u", o);
  SpectralField p = eval_diffpoly(low, u);
  std::vector<double> prod(u.size());
  double acc = 0;
  for (int i = 0; i < u.size(); ++i) acc += p.values()[i] * w.values()[i] * w.values()[i];
  return t.coeff.eval(s) * 2 * M_PI * acc / u.size();
}

// Every monomial is controlled by ‖u‖_{H^s}^2 times sup norms of lower
// derivatives: no factor above order s and at most two at order s.
bool bounded_at(const DiffPoly& nf, int s) {
  for (const auto& [f, c] : nf.terms()) {
    int at_s = 0;
    for (const auto& x : f) {
      if (x.order > s) return false;
      if (x.order == s) ++at_s;
    }
    if (at_s > 2) return false;
  }
  return true;
}

}  // namespace

TEST_CASE("reduce_triple, fifth-order example") {
  // ∫u · D^s∂^3 u · D^s u = (3/2)∫u_x (D^s∂u)^2 - (1/2)∫u_xxx (D^s u)^2
  auto terms = reduce_triple({SPoly(1), 0, 0, 0, 3});
  REQUIRE(terms.size() == 2);
  const SobTerm* res = find(terms, {1}, 0, 1);
  const SobTerm* bnd = find(terms, {3}, 0, 0);
  REQUIRE(res);
  REQUIRE(bnd);
  CHECK(res->coeff == sp(3, 2));
  CHECK(bnd->coeff == sp(-1, 2));
  CHECK(classify(*res) == TermClass::Resonant);
  CHECK(classify(*bnd) == TermClass::Bounded);

  // Quadrature at N = 64 and a non-integer s.
  const double s = 4.5;
  SpectralField u = spectral::random_field(64, 12, 1.0, 0.3, 11);
  using namespace spectral;
  SpectralField a = multiplier(multiplier(u, Multiplier::D(s)), Multiplier::deriv(3));
  SpectralField b = multiplier(u, Multiplier::D(s));
  double lhs = 0;
  for (int i = 0; i < 64; ++i) lhs += u.values()[i] * a.values()[i] * b.values()[i];
  lhs *= 2 * M_PI / 64;
  double rhs = quad_term(*res, s, u) + quad_term(*bnd, s, u);
  CHECK(rhs == doctest::Approx(lhs).epsilon(1e-10));
}

TEST_CASE("reduce_triple, other cases") {
  // The I_1 = 0 branch: ∫u_xx · D^s∂u · D^s u = -(1/2)∫u_xxx (D^s u)^2.
  auto t = reduce_triple({SPoly(1), 2, 0, 0, 1});
  REQUIRE(t.size() == 1);
  CHECK(classify(t[0]) == TermClass::Bounded);
  CHECK(t[0].coeff == sp(-1, 2));
  CHECK(reduce_triple({SPoly(), 0, 0, 1, 4}).empty());
  CHECK_THROWS_AS(reduce_triple({SPoly(1), 0, -1, 1, 2}), OddOffset);
  // Negative offsets fold back once enough derivatives are present.
  auto f = reduce_triple({SPoly(1), 1, -2, 3, 3});
  REQUIRE(f.size() == 1);
  CHECK(f[0].off == 0);
  CHECK(f[0].j == 1);
  // Random triples agree with quadrature.
  SpectralField u = spectral::random_field(64, 10, 1.2, 0.2, 3);
  for (int a = 0; a <= 3; ++a)
    for (int b = 0; b <= 3; ++b)
      for (int c = b; c <= 5; ++c) {
        const double s = 5.25;
        auto terms = reduce_triple({SPoly::s(), a, -2, b, c});
        double rhs = 0;
        for (const auto& x : terms) rhs += quad_term(x, s, u);
        using namespace spectral;
        SpectralField ua = multiplier(u, Multiplier::deriv(a));
        SpectralField w = multiplier(u, Multiplier::D(s - 2));
        SpectralField wb = multiplier(w, Multiplier::deriv(b)), wc = multiplier(w, Multiplier::deriv(c));
        double lhs = 0;
        for (int i = 0; i < 64; ++i) lhs += ua.values()[i] * wb.values()[i] * wc.values()[i];
        lhs *= s * 2 * M_PI / 64;
        CHECK(rhs == doctest::Approx(lhs).epsilon(1e-9).scale(1e-6));
      }
}

TEST_CASE("quadratic derivative") {
  auto q2 = quadratic_derivative(2);
  REQUIRE(q2.resonant.size() == 1);
  CHECK(q2.resonant[0].low == std::vector<int>{1});
  CHECK(q2.resonant[0].j == 1);
  CHECK(q2.betas[0] == sp(3, 2) - S());
  auto q3 = quadratic_derivative(3);
  REQUIRE(q3.resonant.size() == 2);
  CHECK(find(q3.resonant, {3}, 0, 1));
  CHECK(find(q3.resonant, {1}, 0, 2));
  for (const auto& t : q3.bounded) CHECK(classify(t) == TermClass::Bounded);
}

TEST_CASE("quadratic derivative agrees with exact calculus at s = 4") {
  // d/dt ½∫(u^2 + u_4^2) along the l = 2 model flow; the resonant monomial
  // u_x u_5^2 survives IBP with coefficient β_1(4).
  DiffPoly q = DiffPoly::monomial(frac(1, 2), {{"u", 0}, {"u", 0}}) +
               DiffPoly::monomial(frac(1, 2), {{"u", 4}, {"u", 4}});
  DiffPoly nf = ibp_normal_form(evolution_derivative(q, "u", model_rhs(2)));
  CHECK(nf.coefficient({{"u", 1}, {"u", 5}, {"u", 5}}) == quadratic_derivative(2).betas[0].eval(Rational(4)));
  CHECK(nf.max_order() == 5);
}

TEST_CASE("cubic correction derivatives match the alpha table") {
  auto d = correction_derivative(2, 0);
  REQUIRE(d.resonant.size() == 1);
  CHECK(d.resonant[0].coeff == SPoly(5));
  CHECK(d.resonant[0].low == std::vector<int>{1});
  for (int l = 2; l <= 6; ++l) {
    const AlphaTable at = alpha_coeffs(l);
    for (int j = 0; j <= l - 2; ++j) {
      auto x = correction_derivative(l, j);
      for (int K = 1; K <= l - 1; ++K) {
        const SobTerm* t = find(x.resonant, {2 * l - 2 * K - 1}, 0, K);
        Rational expected = K + j + 1 <= l ? Rational(-at.alpha(K + j + 1)) : Rational(0);
        if (expected == 0) CHECK(t == nullptr);
        else {
          REQUIRE(t);
          CHECK(t->coeff == SPoly(expected));
        }
      }
      CHECK(x.resonant.size() == static_cast<size_t>(l - 1 - j));
      // The diagonal entry sits on index l-1-j.
      CHECK(find(x.resonant, {2 * j + 1}, 0, l - 1 - j)->coeff == SPoly(Rational(-at.diagonal())));
    }
  }
  auto odd = cubic_correction(4, 1);
  CHECK(odd.off == -2);
  CHECK(odd.inner == 0);
  auto even = cubic_correction(4, 2);
  CHECK(even.off == -4);
  CHECK(even.inner == 1);
}

TEST_CASE("cubic stage for l = 2") {
  auto bp = solve_gammas(2);
  REQUIRE(bp.gammas.size() == 1);
  CHECK(bp.gammas[0] == (S() * Rational(2) - SPoly(3)) * frac(1, 10));
  CHECK(bp.gammas[0] == bp.betas[0] * frac(-1, 5));
  CHECK(bp.gammas[0].degree() == 1);
  CHECK(bp.resonant_residue().empty());
  CHECK(bp.stages[0].diagonals == std::vector<Rational>{-5});
}

TEST_CASE("full construction cancels every resonance for l = 2..5") {
  for (int l = 2; l <= 5; ++l) {
    auto bp = build_energy(l);
    CHECK(bp.cancelled());
    CHECK(bp.stages.size() == static_cast<size_t>(l - 1));
    const Rational diag = (l % 2 ? 1 : -1) * (2 * l + 1);
    CHECK(bp.cubic_matrix[0].size() == static_cast<size_t>(l - 1));
    for (int j = 0; j <= l - 2; ++j) CHECK(bp.cubic_matrix[l - 2 - j][j] == diag);
    for (const auto& st : bp.stages) {
      CHECK(st.obstruction.empty());
      CHECK(st.resonant_residue.empty());
      for (const auto& d : st.diagonals) CHECK(d == diag);
    }
    CHECK(bp.stages[0].corrections.size() == static_cast<size_t>(l - 1));
    // One order past the last stage nothing resonant is produced.
    auto extra = bp;
    higher_corrections(extra, l + 2);
    CHECK(extra.stages.back().resonant_in.empty());
  }
}

TEST_CASE("instantiated energies are controlled by the H^s norm") {
  const int s_for[] = {0, 0, 4, 8, 12, 16};
  for (int l = 2; l <= 5; ++l) {
    const int s = s_for[l];
    auto bp = build_energy(l);
    DiffPoly dE = evolution_derivative(instantiate(bp, s), "u", model_rhs(l));
    for (int d = 2; d <= dE.max_degree(); ++d) CHECK(bounded_at(ibp_normal_form(dE.homogeneous_part(d)), s));
    // Without the corrections the cubic part is not controlled.
    EnergyBlueprint bare;
    bare.l = l;
    DiffPoly dQ = evolution_derivative(instantiate(bare, s), "u", model_rhs(l));
    CHECK_FALSE(bounded_at(ibp_normal_form(dQ.homogeneous_part(3)), s));
  }
}

TEST_CASE("energy evaluation") {
  auto bp = build_energy(2);
  CHECK(evaluate_energy(bp, 4.0, SpectralField::zeros(64)) == 0.0);
  CHECK_THROWS_AS(evaluate_energy(bp, 3.5, SpectralField::zeros(64)), ThresholdViolation);
  const double eps = 0.1;
  SpectralField u = SpectralField::from_function(64, [eps](double x) { return eps * std::cos(x); });
  const double hs = spectral::sobolev_norm(u, 4.0);
  CHECK(evaluate_energy(bp, 4.0, u, EnergyBase::Bessel) == doctest::Approx(0.5 * hs * hs).epsilon(1e-13));
  CHECK(evaluate_energy(bp, 4.0, u) == doctest::Approx(M_PI * eps * eps).epsilon(1e-13));
}

TEST_CASE("energy at even s agrees with the instantiated density") {
  for (int l = 2; l <= 3; ++l) {
    auto bp = build_energy(l);
    const int s = l == 2 ? 4 : 8;
    SpectralField u = spectral::random_field(128, 10, 2.0, 0.05, 17 + l);
    double a = evaluate_energy(bp, s, u);
    double b = spectral::functional_eval(instantiate(bp, s), u);
    CHECK(a == doctest::Approx(b).epsilon(1e-11));
  }
}

TEST_CASE("energy rate: chain rule against finite differences") {
  auto bp = build_energy(2);
  const double s = 4.5;
  SpectralField u = spectral::random_field(128, 20, 2.0, 0.05, 5);
  const double rate = energy_rate(bp, s, u);
  SpectralField ut = spectral::flow_rhs(spectral::FlowSpec::model(2), u);
  auto e = [&](double h) { return evaluate_energy(bp, s, spectral::linear_combination(1, u, h, ut)); };
  const double h = 1e-4;
  const double d1 = (e(h) - e(-h)) / (2 * h);
  const double d2 = (e(h / 2) - e(-h / 2)) / h;
  const double fd = (4 * d2 - d1) / 3;
  CHECK(rate == doctest::Approx(fd).epsilon(1e-7));
}

TEST_CASE("coercivity for small fields") {
  auto bp = build_energy(2);
  SpectralField base = spectral::random_field(64, 8, 3.0, 1.0, 2);
  for (double amp : {1e-4, 1e-3, 1e-2}) {
    SpectralField u = spectral::linear_combination(amp, base, 0, base);
    const double n2 = std::pow(spectral::sobolev_norm(u, 4.0), 2);
    const double e = evaluate_energy(bp, 4.0, u, EnergyBase::Bessel);
    CHECK(e >= 0.25 * n2);
    CHECK(e <= 0.75 * n2);
    // Same window for the homogeneous base against ‖u‖² + ‖D^s u‖².
    const double h2 = spectral::inner(u, u) + std::pow(spectral::sobolev_norm(spectral::multiplier(u, spectral::Multiplier::D(4.0)), 0), 2);
    const double eh = evaluate_energy(bp, 4.0, u);
    CHECK(eh >= 0.25 * h2);
    CHECK(eh <= 0.75 * h2);
  }
}

TEST_CASE("blueprint json") {
  auto j = to_json(build_energy(3));
  CHECK(j["l"] == 3);
  CHECK(j["gammas"].size() == 2);
  CHECK(j["diagnostics"]["cancelled"] == true);
  CHECK(j["stages"].size() == 2);
}
