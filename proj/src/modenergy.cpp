#include "kdvh/modenergy.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>

#include "kdvh/errors.hpp"
#include "kdvh/ibpcalc.hpp"
#include "kdvh/spectral.hpp"

namespace kdvh::energy {

namespace {

SPoly s_power(int n) {
  SPoly p(1);
  for (int i = 0; i < n; ++i) p *= SPoly::s();
  return p;
}

DiffPoly mono(const Rational& c, FactorList f) { return DiffPoly::monomial(c, std::move(f)); }

std::vector<int> orders_of(const FactorList& f) {
  std::vector<int> o;
  for (const auto& x : f) o.push_back(x.order);
  return o;
}

// Regroups a polynomial-in-s of differential polynomials by monomial.
std::map<FactorList, SPoly> by_monomial(const SDiffPoly& p) {
  std::map<FactorList, SPoly> out;
  for (const auto& [n, q] : p.parts())
    for (const auto& [f, c] : q.terms()) out[f] += s_power(n) * c;
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------

SDiffPoly::SDiffPoly(const DiffPoly& p) { add_part(0, p); }

SDiffPoly SDiffPoly::times(const SPoly& c, const DiffPoly& p) {
  SDiffPoly out;
  for (int n = 0; n <= c.degree(); ++n) out.add_part(n, p * c.coeff(n));
  return out;
}

void SDiffPoly::add_part(int power, const DiffPoly& p) {
  if (p.is_zero()) return;
  auto& slot = parts_[power];
  slot += p;
  if (slot.is_zero()) parts_.erase(power);
}

DiffPoly SDiffPoly::at(const Rational& s) const {
  DiffPoly out;
  Rational sp = 1;
  int last = 0;
  for (const auto& [n, p] : parts_) {
    for (; last < n; ++last) sp *= s;
    out += p * sp;
  }
  return out;
}

SDiffPoly& SDiffPoly::operator+=(const SDiffPoly& o) {
  for (const auto& [n, p] : o.parts_) add_part(n, p);
  return *this;
}

SDiffPoly& SDiffPoly::operator-=(const SDiffPoly& o) {
  for (const auto& [n, p] : o.parts_) add_part(n, -p);
  return *this;
}

SDiffPoly& SDiffPoly::operator*=(const SPoly& c) {
  SDiffPoly out;
  for (const auto& [n, p] : parts_)
    for (int m = 0; m <= c.degree(); ++m) out.add_part(n + m, p * c.coeff(m));
  *this = std::move(out);
  return *this;
}

nlohmann::json SDiffPoly::to_json() const {
  nlohmann::json j = nlohmann::json::array();
  for (const auto& [f, c] : by_monomial(*this)) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& x : f) factors.push_back({x.symbol, x.order});
    j.push_back({{"coeff", c.to_strings()}, {"factors", factors}});
  }
  return j;
}

std::string SDiffPoly::to_string() const {
  if (parts_.empty()) return "0";
  std::string out;
  for (const auto& [f, c] : by_monomial(*this)) {
    if (!out.empty()) out += " + ";
    out += "(" + c.to_string() + ")";
    std::string m = kdvh::to_string(DiffPoly::monomial(1, f));
    if (m != "1") out += "*" + m;
  }
  return out;
}

// ---------------------------------------------------------------------------

TermClass classify(const SobTerm& t) {
  return t.off == 0 && t.j >= 1 ? TermClass::Resonant : TermClass::Bounded;
}

void Classified::add(const Classified& o, const SPoly& c) {
  for (const auto& [k, p] : o.resonant) {
    resonant[k] += p * c;
    if (resonant[k].is_zero()) resonant.erase(k);
  }
  for (const auto& [k, p] : o.bounded) {
    bounded[k] += p * c;
    if (bounded[k].is_zero()) bounded.erase(k);
  }
}

std::vector<SobTerm> Classified::resonant_terms() const {
  std::vector<SobTerm> out;
  for (const auto& [k, p] : resonant)
    for (const auto& [f, c] : by_monomial(p)) out.push_back({c, orders_of(f), 0, k});
  return out;
}

std::vector<SobTerm> Classified::bounded_terms() const {
  std::vector<SobTerm> out;
  for (const auto& [key, p] : bounded)
    for (const auto& [f, c] : by_monomial(p)) out.push_back({c, orders_of(f), key.first, key.second});
  return out;
}

size_t Classified::bounded_count() const {
  size_t n = 0;
  for (const auto& [key, p] : bounded) n += by_monomial(p).size();
  return n;
}

const MonomialOrder& balanced_order() {
  static const MonomialOrder order{"balanced-high-pair", [](const FactorList& f) {
                                     std::vector<long> v, all;
                                     for (const auto& x : f) {
                                       all.push_back(x.order);
                                       if (x.symbol == "v") v.push_back(x.order);
                                     }
                                     std::sort(all.rbegin(), all.rend());
                                     std::vector<long> key;
                                     key.push_back(v.size() == 2 ? std::labs(v[1] - v[0]) : 0);
                                     key.insert(key.end(), all.begin(), all.end());
                                     return key;
                                   }};
  return order;
}

Classified classify_forms(const HighForms& forms) {
  Classified out;
  for (const auto& [off, poly] : forms) {
    if (off % 2 != 0) throw OddOffset("odd offset " + std::to_string(off) + " in a Sobolev form");
    for (const auto& [n, p] : poly.parts()) {
      const DiffPoly nf = ibp_normal_form(p, balanced_order());
      for (const auto& [f, c] : nf.terms()) {
        FactorList low;
        std::vector<int> high;
        for (const auto& x : f) {
          if (x.symbol == "v") high.push_back(x.order);
          else low.push_back(x);
        }
        if (high.size() != 2 || high[0] != high[1] || low.empty())
          throw std::logic_error("normal form left an unbalanced high pair: " + kdvh::to_string(nf));
        int j = high[0];
        int o = off;
        // D^{s-2m} ∂^j = ±D^s ∂^{j-2m}; the sign squares away.
        if (o < 0 && j + o >= 0) {
          j += o;
          o = 0;
        }
        SDiffPoly piece;
        piece.add_part(n, DiffPoly::monomial(c, low));
        if (o == 0 && j >= 1) {
          out.resonant[j] += piece;
          if (out.resonant[j].is_zero()) out.resonant.erase(j);
        } else {
          auto& slot = out.bounded[{o, j}];
          slot += piece;
          if (slot.is_zero()) out.bounded.erase({o, j});
        }
      }
    }
  }
  return out;
}

std::vector<SobTerm> reduce_triple(const SobTriple& t) {
  if (t.off % 2 != 0) throw OddOffset("odd offset " + std::to_string(t.off));
  if (t.coeff.is_zero()) return {};
  HighForms forms;
  forms[t.off] = SDiffPoly::times(t.coeff, mono(1, {{"u", t.a}, {"v", t.b}, {"v", t.c}}));
  Classified c = classify_forms(forms);
  auto out = c.resonant_terms();
  auto b = c.bounded_terms();
  out.insert(out.end(), b.begin(), b.end());
  return out;
}

QuadraticDerivative quadratic_derivative(int l) {
  if (l < 2) throw std::invalid_argument("quadratic derivative needs l >= 2");
  SDiffPoly acc = mono(-1, {{"v", 0}, {"v", 2 * l + 1}});
  // Main terms of the commutator [D^s, u]∂^{2l-1}u; the rest is bounded.
  for (int m = 0; m <= 2 * l - 1; ++m)
    acc += SDiffPoly::times(SPoly::binomial_s(0, m), mono(1, {{"u", m}, {"v", 2 * l - 1 - m}, {"v", 0}}));
  QuadraticDerivative q;
  q.raw = classify_forms({{0, acc}});
  q.resonant = q.raw.resonant_terms();
  q.bounded = q.raw.bounded_terms();
  for (int K = 1; K <= l - 1; ++K) {
    SPoly beta;
    auto it = q.raw.resonant.find(K);
    if (it != q.raw.resonant.end()) {
      for (const auto& [f, c] : by_monomial(it->second)) {
        if (f != FactorList{{"u", 2 * l - 1 - 2 * K}}) throw std::logic_error("unexpected resonant low factor");
        beta = c;
      }
    }
    q.betas.push_back(beta);
  }
  return q;
}

HighForms linear_derivative(const SDiffPoly& P, int off, int inner, int l) {
  const DiffPoly lin = mono(-1, {{"u", 2 * l + 1}});
  const DiffPoly pair = mono(1, {{"v", inner}, {"v", inner}});
  const DiffPoly cross = mono(-2, {{"v", inner}, {"v", inner + 2 * l + 1}});
  SDiffPoly acc;
  for (const auto& [n, p] : P.parts()) acc.add_part(n, evolution_derivative(p, "u", lin) * pair + p * cross);
  return {{off, acc}};
}

HighForms nonlinear_derivative(const SDiffPoly& P, int off, int inner, int l) {
  const DiffPoly nl = mono(1, {{"u", 0}, {"u", 2 * l - 1}});
  const DiffPoly pair = mono(1, {{"v", inner}, {"v", inner}});
  const DiffPoly vi = mono(2, {{"v", inner}});
  SDiffPoly acc;
  for (const auto& [n, p] : P.parts()) {
    acc.add_part(n, evolution_derivative(p, "u", nl) * pair);
    for (int m = 0; m <= 2 * l - 1; ++m) {
      DiffPoly ins = total_derivative(mono(1, {{"u", m}, {"v", 2 * l - 1 - m}}), inner);
      acc += SDiffPoly::times(SPoly::binomial_s(off, m) * s_power(n), p * vi * ins);
    }
  }
  return {{off, acc}};
}

Correction cubic_correction(int l, int j, const SPoly& gamma) {
  if (j < 0 || j > l - 2) throw std::invalid_argument("cubic correction index out of range");
  Correction c;
  c.order = 3;
  c.inner = j % 2 == 0 ? 1 : 0;
  c.off = j % 2 == 0 ? -2 - j : -1 - j;
  c.low = SDiffPoly::times(gamma, mono(1, {{"u", 2 * j}}));
  return c;
}

CorrectionDerivative correction_derivative(int l, int j) {
  const Correction c = cubic_correction(l, j);
  CorrectionDerivative d;
  d.raw = classify_forms(linear_derivative(c.low, c.off, c.inner, l));
  d.resonant = d.raw.resonant_terms();
  d.bounded = d.raw.bounded_terms();
  d.higher = nonlinear_derivative(c.low, c.off, c.inner, l);
  return d;
}

// ---------------------------------------------------------------------------

namespace {

// Finds d with a == d·b, if any.
std::optional<Rational> proportional(const SDiffPoly& a, const SDiffPoly& b) {
  if (b.is_zero()) return std::nullopt;
  const auto& [n, p] = *b.parts().begin();
  const auto& [f, c] = *p.terms().begin();
  auto it = a.parts().find(n);
  if (it == a.parts().end()) return std::nullopt;
  Rational d = it->second.coefficient(f) / c;
  if (!(a == b * SPoly(d))) return std::nullopt;
  return d;
}

// Cancels every resonant index, highest first, with corrections of the
// given multilinear order.  A residue index K is absorbed by
// ∫P (D^{s+off}∂^inner u)^2 with ∂P = L_K and off + inner = K - l.
Stage absorb(int l, int order, std::map<int, SDiffPoly> res, Classified& bounded) {
  Stage st;
  st.order = order;
  {
    Classified in;
    in.resonant = res;
    st.resonant_in = in.resonant_terms();
  }
  const int top = res.empty() ? 0 : res.rbegin()->first;
  for (int K = top; K >= 1; --K) {
    auto it = res.find(K);
    if (it == res.end()) continue;
    const SDiffPoly L = it->second;
    SDiffPoly P;
    bool exact = true;
    for (const auto& [n, p] : L.parts()) {
      if (!is_exact(p)) {
        exact = false;
        break;
      }
      P.add_part(n, integrate_exact(p));
    }
    if (!exact) {
      st.obstruction += "order " + std::to_string(order) + ", index " + std::to_string(K) +
                        ": low part is not a derivative: " + L.to_string() + "\n";
      continue;
    }
    const int e = K - l;
    const int inner = ((e % 2) + 2) % 2;
    const int off = e - inner;
    Classified x = classify_forms(linear_derivative(P, off, inner, l));
    if (!x.resonant.empty() && x.resonant.rbegin()->first > K)
      throw std::logic_error("correction feeds a higher resonant index");
    auto diag = proportional(x.resonant.count(K) ? x.resonant.at(K) : SDiffPoly(), L);
    if (!diag || *diag == 0) throw SingularSystem("vanishing diagonal at index " + std::to_string(K));
    const Rational c = -1 / *diag;
    st.diagonals.push_back(-*diag);
    Correction corr;
    corr.order = order;
    corr.off = off;
    corr.inner = inner;
    corr.low = P * SPoly(c);
    st.corrections.push_back(corr);
    Classified scaled;
    scaled.add(x, SPoly(c));
    for (const auto& [k, p] : scaled.resonant) {
      res[k] += p;
      if (res[k].is_zero()) res.erase(k);
    }
    bounded.add(Classified{{}, scaled.bounded});
    if (res.count(K)) throw std::logic_error("resonant index survived its own correction");
  }
  Classified left;
  left.resonant = res;
  st.resonant_residue = left.resonant_terms();
  return st;
}

}  // namespace

EnergyBlueprint solve_gammas(int l) {
  if (l < 2) throw std::invalid_argument("modified energy needs l >= 2");
  EnergyBlueprint bp;
  bp.l = l;
  QuadraticDerivative q = quadratic_derivative(l);
  bp.betas = q.betas;

  // Triangular system Σ_j α_{K+j+1,l} γ_j = β_K from the α table.
  const AlphaTable at = alpha_coeffs(l);
  bp.cubic_matrix.assign(l - 1, std::vector<Rational>(l - 1));
  for (int K = 1; K <= l - 1; ++K)
    for (int j = 0; j <= l - 2; ++j)
      if (K + j + 1 <= l) bp.cubic_matrix[K - 1][j] = at.alpha(K + j + 1);
  for (int j = 0; j <= l - 2; ++j) {
    const int K = l - 1 - j;
    SPoly rhs = bp.betas[K - 1];
    for (int jp = 0; jp < j; ++jp) rhs -= bp.gammas[jp] * bp.cubic_matrix[K - 1][jp];
    const Rational d = bp.cubic_matrix[K - 1][j];
    if (d == 0) throw SingularSystem("zero diagonal in the cubic system");
    bp.gammas.push_back(rhs * Rational(1 / d));
  }

  // Same stage through the generic engine; the two routes must agree.
  Classified bounded;
  bounded.bounded = q.raw.bounded;
  Stage st = absorb(l, 3, q.raw.resonant, bounded);
  std::vector<Correction> triangular;
  for (int j = 0; j <= l - 2; ++j) {
    Correction c = cubic_correction(l, j, bp.gammas[j]);
    if (c.low.is_zero()) continue;
    triangular.push_back(c);
    bool found = false;
    for (const auto& g : st.corrections)
      if (g.off == c.off && g.inner == c.inner) found = found || g.low == c.low;
    if (!found) throw std::logic_error("triangular solve and engine disagree at j = " + std::to_string(j));
  }
  st.corrections = triangular;
  st.bounded = bounded.bounded_terms();
  bp.stages.push_back(st);
  return bp;
}

void higher_corrections(EnergyBlueprint& bp, int order) {
  if (bp.stages.empty() || bp.stages.back().order != order - 1)
    throw std::invalid_argument("stages must be built in order");
  HighForms insertion;
  for (const auto& c : bp.stages.back().corrections)
    for (const auto& [off, p] : nonlinear_derivative(c.low, c.off, c.inner, bp.l)) insertion[off] += p;
  Classified raw = classify_forms(insertion);
  Classified bounded;
  bounded.bounded = raw.bounded;
  Stage st = absorb(bp.l, order, raw.resonant, bounded);
  st.bounded = bounded.bounded_terms();
  bp.stages.push_back(st);
}

EnergyBlueprint build_energy(int l) {
  EnergyBlueprint bp = solve_gammas(l);
  for (int order = 4; order <= l + 1; ++order) higher_corrections(bp, order);
  return bp;
}

std::vector<Correction> EnergyBlueprint::corrections() const {
  std::vector<Correction> out;
  for (const auto& st : stages) out.insert(out.end(), st.corrections.begin(), st.corrections.end());
  return out;
}

std::vector<SobTerm> EnergyBlueprint::resonant_residue() const {
  std::vector<SobTerm> out;
  for (const auto& st : stages) out.insert(out.end(), st.resonant_residue.begin(), st.resonant_residue.end());
  return out;
}

std::vector<SobTerm> EnergyBlueprint::bounded_remainder() const {
  std::vector<SobTerm> out;
  for (const auto& st : stages) out.insert(out.end(), st.bounded.begin(), st.bounded.end());
  return out;
}

namespace {

nlohmann::json term_json(const SobTerm& t) {
  return {{"coeff", t.coeff.to_strings()}, {"low", t.low}, {"off", t.off}, {"j", t.j}};
}

}  // namespace

nlohmann::json to_json(const EnergyBlueprint& bp) {
  nlohmann::json j;
  j["l"] = bp.l;
  j["betas"] = nlohmann::json::array();
  for (const auto& b : bp.betas) j["betas"].push_back(b.to_strings());
  j["gammas"] = nlohmann::json::array();
  for (const auto& g : bp.gammas) j["gammas"].push_back(g.to_strings());
  j["cubic_matrix"] = nlohmann::json::array();
  for (const auto& row : bp.cubic_matrix) {
    nlohmann::json r = nlohmann::json::array();
    for (const auto& x : row) r.push_back(to_fraction_string(x));
    j["cubic_matrix"].push_back(r);
  }
  j["corrections"] = nlohmann::json::array();
  for (const auto& c : bp.corrections())
    j["corrections"].push_back({{"order", c.order}, {"off", c.off}, {"inner", c.inner}, {"low", c.low.to_json()}});
  j["stages"] = nlohmann::json::array();
  for (const auto& st : bp.stages) {
    nlohmann::json d = nlohmann::json::array();
    for (const auto& x : st.diagonals) d.push_back(to_fraction_string(x));
    nlohmann::json res = nlohmann::json::array();
    for (const auto& t : st.resonant_residue) res.push_back(term_json(t));
    j["stages"].push_back({{"order", st.order},
                           {"diagonals", d},
                           {"corrections", st.corrections.size()},
                           {"resonant_in", st.resonant_in.size()},
                           {"resonant_residue", res},
                           {"bounded_terms", st.bounded.size()},
                           {"obstruction", st.obstruction}});
  }
  j["diagnostics"] = {{"cancelled", bp.cancelled()},
                      {"bounded_remainder_terms", bp.bounded_remainder().size()},
                      {"threshold", threshold(bp.l)}};
  return j;
}

// ---------------------------------------------------------------------------

double threshold(int l) { return 4.0 * l - 4.5; }

namespace {

int grid_for(int n, int degree) {
  long need = static_cast<long>(degree + 1) * n / 2 + 1;
  int m = n;
  while (m < need) m *= 2;
  return m;
}

void check_threshold(const EnergyBlueprint& bp, double s) {
  if (!(s > threshold(bp.l)))
    throw ThresholdViolation("s = " + std::to_string(s) + " is not above 4l - 9/2 = " +
                             std::to_string(threshold(bp.l)));
}

double mean(const std::vector<double>& v) {
  double acc = 0;
  for (double x : v) acc += x;
  return acc / v.size();
}

constexpr double kTwoPi = 6.283185307179586476925286766559;

}  // namespace

double evaluate_energy(const EnergyBlueprint& bp, double s, const SpectralField& u, EnergyBase base) {
  using namespace spectral;
  check_threshold(bp, s);
  double e;
  if (base == EnergyBase::Bessel) {
    const double n = sobolev_norm(u, s);
    e = 0.5 * n * n;
  } else {
    const SpectralField ds = multiplier(u, Multiplier::D(s));
    e = 0.5 * inner(u, u) + 0.5 * inner(ds, ds);
  }
  const Rational sq(s);
  for (const auto& c : bp.corrections()) {
    const double sigma = s + c.off;
    if (!(sigma > 0)) throw std::logic_error("nonpositive Sobolev offset");
    const DiffPoly P = c.low.at(sq);
    const int m = grid_for(u.size(), P.max_degree() + 2);
    const SpectralField ub = resample(u, m);
    const SpectralField pv = eval_diffpoly(P, ub);
    const SpectralField w = multiplier(multiplier(ub, Multiplier::D(sigma)), Multiplier::deriv(c.inner));
    std::vector<double> prod(m);
    for (int i = 0; i < m; ++i) prod[i] = pv.values()[i] * w.values()[i] * w.values()[i];
    e += kTwoPi * mean(prod);
  }
  return e;
}

double energy_rate(const EnergyBlueprint& bp, double s, const SpectralField& u, EnergyBase base) {
  using namespace spectral;
  check_threshold(bp, s);
  const SpectralField ut = flow_rhs(FlowSpec::model(bp.l), u);
  double r;
  if (base == EnergyBase::Bessel) {
    r = inner(multiplier(u, Multiplier::J(s)), multiplier(ut, Multiplier::J(s)));
  } else {
    r = inner(u, ut) + inner(multiplier(u, Multiplier::D(s)), multiplier(ut, Multiplier::D(s)));
  }
  const Rational sq(s);
  for (const auto& c : bp.corrections()) {
    const double sigma = s + c.off;
    const DiffPoly P = c.low.at(sq);
    const int m = grid_for(u.size(), P.max_degree() + 2);
    const SpectralField ub = resample(u, m), utb = resample(ut, m);
    const SpectralField pv = eval_diffpoly(P, ub);
    const SpectralField pl = eval_linearization(P, ub, utb);
    const auto op = [&](const SpectralField& f) {
      return multiplier(multiplier(f, Multiplier::D(sigma)), Multiplier::deriv(c.inner));
    };
    const SpectralField w = op(ub), wt = op(utb);
    std::vector<double> prod(m);
    for (int i = 0; i < m; ++i) {
      const double wi = w.values()[i];
      prod[i] = pl.values()[i] * wi * wi + 2 * pv.values()[i] * wi * wt.values()[i];
    }
    r += kTwoPi * mean(prod);
  }
  return r;
}

DiffPoly instantiate(const EnergyBlueprint& bp, const Rational& s) {
  if (!is_integer(s) || s < 0 || s.get_num() % 2 != 0)
    throw std::invalid_argument("instantiation needs an even nonnegative integer s");
  const int si = static_cast<int>(s.get_num().get_si());
  DiffPoly e = mono(Rational(1, 2), {{"u", 0}, {"u", 0}}) + mono(Rational(1, 2), {{"u", si}, {"u", si}});
  for (const auto& c : bp.corrections()) {
    const int order = si + c.off + c.inner;
    if (si + c.off < 0) throw std::logic_error("negative Sobolev offset at this s");
    e += c.low.at(s) * mono(1, {{"u", order}, {"u", order}});
  }
  return e;
}

DiffPoly model_rhs(int l) { return mono(-1, {{"u", 2 * l + 1}}) + mono(1, {{"u", 0}, {"u", 2 * l - 1}}); }

}  // namespace kdvh::energy
