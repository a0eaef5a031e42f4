#pragma once

#include <map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "kdvh/diffpoly.hpp"
#include "kdvh/rational.hpp"

namespace kdvh {

class SpectralField;

namespace energy {

// Polynomial in s whose coefficients are differential polynomials.
class SDiffPoly {
 public:
  SDiffPoly() = default;
  SDiffPoly(const DiffPoly& p);  // NOLINT: s-independent
  static SDiffPoly times(const SPoly& c, const DiffPoly& p);

  const std::map<int, DiffPoly>& parts() const { return parts_; }
  bool is_zero() const { return parts_.empty(); }
  DiffPoly at(const Rational& s) const;

  SDiffPoly& operator+=(const SDiffPoly& o);
  SDiffPoly& operator-=(const SDiffPoly& o);
  SDiffPoly& operator*=(const SPoly& c);
  friend SDiffPoly operator+(SDiffPoly a, const SDiffPoly& b) { return a += b; }
  friend SDiffPoly operator-(SDiffPoly a, const SDiffPoly& b) { return a -= b; }
  friend SDiffPoly operator*(SDiffPoly a, const SPoly& c) { return a *= c; }
  friend bool operator==(const SDiffPoly& a, const SDiffPoly& b) { return a.parts_ == b.parts_; }

  // Applies a Q-linear map to every s-coefficient.
  template <class F>
  SDiffPoly map(F f) const {
    SDiffPoly out;
    for (const auto& [n, p] : parts_) out.add_part(n, f(p));
    return out;
  }
  void add_part(int power, const DiffPoly& p);

  nlohmann::json to_json() const;
  std::string to_string() const;

 private:
  std::map<int, DiffPoly> parts_;
};

// ∫ L(u) · (D^{s+off} ∂^j u)^2, L the monomial ∏ ∂^{low[i]} u (low sorted).
struct SobTerm {
  SPoly coeff;
  std::vector<int> low;
  int off = 0;
  int j = 0;
  int a() const { return low.at(0); }
};

// ∫ ∂^a u · D^{s+off}∂^b u · D^{s+off}∂^c u.
struct SobTriple {
  SPoly coeff;
  int a = 0;
  int off = 0;
  int b = 0;
  int c = 0;
};

enum class TermClass { Resonant, Bounded };
TermClass classify(const SobTerm& t);

// Two-symbol bookkeeping: "u" is the field, "v" of order b at offset off
// stands for D^{s+off} ∂^b u.  Every monomial carries exactly two v factors.
using HighForms = std::map<int, SDiffPoly>;

struct Classified {
  std::map<int, SDiffPoly> resonant;                  // index K >= 1 at offset 0
  std::map<std::pair<int, int>, SDiffPoly> bounded;   // (off, j)
  void add(const Classified& o, const SPoly& c = SPoly(1));
  std::vector<SobTerm> resonant_terms() const;
  std::vector<SobTerm> bounded_terms() const;
  size_t bounded_count() const;
};

// Integrates by parts until both high factors carry the same derivative
// count, folds D^{s-2m}∂^{j} into D^s∂^{j-2m} when j >= 2m, and splits the
// result by class.
Classified classify_forms(const HighForms& forms);
const MonomialOrder& balanced_order();

std::vector<SobTerm> reduce_triple(const SobTriple& t);

struct QuadraticDerivative {
  std::vector<SobTerm> resonant;
  std::vector<SobTerm> bounded;
  std::vector<SPoly> betas;  // betas[K-1] multiplies ∫∂^{2(l-K)-1}u (D^s∂^K u)^2
  Classified raw;
};

// d/dt ½(‖u‖² + ‖D^s u‖²) along u_t + ∂^{2l+1}u = u ∂^{2l-1}u.
QuadraticDerivative quadratic_derivative(int l);

// A correction ∫ P(u) (D^{s+off} ∂^inner u)^2 with inner ∈ {0,1}, off even.
struct Correction {
  int order = 3;  // multilinear degree
  int off = 0;
  int inner = 0;
  SDiffPoly low;
  int effective() const { return off + inner; }
};

// Derivative of ∫P(D^{s+off}∂^inner u)^2 along the linear part of the flow.
HighForms linear_derivative(const SDiffPoly& P, int off, int inner, int l);
// Part of the derivative one degree higher (nonlinear part of the flow).
HighForms nonlinear_derivative(const SDiffPoly& P, int off, int inner, int l);

struct CorrectionDerivative {
  std::vector<SobTerm> resonant;
  std::vector<SobTerm> bounded;
  HighForms higher;  // quartic terms, kept symbolic
  Classified raw;
};

// Unit-coefficient cubic correction T_{3,j}.
Correction cubic_correction(int l, int j, const SPoly& gamma = SPoly(1));
CorrectionDerivative correction_derivative(int l, int j);

struct Stage {
  int order = 3;
  std::vector<Rational> diagonals;  // one per correction added at this stage
  std::vector<Correction> corrections;
  std::vector<SobTerm> resonant_in;  // residue before corrections
  std::vector<SobTerm> resonant_residue;
  std::vector<SobTerm> bounded;
  std::string obstruction;  // non-empty if some residue could not be absorbed
};

struct EnergyBlueprint {
  int l = 0;
  std::vector<SPoly> betas;
  std::vector<SPoly> gammas;                      // gammas[j] for T_{3,j}
  std::vector<std::vector<Rational>> cubic_matrix;  // rows K = 1..l-1, cols j = 0..l-2
  std::vector<Stage> stages;
  std::vector<Correction> corrections() const;
  std::vector<SobTerm> resonant_residue() const;
  std::vector<SobTerm> bounded_remainder() const;
  bool cancelled() const { return resonant_residue().empty(); }
};

// Cubic stage: triangular solve against the α table, cross-checked by the
// generic engine.
EnergyBlueprint solve_gammas(int l);
// Appends the correction stage of the given multilinear order (>= 4); the
// previous stage must already be present.
void higher_corrections(EnergyBlueprint& bp, int order);
// All stages 3..l+1.
EnergyBlueprint build_energy(int l);

nlohmann::json to_json(const EnergyBlueprint& bp);

double threshold(int l);  // 4l - 9/2

enum class EnergyBase { Homogeneous, Bessel };

// E^s(u) = base + Σ corrections; Homogeneous base is ½‖u‖² + ½‖D^s u‖²,
// Bessel base is ½‖u‖²_{H^s}.
double evaluate_energy(const EnergyBlueprint& bp, double s, const SpectralField& u,
                       EnergyBase base = EnergyBase::Homogeneous);
// dE^s/dt along the model flow, by the chain rule on band-limited fields.
double energy_rate(const EnergyBlueprint& bp, double s, const SpectralField& u,
                   EnergyBase base = EnergyBase::Homogeneous);
// The energy density as a plain differential polynomial; s must be an even
// nonnegative integer so that every D^{s+off} is a differential operator.
DiffPoly instantiate(const EnergyBlueprint& bp, const Rational& s);
// Right-hand side of the model flow, u_t = -∂^{2l+1}u + u ∂^{2l-1}u.
DiffPoly model_rhs(int l);

}  // namespace energy
}  // namespace kdvh
