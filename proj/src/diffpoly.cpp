#include "kdvh/diffpoly.hpp"

#include <algorithm>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <unordered_map>

#include "kdvh/errors.hpp"

namespace kdvh {

int degree_of(const FactorList& f) { return static_cast<int>(f.size()); }

int weight_of(const FactorList& f) {
  int w = 0;
  for (const auto& x : f) w += x.order;
  return w;
}

FactorList sorted_factors(FactorList f) {
  std::sort(f.begin(), f.end());
  return f;
}

DiffPoly DiffPoly::constant(const Rational& c) {
  DiffPoly p;
  p.add_term({}, c);
  return p;
}

DiffPoly DiffPoly::var(const std::string& symbol, int order) {
  return monomial(1, {{symbol, order}});
}

DiffPoly DiffPoly::monomial(const Rational& c, FactorList factors) {
  DiffPoly p;
  p.add_term(std::move(factors), c);
  return p;
}

void DiffPoly::add_term(FactorList factors, const Rational& c) {
  if (c == 0) return;
  std::sort(factors.begin(), factors.end());
  auto [it, inserted] = terms_.try_emplace(std::move(factors), c);
  if (!inserted) {
    it->second += c;
    if (it->second == 0) terms_.erase(it);
  }
}

Rational DiffPoly::coefficient(const FactorList& factors) const {
  auto it = terms_.find(factors);
  return it == terms_.end() ? Rational(0) : it->second;
}

std::set<std::string> DiffPoly::symbols() const {
  std::set<std::string> out;
  for (const auto& [f, c] : terms_)
    for (const auto& x : f) out.insert(x.symbol);
  return out;
}

int DiffPoly::max_order() const {
  int m = -1;
  for (const auto& [f, c] : terms_) {
    if (f.empty()) m = std::max(m, 0);
    for (const auto& x : f) m = std::max(m, x.order);
  }
  return m;
}

int DiffPoly::max_degree() const {
  int m = -1;
  for (const auto& [f, c] : terms_) m = std::max(m, degree_of(f));
  return m;
}

DiffPoly DiffPoly::homogeneous_part(int degree) const {
  DiffPoly out;
  for (const auto& [f, c] : terms_)
    if (degree_of(f) == degree) out.terms_.emplace(f, c);
  return out;
}

namespace {

std::vector<long> descending_orders(const FactorList& f) {
  std::vector<long> k;
  k.reserve(f.size());
  for (const auto& x : f) k.push_back(x.order);
  std::sort(k.rbegin(), k.rend());
  return k;
}

}  // namespace

std::vector<DiffMonomial> DiffPoly::monomials() const {
  std::vector<DiffMonomial> out;
  out.reserve(terms_.size());
  for (const auto& [f, c] : terms_) out.push_back({c, f});
  std::stable_sort(out.begin(), out.end(), [](const DiffMonomial& a, const DiffMonomial& b) {
    if (a.degree() != b.degree()) return a.degree() < b.degree();
    auto ka = descending_orders(a.factors), kb = descending_orders(b.factors);
    if (ka != kb) return ka > kb;
    return a.factors < b.factors;
  });
  return out;
}

DiffPoly& DiffPoly::operator+=(const DiffPoly& o) {
  for (const auto& [f, c] : o.terms_) add_term(f, c);
  return *this;
}

DiffPoly& DiffPoly::operator-=(const DiffPoly& o) {
  for (const auto& [f, c] : o.terms_) add_term(f, -c);
  return *this;
}

DiffPoly& DiffPoly::operator*=(const Rational& r) {
  if (r == 0) {
    terms_.clear();
    return *this;
  }
  for (auto& [f, c] : terms_) c *= r;
  return *this;
}

DiffPoly DiffPoly::operator-() const {
  DiffPoly p = *this;
  for (auto& [f, c] : p.terms_) c = -c;
  return p;
}

DiffPoly operator*(const DiffPoly& a, const DiffPoly& b) {
  DiffPoly out;
  for (const auto& [fa, ca] : a.terms_) {
    for (const auto& [fb, cb] : b.terms_) {
      FactorList f = fa;
      f.insert(f.end(), fb.begin(), fb.end());
      out.add_term(std::move(f), ca * cb);
    }
  }
  return out;
}

DiffPoly multiply(const DiffPoly& p, const DiffPoly& q) { return p * q; }

DiffPoly total_derivative(const DiffPoly& p) {
  DiffPoly out;
  for (const auto& [f, c] : p.terms()) {
    for (size_t i = 0; i < f.size(); ++i) {
      FactorList g = f;
      g[i].order += 1;
      out.add_term(std::move(g), c);
    }
  }
  return out;
}

DiffPoly total_derivative(const DiffPoly& p, int times) {
  DiffPoly out = p;
  for (int i = 0; i < times; ++i) out = total_derivative(out);
  return out;
}

DiffPoly partial(const DiffPoly& p, const Factor& x) {
  DiffPoly out;
  for (const auto& [f, c] : p.terms()) {
    auto first = std::find(f.begin(), f.end(), x);
    if (first == f.end()) continue;
    long mult = std::count(f.begin(), f.end(), x);
    FactorList g = f;
    g.erase(g.begin() + (first - f.begin()));
    out.add_term(std::move(g), c * mult);
  }
  return out;
}

DiffPoly euler_operator(const DiffPoly& p, const std::string& symbol) {
  int top = -1;
  for (const auto& [f, c] : p.terms())
    for (const auto& x : f)
      if (x.symbol == symbol) top = std::max(top, x.order);
  DiffPoly out;
  for (int i = 0; i <= top; ++i) {
    DiffPoly d = total_derivative(partial(p, {symbol, i}), i);
    if (i % 2) out -= d;
    else out += d;
  }
  return out;
}

bool is_exact(const DiffPoly& p) {
  if (p.constant_term() != 0) return false;
  for (const auto& sym : p.symbols())
    if (!euler_operator(p, sym).is_zero()) return false;
  return true;
}

DiffPoly integrate_exact(const DiffPoly& p) {
  if (p.constant_term() != 0) throw NotExact("constant term has no polynomial antiderivative");
  DiffPoly rest = p;
  DiffPoly q;
  while (!rest.is_zero()) {
    int n = rest.max_order();
    if (n == 0) throw NotExact("undifferentiated remainder: " + to_string(rest));
    DiffPoly top;
    for (const auto& [f, c] : rest.terms()) {
      int at_top = 0;
      size_t where = 0;
      for (size_t i = 0; i < f.size(); ++i)
        if (f[i].order == n) {
          ++at_top;
          where = i;
        }
      if (at_top == 0) continue;
      if (at_top > 1) throw NotExact("nonlinear in the top derivative: " + to_string(rest));
      FactorList g = f;
      g[where].order = n - 1;
      // Euler homogeneity in the order-(n-1) jet variables.
      long below = std::count_if(f.begin(), f.end(), [n](const Factor& x) { return x.order == n - 1; });
      top.add_term(std::move(g), c / (below + 1));
    }
    rest -= total_derivative(top);
    q += top;
    if (rest.max_order() >= n) throw NotExact("top-order terms do not cancel: " + to_string(rest));
  }
  return q;
}

DiffPoly evolution_derivative(const DiffPoly& p, const std::string& symbol, const DiffPoly& rhs) {
  int top = -1;
  for (const auto& [f, c] : p.terms())
    for (const auto& x : f)
      if (x.symbol == symbol) top = std::max(top, x.order);
  DiffPoly out;
  DiffPoly drhs = rhs;
  for (int a = 0; a <= top; ++a) {
    DiffPoly dp = partial(p, {symbol, a});
    if (!dp.is_zero()) out += dp * drhs;
    drhs = total_derivative(drhs);
  }
  return out;
}

DiffPoly shift_symbol(const DiffPoly& p, const std::string& symbol, int shift) {
  DiffPoly out;
  for (const auto& [f, c] : p.terms()) {
    FactorList g = f;
    for (auto& x : g)
      if (x.symbol == symbol) x.order += shift;
    out.add_term(std::move(g), c);
  }
  return out;
}

DiffPoly rename_symbol(const DiffPoly& p, const std::string& from, const std::string& to) {
  DiffPoly out;
  for (const auto& [f, c] : p.terms()) {
    FactorList g = f;
    for (auto& x : g)
      if (x.symbol == from) x.symbol = to;
    out.add_term(std::move(g), c);
  }
  return out;
}

Rational rank_of(const DiffMonomial& m) { return Rational(m.degree()) + frac(m.weight(), 2); }

// ---------------------------------------------------------------------------
// Normal form modulo total derivatives.
//
// Work one homogeneous component at a time (fixed degree in every symbol and
// fixed weight W).  The exact subspace of that component is spanned by the
// derivatives of all monomials of weight W-1 with the same symbol degrees; a
// row echelon basis with pivots at the largest monomials is cached per
// component and the input is reduced against it.

namespace {

struct Keyed {
  std::vector<long> key;
  FactorList f;
  bool operator<(const Keyed& o) const {
    if (key != o.key) return key < o.key;
    return f < o.f;
  }
};

using Vec = std::map<Keyed, Rational>;

struct Echelon {
  std::map<Keyed, Vec> rows;  // pivot -> row with unit pivot coefficient
};

using Signature = std::vector<std::pair<std::string, int>>;

Signature signature_of(const FactorList& f) {
  Signature sig;
  for (const auto& x : f) {
    if (!sig.empty() && sig.back().first == x.symbol) sig.back().second += 1;
    else sig.emplace_back(x.symbol, 1);
  }
  return sig;
}

void nondecreasing(int w, int count, int lo, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (count == 0) {
    if (w == 0) out.push_back(cur);
    return;
  }
  for (int v = lo; v * count <= w; ++v) {
    cur.push_back(v);
    nondecreasing(w - v, count - 1, v, cur, out);
    cur.pop_back();
  }
}

void monomials_rec(const Signature& sig, size_t idx, int w, FactorList& cur, std::vector<FactorList>& out) {
  if (idx == sig.size()) {
    if (w == 0) out.push_back(cur);
    return;
  }
  for (int part = 0; part <= w; ++part) {
    std::vector<std::vector<int>> parts;
    std::vector<int> scratch;
    nondecreasing(part, sig[idx].second, 0, scratch, parts);
    for (const auto& orders : parts) {
      size_t mark = cur.size();
      for (int o : orders) cur.push_back({sig[idx].first, o});
      monomials_rec(sig, idx + 1, w - part, cur, out);
      cur.resize(mark);
    }
  }
}

std::vector<FactorList> monomials_with(const Signature& sig, int weight) {
  std::vector<FactorList> out;
  FactorList cur;
  monomials_rec(sig, 0, weight, cur, out);
  return out;
}

void reduce(Vec& v, const Echelon& e) {
  std::optional<Keyed> bound;
  while (true) {
    auto it = bound ? v.lower_bound(*bound) : v.end();
    std::optional<Keyed> hit;
    while (it != v.begin()) {
      --it;
      if (e.rows.count(it->first)) {
        hit = it->first;
        break;
      }
    }
    if (!hit) return;
    Rational c = v[*hit];
    for (const auto& [k, r] : e.rows.at(*hit)) {
      auto& slot = v[k];
      slot -= c * r;
      if (slot == 0) v.erase(k);
    }
    bound = hit;
  }
}

std::string cache_key(const MonomialOrder& order, const Signature& sig, int weight) {
  std::ostringstream os;
  os << order.name << '|' << weight;
  for (const auto& [s, d] : sig) os << '|' << s << ':' << d;
  return os.str();
}

std::shared_ptr<const Echelon> exact_subspace(const MonomialOrder& order, const Signature& sig, int weight) {
  static std::mutex mu;
  static std::unordered_map<std::string, std::shared_ptr<const Echelon>> cache;
  const std::string key = cache_key(order, sig, weight);
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
  }
  // Built outside the lock; a racing duplicate computes the same thing.
  auto e = std::make_shared<Echelon>();
  for (const auto& gen : monomials_with(sig, weight - 1)) {
    DiffPoly d = total_derivative(DiffPoly::monomial(1, gen));
    Vec v;
    for (const auto& [f, c] : d.terms()) v.emplace(Keyed{order.key(f), f}, c);
    reduce(v, *e);
    if (v.empty()) continue;
    auto pivot = std::prev(v.end());
    Rational inv = 1 / pivot->second;
    for (auto& [k, c] : v) c *= inv;
    Keyed pk = pivot->first;
    e->rows.emplace(std::move(pk), std::move(v));
  }
  std::lock_guard<std::mutex> lock(mu);
  return cache.emplace(key, std::move(e)).first->second;
}

}  // namespace

const MonomialOrder& MonomialOrder::lowest_max_order() {
  static const MonomialOrder order{"lowest-max-order", descending_orders};
  return order;
}

DiffPoly ibp_normal_form(const DiffPoly& p, const MonomialOrder& order) {
  std::map<std::pair<Signature, int>, Vec> groups;
  DiffPoly out;
  for (const auto& [f, c] : p.terms()) {
    int w = weight_of(f);
    if (f.empty() || w == 0) {
      out.add_term(f, c);
      continue;
    }
    groups[{signature_of(f), w}].emplace(Keyed{order.key(f), f}, c);
  }
  for (auto& [g, v] : groups) {
    reduce(v, *exact_subspace(order, g.first, g.second));
    for (const auto& [k, c] : v) out.add_term(k.f, c);
  }
  return out;
}

IntegralExpr IntegralExpr::of(const DiffPoly& p) { return {p, ibp_normal_form(p)}; }

IntegralExpr homotopy_hamiltonian(const DiffPoly& G, const std::string& symbol) {
  DiffPoly H;
  for (const auto& [f, c] : G.terms()) {
    for (const auto& x : f)
      if (x.symbol != symbol) throw GradientMismatch("homotopy needs a single-symbol gradient, found " + x.symbol);
    FactorList g = f;
    g.push_back({symbol, 0});
    H.add_term(std::move(g), c / (degree_of(f) + 1));
  }
  if (!(euler_operator(H, symbol) == G))
    throw GradientMismatch("not a variational derivative: " + to_string(G));
  return IntegralExpr::of(H);
}

// ---------------------------------------------------------------------------

nlohmann::json to_json(const DiffPoly& p) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& m : p.monomials()) {
    nlohmann::json factors = nlohmann::json::array();
    for (const auto& x : m.factors) factors.push_back({x.symbol, x.order});
    arr.push_back({{"coeff", to_fraction_string(m.coeff)}, {"factors", factors}});
  }
  return arr;
}

DiffPoly diffpoly_from_json(const nlohmann::json& j) {
  DiffPoly p;
  for (const auto& m : j) {
    FactorList f;
    for (const auto& x : m.at("factors")) f.push_back({x.at(0).get<std::string>(), x.at(1).get<int>()});
    p.add_term(std::move(f), parse_rational(m.at("coeff").get<std::string>()));
  }
  return p;
}

namespace {

// Runs of equal factors, in display order (highest order first).
std::vector<std::pair<Factor, int>> powers(const FactorList& f) {
  std::vector<std::pair<Factor, int>> out;
  for (const auto& x : f) {
    if (!out.empty() && out.back().first == x) out.back().second += 1;
    else out.emplace_back(x, 1);
  }
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
    if (a.first.symbol != b.first.symbol) return a.first.symbol < b.first.symbol;
    return a.first.order < b.first.order;
  });
  return out;
}

std::string plain_factor(const Factor& x) {
  if (x.order == 0) return x.symbol;
  if (x.order <= 3) return x.symbol + "_" + std::string(x.order, 'x');
  return x.symbol + "_{" + std::to_string(x.order) + "x}";
}

std::string latex_factor(const Factor& x, bool& needs_parens) {
  needs_parens = x.order > 0;
  if (x.order == 0) return x.symbol;
  if (x.order == 1) return "\\partial_x " + x.symbol;
  return "\\partial_x^{" + std::to_string(x.order) + "} " + x.symbol;
}

template <class Body>
std::string join_terms(const DiffPoly& p, Body body, bool latex) {
  if (p.is_zero()) return "0";
  std::string out;
  for (const auto& m : p.monomials()) {
    Rational mag = abs(m.coeff);
    if (out.empty()) {
      if (m.coeff < 0) out += "-";
    } else {
      out += m.coeff < 0 ? " - " : " + ";
    }
    std::string b = body(m.factors);
    if (b.empty()) {
      out += latex && !is_integer(mag) ? "\\frac{" + mag.get_num().get_str() + "}{" + mag.get_den().get_str() + "}"
                                       : mag.get_str();
      continue;
    }
    if (mag != 1) {
      if (latex && !is_integer(mag))
        out += "\\frac{" + mag.get_num().get_str() + "}{" + mag.get_den().get_str() + "}";
      else out += mag.get_str();
      out += latex ? " " : "*";
    }
    out += b;
  }
  return out;
}

}  // namespace

std::string to_string(const DiffPoly& p) {
  return join_terms(
      p,
      [](const FactorList& f) {
        std::string s;
        for (const auto& [x, n] : powers(f)) {
          if (!s.empty()) s += "*";
          s += plain_factor(x);
          if (n > 1) s += "^" + std::to_string(n);
        }
        return s;
      },
      false);
}

std::string to_latex(const DiffPoly& p) {
  return join_terms(
      p,
      [](const FactorList& f) {
        std::string s;
        for (const auto& [x, n] : powers(f)) {
          if (!s.empty()) s += " ";
          bool parens = false;
          std::string body = latex_factor(x, parens);
          if (n > 1) s += (parens ? "(" + body + ")" : body) + "^{" + std::to_string(n) + "}";
          else s += body;
        }
        return s;
      },
      true);
}

}  // namespace kdvh
