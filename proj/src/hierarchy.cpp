#include "kdvh/hierarchy.hpp"

#include <deque>
#include <mutex>

#include "kdvh/errors.hpp"

namespace kdvh {

HierarchyLevel base_level() {
  HierarchyLevel lv;
  lv.l = 0;
  lv.G = DiffPoly::var("u");
  lv.H = homotopy_hamiltonian(lv.G);
  lv.rhs = total_derivative(lv.G);
  return lv;
}

HierarchyLevel lenard_step(const HierarchyLevel& level) {
  const DiffPoly& g = level.G;
  const DiffPoly u = DiffPoly::var("u");
  const DiffPoly ux = DiffPoly::var("u", 1);
  DiffPoly next = total_derivative(g, 3) + frac(2, 3) * (u * total_derivative(g)) + frac(1, 3) * (ux * g);
  HierarchyLevel out;
  out.l = level.l + 1;
  out.G = integrate_exact(next);
  out.H = homotopy_hamiltonian(out.G);
  out.rhs = next;
  return out;
}

const HierarchyLevel& generate(int l) {
  if (l < 0) throw std::invalid_argument("hierarchy level must be nonnegative");
  // deque keeps references stable while the cache grows.
  static std::mutex mu;
  static std::deque<HierarchyLevel> cache;
  std::lock_guard<std::mutex> lock(mu);
  if (cache.empty()) cache.push_back(base_level());
  while (static_cast<int>(cache.size()) <= l) cache.push_back(lenard_step(cache.back()));
  return cache[l];
}

RankReport classify(const HierarchyLevel& level) {
  RankReport report;
  report.l = level.l;
  const Rational expected_rank = Rational(level.l) + frac(3, 2);
  for (const auto& m : level.rhs.monomials()) {
    const int k = m.degree();
    const int w = m.weight();
    if (w != 2 * (level.l - k) + 3 || rank_of(m) != expected_rank)
      throw RankViolation("monomial of degree " + std::to_string(k) + " has weight " + std::to_string(w) +
                          " at level " + std::to_string(level.l));
    if (report.groups.empty() || report.groups.back().degree != k)
      report.groups.push_back({k, w, rank_of(m), {}});
    report.groups.back().monomials.push_back(m);
  }
  return report;
}

bool flows_commute(int m, int l) {
  DiffPoly density = euler_operator(generate(m).H.canonical, "u") * generate(l).rhs;
  return ibp_normal_form(density).is_zero();
}

}  // namespace kdvh
