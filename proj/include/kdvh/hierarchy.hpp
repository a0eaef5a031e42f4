#pragma once

#include <vector>

#include "kdvh/diffpoly.hpp"

namespace kdvh {

// Level l of the KdV hierarchy u_t = ∂_x G_l(u), all in the symbol "u".
struct HierarchyLevel {
  int l = 0;
  DiffPoly G;
  IntegralExpr H;
  DiffPoly rhs;
};

HierarchyLevel base_level();
HierarchyLevel lenard_step(const HierarchyLevel& level);
// Memoized; safe to call from several threads.
const HierarchyLevel& generate(int l);

struct RankGroup {
  int degree = 0;
  int weight = 0;
  Rational rank;
  std::vector<DiffMonomial> monomials;
};

struct RankReport {
  int l = 0;
  std::vector<RankGroup> groups;  // ascending degree
};

// Throws RankViolation if a monomial of rhs breaks |n| = 2(l-k)+3.
RankReport classify(const HierarchyLevel& level);

// ∫ grad H_m · ∂_x G_l vanishes modulo total derivatives.
bool flows_commute(int m, int l);

}  // namespace kdvh
