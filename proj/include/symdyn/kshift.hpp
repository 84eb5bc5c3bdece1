#pragma once

#include <optional>
#include <random>
#include <vector>

#include "symdyn/census.hpp"
#include "symdyn/search.hpp"

namespace symdyn {

struct KShiftSpec {
  GSet K;
  GSet kinvk;   // K⁻¹K
  GSet margin;  // KK⁻¹K
  static KShiftSpec make(const GSet& k);
  json to_json() const;
  static KShiftSpec from_json(const Ctx& ctx, const json& j);
};

bool is_k_separated(const GSet& v, const GSet& k);
// (II) on V, (I) on core(F, K⁻¹K); Unknown when that core is empty
Verdict is_maximal_in_window(const GSet& v, const GSet& k, const GSet& f);

// empty order means the lexicographic order of F
GSet greedy_maximal(const GSet& k, const GSet& f, const std::vector<Element>& order = {});
GSet extend_to_maximal(const GSet& v0, const GSet& k, const GSet& f, const std::vector<Element>& order = {});

struct Density {
  Rational lower, upper;
};
// min/max of |V ∩ F g|/|F| over the shifts, F the largest of the boxes
Density banach_density_window(const GSet& v, const std::vector<int>& boxes, const GSet& shifts);

Pattern indicator(const GSet& v, const GSet& f);
GSet support(const Pattern& p, int symbol = 1);

// Ω_K: visible 0/1 layer, windows K⁻¹K; samples by random-order greedy
OraclePtr omega_k(const GSet& k);

}  // namespace symdyn
