#pragma once

#include <string>
#include <vector>

#include "symdyn/kshift.hpp"

namespace fx {

using namespace symdyn;

inline GSet zset(const Ctx& c, std::initializer_list<int> xs) {
  std::vector<Element> v;
  for (int x : xs) v.push_back(c->make_elem({x}));
  return GSet(c, v);
}

inline GSet z2set(const Ctx& c, std::initializer_list<std::pair<int, int>> xs) {
  std::vector<Element> v;
  for (auto [a, b] : xs) v.push_back(c->make_elem({a, b}));
  return GSet(c, v);
}

// 1D word on [start, start+len)
inline Pattern word(const Ctx& c, const std::string& w, int start = 0) {
  std::vector<std::pair<Element, int>> cells;
  for (size_t i = 0; i < w.size(); ++i) cells.emplace_back(c->make_elem({start + int(i)}), w[i] - '0');
  return Pattern::from_pairs(c, cells);
}

inline std::string str(const Pattern& p) {
  std::string s;
  for (auto v : p.symbols()) s += char('0' + v);
  return s;
}

// the triangle pair of the margin counterexample in Z^2
struct Triangles {
  Ctx ctx = make_ctx(2);
  GSet K = z2set(ctx, {{0, 1}, {0, 0}, {1, 0}});
  Pattern alpha1, alpha2;
  Triangles() {
    std::vector<std::pair<Element, int>> a, b;
    for (auto [x, y] : std::vector<std::pair<int, int>>{{-2, 1}, {-2, 2}, {-2, 3}, {-1, 2}, {-1, 3}, {0, 3}})
      a.emplace_back(ctx->make_elem({x, y}), (x == -2 && y == 1) || (x == 0 && y == 3) ? 1 : 0);
    for (auto [x, y] : std::vector<std::pair<int, int>>{{1, -2}, {2, -2}, {3, -2}, {2, -1}, {3, -1}, {3, 0}})
      b.emplace_back(ctx->make_elem({x, y}), (x == 1 && y == -2) || (x == 3 && y == 0) ? 1 : 0);
    alpha1 = Pattern::from_pairs(ctx, a);
    alpha2 = Pattern::from_pairs(ctx, b);
  }
};

// K = {(0,0),(0,1),(0,5)} in Z×Z6
inline GSet zz6_k(const Ctx& c) { return GSet(c, {c->make_elem({0}, 0), c->make_elem({0}, 1), c->make_elem({0}, 5)}); }

}  // namespace fx
