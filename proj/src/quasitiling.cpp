#include "symdyn/quasitiling.hpp"

#include <algorithm>
#include <map>
#include <unordered_map>

namespace symdyn {

int Quasitiling::add_shape(const GSet& s) {
  if (!s.contains(ctx_->identity())) throw Error(ErrorKind::Precondition, "tile shapes must contain e");
  check_same(s, GSet(ctx_));
  for (size_t i = 0; i < shapes_.size(); ++i)
    if (shapes_[i] == s) return int(i);
  shapes_.push_back(s);
  return int(shapes_.size()) - 1;
}

void Quasitiling::add_tile(int shape, const Element& c) {
  if (shape < 0 || size_t(shape) >= shapes_.size()) throw Error(ErrorKind::OutOfRange, "no such shape");
  if (!center_set_.insert(c).second) throw Error(ErrorKind::Precondition, "duplicate tile center");
  tiles_.push_back({shape, c});
}

void Quasitiling::add_tile_cells(const GSet& cells, const Element& c) {
  add_tile(add_shape(translate(cells, ctx_->inv(c))), c);
}

GSet Quasitiling::tile(size_t i) const { return translate(shapes_[tiles_[i].shape], tiles_[i].center); }

GSet Quasitiling::centers() const {
  std::vector<Element> v;
  for (const auto& t : tiles_) v.push_back(t.center);
  return GSet(ctx_, std::move(v));
}

GSet Quasitiling::covered() const {
  std::vector<Element> v;
  for (size_t i = 0; i < tiles_.size(); ++i) {
    GSet t = tile(i);
    v.insert(v.end(), t.begin(), t.end());
  }
  return GSet(ctx_, std::move(v));
}

long Quasitiling::tile_index_by_center(const Element& c) const {
  if (!center_set_.count(c)) return -1;
  for (size_t i = 0; i < tiles_.size(); ++i)
    if (tiles_[i].center == c) return long(i);
  return -1;
}

json Quasitiling::to_json() const {
  json j;
  j["shapes"] = json::array();
  for (const auto& s : shapes_) j["shapes"].push_back(s.to_json());
  j["tiles"] = json::array();
  for (const auto& t : tiles_) j["tiles"].push_back(json::array({t.shape, ctx_->coords(t.center)}));
  if (!meta.empty()) j["meta"] = meta;
  return j;
}

Quasitiling Quasitiling::from_json(const Ctx& ctx, const json& j) {
  if (!j.contains("shapes") || !j.contains("tiles")) throw Error(ErrorKind::Config, "quasitiling needs shapes and tiles");
  Quasitiling q(ctx);
  for (const auto& s : j.at("shapes")) {
    GSet g = GSet::from_json(ctx, s);
    if (!g.contains(ctx->identity())) throw Error(ErrorKind::Config, "tile shapes must contain e");
    q.shapes_.push_back(std::move(g));
  }
  for (const auto& t : j.at("tiles")) {
    if (!t.is_array() || t.size() != 2) throw Error(ErrorKind::Config, "tile must be [shape_idx, center]");
    q.add_tile(t[0].get<int>(), ctx->from_coords(t[1].get<std::vector<int64_t>>()));
  }
  if (j.contains("meta")) q.meta = j.at("meta");
  return q;
}

const char* grade_name(Grade g) {
  switch (g) {
    case Grade::Disjoint: return "disjoint";
    case Grade::StronglyEpsDisjoint: return "strongly_eps_disjoint";
    case Grade::EpsDisjoint: return "eps_disjoint";
    default: return "none";
  }
}

namespace {

void check_eps(const Rational& eps) {
  if (eps <= 0 || eps >= 1) throw Error(ErrorKind::OutOfRange, "epsilon must lie in (0,1)");
}

// |T| - |T̃| <= ε|T|
bool retains(long kept, long size, const Rational& eps) { return Rational(size - kept) <= eps * size; }

// left nodes with demands, right nodes with capacities; augments one unit at a time in adjacency order
class BMatching {
 public:
  BMatching(std::vector<std::vector<int>> adj, std::vector<int> cap)
      : adj_(std::move(adj)), cap_(std::move(cap)), users_(cap_.size()), seen_(cap_.size(), 0) {}

  bool augment(int i) {
    ++stamp_;
    return dfs(i);
  }
  const std::vector<std::vector<int>>& users() const { return users_; }

 private:
  bool uses(int i, int j) const { return std::find(users_[j].begin(), users_[j].end(), i) != users_[j].end(); }
  bool dfs(int i) {
    std::vector<int> mine;
    for (int j : adj_[i]) {
      if (seen_[j] == stamp_ || uses(i, j)) continue;
      seen_[j] = stamp_;
      if (int(users_[j].size()) < cap_[j]) {
        users_[j].push_back(i);
        return true;
      }
      mine.push_back(j);
    }
    for (int j : mine)
      for (size_t k = 0; k < users_[j].size(); ++k) {
        const int other = users_[j][k];
        if (dfs(other)) {
          users_[j][k] = i;
          return true;
        }
      }
    return false;
  }
  std::vector<std::vector<int>> adj_;
  std::vector<int> cap_;
  std::vector<std::vector<int>> users_;
  std::vector<long> seen_;
  long stamp_ = 0;
};

// T̃ = T minus every other tile at least as large
std::vector<GSet> strong_cores(const Quasitiling& t) {
  const size_t n = t.size();
  std::unordered_map<Element, std::vector<int>, ElementHash> cover;
  std::vector<GSet> tiles(n);
  for (size_t i = 0; i < n; ++i) {
    tiles[i] = t.tile(i);
    for (const auto& x : tiles[i]) cover[x].push_back(int(i));
  }
  std::vector<GSet> out(n);
  for (size_t i = 0; i < n; ++i)
    out[i] = filter(tiles[i], [&](const Element& x) {
      for (int o : cover[x])
        if (size_t(o) != i && tiles[o].size() >= tiles[i].size()) return false;
      return true;
    });
  return out;
}

}  // namespace

int r_epsilon(const Rational& eps) {
  check_eps(eps);
  Rational p = 1;
  int r = 0;
  while (p >= eps) {
    p *= (1 - eps);
    ++r;
  }
  return r;
}

Quasitiling ow_construct(const GSet& f, const std::vector<GSet>& shapes, const Rational& eps) {
  check_eps(eps);
  if (shapes.empty()) throw Error(ErrorKind::Precondition, "need at least one shape");
  const Ctx& ctx = f.ctx();
  for (size_t i = 0; i < shapes.size(); ++i) {
    check_same(shapes[i], f);
    if (!shapes[i].contains(ctx->identity())) throw Error(ErrorKind::Precondition, "shapes must contain e");
    if (!is_symmetric(shapes[i])) throw Error(ErrorKind::NotSymmetric, "shapes must be symmetric");
    if (i > 0 && (!is_subset(shapes[i - 1], shapes[i]) || shapes[i - 1] == shapes[i]))
      throw Error(ErrorKind::Precondition, "shapes must be strictly nested");
  }
  Quasitiling q(ctx);
  for (const auto& s : shapes) q.add_shape(s);
  const size_t n = f.size();
  const DenseIndex fidx(f);
  std::vector<int> cov(n, 0), owner(n, -1);
  std::vector<int> center_shape(n, -1);
  std::vector<long> kept;
  std::vector<int> idx;
  std::vector<int> loss;
  for (int si = int(shapes.size()) - 1; si >= 0; --si) {
    const GSet& s = shapes[si];
    const long sz = long(s.size());
    for (size_t ci = 0; ci < n; ++ci) {
      if (cov[ci]) continue;
      const Element& c = f[ci];
      idx.clear();
      bool fits = true;
      long overlap = 0;
      for (const auto& a : s) {
        long k = fidx.index_of(ctx->mul(a, c));
        if (k < 0) {
          fits = false;
          break;
        }
        idx.push_back(int(k));
        if (cov[k]) ++overlap;
      }
      if (!fits || !retains(sz - overlap, sz, eps)) continue;
      // tiles of this shape lose cells they alone covered
      loss.assign(q.size(), 0);
      bool ok = true;
      for (int k : idx) {
        if (center_shape[k] == si) ok = false;
        if (cov[k] == 1 && q.tiles()[owner[k]].shape == si) ++loss[owner[k]];
      }
      for (size_t t = 0; ok && t < q.size(); ++t)
        if (loss[t] && !retains(kept[t] - loss[t], sz, eps)) ok = false;
      if (!ok) continue;
      for (size_t t = 0; t < q.size(); ++t) kept[t] -= loss[t];
      kept.push_back(sz - overlap);
      const int me = int(q.size());
      q.add_tile(si, c);
      for (int k : idx) {
        if (++cov[k] == 1) owner[k] = me;
      }
      center_shape[f.index_of(c)] = si;
    }
  }
  q.meta = {{"construction", "greedy: largest shape first, lexicographic centers, retention-checked"},
            {"epsilon", eps.str()}};
  GSet cr = core(f, shapes.back());
  if (cr.empty()) throw Error(ErrorKind::Infeasible, "window too small: core of the largest shape is empty");
  if (Rational(1) - covering_fraction(q, cr) > eps)
    throw Error(ErrorKind::Infeasible, "window too small: covering of the core is " +
                                           covering_fraction(q, cr).str());
  return q;
}

Grade disjointness_grade(const Quasitiling& t, const Rational& eps) {
  const size_t n = t.size();
  std::unordered_map<Element, std::vector<int>, ElementHash> cover;
  std::vector<GSet> tiles(n);
  bool disjoint = true;
  for (size_t i = 0; i < n; ++i) {
    tiles[i] = t.tile(i);
    for (const auto& x : tiles[i]) {
      auto& v = cover[x];
      v.push_back(int(i));
      if (v.size() > 1) disjoint = false;
    }
  }
  if (disjoint) return Grade::Disjoint;
  auto strong = strong_cores(t);
  bool is_strong = true;
  for (size_t i = 0; i < n && is_strong; ++i)
    is_strong = strong[i].contains(t.tiles()[i].center) && retains(long(strong[i].size()), long(tiles[i].size()), eps);
  if (is_strong) return Grade::StronglyEpsDisjoint;

  // ε-disjoint: pairwise disjoint (1-ε)-subsets holding their centers, as a b-matching of cells to tiles
  std::unordered_map<Element, int, ElementHash> cell_id;
  for (const auto& [x, _] : cover) cell_id.emplace(x, int(cell_id.size()));
  std::vector<int> cap(cell_id.size(), 1);
  std::vector<std::vector<int>> adj(n);
  std::vector<long> demand(n);
  std::unordered_set<Element, ElementHash> centers;
  for (const auto& tl : t.tiles()) centers.insert(tl.center);
  for (size_t i = 0; i < n; ++i) {
    long need = 0;
    while (!retains(need, long(tiles[i].size()), eps)) ++need;
    demand[i] = std::max<long>(0, need - 1);  // the center is reserved
    for (const auto& x : tiles[i])
      if (!centers.count(x)) adj[i].push_back(cell_id[x]);
  }
  BMatching bm(std::move(adj), std::move(cap));
  for (size_t i = 0; i < n; ++i)
    for (long k = 0; k < demand[i]; ++k)
      if (!bm.augment(int(i))) return Grade::None;
  return Grade::EpsDisjoint;
}

Rational covering_fraction(const Quasitiling& t, const GSet& f) {
  if (f.empty()) throw Error(ErrorKind::Precondition, "covering fraction of an empty set");
  return Rational(long(set_intersection(t.covered(), f).size()), long(f.size()));
}

Quasitiling shrink_to_disjoint(const Quasitiling& t, const Rational& eps) {
  check_eps(eps);
  Grade g = disjointness_grade(t, eps);
  if (g != Grade::Disjoint && g != Grade::StronglyEpsDisjoint)
    throw Error(ErrorKind::Precondition, "quasitiling is not strongly epsilon-disjoint");
  const size_t n = t.size();
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  std::vector<size_t> sizes(n);
  for (size_t i = 0; i < n; ++i) sizes[i] = t.shapes()[t.tiles()[i].shape].size();
  std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
    if (sizes[a] != sizes[b]) return sizes[a] > sizes[b];
    return t.tiles()[a].center < t.tiles()[b].center;
  });
  std::unordered_set<Element, ElementHash> taken;
  std::vector<GSet> cut(n);
  for (size_t i : order) {
    cut[i] = filter(t.tile(i), [&](const Element& x) { return !taken.count(x); });
    for (const auto& x : t.tile(i)) taken.insert(x);
  }
  Quasitiling out(t.ctx());
  for (size_t i = 0; i < n; ++i) out.add_tile_cells(cut[i], t.tiles()[i].center);
  out.meta = t.meta;
  return out;
}

bool check_center_separation(const Quasitiling& t, const GSet& k) { return is_separated(t.centers(), k); }

Quasitiling recenter_with_hole(const Quasitiling& t, const GSet& k, const std::optional<GSet>& kprime,
                               const Quasitiling* original) {
  const Ctx& ctx = t.ctx();
  check_same(k, GSet(ctx));
  GSet kp = kprime ? *kprime : set_union(k, inverse_set(k));
  if (!is_symmetric(kp)) throw Error(ErrorKind::NotSymmetric, "K' must be symmetric");
  if (!is_subset(k, kp)) throw Error(ErrorKind::Precondition, "K' must contain K");
  if (!check_center_separation(t, kp)) throw Error(ErrorKind::NotSeparated, "centers are not K'-separated");
  if (disjointness_grade(t, Rational(1, 2)) != Grade::Disjoint)
    throw Error(ErrorKind::Precondition, "recentering needs a disjoint quasitiling");
  if (original) {
    if (original->size() != t.size()) throw Error(ErrorKind::Precondition, "original quasitiling does not match");
    for (size_t i = 0; i < t.size(); ++i) {
      long j = original->tile_index_by_center(t.tiles()[i].center);
      if (j < 0) throw Error(ErrorKind::Precondition, "original quasitiling lacks a center");
      if (!is_subset(translate(k, t.tiles()[i].center), original->tile(size_t(j))))
        throw Error(ErrorKind::Precondition, "Kc is not inside its original tile");
    }
  }
  GSet kc = set_product(k, t.centers());
  Quasitiling out(ctx);
  for (size_t i = 0; i < t.size(); ++i) {
    const Element& c = t.tiles()[i].center;
    out.add_tile_cells(set_union(set_difference(t.tile(i), kc), translate(k, c)), c);
  }
  out.meta = t.meta;
  return out;
}

Quasitiling complete_to_tiling(const Quasitiling& t, const GSet& f, const Rational& eps, const CompleteOptions& opt) {
  check_eps(eps);
  const Ctx& ctx = t.ctx();
  if (t.size() == 0) throw Error(ErrorKind::Precondition, "nothing to complete");
  if (disjointness_grade(t, eps) != Grade::Disjoint) throw Error(ErrorKind::Precondition, "quasitiling must be disjoint");
  size_t smax = 0;
  for (size_t i = 1; i < t.shapes().size(); ++i)
    if (t.shapes()[i].size() > t.shapes()[smax].size()) smax = i;
  const GSet& big = t.shapes()[smax];
  GSet cr = core(f, big);
  if (cr.empty()) throw Error(ErrorKind::Precondition, "window core is empty");
  GSet cov = t.covered();
  if (Rational(long(set_intersection(cov, cr).size()), long(cr.size())) < 1 - eps)
    throw Error(ErrorKind::Precondition, "quasitiling does not cover 1-epsilon of the core");
  const GSet reach = opt.reach ? *opt.reach : set_product(big, inverse_set(big));
  GSet holes = set_difference(cr, cov);

  const int d = ctx->free_rank();
  std::map<Element, int> by_center;
  for (size_t i = 0; i < t.size(); ++i) by_center[t.tiles()[i].center] = int(i);
  std::vector<std::vector<int>> adj(holes.size());
  for (size_t a = 0; a < holes.size(); ++a) {
    std::vector<std::pair<std::pair<int, Element>, int>> cand;
    for (const auto& r : reach) {
      // a = r·c  ⇒  c = r⁻¹·a
      Element c = ctx->mul(ctx->inv(r), holes[a]);
      auto it = by_center.find(c);
      if (it == by_center.end()) continue;
      cand.push_back({{free_norm(ctx->mul(holes[a], ctx->inv(c)), d), c}, it->second});
    }
    std::sort(cand.begin(), cand.end());
    for (const auto& x : cand) adj[a].push_back(x.second);
  }
  std::vector<int> cap(t.size());
  for (size_t i = 0; i < t.size(); ++i) {
    Rational g = 2 * eps * long(t.shapes()[t.tiles()[i].shape].size());
    int c = 0;
    while (c < g) ++c;
    cap[i] = c;
  }
  BMatching bm(std::move(adj), cap);
  for (size_t a = 0; a < holes.size(); ++a) {
    if (bm.augment(int(a))) continue;
    if (opt.strict) {
      std::string where;
      for (auto v : ctx->coords(holes[a])) where += (where.empty() ? "" : ",") + std::to_string(v);
      throw Error(ErrorKind::Infeasible, "no tile within reach has capacity for point (" + where + ")");
    }
  }
  std::vector<std::vector<Element>> gain(t.size());
  for (size_t i = 0; i < t.size(); ++i)
    for (int a : bm.users()[i]) gain[i].push_back(holes[size_t(a)]);
  Quasitiling out(ctx);
  for (size_t i = 0; i < t.size(); ++i)
    out.add_tile_cells(set_union(t.tile(i), GSet(ctx, gain[i])), t.tiles()[i].center);
  out.meta = t.meta;
  return out;
}

Quasitiling congruent_refine(const Quasitiling& lower, const std::vector<GSet>& shapes, const Rational& eps,
                             const GSet& f) {
  const Ctx& ctx = f.ctx();
  Quasitiling cand = shrink_to_disjoint(ow_construct(f, shapes, eps), eps);
  if (lower.size() == 0) return cand;
  std::unordered_map<Element, int, ElementHash> low_of;
  std::vector<GSet> low(lower.size());
  for (size_t i = 0; i < lower.size(); ++i) {
    low[i] = lower.tile(i);
    for (const auto& x : low[i]) low_of[x] = int(i);
  }
  // a lower tile stays with a new tile containing it, else goes whole to the first new tile whose center it holds
  std::vector<int> assigned(lower.size(), -1);
  std::vector<GSet> up(cand.size());
  for (size_t j = 0; j < cand.size(); ++j) up[j] = cand.tile(j);
  for (size_t i = 0; i < lower.size(); ++i)
    for (size_t j = 0; j < cand.size() && assigned[i] < 0; ++j)
      if (is_subset(low[i], up[j])) assigned[i] = int(j);
  for (size_t j = 0; j < cand.size(); ++j) {
    auto it = low_of.find(cand.tiles()[j].center);
    if (it != low_of.end() && assigned[it->second] < 0) assigned[it->second] = int(j);
  }
  Quasitiling out(ctx);
  for (size_t j = 0; j < cand.size(); ++j) {
    const Element& c = cand.tiles()[j].center;
    auto it = low_of.find(c);
    if (it != low_of.end() && assigned[it->second] != int(j)) continue;
    std::vector<Element> cells;
    for (const auto& x : up[j])
      if (!low_of.count(x)) cells.push_back(x);
    for (size_t i = 0; i < lower.size(); ++i)
      if (assigned[i] == int(j)) cells.insert(cells.end(), low[i].begin(), low[i].end());
    out.add_tile_cells(GSet(ctx, std::move(cells)), c);
  }
  out.meta = cand.meta;
  out.meta["refined"] = true;
  GSet cr = core(f, shapes.back());
  if (!cr.empty() && 1 - covering_fraction(out, cr) > eps)
    throw Error(ErrorKind::Infeasible, "refined covering of the core is " +
                                           covering_fraction(out, cr).str());
  return out;
}

bool is_congruent(const Quasitiling& lower, const Quasitiling& upper) {
  std::unordered_map<Element, int, ElementHash> up_of;
  for (size_t j = 0; j < upper.size(); ++j)
    for (const auto& x : upper.tile(j)) up_of[x] = int(j);
  for (size_t i = 0; i < lower.size(); ++i) {
    int owner = -2;
    for (const auto& x : lower.tile(i)) {
      auto it = up_of.find(x);
      int o = it == up_of.end() ? -1 : it->second;
      if (owner == -2) owner = o;
      else if (owner != o) return false;
    }
  }
  return true;
}

bool hierarchy_congruent(const Hierarchy& h) {
  for (size_t n = 0; n + 1 < h.levels.size(); ++n)
    if (!is_congruent(h.levels[n], h.levels[n + 1])) return false;
  for (size_t n = 0; n + 1 < h.eps.size(); ++n)
    if (h.eps[n + 1] > h.eps[n]) return false;
  return true;
}

Hierarchy build_hierarchy(const GSet& f, const std::vector<std::vector<GSet>>& shapes,
                          const std::vector<Rational>& eps) {
  if (shapes.size() != eps.size()) throw Error(ErrorKind::Config, "one epsilon per level");
  Hierarchy h;
  // outermost tiles of all levels so far; each new level is refined against these
  Quasitiling frontier(f.ctx());
  for (size_t n = 0; n < shapes.size(); ++n) {
    Quasitiling q = n == 0 ? shrink_to_disjoint(ow_construct(f, shapes[0], eps[0]), eps[0])
                           : congruent_refine(frontier, shapes[n], eps[n], f);
    const GSet cov = q.covered();
    Quasitiling next = q;
    for (size_t i = 0; i < frontier.size(); ++i) {
      GSet s = frontier.tile(i);
      if (!intersects(s, cov)) next.add_tile_cells(s, frontier.tiles()[i].center);
    }
    frontier = std::move(next);
    h.levels.push_back(std::move(q));
    h.eps.push_back(eps[n]);
  }
  return h;
}

std::vector<TileRef> primary_subtiles(const Hierarchy& h, int level, int tile) {
  if (level < 0 || size_t(level) >= h.levels.size() || tile < 0 || size_t(tile) >= h.levels[level].size())
    throw Error(ErrorKind::OutOfRange, "no such tile");
  const GSet top = h.levels[level].tile(size_t(tile));
  std::vector<TileRef> out;
  for (int k = 0; k < level; ++k)
    for (size_t i = 0; i < h.levels[k].size(); ++i) {
      GSet s = h.levels[k].tile(i);
      if (!is_subset(s, top)) continue;
      bool inner = false;
      for (int l = k + 1; l < level && !inner; ++l)
        for (size_t j = 0; j < h.levels[l].size() && !inner; ++j) inner = is_subset(s, h.levels[l].tile(j));
      if (!inner) out.push_back({k, int(i)});
    }
  return out;
}

}  // namespace symdyn
