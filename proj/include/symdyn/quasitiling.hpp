#pragma once

#include <optional>
#include <unordered_set>
#include <vector>

#include "symdyn/group.hpp"

namespace symdyn {

struct Tile {
  int shape = 0;
  Element center;
};

// tiles are S·c with S from the shape list; every shape contains e
class Quasitiling {
 public:
  Quasitiling() = default;
  explicit Quasitiling(Ctx ctx) : ctx_(std::move(ctx)) {}

  const Ctx& ctx() const { return ctx_; }
  const std::vector<GSet>& shapes() const { return shapes_; }
  const std::vector<Tile>& tiles() const { return tiles_; }
  size_t size() const { return tiles_.size(); }

  int add_shape(const GSet& s);
  void add_tile(int shape, const Element& c);
  // interns cells·c⁻¹ as a shape
  void add_tile_cells(const GSet& cells, const Element& c);

  GSet tile(size_t i) const;
  GSet centers() const;
  GSet covered() const;
  long tile_index_by_center(const Element& c) const;

  json meta = json::object();
  json to_json() const;
  static Quasitiling from_json(const Ctx& ctx, const json& j);

 private:
  Ctx ctx_;
  std::vector<GSet> shapes_;
  std::vector<Tile> tiles_;
  std::unordered_set<Element, ElementHash> center_set_;
};

enum class Grade { Disjoint, StronglyEpsDisjoint, EpsDisjoint, None };
const char* grade_name(Grade g);

// smallest r with (1-ε)^r < ε
int r_epsilon(const Rational& eps);

Quasitiling ow_construct(const GSet& f, const std::vector<GSet>& shapes, const Rational& eps);
Grade disjointness_grade(const Quasitiling& t, const Rational& eps);
Rational covering_fraction(const Quasitiling& t, const GSet& f);
Quasitiling shrink_to_disjoint(const Quasitiling& t, const Rational& eps);

bool check_center_separation(const Quasitiling& t, const GSet& k);
// (T̃ \ KC) ∪ Kc; kprime defaults to K ∪ K⁻¹
Quasitiling recenter_with_hole(const Quasitiling& t, const GSet& k, const std::optional<GSet>& kprime = std::nullopt,
                               const Quasitiling* original = nullptr);

struct CompleteOptions {
  std::optional<GSet> reach;  // default S_max·S_max⁻¹
  bool strict = true;         // unmatched points throw; otherwise they stay uncovered
};
Quasitiling complete_to_tiling(const Quasitiling& t, const GSet& f, const Rational& eps,
                               const CompleteOptions& opt = {});

Quasitiling congruent_refine(const Quasitiling& lower, const std::vector<GSet>& shapes, const Rational& eps,
                             const GSet& f);

struct Hierarchy {
  std::vector<Quasitiling> levels;
  std::vector<Rational> eps;
};
bool is_congruent(const Quasitiling& lower, const Quasitiling& upper);
bool hierarchy_congruent(const Hierarchy& h);
Hierarchy build_hierarchy(const GSet& f, const std::vector<std::vector<GSet>>& shapes, const std::vector<Rational>& eps);

struct TileRef {
  int level = 0;
  int tile = 0;
  bool operator==(const TileRef&) const = default;
};
// subtiles of levels[level].tile(tile) from lower levels, not inside any intermediate tile
std::vector<TileRef> primary_subtiles(const Hierarchy& h, int level, int tile);

}  // namespace symdyn
