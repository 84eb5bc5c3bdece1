#pragma once

#include <optional>
#include <random>
#include <vector>

#include "symdyn/oracle.hpp"

namespace symdyn {

enum class Verdict { False, True, Unknown };
const char* verdict_name(Verdict v);

struct SearchOptions {
  long budget = 4'000'000;
};

struct Solution {
  Verdict verdict = Verdict::Unknown;
  GSet region;
  std::vector<int8_t> vis, hid;
  long nodes = 0;
  std::optional<Element> refuting_cell;

  Pattern visible() const;
  // cells whose hidden bit is 1
  GSet hidden_ones() const;
};

// domain·box(halo); halo 0 keeps the domain
GSet halo_region(const GSet& domain, int halo);

// window instances of an oracle inside a finite region
struct Frame {
  Frame(const Oracle& o, GSet region);
  const Oracle* oracle;
  GSet region;
  std::vector<int> win_rule;
  std::vector<int> win_start;  // offsets into win_cells, size = windows + 1
  std::vector<int> win_cells;
  std::vector<int> cell_win_start;
  std::vector<int> cell_wins;
  long index(const Element& g) const { return region.index_of(g); }
  size_t windows() const { return win_rule.size(); }
};

// first completion in row-major cell order and lexicographic (visible, hidden) order,
// or a uniformly shuffled order when rng is given
Solution solve(const Frame& fr, const Pattern& vis_fixed, const Pattern* hid_fixed, const SearchOptions& opt,
               std::mt19937_64* rng = nullptr);
Solution solve(const Oracle& o, const GSet& region, const Pattern& vis_fixed, const SearchOptions& opt = {});

Verdict exact_admissible(const Oracle& o, const Pattern& p, int halo, const SearchOptions& opt = {});
Solution exact_witness(const Oracle& o, const Pattern& p, int halo, const SearchOptions& opt = {});

// least visible word over the region (row-major) extending vis_fixed; hidden layers are witnesses
Solution lexmin_completion(const Oracle& o, const GSet& region, const Pattern& vis_fixed,
                           const SearchOptions& opt = {});

// random admissible visible pattern over region (custom sampler when present)
std::optional<Pattern> sample_pattern(const Oracle& o, const GSet& region, std::mt19937_64& rng,
                                      const SearchOptions& opt = {});

}  // namespace symdyn
