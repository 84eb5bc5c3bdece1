#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "symdyn/search.hpp"

namespace symdyn {

struct CensusOptions {
  int halo = 0;
  int max_width = 8;  // cells per column of the strip traversal
  long max_states = 400000;
  long list_budget = 2'000'000;
  bool parallel = false;
  SearchOptions search;
  std::optional<Pattern> pin_hidden;  // hidden symbols fixed on these region cells
};

// Exact census of visible blocks over a domain that extend to a locally
// admissible pattern on domain·box(halo). Blocks are ordered lexicographically
// over the sorted domain, first cell most significant.
class Census {
 public:
  static std::shared_ptr<const Census> build(const Oracle& o, const GSet& domain, const CensusOptions& opt = {});

  const GSet& domain() const { return domain_; }
  int halo() const { return halo_; }
  const BigInt& count() const { return count_; }
  const std::string& method() const { return method_; }
  size_t state_count() const { return state_total_; }

  bool contains(const Pattern& b) const;
  BigInt rank(const Pattern& b) const;
  Pattern unrank(const BigInt& i) const;

 private:
  struct Column {
    std::vector<int> dom_pos;  // positions in domain_ of the visible cells
    std::vector<int> label_radix;
    // per state at the previous boundary: sorted (label, next state)
    std::vector<std::vector<std::pair<uint32_t, int>>> next;
  };
  std::vector<uint32_t> labels_of(const Pattern& b) const;

  GSet domain_;
  int halo_ = 0;
  int q_ = 2;
  std::string method_;
  BigInt count_;
  size_t state_total_ = 0;
  std::vector<Column> cols_;
  std::vector<std::vector<BigInt>> cnt_;  // cnt_[c][s]: completions from state s before column c
  std::vector<std::vector<uint8_t>> list_;  // fallback enumeration
};

using CensusPtr = std::shared_ptr<const Census>;

BigInt count_blocks(const Oracle& o, const GSet& domain, const CensusOptions& opt = {});
// (1/|F_n|) log count over F_n = box(n)
double entropy_estimate(const Oracle& o, int n, const CensusOptions& opt = {});
// log(count(F_n)/count(F_{n-1})) / (|F_n| - |F_{n-1}|), a faster converging companion
double entropy_increment(const Oracle& o, int n, const CensusOptions& opt = {});

}  // namespace symdyn
