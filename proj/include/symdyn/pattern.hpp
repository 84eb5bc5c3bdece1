#pragma once

#include <string>
#include <vector>

#include "symdyn/group.hpp"

namespace symdyn {

struct Alphabet {
  std::vector<std::string> symbols;
  int size() const { return int(symbols.size()); }
  int index_of(const std::string& s) const;
  static Alphabet numeric(int q);
};

// symbols are small integers aligned with the sorted domain
class Pattern {
 public:
  Pattern() = default;
  explicit Pattern(Ctx ctx) : dom_(std::move(ctx)) {}
  Pattern(GSet domain, std::vector<uint8_t> symbols);
  static Pattern from_pairs(Ctx ctx, std::vector<std::pair<Element, int>> cells);
  static Pattern constant(GSet domain, int sym);

  const GSet& domain() const { return dom_; }
  const std::vector<uint8_t>& symbols() const { return sym_; }
  const Ctx& ctx() const { return dom_.ctx(); }
  size_t size() const { return sym_.size(); }
  bool empty() const { return sym_.empty(); }

  // -1 when g is outside the domain
  int at(const Element& g) const;
  Pattern restrict(const GSet& a) const;
  Pattern translate(const Element& g) const;
  bool agrees_with(const Pattern& o) const;

  bool operator==(const Pattern& o) const { return dom_ == o.dom_ && sym_ == o.sym_; }

  json to_json() const;
  static Pattern from_json(Ctx ctx, const json& j);

 private:
  GSet dom_;
  std::vector<uint8_t> sym_;
};

// union of patterns; conflicting cells throw
Pattern merge(const std::vector<Pattern>& parts);
Pattern overlay(const Pattern& base, const Pattern& top);

std::vector<Element> occurrences(const Pattern& host, const Pattern& probe);

}  // namespace symdyn
