#include "symdyn/pattern.hpp"

#include <algorithm>
#include <unordered_map>

namespace symdyn {

int Alphabet::index_of(const std::string& s) const {
  for (int i = 0; i < size(); ++i)
    if (symbols[i] == s) return i;
  return -1;
}

Alphabet Alphabet::numeric(int q) {
  Alphabet a;
  for (int i = 0; i < q; ++i) a.symbols.push_back(std::to_string(i));
  return a;
}

Pattern::Pattern(GSet domain, std::vector<uint8_t> symbols) : dom_(std::move(domain)), sym_(std::move(symbols)) {
  if (dom_.size() != sym_.size()) throw Error(ErrorKind::Precondition, "pattern domain and symbol list differ in size");
}

Pattern Pattern::from_pairs(Ctx ctx, std::vector<std::pair<Element, int>> cells) {
  std::sort(cells.begin(), cells.end());
  std::vector<Element> d;
  std::vector<uint8_t> s;
  for (size_t i = 0; i < cells.size(); ++i) {
    if (i > 0 && cells[i].first == cells[i - 1].first) {
      if (cells[i].second != cells[i - 1].second)
        throw Error(ErrorKind::Precondition, "conflicting symbols for one cell");
      continue;
    }
    if (!ctx->valid(cells[i].first)) throw Error(ErrorKind::Precondition, "element outside group");
    d.push_back(cells[i].first);
    s.push_back(uint8_t(cells[i].second));
  }
  return Pattern(GSet::from_sorted(std::move(ctx), std::move(d)), std::move(s));
}

Pattern Pattern::constant(GSet domain, int sym) {
  std::vector<uint8_t> s(domain.size(), uint8_t(sym));
  return Pattern(std::move(domain), std::move(s));
}

int Pattern::at(const Element& g) const {
  long i = dom_.index_of(g);
  return i < 0 ? -1 : sym_[i];
}

Pattern Pattern::restrict(const GSet& a) const {
  std::vector<Element> d;
  std::vector<uint8_t> s;
  auto j = a.begin();
  for (size_t i = 0; i < dom_.size(); ++i) {
    while (j != a.end() && *j < dom_[i]) ++j;
    if (j != a.end() && *j == dom_[i]) {
      d.push_back(dom_[i]);
      s.push_back(sym_[i]);
    }
  }
  return Pattern(GSet::from_sorted(dom_.ctx(), std::move(d)), std::move(s));
}

Pattern Pattern::translate(const Element& g) const {
  std::vector<std::pair<Element, int>> cells;
  cells.reserve(size());
  for (size_t i = 0; i < size(); ++i) cells.emplace_back(ctx()->mul(dom_[i], g), sym_[i]);
  return from_pairs(ctx(), std::move(cells));
}

bool Pattern::agrees_with(const Pattern& o) const {
  size_t i = 0, j = 0;
  while (i < size() && j < o.size()) {
    if (dom_[i] < o.dom_[j]) {
      ++i;
    } else if (o.dom_[j] < dom_[i]) {
      ++j;
    } else {
      if (sym_[i] != o.sym_[j]) return false;
      ++i;
      ++j;
    }
  }
  return true;
}

json Pattern::to_json() const {
  json j;
  j["domain"] = dom_.to_json();
  j["symbols"] = sym_;
  return j;
}

Pattern Pattern::from_json(Ctx ctx, const json& j) {
  if (!j.is_object() || !j.contains("domain") || !j.contains("symbols"))
    throw Error(ErrorKind::Config, "pattern needs domain and symbols");
  const auto& d = j.at("domain");
  auto s = j.at("symbols").get<std::vector<int>>();
  if (d.size() != s.size()) throw Error(ErrorKind::Config, "pattern domain and symbols differ in length");
  std::vector<std::pair<Element, int>> cells;
  for (size_t i = 0; i < s.size(); ++i) {
    if (s[i] < 0 || s[i] > 255) throw Error(ErrorKind::Config, "symbol out of range");
    cells.emplace_back(ctx->from_coords(d[i].get<std::vector<int64_t>>()), s[i]);
  }
  return from_pairs(std::move(ctx), std::move(cells));
}

Pattern merge(const std::vector<Pattern>& parts) {
  if (parts.empty()) return Pattern();
  std::vector<std::pair<Element, int>> cells;
  for (const auto& p : parts)
    for (size_t i = 0; i < p.size(); ++i) cells.emplace_back(p.domain()[i], p.symbols()[i]);
  return Pattern::from_pairs(parts.front().ctx(), std::move(cells));
}

Pattern overlay(const Pattern& base, const Pattern& top) {
  std::vector<std::pair<Element, int>> cells;
  for (size_t i = 0; i < base.size(); ++i)
    if (!top.domain().contains(base.domain()[i])) cells.emplace_back(base.domain()[i], base.symbols()[i]);
  for (size_t i = 0; i < top.size(); ++i) cells.emplace_back(top.domain()[i], top.symbols()[i]);
  return Pattern::from_pairs(base.ctx() ? base.ctx() : top.ctx(), std::move(cells));
}

std::vector<Element> occurrences(const Pattern& host, const Pattern& probe) {
  std::vector<Element> out;
  if (probe.empty() || host.empty()) return out;
  const auto& g = *host.ctx();
  std::unordered_map<Element, uint8_t, ElementHash> hm;
  hm.reserve(host.size() * 2);
  for (size_t i = 0; i < host.size(); ++i) hm.emplace(host.domain()[i], host.symbols()[i]);
  const Element a0inv = g.inv(probe.domain()[0]);
  for (size_t i = 0; i < host.size(); ++i) {
    if (host.symbols()[i] != probe.symbols()[0]) continue;
    Element c = g.mul(a0inv, host.domain()[i]);
    bool ok = true;
    for (size_t k = 1; k < probe.size() && ok; ++k) {
      auto it = hm.find(g.mul(probe.domain()[k], c));
      ok = it != hm.end() && it->second == probe.symbols()[k];
    }
    if (ok) out.push_back(c);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace symdyn
