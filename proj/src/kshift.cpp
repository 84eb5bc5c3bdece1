#include "symdyn/kshift.hpp"

#include <algorithm>
#include <unordered_set>

namespace symdyn {

KShiftSpec KShiftSpec::make(const GSet& k) {
  if (!k.ctx()) throw Error(ErrorKind::Config, "K has no group context");
  if (!k.contains(k.ctx()->identity())) throw Error(ErrorKind::Config, "K must contain e");
  if (k.size() < 2) throw Error(ErrorKind::Config, "K must have at least two elements");
  KShiftSpec s;
  s.K = k;
  s.kinvk = set_product(inverse_set(k), k);
  s.margin = set_product(k, s.kinvk);
  return s;
}

json KShiftSpec::to_json() const {
  json j;
  j["group"] = K.ctx()->to_json();
  j["K"] = K.to_json();
  return j;
}

KShiftSpec KShiftSpec::from_json(const Ctx& ctx, const json& j) {
  if (!j.contains("K")) throw Error(ErrorKind::Config, "kshift spec needs K");
  return make(GSet::from_json(ctx, j.at("K")));
}

bool is_k_separated(const GSet& v, const GSet& k) { return is_separated(v, k); }

Verdict is_maximal_in_window(const GSet& v, const GSet& k, const GSet& f) {
  if (!is_subset(v, f)) throw Error(ErrorKind::Precondition, "V must lie in the window");
  if (!is_separated(v, k)) return Verdict::False;
  const GSet d = set_product(inverse_set(k), k);
  const GSet c = core(f, d);
  if (c.empty()) return Verdict::Unknown;
  const auto& g = *f.ctx();
  std::unordered_set<Element, ElementHash> vs(v.begin(), v.end());
  for (const auto& x : c) {
    bool hit = false;
    for (const auto& y : d)
      if (vs.count(g.mul(y, x))) {
        hit = true;
        break;
      }
    if (!hit) return Verdict::False;
  }
  return Verdict::True;
}

GSet extend_to_maximal(const GSet& v0, const GSet& k, const GSet& f, const std::vector<Element>& order) {
  check_same(v0, k);
  if (!is_separated(v0, k)) throw Error(ErrorKind::NotSeparated, "initial set is not K-separated");
  const auto& g = *k.ctx();
  std::unordered_set<Element, ElementHash> used;
  used.reserve((v0.size() + f.size() / std::max<size_t>(1, k.size())) * k.size() * 2);
  std::vector<Element> out(v0.begin(), v0.end());
  for (const auto& v : v0)
    for (const auto& a : k) used.insert(g.mul(a, v));
  auto consider = [&](const Element& x) {
    for (const auto& a : k)
      if (used.count(g.mul(a, x))) return;
    for (const auto& a : k) used.insert(g.mul(a, x));
    out.push_back(x);
  };
  for (const auto& x : order)
    if (f.contains(x)) consider(x);
  // cells the order leaves out are swept lexicographically
  for (const auto& x : f) consider(x);
  return GSet(k.ctx(), std::move(out));
}

GSet greedy_maximal(const GSet& k, const GSet& f, const std::vector<Element>& order) {
  return extend_to_maximal(GSet(k.ctx()), k, f, order);
}

Density banach_density_window(const GSet& v, const std::vector<int>& boxes, const GSet& shifts) {
  Density d;
  if (v.empty() || shifts.empty() || boxes.empty()) return d;
  const int n = *std::max_element(boxes.begin(), boxes.end());
  const GSet f = folner_box(v.ctx(), n);
  bool first = true;
  for (const auto& s : shifts) {
    Rational r(long(set_intersection(v, translate(f, s)).size()), long(f.size()));
    if (first || r < d.lower) d.lower = r;
    if (first || r > d.upper) d.upper = r;
    first = false;
  }
  return d;
}

Pattern indicator(const GSet& v, const GSet& f) {
  std::vector<uint8_t> s(f.size(), 0);
  for (size_t i = 0; i < f.size(); ++i) s[i] = v.contains(f[i]) ? 1 : 0;
  return Pattern(f, std::move(s));
}

GSet support(const Pattern& p, int symbol) {
  std::vector<Element> out;
  for (size_t i = 0; i < p.size(); ++i)
    if (p.symbols()[i] == symbol) out.push_back(p.domain()[i]);
  return GSet::from_sorted(p.ctx(), std::move(out));
}

OraclePtr omega_k(const GSet& k) {
  KShiftSpec spec = KShiftSpec::make(k);
  auto o = std::make_shared<Oracle>("omega-k", k.ctx(), 2);
  o->add_rule(std::make_shared<KShiftRule>(spec.kinvk, kVisible));
  o->sampler = [k](const Oracle&, const GSet& region, std::mt19937_64& rng) {
    std::vector<Element> order(region.begin(), region.end());
    std::shuffle(order.begin(), order.end(), rng);
    return indicator(greedy_maximal(k, region, order), region);
  };
  return o;
}

}  // namespace symdyn
