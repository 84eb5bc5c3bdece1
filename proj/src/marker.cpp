#include "symdyn/marker.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <sstream>
#include <unordered_set>

namespace symdyn {

namespace {

GSet prod(std::initializer_list<const GSet*> sets) {
  auto it = sets.begin();
  GSet out = **it;
  for (++it; it != sets.end(); ++it) out = set_product(out, **it);
  return out;
}

GSet sym_closure(const GSet& a) { return set_union(a, inverse_set(a)); }

std::string coord_str(const Ctx& ctx, const Element& e) {
  std::string s;
  for (auto c : ctx->coords(e)) s += (s.empty() ? "" : ",") + std::to_string(c);
  return "(" + s + ")";
}

json elem_json(const Ctx& ctx, const Element& e) { return ctx->coords(e); }
Element elem_from(const Ctx& ctx, const json& j) { return ctx->from_coords(j.get<std::vector<int64_t>>()); }

// elements of free norm exactly r, lexicographic
GSet shell(const Ctx& ctx, int r) {
  if (r == 0) return folner_box(ctx, 0);
  return set_difference(folner_box(ctx, r), folner_box(ctx, r - 1));
}

int radius_of(const GSet& s) {
  int r = 0;
  const int d = s.ctx()->free_rank();
  for (const auto& g : s) r = std::max(r, free_norm(g, d));
  return r;
}

GSet gset_of(const Ctx& ctx, std::vector<Element> v) { return GSet(ctx, std::move(v)); }

struct Derived {
  GSet M2, RM2, W2, W2RM2, W4RM2;
  explicit Derived(const GridSpec& s) {
    M2 = set_product(s.M, s.M);
    RM2 = set_product(s.R(), M2);
    W2 = set_product(s.W, s.W);
    W2RM2 = set_product(W2, RM2);
    W4RM2 = set_product(W2, W2RM2);
  }
};

Solution checked(Solution s, const char* what) {
  if (s.verdict == Verdict::Unknown) throw Error(ErrorKind::Budget, std::string(what) + ": search budget exhausted");
  if (s.verdict == Verdict::False) throw Error(ErrorKind::Infeasible, std::string(what) + ": refuted");
  return s;
}

}  // namespace

GSet GridSpec::margin_bar() const { return prod({&W, &W, &W, &R(), &M, &M}); }

void GridSpec::validate() const {
  if (!X || !Xprime) throw Error(ErrorKind::Config, "grid spec needs X and X′");
  const Element e = ctx()->identity();
  check_same(W, M);
  check_same(W, rho.domain());
  if (X->has_hidden()) throw Error(ErrorKind::Config, "X must not carry hidden layers");
  if (Xprime->q_vis() != X->q_vis()) throw Error(ErrorKind::Config, "X and X′ need the same alphabet");
  for (const auto* s : {&W, &M, &R()}) {
    if (!s->contains(e)) throw Error(ErrorKind::Config, "W, M and R must contain e");
    if (!is_symmetric(*s)) throw Error(ErrorKind::NotSymmetric, "W, M and R must be symmetric");
  }
  if (!is_subset(set_product(M, R()), W)) throw Error(ErrorKind::Config, "W must contain MR");
  if (exact_admissible(*X, rho, halo, search) != Verdict::True) throw Error(ErrorKind::Config, "ρ is not X-admissible");
  if (exact_admissible(*Xprime, rho, halo, search) != Verdict::False)
    throw Error(ErrorKind::Config, "ρ is not refuted by X′");
}

json GridSpec::to_json() const {
  json j;
  j["name"] = name;
  j["group"] = ctx()->to_json();
  j["X"] = X ? X->name() : "";
  j["Xprime"] = Xprime ? Xprime->name() : "";
  j["M"] = M.to_json();
  j["W"] = W.to_json();
  j["rho"] = rho.to_json();
  j["halo"] = halo;
  return j;
}

OraclePtr make_xbar(const GridSpec& spec) {
  auto o = std::make_shared<Oracle>("xbar-" + spec.name, spec.ctx(), spec.X->q_vis(), 2);
  for (const auto& r : spec.X->rules()) o->add_rule(r);
  o->add_rule(std::make_shared<KShiftRule>(set_product(inverse_set(spec.W), spec.W), kHidden));
  o->add_rule(std::make_shared<CouplingRule>(spec.rho));
  return o;
}

GridSpec grid_fixture(const std::string& name) {
  GridSpec s;
  s.name = name;
  if (name == "z-full3") {
    auto z = make_ctx(1);
    s.X = full_shift(z, 3);
    s.Xprime = restrict_symbols(*s.X, {0, 1}, "no-2");
    s.M = GSet::identity(z);
    s.rho = Pattern::from_pairs(z, {{z->identity(), 2}});
    s.W = free_box(z, -3, 3);
    s.halo = 2;
  } else if (name == "zz4-full2") {
    auto c = make_ctx(1, {4});
    s.X = full_shift(c, 2);
    s.Xprime = restrict_symbols(*s.X, {0}, "zero");
    s.M = GSet::identity(c);
    s.rho = Pattern::from_pairs(c, {{c->identity(), 1}});
    s.W = folner_box(c, 1);
    s.halo = 1;
  } else if (name == "z-golden") {
    auto z = make_ctx(1);
    s.X = golden_mean(z);
    s.Xprime = restrict_symbols(*s.X, {0}, "zero");
    s.M = free_box(z, -1, 1);
    s.rho = Pattern::from_pairs(z, {{z->identity(), 1}});
    s.W = free_box(z, -3, 3);
    s.halo = 2;
  } else {
    throw Error(ErrorKind::Config, "unknown grid fixture " + name);
  }
  return s;
}

Pattern build_grid(const GridSpec& spec, const GSet& v) {
  check_same(v, spec.W);
  if (v.empty()) return Pattern(spec.ctx());
  const GSet rv = set_product(spec.R(), v);
  if (rv.size() != spec.R().size() * v.size()) throw Error(ErrorKind::Precondition, "grid copies of ρ overlap");
  std::vector<std::pair<Element, int>> cells;
  cells.reserve(rv.size());
  const auto& g = *spec.ctx();
  for (const auto& x : v)
    for (size_t i = 0; i < spec.rho.size(); ++i) cells.emplace_back(g.mul(spec.rho.domain()[i], x), spec.rho.symbols()[i]);
  return Pattern::from_pairs(spec.ctx(), std::move(cells));
}

double binary_entropy(double p) {
  if (p <= 0 || p >= 1) return 0;
  return -p * std::log(p) - (1 - p) * std::log(1 - p);
}

double xbar_bound(double h_x, double ratio, int alphabet) {
  return h_x - ratio * std::log(double(alphabet)) - binary_entropy(ratio);
}

XbarReport xbar_entropy_report(const GridSpec& spec, int n, double target) {
  Derived d(spec);
  XbarReport r;
  r.h_x = entropy_estimate(*spec.X, n);
  r.ratio = double(set_product(d.M2, spec.R()).size()) / double(spec.W.size());
  r.bound = xbar_bound(r.h_x, r.ratio, spec.X->q_vis());
  r.target = target;
  r.meets_target = r.bound > target;
  return r;
}

AlmostPattern AlmostPattern::translate(const Element& g) const {
  AlmostPattern out;
  out.alpha = alpha.translate(g);
  out.E = symdyn::translate(E, g);
  if (V) out.V = symdyn::translate(*V, g);
  if (host) out.host = host->translate(g);
  return out;
}

json AlmostPattern::to_json() const {
  json j;
  j["alpha"] = alpha.to_json();
  j["E"] = E.to_json();
  if (V) j["V"] = V->to_json();
  if (host) j["host"] = host->to_json();
  return j;
}

AlmostPattern AlmostPattern::from_json(const Ctx& ctx, const json& j) {
  AlmostPattern ap;
  ap.alpha = Pattern::from_json(ctx, j.at("alpha"));
  ap.E = GSet::from_json(ctx, j.at("E"));
  if (j.contains("V")) ap.V = GSet::from_json(ctx, j.at("V"));
  if (j.contains("host")) ap.host = Pattern::from_json(ctx, j.at("host"));
  return ap;
}

std::vector<std::string> check_almost(const AlmostPattern& ap, const GridSpec& spec, bool admissibility) {
  std::vector<std::string> bad;
  Derived d(spec);
  const GSet& a = ap.domain();
  const auto& g = *spec.ctx();
  if (!is_subset(prod({&spec.R(), &spec.R(), &ap.E}), a)) bad.push_back("R²E not inside A");
  if (!ap.V) {
    bad.push_back("missing witness");
    return bad;
  }
  const GSet& v = *ap.V;
  const GSet f = set_product(d.RM2, a);
  if (!is_subset(v, set_product(d.W2, f))) bad.push_back("witness trace leaves W²RM²A");
  if (!is_separated(v, spec.W)) bad.push_back("witness trace not W-separated");
  std::unordered_set<Element, ElementHash> vs(v.begin(), v.end());
  for (const auto& x : f) {
    bool hit = false;
    for (const auto& w : d.W2)
      if (vs.count(g.mul(w, x))) {
        hit = true;
        break;
      }
    if (!hit) {
      bad.push_back("witness trace not maximal at " + coord_str(spec.ctx(), x));
      break;
    }
  }
  for (const auto& x : v)
    for (size_t i = 0; i < spec.rho.size(); ++i) {
      const Element c = g.mul(spec.rho.domain()[i], x);
      const int s = ap.alpha.at(c);
      if (s >= 0 && !ap.E.contains(c) && s != spec.rho.symbols()[i])
        bad.push_back("α differs from the grid at " + coord_str(spec.ctx(), c));
    }
  if (admissibility && bad.empty() &&
      exact_admissible(*spec.X, reinforce(ap, spec).pattern, spec.halo, spec.search) != Verdict::True)
    bad.push_back("reinforced pattern not X-admissible");
  return bad;
}

AlmostPattern xbar_witness(const GridSpec& spec, const Pattern& p) {
  Derived d(spec);
  auto xb = make_xbar(spec);
  const GSet trace = set_product(d.W2RM2, p.domain());
  Frame fr(*xb, halo_region(set_product(d.W4RM2, p.domain()), spec.halo));
  Solution s = checked(solve(fr, p, nullptr, spec.search), "X̄ witness");
  AlmostPattern ap;
  ap.alpha = p;
  ap.E = GSet(spec.ctx());
  ap.V = set_intersection(s.hidden_ones(), trace);
  ap.host = s.visible().restrict(set_product(d.RM2, p.domain()));
  return ap;
}

Reinforced reinforce(const AlmostPattern& ap, const GridSpec& spec) {
  if (!ap.V) throw Error(ErrorKind::Precondition, "reinforce needs the witness trace");
  Derived d(spec);
  const GSet f = set_product(d.RM2, ap.domain());
  const GSet re = set_product(spec.R(), ap.E);
  const GSet sel = set_difference(set_intersection(*ap.V, f), re);
  Reinforced out;
  try {
    out.pattern = merge({ap.alpha, build_grid(spec, sel)});
  } catch (const Error&) {
    throw Error(ErrorKind::Precondition, "witness grid disagrees with α");
  }
  out.chi = indicator(set_intersection(*ap.V, f), f);
  return out;
}

AlmostPattern glue_almost(const std::vector<AlmostPattern>& parts, const GridSpec& spec) {
  if (parts.empty()) throw Error(ErrorKind::Precondition, "glue_almost needs at least one part");
  if (parts.size() == 1) return parts[0];
  const GSet mbar = spec.margin_bar();
  std::vector<GSet> padded;
  for (const auto& p : parts) padded.push_back(set_product(mbar, p.domain()));
  for (size_t i = 0; i < parts.size(); ++i) {
    if (!parts[i].V) throw Error(ErrorKind::Precondition, "part " + std::to_string(i) + " has no witness");
    for (size_t j = i + 1; j < parts.size(); ++j)
      if (intersects(padded[i], padded[j]))
        throw Error(ErrorKind::Precondition,
                    "parts " + std::to_string(i) + " and " + std::to_string(j) + " are not M̄-apart");
  }
  Derived d(spec);
  GSet a(spec.ctx()), e(spec.ctx()), traces(spec.ctx());
  std::vector<Pattern> alphas;
  for (const auto& p : parts) {
    a = set_union(a, p.domain());
    e = set_union(e, p.E);
    traces = set_union(traces, set_intersection(*p.V, set_product(d.W2RM2, p.domain())));
    alphas.push_back(p.alpha);
  }
  const GSet u = set_product(d.W2RM2, a);
  GSet v;
  try {
    v = extend_to_maximal(traces, spec.W, u);
  } catch (const Error& err) {
    throw Error(ErrorKind::Infeasible, std::string("glue_almost: traces clash: ") + err.what());
  }
  GSet claimed(spec.ctx());
  std::vector<Pattern> pieces;
  for (size_t i = 0; i < parts.size(); ++i) {
    const GSet f = set_product(d.RM2, parts[i].domain());
    if (!(set_intersection(v, f) == set_intersection(*parts[i].V, f)))
      throw Error(ErrorKind::Infeasible, "glue_almost: Ω_W glue changed the grid on part " + std::to_string(i));
    claimed = set_union(claimed, f);
    pieces.push_back(reinforce(parts[i], spec).pattern);
  }
  const GSet free_v = set_difference(v, claimed);
  if (!free_v.empty()) pieces.push_back(build_grid(spec, free_v));
  AlmostPattern out;
  try {
    out.host = glue(*spec.X, pieces, spec.M, spec.halo, spec.search);
  } catch (const Error& err) {
    throw Error(err.kind(), std::string("glue_almost: ") + err.what());
  }
  out.alpha = merge(alphas);
  out.E = e;
  out.V = set_intersection(v, u);
  return out;
}

std::vector<Element> beta_audit(const AlmostPattern& ap, const Pattern& beta) {
  const GSet reach = set_product(inverse_set(beta.domain()), ap.E);
  std::vector<Element> out;
  for (const auto& c : occurrences(ap.alpha, beta))
    if (!reach.contains(c)) out.push_back(c);
  return out;
}

Reference reference_element(const GridSpec& spec, int radius) {
  auto xb = make_xbar(spec);
  Solution s = checked(lexmin_completion(*xb, folner_box(spec.ctx(), radius), Pattern(spec.ctx()), spec.search),
                       "reference element");
  return {s.visible(), s.hidden_ones()};
}

int enhance_radius(const GridSpec& spec, const GSet& a, const GSet& b) {
  Derived d(spec);
  const GSet under = prod({&b, &b, &d.M2, &a});
  return std::max(radius_of(set_product(d.W4RM2, under)), radius_of(halo_region(under, spec.halo))) + 1;
}

Enhanced enhance(const GridSpec& spec, const Pattern& alpha, const Reference& xstar, const Pattern& beta) {
  Derived d(spec);
  const GSet& a = alpha.domain();
  const GSet& b = beta.domain();
  const GSet m2a = set_product(d.M2, a);
  const GSet under_dom = prod({&b, &b, &m2a});
  const GSet trace = set_product(d.W2RM2, under_dom);
  if (!is_subset(set_product(d.W2, trace), xstar.vis.domain()))
    throw Error(ErrorKind::Precondition, "reference window too small for enhance");
  const GSet q = halo_region(under_dom, spec.halo);
  Pattern fixed = merge({xstar.vis.restrict(set_difference(q, m2a)), alpha});
  Solution s = checked(lexmin_completion(*spec.X, q, fixed, spec.search), "enhance glue");
  Enhanced out;
  const Pattern xa = s.visible();
  out.under = xa.restrict(under_dom);
  out.J = gset_of(spec.ctx(), occurrences(out.under, beta));
  if (!is_subset(out.J, set_product(b, m2a)))
    throw Error(ErrorKind::Precondition, "β occurs away from the inserted block; the reference is not X̄-admissible");
  out.ap.alpha = out.under;
  out.ap.E = m2a;
  out.ap.V = set_intersection(xstar.V, trace);
  out.ap.host = xa;
  return out;
}

GSet stabilizer(const GSet& j) {
  if (j.empty()) throw Error(ErrorKind::Precondition, "stabilizer of the empty set");
  const auto& g = *j.ctx();
  std::vector<Element> h;
  for (const auto& c : set_product(inverse_set(j), j))
    if (translate(j, c) == j) h.push_back(c);
  GSet out = gset_of(j.ctx(), std::move(h));
  for (const auto& x : out) {
    if (!out.contains(g.inv(x))) throw Error(ErrorKind::Precondition, "stabilizer not closed under inverse");
    for (const auto& y : out)
      if (!out.contains(g.mul(x, y))) throw Error(ErrorKind::Precondition, "stabilizer not closed under product");
  }
  return out;
}

Pattern build_resistant(const Pattern& x0, const GSet& h) {
  const Ctx& ctx = x0.ctx();
  const auto& g = *ctx;
  const Element e = g.identity();
  if (x0.at(e) < 0) throw Error(ErrorKind::Precondition, "x0 window must contain e");
  std::vector<Element> gam{e};
  for (const auto& x : h) {
    if (x == e) continue;
    bool found = false;
    for (size_t i = 0; i < x0.size() && !found; ++i) {
      const Element c = x0.domain()[i];
      const int s = x0.at(g.mul(c, x));
      if (s >= 0 && s != x0.symbols()[i]) {
        gam.push_back(c);
        gam.push_back(g.mul(c, x));
        found = true;
      }
    }
    if (!found) throw Error(ErrorKind::Precondition, "no resistance witness for h = " + coord_str(ctx, x));
  }
  return x0.restrict(GSet(ctx, gam));
}

bool is_resistant(const Pattern& gamma, const GSet& h) {
  const auto& g = *gamma.ctx();
  for (const auto& x : h) {
    if (x == g.identity()) continue;
    bool ok = false;
    for (size_t i = 0; i < gamma.size() && !ok; ++i) {
      const int s = gamma.at(g.mul(gamma.domain()[i], x));
      ok = s >= 0 && s != gamma.symbols()[i];
    }
    if (!ok) return false;
  }
  return true;
}

namespace {

using Masks = std::vector<uint64_t>;
using KRes = std::pair<uint64_t, std::vector<int>>;

bool pairwise_equal(const Masks& fam, const std::vector<int>& s, uint64_t a) {
  for (size_t i = 0; i < s.size(); ++i)
    for (size_t j = i + 1; j < s.size(); ++j)
      if ((fam[s[i]] & fam[s[j]]) != a) return false;
  return true;
}

KRes first_pair(const Masks& fam, const std::vector<int>& idx) {
  return {fam[idx[0]] & fam[idx[1]], {idx[0], idx[1]}};
}

// induction on the common cardinality, over the indices idx of fam
KRes induct(const Masks& fam, const std::vector<int>& idx) {
  std::map<int, std::vector<int>> by_card;
  for (int i : idx) by_card[__builtin_popcountll(fam[i])].push_back(i);
  const std::vector<int>* cls = nullptr;
  for (const auto& [c, v] : by_card)
    if (!cls || v.size() > cls->size()) cls = &v;
  if (cls->size() < 2) return first_pair(fam, idx);
  const int card = __builtin_popcountll(fam[(*cls)[0]]);
  if (card == 0) return {0, *cls};
  Masks rest(fam.size(), 0);
  std::vector<int> pick(fam.size(), -1);
  for (int i : *cls) {
    pick[i] = __builtin_ctzll(fam[i]);
    rest[i] = fam[i] & ~(1ull << pick[i]);
  }
  auto [a1, s1] = induct(rest, *cls);
  if (s1.size() < 2 || !pairwise_equal(rest, s1, a1)) return first_pair(fam, *cls);
  if (a1 != 0) {
    Masks rest2(fam.size(), 0);
    for (int i : s1) rest2[i] = fam[i] & ~a1;
    auto [a2, s2] = induct(rest2, s1);
    if (s2.size() < 2) return first_pair(fam, s1);
    return {a1 | a2, s2};
  }
  // a repeated removed element, or a pairwise disjoint subfamily
  std::map<int, std::vector<int>> by_pick;
  for (int i : s1) by_pick[pick[i]].push_back(i);
  const std::vector<int>* same = nullptr;
  for (const auto& [p, v] : by_pick)
    if (!same || v.size() > same->size()) same = &v;
  std::vector<int> disjoint;
  uint64_t used = 0;
  for (int i : s1)
    if (!(fam[i] & used)) {
      disjoint.push_back(i);
      used |= fam[i];
    }
  if (same->size() >= 2 && same->size() >= disjoint.size()) return {1ull << pick[(*same)[0]], *same};
  if (disjoint.size() >= 2) return {0, disjoint};
  return first_pair(fam, s1);
}

void pack(const std::vector<int>& cand, const Masks& res, size_t k, uint64_t used, std::vector<int>& cur,
          std::vector<int>& best) {
  if (cur.size() + (cand.size() - k) <= best.size()) return;
  if (k == cand.size()) {
    best = cur;
    return;
  }
  const int i = cand[k];
  if (!(res[i] & used)) {
    cur.push_back(i);
    pack(cand, res, k + 1, used | res[i], cur, best);
    cur.pop_back();
  }
  pack(cand, res, k + 1, used, cur, best);
}

// maximum S over every candidate intersection
KRes exact_max(const Masks& fam) {
  const int n = int(fam.size());
  std::vector<uint64_t> cands;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) cands.push_back(fam[i] & fam[j]);
  std::sort(cands.begin(), cands.end());
  cands.erase(std::unique(cands.begin(), cands.end()), cands.end());
  KRes best{0, {}};
  for (uint64_t a : cands) {
    std::vector<int> in;
    Masks res(fam.size(), 0);
    for (int i = 0; i < n; ++i)
      if ((fam[i] & a) == a) {
        in.push_back(i);
        res[i] = fam[i] & ~a;
      }
    if (in.size() <= best.second.size()) continue;
    std::vector<int> cur, got = best.second;
    pack(in, res, 0, 0, cur, got);
    if (got.size() > best.second.size()) best = {a, got};
  }
  return best;
}

}  // namespace

std::pair<uint64_t, std::vector<int>> kopacz_masks(const std::vector<uint64_t>& family, int exact_limit) {
  if (family.size() < 2) throw Error(ErrorKind::Precondition, "kopacz_extract needs at least two sets");
  std::vector<int> idx(family.size());
  for (size_t i = 0; i < idx.size(); ++i) idx[i] = int(i);
  KRes r = induct(family, idx);
  if (int(family.size()) <= exact_limit) {
    KRes x = exact_max(family);
    if (x.second.size() > r.second.size()) r = x;
  }
  std::sort(r.second.begin(), r.second.end());
  return r;
}

KopaczResult kopacz_extract(const std::vector<GSet>& family, int bound) {
  if (family.size() < 2) throw Error(ErrorKind::Precondition, "kopacz_extract needs at least two sets");
  const Ctx& ctx = family[0].ctx();
  GSet uni(ctx);
  for (const auto& a : family) {
    if (int(a.size()) > bound) throw Error(ErrorKind::Precondition, "set larger than the bound");
    uni = set_union(uni, a);
  }
  if (uni.size() > 64) throw Error(ErrorKind::Precondition, "kopacz_extract supports at most 64 distinct elements");
  std::vector<uint64_t> masks;
  for (const auto& a : family) {
    uint64_t m = 0;
    for (const auto& x : a) m |= 1ull << uni.index_of(x);
    masks.push_back(m);
  }
  auto [am, s] = kopacz_masks(masks);
  std::vector<Element> ae;
  for (size_t i = 0; i < uni.size(); ++i)
    if (am >> i & 1) ae.push_back(uni[i]);
  return {GSet(ctx, ae), s};
}

Pattern MarkerKit::zeta_t(int t) const {
  if (t < 0 || t >= r()) throw Error(ErrorKind::OutOfRange, "marker index out of range");
  return merge({zeta, kappa[size_t(t)].translate(g0)});
}

AlmostPattern MarkerKit::marker_ap(int t, const GridSpec& spec) const {
  if (t < 0 || t >= r()) throw Error(ErrorKind::OutOfRange, "marker index out of range");
  auto parts = components;
  parts.push_back(kappa_ap[size_t(t)].translate(g0));
  return glue_almost(parts, spec);
}

namespace {

// g with A·g margin-apart from every set in `placed`, scanning shells outward
std::optional<Element> scan_offset(const Ctx& ctx, const GSet& a, const std::vector<const GSet*>& placed,
                                   const GSet& margin, int max_r, const std::function<bool(const Element&)>& extra) {
  const auto& g = *ctx;
  std::unordered_set<Element, ElementHash> blocked;
  const GSet mm = set_product(inverse_set(margin), margin);
  for (const GSet* p : placed)
    for (const auto& x : set_product(mm, *p)) blocked.insert(x);
  for (int r = 0; r <= max_r; ++r)
    for (const auto& c : shell(ctx, r)) {
      bool ok = true;
      for (const auto& x : a)
        if (blocked.count(g.mul(x, c))) {
          ok = false;
          break;
        }
      if (ok && extra(c)) return c;
    }
  return std::nullopt;
}

GSet conj(const GSet& h, const Element& c) {
  const auto& g = *h.ctx();
  std::vector<Element> out;
  for (const auto& x : h) out.push_back(g.mul(g.mul(g.inv(c), x), c));
  return GSet(h.ctx(), out);
}

}  // namespace

MarkerKit assemble_marker(const GridSpec& spec, const MarkerOptions& opt) {
  spec.validate();
  const Ctx& ctx = spec.ctx();
  const auto& g = *ctx;
  Derived d(spec);
  MarkerKit kit;
  kit.margin_bar = spec.margin_bar();
  kit.B = sym_closure(set_product(spec.R(), d.W2));
  if (opt.beta) {
    kit.beta = *opt.beta;
    if (!(kit.beta.domain() == kit.B)) kit.B = kit.beta.domain();
  } else {
    kit.beta = checked(lexmin_completion(*spec.Xprime, halo_region(kit.B, spec.halo), Pattern(ctx), spec.search),
                       "basic marker")
                   .visible()
                   .restrict(kit.B);
  }
  if (!is_subset(set_product(spec.R(), d.W2), kit.B) || !is_symmetric(kit.B))
    throw Error(ErrorKind::Precondition, "B must be symmetric and contain RW²");
  if (exact_admissible(*spec.Xprime, kit.beta, spec.halo, spec.search) != Verdict::True)
    throw Error(ErrorKind::Precondition, "β is not X′-admissible");

  int rad = enhance_radius(spec, kit.B, kit.B);
  Enhanced eb, eg;
  bool settled = false;
  for (int iter = 0; iter < 8 && !settled; ++iter) {
    const Reference ref = reference_element(spec, rad);
    eb = enhance(spec, kit.beta, ref, kit.beta);
    kit.H_beta = stabilizer(eb.J);
    if (kit.H_beta.size() == 1) {
      kit.case_tag = 1;
      settled = true;
      break;
    }
    kit.case_tag = 2;
    if (!opt.x0) throw Error(ErrorKind::Precondition, "the permutable case needs a free element window x0");
    if (g.is_abelian()) {
      kit.H0 = kit.H_beta;
    } else {
      std::vector<GSet> fam;
      for (const auto& c : folner_box(ctx, opt.conj_radius)) fam.push_back(conj(kit.H_beta, c));
      kit.H0 = kopacz_extract(fam, int(kit.H_beta.size())).A;
    }
    Pattern gam = build_resistant(*opt.x0, kit.H0);
    int need = enhance_radius(spec, gam.domain(), kit.B);
    if (need > rad) {
      rad = need;
      continue;
    }
    eg = enhance(spec, gam, ref, kit.beta);
    if (eg.J.size() <= eb.J.size()) {
      // |J_β|+1 copies of β, M-apart from each other and from Γ
      std::vector<Pattern> pieces{gam};
      GSet dom = gam.domain();
      for (size_t k = 0; k <= eb.J.size(); ++k) {
        auto p = scan_offset(ctx, kit.B, {&dom}, spec.M, opt.scan_radius, [](const Element&) { return true; });
        if (!p) throw Error(ErrorKind::Infeasible, "no room for the padding copies of β");
        pieces.push_back(kit.beta.translate(*p));
        dom = set_union(dom, translate(kit.B, *p));
      }
      gam = glue(*spec.X, pieces, spec.M, spec.halo, spec.search).restrict(dom);
      need = enhance_radius(spec, gam.domain(), kit.B);
      if (need > rad) {
        rad = need;
        continue;
      }
      eg = enhance(spec, gam, ref, kit.beta);
    }
    if (eg.J.size() <= eb.J.size()) throw Error(ErrorKind::Infeasible, "padding failed to make |J_γ| > |J_β|");
    kit.gamma = gam;
    settled = true;
  }
  if (!settled) throw Error(ErrorKind::Infeasible, "reference window did not stabilise");
  kit.xstar_radius = rad;
  kit.beta_under = eb.under;
  kit.J_beta = eb.J;

  if (kit.case_tag == 1) {
    kit.zeta = eb.under;
    kit.Z = eb.under.domain();
    kit.J0 = eb.J;
    kit.J1 = GSet(ctx);
    kit.E = eb.ap.E;
    kit.components = {eb.ap};
  } else {
    kit.gamma_under = eg.under;
    kit.J_gamma = eg.J;
    const GSet& gu = eg.under.domain();
    const GSet& bu = eb.under.domain();
    const GSet jbi = inverse_set(eb.J);
    const GSet forb1 = set_product(jbi, set_product(eg.J, set_product(inverse_set(eg.J), eg.J)));
    auto g1 = scan_offset(ctx, bu, {&gu}, kit.margin_bar, opt.scan_radius,
                          [&](const Element& c) { return !forb1.contains(c); });
    if (!g1) throw Error(ErrorKind::Infeasible, "no offset g1 in the scan window");
    kit.g1 = *g1;
    kit.J1 = set_union(translate(eb.J, kit.g1), eg.J);
    const GSet forb2 = set_product(jbi, set_product(kit.J1, set_product(inverse_set(kit.J1), kit.J1)));
    const GSet bu1 = translate(bu, kit.g1);
    const GSet hg1 = conj(kit.H_beta, kit.g1);
    auto g2 = scan_offset(ctx, bu, {&gu, &bu1}, kit.margin_bar, opt.scan_radius, [&](const Element& c) {
      return !forb2.contains(c) && set_intersection(hg1, conj(kit.H_beta, c)) == kit.H0;
    });
    if (!g2) throw Error(ErrorKind::Infeasible, "no offset g2 in the scan window");
    kit.g2 = *g2;
    kit.zeta = merge({eg.under, eb.under.translate(kit.g1), eb.under.translate(kit.g2)});
    kit.Z = kit.zeta.domain();
    kit.J0 = set_union(kit.J1, translate(eb.J, kit.g2));
    kit.components = {eg.ap, eb.ap.translate(kit.g1), eb.ap.translate(kit.g2)};
    kit.E = GSet(ctx);
    for (const auto& c : kit.components) kit.E = set_union(kit.E, c.E);
  }
  if (!(gset_of(ctx, occurrences(kit.zeta, kit.beta)) == kit.J0))
    throw Error(ErrorKind::Infeasible, "β occurrences in ζ differ from J₀");

  // appendage: the first r X̄-blocks over the smallest box L that has enough of them
  auto xb = make_xbar(spec);
  CensusOptions copt;
  copt.halo = spec.halo;
  copt.search = spec.search;
  for (int n = 0; n <= 8 && int(kit.kappa.size()) < opt.kappa_count; ++n) {
    kit.L = folner_box(ctx, n);
    kit.kappa.clear();
    kit.kappa_ap.clear();
    auto cs = Census::build(*xb, kit.L, copt);
    for (BigInt i = 0; i < cs->count() && int(kit.kappa.size()) < opt.kappa_count; ++i) {
      Pattern k = cs->unrank(i);
      try {
        kit.kappa_ap.push_back(xbar_witness(spec, k));
        kit.kappa.push_back(k);
      } catch (const Error& err) {
        if (err.kind() != ErrorKind::Infeasible) throw;
      }
    }
  }
  if (int(kit.kappa.size()) < opt.kappa_count) throw Error(ErrorKind::Infeasible, "not enough X̄-blocks for the appendage");
  auto g0 = scan_offset(ctx, kit.L, {&kit.Z}, kit.margin_bar, opt.scan_radius, [](const Element&) { return true; });
  if (!g0) throw Error(ErrorKind::Infeasible, "no offset g0 in the scan window");
  kit.g0 = *g0;
  kit.Z0 = set_union(kit.Z, translate(kit.L, kit.g0));

  auto bad = check_kit(kit, spec);
  if (!bad.empty()) throw Error(ErrorKind::Infeasible, "marker kit invariant failed: " + bad.front());
  return kit;
}

std::vector<std::string> check_kit(const MarkerKit& kit, const GridSpec& spec) {
  std::vector<std::string> bad;
  Derived d(spec);
  const Ctx& ctx = spec.ctx();
  const Element e = ctx->identity();
  auto need = [&](bool ok, const char* what) {
    if (!ok) bad.emplace_back(what);
  };
  const GSet& b = kit.B;
  need(is_subset(set_product(spec.R(), d.W2), b) && is_symmetric(b), "B must be symmetric and contain RW²");
  need(kit.margin_bar == spec.margin_bar(), "M̄ must equal W³RM²");
  need(kit.beta.domain() == b, "β must live on B");
  need(kit.beta_under.domain() == prod({&b, &b, &d.M2, &b}), "β̲ must live on B²M²B");
  need(gset_of(ctx, occurrences(kit.beta_under, kit.beta)) == kit.J_beta, "J_β must list the β occurrences in β̲");
  need(kit.J_beta.contains(e), "e must lie in J_β");
  need(is_subset(kit.J_beta, prod({&b, &d.M2, &b})), "J_β must lie in BM²B");
  need(stabilizer(kit.J_beta) == kit.H_beta, "H_β must be the stabilizer of J_β");
  need((kit.H_beta.size() > 1) == (kit.case_tag == 2), "case tag disagrees with H_β");
  GSet core_set = b;
  if (kit.case_tag == 2) {
    const GSet& gam = kit.gamma.domain();
    need(gam.contains(e), "Γ must contain e");
    need(kit.J_gamma.size() > kit.J_beta.size(), "|J_γ| must exceed |J_β|");
    need(is_resistant(kit.gamma, kit.H0), "γ must resist H₀");
    need(is_subset(kit.H0, kit.H_beta), "H₀ must lie in H_β");
    need(kit.gamma_under.domain() == prod({&b, &b, &d.M2, &gam}), "γ̲ must live on B²M²Γ");
    need(gset_of(ctx, occurrences(kit.gamma_under, kit.beta)) == kit.J_gamma, "J_γ must list the β occurrences in γ̲");
    const GSet bu = kit.beta_under.domain();
    const GSet bu1 = translate(bu, kit.g1), bu2 = translate(bu, kit.g2);
    const GSet& gu = kit.gamma_under.domain();
    need(is_apart(gu, bu1, kit.margin_bar) && is_apart(gu, bu2, kit.margin_bar) && is_apart(bu1, bu2, kit.margin_bar),
         "Γ̲, B̲g₁, B̲g₂ must be pairwise M̄-apart");
    const GSet jbi = inverse_set(kit.J_beta);
    need(!set_product(jbi, set_product(kit.J_gamma, set_product(inverse_set(kit.J_gamma), kit.J_gamma)))
              .contains(kit.g1),
         "g₁ must avoid J_β⁻¹J_γJ_γ⁻¹J_γ");
    need(kit.J1 == set_union(translate(kit.J_beta, kit.g1), kit.J_gamma), "J₁ must be J_βg₁ ∪ J_γ");
    need(!set_product(jbi, set_product(kit.J1, set_product(inverse_set(kit.J1), kit.J1))).contains(kit.g2),
         "g₂ must avoid J_β⁻¹J₁J₁⁻¹J₁");
    need(set_intersection(conj(kit.H_beta, kit.g1), conj(kit.H_beta, kit.g2)) == kit.H0,
         "conjugates at g₁ and g₂ must meet in H₀");
    need(kit.J0 == set_union(kit.J1, translate(kit.J_beta, kit.g2)), "J₀ must be J_γ ∪ J_βg₁ ∪ J_βg₂");
    core_set = set_union(gam, set_union(translate(b, kit.g1), translate(b, kit.g2)));
    need(kit.zeta.restrict(gu) == kit.gamma_under, "ζ must equal γ̲ on Γ̲");
    need(kit.zeta.restrict(bu1) == kit.beta_under.translate(kit.g1), "ζ must carry β̲ at g₁");
    need(kit.zeta.restrict(bu2) == kit.beta_under.translate(kit.g2), "ζ must carry β̲ at g₂");
  } else {
    need(kit.zeta == kit.beta_under, "ζ must equal β̲ in the nonpermutable case");
    need(kit.J0 == kit.J_beta, "J₀ must equal J_β");
  }
  const GSet m2core = set_product(d.M2, core_set);
  need(kit.Z == prod({&b, &b, &m2core}), "Z must equal B²M²(Γ ∪ B{g₁,g₂})");
  need(kit.E == m2core, "E must equal M²(Γ ∪ B{g₁,g₂})");
  need(gset_of(ctx, occurrences(kit.zeta, kit.beta)) == kit.J0, "J₀ must list the β occurrences in ζ");
  need(kit.L.contains(e), "L must contain e");
  const GSet lg0 = translate(kit.L, kit.g0);
  need(is_apart(lg0, kit.Z, kit.margin_bar), "Lg₀ must be M̄-apart from Z");
  need(kit.Z0 == set_union(kit.Z, lg0), "Z₀ must equal Z ∪ Lg₀");
  need(kit.kappa.size() == kit.kappa_ap.size(), "every κ needs a witness");
  for (size_t t = 0; t < kit.kappa.size(); ++t) {
    need(kit.kappa[t].domain() == kit.L, "κ blocks must live on L");
    for (size_t u = 0; u < t; ++u) need(!(kit.kappa[t] == kit.kappa[u]), "κ blocks must be distinct");
    need(kit.zeta_t(int(t)).restrict(lg0) == kit.kappa[t].translate(kit.g0), "ζ_t must carry κ_t at g₀");
  }
  need(verify_unambiguous(kit), "ζ must be unambiguous");
  return bad;
}

bool verify_unambiguous(const MarkerKit& kit) {
  const GSet h = stabilizer(kit.J0);
  if (h.size() == 1) return true;
  return is_resistant(kit.zeta, h);
}

json MarkerKit::to_json() const {
  const Ctx& ctx = B.ctx();
  json j;
  j["group"] = ctx->to_json();
  j["case"] = case_tag;
  j["B"] = B.to_json();
  j["beta"] = beta.to_json();
  j["beta_under"] = beta_under.to_json();
  j["J_beta"] = J_beta.to_json();
  j["H_beta"] = H_beta.to_json();
  if (case_tag == 2) {
    j["gamma"] = gamma.to_json();
    j["gamma_under"] = gamma_under.to_json();
    j["J_gamma"] = J_gamma.to_json();
    j["H0"] = H0.to_json();
    j["g1"] = elem_json(ctx, g1);
    j["g2"] = elem_json(ctx, g2);
  }
  j["L"] = L.to_json();
  j["kappa"] = json::array();
  for (const auto& k : kappa) j["kappa"].push_back(k.to_json());
  j["kappa_ap"] = json::array();
  for (const auto& k : kappa_ap) j["kappa_ap"].push_back(k.to_json());
  j["g0"] = elem_json(ctx, g0);
  j["zeta"] = zeta.to_json();
  j["Z"] = Z.to_json();
  j["Z0"] = Z0.to_json();
  j["J0"] = J0.to_json();
  j["J1"] = J1.to_json();
  j["E"] = E.to_json();
  j["margin_bar"] = margin_bar.to_json();
  j["xstar_radius"] = xstar_radius;
  j["components"] = json::array();
  for (const auto& c : components) j["components"].push_back(c.to_json());
  return j;
}

MarkerKit MarkerKit::from_json(const Ctx& ctx, const json& j) {
  MarkerKit k;
  auto set = [&](const char* key) { return GSet::from_json(ctx, j.at(key)); };
  auto pat = [&](const char* key) { return Pattern::from_json(ctx, j.at(key)); };
  k.case_tag = j.at("case").get<int>();
  k.B = set("B");
  k.beta = pat("beta");
  k.beta_under = pat("beta_under");
  k.J_beta = set("J_beta");
  k.H_beta = set("H_beta");
  if (k.case_tag == 2) {
    k.gamma = pat("gamma");
    k.gamma_under = pat("gamma_under");
    k.J_gamma = set("J_gamma");
    k.H0 = set("H0");
    k.g1 = elem_from(ctx, j.at("g1"));
    k.g2 = elem_from(ctx, j.at("g2"));
  }
  k.L = set("L");
  for (const auto& x : j.at("kappa")) k.kappa.push_back(Pattern::from_json(ctx, x));
  for (const auto& x : j.at("kappa_ap")) k.kappa_ap.push_back(AlmostPattern::from_json(ctx, x));
  k.g0 = elem_from(ctx, j.at("g0"));
  k.zeta = pat("zeta");
  k.Z = set("Z");
  k.Z0 = set("Z0");
  k.J0 = set("J0");
  k.J1 = set("J1");
  k.E = set("E");
  k.margin_bar = set("margin_bar");
  k.xstar_radius = j.value("xstar_radius", 0);
  for (const auto& x : j.at("components")) k.components.push_back(AlmostPattern::from_json(ctx, x));
  return k;
}

std::string marker_svg(const MarkerKit& kit, int t) {
  const Pattern z = kit.zeta_t(t);
  const Ctx& ctx = z.ctx();
  const int d = ctx->free_rank();
  const int m = ctx->torsion_order();
  // x = first free coordinate; y = second free coordinate or torsion index
  auto pos = [&](const Element& g) -> std::pair<int, int> {
    return {g.x[0], d >= 2 ? g.x[1] : g.t};
  };
  int x0 = 1 << 30, x1 = -(1 << 30), y0 = 1 << 30, y1 = -(1 << 30);
  for (const auto& g : z.domain()) {
    auto [x, y] = pos(g);
    x0 = std::min(x0, x), x1 = std::max(x1, x), y0 = std::min(y0, y), y1 = std::max(y1, y);
  }
  if (d < 2) y0 = 0, y1 = std::max(y1, m - 1);
  const int cell = 8;
  static const char* fill[] = {"#f4f1de", "#3d405b", "#e07a5f", "#81b29a", "#f2cc8f", "#6d597a"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << (x1 - x0 + 1) * cell << "\" height=\""
     << (y1 - y0 + 1) * cell << "\">\n";
  const GSet lg0 = translate(kit.L, kit.g0);
  for (size_t i = 0; i < z.size(); ++i) {
    auto [x, y] = pos(z.domain()[i]);
    os << "<rect x=\"" << (x - x0) * cell << "\" y=\"" << (y1 - y) * cell << "\" width=\"" << cell << "\" height=\""
       << cell << "\" fill=\"" << fill[z.symbols()[i] % 6] << "\" stroke=\""
       << (lg0.contains(z.domain()[i]) ? "#ff7f00" : kit.E.contains(z.domain()[i]) ? "#2a9d8f" : "#cccccc")
       << "\" stroke-width=\"1\"/>\n";
  }
  for (const auto& c : kit.J0) {
    auto [x, y] = pos(c);
    os << "<circle cx=\"" << (x - x0) * cell + cell / 2 << "\" cy=\"" << (y1 - y) * cell + cell / 2
       << "\" r=\"2\" fill=\"black\"/>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace symdyn
