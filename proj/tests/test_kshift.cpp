#include <doctest.h>

#include <random>

#include "fixtures.hpp"

using namespace symdyn;
using fx::zset;

namespace {

std::vector<Element> shuffled(const GSet& f, std::mt19937_64& rng) {
  std::vector<Element> v(f.begin(), f.end());
  std::shuffle(v.begin(), v.end(), rng);
  return v;
}

// random K ∋ e inside [-r,r]^d with |K| >= 2
GSet random_k(const Ctx& c, std::mt19937_64& rng, int r) {
  GSet box = folner_box(c, r);
  std::vector<Element> v{c->identity()};
  const int extra = 1 + int(rng() % 3);
  while (int(v.size()) < 1 + extra) v.push_back(box[rng() % box.size()]);
  GSet k(c, v);
  return k.size() >= 2 ? k : random_k(c, rng, r);
}

GSet random_box(const Ctx& c, std::mt19937_64& rng, int maxlen) {
  std::vector<std::pair<int, int>> ranges;
  for (int i = 0; i < c->free_rank(); ++i) {
    int lo = int(rng() % 7) - 3, len = 1 + int(rng() % maxlen);
    ranges.emplace_back(lo, lo + len - 1);
  }
  return interval_box(c, ranges);
}

}  // namespace

TEST_CASE("is_k_separated examples") {
  auto z = make_ctx(1);
  CHECK(is_k_separated(zset(z, {0, 2, 4}), zset(z, {0, 1})));
  CHECK_FALSE(is_k_separated(zset(z, {0, 1}), zset(z, {0, 1})));
  auto zz6 = make_ctx(1, {6});
  std::vector<Element> v;
  for (int n = 0; n < 4; ++n)
    for (int t = 0; t < 6; ++t)
      if (t % 3 == n % 3) v.push_back(zz6->make_elem({n}, t));
  CHECK(is_k_separated(GSet(zz6, v), fx::zz6_k(zz6)));
}

TEST_CASE("is_maximal_in_window examples") {
  auto z = make_ctx(1);
  auto k = zset(z, {0, 1});
  CHECK(is_maximal_in_window(zset(z, {0, 2, 4, 6, 8}), k, free_box(z, 0, 9)) == Verdict::True);
  CHECK(is_maximal_in_window(zset(z, {0, 4}), k, free_box(z, 0, 6)) == Verdict::False);
  CHECK(is_maximal_in_window(GSet(z), k, free_box(z, 0, 1)) == Verdict::Unknown);
  CHECK(is_maximal_in_window(zset(z, {0, 1}), k, free_box(z, 0, 5)) == Verdict::False);
}

TEST_CASE("greedy_maximal examples") {
  auto z = make_ctx(1);
  auto k = zset(z, {0, 1});
  CHECK(greedy_maximal(k, free_box(z, 0, 9)) == zset(z, {0, 2, 4, 6, 8}));
  CHECK(greedy_maximal(k, GSet(z)).empty());
  auto zz6 = make_ctx(1, {6});
  GSet f = set_product(free_box(zz6, 0, 2), folner_box(zz6, 0));
  std::vector<Element> expect;
  for (int n = 0; n < 3; ++n) {
    expect.push_back(zz6->make_elem({n}, 0));
    expect.push_back(zz6->make_elem({n}, 3));
  }
  CHECK(greedy_maximal(fx::zz6_k(zz6), f) == GSet(zz6, expect));
}

TEST_CASE("extend_to_maximal examples") {
  auto z = make_ctx(1);
  auto k = zset(z, {0, 1});
  CHECK(extend_to_maximal(zset(z, {0, 10}), k, free_box(z, 0, 11)) == zset(z, {0, 2, 4, 6, 8, 10}));
  auto v = zset(z, {0, 2, 4, 6, 8});
  CHECK(extend_to_maximal(v, k, free_box(z, 0, 9)) == v);
  try {
    extend_to_maximal(zset(z, {3, 4}), k, free_box(z, 0, 9));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSeparated);
  }
}

TEST_CASE("banach_density_window examples") {
  auto z = make_ctx(1);
  std::vector<Element> ev;
  for (int x = -60; x <= 60; x += 2) ev.push_back(z->make_elem({x}));
  GSet v(z, ev);
  auto d = banach_density_window(v, {4, 10}, free_box(z, -30, 30));
  CHECK(d.lower <= Rational(1, 2));
  CHECK(d.upper >= Rational(1, 2));
  CHECK(d.lower == Rational(10, 21));
  CHECK(d.upper == Rational(11, 21));
  auto e = banach_density_window(GSet(z), {3}, free_box(z, 0, 5));
  CHECK(e.lower == 0);
  CHECK(e.upper == 0);

  auto k = zset(z, {0, 1, 2});
  auto g = greedy_maximal(k, free_box(z, -80, 80));
  auto dg = banach_density_window(g, {10}, free_box(z, -50, 50));
  CHECK(dg.upper <= Rational(1, 3) + Rational(1, 21));
}

TEST_CASE("KShiftSpec") {
  auto z = make_ctx(1);
  auto s = KShiftSpec::make(zset(z, {0, 1}));
  CHECK(s.kinvk == zset(z, {-1, 0, 1}));
  CHECK(s.margin == zset(z, {-1, 0, 1, 2}));
  CHECK_THROWS_AS(KShiftSpec::make(zset(z, {1, 2})), Error);
  CHECK_THROWS_AS(KShiftSpec::make(GSet::identity(z)), Error);
  CHECK(KShiftSpec::from_json(z, s.to_json()).K == s.K);
}

TEST_CASE("greedy output is separated and maximal on random windows") {
  std::mt19937_64 rng(11);
  for (int d : {1, 2}) {
    auto c = make_ctx(d);
    for (int i = 0; i < 500; ++i) {
      GSet k = random_k(c, rng, 2);
      GSet f = random_box(c, rng, d == 1 ? 30 : 9);
      auto order = shuffled(f, rng);
      GSet v = greedy_maximal(k, f, i % 2 ? order : std::vector<Element>{});
      REQUIRE(is_k_separated(v, k));
      REQUIRE(is_subset(v, f));
      Verdict m = is_maximal_in_window(v, k, f);
      CHECK(m != Verdict::False);
      // nothing in F can be added
      for (const auto& x : f)
        if (!v.contains(x)) CHECK_FALSE(is_k_separated(set_union(v, GSet(c, {x})), k));
      // indicators lie in Ω_K on the window
      CHECK(locally_admissible(*omega_k(k), indicator(v, f)));
    }
  }
}

TEST_CASE("maximal sets have density at most 1/|K| on the core up to an edge term") {
  std::mt19937_64 rng(12);
  for (int d : {1, 2}) {
    auto c = make_ctx(d);
    for (int i = 0; i < 1000; ++i) {
      GSet k = random_k(c, rng, 2);
      GSet f = random_box(c, rng, d == 1 ? 40 : 12);
      GSet v = greedy_maximal(k, f, shuffled(f, rng));
      GSet cr = core(f, set_product(inverse_set(k), k));
      if (cr.empty()) continue;
      const long hits = long(set_intersection(v, cr).size());
      const long kc = long(set_product(k, cr).size()), cs = long(cr.size()), ks = long(k.size());
      // the translates Kv, v in the core, are disjoint inside KC
      CHECK(hits * ks <= kc);
      CHECK(Rational(hits, cs) <= Rational(1, ks) + Rational(kc - cs, ks * cs));
    }
  }
}

TEST_CASE("gluing traces of maximal sets reproduces both") {
  std::mt19937_64 rng(13);
  int done = 0;
  for (int d : {1, 2}) {
    auto c = make_ctx(d);
    for (int i = 0; i < 600; ++i) {
      GSet k = random_k(c, rng, 1);
      auto spec = KShiftSpec::make(k);
      GSet w = folner_box(c, d == 1 ? 40 : 12);
      GSet inner = core(w, set_product(spec.kinvk, spec.kinvk));
      GSet v1 = greedy_maximal(k, w, shuffled(w, rng));
      GSet v2 = greedy_maximal(k, w, shuffled(w, rng));
      auto pick = [&] {
        std::vector<std::pair<int, int>> ranges;
        for (int j = 0; j < d; ++j) {
          int lo = int(rng() % 21) - 12, len = 1 + int(rng() % (d == 1 ? 8 : 4));
          ranges.emplace_back(lo, lo + len - 1);
        }
        return set_intersection(interval_box(c, ranges), inner);
      };
      GSet f1 = pick(), f2 = pick();
      if (f1.empty() || f2.empty() || !is_apart(f1, f2, spec.margin)) continue;
      GSet t1 = set_intersection(v1, set_product(spec.kinvk, f1));
      GSet t2 = set_intersection(v2, set_product(spec.kinvk, f2));
      GSet v = extend_to_maximal(set_union(t1, t2), k, w, shuffled(w, rng));
      CHECK(set_intersection(v, f1) == set_intersection(v1, f1));
      CHECK(set_intersection(v, f2) == set_intersection(v2, f2));
      ++done;
    }
  }
  CHECK(done >= 200);
}

TEST_CASE("omega_k is translation invariant and restriction monotone") {
  std::mt19937_64 rng(14);
  auto c = make_ctx(2);
  for (int i = 0; i < 100; ++i) {
    GSet k = random_k(c, rng, 1);
    auto o = omega_k(k);
    GSet f = random_box(c, rng, 6);
    auto p = indicator(greedy_maximal(k, f, shuffled(f, rng)), f);
    Element s = c->make_elem({int(rng() % 9) - 4, int(rng() % 9) - 4});
    CHECK(locally_admissible(*o, p) == locally_admissible(*o, p.translate(s)));
    GSet sub = filter(f, [&](const Element&) { return rng() % 3 != 0; });
    if (locally_admissible(*o, p)) CHECK(locally_admissible(*o, p.restrict(sub)));
  }
}
