#include <doctest.h>

#include <random>

#include "symdyn/fuzz.hpp"
#include "symdyn/group.hpp"

using namespace symdyn;

namespace {
GSet zset(const Ctx& c, std::initializer_list<int> xs) {
  std::vector<Element> v;
  for (int x : xs) v.push_back(c->make_elem({x}));
  return GSet(c, v);
}
GSet zrange(const Ctx& c, int lo, int hi) { return free_box(c, lo, hi); }
}  // namespace

TEST_CASE("set_product in Z and Z x Z6") {
  auto z = make_ctx(1);
  CHECK(set_product(zset(z, {0, 1}), zset(z, {0, 1})) == zset(z, {0, 1, 2}));
  auto b = zset(z, {-4, 7, 9});
  CHECK(set_product(GSet::identity(z), b) == b);

  auto zz6 = make_ctx(1, {6});
  GSet k(zz6, {zz6->make_elem({0}, 0), zz6->make_elem({0}, 1), zz6->make_elem({0}, 5)});
  GSet expect(zz6, {zz6->make_elem({0}, 0), zz6->make_elem({0}, 1), zz6->make_elem({0}, 2), zz6->make_elem({0}, 4),
                    zz6->make_elem({0}, 5)});
  CHECK(set_product(inverse_set(k), k) == expect);
  CHECK(inverse_set(k) == k);
}

TEST_CASE("inverse_set") {
  auto z = make_ctx(1);
  CHECK(inverse_set(zset(z, {0, 1})) == zset(z, {-1, 0}));
  CHECK(inverse_set(GSet::identity(z)) == GSet::identity(z));
}

TEST_CASE("mismatched contexts are rejected") {
  auto a = make_ctx(1), b = make_ctx(2);
  CHECK_THROWS_AS(set_product(GSet::identity(a), GSet::identity(b)), Error);
  auto a2 = make_ctx(1);
  CHECK_NOTHROW(set_product(GSet::identity(a), GSet::identity(a2)));
}

TEST_CASE("core") {
  auto z = make_ctx(1);
  CHECK(core(zrange(z, 0, 9), zset(z, {0, 1})) == zrange(z, 0, 8));
  CHECK(core(zrange(z, 0, 9), GSet::identity(z)) == zrange(z, 0, 9));
  auto z2 = make_ctx(2);
  GSet k(z2, {z2->make_elem({0, 0}), z2->make_elem({1, 0}), z2->make_elem({0, 1})});
  CHECK(core(free_box(z2, 0, 4), k) == free_box(z2, 0, 3));
}

TEST_CASE("invariance_defect") {
  auto z = make_ctx(1);
  CHECK(invariance_defect(zrange(z, 0, 9), zset(z, {0, 1})) == Rational(1, 10));
  CHECK(invariance_defect(zrange(z, 0, 9), GSet::identity(z)) == 0);
  auto z2 = make_ctx(2);
  GSet k(z2, {z2->make_elem({0, 0}), z2->make_elem({1, 0})});
  for (int n = 2; n <= 6; ++n) CHECK(invariance_defect(free_box(z2, 0, n - 1), k) == Rational(1, n));
  CHECK_THROWS_AS(invariance_defect(GSet(z), k), Error);
}

TEST_CASE("is_apart") {
  auto z = make_ctx(1);
  auto m = zset(z, {-1, 0, 1});
  CHECK(is_apart(zset(z, {0}), zset(z, {3}), m));
  CHECK_FALSE(is_apart(zset(z, {0}), zset(z, {2}), m));
  CHECK(is_apart(zset(z, {0, 4}), zset(z, {1}), GSet::identity(z)));
}

TEST_CASE("check_aux_bound examples and errors") {
  auto z = make_ctx(1);
  std::vector<Element> v;
  for (int x = -10; x < 110; ++x)
    if (x % 5 == 0) v.push_back(z->make_elem({x}));
  auto r = check_aux_bound(zset(z, {0, 1}), zrange(z, -2, 2), zrange(z, 0, 99), GSet(z, v));
  CHECK(r.lhs == Rational(2, 5));
  CHECK(r.rhs == Rational(7, 5));
  CHECK(r.holds);
  auto empty = check_aux_bound(zset(z, {0, 1}), zrange(z, -2, 2), zrange(z, 0, 99), GSet(z));
  CHECK(empty.lhs == 0);
  CHECK(empty.holds);
  auto triv = check_aux_bound(GSet::identity(z), GSet::identity(z), zrange(z, 0, 9), zset(z, {1, 2, 3}));
  CHECK(triv.holds);
  try {
    check_aux_bound(zset(z, {0, 1}), zset(z, {0, 1, 2}), zrange(z, 0, 9), GSet(z));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSymmetric);
  }
  try {
    check_aux_bound(zset(z, {0, 1}), zrange(z, -1, 1), zrange(z, 0, 9), zset(z, {0, 1}));
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::NotSeparated);
  }
}

TEST_CASE("folner boxes are nested, symmetric, centered") {
  auto c = make_ctx(2, {3});
  for (int n = 0; n < 4; ++n) {
    auto b = folner_box(c, n);
    CHECK(b.size() == size_t((2 * n + 1) * (2 * n + 1) * 3));
    CHECK(is_subset(b, folner_box(c, n + 1)));
    CHECK(is_symmetric(b));
    CHECK(b.contains(c->identity()));
  }
  CHECK(folner_box(c, 7).contains(c->make_elem({-7, 5}, 2)));
}

TEST_CASE("defect of boxes decreases") {
  auto z2 = make_ctx(2);
  GSet k(z2, {z2->make_elem({0, 0}), z2->make_elem({2, -1}), z2->make_elem({1, 1})});
  Rational prev = 10;
  for (int n = 1; n <= 12; ++n) {
    Rational d = invariance_defect(folner_box(z2, n), k);
    CHECK(d <= prev);
    prev = d;
  }
  CHECK(prev < Rational(1, 5));
}

TEST_CASE("cayley tables") {
  // S3 as permutations of {0,1,2}
  std::vector<std::array<int, 3>> perms = {{0, 1, 2}, {1, 0, 2}, {0, 2, 1}, {2, 1, 0}, {1, 2, 0}, {2, 0, 1}};
  std::vector<std::vector<int>> tab(6, std::vector<int>(6));
  for (int a = 0; a < 6; ++a)
    for (int b = 0; b < 6; ++b) {
      std::array<int, 3> c{};
      for (int i = 0; i < 3; ++i) c[i] = perms[a][perms[b][i]];
      for (int k = 0; k < 6; ++k)
        if (perms[k] == c) tab[a][b] = k;
    }
  auto g = GroupContext::make_cayley(1, tab);
  CHECK_FALSE(g.is_abelian());
  CHECK(g.torsion_order() == 6);
  auto ctx = make_ctx(g);
  Element x = ctx->make_elem({3}, 1), y = ctx->make_elem({-1}, 4);
  CHECK(ctx->mul(x, ctx->inv(x)) == ctx->identity());
  CHECK_FALSE(ctx->mul(x, y) == ctx->mul(y, x));
  auto back = GroupContext::from_json(g.to_json());
  CHECK(back == g);

  auto bad = tab;
  bad[1][2] = bad[1][3];
  CHECK_THROWS_AS(GroupContext::make_cayley(0, bad), Error);
  CHECK_THROWS_AS(GroupContext::make(1, {0}), Error);
}

TEST_CASE("json round trip of sets") {
  auto c = make_ctx(1, {6});
  auto b = folner_box(c, 1);
  CHECK(GSet::from_json(c, b.to_json()) == b);
  CHECK(GroupContext::from_json(c->to_json()) == *c);
}

TEST_CASE("product associativity and inverse involution on random sets") {
  auto c = make_ctx(1, {4});
  std::mt19937_64 rng(7);
  auto rnd = [&] {
    std::vector<Element> v;
    int n = int(rng() % 5) + 1;
    for (int i = 0; i < n; ++i) v.push_back(c->make_elem({int(rng() % 7) - 3}, int(rng() % 4)));
    return GSet(c, v);
  };
  for (int i = 0; i < 200; ++i) {
    auto a = rnd(), b = rnd(), d = rnd();
    CHECK(set_product(set_product(a, b), d) == set_product(a, set_product(b, d)));
    CHECK(inverse_set(inverse_set(a)) == a);
  }
}

TEST_CASE("fuzzed Følner inequalities") {
  auto a = fuzz_aux(3000, 11);
  CHECK(a.violations == 0);
  CHECK(a.first_violation == -1);
  CHECK(a.tightest <= 1.0);
  CHECK(a == fuzz_aux_serial(3000, 11));
  auto k = fuzz_ksets(3000, 11);
  CHECK(k.violations == 0);
  CHECK(k.tightest < 1.0);
  CHECK(k == fuzz_ksets_serial(3000, 11));
  CHECK(fuzz_aux(0, 1).instances == 0);
}
