#include "symdyn/fuzz.hpp"

#include <algorithm>
#include <random>

#include "symdyn/kshift.hpp"

namespace symdyn {

namespace {

struct Outcome {
  bool ok = true;
  double ratio = 0;
};

const Ctx& fuzz_ctx(int which) {
  static const Ctx z = make_ctx(1), z2 = make_ctx(2), z6 = make_ctx(1, {6});
  return which == 0 ? z : which == 1 ? z2 : z6;
}

std::mt19937_64 instance_rng(uint64_t seed, long i) {
  std::seed_seq seq{uint32_t(seed), uint32_t(seed >> 32), uint32_t(i), uint32_t(uint64_t(i) >> 32)};
  return std::mt19937_64(seq);
}

int uniform(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

Element random_elem(const Ctx& g, std::mt19937_64& rng, int radius) {
  Element e = g->identity();
  for (int i = 0; i < g->free_rank(); ++i) e.x[i] = uniform(rng, -radius, radius);
  e.t = uniform(rng, 0, g->torsion_order() - 1);
  return e;
}

GSet random_k(const Ctx& g, std::mt19937_64& rng, int radius, int extra) {
  std::vector<Element> v{g->identity()};
  for (int i = 0; i < extra; ++i) v.push_back(random_elem(g, rng, radius));
  return GSet(g, v);
}

// union of a few boxes with some cells knocked out
GSet random_f(const Ctx& g, std::mt19937_64& rng) {
  const int d = g->free_rank();
  const int side = d == 1 ? 40 : 9;
  std::vector<Element> v;
  const int boxes = uniform(rng, 1, 3);
  for (int b = 0; b < boxes; ++b) {
    std::vector<std::pair<int, int>> r;
    for (int i = 0; i < d; ++i) {
      const int lo = uniform(rng, -side, side);
      r.push_back({lo, lo + uniform(rng, 0, side)});
    }
    for (const auto& e : interval_box(g, r)) {
      for (int t = 0; t < g->torsion_order(); ++t) {
        Element c = e;
        c.t = t;
        v.push_back(c);
      }
    }
  }
  const double drop = uniform(rng, 0, 2) * 0.05;
  std::bernoulli_distribution keep(1 - drop);
  std::vector<Element> kept;
  for (const auto& e : v)
    if (keep(rng)) kept.push_back(e);
  if (kept.empty()) kept.push_back(v.front());
  return GSet(g, kept);
}

Outcome aux_instance(uint64_t seed, long i) {
  auto rng = instance_rng(seed, i);
  const Ctx& g = fuzz_ctx(int(i % 3));
  const int radius = g->free_rank() == 1 ? uniform(rng, 1, 4) : uniform(rng, 1, 2);
  const GSet k = random_k(g, rng, radius, uniform(rng, 0, 3));
  const GSet a = set_union(k, random_k(g, rng, radius, uniform(rng, 0, 4)));
  const GSet kp = set_union(a, inverse_set(a));
  const GSet f = random_f(g, rng);
  std::vector<Element> order(set_product(kp, f).elems());
  std::shuffle(order.begin(), order.end(), rng);
  const GSet vmax = greedy_maximal(kp, GSet(g, order), order);
  std::bernoulli_distribution keep(uniform(rng, 5, 10) / 10.0);
  const GSet v = filter(vmax, [&](const Element&) { return keep(rng); });
  const AuxBound b = check_aux_bound(k, kp, f, v);
  return {b.holds, to_double(b.lhs) / to_double(b.rhs)};
}

Outcome ksets_instance(uint64_t seed, long i) {
  auto rng = instance_rng(seed, i);
  const Ctx& g = fuzz_ctx(int(i % 3));
  const int radius = g->free_rank() == 1 ? uniform(rng, 1, 3) : 1;
  const GSet k = random_k(g, rng, radius, uniform(rng, 0, 3));
  const GSet f = random_f(g, rng);
  const Rational defect = invariance_defect(f, k);
  // ε a little above the defect
  const Rational eps = defect + Rational(uniform(rng, 1, 200), 1000);
  const Rational nf(long(f.size())), nk(long(k.size()));
  Outcome out;

  for (const auto& gk : k) {
    const Rational d1 = invariance_defect(f, GSet(g, {g->identity(), gk}));
    if (!(d1 < 2 * eps)) out.ok = false;
    out.ratio = std::max(out.ratio, to_double(d1 / (2 * eps)));
  }

  const Rational c2(long(core(f, k).size()));
  const Rational b2 = (1 - nk * eps) * nf;
  if (c2 < b2) out.ok = false;
  if (c2 > 0) out.ratio = std::max(out.ratio, to_double(b2 / c2));

  // F' drops at most ε|F| cells of F
  const long budget = std::min<long>(long(to_double(eps * nf)), long(f.size()));
  std::vector<Element> cells(f.elems());
  std::shuffle(cells.begin(), cells.end(), rng);
  const long dropped = std::min<long>(budget, uniform(rng, 0, int(std::min<long>(budget, 1 << 20))));
  const GSet fp(g, std::vector<Element>(cells.begin() + dropped, cells.end()));
  if (Rational(long(fp.size())) < (1 - eps) * nf) return out;
  const Rational c3(long(set_intersection(core(fp, k), f).size()));
  const Rational b3 = (1 - 2 * nk * eps) * nf;
  if (c3 < b3) out.ok = false;
  if (c3 > 0) out.ratio = std::max(out.ratio, to_double(b3 / c3));
  return out;
}

// a generator bug surfaces as a violation rather than escaping an OpenMP region
template <class Fn>
Outcome guarded(Fn fn, uint64_t seed, long i) {
  try {
    return fn(seed, i);
  } catch (const std::exception&) {
    return {false, 0};
  }
}

template <class Fn>
FuzzStats run_serial(long n, uint64_t seed, Fn fn) {
  FuzzStats s;
  s.instances = n;
  for (long i = 0; i < n; ++i) {
    const Outcome o = guarded(fn, seed, i);
    if (!o.ok) {
      if (s.first_violation < 0) s.first_violation = i;
      ++s.violations;
    }
    s.tightest = std::max(s.tightest, o.ratio);
  }
  return s;
}

template <class Fn>
FuzzStats run_parallel(long n, uint64_t seed, Fn fn) {
  FuzzStats s;
  s.instances = n;
  long viol = 0, first = n;
  double tight = 0;
#pragma omp parallel for schedule(dynamic, 256) reduction(+ : viol) reduction(min : first) reduction(max : tight)
  for (long i = 0; i < n; ++i) {
    const Outcome o = guarded(fn, seed, i);
    if (!o.ok) {
      ++viol;
      first = std::min(first, i);
    }
    tight = std::max(tight, o.ratio);
  }
  s.violations = viol;
  s.first_violation = viol ? first : -1;
  s.tightest = tight;
  return s;
}

}  // namespace

json FuzzStats::to_json() const {
  return {{"instances", instances}, {"violations", violations}, {"first_violation", first_violation},
          {"tightest", tightest}};
}

FuzzStats fuzz_aux(long n, uint64_t seed, bool parallel) {
  return parallel ? run_parallel(n, seed, aux_instance) : run_serial(n, seed, aux_instance);
}
FuzzStats fuzz_aux_serial(long n, uint64_t seed) { return run_serial(n, seed, aux_instance); }

FuzzStats fuzz_ksets(long n, uint64_t seed, bool parallel) {
  return parallel ? run_parallel(n, seed, ksets_instance) : run_serial(n, seed, ksets_instance);
}
FuzzStats fuzz_ksets_serial(long n, uint64_t seed) { return run_serial(n, seed, ksets_instance); }

}  // namespace symdyn
