#include "symdyn/specification.hpp"

#include <algorithm>
#include <functional>
#include <set>

#include "symdyn/census.hpp"

namespace symdyn {

namespace {

std::mt19937_64 trial_rng(uint64_t seed, long index) {
  std::seed_seq sq{uint32_t(seed), uint32_t(seed >> 32), uint32_t(index), uint32_t(uint64_t(index) >> 32), 0x5eedu};
  return std::mt19937_64(sq);
}

int uni(std::mt19937_64& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

// two sub-domains on either side of a hyperplane, with the thinnest separating corridor
std::optional<std::pair<GSet, GSet>> split_pair(std::mt19937_64& rng, const GSet& margin, const GSet& window) {
  const Ctx& ctx = window.ctx();
  const int d = ctx->free_rank();
  const Element c = window[size_t(uni(rng, 0, int(window.size()) - 1))];
  if (d == 0) return std::nullopt;
  std::vector<std::pair<int, int>> ranges;
  for (int i = 0; i < d; ++i) {
    int len = uni(rng, 2, 6);
    int lo = c.x[i] - uni(rng, 0, len - 1);
    ranges.emplace_back(lo, lo + len - 1);
  }
  GSet box = set_intersection(set_product(interval_box(ctx, ranges), folner_box(ctx, 0)), window);
  if (box.size() < 2) return std::nullopt;
  std::array<int, kMaxRank> u{};
  do {
    for (int i = 0; i < d; ++i) u[i] = uni(rng, -1, 1);
  } while (std::all_of(u.begin(), u.begin() + d, [](int v) { return v == 0; }));
  auto dot = [&](const Element& g) {
    int s = 0;
    for (int i = 0; i < d; ++i) s += u[i] * g.x[i];
    return s;
  };
  int smin = dot(box[0]), smax = smin;
  for (const auto& g : box) {
    smin = std::min(smin, dot(g));
    smax = std::max(smax, dot(g));
  }
  int t = uni(rng, smin, smax);
  GSet a1 = filter(box, [&](const Element& g) { return dot(g) <= t; });
  if (a1.empty()) return std::nullopt;
  for (int w = 1; t + w <= smax; ++w) {
    GSet a2 = filter(box, [&](const Element& g) { return dot(g) >= t + w; });
    if (a2.empty()) break;
    if (is_apart(a1, a2, margin)) return std::make_pair(a1, a2);
  }
  return std::nullopt;
}

GSet random_shape(std::mt19937_64& rng, const Ctx& ctx) {
  GSet base = set_product(free_box(ctx, 0, 2), folner_box(ctx, 0));
  std::vector<Element> pool(base.begin(), base.end());
  std::shuffle(pool.begin(), pool.end(), rng);
  size_t k = size_t(uni(rng, 1, int(std::min<size_t>(6, pool.size()))));
  pool.resize(k);
  return GSet(ctx, pool);
}

std::optional<std::pair<GSet, GSet>> shape_pair(std::mt19937_64& rng, const GSet& margin, const GSet& window) {
  const Ctx& ctx = window.ctx();
  const int d = ctx->free_rank();
  const Element c = window[size_t(uni(rng, 0, int(window.size()) - 1))];
  GSet a1 = set_intersection(translate(random_shape(rng, ctx), c), window);
  if (a1.empty()) return std::nullopt;
  GSet s2 = random_shape(rng, ctx);
  int reach = 3;
  for (const auto& m : margin) reach = std::max(reach, 3 + 2 * free_norm(m, d));
  for (int tries = 0; tries < 64; ++tries) {
    Element v = ctx->identity();
    for (int i = 0; i < d; ++i) v.x[i] = uni(rng, -reach, reach);
    v.t = uni(rng, 0, ctx->torsion_order() - 1);
    GSet a2 = set_intersection(translate(s2, ctx->mul(c, v)), window);
    if (a2.empty()) continue;
    if (is_apart(a1, a2, margin)) return std::make_pair(a1, a2);
  }
  return std::nullopt;
}

std::vector<Pattern> admissible_blocks(const Oracle& o, const GSet& a, const SpecCheckOptions& opt) {
  CensusOptions co;
  co.halo = opt.halo;
  co.search = opt.search;
  auto cs = Census::build(o, a, co);
  if (cs->count() > (opt.enumerate_limit > 0 ? opt.enumerate_limit : 256)) return {};
  std::vector<Pattern> out;
  for (long i = 0; i < long(cs->count()); ++i) {
    Pattern p = cs->unrank(i);
    if (exact_admissible(o, p, opt.halo, opt.search) == Verdict::True) out.push_back(std::move(p));
  }
  return out;
}

}  // namespace

TrialOutcome enumerate_pair(const Oracle& o, const std::pair<GSet, GSet>& dom, const SpecCheckOptions& opt) {
  TrialOutcome out;
  const auto b1 = admissible_blocks(o, dom.first, opt);
  const auto b2 = b1.empty() ? b1 : admissible_blocks(o, dom.second, opt);
  if (b2.empty()) return out;
  bool unknown = false;
  for (const auto& p : b1) {
    for (const auto& q : b2) {
      Solution s = exact_witness(o, merge({p, q}), opt.halo, opt.search);
      if (s.verdict == Verdict::True) continue;
      if (s.verdict == Verdict::Unknown) {
        unknown = true;
        continue;
      }
      out.kind = TrialOutcome::Refuted;
      out.alpha1 = p;
      out.alpha2 = q;
      out.refuting_cell = s.refuting_cell;
      return out;
    }
  }
  out.kind = unknown ? TrialOutcome::Unknown : TrialOutcome::Pass;
  return out;
}

std::vector<std::pair<GSet, GSet>> split_sweep(const Ctx& ctx, const GSet& margin, int max_side) {
  const int d = ctx->free_rank();
  std::vector<std::array<int, kMaxRank>> dirs;
  for (int i = 0; i < d; ++i) {
    std::array<int, kMaxRank> u{};
    u[i] = 1;
    dirs.push_back(u);
    for (int j = i + 1; j < d; ++j)
      for (int sj : {1, -1}) {
        auto v = u;
        v[j] = sj;
        dirs.push_back(v);
      }
  }
  std::vector<std::pair<GSet, GSet>> out;
  std::set<std::pair<std::vector<Element>, std::vector<Element>>> seen;
  std::vector<int> side(size_t(d), 1);
  std::function<void(int)> rec = [&](int i) {
    if (i < d) {
      for (side[size_t(i)] = 1; side[size_t(i)] <= max_side; ++side[size_t(i)]) rec(i + 1);
      return;
    }
    std::vector<std::pair<int, int>> ranges;
    for (int k = 0; k < d; ++k) ranges.emplace_back(0, side[size_t(k)] - 1);
    const GSet box = set_product(interval_box(ctx, ranges), folner_box(ctx, 0));
    for (const auto& u : dirs) {
      auto dot = [&](const Element& g) {
        int s = 0;
        for (int k = 0; k < d; ++k) s += u[k] * g.x[k];
        return s;
      };
      int smin = dot(box[0]), smax = smin;
      for (const auto& g : box) {
        smin = std::min(smin, dot(g));
        smax = std::max(smax, dot(g));
      }
      for (int t = smin; t < smax; ++t) {
        GSet a1 = filter(box, [&](const Element& g) { return dot(g) <= t; });
        for (int w = 1; t + w <= smax; ++w) {
          GSet a2 = filter(box, [&](const Element& g) { return dot(g) >= t + w; });
          if (!is_apart(a1, a2, margin)) continue;
          if (seen.insert({a1.elems(), a2.elems()}).second) out.emplace_back(a1, a2);
          break;
        }
      }
    }
  };
  if (d > 0) rec(0);
  std::stable_sort(out.begin(), out.end(), [](const auto& x, const auto& y) {
    return x.first.size() + x.second.size() < y.first.size() + y.second.size();
  });
  return out;
}

TrialOutcome specification_trial(const Oracle& o, const GSet& margin, const GSet& window, const SpecCheckOptions& opt,
                                 long index) {
  TrialOutcome out;
  if (window.empty()) return out;
  auto rng = trial_rng(opt.seed, index);
  auto dom = (index % 2 == 0) ? split_pair(rng, margin, window) : shape_pair(rng, margin, window);
  if (!dom) return out;
  if (opt.enumerate_limit > 0) return enumerate_pair(o, *dom, opt);
  std::vector<Pattern> parts;
  for (const GSet* a : {&dom->first, &dom->second}) {
    auto p = sample_pattern(o, halo_region(*a, opt.sample_margin), rng, opt.search);
    if (!p) return out;
    Pattern part = p->restrict(*a);
    if (opt.certify_parts && exact_admissible(o, part, opt.halo, opt.search) != Verdict::True) return out;
    parts.push_back(std::move(part));
  }
  Solution s = exact_witness(o, merge(parts), opt.halo, opt.search);
  if (s.verdict == Verdict::True) {
    out.kind = TrialOutcome::Pass;
    return out;
  }
  out.kind = s.verdict == Verdict::False ? TrialOutcome::Refuted : TrialOutcome::Unknown;
  out.alpha1 = parts[0];
  out.alpha2 = parts[1];
  out.refuting_cell = s.refuting_cell;
  return out;
}

namespace {
void tally(SpecCheckResult& r, TrialOutcome& t, long i) {
  ++r.trials_run;
  switch (t.kind) {
    case TrialOutcome::Pass: break;
    case TrialOutcome::Skipped: ++r.skipped; break;
    case TrialOutcome::Unknown: ++r.unknown; break;
    case TrialOutcome::Refuted:
      ++r.refuted;
      if (r.first_refuted_trial < 0) {
        r.first_refuted_trial = i;
        r.alpha1 = std::move(t.alpha1);
        r.alpha2 = std::move(t.alpha2);
        r.refuting_cell = t.refuting_cell;
      }
      r.pass = false;
      break;
  }
}

// sweep outcomes count toward refuted/unknown but not trials_run; true on a refutation
bool sweep_tally(SpecCheckResult& r, TrialOutcome& t, long i) {
  if (t.kind == TrialOutcome::Unknown) ++r.unknown;
  if (t.kind != TrialOutcome::Refuted) return false;
  ++r.refuted;
  r.pass = false;
  if (!r.refuted_in_sweep && r.first_refuted_trial < 0) {
    r.refuted_in_sweep = true;
    r.first_refuted_trial = i;
    r.alpha1 = std::move(t.alpha1);
    r.alpha2 = std::move(t.alpha2);
    r.refuting_cell = t.refuting_cell;
  }
  return true;
}
}  // namespace

SpecCheckResult check_specification_serial(const Oracle& o, const GSet& margin, const GSet& window,
                                           const SpecCheckOptions& opt) {
  check_same(margin, window);
  SpecCheckResult r;
  if (opt.sweep_side > 0) {
    const auto doms = split_sweep(window.ctx(), margin, opt.sweep_side);
    r.sweep_domains = long(doms.size());
    for (long i = 0; i < long(doms.size()); ++i) {
      auto t = enumerate_pair(o, doms[size_t(i)], opt);
      if (sweep_tally(r, t, i) && opt.stop_at_first) return r;
    }
  }
  for (long i = 0; i < opt.trials; ++i) {
    auto t = specification_trial(o, margin, window, opt, i);
    tally(r, t, i);
    if (opt.stop_at_first && r.refuted > 0) break;
  }
  return r;
}

SpecCheckResult check_specification(const Oracle& o, const GSet& margin, const GSet& window,
                                    const SpecCheckOptions& opt) {
  if (!opt.parallel) return check_specification_serial(o, margin, window, opt);
  check_same(margin, window);
  SpecCheckResult r;
  if (opt.sweep_side > 0) {
    const auto doms = split_sweep(window.ctx(), margin, opt.sweep_side);
    r.sweep_domains = long(doms.size());
    const long n = long(doms.size());
    for (long base = 0; base < n; base += 16) {
      const long m = std::min<long>(16, n - base);
      std::vector<TrialOutcome> outs(static_cast<size_t>(m));
#pragma omp parallel for schedule(dynamic, 1)
      for (long k = 0; k < m; ++k) outs[size_t(k)] = enumerate_pair(o, doms[size_t(base + k)], opt);
      for (long k = 0; k < m; ++k)
        if (sweep_tally(r, outs[size_t(k)], base + k) && opt.stop_at_first) return r;
    }
  }
  const long chunk = 256;
  for (long base = 0; base < opt.trials; base += chunk) {
    const long n = std::min(chunk, opt.trials - base);
    std::vector<TrialOutcome> outs(static_cast<size_t>(n));
#pragma omp parallel for schedule(dynamic, 4)
    for (long k = 0; k < n; ++k) outs[size_t(k)] = specification_trial(o, margin, window, opt, base + k);
    for (long k = 0; k < n; ++k) {
      tally(r, outs[size_t(k)], base + k);
      if (opt.stop_at_first && r.refuted > 0) return r;
    }
  }
  return r;
}

Pattern glue(const Oracle& o, const std::vector<Pattern>& parts, const GSet& margin, int halo,
             const SearchOptions& opt) {
  if (parts.empty()) return Pattern(o.ctx());
  for (size_t i = 0; i < parts.size(); ++i)
    for (size_t j = i + 1; j < parts.size(); ++j)
      if (!is_apart(parts[i].domain(), parts[j].domain(), margin))
        throw Error(ErrorKind::Precondition,
                    "glue parts " + std::to_string(i) + " and " + std::to_string(j) + " are not margin-apart");
  Pattern u = merge(parts);
  Solution s = lexmin_completion(o, halo_region(u.domain(), halo), u, opt);
  if (s.verdict == Verdict::Unknown) throw Error(ErrorKind::Budget, "glue search budget exhausted");
  if (s.verdict == Verdict::False) {
    std::string where;
    if (s.refuting_cell) {
      for (auto c : o.ctx()->coords(*s.refuting_cell)) where += (where.empty() ? "" : ",") + std::to_string(c);
    }
    throw Error(ErrorKind::Infeasible, "glue refuted at cell (" + where + "): margin insufficient for this oracle");
  }
  return s.visible();
}

}  // namespace symdyn
