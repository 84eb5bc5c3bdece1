#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "fixtures.hpp"
#include "symdyn/census.hpp"
#include "symdyn/codec.hpp"
#include "symdyn/fuzz.hpp"
#include "symdyn/marker.hpp"
#include "symdyn/quasitiling.hpp"
#include "symdyn/specification.hpp"

using namespace symdyn;

namespace {

// tolerances and budgets
constexpr double kEntropyTol = 1e-9;
constexpr double kSpecEntropySlack = 0.02;
constexpr long kFuzzInstances = 100000;
constexpr long kSpecTrialsTested = 10000;
constexpr int kRoundtrips = 100;
constexpr int kFaults = 100;
constexpr double kLimit[10] = {0, 1, 120, 60, 60, 30, 30, 120, 120, 300};

struct Outcome {
  bool pass = true;
  std::string detail;
};

struct Checker {
  Outcome o;
  std::ostringstream notes;
  void expect(bool ok, const std::string& what) {
    if (!ok && o.pass) {
      o.pass = false;
      notes << "failed: " << what << "; ";
    }
  }
  void note(const std::string& s) { notes << s << "; "; }
  Outcome done() {
    o.detail = notes.str();
    return o;
  }
};

GSet columns(const Ctx& c, int n) { return set_product(free_box(c, 0, n - 1), folner_box(c, 0)); }

// 1: the Z×Z6 K-shift
Outcome c1() {
  Checker ck;
  auto zz6 = make_ctx(1, {6});
  auto o = omega_k(fx::zz6_k(zz6));
  for (int n = 1; n <= 8; ++n) {
    BigInt p = 1;
    for (int i = 0; i < n; ++i) p *= 3;
    ck.expect(count_blocks(*o, columns(zz6, n)) == p, "count over " + std::to_string(n) + " columns");
  }
  double worst = 0;
  for (int n = 1; n <= 8; ++n) worst = std::max(worst, std::abs(entropy_estimate(*o, n) - std::log(3.0) / 6));
  ck.expect(worst <= kEntropyTol, "entropy estimate off log3/6");
  char buf[64];
  std::snprintf(buf, sizeof buf, "max |estimate - log3/6| = %.2e", worst);
  ck.note(buf);
  return ck.done();
}

// 2: margins for the L-tromino K-shift
Outcome c2() {
  Checker ck;
  fx::Triangles tr;
  auto o = omega_k(tr.K);
  auto spec = KShiftSpec::make(tr.K);
  const GSet win = folner_box(tr.ctx, 6);

  SpecCheckOptions sweep;
  sweep.trials = 0;
  sweep.halo = 3;
  sweep.sweep_side = 6;
  auto r1 = check_specification(*o, spec.kinvk, win, sweep);
  ck.expect(!r1.pass && r1.alpha1 && r1.alpha2, "no counterexample for K⁻¹K");
  if (!r1.pass) {
    ck.expect(exact_admissible(*o, *r1.alpha1, 3) == Verdict::True, "returned α1 admissible");
    ck.expect(exact_admissible(*o, *r1.alpha2, 3) == Verdict::True, "returned α2 admissible");
    ck.expect(is_apart(r1.alpha1->domain(), r1.alpha2->domain(), spec.kinvk), "returned pair K⁻¹K-apart");
    ck.note("K⁻¹K counterexample at sweep domain " + std::to_string(r1.first_refuted_trial) + " of " +
            std::to_string(r1.sweep_domains));
  }
  ck.expect(exact_admissible(*o, tr.alpha1, 3) == Verdict::True, "α1 admissible");
  ck.expect(exact_admissible(*o, tr.alpha2, 3) == Verdict::True, "α2 admissible");
  ck.expect(exact_admissible(*o, merge({tr.alpha1, tr.alpha2}), 3) == Verdict::False, "α1∪α2 refuted");

  SpecCheckOptions rnd;
  rnd.halo = 3;
  rnd.stop_at_first = false;
  rnd.parallel = true;
  rnd.seed = 2024;
  long tested = 0, refuted = 0, unknown = 0, run = 0;
  for (int round = 0; tested < kSpecTrialsTested && round < 8; ++round) {
    rnd.trials = 2 * (kSpecTrialsTested - tested) + 100;
    rnd.seed += 1;
    auto r = check_specification(*o, spec.margin, win, rnd);
    tested += r.trials_run - r.skipped;
    refuted += r.refuted;
    unknown += r.unknown;
    run += r.trials_run;
  }
  ck.expect(tested >= kSpecTrialsTested, "tested trials");
  ck.expect(refuted == 0, "KK⁻¹K refuted");
  ck.expect(unknown == 0, "KK⁻¹K unknown verdicts");
  ck.note("KK⁻¹K: " + std::to_string(tested) + " tested of " + std::to_string(run) + " trials, " +
          std::to_string(refuted) + " refuted, " + std::to_string(unknown) + " unknown");
  return ck.done();
}

// 3: entropy lower bound from the specification margin
Outcome c3() {
  Checker ck;
  auto z = make_ctx(1);
  auto zz6 = make_ctx(1, {6});
  struct Case {
    std::string name;
    OraclePtr o;
    GSet margin;
    int halo;
  };
  auto ks = [](const GSet& k) { return KShiftSpec::make(k).margin; };
  std::vector<Case> cases{
      {"full-2", full_shift(z, 2), GSet::identity(z), 0},
      {"golden-mean", golden_mean(z), fx::zset(z, {0, 1}), 1},
      {"omega{0,1}", omega_k(fx::zset(z, {0, 1})), ks(fx::zset(z, {0, 1})), 3},
      {"omega{0,1,2}", omega_k(fx::zset(z, {0, 1, 2})), ks(fx::zset(z, {0, 1, 2})), 4},
      {"omega Z×Z6", omega_k(fx::zz6_k(zz6)), ks(fx::zz6_k(zz6)), 2},
  };
  std::ostringstream os;
  for (const auto& c : cases) {
    SpecCheckOptions so;
    so.trials = 300;
    so.halo = std::max(3, c.halo);
    auto r = check_specification(*c.o, c.margin, folner_box(c.o->ctx(), 12), so);
    ck.expect(r.pass && r.unknown == 0 && r.trials_run - r.skipped >= 50, c.name + " margin verified");
    CensusOptions co;
    co.halo = c.halo;
    const double est = entropy_estimate(*c.o, 20, co);
    const double bound = std::log(2.0) / double(set_product(inverse_set(c.margin), c.margin).size());
    ck.expect(est >= bound - kSpecEntropySlack, c.name + " entropy bound");
    char buf[128];
    std::snprintf(buf, sizeof buf, "%s %.4f>=%.4f", c.name.c_str(), est, bound - kSpecEntropySlack);
    os << buf << ' ';
  }
  ck.note(os.str());
  return ck.done();
}

// 4: fuzzed inequalities
Outcome c4() {
  Checker ck;
  auto a = fuzz_aux(kFuzzInstances, 4);
  auto k = fuzz_ksets(kFuzzInstances, 4);
  ck.expect(a.instances == kFuzzInstances && a.violations == 0, "aux violations");
  ck.expect(k.instances == kFuzzInstances && k.violations == 0, "ksets violations");
  ck.expect(fuzz_aux(500, 4) == fuzz_aux_serial(500, 4), "aux parallel equals serial");
  char buf[160];
  std::snprintf(buf, sizeof buf, "aux %ld/%ld ok (tightest %.3f), ksets %ld/%ld ok (tightest %.3f)",
                a.instances - a.violations, a.instances, a.tightest, k.instances - k.violations, k.instances,
                k.tightest);
  ck.note(buf);
  return ck.done();
}

// 5: the quasitiling pipeline on a Z window
Outcome c5() {
  Checker ck;
  auto z = make_ctx(1);
  const Rational eps(1, 5);
  ck.expect(r_epsilon(eps) == 8, "r_ε = 8");
  std::vector<GSet> shapes;
  for (int i = 0, r = 1; i < 8; ++i, r = 2 * r + 1) shapes.push_back(folner_box(z, r));
  const GSet f = free_box(z, 0, 9999);
  const GSet cr = core(f, shapes.back());
  auto t = ow_construct(f, shapes, eps);
  const Grade g = disjointness_grade(t, eps);
  ck.expect(g == Grade::StronglyEpsDisjoint || g == Grade::Disjoint, "ow_construct strongly 0.2-disjoint");
  const Rational cov = covering_fraction(t, cr);
  ck.expect(cov >= Rational(4, 5), "ow covering ≥ 0.8");
  auto s = shrink_to_disjoint(t, eps);
  const Rational cov2 = covering_fraction(s, cr);
  ck.expect(disjointness_grade(s, eps) == Grade::Disjoint, "shrink disjoint");
  ck.expect(cov2 >= Rational(16, 25), "shrink covering ≥ 0.64");
  auto h = complete_to_tiling(s, f, eps);
  ck.expect(disjointness_grade(h, eps) == Grade::Disjoint, "completion disjoint");
  ck.expect(is_subset(cr, h.covered()), "completion covers the core");
  long worst = 0;
  for (size_t i = 0; i < s.size(); ++i) {
    const long gain = long(h.tile(i).size()) - long(s.tile(i).size());
    const long cap = long(std::ceil(0.4 * double(s.tile(i).size()) - 1e-12));
    ck.expect(is_subset(s.tile(i), h.tile(i)), "completion only grows tiles");
    ck.expect(gain <= cap, "gain ≤ ⌈0.4|S̃|⌉");
    worst = std::max(worst, gain);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, "%zu tiles, ow covering %.4f, shrink covering %.4f, max gain %ld", t.size(),
                to_double(cov), to_double(cov2), worst);
  ck.note(buf);
  return ck.done();
}

// 6: three-level congruent hierarchy in Z
Outcome c6() {
  Checker ck;
  long tops = 0;
  struct Stack {
    int half;
    std::array<int, 6> radii;
    Rational eps;
  };
  auto c = make_ctx(1);
  for (const Stack& st : {Stack{600, {0, 1, 3, 9, 24, 60}, Rational(1, 4)}, Stack{1000, {0, 1, 2, 7, 25, 60}, Rational(1, 5)},
                          Stack{2000, {0, 1, 3, 9, 30, 100}, Rational(1, 4)}}) {
    const GSet f = folner_box(c, st.half);
    std::vector<std::vector<GSet>> shapes;
    for (int l = 0; l < 3; ++l) {
      std::vector<GSet> lv;
      for (int i = 0; i < 2; ++i) lv.push_back(folner_box(c, st.radii[size_t(2 * l + i)]));
      shapes.push_back(lv);
    }
    std::vector<Rational> eps(3, st.eps);
    auto h = build_hierarchy(f, shapes, eps);
    ck.expect(h.levels.size() == 3, "three levels");
    for (size_t l = 0; l + 1 < h.levels.size(); ++l)
      ck.expect(is_congruent(h.levels[l], h.levels[l + 1]), "congruent pair " + std::to_string(l));
    GSet lower = set_union(h.levels[0].covered(), h.levels[1].covered());
    const auto& top = h.levels[2];
    for (size_t j = 0; j < top.size(); ++j) {
      const GSet tile = top.tile(j);
      GSet seen(c);
      bool disjoint = true;
      for (auto r : primary_subtiles(h, 2, int(j))) {
        const GSet s = h.levels[size_t(r.level)].tile(size_t(r.tile));
        disjoint = disjoint && is_subset(s, tile) && !intersects(s, seen);
        seen = set_union(seen, s);
      }
      ck.expect(disjoint, "primary subtiles disjoint inside the top tile");
      ck.expect(seen == set_intersection(tile, lower), "primary subtiles cover the tile's covered interior");
      ++tops;
    }
  }
  ck.note(std::to_string(tops) + " top tiles checked over three stacks");
  return ck.done();
}

// 7: kopacz_extract over every family on a 6-point universe, up to relabeling
Outcome c7() {
  Checker ck;
  auto z = make_ctx(1);
  std::vector<uint8_t> sets;  // subsets of {0..5} with at most 3 points
  for (int m = 0; m < 64; ++m)
    if (__builtin_popcount(unsigned(m)) <= 3) sets.push_back(uint8_t(m));
  const int ns = int(sets.size());
  std::vector<int> index_of(64, -1);
  for (int i = 0; i < ns; ++i) index_of[sets[size_t(i)]] = i;
  std::vector<std::array<uint8_t, 64>> img;  // action of S6 on set indices
  std::array<int, 6> perm{0, 1, 2, 3, 4, 5};
  do {
    std::array<uint8_t, 64> a{};
    for (int i = 0; i < ns; ++i) {
      int m = 0;
      for (int b = 0; b < 6; ++b)
        if (sets[size_t(i)] >> b & 1) m |= 1 << perm[size_t(b)];
      a[size_t(i)] = uint8_t(index_of[size_t(m)]);
    }
    img.push_back(a);
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<GSet> gsets;
  for (int i = 0; i < ns; ++i) {
    std::vector<Element> v;
    for (int b = 0; b < 6; ++b)
      if (sets[size_t(i)] >> b & 1) v.push_back(z->make_elem({b}));
    gsets.emplace_back(z, v);
  }

  std::vector<int> fam;
  long families = 0, mismatches = 0, broken = 0;
  // a sorted family is canonical when no relabeling gives a smaller sorted family
  auto canonical = [&]() {
    const size_t k = fam.size();
    std::array<int, 8> t{};
    for (const auto& a : img) {
      for (size_t i = 0; i < k; ++i) t[i] = a[size_t(fam[i])];
      std::sort(t.begin(), t.begin() + long(k));
      for (size_t i = 0; i < k; ++i) {
        if (t[i] < fam[i]) return false;
        if (t[i] > fam[i]) break;
      }
    }
    return true;
  };
  auto check = [&]() {
    const int n = int(fam.size());
    int best = 0;
    for (uint32_t sub = 0; sub < (1u << n); ++sub) {
      if (__builtin_popcount(sub) <= best || __builtin_popcount(sub) < 2) continue;
      int first = -1, second = -1;
      for (int i = 0; i < n && second < 0; ++i)
        if (sub >> i & 1) (first < 0 ? first : second) = i;
      const uint8_t a = sets[size_t(fam[size_t(first)])] & sets[size_t(fam[size_t(second)])];
      bool ok = true;
      for (int i = 0; i < n && ok; ++i)
        for (int j = i + 1; j < n && ok; ++j)
          if ((sub >> i & 1) && (sub >> j & 1)) ok = (sets[size_t(fam[size_t(i)])] & sets[size_t(fam[size_t(j)])]) == a;
      if (ok) best = __builtin_popcount(sub);
    }
    std::vector<GSet> family;
    for (int i : fam) family.push_back(gsets[size_t(i)]);
    const KopaczResult r = kopacz_extract(family, 3);
    ++families;
    if (int(r.S.size()) != best) ++mismatches;
    for (size_t i = 0; i < r.S.size(); ++i)
      for (size_t j = i + 1; j < r.S.size(); ++j)
        if (!(set_intersection(family[size_t(r.S[i])], family[size_t(r.S[j])]) == r.A)) ++broken;
  };
  std::function<void(int)> grow = [&](int from) {
    if (fam.size() >= 2) check();
    if (fam.size() == 8) return;
    for (int s = from; s < ns; ++s) {
      fam.push_back(s);
      if (canonical()) grow(s);
      fam.pop_back();
    }
  };
  grow(0);
  ck.expect(mismatches == 0, "|S| equals the brute-force maximum");
  ck.expect(broken == 0, "pairwise intersections equal A");
  ck.note(std::to_string(families) + " canonical families of length 2..8, " + std::to_string(mismatches) +
          " size mismatches");
  return ck.done();
}

// 8: marker suite
Outcome c8() {
  Checker ck;
  long blocks = 0;
  for (auto [name, w] : std::vector<std::pair<std::string, int>>{{"z-full3", 1}, {"z-full3", 2}, {"z-golden", 1}}) {
    GridSpec s = grid_fixture(name);
    s.W = free_box(s.ctx(), -w, w);
    s.validate();
    const Pattern beta = Pattern::constant(free_box(s.ctx(), -2 * w, 2 * w), 0);
    ck.expect(exact_admissible(*s.Xprime, beta, 2) == Verdict::True, "β is X′-admissible");
    auto xb = make_xbar(s);
    CensusOptions co;
    co.halo = s.halo;
    for (int n = int(beta.size()); n <= 12; ++n) {
      auto cs = Census::build(*xb, free_box(s.ctx(), 0, n - 1), co);
      for (BigInt i = 0; i < cs->count(); ++i) {
        ++blocks;
        if (!occurrences(cs->unrank(i), beta).empty()) ck.expect(false, name + ": β occurs in an X̄ block");
      }
    }
  }
  ck.note(std::to_string(blocks) + " X̄ blocks scanned");

  auto s1 = grid_fixture("z-full3");
  auto k1 = assemble_marker(s1);
  ck.expect(k1.case_tag == 1, "case 1 fixture");
  ck.expect(check_kit(k1, s1).empty(), "case 1 kit checks");
  ck.expect(verify_unambiguous(k1), "case 1 unambiguous");
  for (int t = 0; t < k1.r(); ++t) {
    auto ap = k1.marker_ap(t, s1);
    ck.expect(ap.E == k1.E, "case 1 exceptional set");
    ck.expect(beta_audit(ap, k1.beta).empty(), "case 1 β audit");
  }

  auto s2 = grid_fixture("zz4-full2");
  auto c = s2.ctx();
  MarkerOptions mo;
  std::vector<std::pair<Element, int>> cells;
  for (int x = -2; x <= 2; ++x)
    for (int t = 0; t < 4; ++t) cells.emplace_back(c->make_elem({x}, t), x == 0 && t == 0 ? 1 : 0);
  mo.x0 = Pattern::from_pairs(c, cells);
  auto k2 = assemble_marker(s2, mo);
  ck.expect(k2.case_tag == 2, "case 2 fixture");
  ck.expect(check_kit(k2, s2).empty(), "case 2 kit checks");
  ck.expect(verify_unambiguous(k2), "case 2 unambiguous");
  auto parts = k2.components;
  parts.push_back(k2.kappa_ap[0].translate(k2.g0));
  auto out = glue_almost(parts, s2);
  const GSet core_set = set_union(k2.gamma.domain(), set_union(translate(k2.B, k2.g1), translate(k2.B, k2.g2)));
  ck.expect(out.E == set_product(set_product(s2.M, s2.M), core_set), "case 2 predicted E");
  ck.expect(beta_audit(out, k2.beta).empty(), "case 2 β audit");
  return ck.done();
}

// 9: codec
Outcome c9() {
  Checker ck;
  const CodecConfig cfg = codec_fixture("z-full3");
  const Ctx z = cfg.spec.ctx();
  CodeBook book;

  const GSet h = cfg.hole();
  const int lo = h[0].x[0], hi = h[h.size() - 1].x[0];
  const int m = cfg.mbar()[cfg.mbar().size() - 1].x[0];
  const GSet s_hat = free_box(z, -4, 5), s_tilde = free_box(z, lo - m, hi + 9 + m);
  auto pair = build_codebook(cfg, {{s_hat, s_tilde}})->get(cfg, s_hat, s_tilde);
  auto xb = make_xbar(cfg.spec);
  std::set<std::vector<uint8_t>> images;
  long bad = 0;
  for (int i = 0; i < 1024; ++i) {
    std::vector<uint8_t> bits(10);
    for (int b = 0; b < 10; ++b) bits[size_t(b)] = uint8_t((i >> (9 - b)) & 1);
    const Pattern src(s_hat, bits);
    const Pattern img = pair->theta(src);
    const auto back = pair->theta_inv(img);
    if (!back || !(*back == src)) ++bad;
    if (exact_admissible(*xb, img, cfg.census_halo) != Verdict::True) ++bad;
    images.insert(img.symbols());
  }
  ck.expect(bad == 0 && images.size() == 1024, "θ bijective onto X̄-admissible blocks");

  const RoundtripStats st = roundtrip_check(cfg, kRoundtrips, 9, &book);
  const double need = 1 - 2 * to_double(cfg.eps);
  ck.expect(st.trials == kRoundtrips && st.failures == 0, "roundtrip failures");
  ck.expect(st.mean_coverage >= need, "mean coverage ≥ 1-2ε");

  std::mt19937_64 rng(31);
  long silent = 0, caught = 0, clean = 0, identical = 0, windows = 0;
  for (int w = 0; w < 10; ++w) {
    const int len = cfg.window - int(rng() % 600);
    auto y = sample_pattern(*cfg.source, free_box(z, 0, len - 1), rng);
    if (!y) continue;
    const Encoded e = encode(*y, cfg, &book);
    ++windows;
    // the decoder sees only x, rebuilt from its serialized form, with an empty codebook
    const Decoded d1 = decode(e.x, cfg, &book);
    CodeBook fresh;
    const Decoded d2 = decode(Pattern::from_json(z, json::parse(e.x.to_json().dump())), cfg, &fresh);
    if (d1.y.to_json().dump() == d2.y.to_json().dump()) ++identical;
    std::vector<Element> centers;
    for (const auto& t : e.manifest["T"]["tiles"]) centers.push_back(z->from_coords(t[1].get<std::vector<int64_t>>()));
    for (int f = 0; f < kFaults / 10; ++f) {
      const Element cell = z->mul(cfg.kit.Z0[rng() % cfg.kit.Z0.size()], centers[rng() % centers.size()]);
      const int old = e.x.at(cell);
      const int neu = (old + 1 + int(rng() % 2)) % 3;
      try {
        const Decoded d = decode(overlay(e.x, Pattern::from_pairs(z, {{cell, neu}})), cfg, &book);
        if (d.y.agrees_with(*y) && is_subset(d.y.domain(), y->domain())) ++clean;
        else ++silent;
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::Corrupt) ++caught;
        else ++silent;
      }
    }
  }
  ck.expect(windows == 10 && identical == windows, "decoder output independent of the manifest");
  ck.expect(caught + clean == kFaults && silent == 0, "no silent mis-decoding");
  char buf[200];
  std::snprintf(buf, sizeof buf,
                "1024/1024 blocks, %d roundtrips %d failures mean coverage %.4f (min %.4f), faults: %ld caught, %ld "
                "decoded correctly, %ld silent",
                st.trials, st.failures, st.mean_coverage, st.min_coverage, caught, clean, silent);
  ck.note(buf);
  return ck.done();
}

}  // namespace

// optional arguments pick criteria by number
int main(int argc, char** argv) {
  const std::vector<std::function<Outcome()>> criteria{c1, c2, c3, c4, c5, c6, c7, c8, c9};
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  bool all = true;
  for (size_t i = 0; i < criteria.size(); ++i) {
    const int n = int(i) + 1;
    if (!only.empty() && !only.count(n)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i]();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < kLimit[n];
    const bool pass = o.pass && in_time;
    all = all && pass;
    std::printf("criterion %d: %s  %.2fs (limit %.0fs)%s  %s\n", n, pass ? "PASS" : "FAIL", secs, kLimit[n],
                in_time ? "" : " over time", o.detail.c_str());
    std::fflush(stdout);
  }
  return all ? 0 : 1;
}
