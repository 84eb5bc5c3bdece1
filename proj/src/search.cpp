#include "symdyn/search.hpp"

#include <algorithm>
#include <unordered_map>

namespace symdyn {

const char* verdict_name(Verdict v) {
  switch (v) {
    case Verdict::False: return "false";
    case Verdict::True: return "true";
    default: return "unknown";
  }
}

Pattern Solution::visible() const {
  std::vector<uint8_t> s(vis.begin(), vis.end());
  return Pattern(region, std::move(s));
}

GSet Solution::hidden_ones() const {
  std::vector<Element> out;
  for (size_t i = 0; i < hid.size(); ++i)
    if (hid[i] == 1) out.push_back(region[i]);
  return GSet::from_sorted(region.ctx(), std::move(out));
}

GSet halo_region(const GSet& domain, int halo) {
  if (halo <= 0 || domain.empty()) return domain;
  return set_product(domain, folner_box(domain.ctx(), halo));
}

Frame::Frame(const Oracle& o, GSet reg) : oracle(&o), region(std::move(reg)) {
  const auto& g = *o.ctx();
  const size_t n = region.size();
  std::vector<std::vector<int>> per_cell(n);
  win_start.push_back(0);
  std::vector<int> idx;
  for (size_t r = 0; r < o.rules().size(); ++r) {
    const auto& taps = o.rules()[r]->taps();
    const Element t0inv = g.inv(taps[0].offset);
    for (size_t c = 0; c < n; ++c) {
      const Element base = g.mul(t0inv, region[c]);
      idx.clear();
      bool inside = true;
      for (const auto& t : taps) {
        long k = region.index_of(g.mul(t.offset, base));
        if (k < 0) {
          inside = false;
          break;
        }
        idx.push_back(int(k));
      }
      if (!inside) continue;
      const int w = int(win_rule.size());
      win_rule.push_back(int(r));
      for (int k : idx) {
        win_cells.push_back(k);
        if (per_cell[k].empty() || per_cell[k].back() != w) per_cell[k].push_back(w);
      }
      win_start.push_back(int(win_cells.size()));
    }
  }
  cell_win_start.push_back(0);
  for (const auto& v : per_cell) {
    cell_wins.insert(cell_wins.end(), v.begin(), v.end());
    cell_win_start.push_back(int(cell_wins.size()));
  }
}

namespace {

int lowest(uint64_t m) { return __builtin_ctzll(m); }

}  // namespace

Solution solve(const Frame& fr, const Pattern& vf, const Pattern* hf, const SearchOptions& opt, std::mt19937_64* rng) {
  const Oracle& o = *fr.oracle;
  const size_t n = fr.region.size();
  const int qv = o.q_vis(), qh = o.q_hid(), qf = qv * qh;
  if (qf > 64) throw Error(ErrorKind::Precondition, "search supports at most 64 full symbols");
  // full symbol f = vis*qh + hid, so ascending f is visible-major
  std::vector<uint64_t> vmask(qv, 0), hmask(qh, 0);
  for (int f = 0; f < qf; ++f) {
    vmask[f / qh] |= 1ull << f;
    hmask[f % qh] |= 1ull << f;
  }
  const uint64_t all = qf == 64 ? ~0ull : ((1ull << qf) - 1);
  std::vector<uint64_t> dom(n, all);
  for (size_t i = 0; i < vf.size(); ++i) {
    long k = fr.index(vf.domain()[i]);
    if (k < 0) throw Error(ErrorKind::Precondition, "fixed cell outside search region");
    if (vf.symbols()[i] >= qv) throw Error(ErrorKind::Precondition, "symbol outside alphabet");
    dom[k] &= vmask[vf.symbols()[i]];
  }
  if (hf) {
    for (size_t i = 0; i < hf->size(); ++i) {
      long k = fr.index(hf->domain()[i]);
      if (k < 0) throw Error(ErrorKind::Precondition, "fixed hidden cell outside search region");
      if (hf->symbols()[i] >= qh) throw Error(ErrorKind::Precondition, "hidden symbol outside alphabet");
      dom[k] &= hmask[hf->symbols()[i]];
    }
  }

  Solution sol;
  sol.region = fr.region;
  auto layer_val = [&](uint64_t d, int layer) -> int {
    if (d == 0) return -1;
    const int f = lowest(d);
    if (layer == kVisible) {
      const int v = f / qh;
      return (d & ~vmask[v]) ? -1 : v;
    }
    const int h = f % qh;
    return (d & ~hmask[h]) ? -1 : h;
  };

  const auto& rules = o.rules();
  long work = 0;
  std::vector<std::pair<int, uint64_t>> trail;
  std::vector<int> queue;
  std::vector<char> queued(fr.windows(), 0);
  int wiped = -1;
  int vals[512];
  int cells[512];

  // returns false on a wiped-out domain
  auto propagate = [&]() {
    while (!queue.empty()) {
      const int w = queue.back();
      queue.pop_back();
      queued[w] = 0;
      ++work;
      const int s = fr.win_start[w], e = fr.win_start[w + 1], k = e - s;
      const auto& rule = *rules[fr.win_rule[w]];
      const auto& taps = rule.taps();
      for (int i = 0; i < k; ++i) {
        cells[i] = fr.win_cells[s + i];
        vals[i] = layer_val(dom[cells[i]], taps[i].layer);
      }
      for (int i = 0; i < k; ++i) {
        const int c = cells[i];
        bool seen = false;
        for (int j = 0; j < i && !seen; ++j) seen = cells[j] == c;
        if (seen) continue;
        const uint64_t d = dom[c];
        uint64_t keep = 0;
        for (uint64_t m = d; m; m &= m - 1) {
          const int f = lowest(m);
          int saved[512];
          for (int j = i; j < k; ++j)
            if (cells[j] == c) {
              saved[j] = vals[j];
              vals[j] = taps[j].layer == kVisible ? f / qh : f % qh;
            }
          if (rule.check(vals)) keep |= 1ull << f;
          for (int j = i; j < k; ++j)
            if (cells[j] == c) vals[j] = saved[j];
        }
        if (keep == d) continue;
        trail.emplace_back(c, d);
        dom[c] = keep;
        if (!keep) {
          wiped = c;
          for (int x : queue) queued[x] = 0;
          queue.clear();
          return false;
        }
        for (int j = 0; j < k; ++j)
          if (cells[j] == c) vals[j] = layer_val(keep, taps[j].layer);
        for (int t = fr.cell_win_start[c]; t < fr.cell_win_start[c + 1]; ++t) {
          const int x = fr.cell_wins[t];
          if (!queued[x]) {
            queued[x] = 1;
            queue.push_back(x);
          }
        }
      }
    }
    return true;
  };
  auto undo = [&](size_t mark) {
    while (trail.size() > mark) {
      dom[trail.back().first] = trail.back().second;
      trail.pop_back();
    }
  };
  auto push_cell = [&](int c) {
    for (int t = fr.cell_win_start[c]; t < fr.cell_win_start[c + 1]; ++t) {
      const int x = fr.cell_wins[t];
      if (!queued[x]) {
        queued[x] = 1;
        queue.push_back(x);
      }
    }
  };
  auto finish = [&](Verdict v) {
    sol.verdict = v;
    sol.nodes = work;
    if (v == Verdict::True) {
      sol.vis.resize(n);
      sol.hid.resize(n);
      for (size_t i = 0; i < n; ++i) {
        const int f = lowest(dom[i]);
        sol.vis[i] = int8_t(f / qh);
        sol.hid[i] = int8_t(f % qh);
      }
    } else if (v == Verdict::False && wiped >= 0) {
      sol.refuting_cell = fr.region[wiped];
    }
    return sol;
  };

  for (size_t w = 0; w < fr.windows(); ++w) {
    if (fr.win_start[w + 1] - fr.win_start[w] > 512) throw Error(ErrorKind::Precondition, "rule too wide");
    queued[w] = 1;
    queue.push_back(int(w));
  }
  for (size_t i = 0; i < n; ++i)
    if (!dom[i]) {
      wiped = int(i);
      return finish(Verdict::False);
    }
  if (!propagate()) return finish(Verdict::False);

  struct Decision {
    int cell;
    size_t mark;
    std::vector<int> order;
    size_t next = 0;
  };
  std::vector<Decision> stack;
  size_t scan = 0;
  int shallow_wipe_depth = 1 << 30, shallow_wipe = wiped;
  while (true) {
    while (scan < n && (dom[scan] & (dom[scan] - 1)) == 0) ++scan;
    if (scan == n) return finish(Verdict::True);
    Decision dc{int(scan), trail.size(), {}, 0};
    for (uint64_t m = dom[scan]; m; m &= m - 1) dc.order.push_back(lowest(m));
    if (rng) std::shuffle(dc.order.begin(), dc.order.end(), *rng);
    stack.push_back(std::move(dc));
    // advance the top decision until a value survives propagation, backtracking as needed
    while (true) {
      if (stack.empty()) {
        wiped = shallow_wipe;
        return finish(Verdict::False);
      }
      Decision& top = stack.back();
      undo(top.mark);
      if (top.next == top.order.size()) {
        scan = size_t(top.cell);
        stack.pop_back();
        continue;
      }
      if (++work > opt.budget) return finish(Verdict::Unknown);
      const int f = top.order[top.next++];
      trail.emplace_back(top.cell, dom[top.cell]);
      dom[top.cell] = 1ull << f;
      push_cell(top.cell);
      if (propagate()) {
        scan = size_t(top.cell) + 1;
        break;
      }
      if (int(stack.size()) < shallow_wipe_depth) {
        shallow_wipe_depth = int(stack.size());
        shallow_wipe = wiped;
      }
    }
  }
}

Solution solve(const Oracle& o, const GSet& region, const Pattern& vis_fixed, const SearchOptions& opt) {
  Frame fr(o, region);
  return solve(fr, vis_fixed, nullptr, opt);
}

Solution exact_witness(const Oracle& o, const Pattern& p, int halo, const SearchOptions& opt) {
  if (p.empty()) {
    Solution s;
    s.verdict = Verdict::True;
    s.region = GSet(o.ctx());
    return s;
  }
  Frame fr(o, halo_region(p.domain(), halo));
  return solve(fr, p, nullptr, opt);
}

Verdict exact_admissible(const Oracle& o, const Pattern& p, int halo, const SearchOptions& opt) {
  return exact_witness(o, p, halo, opt).verdict;
}

bool locally_admissible(const Oracle& o, const Pattern& p) {
  if (p.empty()) return true;
  return exact_admissible(o, p, 0) == Verdict::True;
}

Solution lexmin_completion(const Oracle& o, const GSet& region, const Pattern& vis_fixed, const SearchOptions& opt) {
  Frame fr(o, region);
  Solution best = solve(fr, vis_fixed, nullptr, opt);
  if (best.verdict != Verdict::True || !o.has_hidden()) return best;
  std::vector<char> fixed(region.size(), 0);
  for (const auto& g : vis_fixed.domain()) fixed[region.index_of(g)] = 1;
  std::vector<std::pair<Element, int>> decided;
  for (size_t i = 0; i < vis_fixed.size(); ++i) decided.emplace_back(vis_fixed.domain()[i], vis_fixed.symbols()[i]);
  for (size_t i = 0; i < region.size(); ++i) {
    if (fixed[i]) continue;
    for (int v = 0; v < best.vis[i]; ++v) {
      auto trial = decided;
      trial.emplace_back(region[i], v);
      Solution s = solve(fr, Pattern::from_pairs(o.ctx(), trial), nullptr, opt);
      if (s.verdict == Verdict::Unknown) return s;
      if (s.verdict == Verdict::True) {
        best = std::move(s);
        break;
      }
    }
    decided.emplace_back(region[i], best.vis[i]);
  }
  return best;
}

std::optional<Pattern> sample_pattern(const Oracle& o, const GSet& region, std::mt19937_64& rng,
                                      const SearchOptions& opt) {
  if (o.sampler) return o.sampler(o, region, rng);
  Frame fr(o, region);
  Solution s = solve(fr, Pattern(o.ctx()), nullptr, opt, &rng);
  if (s.verdict != Verdict::True) return std::nullopt;
  return s.visible();
}

}  // namespace symdyn
