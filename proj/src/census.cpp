#include "symdyn/census.hpp"

#include <algorithm>
#include <map>
#include <string>
#include <unordered_map>

namespace symdyn {

namespace {

struct Interner {
  std::unordered_map<std::string, int> ids;
  std::vector<std::string> keys;
  int get(const std::string& k) {
    auto [it, fresh] = ids.emplace(k, int(keys.size()));
    if (fresh) keys.push_back(k);
    return it->second;
  }
  size_t size() const { return keys.size(); }
};

std::string set_key(const std::vector<int>& v) {
  return std::string(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(int));
}

std::vector<int> key_set(const std::string& s) {
  std::vector<int> v(s.size() / sizeof(int));
  std::copy(s.begin(), s.end(), reinterpret_cast<char*>(v.data()));
  return v;
}

}  // namespace

std::shared_ptr<const Census> Census::build(const Oracle& o, const GSet& domain, const CensusOptions& opt) {
  auto out = std::shared_ptr<Census>(new Census());
  Census& cs = *out;
  cs.domain_ = domain;
  cs.halo_ = opt.halo;
  cs.q_ = o.q_vis();
  if (domain.empty()) {
    cs.method_ = "empty";
    cs.count_ = 1;
    cs.list_.push_back({});
    return out;
  }
  check_same(domain, GSet(o.ctx()));
  const GSet region = halo_region(domain, opt.halo);
  const auto& g = *o.ctx();
  const int d = g.free_rank();

  std::vector<int> col_of(region.size());
  std::vector<int> col_start;
  for (size_t i = 0; i < region.size(); ++i) {
    if (i == 0 || d == 0 || region[i].x[0] != region[i - 1].x[0]) col_start.push_back(int(i));
    col_of[i] = int(col_start.size()) - 1;
  }
  col_start.push_back(int(region.size()));
  const int ncol = int(col_start.size()) - 1;
  int widest = 0;
  for (int c = 0; c < ncol; ++c) widest = std::max(widest, col_start[c + 1] - col_start[c]);

  Frame fr(o, region);
  std::vector<int8_t> pin(region.size(), -1);
  if (opt.pin_hidden) {
    if (o.q_hid() < 2) throw Error(ErrorKind::Precondition, "pinning needs a hidden layer");
    for (size_t i = 0; i < opt.pin_hidden->size(); ++i) {
      long k = region.index_of(opt.pin_hidden->domain()[i]);
      if (k >= 0) pin[k] = int8_t(opt.pin_hidden->symbols()[i]);
    }
  }
  std::vector<char> in_dom(region.size(), 0);
  std::vector<int> dom_pos(region.size(), -1);
  for (size_t i = 0; i < region.size(); ++i) {
    long k = domain.index_of(region[i]);
    if (k >= 0) {
      in_dom[i] = 1;
      dom_pos[i] = int(k);
    }
  }

  if (widest > opt.max_width) {
    // enumerate admissible blocks directly, cell by cell in lexicographic order
    cs.method_ = "list";
    std::vector<int> dcell;
    for (const auto& e : domain) dcell.push_back(int(region.index_of(e)));
    std::vector<std::pair<Element, int>> prefix;
    std::vector<uint8_t> word;
    long work = 0;
    std::optional<Pattern> hid_fixed;
    if (opt.pin_hidden) hid_fixed = opt.pin_hidden->restrict(set_intersection(opt.pin_hidden->domain(), region));
    std::function<void(size_t)> rec = [&](size_t k) {
      if (++work > opt.list_budget) throw Error(ErrorKind::Budget, "census enumeration budget exhausted");
      Solution s = solve(fr, Pattern::from_pairs(o.ctx(), prefix), hid_fixed ? &*hid_fixed : nullptr, opt.search);
      if (s.verdict == Verdict::Unknown) throw Error(ErrorKind::Budget, "census admissibility search undecided");
      if (s.verdict == Verdict::False) return;
      if (k == dcell.size()) {
        cs.list_.push_back(word);
        return;
      }
      for (int v = 0; v < o.q_vis(); ++v) {
        prefix.emplace_back(domain[k], v);
        word.push_back(uint8_t(v));
        rec(k + 1);
        prefix.pop_back();
        word.pop_back();
      }
    };
    rec(0);
    cs.count_ = BigInt(cs.list_.size());
    cs.state_total_ = cs.list_.size();
    return out;
  }

  cs.method_ = "strip";
  const int nw = int(fr.windows());
  std::vector<int> wmax(nw, 0);
  std::vector<std::vector<int>> wins_at(ncol);
  for (int w = 0; w < nw; ++w) {
    for (int k = fr.win_start[w]; k < fr.win_start[w + 1]; ++k) wmax[w] = std::max(wmax[w], col_of[fr.win_cells[k]]);
    wins_at[wmax[w]].push_back(w);
  }
  // cell -> windows completing in the cell's own column
  std::vector<std::vector<int>> cell_checks(region.size());
  for (int w = 0; w < nw; ++w)
    for (int k = fr.win_start[w]; k < fr.win_start[w + 1]; ++k) {
      int cell = fr.win_cells[k];
      if (col_of[cell] == wmax[w] && (cell_checks[cell].empty() || cell_checks[cell].back() != w))
        cell_checks[cell].push_back(w);
    }
  // retained (cell, layer) keys after each column
  std::vector<std::vector<int>> keep(ncol);
  for (int w = 0; w < nw; ++w) {
    const auto& taps = o.rules()[fr.win_rule[w]]->taps();
    for (int k = fr.win_start[w]; k < fr.win_start[w + 1]; ++k) {
      int cell = fr.win_cells[k];
      int key = cell * 2 + taps[k - fr.win_start[w]].layer;
      for (int b = col_of[cell]; b < wmax[w]; ++b) keep[b].push_back(key);
    }
  }
  for (auto& v : keep) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
  }

  const int qv = o.q_vis(), qh = o.q_hid();
  std::vector<int8_t> vis(region.size(), -1), hid(region.size(), qh > 1 ? -1 : 0);
  int vals[512];
  auto window_ok = [&](int w) {
    const int s = fr.win_start[w], e = fr.win_start[w + 1];
    const auto& rule = o.rules()[fr.win_rule[w]];
    const auto& taps = rule->taps();
    for (int i = s; i < e; ++i) {
      int c = fr.win_cells[i];
      vals[i - s] = taps[i - s].layer == kVisible ? vis[c] : hid[c];
    }
    return rule->check(vals);
  };

  std::vector<int> prev_keys;  // keys at previous boundary
  Interner nfa_prev, dfa_prev;
  nfa_prev.get(std::string());
  dfa_prev.get(set_key({0}));
  cs.cols_.resize(ncol);
  std::vector<size_t> dfa_sizes{1};

  for (int c = 0; c < ncol; ++c) {
    Column& col = cs.cols_[c];
    std::vector<int> cells;
    for (int i = col_start[c]; i < col_start[c + 1]; ++i) {
      cells.push_back(i);
      if (in_dom[i]) {
        col.dom_pos.push_back(dom_pos[i]);
        col.label_radix.push_back(qv);
      }
    }
    double space = 1;
    for (size_t k = 0; k < col.dom_pos.size(); ++k) space *= qv;
    if (col.dom_pos.size() > 18 || space >= 4294967296.0)
      throw Error(ErrorKind::Budget, "column label space too large");
    const std::vector<int>& nkeys = keep[c];
    Interner nfa_next;
    std::vector<std::map<uint32_t, std::vector<int>>> nfa_cache(nfa_prev.size());
    std::vector<char> nfa_done(nfa_prev.size(), 0);

    auto expand = [&](int s) {
      if (nfa_done[s]) return;
      nfa_done[s] = 1;
      const std::string& sv = nfa_prev.keys[s];
      for (size_t k = 0; k < prev_keys.size(); ++k) {
        int key = prev_keys[k];
        if (key & 1)
          hid[key >> 1] = int8_t(sv[k]);
        else
          vis[key >> 1] = int8_t(sv[k]);
      }
      auto& sink = nfa_cache[s];
      std::string nk(nkeys.size(), '\0');
      std::function<void(size_t)> rec = [&](size_t j) {
        if (j == cells.size()) {
          uint32_t label = 0;
          for (int cell : cells)
            if (in_dom[cell]) label = label * qv + uint32_t(vis[cell]);
          for (size_t k = 0; k < nkeys.size(); ++k)
            nk[k] = char((nkeys[k] & 1) ? hid[nkeys[k] >> 1] : vis[nkeys[k] >> 1]);
          sink[label].push_back(nfa_next.get(nk));
          return;
        }
        const int cell = cells[j];
        for (int v = 0; v < qv; ++v)
          for (int h = 0; h < qh; ++h) {
            if (pin[cell] >= 0 && h != pin[cell]) continue;
            vis[cell] = int8_t(v);
            if (qh > 1) hid[cell] = int8_t(h);
            bool ok = true;
            for (int w : cell_checks[cell])
              if (!window_ok(w)) {
                ok = false;
                break;
              }
            if (ok) rec(j + 1);
          }
        vis[cell] = -1;
        if (qh > 1) hid[cell] = -1;
      };
      rec(0);
      for (auto& [label, v] : sink) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
      }
      for (int key : prev_keys) {
        if (key & 1)
          hid[key >> 1] = qh > 1 ? -1 : 0;
        else
          vis[key >> 1] = -1;
      }
    };

    Interner dfa_next;
    col.next.resize(dfa_prev.size());
    for (size_t ds = 0; ds < dfa_prev.size(); ++ds) {
      std::map<uint32_t, std::vector<int>> merged;
      for (int s : key_set(dfa_prev.keys[ds])) {
        expand(s);
        for (const auto& [label, v] : nfa_cache[s]) {
          auto& m = merged[label];
          m.insert(m.end(), v.begin(), v.end());
        }
      }
      for (auto& [label, v] : merged) {
        std::sort(v.begin(), v.end());
        v.erase(std::unique(v.begin(), v.end()), v.end());
        col.next[ds].emplace_back(label, dfa_next.get(set_key(v)));
      }
      if (long(dfa_next.size()) > opt.max_states)
        throw Error(ErrorKind::Budget, "census state budget exceeded at column " + std::to_string(c));
    }
    prev_keys = nkeys;
    nfa_prev = std::move(nfa_next);
    dfa_prev = std::move(dfa_next);
    dfa_sizes.push_back(dfa_prev.size());
  }

  cs.cnt_.resize(ncol + 1);
  cs.cnt_[ncol].assign(dfa_sizes[ncol], BigInt(1));
  for (int c = ncol - 1; c >= 0; --c) {
    auto& cur = cs.cnt_[c];
    cur.assign(dfa_sizes[c], BigInt(0));
    const auto& nx = cs.cols_[c].next;
    const auto& after = cs.cnt_[c + 1];
    const long ns = long(cur.size());
#pragma omp parallel for schedule(dynamic, 64) if (opt.parallel)
    for (long s = 0; s < ns; ++s) {
      BigInt acc = 0;
      for (const auto& [label, t] : nx[s]) acc += after[t];
      cur[s] = std::move(acc);
    }
  }
  for (auto s : dfa_sizes) cs.state_total_ += s;
  cs.count_ = cs.cnt_[0][0];
  return out;
}

std::vector<uint32_t> Census::labels_of(const Pattern& b) const {
  if (!(b.domain() == domain_)) throw Error(ErrorKind::Precondition, "block domain differs from census domain");
  std::vector<uint32_t> out;
  for (const auto& col : cols_) {
    uint32_t l = 0;
    for (size_t k = 0; k < col.dom_pos.size(); ++k) {
      int v = b.symbols()[col.dom_pos[k]];
      if (v >= q_) return {};
      l = l * q_ + uint32_t(v);
    }
    out.push_back(l);
  }
  return out;
}

bool Census::contains(const Pattern& b) const {
  if (!(b.domain() == domain_)) return false;
  if (method_ != "strip") return std::binary_search(list_.begin(), list_.end(), b.symbols());
  auto labels = labels_of(b);
  if (labels.size() != cols_.size()) return false;
  int s = 0;
  for (size_t c = 0; c < cols_.size(); ++c) {
    const auto& tr = cols_[c].next[s];
    auto it = std::lower_bound(tr.begin(), tr.end(), std::make_pair(labels[c], -1));
    if (it == tr.end() || it->first != labels[c]) return false;
    s = it->second;
  }
  return true;
}

BigInt Census::rank(const Pattern& b) const {
  if (method_ != "strip") {
    if (!(b.domain() == domain_)) throw Error(ErrorKind::Precondition, "block domain differs from census domain");
    auto it = std::lower_bound(list_.begin(), list_.end(), b.symbols());
    if (it == list_.end() || *it != b.symbols()) throw Error(ErrorKind::OutOfRange, "block not in census");
    return BigInt(it - list_.begin());
  }
  auto labels = labels_of(b);
  if (labels.size() != cols_.size()) throw Error(ErrorKind::OutOfRange, "block not in census");
  BigInt r = 0;
  int s = 0;
  for (size_t c = 0; c < cols_.size(); ++c) {
    bool found = false;
    for (const auto& [label, t] : cols_[c].next[s]) {
      if (label < labels[c]) {
        r += cnt_[c + 1][t];
      } else {
        if (label == labels[c]) {
          s = t;
          found = true;
        }
        break;
      }
    }
    if (!found) throw Error(ErrorKind::OutOfRange, "block not in census");
  }
  return r;
}

Pattern Census::unrank(const BigInt& i) const {
  if (i < 0 || i >= count_) throw Error(ErrorKind::OutOfRange, "census index out of range");
  if (method_ != "strip") return Pattern(domain_, list_[size_t(i)]);
  std::vector<uint8_t> sym(domain_.size(), 0);
  BigInt rest = i;
  int s = 0;
  for (size_t c = 0; c < cols_.size(); ++c) {
    const auto& col = cols_[c];
    bool moved = false;
    for (const auto& [label, t] : col.next[s]) {
      const BigInt& k = cnt_[c + 1][t];
      if (rest < k) {
        uint32_t l = label;
        for (size_t j = col.dom_pos.size(); j-- > 0;) {
          sym[col.dom_pos[j]] = uint8_t(l % q_);
          l /= q_;
        }
        s = t;
        moved = true;
        break;
      }
      rest -= k;
    }
    if (!moved) throw Error(ErrorKind::Precondition, "census tables inconsistent");
  }
  return Pattern(domain_, std::move(sym));
}

BigInt count_blocks(const Oracle& o, const GSet& domain, const CensusOptions& opt) {
  return Census::build(o, domain, opt)->count();
}

double entropy_estimate(const Oracle& o, int n, const CensusOptions& opt) {
  GSet f = folner_box(o.ctx(), n);
  BigInt c = count_blocks(o, f, opt);
  if (c == 0) throw Error(ErrorKind::Infeasible, "no admissible block on the box");
  return log_big(c) / double(f.size());
}

double entropy_increment(const Oracle& o, int n, const CensusOptions& opt) {
  if (n < 1) throw Error(ErrorKind::Precondition, "increment needs n >= 1");
  GSet f1 = folner_box(o.ctx(), n), f0 = folner_box(o.ctx(), n - 1);
  BigInt c1 = count_blocks(o, f1, opt), c0 = count_blocks(o, f0, opt);
  if (c0 == 0 || c1 == 0) throw Error(ErrorKind::Infeasible, "no admissible block on the box");
  return (log_big(c1) - log_big(c0)) / double(f1.size() - f0.size());
}

}  // namespace symdyn
