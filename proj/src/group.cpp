#include "symdyn/group.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_set>

namespace symdyn {

namespace {
constexpr int kMaxTorsion = 1024;

int pmod(int64_t a, int m) {
  int64_t r = a % m;
  return int(r < 0 ? r + m : r);
}
}  // namespace

GroupContext GroupContext::make(int free_rank, std::vector<int> moduli) {
  if (free_rank < 0 || free_rank > kMaxRank)
    throw Error(ErrorKind::Config, "free_rank must be in [0," + std::to_string(kMaxRank) + "]");
  GroupContext g;
  g.d_ = free_rank;
  int64_t m = 1;
  for (int q : moduli) {
    if (q < 1) throw Error(ErrorKind::Config, "moduli must be >= 1");
    m *= q;
    if (m > kMaxTorsion) throw Error(ErrorKind::Config, "torsion group too large");
  }
  g.moduli_ = std::move(moduli);
  g.m_ = int(m);
  g.table_.resize(size_t(g.m_) * g.m_);
  for (int a = 0; a < g.m_; ++a) {
    const auto ra = g.torsion_coords(a);
    for (int b = 0; b < g.m_; ++b) {
      auto rc = g.torsion_coords(b);
      for (size_t i = 0; i < rc.size(); ++i) rc[i] = (ra[i] + rc[i]) % g.moduli_[i];
      g.table_[size_t(a) * g.m_ + b] = g.torsion_index(rc);
    }
  }
  g.id_ = 0;
  g.finish_table();
  return g;
}

GroupContext GroupContext::make_cayley(int free_rank, std::vector<std::vector<int>> table) {
  if (free_rank < 0 || free_rank > kMaxRank)
    throw Error(ErrorKind::Config, "free_rank out of range");
  const int m = int(table.size());
  if (m < 1 || m > 256) throw Error(ErrorKind::Config, "cayley table must have 1..256 rows");
  GroupContext g;
  g.d_ = free_rank;
  g.m_ = m;
  g.cayley_ = true;
  g.table_.resize(size_t(m) * m);
  for (int a = 0; a < m; ++a) {
    if (int(table[a].size()) != m) throw Error(ErrorKind::Config, "cayley table is not square");
    for (int b = 0; b < m; ++b) {
      int v = table[a][b];
      if (v < 0 || v >= m) throw Error(ErrorKind::Config, "cayley entry out of range");
      g.table_[size_t(a) * m + b] = v;
    }
  }
  int id = -1;
  for (int e = 0; e < m && id < 0; ++e) {
    bool ok = true;
    for (int a = 0; a < m && ok; ++a) ok = g.tmul(e, a) == a && g.tmul(a, e) == a;
    if (ok) id = e;
  }
  if (id < 0) throw Error(ErrorKind::Config, "cayley table has no identity");
  g.id_ = id;
  for (int a = 0; a < m; ++a)
    for (int b = 0; b < m; ++b)
      for (int c = 0; c < m; ++c)
        if (g.tmul(g.tmul(a, b), c) != g.tmul(a, g.tmul(b, c)))
          throw Error(ErrorKind::Config, "cayley table is not associative");
  g.finish_table();
  return g;
}

void GroupContext::finish_table() {
  inv_.assign(m_, -1);
  abelian_ = true;
  for (int a = 0; a < m_; ++a) {
    for (int b = 0; b < m_; ++b) {
      if (tmul(a, b) == id_ && tmul(b, a) == id_) inv_[a] = b;
      if (tmul(a, b) != tmul(b, a)) abelian_ = false;
    }
    if (inv_[a] < 0) throw Error(ErrorKind::Config, "torsion element without inverse");
  }
}

std::vector<int> GroupContext::torsion_coords(int t) const {
  if (cayley_) return {t};
  std::vector<int> r(moduli_.size());
  for (size_t i = moduli_.size(); i-- > 0;) {
    r[i] = t % moduli_[i];
    t /= moduli_[i];
  }
  return r;
}

int GroupContext::torsion_index(const std::vector<int>& coords) const {
  if (cayley_) return coords.at(0);
  int t = 0;
  for (size_t i = 0; i < moduli_.size(); ++i) t = t * moduli_[i] + pmod(coords.at(i), moduli_[i]);
  return t;
}

Element GroupContext::identity() const {
  Element e;
  e.t = id_;
  return e;
}

Element GroupContext::inv(const Element& a) const {
  Element r;
  for (int i = 0; i < d_; ++i) r.x[i] = -a.x[i];
  r.t = inv_[a.t];
  return r;
}

bool GroupContext::valid(const Element& a) const {
  for (int i = d_; i < kMaxRank; ++i)
    if (a.x[i] != 0) return false;
  return a.t >= 0 && a.t < m_;
}

Element GroupContext::from_coords(const std::vector<int64_t>& c) const {
  size_t tors = cayley_ ? 1 : moduli_.size();
  if (c.size() != size_t(d_) + tors)
    throw Error(ErrorKind::Config, "element has " + std::to_string(c.size()) + " coordinates, expected " +
                                       std::to_string(d_ + tors));
  Element e;
  for (int i = 0; i < d_; ++i) e.x[i] = int32_t(c[i]);
  if (cayley_) {
    if (c[d_] < 0 || c[d_] >= m_) throw Error(ErrorKind::Config, "torsion index out of range");
    e.t = int32_t(c[d_]);
  } else {
    std::vector<int> r;
    for (size_t i = 0; i < tors; ++i) r.push_back(pmod(c[d_ + i], moduli_[i]));
    e.t = torsion_index(r);
  }
  return e;
}

std::vector<int64_t> GroupContext::coords(const Element& e) const {
  std::vector<int64_t> c(e.x.begin(), e.x.begin() + d_);
  if (cayley_) {
    c.push_back(e.t);
  } else {
    for (int r : torsion_coords(e.t)) c.push_back(r);
  }
  return c;
}

Element GroupContext::make_elem(std::initializer_list<int> free, int t) const {
  Element e;
  int i = 0;
  for (int v : free) e.x[i++] = v;
  e.t = t;
  return e;
}

json GroupContext::to_json() const {
  json j;
  j["free_rank"] = d_;
  if (cayley_) {
    json rows = json::array();
    for (int a = 0; a < m_; ++a) {
      json row = json::array();
      for (int b = 0; b < m_; ++b) row.push_back(tmul(a, b));
      rows.push_back(row);
    }
    j["cayley_table"] = rows;
  } else {
    j["moduli"] = moduli_;
  }
  return j;
}

GroupContext GroupContext::from_json(const json& j) {
  if (!j.is_object() || !j.contains("free_rank")) throw Error(ErrorKind::Config, "group: missing free_rank");
  int d = j.at("free_rank").get<int>();
  if (j.contains("cayley_table")) {
    if (j.contains("moduli")) throw Error(ErrorKind::Config, "group: give moduli or cayley_table, not both");
    return make_cayley(d, j.at("cayley_table").get<std::vector<std::vector<int>>>());
  }
  std::vector<int> mods;
  if (j.contains("moduli")) mods = j.at("moduli").get<std::vector<int>>();
  return make(d, mods);
}

Ctx make_ctx(int free_rank, std::vector<int> moduli) {
  return std::make_shared<const GroupContext>(GroupContext::make(free_rank, std::move(moduli)));
}

Ctx make_ctx(const GroupContext& g) { return std::make_shared<const GroupContext>(g); }

GSet::GSet(Ctx ctx, std::vector<Element> elems) : ctx_(std::move(ctx)), v_(std::move(elems)) {
  for (const auto& e : v_)
    if (!ctx_->valid(e)) throw Error(ErrorKind::Precondition, "element outside group");
  std::sort(v_.begin(), v_.end());
  v_.erase(std::unique(v_.begin(), v_.end()), v_.end());
}

GSet GSet::from_sorted(Ctx ctx, std::vector<Element> elems) {
  GSet s(std::move(ctx));
  s.v_ = std::move(elems);
  return s;
}

GSet GSet::singleton(Ctx ctx, const Element& e) {
  GSet s(std::move(ctx));
  s.v_.push_back(e);
  return s;
}

GSet GSet::identity(Ctx ctx) {
  Element e = ctx->identity();
  return singleton(std::move(ctx), e);
}

bool GSet::contains(const Element& e) const { return std::binary_search(v_.begin(), v_.end(), e); }

long GSet::index_of(const Element& e) const {
  auto it = std::lower_bound(v_.begin(), v_.end(), e);
  if (it == v_.end() || !(*it == e)) return -1;
  return long(it - v_.begin());
}

json GSet::to_json() const {
  json a = json::array();
  for (const auto& e : v_) a.push_back(ctx_->coords(e));
  return a;
}

GSet GSet::from_json(Ctx ctx, const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::Config, "set must be an array of coordinate arrays");
  std::vector<Element> v;
  for (const auto& c : j) v.push_back(ctx->from_coords(c.get<std::vector<int64_t>>()));
  return GSet(std::move(ctx), std::move(v));
}

void check_same(const GSet& a, const GSet& b) {
  if (a.ctx() == b.ctx()) return;
  if (!a.ctx() || !b.ctx() || !(*a.ctx() == *b.ctx()))
    throw Error(ErrorKind::ContextMismatch, "sets live in different group contexts");
}

namespace {
Ctx pick(const GSet& a, const GSet& b) { return a.ctx() ? a.ctx() : b.ctx(); }
}  // namespace

namespace {

// sort + unique; long lists with a compact bounding box go through a bitmap
void sort_unique(const GroupContext& g, std::vector<Element>& v) {
  const int d = g.free_rank(), m = g.torsion_order();
  if (v.size() > 2048) {
    std::array<int64_t, kMaxRank> lo{}, hi{}, ext{};
    for (int i = 0; i < d; ++i) lo[i] = hi[i] = v[0].x[i];
    for (const auto& e : v)
      for (int i = 0; i < d; ++i) {
        lo[i] = std::min<int64_t>(lo[i], e.x[i]);
        hi[i] = std::max<int64_t>(hi[i], e.x[i]);
      }
    int64_t vol = m;
    bool ok = true;
    for (int i = 0; i < d && ok; ++i) {
      ext[i] = hi[i] - lo[i] + 1;
      vol *= ext[i];
      ok = vol <= 8 * int64_t(v.size()) + 4096;
    }
    if (ok) {
      std::vector<char> mark(size_t(vol), 0);
      for (const auto& e : v) {
        int64_t off = 0;
        for (int i = 0; i < d; ++i) off = off * ext[i] + (e.x[i] - lo[i]);
        mark[size_t(off * m + e.t)] = 1;
      }
      v.clear();
      for (int64_t off = 0; off < vol; ++off) {
        if (!mark[size_t(off)]) continue;
        Element e;
        e.t = int32_t(off % m);
        int64_t r = off / m;
        for (int i = d - 1; i >= 0; --i) {
          e.x[i] = int32_t(lo[i] + r % ext[i]);
          r /= ext[i];
        }
        v.push_back(e);
      }
      return;
    }
  }
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

}  // namespace

GSet set_product(const GSet& a, const GSet& b) {
  check_same(a, b);
  const auto& g = *pick(a, b);
  std::vector<Element> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a)
    for (const auto& y : b) out.push_back(g.mul(x, y));
  sort_unique(g, out);
  return GSet::from_sorted(pick(a, b), std::move(out));
}

GSet inverse_set(const GSet& a) {
  std::vector<Element> out;
  out.reserve(a.size());
  for (const auto& x : a) out.push_back(a.ctx()->inv(x));
  std::sort(out.begin(), out.end());
  return GSet::from_sorted(a.ctx(), std::move(out));
}

GSet set_union(const GSet& a, const GSet& b) {
  check_same(a, b);
  std::vector<Element> out;
  std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return GSet::from_sorted(pick(a, b), std::move(out));
}

GSet set_intersection(const GSet& a, const GSet& b) {
  check_same(a, b);
  std::vector<Element> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return GSet::from_sorted(pick(a, b), std::move(out));
}

GSet set_difference(const GSet& a, const GSet& b) {
  check_same(a, b);
  std::vector<Element> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return GSet::from_sorted(pick(a, b), std::move(out));
}

GSet sym_difference(const GSet& a, const GSet& b) {
  check_same(a, b);
  std::vector<Element> out;
  std::set_symmetric_difference(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
  return GSet::from_sorted(pick(a, b), std::move(out));
}

bool is_subset(const GSet& a, const GSet& b) {
  check_same(a, b);
  return std::includes(b.begin(), b.end(), a.begin(), a.end());
}

bool intersects(const GSet& a, const GSet& b) {
  check_same(a, b);
  auto i = a.begin();
  auto j = b.begin();
  while (i != a.end() && j != b.end()) {
    if (*i < *j) {
      ++i;
    } else if (*j < *i) {
      ++j;
    } else {
      return true;
    }
  }
  return false;
}

GSet translate(const GSet& a, const Element& g) {
  std::vector<Element> out;
  out.reserve(a.size());
  for (const auto& x : a) out.push_back(a.ctx()->mul(x, g));
  std::sort(out.begin(), out.end());
  return GSet::from_sorted(a.ctx(), std::move(out));
}

GSet left_translate(const Element& g, const GSet& a) {
  std::vector<Element> out;
  out.reserve(a.size());
  for (const auto& x : a) out.push_back(a.ctx()->mul(g, x));
  std::sort(out.begin(), out.end());
  return GSet::from_sorted(a.ctx(), std::move(out));
}

GSet filter(const GSet& a, const std::function<bool(const Element&)>& keep) {
  std::vector<Element> out;
  for (const auto& x : a)
    if (keep(x)) out.push_back(x);
  return GSet::from_sorted(a.ctx(), std::move(out));
}

DenseIndex::DenseIndex(const GSet& s) {
  if (!s.ctx()) return;
  d_ = s.ctx()->free_rank();
  m_ = s.ctx()->torsion_order();
  if (s.empty()) return;
  std::array<int64_t, kMaxRank> hi{};
  for (int i = 0; i < d_; ++i) lo_[i] = hi[i] = s[0].x[i];
  for (const auto& e : s)
    for (int i = 0; i < d_; ++i) {
      lo_[i] = std::min<int64_t>(lo_[i], e.x[i]);
      hi[i] = std::max<int64_t>(hi[i], e.x[i]);
    }
  int64_t vol = m_;
  for (int i = 0; i < d_ && vol <= (int64_t(1) << 40); ++i) {
    ext_[i] = hi[i] - lo_[i] + 1;
    vol *= ext_[i];
  }
  dense_ = vol <= 64 * int64_t(s.size()) + 4096;
  if (dense_) {
    table_.assign(size_t(vol), -1);
    for (size_t k = 0; k < s.size(); ++k) {
      int64_t off = 0;
      for (int i = 0; i < d_; ++i) off = off * ext_[i] + (s[k].x[i] - lo_[i]);
      table_[size_t(off * m_ + s[k].t)] = int32_t(k);
    }
  } else {
    for (size_t k = 0; k < s.size(); ++k) sparse_.emplace(s[k], long(k));
  }
}

long DenseIndex::sparse_index(const Element& e) const {
  auto it = sparse_.find(e);
  return it == sparse_.end() ? -1 : it->second;
}

GSet core(const GSet& f, const GSet& k) {
  check_same(f, k);
  if (f.empty()) return f;
  const auto& g = *f.ctx();
  const DenseIndex fs(f);
  std::vector<Element> out;
  for (const auto& x : f) {
    bool in = true;
    for (const auto& y : k)
      if (!fs.contains(g.mul(y, x))) {
        in = false;
        break;
      }
    if (in) out.push_back(x);
  }
  return GSet::from_sorted(f.ctx(), std::move(out));
}

Rational invariance_defect(const GSet& f, const GSet& k) {
  if (f.empty()) throw Error(ErrorKind::Precondition, "invariance defect of an empty set");
  GSet kf = set_product(k, f);
  return Rational(long(sym_difference(kf, f).size()), long(f.size()));
}

bool is_apart(const GSet& a, const GSet& b, const GSet& m) {
  return !intersects(set_product(m, a), set_product(m, b));
}

bool is_symmetric(const GSet& a) { return inverse_set(a) == a; }

bool is_separated(const GSet& v, const GSet& k) {
  check_same(v, k);
  return set_product(k, v).size() == k.size() * v.size();
}

AuxBound check_aux_bound(const GSet& k, const GSet& kp, const GSet& f, const GSet& v) {
  if (!k.contains(k.ctx()->identity())) throw Error(ErrorKind::Precondition, "e must belong to K");
  if (!is_subset(k, kp)) throw Error(ErrorKind::Precondition, "K must be contained in K'");
  if (!is_symmetric(kp)) throw Error(ErrorKind::NotSymmetric, "K' is not symmetric");
  if (!is_separated(v, kp)) throw Error(ErrorKind::NotSeparated, "V is not K'-separated");
  AuxBound r;
  Rational delta = invariance_defect(f, kp);
  r.lhs = Rational(long(set_intersection(set_product(k, v), f).size()), long(f.size()));
  long s = long(kp.size());
  r.rhs = Rational(s * s) * delta + Rational(long(k.size()), s);
  r.holds = r.lhs <= r.rhs;
  return r;
}

GSet interval_box(const Ctx& ctx, const std::vector<std::pair<int, int>>& ranges) {
  const int d = ctx->free_rank();
  if (int(ranges.size()) != d) throw Error(ErrorKind::Precondition, "interval_box needs one range per free coordinate");
  std::vector<Element> out;
  Element e = ctx->identity();
  std::function<void(int)> rec = [&](int i) {
    if (i == d) {
      out.push_back(e);
      return;
    }
    for (int v = ranges[i].first; v <= ranges[i].second; ++v) {
      e.x[i] = v;
      rec(i + 1);
    }
    e.x[i] = 0;
  };
  rec(0);
  std::sort(out.begin(), out.end());
  return GSet::from_sorted(ctx, std::move(out));
}

GSet free_box(const Ctx& ctx, int lo, int hi) {
  return interval_box(ctx, std::vector<std::pair<int, int>>(ctx->free_rank(), {lo, hi}));
}

GSet folner_box(const Ctx& ctx, int n) {
  if (n < 0) throw Error(ErrorKind::Precondition, "box index must be >= 0");
  GSet fb = free_box(ctx, -n, n);
  std::vector<Element> out;
  out.reserve(fb.size() * ctx->torsion_order());
  for (auto e : fb)
    for (int t = 0; t < ctx->torsion_order(); ++t) {
      e.t = t;
      out.push_back(e);
    }
  return GSet::from_sorted(ctx, std::move(out));
}

int free_norm(const Element& e, int d) {
  int n = 0;
  for (int i = 0; i < d; ++i) n = std::max(n, std::abs(e.x[i]));
  return n;
}

double to_double(const Rational& r) { return r.convert_to<double>(); }

double log_big(const BigInt& n) {
  if (n <= 0) throw Error(ErrorKind::Precondition, "log of a non-positive integer");
  unsigned bits = unsigned(boost::multiprecision::msb(n)) + 1;
  if (bits <= 60) return std::log(n.convert_to<double>());
  unsigned shift = bits - 60;
  BigInt top = n >> shift;
  return std::log(top.convert_to<double>()) + double(shift) * std::log(2.0);
}

}  // namespace symdyn
