#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>
#include <json.hpp>

namespace symdyn {

using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;
using json = nlohmann::json;

enum class ErrorKind {
  Config,
  Precondition,
  ContextMismatch,
  NotSymmetric,
  NotSeparated,
  Budget,
  Infeasible,
  OutOfRange,
  Corrupt,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind k, const std::string& what) : std::runtime_error(what), kind_(k) {}
  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

inline constexpr int kMaxRank = 3;

// free part in x[0..d), unused coordinates stay zero
struct Element {
  std::array<int32_t, kMaxRank> x{};
  int32_t t = 0;
  auto operator<=>(const Element&) const = default;
  bool operator==(const Element&) const = default;
};

struct ElementHash {
  size_t operator()(const Element& e) const {
    uint64_t h = 1469598103934665603ull;
    for (int32_t v : e.x) h = (h ^ uint32_t(v)) * 1099511628211ull;
    h = (h ^ uint32_t(e.t)) * 1099511628211ull;
    return size_t(h ^ (h >> 29));
  }
};

class GroupContext {
 public:
  static GroupContext make(int free_rank, std::vector<int> moduli = {});
  static GroupContext make_cayley(int free_rank, std::vector<std::vector<int>> table);

  int free_rank() const { return d_; }
  int torsion_order() const { return m_; }
  bool is_cayley() const { return cayley_; }
  bool is_abelian() const { return abelian_; }
  const std::vector<int>& moduli() const { return moduli_; }

  Element identity() const;
  Element mul(const Element& a, const Element& b) const {
    Element r;
    for (int i = 0; i < d_; ++i) r.x[i] = a.x[i] + b.x[i];
    r.t = tmul(a.t, b.t);
    return r;
  }
  Element inv(const Element& a) const;
  bool valid(const Element& a) const;

  int tmul(int a, int b) const { return table_[size_t(a) * m_ + b]; }
  int tinv(int a) const { return inv_[a]; }
  int tid() const { return id_; }

  // residues of a torsion index (moduli form), or {index} for Cayley tables
  std::vector<int> torsion_coords(int t) const;
  int torsion_index(const std::vector<int>& coords) const;

  Element from_coords(const std::vector<int64_t>& c) const;
  std::vector<int64_t> coords(const Element& e) const;
  Element make_elem(std::initializer_list<int> free, int t = 0) const;

  bool operator==(const GroupContext& o) const {
    return d_ == o.d_ && m_ == o.m_ && moduli_ == o.moduli_ && table_ == o.table_;
  }

  json to_json() const;
  static GroupContext from_json(const json& j);

 private:
  void finish_table();

  int d_ = 0;
  int m_ = 1;
  bool cayley_ = false;
  bool abelian_ = true;
  int id_ = 0;
  std::vector<int> moduli_;
  std::vector<int> table_;
  std::vector<int> inv_;
};

using Ctx = std::shared_ptr<const GroupContext>;

Ctx make_ctx(int free_rank, std::vector<int> moduli = {});
Ctx make_ctx(const GroupContext& g);

class GSet {
 public:
  GSet() = default;
  explicit GSet(Ctx ctx) : ctx_(std::move(ctx)) {}
  GSet(Ctx ctx, std::vector<Element> elems);
  static GSet from_sorted(Ctx ctx, std::vector<Element> elems);
  static GSet singleton(Ctx ctx, const Element& e);
  static GSet identity(Ctx ctx);

  const Ctx& ctx() const { return ctx_; }
  size_t size() const { return v_.size(); }
  bool empty() const { return v_.empty(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }
  const Element& operator[](size_t i) const { return v_[i]; }
  const std::vector<Element>& elems() const { return v_; }
  bool contains(const Element& e) const;
  // position in sorted order, or -1
  long index_of(const Element& e) const;

  bool operator==(const GSet& o) const { return v_ == o.v_; }

  json to_json() const;
  static GSet from_json(Ctx ctx, const json& j);

 private:
  Ctx ctx_;
  std::vector<Element> v_;
};

// sorted positions through a bounding-box table; sparse sets fall back to a hash map
class DenseIndex {
 public:
  explicit DenseIndex(const GSet& s);
  long index_of(const Element& e) const {
    if (!dense_) return sparse_index(e);
    int64_t off = 0;
    for (int i = 0; i < d_; ++i) {
      const int64_t r = int64_t(e.x[i]) - lo_[i];
      if (r < 0 || r >= ext_[i]) return -1;
      off = off * ext_[i] + r;
    }
    return table_[size_t(off * m_ + e.t)];
  }
  bool contains(const Element& e) const { return index_of(e) >= 0; }

 private:
  long sparse_index(const Element& e) const;

  int d_ = 0, m_ = 1;
  bool dense_ = false;
  std::array<int64_t, kMaxRank> lo_{}, ext_{};
  std::vector<int32_t> table_;
  std::unordered_map<Element, long, ElementHash> sparse_;
};

void check_same(const GSet& a, const GSet& b);

GSet set_product(const GSet& a, const GSet& b);
GSet inverse_set(const GSet& a);
GSet set_union(const GSet& a, const GSet& b);
GSet set_intersection(const GSet& a, const GSet& b);
GSet set_difference(const GSet& a, const GSet& b);
GSet sym_difference(const GSet& a, const GSet& b);
bool is_subset(const GSet& a, const GSet& b);
bool intersects(const GSet& a, const GSet& b);
// right translate A·g
GSet translate(const GSet& a, const Element& g);
GSet left_translate(const Element& g, const GSet& a);
GSet filter(const GSet& a, const std::function<bool(const Element&)>& keep);

GSet core(const GSet& f, const GSet& k);
Rational invariance_defect(const GSet& f, const GSet& k);
bool is_apart(const GSet& a, const GSet& b, const GSet& m);
bool is_symmetric(const GSet& a);
bool is_separated(const GSet& v, const GSet& k);

struct AuxBound {
  Rational lhs, rhs;
  bool holds = false;
};
AuxBound check_aux_bound(const GSet& k, const GSet& kp, const GSet& f, const GSet& v);

// [-n,n]^d × Γ
GSet folner_box(const Ctx& ctx, int n);
// [lo,hi]^d × {e}
GSet free_box(const Ctx& ctx, int lo, int hi);
// product of intervals on the free part, torsion fixed at identity
GSet interval_box(const Ctx& ctx, const std::vector<std::pair<int, int>>& ranges);
// l∞ norm of the free part
int free_norm(const Element& e, int d);

double to_double(const Rational& r);
// natural log of a positive big integer
double log_big(const BigInt& n);

}  // namespace symdyn
