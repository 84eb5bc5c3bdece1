#include "symdyn/oracle.hpp"

#include <algorithm>

namespace symdyn {

TableRule::TableRule(std::vector<Tap> taps, std::vector<int> radix, std::vector<char> allowed, std::string label)
    : Rule(std::move(taps)), radix_(std::move(radix)), allowed_(std::move(allowed)), label_(std::move(label)) {
  size_t n = 1;
  for (int r : radix_) n *= size_t(r);
  if (radix_.size() != this->taps().size() || allowed_.size() != n)
    throw Error(ErrorKind::Precondition, "table rule size mismatch");
}

bool TableRule::check(const int* vals) const {
  const size_t k = radix_.size();
  std::vector<int> unk;
  size_t base = 0;
  for (size_t i = 0; i < k; ++i) {
    base = base * radix_[i] + (vals[i] < 0 ? 0 : size_t(vals[i]));
    if (vals[i] < 0) unk.push_back(int(i));
  }
  if (unk.empty()) return allowed_[base];
  size_t combos = 1;
  for (int i : unk) {
    combos *= size_t(radix_[i]);
    if (combos > 256) return true;
  }
  std::vector<size_t> stride(k, 1);
  for (size_t i = k - 1; i-- > 0;) stride[i] = stride[i + 1] * radix_[i + 1];
  for (size_t c = 0; c < combos; ++c) {
    size_t idx = base, rest = c;
    for (int i : unk) {
      idx += (rest % radix_[i]) * stride[i];
      rest /= radix_[i];
    }
    if (allowed_[idx]) return true;
  }
  return false;
}

ForbiddenWordRule::ForbiddenWordRule(std::vector<Tap> taps, std::vector<int> word)
    : Rule(std::move(taps)), word_(std::move(word)) {
  if (word_.size() != this->taps().size()) throw Error(ErrorKind::Precondition, "forbidden word size mismatch");
}

bool ForbiddenWordRule::check(const int* vals) const {
  for (size_t i = 0; i < word_.size(); ++i)
    if (vals[i] < 0 || vals[i] != word_[i]) return true;
  return false;
}

std::string ForbiddenWordRule::describe() const {
  std::string s = "forbid ";
  for (int w : word_) s += std::to_string(w);
  return s;
}

namespace {
std::vector<Tap> kshift_taps(const GSet& d, int layer) {
  const Element e = d.ctx()->identity();
  if (!d.contains(e)) throw Error(ErrorKind::Precondition, "K^-1K must contain e");
  std::vector<Tap> t{{e, layer}};
  for (const auto& x : d)
    if (!(x == e)) t.push_back({x, layer});
  return t;
}

std::vector<Tap> coupling_taps(const Pattern& rho) {
  std::vector<Tap> t{{rho.ctx()->identity(), kHidden}};
  for (const auto& r : rho.domain()) t.push_back({r, kVisible});
  return t;
}
}  // namespace

KShiftRule::KShiftRule(const GSet& kinvk, int layer) : Rule(kshift_taps(kinvk, layer)) {}

bool KShiftRule::check(const int* vals) const {
  const size_t n = taps().size();
  bool any_one = false, all_known = true;
  for (size_t i = 0; i < n; ++i) {
    if (vals[i] == 1) {
      if (i > 0 && vals[0] == 1) return false;
      any_one = true;
    } else if (vals[i] < 0) {
      all_known = false;
    }
  }
  return any_one || !all_known;
}

CouplingRule::CouplingRule(const Pattern& rho) : Rule(coupling_taps(rho)) {
  rho_.assign(rho.symbols().begin(), rho.symbols().end());
}

bool CouplingRule::check(const int* vals) const {
  if (vals[0] != 1) return true;
  for (size_t i = 0; i < rho_.size(); ++i)
    if (vals[i + 1] >= 0 && vals[i + 1] != rho_[i]) return false;
  return true;
}

SymbolSetRule::SymbolSetRule(const Element& e, std::vector<int> allowed, int q)
    : Rule({Tap{e, kVisible}}), ok_(size_t(q), 0) {
  for (int a : allowed) ok_.at(a) = 1;
}

bool SymbolSetRule::check(const int* vals) const { return vals[0] < 0 || ok_[vals[0]]; }

Oracle::Oracle(std::string name, Ctx ctx, int q_vis, int q_hid)
    : name_(std::move(name)), ctx_(std::move(ctx)), q_vis_(q_vis), q_hid_(q_hid) {
  if (q_vis < 1 || q_hid < 1 || q_vis * q_hid > 255) throw Error(ErrorKind::Config, "bad alphabet size");
}

void Oracle::add_rule(std::shared_ptr<const Rule> r) {
  for (const auto& t : r->taps())
    if (!ctx_->valid(t.offset) || t.layer < 0 || t.layer > 1 || (t.layer == kHidden && q_hid_ < 2))
      throw Error(ErrorKind::Precondition, "rule tap does not fit the oracle");
  rules_.push_back(std::move(r));
}

GSet Oracle::locality() const {
  std::vector<Element> d{ctx_->identity()};
  for (const auto& r : rules_)
    for (const auto& t : r->taps()) d.push_back(t.offset);
  return GSet(ctx_, std::move(d));
}

OraclePtr full_shift(const Ctx& ctx, int q) { return std::make_shared<Oracle>("full-shift-" + std::to_string(q), ctx, q); }

OraclePtr golden_mean(const Ctx& ctx) {
  if (ctx->free_rank() < 1) throw Error(ErrorKind::Config, "golden mean needs a free coordinate");
  auto o = std::make_shared<Oracle>("golden-mean", ctx, 2);
  Element e = ctx->identity(), f = e;
  f.x[0] = 1;
  o->add_rule(std::make_shared<ForbiddenWordRule>(std::vector<Tap>{{e, kVisible}, {f, kVisible}}, std::vector<int>{1, 1}));
  return o;
}

OraclePtr forbidden_sft(const Ctx& ctx, int q, const std::vector<Pattern>& forbidden, std::string name) {
  auto o = std::make_shared<Oracle>(std::move(name), ctx, q);
  for (const auto& p : forbidden) {
    if (p.empty()) throw Error(ErrorKind::Config, "empty forbidden pattern");
    std::vector<Tap> taps;
    std::vector<int> w;
    for (size_t i = 0; i < p.size(); ++i) {
      if (p.symbols()[i] >= q) throw Error(ErrorKind::Config, "forbidden pattern uses a symbol outside the alphabet");
      taps.push_back({p.domain()[i], kVisible});
      w.push_back(p.symbols()[i]);
    }
    o->add_rule(std::make_shared<ForbiddenWordRule>(std::move(taps), std::move(w)));
  }
  return o;
}

OraclePtr restrict_symbols(const Oracle& base, const std::vector<int>& allowed, std::string name) {
  auto o = std::make_shared<Oracle>(std::move(name), base.ctx(), base.q_vis(), base.q_hid());
  for (const auto& r : base.rules()) o->add_rule(r);
  o->add_rule(std::make_shared<SymbolSetRule>(base.ctx()->identity(), allowed, base.q_vis()));
  return o;
}

}  // namespace symdyn
