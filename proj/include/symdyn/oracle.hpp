#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "symdyn/group.hpp"
#include "symdyn/pattern.hpp"

namespace symdyn {

enum Layer : int { kVisible = 0, kHidden = 1 };

struct Tap {
  Element offset;
  int layer = kVisible;
};

// A window constraint anchored at a base g: tap i reads layer `layer` at offset·g.
class Rule {
 public:
  explicit Rule(std::vector<Tap> taps) : taps_(std::move(taps)) {}
  virtual ~Rule() = default;
  const std::vector<Tap>& taps() const { return taps_; }
  // vals[i] is the tap value or -1 when unknown; false only when every completion fails
  virtual bool check(const int* vals) const = 0;
  virtual std::string describe() const = 0;

 private:
  std::vector<Tap> taps_;
};

class TableRule : public Rule {
 public:
  // radix[i] = alphabet size of tap i; allowed indexed in mixed radix, tap 0 most significant
  TableRule(std::vector<Tap> taps, std::vector<int> radix, std::vector<char> allowed, std::string label);
  bool check(const int* vals) const override;
  std::string describe() const override { return label_; }

 private:
  std::vector<int> radix_;
  std::vector<char> allowed_;
  std::string label_;
};

class ForbiddenWordRule : public Rule {
 public:
  ForbiddenWordRule(std::vector<Tap> taps, std::vector<int> word);
  bool check(const int* vals) const override;
  std::string describe() const override;

 private:
  std::vector<int> word_;
};

// tap 0 is the center; (II) center=1 forbids other 1s, (I) some tap must be 1
class KShiftRule : public Rule {
 public:
  KShiftRule(const GSet& kinvk, int layer);
  bool check(const int* vals) const override;
  std::string describe() const override { return "kshift"; }
};

// hidden bit at e set => visible block rho on R
class CouplingRule : public Rule {
 public:
  CouplingRule(const Pattern& rho);
  bool check(const int* vals) const override;
  std::string describe() const override { return "grid-coupling"; }

 private:
  std::vector<int> rho_;
};

class SymbolSetRule : public Rule {
 public:
  SymbolSetRule(const Element& e, std::vector<int> allowed, int q);
  bool check(const int* vals) const override;
  std::string describe() const override { return "symbol-set"; }

 private:
  std::vector<char> ok_;
};

class Oracle;
using Sampler = std::function<Pattern(const Oracle&, const GSet& region, std::mt19937_64& rng)>;

class Oracle {
 public:
  Oracle(std::string name, Ctx ctx, int q_vis, int q_hid = 1);

  const std::string& name() const { return name_; }
  const Ctx& ctx() const { return ctx_; }
  int q_vis() const { return q_vis_; }
  int q_hid() const { return q_hid_; }
  bool has_hidden() const { return q_hid_ > 1; }
  const std::vector<std::shared_ptr<const Rule>>& rules() const { return rules_; }
  void add_rule(std::shared_ptr<const Rule> r);
  GSet locality() const;

  // optional custom sampler of admissible visible patterns on a region
  Sampler sampler;

 private:
  std::string name_;
  Ctx ctx_;
  int q_vis_, q_hid_;
  std::vector<std::shared_ptr<const Rule>> rules_;
};

using OraclePtr = std::shared_ptr<const Oracle>;

OraclePtr full_shift(const Ctx& ctx, int q);
// forbids 11 along the first free coordinate
OraclePtr golden_mean(const Ctx& ctx);
OraclePtr forbidden_sft(const Ctx& ctx, int q, const std::vector<Pattern>& forbidden, std::string name = "sft");
// base oracle plus a restriction of the visible alphabet
OraclePtr restrict_symbols(const Oracle& base, const std::vector<int>& allowed, std::string name);

bool locally_admissible(const Oracle& o, const Pattern& p);

}  // namespace symdyn
