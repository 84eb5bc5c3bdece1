#pragma once

#include <optional>
#include <string>
#include <vector>

#include "symdyn/kshift.hpp"
#include "symdyn/specification.hpp"

namespace symdyn {

// X with margin M, a proper subsystem X′ and a block ρ over R that X admits and X′ refutes
struct GridSpec {
  std::string name;
  OraclePtr X;
  GSet M;
  OraclePtr Xprime;
  Pattern rho;
  GSet W;
  int halo = 2;
  SearchOptions search;

  const GSet& R() const { return rho.domain(); }
  const Ctx& ctx() const { return W.ctx(); }
  GSet margin_bar() const;  // W³RM²
  // throws Config on the first failed invariant
  void validate() const;
  json to_json() const;  // sets and ρ only; oracles are named
};

// X̄: visible X layer plus a hidden Ω_W layer, each hidden 1 pinning ρ on Rv
OraclePtr make_xbar(const GridSpec& spec);

// named fixtures: "z-full3" (3-shift on Z, X′ = no symbol 2) and "zz4-full2" (2-shift on Z×Z4, X′ = all 0)
GridSpec grid_fixture(const std::string& name);

Pattern build_grid(const GridSpec& spec, const GSet& v);

struct XbarReport {
  double h_x = 0;    // entropy_estimate of X
  double ratio = 0;  // |M²R|/|W|
  double bound = 0;
  double target = 0;
  bool meets_target = false;
};
double binary_entropy(double p);
double xbar_bound(double h_x, double ratio, int alphabet);
XbarReport xbar_entropy_report(const GridSpec& spec, int n, double target = 0);

// α over A, exceptional set E, and the witness: V on W²RM²A plus an optional host realization
struct AlmostPattern {
  Pattern alpha;
  GSet E;
  std::optional<GSet> V;
  std::optional<Pattern> host;

  const GSet& domain() const { return alpha.domain(); }
  AlmostPattern translate(const Element& g) const;
  json to_json() const;
  static AlmostPattern from_json(const Ctx& ctx, const json& j);
};

// R²E ⊆ A, V W-separated and maximal on RM²A, α = ρ on RV ∩ A outside E; optionally X-admissibility of ⌈α⌉
std::vector<std::string> check_almost(const AlmostPattern& ap, const GridSpec& spec, bool admissibility = false);

// an X̄-admissible block as an almost pattern with E = ∅; throws Infeasible when X̄ refutes it
AlmostPattern xbar_witness(const GridSpec& spec, const Pattern& p);

struct Reinforced {
  Pattern pattern;  // over ⌈A⌉ = A ∪ R(V ∩ (RM²A \ RE))
  Pattern chi;      // 1_V on RM²A
};
Reinforced reinforce(const AlmostPattern& ap, const GridSpec& spec);

AlmostPattern glue_almost(const std::vector<AlmostPattern>& parts, const GridSpec& spec);

// centers of β occurrences whose domain misses E
std::vector<Element> beta_audit(const AlmostPattern& ap, const Pattern& beta);

// the fixed X̄ element: least X̄-admissible pattern on a box
struct Reference {
  Pattern vis;
  GSet V;
};
Reference reference_element(const GridSpec& spec, int radius);

struct Enhanced {
  Pattern under;  // over B²M²A
  GSet J;         // centers of β occurrences
  AlmostPattern ap;
};
Enhanced enhance(const GridSpec& spec, const Pattern& alpha, const Reference& xstar, const Pattern& beta);
// box radius a reference needs to enhance a pattern over A
int enhance_radius(const GridSpec& spec, const GSet& a, const GSet& b);

GSet stabilizer(const GSet& j);
Pattern build_resistant(const Pattern& x0, const GSet& h);
bool is_resistant(const Pattern& gamma, const GSet& h);

struct KopaczResult {
  GSet A;
  std::vector<int> S;
};
KopaczResult kopacz_extract(const std::vector<GSet>& family, int bound);
// same on bitmask sets; exact above the induction when length ≤ exact_limit
std::pair<uint64_t, std::vector<int>> kopacz_masks(const std::vector<uint64_t>& family, int exact_limit = 20);

struct MarkerOptions {
  int kappa_count = 2;
  std::optional<Pattern> beta;
  std::optional<Pattern> x0;  // window of a free element, used in the permutable case
  int scan_radius = 300;
  int conj_radius = 1;
};

struct MarkerKit {
  GSet B;
  Pattern beta;
  Pattern beta_under;
  GSet J_beta, H_beta;
  int case_tag = 1;
  // permutable case
  Pattern gamma, gamma_under;
  GSet J_gamma, H0;
  Element g1, g2;
  // appendage
  GSet L;
  std::vector<Pattern> kappa;
  Element g0;
  // assembled
  Pattern zeta;
  GSet Z, Z0, J0, J1, E, margin_bar;
  int xstar_radius = 0;
  std::vector<AlmostPattern> components;  // enhanced blocks placed in ζ
  std::vector<AlmostPattern> kappa_ap;    // κ̄_t at e

  int r() const { return int(kappa.size()); }
  Pattern zeta_t(int t) const;  // t in [0, r)
  AlmostPattern marker_ap(int t, const GridSpec& spec) const;
  json to_json() const;
  static MarkerKit from_json(const Ctx& ctx, const json& j);
};

MarkerKit assemble_marker(const GridSpec& spec, const MarkerOptions& opt = {});
// exact set-arithmetic check of every kit invariant; empty when all hold
std::vector<std::string> check_kit(const MarkerKit& kit, const GridSpec& spec);
bool verify_unambiguous(const MarkerKit& kit);

std::string marker_svg(const MarkerKit& kit, int t);

}  // namespace symdyn
