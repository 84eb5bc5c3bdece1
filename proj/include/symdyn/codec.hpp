#pragma once

#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "symdyn/census.hpp"
#include "symdyn/marker.hpp"
#include "symdyn/quasitiling.hpp"

namespace symdyn {

struct CodecParams {
  double delta_bits = 0;  // half the entropy gap, base 2
  Rational eps;           // 1/n
  long n = 0;
  double theta_log2 = 0;  // log2 of |Δ|²|Λ|^{5|M̄|}
  int r_eps = 0;
  bool desk_feasible = false;
  json to_json() const;
};

// entropies in nats; ε is the largest 1/n with 5|M̄|ε < 1 and Θ^ε < 2^δ
CodecParams choose_parameters(double h_src, double h_tgt_bar, int src_alphabet, int tgt_alphabet, long mbar_size,
                              long max_n = 100'000'000);

struct CodecConfig {
  GridSpec spec;
  OraclePtr source;
  MarkerKit kit;
  std::vector<GSet> shapes;  // strictly nested Følner boxes, smallest first
  std::vector<int> shape_radii;
  Rational eps{1, 40};
  double delta_bits = 0;
  int frame = 16;       // tiles stay this far inside the window
  int census_halo = 2;  // halo of the target censuses
  int window = 8000;    // length used by roundtrip_check
  json source_json;

  GSet mbar() const { return kit.margin_bar; }
  GSet K() const;       // M̄³Z₀
  GSet hole() const;    // M̄²Z₀
  // throws Config on the first failed invariant; the ε inequalities are only reported
  void validate() const;
  json to_json() const;
  static CodecConfig from_json(const json& j);
};

// named fixtures: "z-full3" (2-shift source into the 3-symbol grid fixture on Z)
CodecConfig codec_fixture(const std::string& name);
OraclePtr source_from_json(const Ctx& ctx, const json& j);

struct GapReport {
  BigInt source_count, target_count;
  bool holds = false;  // |B_Y'(Ŝ)| < |B_X̄(S̃₀)|
  json chain;          // en1..en4 sides in log2, when the original shape S is given
  json to_json() const;
};

// grid used to pin the hidden layer over S̃₀ (lexicographic maximal W-separated set)
GSet codec_grid(const CodecConfig& cfg, const GSet& s0);
// target census over S̃₀ with the hidden layer pinned to codec_grid
CensusPtr target_census(const CodecConfig& cfg, const GSet& s0, const GSet& grid);
GapReport verify_gap(const CodecConfig& cfg, const GSet& s_hat, const GSet& s0, const GSet* s = nullptr);

// core(S̃, M̄) \ M̄²Z₀
GSet s_zero(const CodecConfig& cfg, const GSet& s_tilde);

struct CodePair {
  GSet s_hat, s_tilde, s0, grid;
  CensusPtr source, target;
  GapReport gap;

  Pattern theta(const Pattern& src) const;
  // nullopt when the block is not a θ image
  std::optional<Pattern> theta_inv(const Pattern& block) const;
};
using CodePairPtr = std::shared_ptr<const CodePair>;

class CodeBook {
 public:
  // builds on first use; never throws on a gap failure (check pair->gap.holds)
  CodePairPtr get(const CodecConfig& cfg, const GSet& s_hat, const GSet& s_tilde);
  size_t size() const { return pairs_.size(); }

 private:
  std::mutex mu_;
  std::map<std::string, CodePairPtr> pairs_;
};

// throws Infeasible at the first pair whose gap fails
std::shared_ptr<CodeBook> build_codebook(const CodecConfig& cfg, const std::vector<std::pair<GSet, GSet>>& pairs);

enum class TileStatus { Encoded, NoRoom, Gap, Corrupt };
const char* tile_status_name(TileStatus s);

struct TilePlan {
  Element center;
  int shape = 0;
  GSet tilde, hat, t0;
  TileStatus status = TileStatus::Encoded;
  CodePairPtr code;
};

struct Layout {
  GSet window, f_enc, core;
  Quasitiling T, Tt, Th;
  std::vector<TilePlan> tiles;
};

struct WindowGeometry {
  GSet window;
  GSet f_enc;  // core(window, box(frame))
  GSet core;   // core(f_enc, S_max), the region the completed tiling partitions
};
WindowGeometry window_geometry(const CodecConfig& cfg, const GSet& window);

// tiles of 𝒯 fully inside f_enc, ordered by center
Quasitiling window_tiling(const CodecConfig& cfg, const WindowGeometry& geo);
// stages after 𝒯: shrink, recenter with the hole K, complete; then per-tile codebook status
Layout plan_layout(const CodecConfig& cfg, const WindowGeometry& geo, const Quasitiling& T, CodeBook& book);

struct Encoded {
  Pattern x;
  GSet covered;  // union of encoded T̂
  double coverage = 0;  // |covered ∩ core| / |core|
  json manifest;
};
Encoded encode(const Pattern& y, const CodecConfig& cfg, CodeBook* book = nullptr);

struct Decoded {
  Pattern y;
  json report;
};
// reads only x and the configuration
Decoded decode(const Pattern& x, const CodecConfig& cfg, CodeBook* book = nullptr);

struct RoundtripStats {
  int trials = 0;
  int failures = 0;
  double mean_coverage = 0;
  double min_coverage = 0;
  std::vector<std::string> errors;
  json to_json() const;
};
RoundtripStats roundtrip_check(const CodecConfig& cfg, int trials, uint64_t seed, CodeBook* book = nullptr);

}  // namespace symdyn
