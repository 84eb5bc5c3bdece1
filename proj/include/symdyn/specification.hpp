#pragma once

#include <optional>
#include <vector>

#include "symdyn/search.hpp"

namespace symdyn {

struct SpecCheckOptions {
  long trials = 1000;
  uint64_t seed = 1;
  int halo = 3;
  // parts are sampled on A·box(sample_margin) and then restricted to A
  int sample_margin = 2;
  // certify each sampled part with exact_admissible before testing the union
  bool certify_parts = true;
  bool stop_at_first = true;
  bool parallel = false;
  // when > 0, each part ranges over all its admissible blocks (census up to this size) instead of one sample
  long enumerate_limit = 0;
  // when > 0, first sweep every margin-apart hyperplane split of boxes up to this side, enumerating blocks
  int sweep_side = 0;
  SearchOptions search;
};

struct SpecCheckResult {
  bool pass = true;
  long trials_run = 0;
  long refuted = 0;
  long unknown = 0;
  long skipped = 0;  // part sampling or certification failed
  long first_refuted_trial = -1;
  long sweep_domains = 0;
  bool refuted_in_sweep = false;  // first_refuted_trial then indexes the sweep
  std::optional<Pattern> alpha1, alpha2;
  std::optional<Element> refuting_cell;
};

SpecCheckResult check_specification(const Oracle& o, const GSet& margin, const GSet& window,
                                    const SpecCheckOptions& opt = {});

// reference loop, one trial at a time
SpecCheckResult check_specification_serial(const Oracle& o, const GSet& margin, const GSet& window,
                                           const SpecCheckOptions& opt = {});

struct TrialOutcome {
  enum Kind { Pass, Refuted, Unknown, Skipped } kind = Skipped;
  std::optional<Pattern> alpha1, alpha2;
  std::optional<Element> refuting_cell;
};
// one deterministic trial, seeded from (seed, index)
TrialOutcome specification_trial(const Oracle& o, const GSet& margin, const GSet& window, const SpecCheckOptions& opt,
                                 long index);

// split pairs of origin boxes [0, a)×… (times the torsion part), smallest total size first
std::vector<std::pair<GSet, GSet>> split_sweep(const Ctx& ctx, const GSet& margin, int max_side);
TrialOutcome enumerate_pair(const Oracle& o, const std::pair<GSet, GSet>& dom, const SpecCheckOptions& opt);

// least completion of the union of parts over union·box(halo); parts must be pairwise margin-apart
Pattern glue(const Oracle& o, const std::vector<Pattern>& parts, const GSet& margin, int halo,
             const SearchOptions& opt = {});

}  // namespace symdyn
