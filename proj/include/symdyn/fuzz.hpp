#pragma once

#include <string>

#include "symdyn/group.hpp"

namespace symdyn {

// random instances of the Følner-set inequalities over Z, Z² and Z×Z6
struct FuzzStats {
  long instances = 0;
  long violations = 0;
  long first_violation = -1;  // instance index
  double tightest = 0;        // largest lhs/rhs seen
  json to_json() const;
  bool operator==(const FuzzStats&) const = default;
};

// |KV∩F|/|F| ≤ |K'|²δ + |K|/|K'| with δ = defect(F, K')
FuzzStats fuzz_aux(long n, uint64_t seed, bool parallel = true);
FuzzStats fuzz_aux_serial(long n, uint64_t seed);

// the three core/defect bounds, checked on one (F, K, ε, F') per instance
FuzzStats fuzz_ksets(long n, uint64_t seed, bool parallel = true);
FuzzStats fuzz_ksets_serial(long n, uint64_t seed);

}  // namespace symdyn
