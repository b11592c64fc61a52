#pragma once

#include <cstdint>
#include <utility>

#include "cfkit/ratings.hpp"

namespace cfkit {

struct SplitSpec {
  double test_fraction = 0.2;
  uint64_t seed = 0;
  bool stratify_by_user = true;
};

// Fraction of training entries kept when masking; sparsity s corresponds to
// retained_fraction = 1 - s.
struct SparsityLevel {
  double retained_fraction = 1.0;
};

// Disjoint train/test partition of the entries, deterministic under seed.
// Stratified: per-user holdout of round(test_fraction * degree) ratings,
// never taking a user's last rating. Global: holdout of
// round(test_fraction * |entries|) ratings. Both outputs keep the original
// dimensions.
std::pair<RatingsMatrix, RatingsMatrix> split(const RatingsMatrix& matrix,
                                              const SplitSpec& spec);

// Uniform random subset of round(retained_fraction * size) training entries.
// Masks drawn from the same (train, seed) nest across levels: a lower
// retained_fraction yields a subset of any higher one. One rating per user
// and per item is kept out of the masked-away set while the budget allows.
RatingsMatrix mask(const RatingsMatrix& train, SparsityLevel level, uint64_t seed);

}  // namespace cfkit
