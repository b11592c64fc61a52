#include "cfkit/split.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cfkit/rng.hpp"

namespace cfkit {

namespace {
constexpr uint64_t kSplitStream = 0x5b1e7u;
constexpr uint64_t kMaskStream = 0x3a5ca7u;
}  // namespace

std::pair<RatingsMatrix, RatingsMatrix> split(const RatingsMatrix& matrix,
                                              const SplitSpec& spec) {
  if (matrix.empty()) throw EmptyMatrix();
  if (!(spec.test_fraction > 0.0 && spec.test_fraction < 1.0))
    throw std::invalid_argument("test_fraction must be in (0,1)");

  std::vector<Rating> train, test;
  train.reserve(matrix.size());

  if (spec.stratify_by_user) {
    for (int u = 0; u < matrix.num_users(); ++u) {
      auto row = matrix.items_of(u);
      int deg = static_cast<int>(row.size());
      if (deg == 0) continue;
      int holdout = static_cast<int>(std::llround(spec.test_fraction * deg));
      holdout = std::min(holdout, deg - 1);  // a user's last rating stays in train
      if (holdout <= 0) {
        for (auto [i, r] : row) train.push_back({u, i, r});
        continue;
      }
      std::vector<int> idx(deg);
      std::iota(idx.begin(), idx.end(), 0);
      auto eng = rng::engine_for(spec.seed ^ kSplitStream, static_cast<uint64_t>(u));
      rng::shuffle(idx, eng);
      for (int j = 0; j < deg; ++j) {
        auto [i, r] = row[idx[j]];
        (j < holdout ? test : train).push_back({u, i, r});
      }
    }
  } else {
    const auto& entries = matrix.entries();
    std::vector<size_t> idx(entries.size());
    std::iota(idx.begin(), idx.end(), size_t{0});
    auto eng = rng::engine_for(spec.seed ^ kSplitStream, 0);
    rng::shuffle(idx, eng);
    size_t holdout = static_cast<size_t>(std::llround(spec.test_fraction * entries.size()));
    for (size_t j = 0; j < idx.size(); ++j)
      (j < holdout ? test : train).push_back(entries[idx[j]]);
  }

  return {RatingsMatrix::from_triples(train, matrix.num_users(), matrix.num_items()),
          RatingsMatrix::from_triples(test, matrix.num_users(), matrix.num_items())};
}

RatingsMatrix mask(const RatingsMatrix& train, SparsityLevel level, uint64_t seed) {
  if (!(level.retained_fraction > 0.0 && level.retained_fraction <= 1.0))
    throw std::invalid_argument("retained_fraction must be in (0,1]");

  const auto& entries = train.entries();
  size_t keep = static_cast<size_t>(std::llround(level.retained_fraction * entries.size()));
  if (keep >= entries.size())
    return RatingsMatrix::from_triples(entries, train.num_users(), train.num_items());

  // One permutation per (train, seed); every retained_fraction takes a prefix
  // of the same reordering, so masks nest across sparsity levels.
  std::vector<size_t> perm(entries.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  auto eng = rng::engine_for(seed ^ kMaskStream, 0);
  rng::shuffle(perm, eng);

  // Entries that are the first occurrence of their user or item in
  // permutation order move to the front; taking them first keeps one rating
  // per user and per item alive whenever the budget allows.
  std::vector<char> user_seen(train.num_users(), 0), item_seen(train.num_items(), 0);
  std::vector<size_t> protected_idx, rest_idx;
  for (size_t p : perm) {
    const Rating& r = entries[p];
    if (!user_seen[r.user] || !item_seen[r.item]) {
      user_seen[r.user] = 1;
      item_seen[r.item] = 1;
      protected_idx.push_back(p);
    } else {
      rest_idx.push_back(p);
    }
  }

  std::vector<Rating> kept;
  kept.reserve(keep);
  for (size_t j = 0; j < keep; ++j) {
    size_t p = j < protected_idx.size() ? protected_idx[j]
                                        : rest_idx[j - protected_idx.size()];
    kept.push_back(entries[p]);
  }
  return RatingsMatrix::from_triples(kept, train.num_users(), train.num_items());
}

}  // namespace cfkit
