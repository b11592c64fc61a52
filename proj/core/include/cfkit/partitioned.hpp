#pragma once

#include <vector>

#include "cfkit/factorization.hpp"
#include "cfkit/ratings.hpp"

namespace cfkit {

// Contiguous user ranges balanced by rating count. Partition p owns users
// [user_begin[p], user_begin[p+1]).
struct PartitionPlan {
  int num_partitions = 1;
  std::vector<int> user_begin;  // num_partitions + 1 cut points
  bool clamped = false;         // requested count exceeded the user count

  int partition_of(int user) const;
  int begin(int p) const { return user_begin[p]; }
  int end(int p) const { return user_begin[p + 1]; }
};

PartitionPlan make_partition_plan(const RatingsMatrix& train, int num_partitions);

// Submatrix p holds exactly the ratings of its assigned users over all
// items; the union over partitions is the input.
std::vector<RatingsMatrix> split_by_plan(const RatingsMatrix& train,
                                         const PartitionPlan& plan);

// Block-synchronous partitioned ALS. Per sync round: every partition solves
// its users' rows against the shared item factors, then accumulates per-item
// normal-equation contributions from its local ratings; the merge sums the
// contributions and performs the exact global item solve. The result matches
// serial ALS with the same seed and round count to within floating-point
// re-association, independent of the partition count and scheduling; with
// one partition it is bit-identical.
FactorModel train_partitioned(const RatingsMatrix& train, int num_partitions,
                              const TrainConfig& config, int sync_rounds,
                              TrainTrace* trace = nullptr, int threads = 0);

}  // namespace cfkit
