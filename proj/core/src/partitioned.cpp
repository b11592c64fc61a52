#include "cfkit/partitioned.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "als_kernels.hpp"
#include "cfkit/threading.hpp"

namespace cfkit {

namespace {
double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}
}  // namespace

int PartitionPlan::partition_of(int user) const {
  auto it = std::upper_bound(user_begin.begin(), user_begin.end(), user);
  return static_cast<int>(it - user_begin.begin()) - 1;
}

PartitionPlan make_partition_plan(const RatingsMatrix& train, int num_partitions) {
  if (num_partitions < 1) throw std::invalid_argument("num_partitions must be >= 1");
  int m = train.num_users();
  PartitionPlan plan;
  plan.num_partitions = std::min(num_partitions, std::max(m, 1));
  plan.clamped = plan.num_partitions != num_partitions;

  size_t total = train.size();
  plan.user_begin.push_back(0);
  int user = 0;
  size_t assigned = 0;
  for (int p = 0; p < plan.num_partitions; ++p) {
    int remaining_parts = plan.num_partitions - p;
    double target = static_cast<double>(total - assigned) / remaining_parts;
    size_t count = 0;
    // leave at least one user for each remaining partition
    while (user < m - (remaining_parts - 1) &&
           (count < 1 || static_cast<double>(count) < target)) {
      count += train.user_degree(user);
      ++user;
      if (static_cast<double>(count) >= target) break;
    }
    if (p == plan.num_partitions - 1) user = m;
    assigned += count;
    plan.user_begin.push_back(user);
  }
  plan.user_begin.back() = m;
  return plan;
}

std::vector<RatingsMatrix> split_by_plan(const RatingsMatrix& train,
                                         const PartitionPlan& plan) {
  std::vector<RatingsMatrix> out;
  out.reserve(plan.num_partitions);
  for (int p = 0; p < plan.num_partitions; ++p) {
    std::vector<Rating> local;
    for (int u = plan.begin(p); u < plan.end(p); ++u)
      for (auto [i, r] : train.items_of(u)) local.push_back({u, i, r});
    out.push_back(RatingsMatrix::from_triples(local, train.num_users(), train.num_items()));
  }
  return out;
}

FactorModel train_partitioned(const RatingsMatrix& train, int num_partitions,
                              const TrainConfig& config, int sync_rounds,
                              TrainTrace* trace, int threads) {
  if (train.empty()) throw EmptyMatrix();
  if (config.optimizer != TrainConfig::Optimizer::als)
    throw std::invalid_argument("partitioned training supports ALS only");
  if (sync_rounds < 1) throw std::invalid_argument("sync_rounds must be >= 1");

  PartitionPlan plan = make_partition_plan(train, num_partitions);
  const int parts = plan.num_partitions;
  threads = std::min(effective_threads(threads), parts);

  FactorModel model = init_factors(train, config);
  const int k = config.k;
  std::vector<double> objectives;

  for (int round = 0; round < sync_rounds; ++round) {
    double t0 = now_seconds();
    std::vector<char> jitter_flags(parts, 0);

    // user half-step: partitions own disjoint row ranges of P
    parallel_for(parts, threads, [&](int p) {
      jitter_flags[p] = als::user_half_step(train, plan.begin(p), plan.end(p), model.Q,
                                            model.P, k, config.lambda);
    });
    if (trace) trace->objective.push_back(objective(model, train));

    // item half-step: local contributions per partition, merged in
    // partition order into the exact global normal equations
    std::vector<als::ItemPartials> partials(parts);
    parallel_for(parts, threads, [&](int p) {
      partials[p] = als::accumulate_item_partials(train, plan.begin(p), plan.end(p),
                                                  model.P, k);
    });
    bool jittered =
        als::item_half_step_merge(partials, train.num_items(), model.Q, k, config.lambda);
    for (char f : jitter_flags) jittered |= f != 0;

    double obj = objective(model, train);
    objectives.push_back(obj);
    if (trace) {
      trace->objective.push_back(obj);
      trace->round_seconds.push_back(now_seconds() - t0);
      if (jittered && (trace->notes.empty() || trace->notes.back().rfind("jitter", 0) != 0))
        trace->notes.push_back("jitter " + std::to_string(als::kJitter) +
                               " applied to a singular system at round " +
                               std::to_string(round));
    }
    if (!std::isfinite(obj)) throw Diverged(round, objectives);

    if (config.convergence_tol > 0.0 && objectives.size() >= 2) {
      double prev = objectives[objectives.size() - 2];
      if (prev <= 0.0 || (prev - obj) / prev < config.convergence_tol) break;
    }
  }
  return model;
}

}  // namespace cfkit
