#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cfkit/ratings.hpp"

namespace cfkit {

// Rank-k factor model: ratings approximated by the product of a user factor
// matrix P (m x k) and an item factor matrix Q (n x k), both row-major.
struct FactorModel {
  int num_users = 0;
  int num_items = 0;
  int k = 0;
  double lambda = 0.0;
  uint64_t seed = 0;         // training seed, kept for reproducibility
  double global_mean = 0.0;  // fallback for unknown users/items
  double rating_min = 0.0;
  double rating_max = 0.0;
  std::vector<double> P;
  std::vector<double> Q;

  const double* user_row(int u) const { return P.data() + static_cast<size_t>(u) * k; }
  const double* item_row(int i) const { return Q.data() + static_cast<size_t>(i) * k; }
  double* user_row(int u) { return P.data() + static_cast<size_t>(u) * k; }
  double* item_row(int i) { return Q.data() + static_cast<size_t>(i) * k; }

  double dot(int user, int item) const {
    const double* p = user_row(user);
    const double* q = item_row(item);
    double s = 0.0;
    for (int f = 0; f < k; ++f) s += p[f] * q[f];
    return s;
  }

  // Factor product clamped to the training rating range; unknown ids fall
  // back to the training mean.
  double predict(int user, int item) const;
};

struct TrainConfig {
  enum class Optimizer { sgd, als };
  Optimizer optimizer = Optimizer::als;
  int epochs = 100;             // SGD epochs or ALS sweeps
  double learning_rate = 0.005; // SGD only
  double lambda = 0.05;
  int k = 32;
  double init_scale = 0.1;
  uint64_t seed = 0;
  double convergence_tol = 1e-5;  // stop when relative objective decrease < tol
};

struct TrainTrace {
  // Squared-error-plus-penalty objective after every epoch (SGD) or after
  // every half-step (ALS: user solve, then item solve, per sweep).
  std::vector<double> objective;
  std::vector<double> round_seconds;
  std::vector<std::string> notes;  // e.g. jitter applied to a singular solve
};

// Sum over observed entries of squared residual, plus lambda times the
// squared Frobenius norms of both factor matrices.
double objective(const FactorModel& model, const RatingsMatrix& train);

// Factors drawn i.i.d. uniform in [-init_scale, init_scale]/sqrt(k), P rows
// first, then Q rows, from a single seeded engine.
FactorModel init_factors(const RatingsMatrix& train, const TrainConfig& config);

// Per-entry stochastic updates P_u += lr*(e*Q_i - lambda*P_u), symmetrically
// for Q_i, both from the pre-update rows; entries visited in a seed-shuffled
// order each epoch. Throws Diverged if the objective becomes non-finite.
FactorModel train_sgd(const RatingsMatrix& train, const TrainConfig& config,
                      TrainTrace* trace = nullptr);

// Alternating exact ridge solves over observed entries. The objective is
// non-increasing across half-steps; singular systems (possible only at
// lambda=0) are resolved by a 1e-10 diagonal jitter noted in the trace.
FactorModel train_als(const RatingsMatrix& train, const TrainConfig& config,
                      TrainTrace* trace = nullptr, int threads = 1);

FactorModel train(const RatingsMatrix& train, const TrainConfig& config,
                  TrainTrace* trace = nullptr, int threads = 1);

// Gradient of the per-entry loss (r - P_u.Q_i)^2 + lambda*(|P_u|^2 + |Q_i|^2)
// with respect to the P_u and Q_i rows. The SGD update steps along
// -(1/2)*learning_rate times this.
std::pair<std::vector<double>, std::vector<double>> sgd_gradient(const FactorModel& model,
                                                                 int user, int item,
                                                                 double rating);

// Read-through view: observed cells return the training rating, unobserved
// cells return the model prediction.
class CompletedView {
 public:
  CompletedView(const FactorModel& model, const RatingsMatrix& train)
      : model_(model), train_(train) {}
  double at(int user, int item) const {
    auto r = train_.find(user, item);
    return r ? *r : model_.predict(user, item);
  }

 private:
  const FactorModel& model_;
  const RatingsMatrix& train_;
};

inline CompletedView complete(const FactorModel& model, const RatingsMatrix& train) {
  return CompletedView(model, train);
}

// Binary little-endian layout: magic "CFKM", version, dims, k, lambda, seed,
// global_mean, rating range, then P and Q row-major as raw doubles.
// Round-trips bit-exactly.
void save_model(const FactorModel& model, const std::string& path);
FactorModel load_model(const std::string& path);

}  // namespace cfkit
