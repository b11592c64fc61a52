#pragma once

// Shared ALS inner kernels. Serial training runs these over a single
// all-users range; block-partitioned training runs the same code per
// partition and merges the item-step partials, so a one-partition run is
// arithmetically identical to the serial path.

#include <Eigen/Dense>
#include <vector>

#include "cfkit/ratings.hpp"

namespace cfkit::als {

constexpr double kJitter = 1e-10;

// Solves (gram + lambda*I) x = rhs via Cholesky; on a numerically
// non-positive-definite system (possible only at lambda=0) retries with a
// kJitter diagonal bump. Returns true when the jitter was needed.
inline bool solve_ridge(const Eigen::MatrixXd& gram, const Eigen::VectorXd& rhs,
                        double lambda, Eigen::VectorXd& x) {
  int k = static_cast<int>(gram.rows());
  Eigen::MatrixXd a = gram;
  a.diagonal().array() += lambda;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) {
    x = llt.solve(rhs);
    if (x.allFinite()) return false;
  }
  a.diagonal().array() += kJitter;
  x = Eigen::LLT<Eigen::MatrixXd>(a).solve(rhs);
  if (!x.allFinite()) x = Eigen::VectorXd::Zero(k);
  return true;
}

// Solves every user row in [u_begin, u_end) against the fixed item factors.
// Rows are independent; any scheduling of ranges gives identical results.
inline bool user_half_step(const RatingsMatrix& train, int u_begin, int u_end,
                           const std::vector<double>& item_factors,
                           std::vector<double>& user_factors, int k, double lambda) {
  bool jittered = false;
  Eigen::MatrixXd gram(k, k);
  Eigen::VectorXd rhs(k), x(k);
  for (int u = u_begin; u < u_end; ++u) {
    gram.setZero();
    rhs.setZero();
    for (auto [item, rating] : train.items_of(u)) {
      Eigen::Map<const Eigen::VectorXd> q(item_factors.data() + static_cast<size_t>(item) * k, k);
      gram.noalias() += q * q.transpose();
      rhs.noalias() += rating * q;
    }
    jittered |= solve_ridge(gram, rhs, lambda, x);
    Eigen::Map<Eigen::VectorXd>(user_factors.data() + static_cast<size_t>(u) * k, k) = x;
  }
  return jittered;
}

// Per-item normal-equation contributions from the ratings of users in
// [u_begin, u_end): for each locally rated item, the partial Gram matrix
// sum(p_u p_u^T) and right-hand side sum(r_ui p_u), users in ascending order.
struct ItemPartials {
  std::vector<int> item_ids;  // ascending
  std::vector<double> gram;   // item_ids.size() blocks of k*k
  std::vector<double> rhs;    // item_ids.size() blocks of k
};

inline ItemPartials accumulate_item_partials(const RatingsMatrix& train, int u_begin,
                                             int u_end, const std::vector<double>& user_factors,
                                             int k) {
  ItemPartials out;
  std::vector<int> pos(train.num_items(), -1);
  for (int u = u_begin; u < u_end; ++u)
    for (auto [item, _] : train.items_of(u))
      if (pos[item] < 0) {
        pos[item] = 0;
        out.item_ids.push_back(item);
      }
  std::sort(out.item_ids.begin(), out.item_ids.end());
  for (size_t idx = 0; idx < out.item_ids.size(); ++idx) pos[out.item_ids[idx]] = static_cast<int>(idx);

  size_t kk = static_cast<size_t>(k) * k;
  out.gram.assign(out.item_ids.size() * kk, 0.0);
  out.rhs.assign(out.item_ids.size() * static_cast<size_t>(k), 0.0);

  for (int u = u_begin; u < u_end; ++u) {
    Eigen::Map<const Eigen::VectorXd> p(user_factors.data() + static_cast<size_t>(u) * k, k);
    for (auto [item, rating] : train.items_of(u)) {
      int idx = pos[item];
      Eigen::Map<Eigen::MatrixXd> g(out.gram.data() + idx * kk, k, k);
      Eigen::Map<Eigen::VectorXd> b(out.rhs.data() + static_cast<size_t>(idx) * k, k);
      g.noalias() += p * p.transpose();
      b.noalias() += rating * p;
    }
  }
  return out;
}

// Assembles the global item normal equations by summing the partials in the
// order given (partition 0, 1, ...), then solves every item, including
// unrated ones, whose ridge solution is the zero row.
inline bool item_half_step_merge(const std::vector<ItemPartials>& partials, int num_items,
                                 std::vector<double>& item_factors, int k, double lambda) {
  size_t kk = static_cast<size_t>(k) * k;
  std::vector<double> gram_all(static_cast<size_t>(num_items) * kk, 0.0);
  std::vector<double> rhs_all(static_cast<size_t>(num_items) * k, 0.0);

  for (const ItemPartials& part : partials) {
    for (size_t idx = 0; idx < part.item_ids.size(); ++idx) {
      int item = part.item_ids[idx];
      double* g = gram_all.data() + item * kk;
      const double* gp = part.gram.data() + idx * kk;
      for (size_t t = 0; t < kk; ++t) g[t] += gp[t];
      double* b = rhs_all.data() + static_cast<size_t>(item) * k;
      const double* bp = part.rhs.data() + idx * static_cast<size_t>(k);
      for (int t = 0; t < k; ++t) b[t] += bp[t];
    }
  }

  bool jittered = false;
  Eigen::VectorXd x(k);
  for (int item = 0; item < num_items; ++item) {
    Eigen::Map<const Eigen::MatrixXd> gram(gram_all.data() + item * kk, k, k);
    Eigen::Map<const Eigen::VectorXd> rhs(rhs_all.data() + static_cast<size_t>(item) * k, k);
    jittered |= solve_ridge(gram, rhs, lambda, x);
    Eigen::Map<Eigen::VectorXd>(item_factors.data() + static_cast<size_t>(item) * k, k) = x;
  }
  return jittered;
}

}  // namespace cfkit::als
