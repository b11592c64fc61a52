#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "cfkit/error.hpp"

namespace cfkit {

struct Rating {
  int user = 0;
  int item = 0;
  double value = 0.0;

  friend bool operator==(const Rating&, const Rating&) = default;
};

// Sparse user-item rating store. Entries are the set of known ratings;
// per-user and per-item adjacency lists are kept sorted by the opposite id
// so that row/column iteration is O(degree) and deterministic.
// Immutable after construction; safe to share read-only across threads.
class RatingsMatrix {
 public:
  RatingsMatrix() = default;

  // Dimensions deduced as max id + 1.
  static RatingsMatrix from_triples(std::span<const Rating> triples);
  // Explicit dimensions (ids must fit).
  static RatingsMatrix from_triples(std::span<const Rating> triples, int num_users,
                                    int num_items);

  int num_users() const { return num_users_; }
  int num_items() const { return num_items_; }
  size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }

  // Canonical entry order: sorted by (user, item).
  const std::vector<Rating>& entries() const { return entries_; }

  // (item, rating) pairs of one user, sorted by item id.
  std::span<const std::pair<int, double>> items_of(int user) const {
    return by_user_[user];
  }
  // (user, rating) pairs of one item, sorted by user id.
  std::span<const std::pair<int, double>> users_of(int item) const {
    return by_item_[item];
  }

  int user_degree(int user) const { return static_cast<int>(by_user_[user].size()); }
  int item_degree(int item) const { return static_cast<int>(by_item_[item].size()); }

  std::optional<double> find(int user, int item) const;

  // Means over observed entries; 0.0 when the row/column/matrix is empty.
  double user_mean(int user) const;
  double item_mean(int item) const;
  double global_mean() const;

  // Observed rating range; (0, 0) for an empty matrix.
  double rating_min() const { return rating_min_; }
  double rating_max() const { return rating_max_; }

  double clamp_to_range(double x) const;

 private:
  int num_users_ = 0;
  int num_items_ = 0;
  std::vector<Rating> entries_;
  std::vector<std::vector<std::pair<int, double>>> by_user_;
  std::vector<std::vector<std::pair<int, double>>> by_item_;
  std::vector<double> user_sum_;
  std::vector<double> item_sum_;
  double total_sum_ = 0.0;
  double rating_min_ = 0.0;
  double rating_max_ = 0.0;
};

}  // namespace cfkit
