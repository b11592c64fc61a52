#include "cfkit/ratings.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_set>

namespace cfkit {

RatingsMatrix RatingsMatrix::from_triples(std::span<const Rating> triples) {
  int m = 0, n = 0;
  for (const Rating& r : triples) {
    if (r.user < 0 || r.item < 0)
      throw std::invalid_argument("negative user or item id");
    m = std::max(m, r.user + 1);
    n = std::max(n, r.item + 1);
  }
  return from_triples(triples, m, n);
}

RatingsMatrix RatingsMatrix::from_triples(std::span<const Rating> triples,
                                          int num_users, int num_items) {
  RatingsMatrix out;
  out.num_users_ = num_users;
  out.num_items_ = num_items;
  out.entries_.assign(triples.begin(), triples.end());
  std::sort(out.entries_.begin(), out.entries_.end(), [](const Rating& a, const Rating& b) {
    return a.user != b.user ? a.user < b.user : a.item < b.item;
  });

  out.by_user_.resize(num_users);
  out.by_item_.resize(num_items);
  out.user_sum_.assign(num_users, 0.0);
  out.item_sum_.assign(num_items, 0.0);
  out.rating_min_ = std::numeric_limits<double>::infinity();
  out.rating_max_ = -std::numeric_limits<double>::infinity();

  const Rating* prev = nullptr;
  for (const Rating& r : out.entries_) {
    if (r.user < 0 || r.item < 0)
      throw std::invalid_argument("negative user or item id");
    if (r.user >= num_users || r.item >= num_items)
      throw std::invalid_argument("rating id outside declared dimensions");
    if (!std::isfinite(r.value)) throw NonFiniteRating(r.user, r.item);
    if (prev && prev->user == r.user && prev->item == r.item)
      throw DuplicateEntry(r.user, r.item);
    prev = &r;

    out.by_user_[r.user].emplace_back(r.item, r.value);
    out.by_item_[r.item].emplace_back(r.user, r.value);
    out.user_sum_[r.user] += r.value;
    out.item_sum_[r.item] += r.value;
    out.total_sum_ += r.value;
    out.rating_min_ = std::min(out.rating_min_, r.value);
    out.rating_max_ = std::max(out.rating_max_, r.value);
  }
  if (out.entries_.empty()) {
    out.rating_min_ = 0.0;
    out.rating_max_ = 0.0;
  }
  // by_user_ rows come out sorted by item because entries_ is sorted
  // (user, item); by_item_ rows are sorted by user for the same reason.
  return out;
}

std::optional<double> RatingsMatrix::find(int user, int item) const {
  if (user < 0 || user >= num_users_ || item < 0 || item >= num_items_)
    return std::nullopt;
  const auto& row = by_user_[user];
  auto it = std::lower_bound(row.begin(), row.end(), item,
                             [](const std::pair<int, double>& p, int i) { return p.first < i; });
  if (it == row.end() || it->first != item) return std::nullopt;
  return it->second;
}

double RatingsMatrix::user_mean(int user) const {
  if (user < 0 || user >= num_users_ || by_user_[user].empty()) return 0.0;
  return user_sum_[user] / static_cast<double>(by_user_[user].size());
}

double RatingsMatrix::item_mean(int item) const {
  if (item < 0 || item >= num_items_ || by_item_[item].empty()) return 0.0;
  return item_sum_[item] / static_cast<double>(by_item_[item].size());
}

double RatingsMatrix::global_mean() const {
  if (entries_.empty()) return 0.0;
  return total_sum_ / static_cast<double>(entries_.size());
}

double RatingsMatrix::clamp_to_range(double x) const {
  return std::clamp(x, rating_min_, rating_max_);
}

}  // namespace cfkit
