#include "cfkit/hybrid.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace cfkit {

UserProfiles build_user_profiles(const RatingsMatrix& train, const FeatureTable& features) {
  UserProfiles out;
  out.vocab_size = features.vocab_size();
  out.rows.resize(train.num_users());

  for (int u = 0; u < train.num_users(); ++u) {
    auto row = train.items_of(u);
    if (row.empty()) continue;
    double mu = train.user_mean(u);

    std::map<int, double> acc;
    bool any_weight = false;
    for (auto [item, rating] : row) {
      if (item >= features.num_items()) continue;
      double w = rating - mu;
      if (w != 0.0) any_weight = true;
      for (auto [attr, value] : features.items[item]) acc[attr] += w * value;
    }
    if (!any_weight || std::all_of(acc.begin(), acc.end(),
                                   [](const auto& p) { return p.second == 0.0; })) {
      // constant rater: centered weights cancel, use the plain mean instead
      acc.clear();
      for (auto [item, _] : row) {
        if (item >= features.num_items()) continue;
        for (auto [attr, value] : features.items[item]) acc[attr] += value;
      }
    }
    double inv = 1.0 / static_cast<double>(row.size());
    auto& profile = out.rows[u];
    for (auto [attr, value] : acc)
      if (value != 0.0) profile.emplace_back(attr, value * inv);
  }
  return out;
}

double content_score(std::span<const std::pair<int, double>> profile,
                     std::span<const std::pair<int, double>> item_attributes,
                     double rating_min, double rating_max, double global_mean) {
  double dot = 0.0, np = 0.0, ni = 0.0;
  size_t i = 0, j = 0;
  while (i < profile.size() && j < item_attributes.size()) {
    if (profile[i].first < item_attributes[j].first) {
      ++i;
    } else if (profile[i].first > item_attributes[j].first) {
      ++j;
    } else {
      dot += profile[i].second * item_attributes[j].second;
      ++i;
      ++j;
    }
  }
  for (auto [_, x] : profile) np += x * x;
  for (auto [_, x] : item_attributes) ni += x * x;
  if (np == 0.0 || ni == 0.0) return global_mean;
  double cosine = dot / std::sqrt(np * ni);
  return rating_min + (cosine + 1.0) * 0.5 * (rating_max - rating_min);
}

HybridModel::HybridModel(HybridConfig config, const RatingsMatrix& train,
                         const FeatureTable& features, CfPredictor cf)
    : config_(config),
      profiles_(build_user_profiles(train, features)),
      features_(&features),
      cf_(std::move(cf)),
      rating_min_(train.rating_min()),
      rating_max_(train.rating_max()),
      global_mean_(train.global_mean()) {
  if (config_.alpha < 0.0 || config_.alpha > 1.0)
    throw std::invalid_argument("alpha must be in [0,1]");
  user_counts_.resize(train.num_users());
  item_counts_.resize(train.num_items());
  for (int u = 0; u < train.num_users(); ++u) user_counts_[u] = train.user_degree(u);
  for (int i = 0; i < train.num_items(); ++i) item_counts_[i] = train.item_degree(i);
}

bool HybridModel::is_warm(int user, int item) const {
  bool user_warm = user >= 0 && user < static_cast<int>(user_counts_.size()) &&
                   user_counts_[user] >= config_.cold_threshold;
  bool item_warm = item >= 0 && item < static_cast<int>(item_counts_.size()) &&
                   item_counts_[item] >= config_.cold_threshold;
  return user_warm && item_warm;
}

double HybridModel::predict(int user, int item) const {
  std::span<const std::pair<int, double>> attrs;
  if (item >= 0 && item < features_->num_items()) attrs = features_->items[item];
  double content = content_score(profiles_.of(user), attrs, rating_min_, rating_max_,
                                 global_mean_);

  double blended = content;
  if (is_warm(user, item) && config_.alpha > 0.0) {
    auto cf = cf_(user, item);
    // a CF abstention on a warm pair also falls through to content
    blended = cf ? config_.alpha * *cf + (1.0 - config_.alpha) * content : content;
  } else {
    ++cold_predictions_;
  }
  double out = std::clamp(blended, rating_min_, rating_max_);
  return std::isfinite(out) ? out : global_mean_;
}

AlphaTable tune_alpha(const RatingsMatrix& train, const RatingsMatrix& validation,
                      const FeatureTable& features, const HybridModel::CfPredictor& cf,
                      std::span<const double> grid, const HybridConfig& base) {
  if (grid.empty()) throw EmptyInput("alpha grid");
  if (validation.empty()) throw EmptyMatrix();

  AlphaTable out;
  double best_rmse = std::numeric_limits<double>::infinity();
  for (double alpha : grid) {
    HybridConfig cfg = base;
    cfg.alpha = alpha;
    HybridModel model(cfg, train, features, cf);
    double sse = 0.0;
    for (const Rating& r : validation.entries()) {
      double e = model.predict(r.user, r.item) - r.value;
      sse += e * e;
    }
    double rmse = std::sqrt(sse / static_cast<double>(validation.size()));
    out.cells.push_back({alpha, rmse});
    if (rmse < best_rmse || (rmse == best_rmse && alpha > out.best_alpha)) {
      best_rmse = rmse;
      out.best_alpha = alpha;
    }
  }
  return out;
}

}  // namespace cfkit
