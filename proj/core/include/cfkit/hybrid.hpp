#pragma once

#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfkit/ingest.hpp"
#include "cfkit/ratings.hpp"

namespace cfkit {

struct HybridConfig {
  double alpha = 0.7;  // weight on the CF score
  enum class CfBackend { neighborhood, factorization };
  CfBackend cf_backend = CfBackend::factorization;
  int cold_threshold = 1;  // minimum training ratings to count as warm
};

// Per-user attribute-preference vectors: the mean of the user's rated items'
// attribute vectors weighted by (rating - user mean). A user whose weights
// all cancel (constant rater) falls back to the plain attribute mean so a
// rated user always has a usable profile.
struct UserProfiles {
  int vocab_size = 0;
  std::vector<std::vector<std::pair<int, double>>> rows;  // sparse, sorted by attribute

  std::span<const std::pair<int, double>> of(int user) const {
    static const std::vector<std::pair<int, double>> empty;
    return user >= 0 && user < static_cast<int>(rows.size()) ? rows[user] : empty;
  }
};

UserProfiles build_user_profiles(const RatingsMatrix& train, const FeatureTable& features);

// Cosine of profile and item attributes mapped affinely from [-1, 1] onto
// the rating range; a zero profile or zero attribute vector falls back to
// the global mean.
double content_score(std::span<const std::pair<int, double>> profile,
                     std::span<const std::pair<int, double>> item_attributes,
                     double rating_min, double rating_max, double global_mean);

// Content+CF blend. Warm pairs score alpha*cf + (1-alpha)*content; a cold
// user or item forces the content score alone. Never abstains: every input
// yields a finite value in the rating range.
class HybridModel {
 public:
  using CfPredictor = std::function<std::optional<double>(int user, int item)>;

  HybridModel(HybridConfig config, const RatingsMatrix& train, const FeatureTable& features,
              CfPredictor cf);

  double predict(int user, int item) const;
  bool is_warm(int user, int item) const;
  size_t cold_predictions() const { return cold_predictions_; }

 private:
  HybridConfig config_;
  UserProfiles profiles_;
  const FeatureTable* features_;
  CfPredictor cf_;
  std::vector<int> user_counts_;
  std::vector<int> item_counts_;
  double rating_min_, rating_max_, global_mean_;
  mutable size_t cold_predictions_ = 0;
};

struct AlphaCell {
  double alpha = 0.0;
  double rmse = 0.0;
};

struct AlphaTable {
  double best_alpha = 0.0;
  std::vector<AlphaCell> cells;
};

// Validation-RMSE grid search over alpha; the CF backend is built once on
// the training matrix by the caller. Ties break toward the larger alpha.
AlphaTable tune_alpha(const RatingsMatrix& train, const RatingsMatrix& validation,
                      const FeatureTable& features, const HybridModel::CfPredictor& cf,
                      std::span<const double> grid, const HybridConfig& base = {});

}  // namespace cfkit
