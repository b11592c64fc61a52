#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cfkit/ingest.hpp"
#include "cfkit/ratings.hpp"

namespace cfkit {

// Planted-factor ratings generator shaped like the MovieLens 100K corpus:
// integer 1-5 ratings drawn from a low-rank user/item factor model with
// genre-clustered item factors, heavy-tailed user activity and item
// popularity. Deterministic under seed.
struct SyntheticSpec {
  int num_users = 943;
  int num_items = 1682;
  int num_ratings = 100000;
  int latent_dim = 8;
  int num_genres = 18;
  int min_user_ratings = 20;
  double rating_noise = 0.55;
  uint64_t seed = 1;
};

struct SyntheticDataset {
  RatingsMatrix ratings;
  FeatureTable features;  // genre flags aligned to internal item ids
  IdMap users;            // external ids are 1-based
  IdMap items;
  std::vector<std::string> genre_names;
  std::vector<std::vector<double>> item_vectors;  // planted item factors
};

SyntheticDataset make_synthetic(const SyntheticSpec& spec);

// Writes u.data (tab-separated user/item/rating/timestamp), movies.dat
// (`id::Title (1996)::Genre|Genre`) and embeddings.csv under dir.
void write_movielens_style(const SyntheticDataset& data, const std::string& dir);

}  // namespace cfkit
