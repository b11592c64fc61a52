#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cfkit/ingest.hpp"
#include "cfkit/ratings.hpp"

namespace cfkit {

enum class SimKind { cosine, pearson, semantic_cosine };

struct SimilarityMetric {
  SimKind kind = SimKind::cosine;
  double shrinkage = 0.0;  // co-rating-count damping: score *= overlap/(overlap+shrinkage)
  int min_overlap = 1;
};

SimKind sim_kind_from_name(const std::string& name);
std::string to_string(SimKind kind);

enum class SimFailure { none, insufficient_overlap, constant_vector, zero_vector };

using SparseVec = std::span<const std::pair<int, double>>;

// Similarity of two sparse rating vectors (sorted by id). Cosine runs over
// the full vectors with missing entries as zero; Pearson is the centered
// cosine over the co-rated overlap only. Undefined cases (overlap below
// min_overlap, constant overlap vector, zero-norm vector) return nullopt and
// set *why when given.
std::optional<double> similarity(SparseVec a, SparseVec b, const SimilarityMetric& metric,
                                 SimFailure* why = nullptr);

struct Neighbor {
  int id = 0;
  double score = 0.0;

  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

enum class Axis { user, item };

// Top-N neighbor lists per entity, sorted by score descending (ties by
// ascending id), self excluded. Immutable and thread-safe once built.
struct SimilarityIndex {
  Axis axis = Axis::user;
  std::vector<std::vector<Neighbor>> neighbors;

  int entity_count() const { return static_cast<int>(neighbors.size()); }
};

// Exact top-n_max neighbors per entity: brute force over candidates sharing
// at least one co-rating, or over all embedded entities for semantic_cosine
// (which requires `embeddings` and scores by embedding cosine). Entities
// whose similarity is undefined against a candidate simply skip it.
SimilarityIndex build_index(const RatingsMatrix& matrix, Axis axis,
                            const SimilarityMetric& metric, int n_max,
                            const EmbeddingTable* embeddings = nullptr, int threads = 1);

// Weighted-average rating prediction from a neighbor list. User axis:
// mean-centered aggregation over up to K positive-similarity neighbors who
// rated the item; item axis: similarity-weighted average of the user's
// ratings over the item's neighbors. Clamped to the training rating range.
// nullopt means abstain (no usable neighbor, or unknown user/item).
std::optional<double> predict_from_neighbors(const RatingsMatrix& matrix,
                                             const SimilarityIndex& index, int user,
                                             int item, int k_neighbors);

// (entity_id, neighbor_id, score) rows, scores at full precision.
void save_index_csv(const SimilarityIndex& index, const std::string& path);
SimilarityIndex load_index_csv(const std::string& path);

}  // namespace cfkit
