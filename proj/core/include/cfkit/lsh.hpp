#pragma once

#include <cstdint>
#include <unordered_map>
#include <vector>

#include "cfkit/ingest.hpp"
#include "cfkit/ratings.hpp"
#include "cfkit/similarity.hpp"

namespace cfkit {

struct LshConfig {
  int num_tables = 16;     // L
  int bits_per_table = 8;  // b, bits per hash key; expected bucket size n/2^b
  uint64_t seed = 0;
  bool rerank = true;  // exact cosine rerank of the candidate union
};

// Sign-random-projection index: L tables of b random unit hyperplanes each;
// a vector's key in table t is the concatenated signs of its projections
// (sign(0) counts as positive). Immutable after build; queries are
// read-only and thread-safe.
class LshIndex {
 public:
  LshIndex(std::vector<std::pair<int, std::vector<double>>> vectors, LshConfig config);

  int dimension() const { return dimension_; }
  const LshConfig& config() const { return config_; }

  // b-bit sign pattern of v under table t's hyperplanes; bit j set iff the
  // projection onto hyperplane j is >= 0.
  uint64_t key_of(std::span<const double> v, int table) const;

  struct QueryResult {
    std::vector<Neighbor> hits;
    size_t candidates_examined = 0;  // deduplicated bucket-union size
  };

  // Candidates are the union of v's buckets across tables minus exclude_id.
  // With rerank, hits are the exact-cosine top-K over candidates (ties by
  // ascending id); without, candidates in bucket order truncated to K with
  // score 0.
  QueryResult query(std::span<const double> v, int k, int exclude_id = -1) const;

  const std::vector<std::pair<int, std::vector<double>>>& vectors() const { return vectors_; }

 private:
  LshConfig config_;
  int dimension_ = 0;
  std::vector<std::vector<double>> hyperplanes_;  // [table][bit * dim + d]
  std::vector<std::unordered_map<uint64_t, std::vector<int>>> tables_;
  std::vector<std::pair<int, std::vector<double>>> vectors_;
  std::unordered_map<int, size_t> slot_of_id_;
};

// L*b random unit hyperplanes of the given dimension, deterministic under
// seed; layout matches LshIndex::key_of.
std::vector<std::vector<double>> make_hyperplanes(int dimension, int num_tables,
                                                  int bits_per_table, uint64_t seed);

// Exact cosine top-k over an explicit candidate set; the rerank path of
// LshIndex::query. Ties break by ascending id.
std::vector<Neighbor> rerank_topk(const std::vector<std::pair<int, std::vector<double>>>& vectors,
                                  const std::unordered_map<int, size_t>& slot_of_id,
                                  std::span<const int> candidate_ids,
                                  std::span<const double> query, int k);

struct LshNeighborhood {
  SimilarityIndex index;
  double mean_candidate_fraction = 0.0;  // mean candidates / (population - 1)
};

// Approximate top-N neighbor lists built from LSH candidates instead of
// brute force. Entity vectors are the sparse rating rows of the chosen axis.
LshNeighborhood lsh_neighborhood_index(const RatingsMatrix& matrix, Axis axis,
                                       const LshConfig& config, int n_max);

// Same, over dense vectors (e.g. item factor rows or embeddings).
LshNeighborhood lsh_neighborhood_index(const std::vector<std::pair<int, std::vector<double>>>& vectors,
                                       Axis axis, const LshConfig& config, int n_max);

LshNeighborhood lsh_neighborhood_index(const EmbeddingTable& embeddings, Axis axis,
                                       const LshConfig& config, int n_max);

}  // namespace cfkit
