#include "cfkit/lsh.hpp"

#include <algorithm>
#include <cmath>

#include "cfkit/rng.hpp"

namespace cfkit {

std::vector<std::vector<double>> make_hyperplanes(int dimension, int num_tables,
                                                  int bits_per_table, uint64_t seed) {
  if (dimension < 1) throw std::invalid_argument("dimension must be >= 1");
  std::vector<std::vector<double>> planes(num_tables);
  auto eng = rng::engine_for(seed, 0x15a9u);
  for (int t = 0; t < num_tables; ++t) {
    planes[t].resize(static_cast<size_t>(bits_per_table) * dimension);
    rng::fill_gaussian(planes[t], eng);
    for (int j = 0; j < bits_per_table; ++j) {
      double* h = planes[t].data() + static_cast<size_t>(j) * dimension;
      double norm = 0.0;
      for (int d = 0; d < dimension; ++d) norm += h[d] * h[d];
      norm = std::sqrt(norm);
      if (norm == 0.0) {  // astronomically unlikely; keep the key rule total
        h[0] = 1.0;
        norm = 1.0;
      }
      for (int d = 0; d < dimension; ++d) h[d] /= norm;
    }
  }
  return planes;
}

LshIndex::LshIndex(std::vector<std::pair<int, std::vector<double>>> vectors, LshConfig config)
    : config_(config), vectors_(std::move(vectors)) {
  if (config_.num_tables < 1 || config_.bits_per_table < 1 || config_.bits_per_table > 64)
    throw std::invalid_argument("need num_tables >= 1 and 1 <= bits_per_table <= 64");
  if (vectors_.empty()) {
    tables_.resize(config_.num_tables);
    return;
  }

  dimension_ = static_cast<int>(vectors_.front().second.size());
  for (const auto& [id, v] : vectors_) {
    if (static_cast<int>(v.size()) != dimension_)
      throw DimensionMismatch("vector " + std::to_string(id) + " has " +
                              std::to_string(v.size()) + " components, expected " +
                              std::to_string(dimension_));
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm == 0.0) throw ZeroVector(id);
  }

  hyperplanes_ = make_hyperplanes(dimension_, config_.num_tables, config_.bits_per_table,
                                  config_.seed);
  tables_.resize(config_.num_tables);
  for (size_t slot = 0; slot < vectors_.size(); ++slot) {
    slot_of_id_[vectors_[slot].first] = slot;
    for (int t = 0; t < config_.num_tables; ++t)
      tables_[t][key_of(vectors_[slot].second, t)].push_back(vectors_[slot].first);
  }
}

uint64_t LshIndex::key_of(std::span<const double> v, int table) const {
  const double* planes = hyperplanes_[table].data();
  uint64_t key = 0;
  for (int j = 0; j < config_.bits_per_table; ++j) {
    const double* h = planes + static_cast<size_t>(j) * dimension_;
    double dot = 0.0;
    for (int d = 0; d < dimension_; ++d) dot += h[d] * v[d];
    if (dot >= 0.0) key |= uint64_t{1} << j;
  }
  return key;
}

std::vector<Neighbor> rerank_topk(const std::vector<std::pair<int, std::vector<double>>>& vectors,
                                  const std::unordered_map<int, size_t>& slot_of_id,
                                  std::span<const int> candidate_ids,
                                  std::span<const double> query, int k) {
  double qn = 0.0;
  for (double x : query) qn += x * x;
  qn = std::sqrt(qn);

  std::vector<Neighbor> scored;
  scored.reserve(candidate_ids.size());
  for (int id : candidate_ids) {
    const auto& v = vectors[slot_of_id.at(id)].second;
    double dot = 0.0, vn = 0.0;
    for (size_t d = 0; d < v.size(); ++d) {
      dot += v[d] * query[d];
      vn += v[d] * v[d];
    }
    double denom = qn * std::sqrt(vn);
    scored.push_back({id, denom > 0.0 ? dot / denom : 0.0});
  }
  auto better = [](const Neighbor& a, const Neighbor& b) {
    return a.score != b.score ? a.score > b.score : a.id < b.id;
  };
  if (static_cast<int>(scored.size()) > k) {
    std::partial_sort(scored.begin(), scored.begin() + k, scored.end(), better);
    scored.resize(k);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return scored;
}

LshIndex::QueryResult LshIndex::query(std::span<const double> v, int k, int exclude_id) const {
  QueryResult out;
  if (vectors_.empty() || k < 1) return out;
  if (static_cast<int>(v.size()) != dimension_)
    throw DimensionMismatch("query has " + std::to_string(v.size()) +
                            " components, expected " + std::to_string(dimension_));

  // bucket order: tables in order, first occurrence wins
  std::vector<int> candidates;
  std::unordered_map<int, char> seen;
  for (int t = 0; t < config_.num_tables; ++t) {
    auto bucket = tables_[t].find(key_of(v, t));
    if (bucket == tables_[t].end()) continue;
    for (int id : bucket->second) {
      if (id == exclude_id) continue;
      if (seen.emplace(id, 1).second) candidates.push_back(id);
    }
  }
  out.candidates_examined = candidates.size();

  if (config_.rerank) {
    out.hits = rerank_topk(vectors_, slot_of_id_, candidates, v, k);
  } else {
    if (static_cast<int>(candidates.size()) > k) candidates.resize(k);
    for (int id : candidates) out.hits.push_back({id, 0.0});
  }
  return out;
}

namespace {

LshNeighborhood neighborhood_from_vectors(
    std::vector<std::pair<int, std::vector<double>>> vectors, Axis axis, int entity_count,
    const LshConfig& config, int n_max) {
  LshIndex index(std::move(vectors), config);
  LshNeighborhood out;
  out.index.axis = axis;
  out.index.neighbors.resize(entity_count);

  const auto& vecs = index.vectors();
  if (vecs.size() <= 1) return out;
  double denom = static_cast<double>(vecs.size() - 1);
  double fraction_sum = 0.0;
  for (const auto& [id, v] : vecs) {
    auto result = index.query(v, n_max, id);
    fraction_sum += static_cast<double>(result.candidates_examined) / denom;
    out.index.neighbors[id] = std::move(result.hits);
  }
  out.mean_candidate_fraction = fraction_sum / static_cast<double>(vecs.size());
  return out;
}

}  // namespace

LshNeighborhood lsh_neighborhood_index(const RatingsMatrix& matrix, Axis axis,
                                       const LshConfig& config, int n_max) {
  int count = axis == Axis::user ? matrix.num_users() : matrix.num_items();
  int dim = axis == Axis::user ? matrix.num_items() : matrix.num_users();
  std::vector<std::pair<int, std::vector<double>>> vectors;
  vectors.reserve(count);
  for (int e = 0; e < count; ++e) {
    auto row = axis == Axis::user ? matrix.items_of(e) : matrix.users_of(e);
    if (row.empty()) continue;  // unrated entities have no vector to hash
    std::vector<double> dense(dim, 0.0);
    for (auto [j, r] : row) dense[j] = r;
    vectors.emplace_back(e, std::move(dense));
  }
  return neighborhood_from_vectors(std::move(vectors), axis, count, config, n_max);
}

LshNeighborhood lsh_neighborhood_index(
    const std::vector<std::pair<int, std::vector<double>>>& vectors, Axis axis,
    const LshConfig& config, int n_max) {
  int count = 0;
  for (const auto& [id, _] : vectors) count = std::max(count, id + 1);
  return neighborhood_from_vectors(vectors, axis, count, config, n_max);
}

LshNeighborhood lsh_neighborhood_index(const EmbeddingTable& embeddings, Axis axis,
                                       const LshConfig& config, int n_max) {
  std::vector<std::pair<int, std::vector<double>>> vectors(embeddings.vectors.begin(),
                                                           embeddings.vectors.end());
  return lsh_neighborhood_index(vectors, axis, config, n_max);
}

}  // namespace cfkit
