#include "cfkit/similarity.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "cfkit/threading.hpp"

namespace cfkit {

SimKind sim_kind_from_name(const std::string& name) {
  if (name == "cosine") return SimKind::cosine;
  if (name == "pearson") return SimKind::pearson;
  if (name == "semantic_cosine") return SimKind::semantic_cosine;
  throw UnknownFormat(name);
}

std::string to_string(SimKind kind) {
  switch (kind) {
    case SimKind::cosine: return "cosine";
    case SimKind::pearson: return "pearson";
    case SimKind::semantic_cosine: return "semantic_cosine";
  }
  return "?";
}

namespace {

struct Overlap {
  int count = 0;
  double dot = 0.0;  // sum over co-rated ids of a_i * b_i
  std::vector<std::pair<double, double>> pairs;
};

Overlap walk_overlap(SparseVec a, SparseVec b) {
  Overlap o;
  size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i].first < b[j].first) {
      ++i;
    } else if (a[i].first > b[j].first) {
      ++j;
    } else {
      double x = a[i].second, y = b[j].second;
      ++o.count;
      o.dot += x * y;
      o.pairs.emplace_back(x, y);
      ++i;
      ++j;
    }
  }
  return o;
}

double norm_sq(SparseVec v) {
  double s = 0.0;
  for (auto [_, x] : v) s += x * x;
  return s;
}

inline double shrink(double score, int overlap, double shrinkage) {
  if (shrinkage <= 0.0) return score;
  return score * (static_cast<double>(overlap) / (overlap + shrinkage));
}

}  // namespace

std::optional<double> similarity(SparseVec a, SparseVec b, const SimilarityMetric& metric,
                                 SimFailure* why) {
  auto fail = [&](SimFailure f) -> std::optional<double> {
    if (why) *why = f;
    return std::nullopt;
  };
  if (why) *why = SimFailure::none;

  Overlap o = walk_overlap(a, b);

  if (metric.kind == SimKind::pearson) {
    if (o.count < std::max(metric.min_overlap, 2)) return fail(SimFailure::insufficient_overlap);
    double mean_a = 0.0, mean_b = 0.0;
    for (auto [x, y] : o.pairs) {
      mean_a += x;
      mean_b += y;
    }
    mean_a /= o.count;
    mean_b /= o.count;
    double cov = 0.0, var_a = 0.0, var_b = 0.0;
    for (auto [x, y] : o.pairs) {
      cov += (x - mean_a) * (y - mean_b);
      var_a += (x - mean_a) * (x - mean_a);
      var_b += (y - mean_b) * (y - mean_b);
    }
    if (var_a <= 0.0 || var_b <= 0.0) return fail(SimFailure::constant_vector);
    return shrink(cov / std::sqrt(var_a * var_b), o.count, metric.shrinkage);
  }

  // cosine over full sparse vectors; zero overlap means a zero dot product
  if (o.count < metric.min_overlap && o.count > 0) return fail(SimFailure::insufficient_overlap);
  double na = norm_sq(a), nb = norm_sq(b);
  if (na == 0.0 || nb == 0.0) return fail(SimFailure::zero_vector);
  if (o.count == 0) return 0.0;
  return shrink(o.dot / std::sqrt(na * nb), o.count, metric.shrinkage);
}

namespace {

std::vector<Neighbor> top_n(std::vector<Neighbor>& scored, int n_max) {
  auto better = [](const Neighbor& x, const Neighbor& y) {
    return x.score != y.score ? x.score > y.score : x.id < y.id;
  };
  if (static_cast<int>(scored.size()) > n_max) {
    std::partial_sort(scored.begin(), scored.begin() + n_max, scored.end(), better);
    scored.resize(n_max);
  } else {
    std::sort(scored.begin(), scored.end(), better);
  }
  return scored;
}

}  // namespace

SimilarityIndex build_index(const RatingsMatrix& matrix, Axis axis,
                            const SimilarityMetric& metric, int n_max,
                            const EmbeddingTable* embeddings, int threads) {
  if (n_max < 1) throw std::invalid_argument("n_max must be >= 1");
  if (metric.kind == SimKind::semantic_cosine && !embeddings) throw MissingEmbeddings();

  int count = axis == Axis::user ? matrix.num_users() : matrix.num_items();
  SimilarityIndex index;
  index.axis = axis;
  index.neighbors.resize(count);

  auto row_of = [&](int e) {
    return axis == Axis::user ? matrix.items_of(e) : matrix.users_of(e);
  };
  auto col_of = [&](int other) {
    return axis == Axis::user ? matrix.users_of(other) : matrix.items_of(other);
  };

  if (metric.kind == SimKind::semantic_cosine) {
    std::vector<int> ids;
    ids.reserve(embeddings->vectors.size());
    for (const auto& [id, _] : embeddings->vectors)
      if (id < count) ids.push_back(id);

    parallel_for(static_cast<int>(ids.size()), threads, [&](int idx) {
      int e = ids[idx];
      const auto& ve = embeddings->vectors.at(e);
      std::vector<Neighbor> scored;
      scored.reserve(ids.size());
      for (int other : ids) {
        if (other == e) continue;
        const auto& vo = embeddings->vectors.at(other);
        double dot = 0.0;  // vectors are unit-normalized on load
        for (size_t d = 0; d < ve.size(); ++d) dot += ve[d] * vo[d];
        scored.push_back({other, dot});
      }
      index.neighbors[e] = top_n(scored, n_max);
    });
    return index;
  }

  parallel_for(count, threads, [&](int e) {
    auto row = row_of(e);
    if (row.empty()) return;

    // candidates: every entity sharing at least one co-rating
    std::vector<char> stamp(count, 0);
    std::vector<int> candidates;
    for (auto [other_axis_id, _] : row) {
      for (auto [cand, __] : col_of(other_axis_id)) {
        if (cand != e && !stamp[cand]) {
          stamp[cand] = 1;
          candidates.push_back(cand);
        }
      }
    }
    std::sort(candidates.begin(), candidates.end());

    std::vector<Neighbor> scored;
    scored.reserve(candidates.size());
    for (int cand : candidates) {
      auto s = similarity(row, row_of(cand), metric);
      if (s) scored.push_back({cand, *s});
    }
    index.neighbors[e] = top_n(scored, n_max);
  });
  return index;
}

std::optional<double> predict_from_neighbors(const RatingsMatrix& matrix,
                                             const SimilarityIndex& index, int user,
                                             int item, int k_neighbors) {
  if (k_neighbors < 1) throw std::invalid_argument("k_neighbors must be >= 1");
  if (user < 0 || user >= matrix.num_users() || item < 0 || item >= matrix.num_items())
    return std::nullopt;

  int entity = index.axis == Axis::user ? user : item;
  if (entity >= index.entity_count()) return std::nullopt;

  double num = 0.0, den = 0.0;
  int used = 0;

  if (index.axis == Axis::user) {
    if (matrix.user_degree(user) == 0) return std::nullopt;
    double mu_u = matrix.user_mean(user);
    for (const Neighbor& nb : index.neighbors[entity]) {
      if (nb.score <= 0.0) break;  // sorted descending; negatives are excluded
      auto r = matrix.find(nb.id, item);
      if (!r) continue;
      num += nb.score * (*r - matrix.user_mean(nb.id));
      den += std::abs(nb.score);
      if (++used == k_neighbors) break;
    }
    if (den == 0.0) return std::nullopt;
    return matrix.clamp_to_range(mu_u + num / den);
  }

  for (const Neighbor& nb : index.neighbors[entity]) {
    if (nb.score <= 0.0) break;
    auto r = matrix.find(user, nb.id);
    if (!r) continue;
    num += nb.score * *r;
    den += std::abs(nb.score);
    if (++used == k_neighbors) break;
  }
  if (den == 0.0) return std::nullopt;
  return matrix.clamp_to_range(num / den);
}

void save_index_csv(const SimilarityIndex& index, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << "axis," << (index.axis == Axis::user ? "user" : "item") << '\n';
  out << "entity_id,neighbor_id,score\n";
  char buf[64];
  for (int e = 0; e < index.entity_count(); ++e) {
    for (const Neighbor& nb : index.neighbors[e]) {
      std::snprintf(buf, sizeof(buf), "%.17g", nb.score);
      out << e << ',' << nb.id << ',' << buf << '\n';
    }
  }
}

SimilarityIndex load_index_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open index file: " + path);
  SimilarityIndex index;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line.rfind("axis,", 0) == 0) {
      index.axis = line.substr(5) == "item" ? Axis::item : Axis::user;
      continue;
    }
    if (line.rfind("entity_id", 0) == 0) continue;
    int e = 0, id = 0;
    double score = 0.0;
    if (std::sscanf(line.c_str(), "%d,%d,%lf", &e, &id, &score) != 3)
      throw MalformedLine(line_no, line);
    if (e >= static_cast<int>(index.neighbors.size())) index.neighbors.resize(e + 1);
    index.neighbors[e].push_back({id, score});
  }
  return index;
}

}  // namespace cfkit
