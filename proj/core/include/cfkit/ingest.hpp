#pragma once

#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "cfkit/ratings.hpp"

namespace cfkit {

enum class RatingsFormat { dat_1m, csv_latest, u_data_100k };

RatingsFormat ratings_format_from_name(const std::string& name);
std::string to_string(RatingsFormat fmt);

// Bijection between external ids seen in a file and [0, count), assigned in
// first-seen order.
struct IdMap {
  std::vector<long long> to_external;
  std::unordered_map<long long, int> to_internal;

  int intern(long long ext) {
    auto [it, inserted] = to_internal.try_emplace(ext, static_cast<int>(to_external.size()));
    if (inserted) to_external.push_back(ext);
    return it->second;
  }
  size_t size() const { return to_external.size(); }
};

struct ParsedRatings {
  RatingsMatrix matrix;
  IdMap users;
  IdMap items;
  std::vector<std::string> warnings;  // one entry per skipped line, with line number
  size_t lines_total = 0;
  size_t lines_skipped = 0;
};

// Parses a ratings file. Unparseable (or duplicate) lines are skipped and
// reported in warnings; timestamps are parsed and discarded.
ParsedRatings parse_movielens(const std::string& path, RatingsFormat format);

// Writes `user_id,item_id,rating` rows (csv_latest layout, external ids).
// Re-parsing the output yields an identical entry set.
void export_ratings_csv(const RatingsMatrix& matrix, const IdMap& users,
                        const IdMap& items, const std::string& path);

// Item attribute vectors over a named vocabulary, indexed by internal item
// id. Rows are sparse (attribute index, value) pairs sorted by index.
struct FeatureTable {
  std::vector<std::string> vocab;
  std::vector<std::vector<std::pair<int, double>>> items;
  std::vector<std::string> warnings;

  int num_items() const { return static_cast<int>(items.size()); }
  int vocab_size() const { return static_cast<int>(vocab.size()); }
};

enum class FeaturesFormat { movielens_genres, csv_key_value };

FeaturesFormat features_format_from_name(const std::string& name);

// movielens_genres: `MovieID::Title::Genre1|Genre2` lines, each listed genre
// becomes a binary attribute. csv_key_value: header `item_id,attr,value`.
// Lines naming items absent from `items` produce UnknownItem warnings and are
// dropped; items with no listed attributes keep a zero vector (warned).
FeatureTable parse_item_features(const std::string& path, FeaturesFormat format,
                                 const IdMap& items);

// Unit-normalized dense vectors keyed by internal id.
struct EmbeddingTable {
  int dimension = 0;
  std::map<int, std::vector<double>> vectors;
};

// CSV with header `id,v1,...,vd`; every row must have the same dimension and
// a nonzero norm. Ids are translated through `ids`; rows for unknown ids are
// skipped with a warning appended to *warnings when given.
EmbeddingTable load_embeddings(const std::string& path, const IdMap& ids,
                               std::vector<std::string>* warnings = nullptr);

}  // namespace cfkit
