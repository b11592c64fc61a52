#include "cfkit/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

namespace cfkit {

namespace {

std::vector<std::string> split_on(const std::string& line, const std::string& sep) {
  std::vector<std::string> out;
  size_t pos = 0;
  while (true) {
    size_t next = line.find(sep, pos);
    if (next == std::string::npos) {
      out.push_back(line.substr(pos));
      break;
    }
    out.push_back(line.substr(pos, next - pos));
    pos = next + sep.size();
  }
  return out;
}

bool parse_ll(const std::string& s, long long* out) {
  try {
    size_t used = 0;
    *out = std::stoll(s, &used);
    return used == s.size() && !s.empty();
  } catch (...) {
    return false;
  }
}

bool parse_double(const std::string& s, double* out) {
  try {
    size_t used = 0;
    *out = std::stod(s, &used);
    return used == s.size() && !s.empty();
  } catch (...) {
    return false;
  }
}

std::string trim(const std::string& s) {
  size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

RatingsFormat ratings_format_from_name(const std::string& name) {
  if (name == "dat_1m") return RatingsFormat::dat_1m;
  if (name == "csv_latest") return RatingsFormat::csv_latest;
  if (name == "u_data_100k") return RatingsFormat::u_data_100k;
  throw UnknownFormat(name);
}

std::string to_string(RatingsFormat fmt) {
  switch (fmt) {
    case RatingsFormat::dat_1m: return "dat_1m";
    case RatingsFormat::csv_latest: return "csv_latest";
    case RatingsFormat::u_data_100k: return "u_data_100k";
  }
  return "?";
}

ParsedRatings parse_movielens(const std::string& path, RatingsFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open ratings file: " + path);

  ParsedRatings out;
  std::vector<Rating> triples;
  std::set<std::pair<int, int>> seen;
  std::string line;
  size_t line_no = 0;
  bool expect_header = format == RatingsFormat::csv_latest;

  while (std::getline(in, line)) {
    ++line_no;
    ++out.lines_total;
    line = trim(line);
    if (line.empty()) {
      --out.lines_total;  // blank lines don't count toward the entry budget
      continue;
    }
    if (expect_header) {
      expect_header = false;
      --out.lines_total;
      continue;  // header row
    }

    std::vector<std::string> fields;
    switch (format) {
      case RatingsFormat::dat_1m: fields = split_on(line, "::"); break;
      case RatingsFormat::csv_latest: fields = split_on(line, ","); break;
      case RatingsFormat::u_data_100k: fields = split_on(line, "\t"); break;
    }

    long long ext_user = 0, ext_item = 0;
    double rating = 0.0;
    bool ok = fields.size() >= 3 && fields.size() <= 4 &&
              parse_ll(trim(fields[0]), &ext_user) && parse_ll(trim(fields[1]), &ext_item) &&
              parse_double(trim(fields[2]), &rating) && std::isfinite(rating) &&
              ext_user >= 0 && ext_item >= 0;
    if (!ok) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": unparseable: " + line);
      ++out.lines_skipped;
      continue;
    }
    int u = out.users.intern(ext_user);
    int i = out.items.intern(ext_item);
    if (!seen.emplace(u, i).second) {
      out.warnings.push_back("line " + std::to_string(line_no) + ": duplicate (user=" +
                             std::to_string(ext_user) + ", item=" + std::to_string(ext_item) + ")");
      ++out.lines_skipped;
      continue;
    }
    triples.push_back({u, i, rating});
  }

  if (triples.empty())
    out.warnings.push_back("no valid ratings found in " + path);
  out.matrix = RatingsMatrix::from_triples(triples, static_cast<int>(out.users.size()),
                                           static_cast<int>(out.items.size()));
  return out;
}

void export_ratings_csv(const RatingsMatrix& matrix, const IdMap& users,
                        const IdMap& items, const std::string& path) {
  std::ofstream outf(path, std::ios::binary);
  if (!outf) throw Error("cannot open for writing: " + path);
  outf << "user_id,item_id,rating\n";
  char buf[64];
  for (const Rating& r : matrix.entries()) {
    std::snprintf(buf, sizeof(buf), "%.17g", r.value);
    outf << users.to_external[r.user] << ',' << items.to_external[r.item] << ',' << buf
         << '\n';
  }
}

FeaturesFormat features_format_from_name(const std::string& name) {
  if (name == "movielens_genres") return FeaturesFormat::movielens_genres;
  if (name == "csv_key_value") return FeaturesFormat::csv_key_value;
  throw UnknownFormat(name);
}

FeatureTable parse_item_features(const std::string& path, FeaturesFormat format,
                                 const IdMap& items) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open features file: " + path);

  FeatureTable out;
  out.items.resize(items.size());
  std::unordered_map<std::string, int> vocab_index;
  auto intern_attr = [&](const std::string& name) {
    auto [it, inserted] = vocab_index.try_emplace(name, static_cast<int>(out.vocab.size()));
    if (inserted) out.vocab.push_back(name);
    return it->second;
  };

  std::string line;
  size_t line_no = 0;
  bool expect_header = format == FeaturesFormat::csv_key_value;
  std::vector<char> item_touched(items.size(), 0);

  while (std::getline(in, line)) {
    ++line_no;
    // MovieLens 1M carries legacy (non-UTF8) bytes in titles; they pass
    // through untouched since only the id and genre fields are read.
    line = trim(line);
    if (line.empty()) continue;
    if (expect_header) {
      expect_header = false;
      continue;
    }

    if (format == FeaturesFormat::movielens_genres) {
      auto fields = split_on(line, "::");
      long long ext_item = 0;
      if (fields.size() != 3 || !parse_ll(trim(fields[0]), &ext_item)) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": unparseable: " + line);
        continue;
      }
      auto it = items.to_internal.find(ext_item);
      if (it == items.to_internal.end()) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": unknown item " +
                               std::to_string(ext_item));
        continue;
      }
      int internal = it->second;
      item_touched[internal] = 1;
      std::string genres = trim(fields[2]);
      if (genres.empty()) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": item " +
                               std::to_string(ext_item) + " lists no genres");
        continue;
      }
      for (const std::string& g : split_on(genres, "|")) {
        std::string name = trim(g);
        if (name.empty()) continue;
        int a = intern_attr(name);
        auto& row = out.items[internal];
        bool dup = std::any_of(row.begin(), row.end(),
                               [a](const auto& p) { return p.first == a; });
        if (!dup) row.emplace_back(a, 1.0);
      }
      if (out.items[internal].empty())
        out.warnings.push_back("line " + std::to_string(line_no) + ": item " +
                               std::to_string(ext_item) + " lists no genres");
    } else {
      auto fields = split_on(line, ",");
      long long ext_item = 0;
      double value = 0.0;
      if (fields.size() != 3 || !parse_ll(trim(fields[0]), &ext_item) ||
          !parse_double(trim(fields[2]), &value) || !std::isfinite(value)) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": unparseable: " + line);
        continue;
      }
      auto it = items.to_internal.find(ext_item);
      if (it == items.to_internal.end()) {
        out.warnings.push_back("line " + std::to_string(line_no) + ": unknown item " +
                               std::to_string(ext_item));
        continue;
      }
      item_touched[it->second] = 1;
      int a = intern_attr(trim(fields[1]));
      out.items[it->second].emplace_back(a, value);
    }
  }

  for (auto& row : out.items) {
    std::sort(row.begin(), row.end());
    row.erase(std::unique(row.begin(), row.end(),
                          [](const auto& x, const auto& y) { return x.first == y.first; }),
              row.end());
  }
  return out;
}

EmbeddingTable load_embeddings(const std::string& path, const IdMap& ids,
                               std::vector<std::string>* warnings) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open embeddings file: " + path);

  EmbeddingTable out;
  std::string line;
  size_t line_no = 0;
  bool header_done = false;

  while (std::getline(in, line)) {
    ++line_no;
    line = trim(line);
    if (line.empty()) continue;
    if (!header_done) {
      header_done = true;
      continue;
    }
    auto fields = split_on(line, ",");
    long long ext_id = 0;
    if (fields.size() < 2 || !parse_ll(trim(fields[0]), &ext_id))
      throw MalformedLine(line_no, line);

    int dim = static_cast<int>(fields.size()) - 1;
    if (out.dimension == 0)
      out.dimension = dim;
    else if (dim != out.dimension)
      throw DimensionMismatch("embedding row " + std::to_string(line_no) + " has " +
                              std::to_string(dim) + " components, expected " +
                              std::to_string(out.dimension));

    std::vector<double> v(dim);
    double norm_sq = 0.0;
    for (int j = 0; j < dim; ++j) {
      if (!parse_double(trim(fields[j + 1]), &v[j]) || !std::isfinite(v[j]))
        throw MalformedLine(line_no, line);
      norm_sq += v[j] * v[j];
    }
    if (norm_sq == 0.0) throw ZeroVector(ext_id);

    auto it = ids.to_internal.find(ext_id);
    if (it == ids.to_internal.end()) {
      if (warnings)
        warnings->push_back("line " + std::to_string(line_no) + ": unknown id " +
                            std::to_string(ext_id));
      continue;
    }
    double inv = 1.0 / std::sqrt(norm_sq);
    for (double& x : v) x *= inv;
    out.vectors[it->second] = std::move(v);
  }
  return out;
}

}  // namespace cfkit
