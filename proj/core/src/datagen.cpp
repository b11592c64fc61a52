#include "cfkit/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "cfkit/rng.hpp"

namespace cfkit {

namespace {

const char* kGenreNames[] = {"Action",   "Adventure", "Animation", "Children",
                             "Comedy",   "Crime",     "Documentary", "Drama",
                             "Fantasy",  "FilmNoir",  "Horror",    "Musical",
                             "Mystery",  "Romance",   "SciFi",     "Thriller",
                             "War",      "Western"};

std::vector<double> unit_gaussian(int dim, rng::Engine& eng) {
  std::vector<double> v(dim);
  rng::fill_gaussian(v, eng);
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm == 0.0) {
    v[0] = 1.0;
    norm = 1.0;
  }
  for (double& x : v) x /= norm;
  return v;
}

}  // namespace

SyntheticDataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.num_users < 1 || spec.num_items < 1 || spec.latent_dim < 1)
    throw std::invalid_argument("synthetic spec dimensions must be positive");
  long long cells = static_cast<long long>(spec.num_users) * spec.num_items;
  if (spec.num_ratings > cells)
    throw std::invalid_argument("more ratings requested than user-item cells");

  const int d = spec.latent_dim;
  const int genres = std::min(spec.num_genres,
                              static_cast<int>(std::size(kGenreNames)));
  SyntheticDataset out;
  for (int g = 0; g < genres; ++g) out.genre_names.push_back(kGenreNames[g]);

  auto eng = rng::engine_for(spec.seed, 0xda7a6e9u);

  std::vector<std::vector<double>> proto(genres);
  for (auto& p : proto) p = unit_gaussian(d, eng);

  // items: one or two genres; factors cluster around genre prototypes
  out.features.vocab = out.genre_names;
  out.features.items.resize(spec.num_items);
  out.item_vectors.resize(spec.num_items);
  std::vector<int> primary_genre(spec.num_items);
  for (int i = 0; i < spec.num_items; ++i) {
    int g1 = static_cast<int>(rng::uniform_index(eng, genres));
    primary_genre[i] = g1;
    int g2 = -1;
    if (rng::uniform01(eng) < 0.35) {
      g2 = static_cast<int>(rng::uniform_index(eng, genres));
      if (g2 == g1) g2 = -1;
    }
    auto& q = out.item_vectors[i];
    q.assign(d, 0.0);
    for (int f = 0; f < d; ++f) q[f] = proto[g1][f];
    if (g2 >= 0)
      for (int f = 0; f < d; ++f) q[f] = 0.75 * q[f] + 0.5 * proto[g2][f];
    std::vector<double> jitter(d);
    rng::fill_gaussian(jitter, eng);
    double norm = 0.0;
    for (int f = 0; f < d; ++f) {
      q[f] += 0.35 * jitter[f];
      norm += q[f] * q[f];
    }
    norm = std::sqrt(norm);
    for (int f = 0; f < d; ++f) q[f] /= norm;

    out.features.items[i].emplace_back(g1, 1.0);
    if (g2 >= 0) out.features.items[i].emplace_back(g2, 1.0);
    std::sort(out.features.items[i].begin(), out.features.items[i].end());
  }

  // users: a favourite genre plus idiosyncratic taste
  std::vector<std::vector<double>> user_vec(spec.num_users);
  for (int u = 0; u < spec.num_users; ++u) {
    int fav = static_cast<int>(rng::uniform_index(eng, genres));
    std::vector<double> taste(d);
    rng::fill_gaussian(taste, eng);
    auto& p = user_vec[u];
    p.resize(d);
    for (int f = 0; f < d; ++f) p[f] = 1.2 * proto[fav][f] + 0.55 * taste[f];
  }

  // heavy-tailed user activity summing exactly to num_ratings
  std::vector<double> activity(spec.num_users);
  for (double& a : activity) a = std::exp(1.1 * rng::gaussian(eng));
  double activity_sum = std::accumulate(activity.begin(), activity.end(), 0.0);
  long long base_total = static_cast<long long>(spec.min_user_ratings) * spec.num_users;
  long long extra_total = std::max<long long>(0, spec.num_ratings - base_total);
  std::vector<int> degree(spec.num_users, spec.min_user_ratings);
  std::vector<std::pair<double, int>> remainders(spec.num_users);
  long long assigned = 0;
  for (int u = 0; u < spec.num_users; ++u) {
    double share = extra_total * activity[u] / activity_sum;
    int whole = static_cast<int>(share);
    int capacity = spec.num_items - degree[u];
    whole = std::min(whole, capacity);
    degree[u] += whole;
    assigned += whole;
    remainders[u] = {share - whole, u};
  }
  std::sort(remainders.rbegin(), remainders.rend());
  for (int r = 0; assigned < extra_total && r < spec.num_users; ++r) {
    int u = remainders[r].second;
    if (degree[u] < spec.num_items) {
      ++degree[u];
      ++assigned;
    }
  }
  // trim any overshoot from the heaviest users (possible when capacity bound)
  for (int u = 0; assigned > extra_total && u < spec.num_users; ++u) {
    int spare = degree[u] - spec.min_user_ratings;
    int cut = static_cast<int>(std::min<long long>(spare, assigned - extra_total));
    degree[u] -= cut;
    assigned -= cut;
  }

  // zipf-ish item popularity over a shuffled rank order
  std::vector<int> rank(spec.num_items);
  std::iota(rank.begin(), rank.end(), 0);
  rng::shuffle(rank, eng);
  std::vector<double> popularity(spec.num_items);
  for (int i = 0; i < spec.num_items; ++i)
    popularity[rank[i]] = std::pow(static_cast<double>(i + 1), -0.8);

  // per user: weighted sample of `degree[u]` distinct items
  // (Efraimidis-Spirakis keys), then a planted-model rating per pick
  std::vector<Rating> triples;
  triples.reserve(static_cast<size_t>(spec.num_ratings));
  std::vector<std::pair<double, int>> keys(spec.num_items);
  for (int u = 0; u < spec.num_users; ++u) {
    int deg = degree[u];
    if (deg <= 0) continue;
    for (int i = 0; i < spec.num_items; ++i) {
      double unif = rng::uniform01(eng);
      while (unif <= 0.0) unif = rng::uniform01(eng);
      keys[i] = {std::pow(unif, 1.0 / popularity[i]), i};
    }
    std::partial_sort(keys.begin(), keys.begin() + deg, keys.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first; });
    for (int j = 0; j < deg; ++j) {
      int item = keys[j].second;
      double affinity = 0.0;
      for (int f = 0; f < d; ++f) affinity += user_vec[u][f] * out.item_vectors[item][f];
      double raw = 3.6 + affinity + spec.rating_noise * rng::gaussian(eng);
      double stars = std::clamp(std::round(raw), 1.0, 5.0);
      triples.push_back({u, item, stars});
    }
  }

  out.ratings = RatingsMatrix::from_triples(triples, spec.num_users, spec.num_items);
  for (int u = 0; u < spec.num_users; ++u) out.users.intern(u + 1);
  for (int i = 0; i < spec.num_items; ++i) out.items.intern(i + 1);
  return out;
}

void write_movielens_style(const SyntheticDataset& data, const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);

  std::ofstream udata(fs::path(dir) / "u.data", std::ios::binary);
  if (!udata) throw Error("cannot write u.data under " + dir);
  long long timestamp = 874965758;
  for (const Rating& r : data.ratings.entries()) {
    udata << data.users.to_external[r.user] << '\t' << data.items.to_external[r.item]
          << '\t' << static_cast<int>(r.value) << '\t' << timestamp++ << '\n';
  }

  std::ofstream movies(fs::path(dir) / "movies.dat", std::ios::binary);
  if (!movies) throw Error("cannot write movies.dat under " + dir);
  for (int i = 0; i < data.features.num_items(); ++i) {
    movies << data.items.to_external[i] << "::Title " << data.items.to_external[i]
           << " (1996)::";
    const auto& attrs = data.features.items[i];
    for (size_t a = 0; a < attrs.size(); ++a) {
      if (a) movies << '|';
      movies << data.features.vocab[attrs[a].first];
    }
    movies << '\n';
  }

  std::ofstream emb(fs::path(dir) / "embeddings.csv", std::ios::binary);
  if (!emb) throw Error("cannot write embeddings.csv under " + dir);
  emb << "id";
  if (!data.item_vectors.empty())
    for (size_t f = 0; f < data.item_vectors.front().size(); ++f) emb << ",v" << f + 1;
  emb << '\n';
  char buf[64];
  for (size_t i = 0; i < data.item_vectors.size(); ++i) {
    emb << data.items.to_external[i];
    for (double x : data.item_vectors[i]) {
      std::snprintf(buf, sizeof(buf), "%.9g", x);
      emb << ',' << buf;
    }
    emb << '\n';
  }
}

}  // namespace cfkit
