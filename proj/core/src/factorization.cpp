#include "cfkit/factorization.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "als_kernels.hpp"
#include "cfkit/rng.hpp"
#include "cfkit/threading.hpp"

namespace cfkit {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void check_dims(const FactorModel& model, const RatingsMatrix& train) {
  if (model.num_users != train.num_users() || model.num_items != train.num_items())
    throw DimensionMismatch("model is " + std::to_string(model.num_users) + "x" +
                            std::to_string(model.num_items) + ", matrix is " +
                            std::to_string(train.num_users()) + "x" +
                            std::to_string(train.num_items()));
}

bool converged(const std::vector<double>& sweep_objectives, double tol) {
  size_t n = sweep_objectives.size();
  if (tol <= 0.0 || n < 2) return false;
  double prev = sweep_objectives[n - 2], cur = sweep_objectives[n - 1];
  if (prev <= 0.0) return true;
  return (prev - cur) / prev < tol;
}

}  // namespace

double FactorModel::predict(int user, int item) const {
  if (user < 0 || user >= num_users || item < 0 || item >= num_items) return global_mean;
  return std::clamp(dot(user, item), rating_min, rating_max);
}

double objective(const FactorModel& model, const RatingsMatrix& train) {
  check_dims(model, train);
  double sse = 0.0;
  for (const Rating& r : train.entries()) {
    double e = r.value - model.dot(r.user, r.item);
    sse += e * e;
  }
  double reg = 0.0;
  for (double x : model.P) reg += x * x;
  for (double x : model.Q) reg += x * x;
  return sse + model.lambda * reg;
}

FactorModel init_factors(const RatingsMatrix& train, const TrainConfig& config) {
  if (config.k < 1) throw std::invalid_argument("k must be >= 1");
  FactorModel model;
  model.num_users = train.num_users();
  model.num_items = train.num_items();
  model.k = config.k;
  model.lambda = config.lambda;
  model.seed = config.seed;
  model.global_mean = train.global_mean();
  model.rating_min = train.rating_min();
  model.rating_max = train.rating_max();
  model.P.resize(static_cast<size_t>(model.num_users) * config.k);
  model.Q.resize(static_cast<size_t>(model.num_items) * config.k);

  double scale = config.init_scale / std::sqrt(static_cast<double>(config.k));
  auto eng = rng::engine_for(config.seed, 0xfac70125u);
  for (double& x : model.P) x = rng::uniform(eng, -scale, scale);
  for (double& x : model.Q) x = rng::uniform(eng, -scale, scale);
  return model;
}

FactorModel train_sgd(const RatingsMatrix& train, const TrainConfig& config,
                      TrainTrace* trace) {
  if (train.empty()) throw EmptyMatrix();
  if (config.learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");

  FactorModel model = init_factors(train, config);
  const auto& entries = train.entries();
  std::vector<size_t> order(entries.size());
  std::iota(order.begin(), order.end(), size_t{0});
  auto eng = rng::engine_for(config.seed, 0x5bd0123u);

  std::vector<double> objectives;
  std::vector<double> p_old(config.k);
  const double lr = config.learning_rate;
  const double lam = config.lambda;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    double t0 = now_seconds();
    rng::shuffle(order, eng);
    for (size_t idx : order) {
      const Rating& r = entries[idx];
      double* p = model.user_row(r.user);
      double* q = model.item_row(r.item);
      double e = r.value;
      for (int f = 0; f < config.k; ++f) e -= p[f] * q[f];
      std::memcpy(p_old.data(), p, sizeof(double) * config.k);
      for (int f = 0; f < config.k; ++f) {
        p[f] += lr * (e * q[f] - lam * p_old[f]);
        q[f] += lr * (e * p_old[f] - lam * q[f]);
      }
    }
    double obj = objective(model, train);
    objectives.push_back(obj);
    if (trace) {
      trace->objective.push_back(obj);
      trace->round_seconds.push_back(now_seconds() - t0);
    }
    if (!std::isfinite(obj)) throw Diverged(epoch, objectives);
    if (converged(objectives, config.convergence_tol)) break;
  }
  return model;
}

FactorModel train_als(const RatingsMatrix& train, const TrainConfig& config,
                      TrainTrace* trace, int threads) {
  if (train.empty()) throw EmptyMatrix();

  FactorModel model = init_factors(train, config);
  const int k = config.k;
  const int m = model.num_users;
  const int n = model.num_items;
  std::vector<double> objectives;

  for (int sweep = 0; sweep < config.epochs; ++sweep) {
    double t0 = now_seconds();
    bool jittered = false;

    if (threads > 1 && m > 1) {
      std::vector<char> flags(static_cast<size_t>(threads), 0);
      int chunk = (m + threads - 1) / threads;
      parallel_for(threads, threads, [&](int w) {
        int lo = w * chunk, hi = std::min(m, lo + chunk);
        if (lo < hi)
          flags[w] = als::user_half_step(train, lo, hi, model.Q, model.P, k, config.lambda);
      });
      for (char f : flags) jittered |= f != 0;
    } else {
      jittered = als::user_half_step(train, 0, m, model.Q, model.P, k, config.lambda);
    }
    if (trace) trace->objective.push_back(objective(model, train));

    auto partials = als::accumulate_item_partials(train, 0, m, model.P, k);
    jittered |= als::item_half_step_merge({std::move(partials)}, n, model.Q, k, config.lambda);

    double obj = objective(model, train);
    objectives.push_back(obj);
    if (trace) {
      trace->objective.push_back(obj);
      trace->round_seconds.push_back(now_seconds() - t0);
      if (jittered && (trace->notes.empty() || trace->notes.back().rfind("jitter", 0) != 0))
        trace->notes.push_back("jitter " + std::to_string(als::kJitter) +
                               " applied to a singular system at sweep " +
                               std::to_string(sweep));
    }
    if (!std::isfinite(obj)) throw Diverged(sweep, objectives);
    if (converged(objectives, config.convergence_tol)) break;
  }
  return model;
}

FactorModel train(const RatingsMatrix& train_matrix, const TrainConfig& config,
                  TrainTrace* trace, int threads) {
  return config.optimizer == TrainConfig::Optimizer::sgd
             ? train_sgd(train_matrix, config, trace)
             : train_als(train_matrix, config, trace, threads);
}

std::pair<std::vector<double>, std::vector<double>> sgd_gradient(const FactorModel& model,
                                                                 int user, int item,
                                                                 double rating) {
  const double* p = model.user_row(user);
  const double* q = model.item_row(item);
  double e = rating;
  for (int f = 0; f < model.k; ++f) e -= p[f] * q[f];

  std::vector<double> gp(model.k), gq(model.k);
  for (int f = 0; f < model.k; ++f) {
    gp[f] = -2.0 * e * q[f] + 2.0 * model.lambda * p[f];
    gq[f] = -2.0 * e * p[f] + 2.0 * model.lambda * q[f];
  }
  return {std::move(gp), std::move(gq)};
}

namespace {
constexpr char kModelMagic[4] = {'C', 'F', 'K', 'M'};
constexpr uint32_t kModelVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}
template <typename T>
void read_pod(std::ifstream& in, T& v) {
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
}
}  // namespace

void save_model(const FactorModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out.write(kModelMagic, 4);
  write_pod(out, kModelVersion);
  write_pod(out, model.num_users);
  write_pod(out, model.num_items);
  write_pod(out, model.k);
  write_pod(out, model.lambda);
  write_pod(out, model.seed);
  write_pod(out, model.global_mean);
  write_pod(out, model.rating_min);
  write_pod(out, model.rating_max);
  out.write(reinterpret_cast<const char*>(model.P.data()),
            static_cast<std::streamsize>(model.P.size() * sizeof(double)));
  out.write(reinterpret_cast<const char*>(model.Q.data()),
            static_cast<std::streamsize>(model.Q.size() * sizeof(double)));
  if (!out) throw Error("short write: " + path);
}

FactorModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file: " + path);
  char magic[4];
  in.read(magic, 4);
  uint32_t version = 0;
  read_pod(in, version);
  if (!in || std::memcmp(magic, kModelMagic, 4) != 0 || version != kModelVersion)
    throw Error("not a cfkit model file: " + path);
  FactorModel model;
  read_pod(in, model.num_users);
  read_pod(in, model.num_items);
  read_pod(in, model.k);
  read_pod(in, model.lambda);
  read_pod(in, model.seed);
  read_pod(in, model.global_mean);
  read_pod(in, model.rating_min);
  read_pod(in, model.rating_max);
  if (model.num_users < 0 || model.num_items < 0 || model.k < 1)
    throw Error("corrupt model header: " + path);
  model.P.resize(static_cast<size_t>(model.num_users) * model.k);
  model.Q.resize(static_cast<size_t>(model.num_items) * model.k);
  in.read(reinterpret_cast<char*>(model.P.data()),
          static_cast<std::streamsize>(model.P.size() * sizeof(double)));
  in.read(reinterpret_cast<char*>(model.Q.data()),
          static_cast<std::streamsize>(model.Q.size() * sizeof(double)));
  if (!in) throw Error("truncated model file: " + path);
  return model;
}

}  // namespace cfkit
