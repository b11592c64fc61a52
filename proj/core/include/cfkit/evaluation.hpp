#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfkit/factorization.hpp"
#include "cfkit/hybrid.hpp"
#include "cfkit/ingest.hpp"
#include "cfkit/lsh.hpp"
#include "cfkit/ratings.hpp"
#include "cfkit/similarity.hpp"
#include "cfkit/split.hpp"

namespace cfkit {

// predictions are (predicted, actual) pairs
double rmse(std::span<const std::pair<double, double>> predictions);
double mae(std::span<const std::pair<double, double>> predictions);

enum class Algo { baseline_cf_user, baseline_cf_item, mf, hybrid, ann };

// Accepts the short alias "baseline_cf" for the user-based variant.
Algo algo_from_name(const std::string& name);
std::string to_string(Algo algo);

// Hyperparameters for every algorithm family; each cell seeds its own
// randomized parts from the cell seed, so identical inputs give identical
// error columns.
struct AlgoParams {
  SimilarityMetric metric{};  // neighborhood CF
  const EmbeddingTable* embeddings = nullptr;  // required by semantic_cosine
  int n_max = 100;
  int k_neighbors = 40;

  TrainConfig mf{};  // factorization (also the hybrid/ann backend)
  int partitions = 1;
  int sync_rounds = 0;  // 0: mf.epochs

  double alpha = 0.7;  // hybrid
  int cold_threshold = 1;
  HybridConfig::CfBackend cf_backend = HybridConfig::CfBackend::factorization;

  LshConfig lsh{};  // ann

  std::string describe(Algo algo) const;
};

// One name=value override onto AlgoParams; names: k, lambda, alpha, L, b,
// K, shrinkage, epochs, lr.
void apply_param(AlgoParams& params, const std::string& name, double value);

struct EvalRow {
  std::string algorithm;
  std::string dataset;
  double sparsity = 0.0;  // 1 - retained_fraction
  double retained_fraction = 1.0;
  uint64_t seed = 0;
  double rmse = 0.0;
  double mae = 0.0;
  double train_time_s = 0.0;
  double predict_time_s = 0.0;
  std::string hyperparameters;
  std::string extra;  // e.g. abstain_rate=..., candidate_fraction=...
};

struct EvalEnvironment {
  std::string host;
  int threads = 1;
  int hardware_threads = 1;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  EvalEnvironment environment;
};

struct ExperimentSpec {
  std::string dataset_name = "dataset";
  std::vector<Algo> algorithms;
  std::vector<double> sparsities{0.0};  // fraction of training entries masked away
  std::vector<uint64_t> seeds{1};
  double test_fraction = 0.2;
  bool stratify_by_user = true;
  int threads = 1;
  bool warmup = true;  // untimed small-sample run per algorithm before timing
};

// The shared protocol: per seed an 8:2-style stratified split fixed across
// algorithms, per sparsity a nested mask of the training set, then train
// (timed), predict the full test set (timed, abstentions falling back to the
// training mean), and score RMSE/MAE.
EvalReport run_experiment(const RatingsMatrix& dataset, const FeatureTable* features,
                          const ExperimentSpec& spec, const AlgoParams& params);

struct AggregateRow {
  std::string algorithm;
  double sparsity = 0.0;
  double retained_fraction = 1.0;
  int runs = 0;
  double rmse_mean = 0.0, rmse_stddev = 0.0;
  double mae_mean = 0.0, mae_stddev = 0.0;
  double train_time_mean_s = 0.0, predict_time_mean_s = 0.0;
};

// Mean and sample standard deviation across seeds per (algorithm, sparsity),
// in first-appearance order.
std::vector<AggregateRow> aggregate(const EvalReport& report);

// CSV column order is fixed: algorithm,dataset,sparsity,retained_fraction,
// seed,rmse,mae,train_time_s,predict_time_s,hyperparameters,extra.
void write_report_csv(const EvalReport& report, const std::string& path);
EvalReport read_report_csv(const std::string& path);
void write_report_json(const EvalReport& report, const std::string& path);

// Aligned text table over the aggregates: Algorithm, Data Sparsity (with the
// retained fraction spelled out), RMSE, MAE, Training Time.
std::string render_table(const std::vector<AggregateRow>& rows);

// Ordered grid: cartesian product in the given order, later axes fastest.
using GridSpec = std::vector<std::pair<std::string, std::vector<double>>>;

struct TuneCell {
  std::map<std::string, double> config;
  double mean_rmse = 0.0;
};

struct TuneResult {
  std::map<std::string, double> best;
  double best_rmse = 0.0;
  std::vector<TuneCell> table;
};

// k-fold cross-validation on the training portion only: deterministic fold
// assignment under seed, minimum mean validation RMSE wins, ties keep the
// earliest grid cell.
TuneResult tune(const RatingsMatrix& train, Algo algo, const GridSpec& grid, int folds,
                uint64_t seed, const FeatureTable* features, const AlgoParams& base,
                int threads = 1);

}  // namespace cfkit
