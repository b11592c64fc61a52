#include "cfkit/evaluation.hpp"

#include <unistd.h>

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <numeric>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cfkit/partitioned.hpp"
#include "cfkit/rng.hpp"

namespace cfkit {

namespace {

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

std::string fmt_short(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%g", x);
  return buf;
}

}  // namespace

double rmse(std::span<const std::pair<double, double>> predictions) {
  if (predictions.empty()) throw EmptyInput("rmse over zero predictions");
  double sse = 0.0;
  for (auto [p, a] : predictions) {
    double e = p - a;
    sse += e * e;
  }
  return std::sqrt(sse / static_cast<double>(predictions.size()));
}

double mae(std::span<const std::pair<double, double>> predictions) {
  if (predictions.empty()) throw EmptyInput("mae over zero predictions");
  double sum = 0.0;
  for (auto [p, a] : predictions) sum += std::abs(p - a);
  return sum / static_cast<double>(predictions.size());
}

Algo algo_from_name(const std::string& name) {
  if (name == "baseline_cf" || name == "baseline_cf_user") return Algo::baseline_cf_user;
  if (name == "baseline_cf_item") return Algo::baseline_cf_item;
  if (name == "mf") return Algo::mf;
  if (name == "hybrid") return Algo::hybrid;
  if (name == "ann") return Algo::ann;
  throw UnknownFormat(name);
}

std::string to_string(Algo algo) {
  switch (algo) {
    case Algo::baseline_cf_user: return "baseline_cf_user";
    case Algo::baseline_cf_item: return "baseline_cf_item";
    case Algo::mf: return "mf";
    case Algo::hybrid: return "hybrid";
    case Algo::ann: return "ann";
  }
  return "?";
}

std::string AlgoParams::describe(Algo algo) const {
  std::ostringstream out;
  switch (algo) {
    case Algo::baseline_cf_user:
    case Algo::baseline_cf_item:
      out << "metric=" << to_string(metric.kind) << " K=" << k_neighbors
          << " N_max=" << n_max;
      if (metric.shrinkage > 0.0) out << " shrinkage=" << fmt_short(metric.shrinkage);
      break;
    case Algo::mf:
      out << "opt=" << (mf.optimizer == TrainConfig::Optimizer::sgd ? "sgd" : "als")
          << " k=" << mf.k << " lambda=" << fmt_short(mf.lambda)
          << " epochs=" << mf.epochs;
      if (mf.optimizer == TrainConfig::Optimizer::sgd)
        out << " lr=" << fmt_short(mf.learning_rate);
      if (partitions > 1) out << " partitions=" << partitions;
      break;
    case Algo::hybrid:
      out << "alpha=" << fmt_short(alpha) << " cold_threshold=" << cold_threshold
          << " backend="
          << (cf_backend == HybridConfig::CfBackend::factorization ? "mf" : "knn")
          << " k=" << mf.k << " lambda=" << fmt_short(mf.lambda);
      break;
    case Algo::ann:
      out << "L=" << lsh.num_tables << " b=" << lsh.bits_per_table << " K=" << k_neighbors
          << " k=" << mf.k << " lambda=" << fmt_short(mf.lambda);
      break;
  }
  return out.str();
}

void apply_param(AlgoParams& params, const std::string& name, double value) {
  if (name == "k") {
    params.mf.k = static_cast<int>(std::llround(value));
  } else if (name == "lambda") {
    params.mf.lambda = value;
  } else if (name == "alpha") {
    params.alpha = value;
  } else if (name == "L") {
    params.lsh.num_tables = static_cast<int>(std::llround(value));
  } else if (name == "b") {
    params.lsh.bits_per_table = static_cast<int>(std::llround(value));
  } else if (name == "K") {
    params.k_neighbors = static_cast<int>(std::llround(value));
  } else if (name == "shrinkage") {
    params.metric.shrinkage = value;
  } else if (name == "epochs") {
    params.mf.epochs = static_cast<int>(std::llround(value));
  } else if (name == "lr") {
    params.mf.learning_rate = value;
  } else {
    throw std::invalid_argument("unknown tuning parameter: " + name);
  }
}

namespace {

struct Predictor {
  std::function<std::optional<double>(int, int)> fn;
  std::string extra;
};

std::vector<std::pair<int, std::vector<double>>> item_factor_vectors(const FactorModel& model,
                                                                     const RatingsMatrix& train) {
  std::vector<std::pair<int, std::vector<double>>> vectors;
  for (int i = 0; i < model.num_items; ++i) {
    if (train.item_degree(i) == 0) continue;
    const double* q = model.item_row(i);
    double norm = 0.0;
    for (int f = 0; f < model.k; ++f) norm += q[f] * q[f];
    if (norm == 0.0) continue;
    vectors.emplace_back(i, std::vector<double>(q, q + model.k));
  }
  return vectors;
}

Predictor make_predictor(Algo algo, const RatingsMatrix& train, const FeatureTable* features,
                         const AlgoParams& params, uint64_t seed, int threads) {
  Predictor out;
  TrainConfig mf_cfg = params.mf;
  mf_cfg.seed = seed;

  switch (algo) {
    case Algo::baseline_cf_user:
    case Algo::baseline_cf_item: {
      Axis axis = algo == Algo::baseline_cf_user ? Axis::user : Axis::item;
      auto index = std::make_shared<SimilarityIndex>(
          build_index(train, axis, params.metric, params.n_max, params.embeddings, threads));
      int k_nb = params.k_neighbors;
      out.fn = [&train, index, k_nb](int u, int i) {
        return predict_from_neighbors(train, *index, u, i, k_nb);
      };
      break;
    }
    case Algo::mf: {
      auto model = std::make_shared<FactorModel>(
          params.partitions > 1
              ? train_partitioned(train, params.partitions, mf_cfg,
                                  params.sync_rounds > 0 ? params.sync_rounds : mf_cfg.epochs,
                                  nullptr, threads)
              : cfkit::train(train, mf_cfg, nullptr, threads));
      out.fn = [model](int u, int i) { return std::optional<double>(model->predict(u, i)); };
      break;
    }
    case Algo::hybrid: {
      HybridConfig cfg;
      cfg.alpha = params.alpha;
      cfg.cold_threshold = params.cold_threshold;
      cfg.cf_backend = params.cf_backend;
      HybridModel::CfPredictor cf;
      if (params.cf_backend == HybridConfig::CfBackend::factorization) {
        auto model =
            std::make_shared<FactorModel>(cfkit::train(train, mf_cfg, nullptr, threads));
        cf = [model](int u, int i) { return std::optional<double>(model->predict(u, i)); };
      } else {
        auto index = std::make_shared<SimilarityIndex>(
            build_index(train, Axis::item, params.metric, params.n_max, nullptr, threads));
        int k_nb = params.k_neighbors;
        cf = [&train, index, k_nb](int u, int i) {
          return predict_from_neighbors(train, *index, u, i, k_nb);
        };
      }
      static const FeatureTable kEmptyFeatures;
      const FeatureTable& feat = features ? *features : kEmptyFeatures;
      auto model = std::make_shared<HybridModel>(cfg, train, feat, std::move(cf));
      out.fn = [model](int u, int i) { return std::optional<double>(model->predict(u, i)); };
      break;
    }
    case Algo::ann: {
      FactorModel model = train_als(train, mf_cfg, nullptr, threads);
      LshConfig lsh_cfg = params.lsh;
      lsh_cfg.seed = seed;
      lsh_cfg.rerank = true;
      auto nb = lsh_neighborhood_index(item_factor_vectors(model, train), Axis::item,
                                       lsh_cfg, params.n_max);
      out.extra = "candidate_fraction=" + fmt_short(nb.mean_candidate_fraction);
      auto index = std::make_shared<SimilarityIndex>(std::move(nb.index));
      int k_nb = params.k_neighbors;
      out.fn = [&train, index, k_nb](int u, int i) {
        return predict_from_neighbors(train, *index, u, i, k_nb);
      };
      break;
    }
  }
  return out;
}

EvalRow evaluate_cell(Algo algo, const RatingsMatrix& train, const RatingsMatrix& test,
                      const FeatureTable* features, const AlgoParams& params, uint64_t seed,
                      int threads) {
  EvalRow row;
  row.algorithm = to_string(algo);
  row.seed = seed;
  row.hyperparameters = params.describe(algo);

  double t0 = now_seconds();
  Predictor predictor = make_predictor(algo, train, features, params, seed, threads);
  row.train_time_s = now_seconds() - t0;

  double fallback = train.global_mean();
  std::vector<std::pair<double, double>> scored;
  scored.reserve(test.size());
  size_t abstained = 0;

  t0 = now_seconds();
  for (const Rating& r : test.entries()) {
    auto p = predictor.fn(r.user, r.item);
    if (!p) ++abstained;
    scored.emplace_back(p.value_or(fallback), r.value);
  }
  row.predict_time_s = now_seconds() - t0;

  row.rmse = rmse(scored);
  row.mae = mae(scored);
  row.extra = "abstain_rate=" +
              fmt_short(static_cast<double>(abstained) / static_cast<double>(test.size()));
  if (!predictor.extra.empty()) row.extra += ";" + predictor.extra;
  return row;
}

RatingsMatrix subsample(const RatingsMatrix& matrix, size_t limit) {
  if (matrix.size() <= limit) return matrix;
  std::vector<Rating> take(matrix.entries().begin(), matrix.entries().begin() + limit);
  return RatingsMatrix::from_triples(take, matrix.num_users(), matrix.num_items());
}

}  // namespace

EvalReport run_experiment(const RatingsMatrix& dataset, const FeatureTable* features,
                          const ExperimentSpec& spec, const AlgoParams& params) {
  if (spec.seeds.empty()) throw EmptyInput("seed list");
  if (spec.algorithms.empty()) throw EmptyInput("algorithm list");

  EvalReport report;
  char host[256] = {0};
  gethostname(host, sizeof(host) - 1);
  report.environment.host = host;
  report.environment.threads = spec.threads;
  report.environment.hardware_threads =
      static_cast<int>(std::thread::hardware_concurrency());

  std::vector<char> warmed(spec.algorithms.size(), 0);

  for (double sparsity : spec.sparsities) {
    double retained = 1.0 - sparsity;
    for (uint64_t seed : spec.seeds) {
      SplitSpec split_spec{spec.test_fraction, seed, spec.stratify_by_user};
      auto [train_full, test] = split(dataset, split_spec);
      RatingsMatrix train_masked =
          retained < 1.0 ? mask(train_full, {retained}, seed) : std::move(train_full);

      for (size_t a = 0; a < spec.algorithms.size(); ++a) {
        Algo algo = spec.algorithms[a];
        if (spec.warmup && !warmed[a]) {
          // untimed warm-up on a small sample so the first timed cell does
          // not pay cold-cache costs
          warmed[a] = 1;
          RatingsMatrix small = subsample(train_masked, 2000);
          AlgoParams warm_params = params;
          warm_params.mf.epochs = std::min(params.mf.epochs, 2);
          evaluate_cell(algo, small, small, features, warm_params, seed, spec.threads);
        }
        EvalRow row = evaluate_cell(algo, train_masked, test, features, params, seed,
                                    spec.threads);
        row.dataset = spec.dataset_name;
        row.sparsity = sparsity;
        row.retained_fraction = retained;
        report.rows.push_back(std::move(row));
      }
    }
  }
  return report;
}

std::vector<AggregateRow> aggregate(const EvalReport& report) {
  std::vector<AggregateRow> out;
  auto find = [&](const std::string& algo, double sparsity) -> AggregateRow* {
    for (auto& row : out)
      if (row.algorithm == algo && row.sparsity == sparsity) return &row;
    return nullptr;
  };

  // two passes: means, then sample stddevs
  for (const EvalRow& r : report.rows) {
    AggregateRow* agg = find(r.algorithm, r.sparsity);
    if (!agg) {
      out.push_back({r.algorithm, r.sparsity, r.retained_fraction, 0, 0, 0, 0, 0, 0, 0});
      agg = &out.back();
    }
    ++agg->runs;
    agg->rmse_mean += r.rmse;
    agg->mae_mean += r.mae;
    agg->train_time_mean_s += r.train_time_s;
    agg->predict_time_mean_s += r.predict_time_s;
  }
  for (auto& agg : out) {
    agg.rmse_mean /= agg.runs;
    agg.mae_mean /= agg.runs;
    agg.train_time_mean_s /= agg.runs;
    agg.predict_time_mean_s /= agg.runs;
  }
  for (const EvalRow& r : report.rows) {
    AggregateRow* agg = find(r.algorithm, r.sparsity);
    agg->rmse_stddev += (r.rmse - agg->rmse_mean) * (r.rmse - agg->rmse_mean);
    agg->mae_stddev += (r.mae - agg->mae_mean) * (r.mae - agg->mae_mean);
  }
  for (auto& agg : out) {
    if (agg.runs > 1) {
      agg.rmse_stddev = std::sqrt(agg.rmse_stddev / (agg.runs - 1));
      agg.mae_stddev = std::sqrt(agg.mae_stddev / (agg.runs - 1));
    } else {
      agg.rmse_stddev = agg.mae_stddev = 0.0;
    }
  }
  return out;
}

namespace {
constexpr const char* kCsvHeader =
    "algorithm,dataset,sparsity,retained_fraction,seed,rmse,mae,train_time_s,"
    "predict_time_s,hyperparameters,extra";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  for (char c : line) {
    if (c == ',') {
      out.push_back(field);
      field.clear();
    } else {
      field += c;
    }
  }
  out.push_back(field);
  return out;
}
}  // namespace

void write_report_csv(const EvalReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << kCsvHeader << '\n';
  for (const EvalRow& r : report.rows) {
    out << r.algorithm << ',' << r.dataset << ',' << fmt_double(r.sparsity) << ','
        << fmt_double(r.retained_fraction) << ',' << r.seed << ',' << fmt_double(r.rmse)
        << ',' << fmt_double(r.mae) << ',' << fmt_double(r.train_time_s) << ','
        << fmt_double(r.predict_time_s) << ',' << r.hyperparameters << ',' << r.extra
        << '\n';
  }
}

EvalReport read_report_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open report file: " + path);
  EvalReport report;
  std::string line;
  size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line != kCsvHeader) throw MalformedLine(1, "unexpected report header");
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 11) throw MalformedLine(line_no, line);
    EvalRow r;
    r.algorithm = f[0];
    r.dataset = f[1];
    r.sparsity = std::stod(f[2]);
    r.retained_fraction = std::stod(f[3]);
    r.seed = std::stoull(f[4]);
    r.rmse = std::stod(f[5]);
    r.mae = std::stod(f[6]);
    r.train_time_s = std::stod(f[7]);
    r.predict_time_s = std::stod(f[8]);
    r.hyperparameters = f[9];
    r.extra = f[10];
    report.rows.push_back(std::move(r));
  }
  return report;
}

void write_report_json(const EvalReport& report, const std::string& path) {
  nlohmann::json j;
  j["environment"] = {{"host", report.environment.host},
                      {"threads", report.environment.threads},
                      {"hardware_threads", report.environment.hardware_threads}};
  j["rows"] = nlohmann::json::array();
  for (const EvalRow& r : report.rows) {
    j["rows"].push_back({{"algorithm", r.algorithm},
                         {"dataset", r.dataset},
                         {"sparsity", r.sparsity},
                         {"retained_fraction", r.retained_fraction},
                         {"seed", r.seed},
                         {"rmse", r.rmse},
                         {"mae", r.mae},
                         {"train_time_s", r.train_time_s},
                         {"predict_time_s", r.predict_time_s},
                         {"hyperparameters", r.hyperparameters},
                         {"extra", r.extra}});
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open for writing: " + path);
  out << j.dump(2) << '\n';
}

std::string render_table(const std::vector<AggregateRow>& rows) {
  std::vector<std::array<std::string, 5>> cells;
  cells.push_back({"Algorithm", "Data Sparsity", "RMSE", "MAE", "Training Time (s)"});
  char buf[128];
  for (const AggregateRow& r : rows) {
    std::array<std::string, 5> c;
    c[0] = r.algorithm;
    std::snprintf(buf, sizeof(buf), "%.0f%% (retained %.0f%%)", r.sparsity * 100.0,
                  r.retained_fraction * 100.0);
    c[1] = buf;
    std::snprintf(buf, sizeof(buf), "%.4f +/- %.4f", r.rmse_mean, r.rmse_stddev);
    c[2] = buf;
    std::snprintf(buf, sizeof(buf), "%.4f +/- %.4f", r.mae_mean, r.mae_stddev);
    c[3] = buf;
    std::snprintf(buf, sizeof(buf), "%.2f", r.train_time_mean_s);
    c[4] = buf;
    cells.push_back(std::move(c));
  }

  std::array<size_t, 5> width{};
  for (const auto& row : cells)
    for (size_t i = 0; i < 5; ++i) width[i] = std::max(width[i], row[i].size());

  std::ostringstream out;
  for (size_t rix = 0; rix < cells.size(); ++rix) {
    for (size_t i = 0; i < 5; ++i) {
      out << cells[rix][i] << std::string(width[i] - cells[rix][i].size() + 2, ' ');
    }
    out << '\n';
    if (rix == 0) out << std::string(std::accumulate(width.begin(), width.end(), size_t{10}),
                                     '-')
                      << '\n';
  }
  return out.str();
}

TuneResult tune(const RatingsMatrix& train, Algo algo, const GridSpec& grid, int folds,
                uint64_t seed, const FeatureTable* features, const AlgoParams& base,
                int threads) {
  if (folds < 2) throw std::invalid_argument("folds must be >= 2");
  if (grid.empty()) throw EmptyInput("tuning grid");
  for (const auto& [name, values] : grid)
    if (values.empty()) throw EmptyInput("tuning grid axis " + name);

  // deterministic fold assignment: permute entries, fold = position mod folds
  const auto& entries = train.entries();
  std::vector<size_t> perm(entries.size());
  std::iota(perm.begin(), perm.end(), size_t{0});
  auto eng = rng::engine_for(seed, 0xf01d5u);
  rng::shuffle(perm, eng);
  std::vector<int> fold_of(entries.size());
  for (size_t pos = 0; pos < perm.size(); ++pos)
    fold_of[perm[pos]] = static_cast<int>(pos % folds);

  std::vector<std::pair<RatingsMatrix, RatingsMatrix>> fold_splits;
  for (int f = 0; f < folds; ++f) {
    std::vector<Rating> fit, val;
    for (size_t e = 0; e < entries.size(); ++e)
      (fold_of[e] == f ? val : fit).push_back(entries[e]);
    fold_splits.emplace_back(
        RatingsMatrix::from_triples(fit, train.num_users(), train.num_items()),
        RatingsMatrix::from_triples(val, train.num_users(), train.num_items()));
  }

  // cartesian product, later axes varying fastest
  size_t cell_count = 1;
  for (const auto& [_, values] : grid) cell_count *= values.size();

  TuneResult result;
  result.best_rmse = std::numeric_limits<double>::infinity();

  for (size_t cell = 0; cell < cell_count; ++cell) {
    TuneCell tc;
    AlgoParams params = base;
    size_t rem = cell;
    for (size_t axis = grid.size(); axis-- > 0;) {
      const auto& [name, values] = grid[axis];
      double v = values[rem % values.size()];
      rem /= values.size();
      tc.config[name] = v;
      apply_param(params, name, v);
    }

    double rmse_sum = 0.0;
    for (int f = 0; f < folds; ++f) {
      const auto& [fit, val] = fold_splits[f];
      Predictor predictor = make_predictor(algo, fit, features, params, seed, threads);
      double fallback = fit.global_mean();
      std::vector<std::pair<double, double>> scored;
      scored.reserve(val.size());
      for (const Rating& r : val.entries())
        scored.emplace_back(predictor.fn(r.user, r.item).value_or(fallback), r.value);
      rmse_sum += rmse(scored);
    }
    tc.mean_rmse = rmse_sum / folds;
    result.table.push_back(tc);
    if (tc.mean_rmse < result.best_rmse) {
      result.best_rmse = tc.mean_rmse;
      result.best = tc.config;
    }
  }
  return result;
}

}  // namespace cfkit
