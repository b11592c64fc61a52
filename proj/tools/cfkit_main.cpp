// cfkit command-line front end: ingest, train, evaluate, sweep, tune, report.
// Exit codes: 0 success, 1 runtime error, 2 usage/config error.

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "cfkit/datagen.hpp"
#include "cfkit/evaluation.hpp"
#include "cfkit/factorization.hpp"
#include "cfkit/ingest.hpp"
#include "cfkit/partitioned.hpp"
#include "cfkit/similarity.hpp"
#include "cfkit/split.hpp"
#include "cfkit/threading.hpp"

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetArgs {
  std::string input;
  std::string format = "u_data_100k";
  std::string features;
  std::string features_format = "movielens_genres";
  std::string embeddings;
};

void add_dataset_options(CLI::App* cmd, DatasetArgs& args) {
  cmd->add_option("--input", args.input, "ratings file")->required();
  cmd->add_option("--format", args.format, "ratings format")
      ->check(CLI::IsMember({"dat_1m", "csv_latest", "u_data_100k"}));
  cmd->add_option("--features", args.features, "item attribute file (hybrid)");
  cmd->add_option("--features-format", args.features_format, "item attribute format")
      ->check(CLI::IsMember({"movielens_genres", "csv_key_value"}));
  cmd->add_option("--embeddings", args.embeddings,
                  "embedding csv (semantic_cosine metric)");
}

struct LoadedDataset {
  cfkit::ParsedRatings parsed;
  std::optional<cfkit::FeatureTable> features;
  std::optional<cfkit::EmbeddingTable> embeddings;
};

LoadedDataset load_dataset(const DatasetArgs& args, bool print_warnings) {
  LoadedDataset out;
  out.parsed = cfkit::parse_movielens(args.input, cfkit::ratings_format_from_name(args.format));
  if (print_warnings)
    for (const auto& w : out.parsed.warnings) std::cerr << "warning: " << w << '\n';
  if (!args.features.empty()) {
    out.features = cfkit::parse_item_features(
        args.features, cfkit::features_format_from_name(args.features_format),
        out.parsed.items);
    if (print_warnings)
      for (const auto& w : out.features->warnings) std::cerr << "warning: " << w << '\n';
  }
  if (!args.embeddings.empty())
    out.embeddings = cfkit::load_embeddings(args.embeddings, out.parsed.items);
  return out;
}

struct AlgoArgs {
  std::string metric = "cosine";
  double shrinkage = 0.0;
  int min_overlap = 1;
  int n_max = 100;
  int k_neighbors = 40;

  std::string optimizer = "als";
  int k = 32;
  double lambda = 0.05;
  double lr = 0.005;
  int epochs = 20;
  double init_scale = 0.1;
  double convergence_tol = 1e-5;
  int partitions = 1;
  int sync_rounds = 0;

  double alpha = 0.7;
  int cold_threshold = 1;
  std::string cf_backend = "factorization";

  int lsh_tables = 16;
  int lsh_bits = 8;
};

void add_algo_options(CLI::App* cmd, AlgoArgs& args) {
  cmd->add_option("--metric", args.metric, "similarity metric")
      ->check(CLI::IsMember({"cosine", "pearson", "semantic_cosine"}));
  cmd->add_option("--shrinkage", args.shrinkage)->check(CLI::NonNegativeNumber);
  cmd->add_option("--min-overlap", args.min_overlap)->check(CLI::PositiveNumber);
  cmd->add_option("--n-max", args.n_max, "neighbor list length")->check(CLI::PositiveNumber);
  cmd->add_option("--k-neighbors", args.k_neighbors, "neighbor budget K")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--optimizer", args.optimizer)->check(CLI::IsMember({"als", "sgd"}));
  cmd->add_option("--k", args.k, "latent dimension")->check(CLI::PositiveNumber);
  cmd->add_option("--lambda", args.lambda, "regularization weight")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--lr", args.lr, "SGD learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--epochs", args.epochs, "epochs / ALS sweeps")->check(CLI::PositiveNumber);
  cmd->add_option("--init-scale", args.init_scale)->check(CLI::PositiveNumber);
  cmd->add_option("--convergence-tol", args.convergence_tol)->check(CLI::NonNegativeNumber);
  cmd->add_option("--partitions", args.partitions, "block-partitioned ALS worker count")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--sync-rounds", args.sync_rounds, "partitioned sync rounds (0: epochs)")
      ->check(CLI::NonNegativeNumber);
  cmd->add_option("--alpha", args.alpha, "hybrid CF weight")->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--cold-threshold", args.cold_threshold)->check(CLI::PositiveNumber);
  cmd->add_option("--cf-backend", args.cf_backend)
      ->check(CLI::IsMember({"factorization", "neighborhood"}));
  cmd->add_option("--lsh-tables", args.lsh_tables, "LSH tables L")->check(CLI::PositiveNumber);
  cmd->add_option("--lsh-bits", args.lsh_bits, "LSH bits per key b")
      ->check(CLI::Range(1, 64));
}

cfkit::AlgoParams to_params(const AlgoArgs& args, const LoadedDataset& data) {
  cfkit::AlgoParams p;
  p.metric.kind = cfkit::sim_kind_from_name(args.metric);
  p.metric.shrinkage = args.shrinkage;
  p.metric.min_overlap = args.min_overlap;
  if (data.embeddings) p.embeddings = &*data.embeddings;
  p.n_max = args.n_max;
  p.k_neighbors = args.k_neighbors;
  p.mf.optimizer = args.optimizer == "sgd" ? cfkit::TrainConfig::Optimizer::sgd
                                           : cfkit::TrainConfig::Optimizer::als;
  p.mf.k = args.k;
  p.mf.lambda = args.lambda;
  p.mf.learning_rate = args.lr;
  p.mf.epochs = args.epochs;
  p.mf.init_scale = args.init_scale;
  p.mf.convergence_tol = args.convergence_tol;
  p.partitions = args.partitions;
  p.sync_rounds = args.sync_rounds;
  p.alpha = args.alpha;
  p.cold_threshold = args.cold_threshold;
  p.cf_backend = args.cf_backend == "neighborhood"
                     ? cfkit::HybridConfig::CfBackend::neighborhood
                     : cfkit::HybridConfig::CfBackend::factorization;
  p.lsh.num_tables = args.lsh_tables;
  p.lsh.bits_per_table = args.lsh_bits;
  if (p.metric.kind == cfkit::SimKind::semantic_cosine && !p.embeddings)
    throw UsageError("--metric semantic_cosine requires --embeddings");
  return p;
}

std::vector<cfkit::Algo> parse_algos(const std::string& csv) {
  std::vector<cfkit::Algo> out;
  std::stringstream ss(csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) out.push_back(cfkit::algo_from_name(name));
  }
  if (out.empty()) throw UsageError("--algos lists no algorithms");
  return out;
}

std::vector<double> parse_doubles(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stod(tok));
  }
  return out;
}

// "3" means seeds 1..3; "5,7,9" is an explicit list.
std::vector<uint64_t> parse_seeds(const std::string& value) {
  std::vector<uint64_t> out;
  if (value.find(',') == std::string::npos) {
    uint64_t n = std::stoull(value);
    if (n == 0) throw UsageError("--seeds needs at least one seed");
    for (uint64_t s = 1; s <= n; ++s) out.push_back(s);
    return out;
  }
  std::stringstream ss(value);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (!tok.empty()) out.push_back(std::stoull(tok));
  }
  if (out.empty()) throw UsageError("--seeds needs at least one seed");
  return out;
}

// "k=8,16,32;lambda=0.02,0.1"
cfkit::GridSpec parse_grid(const std::string& text) {
  cfkit::GridSpec grid;
  std::stringstream ss(text);
  std::string axis;
  while (std::getline(ss, axis, ';')) {
    if (axis.empty()) continue;
    size_t eq = axis.find('=');
    if (eq == std::string::npos) throw UsageError("grid axis needs name=v1,v2: " + axis);
    std::string name = axis.substr(0, eq);
    std::vector<double> values = parse_doubles(axis.substr(eq + 1));
    if (values.empty()) throw UsageError("grid axis lists no values: " + axis);
    grid.emplace_back(name, values);
  }
  if (grid.empty()) throw UsageError("--grid is empty");
  return grid;
}

void write_resolved_config(const CLI::App* cmd, const std::string& out_path) {
  std::ofstream out(out_path, std::ios::binary);
  if (!out) throw cfkit::Error("cannot write resolved config: " + out_path);
  out << cmd->config_to_str(true, false);
}

int cmd_ingest(const DatasetArgs& dataset) {
  LoadedDataset data = load_dataset(dataset, true);
  const auto& m = data.parsed.matrix;
  double density = m.num_users() && m.num_items()
                       ? static_cast<double>(m.size()) /
                             (static_cast<double>(m.num_users()) * m.num_items())
                       : 0.0;
  std::printf("%d users, %d items, %zu ratings\n", m.num_users(), m.num_items(), m.size());
  std::printf("density %.4f%%, rating range [%g, %g], global mean %.4f\n", density * 100.0,
              m.rating_min(), m.rating_max(), m.global_mean());
  if (data.features)
    std::printf("features: %d attributes over %d items\n", data.features->vocab_size(),
                data.features->num_items());
  if (!data.parsed.warnings.empty()) {
    std::fprintf(stderr, "%zu malformed/skipped lines\n", data.parsed.warnings.size());
    return 1;
  }
  return 0;
}

int cmd_train(const DatasetArgs& dataset, const AlgoArgs& algo_args,
              const std::string& algo_name, uint64_t seed, int threads,
              const std::string& out_path, const CLI::App* cmd) {
  LoadedDataset data = load_dataset(dataset, true);
  cfkit::AlgoParams params = to_params(algo_args, data);
  params.mf.seed = seed;
  cfkit::Algo algo = cfkit::algo_from_name(algo_name);
  const auto& matrix = data.parsed.matrix;

  if (algo == cfkit::Algo::mf) {
    cfkit::TrainTrace trace;
    cfkit::FactorModel model =
        params.partitions > 1
            ? cfkit::train_partitioned(matrix, params.partitions, params.mf,
                                       params.sync_rounds > 0 ? params.sync_rounds
                                                              : params.mf.epochs,
                                       &trace, threads)
            : cfkit::train(matrix, params.mf, &trace, threads);
    cfkit::save_model(model, out_path);
    std::printf("trained %s on %zu ratings, final objective %.6f, model -> %s\n",
                params.describe(algo).c_str(), matrix.size(),
                trace.objective.empty() ? NAN : trace.objective.back(), out_path.c_str());
    for (const auto& note : trace.notes) std::printf("note: %s\n", note.c_str());
  } else if (algo == cfkit::Algo::baseline_cf_user || algo == cfkit::Algo::baseline_cf_item) {
    cfkit::Axis axis =
        algo == cfkit::Algo::baseline_cf_user ? cfkit::Axis::user : cfkit::Axis::item;
    cfkit::SimilarityIndex index = cfkit::build_index(matrix, axis, params.metric,
                                                      params.n_max, params.embeddings, threads);
    cfkit::save_index_csv(index, out_path);
    std::printf("built %s index over %d entities, index -> %s\n",
                axis == cfkit::Axis::user ? "user" : "item", index.entity_count(),
                out_path.c_str());
  } else {
    throw UsageError("train supports --algo mf, baseline_cf_user or baseline_cf_item");
  }
  write_resolved_config(cmd, out_path + ".config");
  return 0;
}

int run_and_write(const cfkit::ExperimentSpec& spec, const LoadedDataset& data,
                  const cfkit::AlgoParams& params, const std::string& out_csv,
                  const std::string& out_json, const CLI::App* cmd) {
  const cfkit::FeatureTable* features = data.features ? &*data.features : nullptr;
  cfkit::EvalReport report = cfkit::run_experiment(data.parsed.matrix, features, spec, params);
  if (!out_csv.empty()) {
    cfkit::write_report_csv(report, out_csv);
    write_resolved_config(cmd, out_csv + ".config");
    std::printf("wrote %zu rows -> %s\n", report.rows.size(), out_csv.c_str());
  }
  if (!out_json.empty()) cfkit::write_report_json(report, out_json);
  std::printf("%s", cfkit::render_table(cfkit::aggregate(report)).c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"cfkit: collaborative filtering toolkit"};
  app.require_subcommand(1);

  DatasetArgs dataset;
  AlgoArgs algo_args;
  std::string algos_csv = "baseline_cf,mf";
  std::string algo_name = "mf";
  std::string sparsity_csv = "0.2";
  std::string seeds_value = "3";
  std::string out_csv, out_json, out_model = "model.bin";
  std::string grid_text = "k=16,32;lambda=0.02,0.05,0.1";
  double test_fraction = 0.2;
  bool no_stratify = false;
  bool no_warmup = false;
  int threads = 0;
  int folds = 3;
  uint64_t seed = 1;
  std::string report_path;

  auto add_common = [&](CLI::App* cmd) {
    cmd->set_config("--config", "", "key=value config file; command-line flags win");
    cmd->add_option("--threads", threads, "thread cap (0: all cores)")
        ->check(CLI::NonNegativeNumber);
  };

  CLI::App* ingest = app.add_subcommand("ingest", "parse a dataset and print a summary");
  add_dataset_options(ingest, dataset);
  add_common(ingest);

  CLI::App* train = app.add_subcommand("train", "train one model and save it");
  add_dataset_options(train, dataset);
  add_algo_options(train, algo_args);
  add_common(train);
  train->add_option("--algo", algo_name, "mf | baseline_cf_user | baseline_cf_item");
  train->add_option("--seed", seed);
  train->add_option("--out", out_model, "output model/index path");

  CLI::App* evaluate = app.add_subcommand("evaluate", "split, train and score algorithms");
  add_dataset_options(evaluate, dataset);
  add_algo_options(evaluate, algo_args);
  add_common(evaluate);
  evaluate->add_option("--algos", algos_csv, "comma-separated algorithm list");
  evaluate->add_option("--sparsity", sparsity_csv, "masked-away fraction(s) of train");
  evaluate->add_option("--seeds", seeds_value, "seed count N (1..N) or explicit list");
  evaluate->add_option("--test-fraction", test_fraction)->check(CLI::Range(0.01, 0.99));
  evaluate->add_flag("--no-stratify", no_stratify, "global split instead of per-user");
  evaluate->add_flag("--no-warmup", no_warmup, "skip the untimed warm-up run");
  evaluate->add_option("--out", out_csv, "report CSV path");
  evaluate->add_option("--json", out_json, "report JSON path");

  CLI::App* sweep = app.add_subcommand("sweep", "full sparsity x algorithm x seed grid");
  add_dataset_options(sweep, dataset);
  add_algo_options(sweep, algo_args);
  add_common(sweep);
  sweep->add_option("--algos", algos_csv);
  sweep->add_option("--sparsity", sparsity_csv);
  sweep->add_option("--seeds", seeds_value);
  sweep->add_option("--test-fraction", test_fraction)->check(CLI::Range(0.01, 0.99));
  sweep->add_flag("--no-stratify", no_stratify);
  sweep->add_flag("--no-warmup", no_warmup);
  sweep->add_option("--out", out_csv)->required();
  sweep->add_option("--json", out_json);

  CLI::App* tune = app.add_subcommand("tune", "cross-validated hyperparameter search");
  add_dataset_options(tune, dataset);
  add_algo_options(tune, algo_args);
  add_common(tune);
  tune->add_option("--algo", algo_name);
  tune->add_option("--grid", grid_text, "e.g. k=8,16,32;lambda=0.02,0.1");
  tune->add_option("--folds", folds)->check(CLI::Range(2, 20));
  tune->add_option("--seed", seed);
  tune->add_option("--test-fraction", test_fraction)->check(CLI::Range(0.01, 0.99));
  tune->add_option("--out", out_csv, "grid table CSV path");

  CLI::App* report = app.add_subcommand("report", "render a report CSV as a text table");
  report->add_option("csv", report_path, "report CSV produced by evaluate/sweep")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*ingest) return cmd_ingest(dataset);

    if (*train)
      return cmd_train(dataset, algo_args, algo_name, seed, threads, out_model, train);

    if (*evaluate || *sweep) {
      CLI::App* cmd = *evaluate ? evaluate : sweep;
      LoadedDataset data = load_dataset(dataset, true);
      cfkit::AlgoParams params = to_params(algo_args, data);
      cfkit::ExperimentSpec spec;
      spec.dataset_name = std::filesystem::path(dataset.input).filename().string();
      spec.algorithms = parse_algos(algos_csv);
      spec.sparsities = parse_doubles(sparsity_csv);
      for (double s : spec.sparsities)
        if (s < 0.0 || s >= 1.0) throw UsageError("--sparsity values must be in [0,1)");
      spec.seeds = parse_seeds(seeds_value);
      spec.test_fraction = test_fraction;
      spec.stratify_by_user = !no_stratify;
      spec.threads = cfkit::effective_threads(threads);
      spec.warmup = !no_warmup;
      bool wants_hybrid =
          std::count(spec.algorithms.begin(), spec.algorithms.end(), cfkit::Algo::hybrid) > 0;
      if (wants_hybrid && !data.features)
        std::fprintf(stderr,
                     "warning: hybrid without --features degenerates to the global mean "
                     "content score\n");
      return run_and_write(spec, data, params, out_csv, out_json, cmd);
    }

    if (*tune) {
      LoadedDataset data = load_dataset(dataset, true);
      cfkit::AlgoParams params = to_params(algo_args, data);
      cfkit::Algo algo = cfkit::algo_from_name(algo_name);
      cfkit::GridSpec grid = parse_grid(grid_text);

      // hold out the test portion first; folds only ever see training data
      auto [train_part, test_part] =
          cfkit::split(data.parsed.matrix, {test_fraction, seed, true});
      (void)test_part;
      const cfkit::FeatureTable* features = data.features ? &*data.features : nullptr;
      cfkit::TuneResult result = cfkit::tune(train_part, algo, grid, folds, seed, features,
                                             params, cfkit::effective_threads(threads));

      std::printf("%-40s %s\n", "config", "mean_cv_rmse");
      for (const auto& cell : result.table) {
        std::string desc;
        for (const auto& [k, v] : cell.config) {
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%s=%g ", k.c_str(), v);
          desc += buf;
        }
        std::printf("%-40s %.6f\n", desc.c_str(), cell.mean_rmse);
      }
      std::string best;
      for (const auto& [k, v] : result.best) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%s=%g ", k.c_str(), v);
        best += buf;
      }
      std::printf("best: %swith mean cv rmse %.6f\n", best.c_str(), result.best_rmse);

      if (!out_csv.empty()) {
        std::ofstream out(out_csv, std::ios::binary);
        if (!out) throw cfkit::Error("cannot write " + out_csv);
        out << "config,mean_cv_rmse\n";
        for (const auto& cell : result.table) {
          std::string desc;
          for (const auto& [k, v] : cell.config) {
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%s=%g;", k.c_str(), v);
            desc += buf;
          }
          char buf[64];
          std::snprintf(buf, sizeof(buf), "%.17g", cell.mean_rmse);
          out << desc << ',' << buf << '\n';
        }
        write_resolved_config(tune, out_csv + ".config");
      }
      return 0;
    }

    if (*report) {
      cfkit::EvalReport rep = cfkit::read_report_csv(report_path);
      std::printf("%s", cfkit::render_table(cfkit::aggregate(rep)).c_str());
      return 0;
    }
  } catch (const UsageError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
