// Command-line pipeline: dataset preparation, autoencoder training,
// featurization (raw code vectors or bags of SAX words), linear-SVM
// classification, and transition-graph export with summary statistics.

#include <CLI11.hpp>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "tsdeconv/dataset.hpp"
#include "tsdeconv/markov.hpp"
#include "tsdeconv/net.hpp"
#include "tsdeconv/parallel.hpp"
#include "tsdeconv/pipeline.hpp"
#include "tsdeconv/svm.hpp"
#include "tsdeconv/synth.hpp"

namespace fs = std::filesystem;
using namespace tsdeconv;

namespace {

// Output paths honor TSDECONV_OUT_DIR for relative locations.
fs::path resolve_out(const std::string& path) {
  fs::path p(path);
  if (p.is_relative()) {
    if (const char* base = std::getenv("TSDECONV_OUT_DIR")) return fs::path(base) / p;
  }
  return p;
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open for writing: " + path.string());
  out << content;
  if (!out) throw FormatError("write failed: " + path.string());
}

struct CommonNetFlags {
  int filters1 = 8;
  int filters2 = 5;
  int pool_w = 2;
  bool untied = false;
  std::string final_act = "linear";
};

NetworkConfig make_net_config(const Dataset& split, const CommonNetFlags& flags) {
  NetworkConfig cfg;
  cfg.channels = split.channels;
  cfg.length = split.padded_length;
  cfg.filters1 = flags.filters1;
  cfg.filters2 = flags.filters2;
  cfg.pool_w = flags.pool_w;
  cfg.tie_weights = !flags.untied;
  cfg.final_activation =
      flags.final_act == "relu" ? FinalActivation::relu : FinalActivation::linear;
  cfg.validate();
  return cfg;
}

int run(int argc, char** argv) {
  CLI::App app{"Multivariate time-series representation learning: deconvolutional "
               "autoencoder, SAX bags, linear SVM, and Markov transition graphs"};
  app.require_subcommand(1);
  int threads = 1;
  app.add_option("--threads", threads, "Worker threads for featurization and CV")
      ->capture_default_str();

  // ---- gen-data ----
  auto* gen = app.add_subcommand("gen-data", "Generate a bundled synthetic dataset");
  std::string gen_profile, gen_out;
  std::uint64_t gen_seed = 7;
  gen->add_option("--profile", gen_profile, "Dataset profile")
      ->required()
      ->check(CLI::IsMember({"ecg", "wafer"}));
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->add_option("--seed", gen_seed, "Generator seed")->capture_default_str();

  // ---- prep ----
  auto* prep = app.add_subcommand("prep", "Load a dataset directory, preprocess, save a split");
  std::string prep_dir, prep_out, prep_format = "native", prep_name;
  prep->add_option("data_dir", prep_dir, "Dataset directory")->required();
  prep->add_option("--format", prep_format, "Input layout")
      ->check(CLI::IsMember({"native", "csv"}))
      ->capture_default_str();
  prep->add_option("--name", prep_name, "Dataset name (defaults to directory name)");
  prep->add_option("--out", prep_out, "Output split file")->required();

  // ---- train-ae ----
  auto* train_cmd = app.add_subcommand("train-ae", "Train the deconvolutional autoencoder");
  std::string train_split, train_out, train_loss_log;
  CommonNetFlags net_flags;
  TrainConfig tc;
  train_cmd->set_config("--config", "", "Key-value config file (flags win)");
  train_cmd->add_option("split", train_split, "Preprocessed split file")->required();
  train_cmd->add_option("--out", train_out, "Output model checkpoint")->required();
  train_cmd->add_option("--filters1", net_flags.filters1)->capture_default_str();
  train_cmd->add_option("--filters2", net_flags.filters2)->capture_default_str();
  train_cmd->add_option("--pool-w", net_flags.pool_w)->capture_default_str();
  train_cmd->add_flag("--untied", net_flags.untied, "Use independent decoder filters");
  train_cmd->add_option("--final-act", net_flags.final_act, "Reconstruction activation")
      ->check(CLI::IsMember({"linear", "relu"}))
      ->capture_default_str();
  train_cmd->add_option("--lr", tc.learning_rate)->capture_default_str();
  train_cmd->add_option("--rho", tc.rho)->capture_default_str();
  train_cmd->add_option("--epsilon", tc.epsilon)->capture_default_str();
  train_cmd->add_option("--epochs", tc.epochs)->capture_default_str();
  train_cmd->add_option("--batch-size", tc.batch_size)->capture_default_str();
  train_cmd->add_option("--seed", tc.seed)->capture_default_str();
  train_cmd->add_option("--loss-log", train_loss_log, "Per-epoch mean loss TSV");

  // ---- featurize ----
  auto* feat = app.add_subcommand("featurize", "Extract classifier features from a model");
  std::string feat_split, feat_model, feat_out, feat_mode, feat_cv_table;
  std::vector<int> feat_sax;
  bool feat_search = false, feat_per_window = false, feat_numerosity = false;
  std::string feat_scaling = "l2";
  SaxGrid grid;
  int feat_cv_epochs = 5;
  std::uint64_t feat_seed = 0;
  feat->add_option("split", feat_split, "Preprocessed split file")->required();
  feat->add_option("model", feat_model, "Model checkpoint")->required();
  feat->add_option("--mode", feat_mode, "Feature kind")
      ->required()
      ->check(CLI::IsMember({"vector", "sax"}));
  feat->add_option("--sax", feat_sax, "SAX parameters n,w,a")->delimiter(',')->expected(3);
  feat->add_flag("--search", feat_search, "Grid-search SAX parameters with LOO CV");
  feat->add_option("--grid-n", grid.n, "Window length candidates")->delimiter(',');
  feat->add_option("--grid-w", grid.w, "Word size candidates")->delimiter(',');
  feat->add_option("--grid-a", grid.a, "Alphabet size candidates")->delimiter(',');
  feat->add_option("--grid-C", grid.C, "SVM C candidates")->delimiter(',');
  feat->add_option("--cv-epochs", feat_cv_epochs, "SVM epochs per LOO fold")
      ->capture_default_str();
  feat->add_option("--seed", feat_seed)->capture_default_str();
  feat->add_option("--cv-table", feat_cv_table, "Grid CV table output (search mode)");
  feat->add_option("--feature-scaling", feat_scaling, "Histogram scaling before the SVM")
      ->check(CLI::IsMember({"raw", "l1", "l2"}))
      ->capture_default_str();
  feat->add_flag("--per-window-znorm", feat_per_window,
                 "Re-normalize every window (amplitude-erasing; off by default)");
  feat->add_flag("--numerosity", feat_numerosity, "Drop consecutive duplicate words");
  feat->add_option("--out", feat_out, "Output feature bundle")->required();

  // ---- classify ----
  auto* cls = app.add_subcommand("classify", "Select C by LOO CV, fit, and report test error");
  std::string cls_features, cls_out;
  std::vector<double> cls_c_list{0.01, 0.1, 1.0, 10.0};
  int cls_cv_epochs = 10, cls_final_epochs = 200;
  std::uint64_t cls_seed = 0;
  cls->add_option("features", cls_features, "Feature bundle")->required();
  cls->add_option("--out", cls_out, "Report TSV")->required();
  cls->add_option("--C-list", cls_c_list, "C candidates")->delimiter(',');
  cls->add_option("--cv-epochs", cls_cv_epochs)->capture_default_str();
  cls->add_option("--final-epochs", cls_final_epochs)->capture_default_str();
  cls->add_option("--seed", cls_seed)->capture_default_str();

  // ---- graph ----
  auto* graph_cmd = app.add_subcommand("graph", "Export transition graphs and statistics");
  std::string graph_split, graph_model, graph_out_dir, graph_mode = "gaussian",
              graph_which = "all";
  int graph_q = 10;
  bool graph_stats_only = false;
  graph_cmd->add_option("split", graph_split, "Preprocessed split file")->required();
  graph_cmd->add_option("model", graph_model, "Model checkpoint")->required();
  graph_cmd->add_option("--Q", graph_q, "Number of bins")->required();
  graph_cmd->add_option("--quantizer", graph_mode, "Discretization mode")
      ->check(CLI::IsMember({"gaussian", "quantile"}))
      ->capture_default_str();
  graph_cmd->add_option("--split-set", graph_which, "Which samples to process")
      ->check(CLI::IsMember({"train", "test", "all"}))
      ->capture_default_str();
  graph_cmd->add_flag("--stats-only", graph_stats_only, "Skip per-graph file export");
  graph_cmd->add_option("--out-dir", graph_out_dir, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  if (gen->parsed()) {
    const auto samples = synth_profile(gen_profile, gen_seed);
    write_native_dataset(samples, resolve_out(gen_out));
    std::cout << "wrote " << samples.size() << " samples to " << resolve_out(gen_out).string()
              << "\n";
    return 0;
  }

  if (prep->parsed()) {
    const Dataset dataset =
        load_dataset(prep_dir, prep_format == "csv" ? DataFormat::csv_manifest : DataFormat::native,
                     prep_name);
    const fs::path out = resolve_out(prep_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_split(dataset, out);
    std::cout << dataset.name << ": channels " << dataset.channels << ", padded length "
              << dataset.padded_length << ", train " << dataset.train.size() << ", test "
              << dataset.test.size() << "\n";
    return 0;
  }

  if (train_cmd->parsed()) {
    const Dataset split = load_split(train_split);
    const NetworkConfig cfg = make_net_config(split, net_flags);
    std::vector<Tensord> inputs;
    inputs.reserve(split.train.size());
    for (const Sample& s : split.train) inputs.push_back(as_input_tensor(s.values));
    std::string loss_log = "epoch\tmean_loss\n";
    const ModelParams params =
        train(inputs, cfg, tc, [&loss_log](int epoch, double mean_loss) {
          loss_log += std::to_string(epoch + 1) + "\t" + std::to_string(mean_loss) + "\n";
          std::cout << "epoch " << (epoch + 1) << " loss " << mean_loss << "\n";
        });
    const fs::path out = resolve_out(train_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_model(out, cfg, tc, params);
    if (!train_loss_log.empty()) write_text(resolve_out(train_loss_log), loss_log);
    return 0;
  }

  if (feat->parsed()) {
    const Dataset split = load_split(feat_split);
    const ModelFile model = load_model(feat_model);
    SaxOptions options = code_map_sax_options();
    options.window_znorm = feat_per_window;
    options.numerosity_reduction = feat_numerosity;
    const FeatureScaling scaling = feat_scaling == "raw"  ? FeatureScaling::raw
                                   : feat_scaling == "l1" ? FeatureScaling::l1
                                                          : FeatureScaling::l2;

    FeatureBundle bundle;
    if (feat_mode == "vector") {
      bundle = vector_features(model.params, model.config, split, threads);
    } else if (feat_search) {
      const SvmConfig cv_cfg{1.0, feat_cv_epochs, feat_seed};
      SaxSearchOutcome outcome = search_sax_features(model.params, model.config, split, grid,
                                                     cv_cfg, options, scaling, threads);
      const std::string table = grid_table_tsv(outcome.search.table);
      const fs::path table_path =
          feat_cv_table.empty() ? resolve_out(feat_out + ".cv.tsv") : resolve_out(feat_cv_table);
      write_text(table_path, table);
      std::cout << "grid search best: n=" << outcome.search.best.sax.n
                << " w=" << outcome.search.best.sax.w << " a=" << outcome.search.best.sax.a
                << " C=" << outcome.search.best.C << " cv_error=" << outcome.search.best.cv_error
                << "\n";
      bundle = std::move(outcome.bundle);
    } else {
      if (feat_sax.size() != 3) {
        std::cerr << "error: sax mode needs --sax n,w,a or --search\n";
        return 2;
      }
      const SaxParams sax_params{feat_sax[0], feat_sax[1], feat_sax[2]};
      bundle = sax_features(model.params, model.config, split, sax_params, options, scaling,
                            threads);
    }
    const fs::path out = resolve_out(feat_out);
    if (out.has_parent_path()) fs::create_directories(out.parent_path());
    save_features(bundle, out);
    std::cout << "features: dim " << bundle.train.dim << ", train " << bundle.train.size()
              << ", test " << bundle.test.size() << "\n";
    return 0;
  }

  if (cls->parsed()) {
    const FeatureBundle bundle = load_features(cls_features);
    const EvalReport report =
        evaluate_bundle(bundle, cls_c_list, cls_cv_epochs, cls_final_epochs, cls_seed, threads);
    std::optional<SaxParams> sax;
    if (bundle.mode == FeatureMode::sax) sax = bundle.sax;
    write_text(resolve_out(cls_out),
               classification_report_tsv(bundle.dataset_name, bundle.mode, sax, report));
    std::cout << bundle.dataset_name << " " << (bundle.mode == FeatureMode::sax ? "sax" : "vector")
              << ": C=" << report.best_C << " cv_error=" << report.cv_error
              << " test_error=" << report.test_error << "\n";
    return 0;
  }

  if (graph_cmd->parsed()) {
    const Dataset split = load_split(graph_split);
    const ModelFile model = load_model(graph_model);
    const QuantizerConfig quantizer{
        graph_q, graph_mode == "quantile" ? QuantizerMode::quantile : QuantizerMode::gaussian};

    std::vector<Sample> samples;
    std::vector<std::string> tags;
    if (graph_which != "test") {
      for (std::size_t i = 0; i < split.train.size(); ++i) {
        samples.push_back(split.train[i]);
        tags.push_back("train_" + std::to_string(i));
      }
    }
    if (graph_which != "train") {
      for (std::size_t i = 0; i < split.test.size(); ++i) {
        samples.push_back(split.test[i]);
        tags.push_back("test_" + std::to_string(i));
      }
    }

    const fs::path out_dir = resolve_out(graph_out_dir);
    fs::create_directories(out_dir);
    const auto stats = per_map_graph_stats(model.params, model.config, samples, quantizer, threads);

    if (!graph_stats_only) {
      const auto codes = encode_all(model.params, model.config, samples, threads);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        for (int m = 0; m < model.config.filters2; ++m) {
          const TransitionGraph g = TransitionGraph::from_sequence(
              codes[i].per_map[static_cast<std::size_t>(m)], quantizer);
          const std::string stem = tags[i] + "_m" + std::to_string(m);
          export_graph(g, out_dir / (stem + ".graphml"), GraphFormat::graphml);
          export_graph(g, out_dir / (stem + ".dot"), GraphFormat::dot);
        }
      }
    }

    write_text(out_dir / "stats.tsv", class_stats_table_tsv(split.name, stats));
    write_text(out_dir / "per_graph_stats.tsv", graph_stats_tsv(stats));
    std::cout << "wrote statistics for " << stats.size() << " graphs to " << out_dir.string()
              << "\n";
    return 0;
  }

  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
