#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "tsdeconv/dataset.hpp"
#include "tsdeconv/markov.hpp"
#include "tsdeconv/net.hpp"
#include "tsdeconv/svm.hpp"

namespace tsdeconv {

/// Code-layer features for every sample of a split.
std::vector<CodeFeatures> encode_all(const ModelParams& params, const NetworkConfig& cfg,
                                     const std::vector<Sample>& samples, int threads = 1);

/// Featurization default: the code map is standardized as a whole and windows
/// are not re-normalized, so activation amplitude survives into the words.
/// Per-window normalization measurably degrades these features (it erases the
/// level information the encoder put there).
inline SaxOptions code_map_sax_options() {
  SaxOptions opt;
  opt.window_znorm = false;
  return opt;
}

/// Bag of SAX words over one sample's code maps: each flattened map is
/// z-normalized whole, transformed independently, and merged with a map-index
/// prefix on the keys.
WordHistogram sax_bag(const CodeFeatures& features, const SaxParams& params,
                      const SaxOptions& options = code_map_sax_options());

enum class FeatureMode : std::uint8_t { vector = 0, sax = 1 };

/// Featurization output for train and test, ready for the SVM.
struct FeatureBundle {
  std::string dataset_name;
  FeatureMode mode = FeatureMode::vector;
  SaxParams sax;                // meaningful in sax mode
  FeatureScaling scaling = FeatureScaling::l2;  // sax mode histogram scaling
  int vocabulary_size = 0;      // sax mode, fitted on train only
  double search_cv_error = -1;  // best LOO error from grid search, -1 if none
  double search_C = -1;         // C of the winning grid point, -1 if none
  FeatureMatrix train;
  FeatureMatrix test;
};

FeatureBundle vector_features(const ModelParams& params, const NetworkConfig& cfg,
                              const Dataset& dataset, int threads = 1);

FeatureBundle sax_features(const ModelParams& params, const NetworkConfig& cfg,
                           const Dataset& dataset, const SaxParams& sax_params,
                           const SaxOptions& options = code_map_sax_options(),
                           FeatureScaling scaling = FeatureScaling::l2, int threads = 1);

/// Grid search over (n, w, a, C) with leave-one-out CV on the training split;
/// returns the full table plus a bundle built at the winning (n, w, a).
struct SaxSearchOutcome {
  GridSearchResult search;
  FeatureBundle bundle;
};

SaxSearchOutcome search_sax_features(const ModelParams& params, const NetworkConfig& cfg,
                                     const Dataset& dataset, const SaxGrid& grid,
                                     const SvmConfig& cv_config,
                                     const SaxOptions& options = code_map_sax_options(),
                                     FeatureScaling scaling = FeatureScaling::l2,
                                     int threads = 1);

void save_features(const FeatureBundle& bundle, const std::filesystem::path& path);
FeatureBundle load_features(const std::filesystem::path& path);

/// Model selection (LOO over the C candidates) followed by a full-train fit
/// and test evaluation.
struct EvalReport {
  double best_C = 1.0;
  double cv_error = 0.0;    // LOO training error at best_C
  double test_error = 0.0;  // held-out error of the final model
};

EvalReport evaluate_bundle(const FeatureBundle& bundle, const std::vector<double>& c_candidates,
                           int cv_epochs, int final_epochs, std::uint64_t seed, int threads = 1);

/// Tab-separated classification report (one row per evaluated bundle).
std::string classification_report_tsv(const std::string& dataset_name, FeatureMode mode,
                                      const std::optional<SaxParams>& sax, const EvalReport& report);

/// Per-graph statistics for every (sample, code map) pair of a split.
struct SampleGraphStats {
  int sample_index = 0;
  int map_index = 0;
  int label = 0;
  GraphStats stats;
};

std::vector<SampleGraphStats> per_map_graph_stats(const ModelParams& params,
                                                  const NetworkConfig& cfg,
                                                  const std::vector<Sample>& samples,
                                                  const QuantizerConfig& quantizer,
                                                  int threads = 1);

/// Class-mean table of the four statistics plus Welch p-values, mirroring the
/// per-dataset summary layout. Rows: "<name> normal", "<name> abnormal",
/// "p_value". Normal is the -1 class.
std::string class_stats_table_tsv(const std::string& dataset_name,
                                  const std::vector<SampleGraphStats>& stats);

/// Per-graph statistics as TSV (sample, map, label, four statistics).
std::string graph_stats_tsv(const std::vector<SampleGraphStats>& stats);

}  // namespace tsdeconv
