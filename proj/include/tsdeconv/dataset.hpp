#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

#include "tsdeconv/errors.hpp"

namespace tsdeconv {

/// One multivariate series: channels x padded-length values plus its class
/// label mapped to +/-1 and the length it had before padding.
struct Sample {
  Eigen::MatrixXd values;  // C x L
  int label = 0;           // +1 / -1
  int original_length = 0;
};

struct ChannelStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd stddev;
};

struct Dataset {
  std::string name;
  int channels = 0;
  int padded_length = 0;
  bool standardized = false;  // guards against normalizing twice
  ChannelStats stats;         // training-set statistics used for standardization
  std::vector<Sample> train;
  std::vector<Sample> test;

  std::size_t size() const { return train.size() + test.size(); }
};

enum class DataFormat { native, csv_manifest };

/// Loads a dataset directory and applies the standard preprocessing:
/// per-channel standardization with training-set statistics, then zero
/// right-padding to the maximum length across train and test.
///
/// Native layout: one whitespace-delimited text file per sample (rows = time
/// steps, columns = channels) plus a manifest `labels.tsv` with lines
/// "filename<TAB>label<TAB>split" where split is train or test.
///
/// CSV layout: a single `data.csv` with header
/// "sample_id,channel,t,value,label,split".
Dataset load_dataset(const std::filesystem::path& dir, DataFormat format = DataFormat::native,
                     const std::string& name = "");

/// Standardizes in place using training-set per-channel statistics computed
/// over the original (pre-padding) extents. Rejects a second application.
void standardize(Dataset& dataset);

/// Zero right-padding to the max original length across train + test.
void pad_to_max_length(Dataset& dataset);

/// Lossless binary round-trip of a preprocessed dataset, including the
/// normalization statistics and the standardized flag.
void save_split(const Dataset& dataset, const std::filesystem::path& path);
Dataset load_split(const std::filesystem::path& path);

}  // namespace tsdeconv
