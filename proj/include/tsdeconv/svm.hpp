#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "tsdeconv/sax.hpp"

namespace tsdeconv {

/// Per-sample histogram scaling applied before the SVM. Window counts vary
/// with series length, so some normalization is required; unit L2 keeps the
/// hinge margin reachable even for very diffuse vocabularies, where plain
/// L1 proportions leave rows with norms of order 1e-2.
enum class FeatureScaling : std::uint8_t { raw = 0, l1 = 1, l2 = 2 };

/// One sample's features in sparse form (strictly increasing indices).
struct SparseRow {
  std::vector<int> idx;
  std::vector<double> val;

  void push(int i, double v) {
    idx.push_back(i);
    val.push_back(v);
  }
};

/// Rows of features with +/-1 labels. Dense vectors are stored as fully
/// populated sparse rows so one SVM path serves both feature kinds.
struct FeatureMatrix {
  Eigen::Index dim = 0;
  std::vector<SparseRow> rows;
  std::vector<int> labels;

  std::size_t size() const { return rows.size(); }
  void add(SparseRow row, int label) {
    rows.push_back(std::move(row));
    labels.push_back(label);
  }
  static FeatureMatrix from_dense(const std::vector<Eigen::VectorXd>& vectors,
                                  const std::vector<int>& labels);
};

/// Word-to-column mapping fitted on training histograms only; projecting a
/// histogram drops words outside the vocabulary.
struct Vocabulary {
  std::map<std::string, int> index;

  static Vocabulary fit(const std::vector<WordHistogram>& train_histograms);
  bool contains(const std::string& word) const { return index.count(word) != 0; }
  int size() const { return static_cast<int>(index.size()); }

  /// Sparse feature row. Scaling statistics (count total or count norm) are
  /// the histogram's own, computed before any word is dropped.
  SparseRow project(const WordHistogram& h, FeatureScaling scaling = FeatureScaling::l2) const;
};

struct SvmModel {
  Eigen::VectorXd weights;
  double bias = 0.0;
  double C = 1.0;
};

struct SvmConfig {
  double C = 1.0;
  int epochs = 100;
  std::uint64_t seed = 0;
};

/// Primal sub-gradient descent on the L2-regularized hinge loss
/// (lambda = 1 / (C * N)), returning the average of per-epoch iterates.
/// Deterministic given the seed.
SvmModel train_svm(const FeatureMatrix& data, const SvmConfig& cfg);

double decision_value(const SvmModel& model, const SparseRow& x);

/// sign(w . x + b); a tie on exactly zero predicts +1.
int predict(const SvmModel& model, const SparseRow& x);

double error_rate(const SvmModel& model, const FeatureMatrix& data);

/// Regularized objective 0.5 * lambda * ||w||^2 + mean hinge loss.
double svm_objective(const SvmModel& model, const FeatureMatrix& data);

/// Leave-one-out cross-validation error; the model is refit per fold on the
/// remaining N-1 samples. `threads` > 1 evaluates folds in parallel with a
/// deterministic (fold-indexed) reduction.
double loo_cv(const FeatureMatrix& data, const SvmConfig& cfg, int threads = 1);

struct SaxGrid {
  std::vector<int> n{8, 16, 32, 64};
  std::vector<int> w{2, 4, 8};
  std::vector<int> a{3, 4, 5, 6, 7};
  std::vector<double> C{0.01, 0.1, 1.0, 10.0};
};

struct GridRow {
  SaxParams sax;
  double C = 1.0;
  double cv_error = 1.0;
  bool feasible = true;
};

struct GridSearchResult {
  GridRow best;
  std::vector<GridRow> table;  // one row per grid point, in grid order
};

/// Supplies training features (with labels) for a SAX parameterization.
using FeatureProvider = std::function<FeatureMatrix(const SaxParams&)>;

/// Exhaustive leave-one-out evaluation of the (n, w, a, C) grid. Points whose
/// (n, w, a) is invalid for `feature_length` are kept in the table with a NaN
/// error and never win; ties break toward smaller (a, w, n, C).
GridSearchResult grid_search(const SaxGrid& grid, const FeatureProvider& provider,
                             Eigen::Index feature_length, const SvmConfig& base_cfg,
                             int threads = 1);

/// Tab-separated table, one row per grid point: n, w, a, C, cv_error.
std::string grid_table_tsv(const std::vector<GridRow>& table);

}  // namespace tsdeconv
