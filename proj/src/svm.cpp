#include "tsdeconv/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <tuple>

#include "tsdeconv/parallel.hpp"
#include "tsdeconv/rng.hpp"

namespace tsdeconv {

FeatureMatrix FeatureMatrix::from_dense(const std::vector<Eigen::VectorXd>& vectors,
                                        const std::vector<int>& labels) {
  if (vectors.size() != labels.size()) {
    throw std::invalid_argument("from_dense: vectors and labels differ in length");
  }
  FeatureMatrix m;
  if (!vectors.empty()) m.dim = vectors.front().size();
  for (std::size_t i = 0; i < vectors.size(); ++i) {
    const Eigen::VectorXd& v = vectors[i];
    if (v.size() != m.dim) throw std::invalid_argument("from_dense: inconsistent dimensions");
    SparseRow row;
    row.idx.reserve(static_cast<std::size_t>(v.size()));
    row.val.reserve(static_cast<std::size_t>(v.size()));
    for (Eigen::Index j = 0; j < v.size(); ++j) row.push(static_cast<int>(j), v[j]);
    m.add(std::move(row), labels[i]);
  }
  return m;
}

Vocabulary Vocabulary::fit(const std::vector<WordHistogram>& train_histograms) {
  Vocabulary vocab;
  for (const auto& h : train_histograms) {
    for (const auto& [word, count] : h.counts) vocab.index.emplace(word, 0);
  }
  int col = 0;
  for (auto& [word, id] : vocab.index) id = col++;
  return vocab;
}

SparseRow Vocabulary::project(const WordHistogram& h, FeatureScaling scaling) const {
  double denom = 1.0;
  if (scaling == FeatureScaling::l1 && h.total > 0) {
    denom = static_cast<double>(h.total);
  } else if (scaling == FeatureScaling::l2) {
    double sq = 0.0;
    for (const auto& [word, count] : h.counts) sq += static_cast<double>(count) * count;
    if (sq > 0.0) denom = std::sqrt(sq);
  }
  SparseRow row;
  for (const auto& [word, count] : h.counts) {
    const auto it = index.find(word);
    if (it == index.end()) continue;  // unseen at fit time: dropped
    row.push(it->second, static_cast<double>(count) / denom);
  }
  return row;
}

double decision_value(const SvmModel& model, const SparseRow& x) {
  if (!x.idx.empty() && x.idx.back() >= model.weights.size()) {
    throw std::invalid_argument("decision_value: feature index exceeds model dimension");
  }
  double acc = model.bias;
  for (std::size_t k = 0; k < x.idx.size(); ++k) {
    acc += model.weights[x.idx[k]] * x.val[k];
  }
  return acc;
}

int predict(const SvmModel& model, const SparseRow& x) {
  return decision_value(model, x) >= 0.0 ? +1 : -1;
}

double error_rate(const SvmModel& model, const FeatureMatrix& data) {
  if (data.rows.empty()) return 0.0;
  long long wrong = 0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    if (predict(model, data.rows[i]) != data.labels[i]) ++wrong;
  }
  return static_cast<double>(wrong) / static_cast<double>(data.rows.size());
}

double svm_objective(const SvmModel& model, const FeatureMatrix& data) {
  const double lambda = 1.0 / (model.C * static_cast<double>(data.rows.size()));
  double hinge = 0.0;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    hinge += std::max(0.0, 1.0 - data.labels[i] * decision_value(model, data.rows[i]));
  }
  hinge /= static_cast<double>(data.rows.size());
  return 0.5 * lambda * model.weights.squaredNorm() + hinge;
}

namespace {

// Shared trainer for full fits and leave-one-out folds. `exclude` < 0 trains
// on everything; otherwise that row is left out without copying the matrix.
SvmModel train_svm_excluding(const FeatureMatrix& data, const SvmConfig& cfg,
                             std::ptrdiff_t exclude) {
  std::vector<std::size_t> order;
  order.reserve(data.rows.size());
  bool has_pos = false, has_neg = false;
  for (std::size_t i = 0; i < data.rows.size(); ++i) {
    if (static_cast<std::ptrdiff_t>(i) == exclude) continue;
    order.push_back(i);
    (data.labels[i] > 0 ? has_pos : has_neg) = true;
  }
  const std::size_t n = order.size();
  if (n == 0) throw std::invalid_argument("train_svm: empty data");
  if (!(cfg.C > 0.0)) throw std::invalid_argument("train_svm: C must be positive");
  if (!has_pos || !has_neg) {
    throw std::invalid_argument("train_svm: need at least one sample of each class");
  }

  const double lambda = 1.0 / (cfg.C * static_cast<double>(n));
  // w is kept as scale * v so the per-step shrink stays O(nnz).
  Eigen::VectorXd v = Eigen::VectorXd::Zero(data.dim);
  double scale = 1.0;
  double bias = 0.0;
  Eigen::VectorXd avg_w = Eigen::VectorXd::Zero(data.dim);
  double avg_bias = 0.0;

  Rng rng(mix_seed(cfg.seed, 0x5b));

  long long t = 1;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    rng.shuffle(order);
    for (const std::size_t i : order) {
      const SparseRow& x = data.rows[i];
      const double y = data.labels[i];
      double dot = 0.0;
      for (std::size_t k = 0; k < x.idx.size(); ++k) dot += v[x.idx[k]] * x.val[k];
      const double margin = bias + scale * dot;
      const double eta = 1.0 / (lambda * static_cast<double>(t + 1));
      scale *= 1.0 - 1.0 / static_cast<double>(t + 1);  // (1 - eta * lambda)
      if (y * margin < 1.0) {
        const double step = eta * y / scale;
        for (std::size_t k = 0; k < x.idx.size(); ++k) v[x.idx[k]] += step * x.val[k];
        bias += eta * lambda * y;  // unregularized bias, small step
      }
      ++t;
    }
    avg_w += scale * v;
    avg_bias += bias;
  }

  SvmModel model;
  model.C = cfg.C;
  if (cfg.epochs > 0) {
    model.weights = avg_w / static_cast<double>(cfg.epochs);
    model.bias = avg_bias / static_cast<double>(cfg.epochs);
  } else {
    model.weights = Eigen::VectorXd::Zero(data.dim);
    model.bias = 0.0;
  }
  if (!model.weights.allFinite()) throw std::runtime_error("train_svm: non-finite weights");
  return model;
}

}  // namespace

SvmModel train_svm(const FeatureMatrix& data, const SvmConfig& cfg) {
  return train_svm_excluding(data, cfg, -1);
}

double loo_cv(const FeatureMatrix& data, const SvmConfig& cfg, int threads) {
  const std::size_t n = data.rows.size();
  if (n < 2) throw std::invalid_argument("loo_cv: need at least 2 samples");
  std::vector<char> wrong(n, 0);
  parallel_for(n, threads, [&](std::size_t held_out) {
    SvmConfig fold_cfg = cfg;
    fold_cfg.seed = mix_seed(cfg.seed, held_out);
    try {
      const SvmModel model =
          train_svm_excluding(data, fold_cfg, static_cast<std::ptrdiff_t>(held_out));
      wrong[held_out] = predict(model, data.rows[held_out]) != data.labels[held_out] ? 1 : 0;
    } catch (const std::invalid_argument&) {
      // Degenerate fold (single class after holdout): majority-vote fallback.
      long long pos = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (i != held_out) pos += data.labels[i] > 0;
      }
      const int majority = 2 * pos >= static_cast<long long>(n - 1) ? +1 : -1;
      wrong[held_out] = majority != data.labels[held_out] ? 1 : 0;
    }
  });
  long long total_wrong = 0;
  for (const char w : wrong) total_wrong += w;
  return static_cast<double>(total_wrong) / static_cast<double>(n);
}

GridSearchResult grid_search(const SaxGrid& grid, const FeatureProvider& provider,
                             Eigen::Index feature_length, const SvmConfig& base_cfg,
                             int threads) {
  if (grid.n.empty() || grid.w.empty() || grid.a.empty() || grid.C.empty()) {
    throw std::invalid_argument("grid_search: empty candidate list");
  }
  GridSearchResult result;
  bool any_feasible = false;
  for (const int n : grid.n) {
    for (const int w : grid.w) {
      for (const int a : grid.a) {
        const SaxParams sax{n, w, a};
        bool feasible = true;
        try {
          sax.validate(feature_length);
        } catch (const std::invalid_argument&) {
          feasible = false;
        }
        FeatureMatrix features;
        if (feasible) features = provider(sax);
        for (const double C : grid.C) {
          GridRow row;
          row.sax = sax;
          row.C = C;
          row.feasible = feasible;
          if (feasible) {
            SvmConfig cfg = base_cfg;
            cfg.C = C;
            row.cv_error = loo_cv(features, cfg, threads);
            any_feasible = true;
          } else {
            row.cv_error = std::numeric_limits<double>::quiet_NaN();
          }
          result.table.push_back(row);
        }
      }
    }
  }
  if (!any_feasible) throw std::invalid_argument("grid_search: no feasible grid point");

  // Ties break toward smaller (a, w, n, C).
  const GridRow* best = nullptr;
  for (const GridRow& row : result.table) {
    if (!row.feasible) continue;
    if (best == nullptr) {
      best = &row;
      continue;
    }
    const auto key = [](const GridRow& r) {
      return std::make_tuple(r.cv_error, r.sax.a, r.sax.w, r.sax.n, r.C);
    };
    if (key(row) < key(*best)) best = &row;
  }
  result.best = *best;
  return result;
}

std::string grid_table_tsv(const std::vector<GridRow>& table) {
  std::ostringstream out;
  out << "n\tw\ta\tC\tcv_error\n";
  for (const GridRow& row : table) {
    out << row.sax.n << '\t' << row.sax.w << '\t' << row.sax.a << '\t' << row.C << '\t';
    if (row.feasible) {
      out << row.cv_error;
    } else {
      out << "nan";
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace tsdeconv
