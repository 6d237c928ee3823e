#include "tsdeconv/pipeline.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "tsdeconv/parallel.hpp"
#include "tsdeconv/serialize.hpp"

namespace tsdeconv {

std::vector<CodeFeatures> encode_all(const ModelParams& params, const NetworkConfig& cfg,
                                     const std::vector<Sample>& samples, int threads) {
  std::vector<CodeFeatures> features(samples.size());
  parallel_for(samples.size(), threads, [&](std::size_t i) {
    features[i] = encode_features(params, cfg, as_input_tensor(samples[i].values));
  });
  return features;
}

WordHistogram sax_bag(const CodeFeatures& features, const SaxParams& params,
                      const SaxOptions& options) {
  WordHistogram bag;
  for (std::size_t m = 0; m < features.per_map.size(); ++m) {
    // Each map is standardized as a whole; with per-window normalization off
    // (the featurization default) windows keep their relative amplitude.
    const auto words = sax_transform(znormalize(features.per_map[m]), params, options);
    bag = merge(bag, prefix_keys(bag_of_words(words), std::to_string(m) + ":"));
  }
  return bag;
}

namespace {

std::vector<int> labels_of(const std::vector<Sample>& samples) {
  std::vector<int> labels;
  labels.reserve(samples.size());
  for (const Sample& s : samples) labels.push_back(s.label);
  return labels;
}

std::vector<WordHistogram> bags_for(const std::vector<CodeFeatures>& features,
                                    const SaxParams& params, const SaxOptions& options,
                                    int threads) {
  std::vector<WordHistogram> bags(features.size());
  parallel_for(features.size(), threads, [&](std::size_t i) {
    bags[i] = sax_bag(features[i], params, options);
  });
  return bags;
}

FeatureMatrix project_all(const std::vector<WordHistogram>& bags, const Vocabulary& vocab,
                          FeatureScaling scaling, const std::vector<int>& labels) {
  FeatureMatrix m;
  m.dim = vocab.size();
  for (std::size_t i = 0; i < bags.size(); ++i) m.add(vocab.project(bags[i], scaling), labels[i]);
  return m;
}

}  // namespace

FeatureBundle vector_features(const ModelParams& params, const NetworkConfig& cfg,
                              const Dataset& dataset, int threads) {
  const auto train_codes = encode_all(params, cfg, dataset.train, threads);
  const auto test_codes = encode_all(params, cfg, dataset.test, threads);
  std::vector<Eigen::VectorXd> train_vecs, test_vecs;
  train_vecs.reserve(train_codes.size());
  test_vecs.reserve(test_codes.size());
  for (const auto& c : train_codes) train_vecs.push_back(c.concatenated);
  for (const auto& c : test_codes) test_vecs.push_back(c.concatenated);

  FeatureBundle bundle;
  bundle.dataset_name = dataset.name;
  bundle.mode = FeatureMode::vector;
  bundle.train = FeatureMatrix::from_dense(train_vecs, labels_of(dataset.train));
  bundle.test = FeatureMatrix::from_dense(test_vecs, labels_of(dataset.test));
  return bundle;
}

FeatureBundle sax_features(const ModelParams& params, const NetworkConfig& cfg,
                           const Dataset& dataset, const SaxParams& sax_params,
                           const SaxOptions& options, FeatureScaling scaling, int threads) {
  const auto train_codes = encode_all(params, cfg, dataset.train, threads);
  const auto test_codes = encode_all(params, cfg, dataset.test, threads);
  const auto train_bags = bags_for(train_codes, sax_params, options, threads);
  const auto test_bags = bags_for(test_codes, sax_params, options, threads);
  const Vocabulary vocab = Vocabulary::fit(train_bags);

  FeatureBundle bundle;
  bundle.dataset_name = dataset.name;
  bundle.mode = FeatureMode::sax;
  bundle.sax = sax_params;
  bundle.scaling = scaling;
  bundle.vocabulary_size = vocab.size();
  bundle.train = project_all(train_bags, vocab, scaling, labels_of(dataset.train));
  bundle.test = project_all(test_bags, vocab, scaling, labels_of(dataset.test));
  return bundle;
}

SaxSearchOutcome search_sax_features(const ModelParams& params, const NetworkConfig& cfg,
                                     const Dataset& dataset, const SaxGrid& grid,
                                     const SvmConfig& cv_config, const SaxOptions& options,
                                     FeatureScaling scaling, int threads) {
  const auto train_codes = encode_all(params, cfg, dataset.train, threads);
  const std::vector<int> train_labels = labels_of(dataset.train);
  const Eigen::Index map_len = static_cast<Eigen::Index>(cfg.channels) * cfg.code_length();

  const FeatureProvider provider = [&](const SaxParams& p) {
    const auto bags = bags_for(train_codes, p, options, threads);
    return project_all(bags, Vocabulary::fit(bags), scaling, train_labels);
  };

  SaxSearchOutcome outcome;
  outcome.search = grid_search(grid, provider, map_len, cv_config, threads);
  outcome.bundle = sax_features(params, cfg, dataset, outcome.search.best.sax, options,
                                scaling, threads);
  outcome.bundle.search_cv_error = outcome.search.best.cv_error;
  outcome.bundle.search_C = outcome.search.best.C;
  return outcome;
}

namespace {

constexpr char kFeatureMagic[8] = {'T', 'S', 'D', 'C', 'F', 'E', 'A', 'T'};
constexpr std::uint32_t kFeatureVersion = 1;

void write_matrix(std::ostream& out, const FeatureMatrix& m) {
  io::write_pod<std::int64_t>(out, m.dim);
  io::write_pod<std::uint64_t>(out, m.rows.size());
  for (std::size_t i = 0; i < m.rows.size(); ++i) {
    io::write_pod<std::int32_t>(out, m.labels[i]);
    const SparseRow& row = m.rows[i];
    io::write_pod<std::uint64_t>(out, row.idx.size());
    for (std::size_t k = 0; k < row.idx.size(); ++k) {
      io::write_pod<std::int32_t>(out, row.idx[k]);
      io::write_pod<double>(out, row.val[k]);
    }
  }
}

FeatureMatrix read_matrix(std::istream& in) {
  FeatureMatrix m;
  m.dim = io::read_pod<std::int64_t>(in, "feature dim");
  const auto n = io::read_pod<std::uint64_t>(in, "feature rows");
  if (n > (1ull << 32)) throw FormatError("implausible row count in feature bundle");
  for (std::uint64_t i = 0; i < n; ++i) {
    const int label = io::read_pod<std::int32_t>(in, "feature label");
    const auto nnz = io::read_pod<std::uint64_t>(in, "feature nnz");
    if (nnz > (1ull << 32)) throw FormatError("implausible nnz in feature bundle");
    SparseRow row;
    row.idx.reserve(nnz);
    row.val.reserve(nnz);
    for (std::uint64_t k = 0; k < nnz; ++k) {
      const int idx = io::read_pod<std::int32_t>(in, "feature index");
      const double val = io::read_pod<double>(in, "feature value");
      row.push(idx, val);
    }
    m.add(std::move(row), label);
  }
  return m;
}

}  // namespace

void save_features(const FeatureBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open feature bundle for writing: " + path.string());
  out.write(kFeatureMagic, sizeof(kFeatureMagic));
  io::write_pod<std::uint32_t>(out, kFeatureVersion);
  io::write_string(out, bundle.dataset_name);
  io::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(bundle.mode));
  io::write_pod<std::int32_t>(out, bundle.sax.n);
  io::write_pod<std::int32_t>(out, bundle.sax.w);
  io::write_pod<std::int32_t>(out, bundle.sax.a);
  io::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(bundle.scaling));
  io::write_pod<std::int32_t>(out, bundle.vocabulary_size);
  io::write_pod<double>(out, bundle.search_cv_error);
  io::write_pod<double>(out, bundle.search_C);
  write_matrix(out, bundle.train);
  write_matrix(out, bundle.test);
  if (!out) throw FormatError("write failed: " + path.string());
}

FeatureBundle load_features(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open feature bundle: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kFeatureMagic, sizeof(magic)) != 0) {
    throw FormatError("not a feature bundle: " + path.string());
  }
  const auto version = io::read_pod<std::uint32_t>(in, "feature version");
  if (version != kFeatureVersion) {
    throw FormatError("unsupported feature bundle version " + std::to_string(version));
  }
  FeatureBundle bundle;
  bundle.dataset_name = io::read_string(in, "dataset name");
  bundle.mode = static_cast<FeatureMode>(io::read_pod<std::uint8_t>(in, "feature mode"));
  bundle.sax.n = io::read_pod<std::int32_t>(in, "sax n");
  bundle.sax.w = io::read_pod<std::int32_t>(in, "sax w");
  bundle.sax.a = io::read_pod<std::int32_t>(in, "sax a");
  bundle.scaling = static_cast<FeatureScaling>(io::read_pod<std::uint8_t>(in, "scaling"));
  bundle.vocabulary_size = io::read_pod<std::int32_t>(in, "vocab size");
  bundle.search_cv_error = io::read_pod<double>(in, "search cv");
  bundle.search_C = io::read_pod<double>(in, "search C");
  bundle.train = read_matrix(in);
  bundle.test = read_matrix(in);
  return bundle;
}

EvalReport evaluate_bundle(const FeatureBundle& bundle, const std::vector<double>& c_candidates,
                           int cv_epochs, int final_epochs, std::uint64_t seed, int threads) {
  if (c_candidates.empty()) throw std::invalid_argument("evaluate_bundle: empty C candidates");
  EvalReport report;
  double best_cv = std::numeric_limits<double>::infinity();
  for (const double c : c_candidates) {
    SvmConfig cfg{c, cv_epochs, seed};
    const double cv = loo_cv(bundle.train, cfg, threads);
    if (cv < best_cv) {  // ties keep the earlier (smaller) C
      best_cv = cv;
      report.best_C = c;
    }
  }
  report.cv_error = best_cv;
  const SvmModel model = train_svm(bundle.train, SvmConfig{report.best_C, final_epochs, seed});
  report.test_error = error_rate(model, bundle.test);
  return report;
}

std::string classification_report_tsv(const std::string& dataset_name, FeatureMode mode,
                                      const std::optional<SaxParams>& sax,
                                      const EvalReport& report) {
  std::ostringstream out;
  out << "dataset\tmode\tn\tw\ta\tC\tcv_train_error\ttest_error\n";
  out << dataset_name << '\t' << (mode == FeatureMode::sax ? "sax" : "vector") << '\t';
  if (sax) {
    out << sax->n << '\t' << sax->w << '\t' << sax->a << '\t';
  } else {
    out << "-\t-\t-\t";
  }
  out << report.best_C << '\t' << report.cv_error << '\t' << report.test_error << '\n';
  return out.str();
}

std::vector<SampleGraphStats> per_map_graph_stats(const ModelParams& params,
                                                  const NetworkConfig& cfg,
                                                  const std::vector<Sample>& samples,
                                                  const QuantizerConfig& quantizer, int threads) {
  const auto codes = encode_all(params, cfg, samples, threads);
  const int maps = cfg.filters2;
  std::vector<SampleGraphStats> stats(samples.size() * static_cast<std::size_t>(maps));
  parallel_for(stats.size(), threads, [&](std::size_t k) {
    const std::size_t i = k / static_cast<std::size_t>(maps);
    const int m = static_cast<int>(k % static_cast<std::size_t>(maps));
    const TransitionGraph g =
        TransitionGraph::from_sequence(codes[i].per_map[static_cast<std::size_t>(m)], quantizer);
    stats[k] = SampleGraphStats{static_cast<int>(i), m, samples[i].label, graph_stats(g)};
  });
  return stats;
}

namespace {

struct Aggregate {
  double degree = 0, modularity = 0, pagerank = 0, path = 0;
  int count = 0;
};

std::string format6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

}  // namespace

std::string class_stats_table_tsv(const std::string& dataset_name,
                                  const std::vector<SampleGraphStats>& stats) {
  std::vector<double> degree[2], modularity[2], pagerank[2], path[2];
  for (const SampleGraphStats& s : stats) {
    const int side = s.label < 0 ? 0 : 1;  // 0 = normal, 1 = abnormal
    degree[side].push_back(s.stats.avg_degree);
    modularity[side].push_back(s.stats.modularity);
    pagerank[side].push_back(s.stats.pagerank_max);
    path[side].push_back(s.stats.avg_path_length);
  }
  const auto mean = [](const std::vector<double>& v) {
    double acc = 0;
    for (const double x : v) acc += x;
    return v.empty() ? 0.0 : acc / static_cast<double>(v.size());
  };
  std::ostringstream out;
  out << "group\tavg_degree\tmodularity\tpagerank_max\tavg_path_length\n";
  const char* names[2] = {"normal", "abnormal"};
  for (int side = 0; side < 2; ++side) {
    out << dataset_name << ' ' << names[side] << '\t' << format6(mean(degree[side])) << '\t'
        << format6(mean(modularity[side])) << '\t' << format6(mean(pagerank[side])) << '\t'
        << format6(mean(path[side])) << '\n';
  }
  const auto p_or_nan = [](const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() < 2 || b.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    return welch_p_value(a, b);
  };
  out << "p_value\t" << format6(p_or_nan(degree[0], degree[1])) << '\t'
      << format6(p_or_nan(modularity[0], modularity[1])) << '\t'
      << format6(p_or_nan(pagerank[0], pagerank[1])) << '\t'
      << format6(p_or_nan(path[0], path[1])) << '\n';
  return out.str();
}

std::string graph_stats_tsv(const std::vector<SampleGraphStats>& stats) {
  std::ostringstream out;
  out << "sample\tmap\tlabel\tavg_degree\tmodularity\tpagerank_max\tavg_path_length\n";
  for (const SampleGraphStats& s : stats) {
    out << s.sample_index << '\t' << s.map_index << '\t' << s.label << '\t'
        << format6(s.stats.avg_degree) << '\t' << format6(s.stats.modularity) << '\t'
        << format6(s.stats.pagerank_max) << '\t' << format6(s.stats.avg_path_length) << '\n';
  }
  return out.str();
}

}  // namespace tsdeconv
