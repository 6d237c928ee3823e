#include "tsdeconv/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "tsdeconv/serialize.hpp"

namespace tsdeconv {

namespace {

struct RawSample {
  Eigen::MatrixXd values;  // C x L
  int raw_label = 0;
  bool is_train = false;
  std::string source;  // for error messages
};

Eigen::MatrixXd parse_sample_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open sample file: " + path.string());
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.empty()) continue;  // blank line
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(rows.front().size()) + " channels, got " +
                        std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw FormatError(path.string() + ": no data rows");
  const auto channels = static_cast<Eigen::Index>(rows.front().size());
  const auto length = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd values(channels, length);  // rows in file are time steps
  for (Eigen::Index t = 0; t < length; ++t) {
    for (Eigen::Index c = 0; c < channels; ++c) {
      values(c, t) = rows[static_cast<std::size_t>(t)][static_cast<std::size_t>(c)];
    }
  }
  return values;
}

bool parse_split(const std::string& s, const std::string& context) {
  if (s == "train") return true;
  if (s == "test") return false;
  throw FormatError(context + ": unknown split '" + s + "' (expected train or test)");
}

std::vector<RawSample> load_native(const std::filesystem::path& dir) {
  const auto manifest_path = dir / "labels.tsv";
  std::ifstream manifest(manifest_path);
  if (!manifest) throw FormatError("cannot open manifest: " + manifest_path.string());
  std::vector<RawSample> samples;
  std::string line;
  int line_no = 0;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = manifest_path.string() + ":" + std::to_string(line_no);
    std::istringstream ss(line);
    std::string filename, label_str, split_str;
    if (!std::getline(ss, filename, '\t') || !std::getline(ss, label_str, '\t') ||
        !std::getline(ss, split_str)) {
      throw FormatError(context + ": expected filename<TAB>label<TAB>split");
    }
    RawSample s;
    s.source = context;
    try {
      s.raw_label = std::stoi(label_str);
    } catch (const std::exception&) {
      throw FormatError(context + ": unknown label '" + label_str + "'");
    }
    s.is_train = parse_split(split_str, context);
    s.values = parse_sample_file(dir / filename);
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw FormatError(manifest_path.string() + ": empty manifest");
  return samples;
}

std::vector<RawSample> load_csv_manifest(const std::filesystem::path& dir) {
  const auto csv_path = dir / "data.csv";
  std::ifstream in(csv_path);
  if (!in) throw FormatError("cannot open csv: " + csv_path.string());
  std::string line;
  if (!std::getline(in, line)) throw FormatError(csv_path.string() + ": empty file");
  if (line != "sample_id,channel,t,value,label,split") {
    throw FormatError(csv_path.string() + ": expected header sample_id,channel,t,value,label,split");
  }
  struct Cell {
    int channel, t;
    double value;
  };
  struct Entry {
    std::vector<Cell> cells;
    int raw_label = 0;
    bool is_train = false;
  };
  std::map<std::string, Entry> by_id;
  std::vector<std::string> id_order;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const std::string context = csv_path.string() + ":" + std::to_string(line_no);
    std::istringstream ss(line);
    std::string id, channel_s, t_s, value_s, label_s, split_s;
    if (!std::getline(ss, id, ',') || !std::getline(ss, channel_s, ',') ||
        !std::getline(ss, t_s, ',') || !std::getline(ss, value_s, ',') ||
        !std::getline(ss, label_s, ',') || !std::getline(ss, split_s)) {
      throw FormatError(context + ": expected 6 comma-separated fields");
    }
    try {
      auto [it, inserted] = by_id.try_emplace(id);
      if (inserted) id_order.push_back(id);
      Entry& e = it->second;
      e.cells.push_back({std::stoi(channel_s), std::stoi(t_s), std::stod(value_s)});
      e.raw_label = std::stoi(label_s);
      e.is_train = parse_split(split_s, context);
    } catch (const FormatError&) {
      throw;
    } catch (const std::exception&) {
      throw FormatError(context + ": malformed numeric field");
    }
  }
  std::vector<RawSample> samples;
  for (const auto& id : id_order) {
    const Entry& e = by_id[id];
    int max_c = 0, max_t = 0;
    for (const Cell& c : e.cells) {
      max_c = std::max(max_c, c.channel);
      max_t = std::max(max_t, c.t);
    }
    RawSample s;
    s.source = csv_path.string() + " sample " + id;
    s.raw_label = e.raw_label;
    s.is_train = e.is_train;
    s.values = Eigen::MatrixXd::Zero(max_c + 1, max_t + 1);
    for (const Cell& c : e.cells) s.values(c.channel, c.t) = c.value;
    samples.push_back(std::move(s));
  }
  if (samples.empty()) throw FormatError(csv_path.string() + ": no samples");
  return samples;
}

// Maps raw labels onto {-1, +1}: pass {-1,+1} and {0,1}/{1,2}-style pairs
// through by order (smaller -> -1), reject anything with more than two
// distinct values.
int map_label(int raw, const std::set<int>& distinct, const std::string& context) {
  if (distinct.size() > 2) {
    throw FormatError(context + ": more than two distinct labels in dataset");
  }
  if (distinct.size() == 1) return raw == -1 ? -1 : +1;
  return raw == *distinct.begin() ? -1 : +1;
}

}  // namespace

void standardize(Dataset& dataset) {
  if (dataset.standardized) {
    throw std::invalid_argument("standardize: dataset is already standardized");
  }
  const int C = dataset.channels;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(C);
  long long count = 0;
  for (const Sample& s : dataset.train) {
    mean += s.values.leftCols(s.original_length).rowwise().sum();
    sq += s.values.leftCols(s.original_length).array().square().matrix().rowwise().sum();
    count += s.original_length;
  }
  if (count == 0) throw std::invalid_argument("standardize: no training data");
  mean /= static_cast<double>(count);
  Eigen::VectorXd variance = sq / static_cast<double>(count) - mean.array().square().matrix();
  Eigen::VectorXd stddev(C);
  for (int c = 0; c < C; ++c) {
    stddev[c] = variance[c] > 1e-16 ? std::sqrt(variance[c]) : 1.0;
  }
  auto apply = [&](Sample& s) {
    for (int c = 0; c < C; ++c) {
      s.values.row(c).leftCols(s.original_length) =
          (s.values.row(c).leftCols(s.original_length).array() - mean[c]) / stddev[c];
    }
  };
  for (Sample& s : dataset.train) apply(s);
  for (Sample& s : dataset.test) apply(s);
  dataset.stats = {mean, stddev};
  dataset.standardized = true;
}

void pad_to_max_length(Dataset& dataset) {
  int max_len = 0;
  for (const Sample& s : dataset.train) max_len = std::max(max_len, s.original_length);
  for (const Sample& s : dataset.test) max_len = std::max(max_len, s.original_length);
  auto apply = [&](Sample& s) {
    if (s.values.cols() == max_len) return;
    Eigen::MatrixXd padded = Eigen::MatrixXd::Zero(dataset.channels, max_len);
    padded.leftCols(s.values.cols()) = s.values;
    s.values = std::move(padded);
  };
  for (Sample& s : dataset.train) apply(s);
  for (Sample& s : dataset.test) apply(s);
  dataset.padded_length = max_len;
}

Dataset load_dataset(const std::filesystem::path& dir, DataFormat format,
                     const std::string& name) {
  if (!std::filesystem::exists(dir)) {
    throw FormatError("dataset directory does not exist: " + dir.string());
  }
  std::vector<RawSample> raw =
      format == DataFormat::native ? load_native(dir) : load_csv_manifest(dir);

  const auto channels = raw.front().values.rows();
  std::set<int> distinct;
  for (const RawSample& s : raw) {
    if (s.values.rows() != channels) {
      throw FormatError(s.source + ": expected " + std::to_string(channels) + " channels, got " +
                        std::to_string(s.values.rows()));
    }
    if (!s.values.allFinite()) throw FormatError(s.source + ": non-finite value");
    distinct.insert(s.raw_label);
  }

  Dataset dataset;
  dataset.name = name.empty() ? dir.filename().string() : name;
  dataset.channels = static_cast<int>(channels);
  for (RawSample& s : raw) {
    Sample sample;
    sample.label = map_label(s.raw_label, distinct, s.source);
    sample.original_length = static_cast<int>(s.values.cols());
    sample.values = std::move(s.values);
    (s.is_train ? dataset.train : dataset.test).push_back(std::move(sample));
  }
  standardize(dataset);
  pad_to_max_length(dataset);
  return dataset;
}

namespace {

constexpr char kSplitMagic[8] = {'T', 'S', 'D', 'C', 'S', 'P', 'L', 'T'};
constexpr std::uint32_t kSplitVersion = 1;

void write_samples(std::ostream& out, const std::vector<Sample>& samples) {
  io::write_pod<std::uint64_t>(out, samples.size());
  for (const Sample& s : samples) {
    io::write_pod<std::int32_t>(out, s.label);
    io::write_pod<std::int32_t>(out, s.original_length);
    io::write_pod<std::int64_t>(out, s.values.rows());
    io::write_pod<std::int64_t>(out, s.values.cols());
    io::write_doubles(out, s.values.data(), static_cast<std::size_t>(s.values.size()));
  }
}

std::vector<Sample> read_samples(std::istream& in) {
  const auto n = io::read_pod<std::uint64_t>(in, "sample count");
  if (n > (1ull << 32)) throw FormatError("implausible sample count in split file");
  std::vector<Sample> samples(n);
  for (auto& s : samples) {
    s.label = io::read_pod<std::int32_t>(in, "sample label");
    s.original_length = io::read_pod<std::int32_t>(in, "sample length");
    const auto rows = io::read_pod<std::int64_t>(in, "sample rows");
    const auto cols = io::read_pod<std::int64_t>(in, "sample cols");
    if (rows < 0 || cols < 0 || rows * cols > (1ll << 36)) {
      throw FormatError("implausible sample extents in split file");
    }
    s.values.resize(rows, cols);
    io::read_doubles(in, s.values.data(), static_cast<std::size_t>(rows * cols), "sample values");
  }
  return samples;
}

}  // namespace

void save_split(const Dataset& dataset, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open split file for writing: " + path.string());
  out.write(kSplitMagic, sizeof(kSplitMagic));
  io::write_pod<std::uint32_t>(out, kSplitVersion);
  io::write_string(out, dataset.name);
  io::write_pod<std::int32_t>(out, dataset.channels);
  io::write_pod<std::int32_t>(out, dataset.padded_length);
  io::write_pod<std::uint8_t>(out, dataset.standardized ? 1 : 0);
  io::write_vector(out, dataset.stats.mean.size() ? dataset.stats.mean
                                                  : Eigen::VectorXd::Zero(dataset.channels));
  io::write_vector(out, dataset.stats.stddev.size() ? dataset.stats.stddev
                                                    : Eigen::VectorXd::Ones(dataset.channels));
  write_samples(out, dataset.train);
  write_samples(out, dataset.test);
  if (!out) throw FormatError("write failed: " + path.string());
}

Dataset load_split(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open split file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kSplitMagic, sizeof(magic)) != 0) {
    throw FormatError("not a split file: " + path.string());
  }
  const auto version = io::read_pod<std::uint32_t>(in, "split version");
  if (version != kSplitVersion) {
    throw FormatError("unsupported split version " + std::to_string(version) + " in " +
                      path.string());
  }
  Dataset dataset;
  dataset.name = io::read_string(in, "dataset name");
  dataset.channels = io::read_pod<std::int32_t>(in, "channel count");
  dataset.padded_length = io::read_pod<std::int32_t>(in, "padded length");
  dataset.standardized = io::read_pod<std::uint8_t>(in, "standardized flag") != 0;
  dataset.stats.mean = io::read_vector(in, "channel means");
  dataset.stats.stddev = io::read_vector(in, "channel stddevs");
  dataset.train = read_samples(in);
  dataset.test = read_samples(in);
  return dataset;
}

}  // namespace tsdeconv
