#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "tsdeconv/dataset.hpp"
#include "tsdeconv/synth.hpp"

using namespace tsdeconv;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "tsdeconv_dataset_test" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path);
  out << content;
}

// Two channels, rows are time steps.
void write_toy_dataset(const fs::path& dir) {
  write_file(dir / "a.txt", "1 10\n2 20\n3 30\n4 40\n");
  write_file(dir / "b.txt", "5 50\n6 60\n");
  write_file(dir / "c.txt", "0 0\n1 5\n2 10\n");
  write_file(dir / "labels.tsv", "a.txt\t1\ttrain\nb.txt\t2\ttrain\nc.txt\t1\ttest\n");
}

}  // namespace

TEST_CASE("native loading, standardization, and padding") {
  const fs::path dir = fresh_dir("toy");
  write_toy_dataset(dir);
  const Dataset ds = load_dataset(dir);

  CHECK(ds.channels == 2);
  CHECK(ds.padded_length == 4);
  CHECK(ds.train.size() == 2);
  CHECK(ds.test.size() == 1);
  CHECK(ds.standardized);
  CHECK(ds.name == "toy");

  // Raw label 1 -> -1, raw label 2 -> +1.
  CHECK(ds.train[0].label == -1);
  CHECK(ds.train[1].label == +1);
  CHECK(ds.test[0].label == -1);

  // Training stats: channel 0 over {1..6}: mean 3.5, channel 1 over
  // {10..60}: mean 35.
  CHECK(ds.stats.mean[0] == doctest::Approx(3.5));
  CHECK(ds.stats.mean[1] == doctest::Approx(35.0));

  // Standardized originals, zero pads beyond the original length.
  const Sample& b = ds.train[1];
  CHECK(b.original_length == 2);
  CHECK(b.values.cols() == 4);
  CHECK(b.values(0, 0) == doctest::Approx((5.0 - 3.5) / ds.stats.stddev[0]));
  CHECK(b.values(0, 2) == 0.0);
  CHECK(b.values(1, 3) == 0.0);

  // Standardization used training statistics for the test split too.
  CHECK(ds.test[0].values(1, 1) == doctest::Approx((5.0 - 35.0) / ds.stats.stddev[1]));

  // Re-standardizing is rejected.
  Dataset copy = ds;
  CHECK_THROWS_AS(standardize(copy), std::invalid_argument);
}

TEST_CASE("single-sample directory loads with a +/-1 label") {
  const fs::path dir = fresh_dir("single");
  write_file(dir / "only.txt", "1 2\n3 4\n");
  write_file(dir / "labels.tsv", "only.txt\t1\ttrain\n");
  const Dataset ds = load_dataset(dir);
  CHECK(ds.train.size() == 1);
  CHECK(ds.test.empty());
  CHECK(ds.train[0].label == +1);
}

TEST_CASE("format errors carry file and line context") {
  SUBCASE("ragged channel counts") {
    const fs::path dir = fresh_dir("ragged");
    write_file(dir / "a.txt", "1 2\n3\n");
    write_file(dir / "labels.tsv", "a.txt\t1\ttrain\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("a.txt:2"), FormatError);
  }
  SUBCASE("unknown label") {
    const fs::path dir = fresh_dir("badlabel");
    write_file(dir / "a.txt", "1 2\n");
    write_file(dir / "labels.tsv", "a.txt\tpositive\ttrain\n");
    CHECK_THROWS_WITH_AS(load_dataset(dir), doctest::Contains("unknown label"), FormatError);
  }
  SUBCASE("unknown split") {
    const fs::path dir = fresh_dir("badsplit");
    write_file(dir / "a.txt", "1 2\n");
    write_file(dir / "labels.tsv", "a.txt\t1\tvalidation\n");
    CHECK_THROWS_AS(load_dataset(dir), FormatError);
  }
  SUBCASE("more than two distinct labels") {
    const fs::path dir = fresh_dir("threelabels");
    write_file(dir / "a.txt", "1 2\n");
    write_file(dir / "b.txt", "1 2\n");
    write_file(dir / "c.txt", "1 2\n");
    write_file(dir / "labels.tsv", "a.txt\t1\ttrain\nb.txt\t2\ttrain\nc.txt\t3\ttest\n");
    CHECK_THROWS_AS(load_dataset(dir), FormatError);
  }
  SUBCASE("missing directory") {
    CHECK_THROWS_AS(load_dataset(fs::temp_directory_path() / "does_not_exist_731"), FormatError);
  }
}

TEST_CASE("csv manifest loading matches the native loader") {
  const fs::path native_dir = fresh_dir("native_eq");
  write_toy_dataset(native_dir);
  const Dataset native = load_dataset(native_dir);

  const fs::path csv_dir = fresh_dir("csv_eq");
  std::string csv = "sample_id,channel,t,value,label,split\n";
  const auto emit = [&csv](const std::string& id, int channel, int t, double v, int label,
                           const std::string& split) {
    csv += id + "," + std::to_string(channel) + "," + std::to_string(t) + "," +
           std::to_string(v) + "," + std::to_string(label) + "," + split + "\n";
  };
  const double a0[] = {1, 2, 3, 4}, a1[] = {10, 20, 30, 40};
  for (int t = 0; t < 4; ++t) {
    emit("a", 0, t, a0[t], 1, "train");
    emit("a", 1, t, a1[t], 1, "train");
  }
  const double b0[] = {5, 6}, b1[] = {50, 60};
  for (int t = 0; t < 2; ++t) {
    emit("b", 0, t, b0[t], 2, "train");
    emit("b", 1, t, b1[t], 2, "train");
  }
  const double c0[] = {0, 1, 2}, c1[] = {0, 5, 10};
  for (int t = 0; t < 3; ++t) {
    emit("c", 0, t, c0[t], 1, "test");
    emit("c", 1, t, c1[t], 1, "test");
  }
  write_file(csv_dir / "data.csv", csv);
  const Dataset from_csv = load_dataset(csv_dir, DataFormat::csv_manifest);

  REQUIRE(from_csv.train.size() == native.train.size());
  REQUIRE(from_csv.test.size() == native.test.size());
  CHECK(from_csv.padded_length == native.padded_length);
  for (std::size_t i = 0; i < native.train.size(); ++i) {
    CHECK((from_csv.train[i].values - native.train[i].values).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(from_csv.train[i].label == native.train[i].label);
  }

  SUBCASE("a wrong header is rejected") {
    write_file(csv_dir / "data.csv", "id,channel,t,value,label,split\n");
    CHECK_THROWS_AS(load_dataset(csv_dir, DataFormat::csv_manifest), FormatError);
  }
}

TEST_CASE("split files round-trip losslessly") {
  const fs::path dir = fresh_dir("roundtrip");
  write_toy_dataset(dir);
  const Dataset ds = load_dataset(dir);

  const fs::path path = dir / "split.bin";
  save_split(ds, path);
  const Dataset back = load_split(path);

  CHECK(back.name == ds.name);
  CHECK(back.channels == ds.channels);
  CHECK(back.padded_length == ds.padded_length);
  CHECK(back.standardized == ds.standardized);
  CHECK(back.stats.mean == ds.stats.mean);
  CHECK(back.stats.stddev == ds.stats.stddev);
  REQUIRE(back.train.size() == ds.train.size());
  for (std::size_t i = 0; i < ds.train.size(); ++i) {
    CHECK(back.train[i].label == ds.train[i].label);
    CHECK(back.train[i].original_length == ds.train[i].original_length);
    CHECK((back.train[i].values.array() == ds.train[i].values.array()).all());
  }

  SUBCASE("corrupted header fails closed") {
    const fs::path bad = dir / "corrupt.bin";
    write_file(bad, "TSDCSPLTgarbage");
    CHECK_THROWS_AS(load_split(bad), FormatError);
    write_file(bad, "WRONGMAGIC");
    CHECK_THROWS_AS(load_split(bad), FormatError);
  }
  SUBCASE("an empty dataset round-trips") {
    Dataset empty;
    empty.name = "empty";
    empty.channels = 3;
    const fs::path p = dir / "empty.bin";
    save_split(empty, p);
    const Dataset back_empty = load_split(p);
    CHECK(back_empty.train.empty());
    CHECK(back_empty.test.empty());
    CHECK(back_empty.channels == 3);
  }
}

TEST_CASE("synthetic profiles reproduce the documented shape statistics") {
  SUBCASE("ecg profile") {
    const auto samples = synth_ecg_like(7);
    const fs::path dir = fresh_dir("synth_ecg");
    write_native_dataset(samples, dir);
    const Dataset ds = load_dataset(dir, DataFormat::native, "ecg");
    CHECK(ds.channels == 2);
    CHECK(ds.padded_length == 153);
    CHECK(ds.train.size() == 100);
    CHECK(ds.test.size() == 100);
    int abnormal = 0;
    for (const auto& s : ds.train) abnormal += s.label > 0;
    for (const auto& s : ds.test) abnormal += s.label > 0;
    CHECK(abnormal == 67);
    for (const auto& s : ds.train) {
      CHECK(s.original_length >= 39);
      CHECK(s.original_length <= 153);
    }
  }
  SUBCASE("wafer profile shapes without the full write") {
    const auto samples = synth_wafer_like(7);
    CHECK(samples.size() == 1194);
    std::size_t train = 0, abnormal = 0;
    int max_len = 0, min_len = 1 << 20;
    for (const auto& s : samples) {
      train += s.is_train;
      abnormal += s.raw_label == 2;
      CHECK(s.values.rows() == 6);
      max_len = std::max(max_len, static_cast<int>(s.values.cols()));
      min_len = std::min(min_len, static_cast<int>(s.values.cols()));
    }
    CHECK(train == 896);
    CHECK(abnormal == 127);
    CHECK(max_len == 199);
    CHECK(min_len >= 104);
  }
  SUBCASE("generation is deterministic in the seed") {
    const auto a = synth_ecg_like(11);
    const auto b = synth_ecg_like(11);
    REQUIRE(a.size() == b.size());
    CHECK((a[0].values.array() == b[0].values.array()).all());
    CHECK((a[57].values.array() == b[57].values.array()).all());
    const auto c = synth_ecg_like(12);
    CHECK_FALSE((a[0].values.array() == c[0].values.array()).all());
  }
}
