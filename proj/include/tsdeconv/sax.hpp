#pragma once

#include <Eigen/Core>
#include <map>
#include <string>
#include <vector>

#include "tsdeconv/errors.hpp"

namespace tsdeconv {

using Eigen::VectorXd;

/// The SAX triple: sliding-window length, symbols per window (PAA segments),
/// and alphabet size. Letters are drawn from 'a'..'z' in order.
struct SaxParams {
  int n = 16;  // window length
  int w = 4;   // symbols per window
  int a = 4;   // alphabet size, 2..26

  void validate(Eigen::Index series_length) const;
};

struct SaxOptions {
  bool window_znorm = true;          // re-normalize each window before PAA
  bool numerosity_reduction = false; // drop consecutive duplicate words
};

/// (x - mean) / std with the population convention. A near-constant input
/// (std < 1e-8) maps to all zeros.
VectorXd znormalize(const Eigen::Ref<const VectorXd>& x);

/// Piecewise aggregate approximation to w values using fractional segment
/// coverage: element j averages x over [j*m/w, (j+1)*m/w), weighting boundary
/// points by their overlap. Reduces to plain segment means when w divides m.
VectorXd paa(const Eigen::Ref<const VectorXd>& x, int w);

/// SAX alphabet thresholds: gaussian_breakpoints(a) with the alphabet range
/// check (2 <= a <= 26).
std::vector<double> breakpoints(int a);

/// Maps each value to its letter; a value exactly on a breakpoint takes the
/// upper letter. Values within 1e-12 of zero are treated as exactly zero so
/// the mathematically-zero segment means of z-normalized windows symbolize
/// reproducibly.
std::string symbolize(const Eigen::Ref<const VectorXd>& means, int a);

/// Stride-1 sliding-window SAX: each window is (optionally) z-normalized,
/// reduced by PAA, and symbolized into one w-letter word.
std::vector<std::string> sax_transform(const Eigen::Ref<const VectorXd>& x, const SaxParams& p,
                                       const SaxOptions& opt = {});

/// Multiset of SAX words. `total` equals the number of windows contributing.
struct WordHistogram {
  std::map<std::string, long long> counts;
  long long total = 0;

  void add(const std::string& word, long long k = 1) {
    counts[word] += k;
    total += k;
  }
  bool operator==(const WordHistogram& other) const {
    return total == other.total && counts == other.counts;
  }
};

WordHistogram bag_of_words(const std::vector<std::string>& words);

/// Elementwise addition of counts.
WordHistogram merge(const WordHistogram& a, const WordHistogram& b);

/// Copy of `h` with every key prefixed, used to keep per-code-map bags
/// distinguishable after merging.
WordHistogram prefix_keys(const WordHistogram& h, const std::string& prefix);

/// Sorted "word<TAB>count" lines, one per entry, for diffing and golden tests.
std::string histogram_tsv(const WordHistogram& h);

}  // namespace tsdeconv
