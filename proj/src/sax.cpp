#include "tsdeconv/sax.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "tsdeconv/special.hpp"

namespace tsdeconv {

void SaxParams::validate(Eigen::Index series_length) const {
  if (w < 1 || w > n) throw std::invalid_argument("sax: need 1 <= w <= n");
  if (a < 2 || a > 26) throw std::invalid_argument("sax: alphabet size must be in [2, 26]");
  if (series_length < n) {
    throw std::invalid_argument("sax: series length " + std::to_string(series_length) +
                                " shorter than window length " + std::to_string(n));
  }
}

VectorXd znormalize(const Eigen::Ref<const VectorXd>& x) {
  if (x.size() == 0) throw std::invalid_argument("znormalize: empty vector");
  const double mean = x.mean();
  const double var = (x.array() - mean).square().sum() / static_cast<double>(x.size());
  const double std = std::sqrt(var);
  if (std < 1e-8) return VectorXd::Zero(x.size());
  return (x.array() - mean) / std;
}

VectorXd paa(const Eigen::Ref<const VectorXd>& x, int w) {
  const auto m = x.size();
  if (w < 1 || w > m) throw std::invalid_argument("paa: need 1 <= w <= length");
  if (w == m) return x;
  VectorXd out(w);
  const double seg = static_cast<double>(m) / static_cast<double>(w);
  for (int j = 0; j < w; ++j) {
    const double lo = seg * j;
    const double hi = seg * (j + 1);
    double acc = 0.0;
    for (Eigen::Index i = static_cast<Eigen::Index>(std::floor(lo)); i < m; ++i) {
      const double overlap = std::min(hi, static_cast<double>(i + 1)) -
                             std::max(lo, static_cast<double>(i));
      if (overlap <= 0.0) break;
      acc += overlap * x[i];
    }
    out[j] = acc / seg;
  }
  return out;
}

std::vector<double> breakpoints(int a) {
  if (a < 2 || a > 26) throw std::invalid_argument("breakpoints: alphabet size must be in [2, 26]");
  return gaussian_breakpoints(a);
}

namespace {

char letter_for(double value, const std::vector<double>& cuts) {
  // Z-normalized windows make mathematically-zero segment means common (any
  // segment covering the whole window), and zero sits exactly on a breakpoint
  // for even alphabets. Snap rounding noise so the letter is reproducible.
  if (std::fabs(value) < 1e-12) value = 0.0;
  // Index = number of breakpoints <= value, so an exact hit takes the upper letter.
  const auto it = std::upper_bound(cuts.begin(), cuts.end(), value);
  return static_cast<char>('a' + (it - cuts.begin()));
}

std::string symbolize_with(const Eigen::Ref<const VectorXd>& means,
                           const std::vector<double>& cuts) {
  std::string word(static_cast<std::size_t>(means.size()), 'a');
  for (Eigen::Index i = 0; i < means.size(); ++i) {
    word[static_cast<std::size_t>(i)] = letter_for(means[i], cuts);
  }
  return word;
}

}  // namespace

std::string symbolize(const Eigen::Ref<const VectorXd>& means, int a) {
  return symbolize_with(means, breakpoints(a));
}

std::vector<std::string> sax_transform(const Eigen::Ref<const VectorXd>& x, const SaxParams& p,
                                       const SaxOptions& opt) {
  p.validate(x.size());
  const std::vector<double> cuts = breakpoints(p.a);
  std::vector<std::string> words;
  words.reserve(static_cast<std::size_t>(x.size() - p.n + 1));
  for (Eigen::Index t = 0; t + p.n <= x.size(); ++t) {
    VectorXd window = x.segment(t, p.n);
    if (opt.window_znorm) window = znormalize(window);
    const std::string word = symbolize_with(paa(window, p.w), cuts);
    if (opt.numerosity_reduction && !words.empty() && words.back() == word) continue;
    words.push_back(word);
  }
  return words;
}

WordHistogram bag_of_words(const std::vector<std::string>& words) {
  WordHistogram hist;
  for (const auto& w : words) hist.add(w);
  return hist;
}

WordHistogram merge(const WordHistogram& a, const WordHistogram& b) {
  WordHistogram out = a;
  for (const auto& [word, count] : b.counts) {
    out.counts[word] += count;
  }
  out.total = a.total + b.total;
  return out;
}

WordHistogram prefix_keys(const WordHistogram& h, const std::string& prefix) {
  WordHistogram out;
  for (const auto& [word, count] : h.counts) out.counts[prefix + word] = count;
  out.total = h.total;
  return out;
}

std::string histogram_tsv(const WordHistogram& h) {
  std::ostringstream out;
  for (const auto& [word, count] : h.counts) out << word << '\t' << count << '\n';
  return out.str();
}

}  // namespace tsdeconv
