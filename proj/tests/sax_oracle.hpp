#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "tsdeconv/sax.hpp"

namespace testutil {

// Independent brute-force SAX, written against the definitions rather than
// the library internals: plain loops, no Eigen. Shares only the breakpoint
// table, which the oracle-equivalence contract fixes as common ground.
inline std::vector<std::string> brute_force_sax(const std::vector<double>& x, int n, int w, int a,
                                                bool window_znorm = true) {
  const std::vector<double> cuts = tsdeconv::breakpoints(a);
  std::vector<std::string> words;
  for (std::size_t start = 0; start + static_cast<std::size_t>(n) <= x.size(); ++start) {
    std::vector<double> win(x.begin() + static_cast<std::ptrdiff_t>(start),
                            x.begin() + static_cast<std::ptrdiff_t>(start) + n);
    if (window_znorm) {
      double mean = 0.0;
      for (const double v : win) mean += v;
      mean /= n;
      double var = 0.0;
      for (const double v : win) var += (v - mean) * (v - mean);
      var /= n;
      const double sd = std::sqrt(var);
      if (sd < 1e-8) {
        std::fill(win.begin(), win.end(), 0.0);
      } else {
        for (double& v : win) v = (v - mean) / sd;
      }
    }
    std::string word;
    for (int j = 0; j < w; ++j) {
      const double lo = static_cast<double>(n) * j / w;
      const double hi = static_cast<double>(n) * (j + 1) / w;
      double acc = 0.0, weight = 0.0;
      for (int i = 0; i < n; ++i) {
        const double overlap = std::min(hi, static_cast<double>(i + 1)) -
                               std::max(lo, static_cast<double>(i));
        if (overlap > 0.0) {
          acc += overlap * win[static_cast<std::size_t>(i)];
          weight += overlap;
        }
      }
      double segment_mean = acc / weight;
      if (std::fabs(segment_mean) < 1e-12) segment_mean = 0.0;  // shared zero-snap rule
      std::size_t k = 0;
      while (k < cuts.size() && cuts[k] <= segment_mean) ++k;
      word.push_back(static_cast<char>('a' + k));
    }
    words.push_back(word);
  }
  return words;
}

}  // namespace testutil
