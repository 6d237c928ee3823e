#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "tsdeconv/net.hpp"
#include "tsdeconv/rng.hpp"
#include "tsdeconv/tensor.hpp"

namespace testutil {

/// Distance of a forward pass from the nearest non-differentiable point:
/// the smallest |pre-activation| entering a relu and the smallest pooling
/// argmax gap. Finite-difference gradient checks are only valid when this
/// margin safely exceeds the probe-induced activation shifts; exact zeros
/// are common (relu plateaus feeding the decoder), not a fluke.
inline double kink_margin(const tsdeconv::ForwardTrace& tr, const tsdeconv::NetworkConfig& cfg) {
  using tsdeconv::Index;
  double margin = std::numeric_limits<double>::infinity();
  const auto scan_abs = [&margin](const tsdeconv::Tensord& t) {
    for (Index i = 0; i < t.size(); ++i) margin = std::min(margin, std::fabs(t[i]));
  };
  scan_abs(tr.z1);
  scan_abs(tr.z2);
  scan_abs(tr.zd2);
  if (cfg.final_activation == tsdeconv::FinalActivation::relu) scan_abs(tr.zd1);

  // Pooling is stable when the window is pinned at zero or the top two
  // values are clearly separated.
  const Index c = tr.h1.extent(0), h = tr.h1.extent(1), w = tr.h1.extent(2);
  for (Index ci = 0; ci < c; ++ci) {
    for (Index y = 0; y < h; ++y) {
      for (Index start = 0; start < w; start += cfg.pool_w) {
        const Index end = std::min<Index>(w, start + cfg.pool_w);
        if (end - start < 2) continue;
        double top = -1.0, second = -1.0;
        for (Index t = start; t < end; ++t) {
          const double v = tr.h1(ci, y, t);
          if (v > top) {
            second = top;
            top = v;
          } else if (v > second) {
            second = v;
          }
        }
        if (top > 0.0) margin = std::min(margin, top - second);
      }
    }
  }
  return margin;
}

inline tsdeconv::Tensord random_tensor(tsdeconv::Rng& rng, std::vector<tsdeconv::Index> shape,
                                       double lo = -1.0, double hi = 1.0) {
  tsdeconv::Tensord t(std::move(shape));
  for (tsdeconv::Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(lo, hi);
  return t;
}

inline Eigen::VectorXd random_vector(tsdeconv::Rng& rng, tsdeconv::Index n, double lo = -1.0,
                                     double hi = 1.0) {
  Eigen::VectorXd v(n);
  for (tsdeconv::Index i = 0; i < n; ++i) v[i] = rng.uniform(lo, hi);
  return v;
}

/// Gradient-check metric: elementwise |a-b| / max(|a|, |b|, guard).
inline double max_rel_err(const tsdeconv::Tensord& a, const tsdeconv::Tensord& b,
                          double guard = 1e-3) {
  double worst = 0.0;
  for (tsdeconv::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), guard});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

inline double max_rel_err(const Eigen::VectorXd& a, const Eigen::VectorXd& b,
                          double guard = 1e-3) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const double denom = std::max({std::fabs(a[i]), std::fabs(b[i]), guard});
    worst = std::max(worst, std::fabs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace testutil
