#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <type_traits>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "tsdeconv/errors.hpp"
#include "tsdeconv/tensor.hpp"

namespace tsdeconv {

template <typename Scalar>
using Vector = Eigen::Vector<Scalar, Eigen::Dynamic>;

/// Argmax offsets recorded by max-pooling along the time axis, needed to
/// scatter activations back to their original positions when unpooling.
struct PoolIndices {
  std::vector<Index> shape;   // extents of the pooled map (C, H, Wp)
  std::vector<int> offsets;   // per pooled element, offset of the max within its window
  int pool_w = 1;
};

namespace detail {

template <typename Scalar>
void require_rank(const Tensor<Scalar>& t, int rank, const char* what) {
  if (t.rank() != rank) {
    throw DimensionError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got " + Tensor<Scalar>::shape_string(t.shape()));
  }
}

// out[co, y, x] += sum_{ci,u,v} in[ci, y+u-ph, x+v-pw] * filters[co, ci, u, v]
// Zero padding: out-of-range input positions contribute nothing.
template <typename Scalar>
void correlate_accumulate(const Tensor<Scalar>& input, const Tensor<Scalar>& filters,
                          Tensor<Scalar>& out) {
  const Index cin = input.extent(0), h = input.extent(1), w = input.extent(2);
  const Index cout = filters.extent(0), kh = filters.extent(2), kw = filters.extent(3);
  const Index ph = kh / 2, pw = kw / 2;
  for (Index co = 0; co < cout; ++co) {
    for (Index ci = 0; ci < cin; ++ci) {
      for (Index u = 0; u < kh; ++u) {
        for (Index v = 0; v < kw; ++v) {
          const Scalar weight = filters(co, ci, u, v);
          const Index x0 = std::max<Index>(0, pw - v);
          const Index x1 = std::min<Index>(w, w + pw - v);
          if (x0 >= x1) continue;
          for (Index y = std::max<Index>(0, ph - u); y < std::min<Index>(h, h + ph - u); ++y) {
            const Scalar* in_row = input.row(ci, y + u - ph) + (v - pw);
            Scalar* out_row = out.row(co, y);
            for (Index x = x0; x < x1; ++x) out_row[x] += weight * in_row[x];
          }
        }
      }
    }
  }
}

/// Filters rearranged so that correlation with them realizes the adjoint map:
/// channel axes swapped and both spatial axes reversed.
template <typename Scalar>
Tensor<Scalar> adjoint_filters(const Tensor<Scalar>& filters) {
  const Index cout = filters.extent(0), cin = filters.extent(1);
  const Index kh = filters.extent(2), kw = filters.extent(3);
  Tensor<Scalar> flipped({cin, cout, kh, kw});
  for (Index co = 0; co < cout; ++co)
    for (Index ci = 0; ci < cin; ++ci)
      for (Index u = 0; u < kh; ++u)
        for (Index v = 0; v < kw; ++v)
          flipped(ci, co, kh - 1 - u, kw - 1 - v) = filters(co, ci, u, v);
  return flipped;
}

template <typename Scalar>
void add_channel_bias(Tensor<Scalar>& t, const Eigen::Ref<const Vector<Scalar>>& bias) {
  const Index block = t.extent(1) * t.extent(2);
  for (Index c = 0; c < t.extent(0); ++c) t.array().segment(c * block, block) += bias[c];
}

}  // namespace detail

/// 2-D cross-correlation with zero same-padding: the output keeps the input's
/// spatial extents and every map j starts from bias[j].
///   input  [Cin x H x W], filters [Cout x Cin x kh x kw], bias [Cout]
///   -> [Cout x H x W]
template <typename Scalar>
Tensor<Scalar> conv2d_same(const Tensor<Scalar>& input, const Tensor<Scalar>& filters,
                           const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& bias) {
  detail::require_rank(input, 3, "conv2d_same input");
  detail::require_rank(filters, 4, "conv2d_same filters");
  if (filters.extent(1) != input.extent(0)) {
    throw DimensionError("conv2d_same: input has " + std::to_string(input.extent(0)) +
                         " channels but filters expect " + std::to_string(filters.extent(1)));
  }
  if (filters.extent(2) % 2 == 0 || filters.extent(3) % 2 == 0) {
    throw std::invalid_argument("conv2d_same: kernel extents must be odd");
  }
  if (bias.size() != filters.extent(0)) {
    throw DimensionError("conv2d_same: bias length does not match output channel count");
  }
  Tensor<Scalar> out({filters.extent(0), input.extent(1), input.extent(2)});
  detail::add_channel_bias(out, bias);
  detail::correlate_accumulate(input, filters, out);
  return out;
}

/// Linear adjoint of conv2d_same with the same filter bank (bias excluded from
/// the adjoint), then a per-channel bias. Equivalent to a full transposed
/// convolution cropped back to H x W.
///   input [Cout x H x W], filters [Cout x Cin x kh x kw], bias [Cin]
///   -> [Cin x H x W]
template <typename Scalar>
Tensor<Scalar> conv2d_transpose_same(const Tensor<Scalar>& input, const Tensor<Scalar>& filters,
                                     const std::type_identity_t<Eigen::Ref<const Vector<Scalar>>>& bias) {
  detail::require_rank(input, 3, "conv2d_transpose_same input");
  detail::require_rank(filters, 4, "conv2d_transpose_same filters");
  if (filters.extent(0) != input.extent(0)) {
    throw DimensionError("conv2d_transpose_same: input has " + std::to_string(input.extent(0)) +
                         " maps but filters expect " + std::to_string(filters.extent(0)));
  }
  if (filters.extent(2) % 2 == 0 || filters.extent(3) % 2 == 0) {
    throw std::invalid_argument("conv2d_transpose_same: kernel extents must be odd");
  }
  if (bias.size() != filters.extent(1)) {
    throw DimensionError("conv2d_transpose_same: bias length does not match output channel count");
  }
  Tensor<Scalar> out({filters.extent(1), input.extent(1), input.extent(2)});
  detail::add_channel_bias(out, bias);
  detail::correlate_accumulate(input, detail::adjoint_filters(filters), out);
  return out;
}

template <typename Scalar>
struct ConvGrads {
  Tensor<Scalar> input;
  Tensor<Scalar> filters;
  Vector<Scalar> bias;
};

namespace detail {

// grad_filters[co, ci, u, v] = sum_{y,x} upstream[co, y, x] * input[ci, y+u-ph, x+v-pw]
template <typename Scalar>
Tensor<Scalar> filter_grad(const Tensor<Scalar>& upstream, const Tensor<Scalar>& input, Index kh,
                           Index kw) {
  const Index cout = upstream.extent(0), cin = input.extent(0);
  const Index h = input.extent(1), w = input.extent(2);
  const Index ph = kh / 2, pw = kw / 2;
  Tensor<Scalar> grad({cout, cin, kh, kw});
  for (Index co = 0; co < cout; ++co) {
    for (Index ci = 0; ci < cin; ++ci) {
      for (Index u = 0; u < kh; ++u) {
        for (Index v = 0; v < kw; ++v) {
          const Index x0 = std::max<Index>(0, pw - v);
          const Index x1 = std::min<Index>(w, w + pw - v);
          Scalar acc = 0;
          if (x0 < x1) {
            for (Index y = std::max<Index>(0, ph - u); y < std::min<Index>(h, h + ph - u); ++y) {
              const Scalar* up_row = upstream.row(co, y);
              const Scalar* in_row = input.row(ci, y + u - ph) + (v - pw);
              for (Index x = x0; x < x1; ++x) acc += up_row[x] * in_row[x];
            }
          }
          grad(co, ci, u, v) = acc;
        }
      }
    }
  }
  return grad;
}

template <typename Scalar>
Vector<Scalar> channel_sums(const Tensor<Scalar>& t) {
  const Index block = t.extent(1) * t.extent(2);
  Vector<Scalar> sums(t.extent(0));
  for (Index c = 0; c < t.extent(0); ++c) sums[c] = t.array().segment(c * block, block).sum();
  return sums;
}

}  // namespace detail

/// Gradients of conv2d_same w.r.t. its input, filters, and bias.
template <typename Scalar>
ConvGrads<Scalar> conv2d_same_backward(const Tensor<Scalar>& input, const Tensor<Scalar>& filters,
                                       const Tensor<Scalar>& upstream) {
  ConvGrads<Scalar> g;
  g.input = Tensor<Scalar>({input.extent(0), input.extent(1), input.extent(2)});
  detail::correlate_accumulate(upstream, detail::adjoint_filters(filters), g.input);
  g.filters = detail::filter_grad(upstream, input, filters.extent(2), filters.extent(3));
  g.bias = detail::channel_sums(upstream);
  return g;
}

/// Gradients of conv2d_transpose_same w.r.t. its input, filters, and bias.
template <typename Scalar>
ConvGrads<Scalar> conv2d_transpose_same_backward(const Tensor<Scalar>& input,
                                                 const Tensor<Scalar>& filters,
                                                 const Tensor<Scalar>& upstream) {
  ConvGrads<Scalar> g;
  g.input = Tensor<Scalar>({input.extent(0), input.extent(1), input.extent(2)});
  detail::correlate_accumulate(upstream, filters, g.input);
  g.filters = detail::filter_grad(input, upstream, filters.extent(2), filters.extent(3));
  g.bias = detail::channel_sums(upstream);
  return g;
}

/// Max-pooling along the time (last) axis only, window 1 x pool_w with stride
/// pool_w. A final partial window is pooled over its actual extent. Ties go to
/// the first occurrence so unpooling is reproducible.
template <typename Scalar>
std::pair<Tensor<Scalar>, PoolIndices> maxpool_time(const Tensor<Scalar>& input, int pool_w) {
  detail::require_rank(input, 3, "maxpool_time input");
  if (pool_w < 1) throw std::invalid_argument("maxpool_time: pool width must be >= 1");
  const Index c = input.extent(0), h = input.extent(1), w = input.extent(2);
  const Index wp = (w + pool_w - 1) / pool_w;
  Tensor<Scalar> pooled({c, h, wp});
  PoolIndices idx;
  idx.shape = {c, h, wp};
  idx.offsets.assign(static_cast<std::size_t>(c * h * wp), 0);
  idx.pool_w = pool_w;
  Index out_pos = 0;
  for (Index ci = 0; ci < c; ++ci) {
    for (Index y = 0; y < h; ++y) {
      const Scalar* in_row = input.row(ci, y);
      Scalar* out_row = pooled.row(ci, y);
      for (Index ow = 0; ow < wp; ++ow, ++out_pos) {
        const Index start = ow * pool_w;
        const Index end = std::min<Index>(w, start + pool_w);
        int best = 0;
        Scalar best_val = in_row[start];
        for (Index t = start + 1; t < end; ++t) {
          if (in_row[t] > best_val) {
            best_val = in_row[t];
            best = static_cast<int>(t - start);
          }
        }
        out_row[ow] = best_val;
        idx.offsets[static_cast<std::size_t>(out_pos)] = best;
      }
    }
  }
  return {std::move(pooled), std::move(idx)};
}

/// Scatters pooled activations back to their recorded positions; everything
/// else is zero.
template <typename Scalar>
Tensor<Scalar> unpool_time(const Tensor<Scalar>& pooled, const PoolIndices& indices, Index out_w) {
  detail::require_rank(pooled, 3, "unpool_time input");
  if (indices.shape != pooled.shape()) {
    throw DimensionError("unpool_time: indices shape does not match pooled tensor");
  }
  const Index c = pooled.extent(0), h = pooled.extent(1), wp = pooled.extent(2);
  if ((out_w + indices.pool_w - 1) / indices.pool_w != wp) {
    throw DimensionError("unpool_time: output width " + std::to_string(out_w) +
                         " inconsistent with pooled width " + std::to_string(wp) +
                         " and pool width " + std::to_string(indices.pool_w));
  }
  Tensor<Scalar> out({c, h, out_w});
  Index pos = 0;
  for (Index ci = 0; ci < c; ++ci) {
    for (Index y = 0; y < h; ++y) {
      const Scalar* in_row = pooled.row(ci, y);
      Scalar* out_row = out.row(ci, y);
      for (Index ow = 0; ow < wp; ++ow, ++pos) {
        const Index t = ow * indices.pool_w + indices.offsets[static_cast<std::size_t>(pos)];
        if (t >= out_w) throw DimensionError("unpool_time: recorded index falls outside output");
        out_row[t] = in_row[ow];
      }
    }
  }
  return out;
}

/// Gradient of maxpool_time: route upstream back to the argmax positions.
template <typename Scalar>
Tensor<Scalar> maxpool_time_backward(const Tensor<Scalar>& upstream, const PoolIndices& indices,
                                     Index in_w) {
  return unpool_time(upstream, indices, in_w);
}

/// Gradient of unpool_time: gather upstream at the recorded positions.
template <typename Scalar>
Tensor<Scalar> unpool_time_backward(const Tensor<Scalar>& upstream, const PoolIndices& indices) {
  detail::require_rank(upstream, 3, "unpool_time_backward upstream");
  const Index c = indices.shape[0], h = indices.shape[1], wp = indices.shape[2];
  Tensor<Scalar> grad({c, h, wp});
  Index pos = 0;
  for (Index ci = 0; ci < c; ++ci) {
    for (Index y = 0; y < h; ++y) {
      const Scalar* up_row = upstream.row(ci, y);
      Scalar* g_row = grad.row(ci, y);
      for (Index ow = 0; ow < wp; ++ow, ++pos) {
        g_row[ow] = up_row[ow * indices.pool_w + indices.offsets[static_cast<std::size_t>(pos)]];
      }
    }
  }
  return grad;
}

/// Elementwise max(0, x).
template <typename Scalar>
Tensor<Scalar> relu(const Tensor<Scalar>& x) {
  return Tensor<Scalar>(x.shape(), x.array().max(Scalar(0)));
}

/// Passes upstream where x > 0; the subgradient at exactly 0 is taken as 0.
template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& upstream) {
  if (!x.same_shape(upstream)) throw DimensionError("relu_backward: shapes differ");
  return Tensor<Scalar>(x.shape(),
                        (x.array() > Scalar(0)).select(upstream.array(), Scalar(0)));
}

/// Central-difference gradient estimate of a scalar function, the oracle that
/// every analytic backward pass is checked against.
template <typename Scalar>
Tensor<Scalar> finite_diff_grad(const std::function<Scalar(const Tensor<Scalar>&)>& f,
                                const Tensor<Scalar>& x, Scalar eps) {
  if (!(eps > Scalar(0))) throw std::invalid_argument("finite_diff_grad: eps must be positive");
  Tensor<Scalar> grad(x.shape());
  Tensor<Scalar> probe = x;
  for (Index i = 0; i < x.size(); ++i) {
    const Scalar saved = probe[i];
    probe[i] = saved + eps;
    const Scalar fp = f(probe);
    probe[i] = saved - eps;
    const Scalar fm = f(probe);
    probe[i] = saved;
    if (!std::isfinite(fp) || !std::isfinite(fm)) {
      throw NumericError("finite_diff_grad: non-finite function value");
    }
    grad[i] = (fp - fm) / (2 * eps);
  }
  return grad;
}

}  // namespace tsdeconv
