#include "tsdeconv/net.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

#include "tsdeconv/rng.hpp"
#include "tsdeconv/serialize.hpp"

namespace tsdeconv {

void NetworkConfig::validate() const {
  if (channels < 1 || length < 1) throw std::invalid_argument("net: channels and length must be >= 1");
  if (filters1 < 1 || filters2 < 1) throw std::invalid_argument("net: filter counts must be >= 1");
  if (pool_w < 1) throw std::invalid_argument("net: pool width must be >= 1");
  if (kernel_h % 2 == 0 || kernel_w % 2 == 0) {
    throw std::invalid_argument("net: kernel extents must be odd");
  }
}

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be positive");
  if (!(rho > 0.0 && rho < 1.0)) throw std::invalid_argument("train: rho must be in (0, 1)");
  if (!(epsilon > 0.0)) throw std::invalid_argument("train: epsilon must be positive");
  if (epochs < 0) throw std::invalid_argument("train: epochs must be >= 0");
  if (batch_size < 1) throw std::invalid_argument("train: batch size must be >= 1");
}

namespace {

Tensord uniform_filter(Rng& rng, std::vector<Index> shape, Index fan_in, Index fan_out) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Tensord t(std::move(shape));
  for (Index i = 0; i < t.size(); ++i) t[i] = rng.uniform(-bound, bound);
  return t;
}

}  // namespace

ModelParams init_params(const NetworkConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(mix_seed(seed, 0));
  const Index k = static_cast<Index>(cfg.kernel_h) * cfg.kernel_w;
  ModelParams p;
  p.tied = cfg.tie_weights;
  p.w1 = uniform_filter(rng, {cfg.filters1, 1, cfg.kernel_h, cfg.kernel_w}, k, cfg.filters1 * k);
  p.b1 = VectorXd::Zero(cfg.filters1);
  p.w2 = uniform_filter(rng, {cfg.filters2, cfg.filters1, cfg.kernel_h, cfg.kernel_w},
                        cfg.filters1 * k, cfg.filters2 * k);
  p.b2 = VectorXd::Zero(cfg.filters2);
  if (!cfg.tie_weights) {
    p.w2_dec = uniform_filter(rng, {cfg.filters2, cfg.filters1, cfg.kernel_h, cfg.kernel_w},
                              cfg.filters2 * k, cfg.filters1 * k);
    p.w1_dec = uniform_filter(rng, {cfg.filters1, 1, cfg.kernel_h, cfg.kernel_w}, cfg.filters1 * k, k);
  }
  p.c2 = VectorXd::Zero(cfg.filters1);
  p.c1 = VectorXd::Zero(1);
  return p;
}

Tensord as_input_tensor(const Eigen::Ref<const Eigen::MatrixXd>& values) {
  Tensord x({1, values.rows(), values.cols()});
  for (Index c = 0; c < values.rows(); ++c) {
    for (Index t = 0; t < values.cols(); ++t) x(0, c, t) = values(c, t);
  }
  return x;
}

ForwardTrace forward(const ModelParams& params, const NetworkConfig& cfg, const Tensord& x) {
  if (x.rank() != 3 || x.extent(0) != 1 || x.extent(1) != cfg.channels || x.extent(2) != cfg.length) {
    throw DimensionError("forward: input must be [1 x " + std::to_string(cfg.channels) + " x " +
                         std::to_string(cfg.length) + "], got " +
                         Tensord::shape_string(x.shape()));
  }
  ForwardTrace tr;
  tr.x = x;
  tr.z1 = conv2d_same(tr.x, params.w1, params.b1);
  tr.h1 = relu(tr.z1);
  auto [pooled, idx] = maxpool_time(tr.h1, cfg.pool_w);
  tr.p = std::move(pooled);
  tr.idx = std::move(idx);
  tr.z2 = conv2d_same(tr.p, params.w2, params.b2);
  tr.code = relu(tr.z2);
  tr.zd2 = conv2d_transpose_same(tr.code, params.decoder_w2(), params.c2);
  tr.d2 = relu(tr.zd2);
  tr.u = unpool_time(tr.d2, tr.idx, cfg.length);
  tr.zd1 = conv2d_transpose_same(tr.u, params.decoder_w1(), params.c1);
  tr.y = cfg.final_activation == FinalActivation::relu ? relu(tr.zd1) : tr.zd1;
  return tr;
}

Code forward_encode(const ModelParams& params, const NetworkConfig& cfg, const Tensord& x) {
  const ForwardTrace tr = forward(params, cfg, x);
  return Code{tr.code, tr.idx};
}

Tensord forward_decode(const ModelParams& params, const NetworkConfig& cfg, const Code& code) {
  const Tensord zd2 = conv2d_transpose_same(code.maps, params.decoder_w2(), params.c2);
  const Tensord d2 = relu(zd2);
  const Tensord u = unpool_time(d2, code.pool_indices, cfg.length);
  const Tensord zd1 = conv2d_transpose_same(u, params.decoder_w1(), params.c1);
  return cfg.final_activation == FinalActivation::relu ? relu(zd1) : zd1;
}

double reconstruction_loss(const Tensord& x, const Tensord& y) {
  if (!x.same_shape(y)) throw DimensionError("reconstruction_loss: shapes differ");
  return (x.array() - y.array()).square().mean();
}

ParamGrads backward(const ModelParams& params, const NetworkConfig& cfg, const ForwardTrace& tr) {
  // d(mean squared error)/dy
  Tensord dy(tr.y.shape(),
             2.0 / static_cast<double>(tr.y.size()) * (tr.y.array() - tr.x.array()));
  const Tensord dzd1 =
      cfg.final_activation == FinalActivation::relu ? relu_backward(tr.zd1, dy) : std::move(dy);

  ConvGrads<double> g_dec1 = conv2d_transpose_same_backward(tr.u, params.decoder_w1(), dzd1);
  const Tensord dd2 = unpool_time_backward(g_dec1.input, tr.idx);
  const Tensord dzd2 = relu_backward(tr.zd2, dd2);

  ConvGrads<double> g_dec2 = conv2d_transpose_same_backward(tr.code, params.decoder_w2(), dzd2);
  const Tensord dz2 = relu_backward(tr.z2, g_dec2.input);

  ConvGrads<double> g_enc2 = conv2d_same_backward(tr.p, params.w2, dz2);
  const Tensord dh1 = maxpool_time_backward(g_enc2.input, tr.idx, cfg.length);
  const Tensord dz1 = relu_backward(tr.z1, dh1);

  ConvGrads<double> g_enc1 = conv2d_same_backward(tr.x, params.w1, dz1);

  ParamGrads grads;
  grads.b1 = std::move(g_enc1.bias);
  grads.b2 = std::move(g_enc2.bias);
  grads.c2 = std::move(g_dec2.bias);
  grads.c1 = std::move(g_dec1.bias);
  if (params.tied) {
    // Shared filters: encoder-path and decoder-path gradients accumulate.
    grads.w1 = Tensord(g_enc1.filters.shape(),
                       g_enc1.filters.array() + g_dec1.filters.array());
    grads.w2 = Tensord(g_enc2.filters.shape(),
                       g_enc2.filters.array() + g_dec2.filters.array());
  } else {
    grads.w1 = std::move(g_enc1.filters);
    grads.w2 = std::move(g_enc2.filters);
    grads.w1_dec = std::move(g_dec1.filters);
    grads.w2_dec = std::move(g_dec2.filters);
  }
  return grads;
}

namespace {

// Uniform view over every learnable array so the optimizer does not care
// about the parameter layout.
template <typename Params, typename Fn>
void for_each_array(Params&& p, Fn&& fn) {
  fn(p.w1.array());
  fn(p.b1);
  fn(p.w2.array());
  fn(p.b2);
  if (!p.tied) {
    fn(p.w2_dec.array());
    fn(p.w1_dec.array());
  }
  fn(p.c2);
  fn(p.c1);
}

template <typename Grads, typename Fn>
void for_each_grad(Grads&& g, bool tied, Fn&& fn) {
  fn(g.w1.array());
  fn(g.b1);
  fn(g.w2.array());
  fn(g.b2);
  if (!tied) {
    fn(g.w2_dec.array());
    fn(g.w1_dec.array());
  }
  fn(g.c2);
  fn(g.c1);
}

void accumulate(ParamGrads& into, const ParamGrads& from, bool tied) {
  auto add = [](auto& dst, const auto& src) { dst += src; };
  into.w1.array() += from.w1.array();
  into.w2.array() += from.w2.array();
  add(into.b1, from.b1);
  add(into.b2, from.b2);
  add(into.c2, from.c2);
  add(into.c1, from.c1);
  if (!tied) {
    into.w1_dec.array() += from.w1_dec.array();
    into.w2_dec.array() += from.w2_dec.array();
  }
}

void scale(ParamGrads& g, bool tied, double factor) {
  for_each_grad(g, tied, [factor](auto&& arr) { arr *= factor; });
}

ParamGrads zero_grads_like(const ModelParams& p) {
  ParamGrads g;
  g.w1 = Tensord(p.w1.shape());
  g.b1 = VectorXd::Zero(p.b1.size());
  g.w2 = Tensord(p.w2.shape());
  g.b2 = VectorXd::Zero(p.b2.size());
  if (!p.tied) {
    g.w2_dec = Tensord(p.w2_dec.shape());
    g.w1_dec = Tensord(p.w1_dec.shape());
  }
  g.c2 = VectorXd::Zero(p.c2.size());
  g.c1 = VectorXd::Zero(p.c1.size());
  return g;
}

}  // namespace

AdadeltaState AdadeltaState::like(const ModelParams& params) {
  AdadeltaState st;
  for_each_array(params, [&st](auto&& arr) {
    st.avg_sq_grad.emplace_back(Eigen::ArrayXd::Zero(arr.size()));
    st.avg_sq_delta.emplace_back(Eigen::ArrayXd::Zero(arr.size()));
  });
  return st;
}

void adadelta_step(ModelParams& params, const ParamGrads& grads, AdadeltaState& state,
                   const TrainConfig& tc) {
  tc.validate();
  std::vector<Eigen::Map<const Eigen::ArrayXd>> grad_views;
  for_each_grad(grads, params.tied, [&grad_views](auto&& arr) {
    grad_views.emplace_back(arr.data(), arr.size());
  });
  std::size_t slot = 0;
  for_each_array(params, [&](auto&& arr) {
    Eigen::Map<Eigen::ArrayXd> value(arr.data(), arr.size());
    const auto& g = grad_views[slot];
    Eigen::ArrayXd& eg2 = state.avg_sq_grad[slot];
    Eigen::ArrayXd& edx2 = state.avg_sq_delta[slot];
    eg2 = tc.rho * eg2 + (1.0 - tc.rho) * g.square();
    // The squared-delta accumulator tracks the unscaled step (framework
    // convention); the learning rate only scales the applied update.
    const Eigen::ArrayXd step = ((edx2 + tc.epsilon).sqrt() / (eg2 + tc.epsilon).sqrt()) * g;
    edx2 = tc.rho * edx2 + (1.0 - tc.rho) * step.square();
    value -= tc.learning_rate * step;
    ++slot;
  });
}

ModelParams train(const std::vector<Tensord>& samples, const NetworkConfig& cfg,
                  const TrainConfig& tc, const EpochCallback& on_epoch) {
  cfg.validate();
  tc.validate();
  if (samples.empty()) throw std::invalid_argument("train: empty dataset");

  ModelParams params = init_params(cfg, tc.seed);
  AdadeltaState state = AdadeltaState::like(params);
  Rng shuffle_rng(mix_seed(tc.seed, 1));

  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 0; epoch < tc.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(tc.batch_size)) {
      const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(tc.batch_size));
      ParamGrads batch_grads = zero_grads_like(params);
      for (std::size_t k = start; k < end; ++k) {
        const ForwardTrace tr = forward(params, cfg, samples[order[k]]);
        epoch_loss += reconstruction_loss(tr.x, tr.y);
        accumulate(batch_grads, backward(params, cfg, tr), params.tied);
      }
      scale(batch_grads, params.tied, 1.0 / static_cast<double>(end - start));
      adadelta_step(params, batch_grads, state, tc);
    }
    if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(samples.size()));
  }
  return params;
}

CodeFeatures encode_features(const ModelParams& params, const NetworkConfig& cfg,
                             const Tensord& x) {
  const Code code = forward_encode(params, cfg, x);
  const Index map_len = static_cast<Index>(cfg.channels) * cfg.code_length();
  CodeFeatures features;
  features.per_map.reserve(static_cast<std::size_t>(cfg.filters2));
  features.concatenated.resize(static_cast<Index>(cfg.filters2) * map_len);
  for (int m = 0; m < cfg.filters2; ++m) {
    VectorXd flat(map_len);
    for (Index i = 0; i < map_len; ++i) flat[i] = code.maps[m * map_len + i];
    features.concatenated.segment(m * map_len, map_len) = flat;
    features.per_map.push_back(std::move(flat));
  }
  return features;
}

namespace {

constexpr char kModelMagic[8] = {'T', 'S', 'D', 'C', 'M', 'O', 'D', 'L'};
constexpr std::uint32_t kModelVersion = 1;

void write_config(std::ostream& out, const NetworkConfig& cfg) {
  io::write_pod<std::int32_t>(out, cfg.channels);
  io::write_pod<std::int32_t>(out, cfg.length);
  io::write_pod<std::int32_t>(out, cfg.filters1);
  io::write_pod<std::int32_t>(out, cfg.filters2);
  io::write_pod<std::int32_t>(out, cfg.kernel_h);
  io::write_pod<std::int32_t>(out, cfg.kernel_w);
  io::write_pod<std::int32_t>(out, cfg.pool_w);
  io::write_pod<std::uint8_t>(out, cfg.tie_weights ? 1 : 0);
  io::write_pod<std::uint8_t>(out, static_cast<std::uint8_t>(cfg.final_activation));
}

NetworkConfig read_config(std::istream& in) {
  NetworkConfig cfg;
  cfg.channels = io::read_pod<std::int32_t>(in, "model config");
  cfg.length = io::read_pod<std::int32_t>(in, "model config");
  cfg.filters1 = io::read_pod<std::int32_t>(in, "model config");
  cfg.filters2 = io::read_pod<std::int32_t>(in, "model config");
  cfg.kernel_h = io::read_pod<std::int32_t>(in, "model config");
  cfg.kernel_w = io::read_pod<std::int32_t>(in, "model config");
  cfg.pool_w = io::read_pod<std::int32_t>(in, "model config");
  cfg.tie_weights = io::read_pod<std::uint8_t>(in, "model config") != 0;
  cfg.final_activation =
      static_cast<FinalActivation>(io::read_pod<std::uint8_t>(in, "model config"));
  return cfg;
}

}  // namespace

void save_model(const std::filesystem::path& path, const NetworkConfig& cfg, const TrainConfig& tc,
                const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot open model file for writing: " + path.string());
  out.write(kModelMagic, sizeof(kModelMagic));
  io::write_pod<std::uint32_t>(out, kModelVersion);
  write_config(out, cfg);
  io::write_pod<double>(out, tc.learning_rate);
  io::write_pod<double>(out, tc.rho);
  io::write_pod<double>(out, tc.epsilon);
  io::write_pod<std::int32_t>(out, tc.epochs);
  io::write_pod<std::int32_t>(out, tc.batch_size);
  io::write_pod<std::uint64_t>(out, tc.seed);
  io::write_pod<std::uint8_t>(out, params.tied ? 1 : 0);
  io::write_tensor(out, params.w1);
  io::write_vector(out, params.b1);
  io::write_tensor(out, params.w2);
  io::write_vector(out, params.b2);
  if (!params.tied) {
    io::write_tensor(out, params.w2_dec);
    io::write_tensor(out, params.w1_dec);
  }
  io::write_vector(out, params.c2);
  io::write_vector(out, params.c1);
  if (!out) throw FormatError("write failed: " + path.string());
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open model file: " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
    throw FormatError("not a model checkpoint: " + path.string());
  }
  const auto version = io::read_pod<std::uint32_t>(in, "model version");
  if (version != kModelVersion) {
    throw FormatError("unsupported model version " + std::to_string(version) + " in " +
                      path.string());
  }
  ModelFile file;
  file.config = read_config(in);
  file.train_config.learning_rate = io::read_pod<double>(in, "train config");
  file.train_config.rho = io::read_pod<double>(in, "train config");
  file.train_config.epsilon = io::read_pod<double>(in, "train config");
  file.train_config.epochs = io::read_pod<std::int32_t>(in, "train config");
  file.train_config.batch_size = io::read_pod<std::int32_t>(in, "train config");
  file.train_config.seed = io::read_pod<std::uint64_t>(in, "train config");
  file.params.tied = io::read_pod<std::uint8_t>(in, "model params") != 0;
  file.params.w1 = io::read_tensor(in, "w1");
  file.params.b1 = io::read_vector(in, "b1");
  file.params.w2 = io::read_tensor(in, "w2");
  file.params.b2 = io::read_vector(in, "b2");
  if (!file.params.tied) {
    file.params.w2_dec = io::read_tensor(in, "w2_dec");
    file.params.w1_dec = io::read_tensor(in, "w1_dec");
  }
  file.params.c2 = io::read_vector(in, "c2");
  file.params.c1 = io::read_vector(in, "c1");
  return file;
}

}  // namespace tsdeconv
