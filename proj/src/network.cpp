#include "tart/network.hpp"

#include <algorithm>
#include <cmath>

#include "tart/io.hpp"
#include "tart/rng.hpp"

namespace tart::network {

namespace {

constexpr char kMagic[4] = {'T', 'A', 'M', 'D'};
constexpr std::uint32_t kVersion = 1;

Matrix apply_hidden(Activation act, Matrix z) {
  if (act == Activation::ReLU) return z.cwiseMax(0.0);
  return z.array().tanh().matrix();
}

/// Derivative of the hidden activation, expressed through its output value.
Matrix hidden_deriv(Activation act, const Matrix& post) {
  if (act == Activation::ReLU)
    return (post.array() > 0.0).cast<double>().matrix();
  return (1.0 - post.array().square()).matrix();
}

struct ForwardCache {
  // acts[0] is the input batch; acts[i] the post-activation output of layer
  // i-1 (linear for the last layer). One example per row throughout.
  std::vector<Matrix> acts;
};

void forward_cached(const Mlp& m, const Matrix& x, ForwardCache& cache) {
  const std::size_t num_layers = m.layers.size();
  cache.acts.resize(num_layers + 1);
  cache.acts[0] = x;
  for (std::size_t i = 0; i < num_layers; ++i) {
    const Layer& layer = m.layers[i];
    Matrix z = (cache.acts[i] * layer.w.transpose()).rowwise() + layer.b.transpose();
    cache.acts[i + 1] =
        i + 1 < num_layers ? apply_hidden(m.hidden, std::move(z)) : std::move(z);
  }
}

/// Backpropagates dLoss/dOutput. Fills `grads` when non-null (overwriting)
/// and returns dLoss/dInput when `want_dinput` is set.
Matrix backward(const Mlp& m, const ForwardCache& cache, Matrix dout, Gradients* grads,
                bool want_dinput) {
  for (std::size_t i = m.layers.size(); i-- > 0;) {
    const Layer& layer = m.layers[i];
    if (grads) {
      grads->layers[i].w = dout.transpose() * cache.acts[i];
      grads->layers[i].b = dout.colwise().sum().transpose();
    }
    if (i == 0 && !want_dinput) return Matrix();
    Matrix dprev = dout * layer.w;
    if (i > 0) dprev = dprev.cwiseProduct(hidden_deriv(m.hidden, cache.acts[i]));
    dout = std::move(dprev);
  }
  return dout;
}

void check_batch(const Mlp& m, const Matrix& x, std::span<const int> y) {
  require_dims(x.cols() == m.in_dim(), "batch width must match model input dim");
  require_dims(static_cast<std::size_t>(x.rows()) == y.size(),
               "batch rows must match label count");
  if (x.rows() == 0) throw EmptyBatch("empty batch");
  for (int label : y)
    if (label < 0 || label >= m.out_dim()) throw LabelOutOfRange("label outside [0, c)");
}

/// Row-wise softmax minus one-hot; also accumulates the total loss.
Matrix softmax_residual(const Matrix& logits, std::span<const int> y, double& total_loss) {
  Matrix res(logits.rows(), logits.cols());
  for (Index i = 0; i < logits.rows(); ++i) {
    double mx = logits.row(i).maxCoeff();
    Eigen::RowVectorXd e = (logits.row(i).array() - mx).exp();
    double sum = e.sum();
    int label = y[static_cast<std::size_t>(i)];
    total_loss += std::log(sum) - (logits(i, label) - mx);
    res.row(i) = e / sum;
    res(i, label) -= 1.0;
  }
  return res;
}

}  // namespace

Mlp make_mlp(const std::vector<Index>& dims, Activation hidden, Rng& rng) {
  if (dims.size() < 2) throw ConfigError("make_mlp: need at least input and output dims");
  Mlp m;
  m.hidden = hidden;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    Index in = dims[i], out = dims[i + 1];
    double bound = std::sqrt(6.0 / static_cast<double>(in + out));
    Layer layer;
    layer.w.resize(out, in);
    for (Index r = 0; r < out; ++r)
      for (Index c = 0; c < in; ++c) layer.w(r, c) = rng.uniform(-bound, bound);
    layer.b = Vector::Zero(out);
    m.layers.push_back(std::move(layer));
  }
  return m;
}

bool same_shape(const Mlp& a, const Mlp& b) {
  if (a.layers.size() != b.layers.size()) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i)
    if (a.layers[i].w.rows() != b.layers[i].w.rows() ||
        a.layers[i].w.cols() != b.layers[i].w.cols())
      return false;
  return true;
}

bool bitwise_equal(const Mlp& a, const Mlp& b) {
  if (!same_shape(a, b)) return false;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if ((a.layers[i].w.array() != b.layers[i].w.array()).any()) return false;
    if ((a.layers[i].b.array() != b.layers[i].b.array()).any()) return false;
  }
  return true;
}

Vector forward(const Mlp& m, const Vector& x) {
  return forward_batch(m, x.transpose()).row(0).transpose();
}

Matrix forward_batch(const Mlp& m, const Matrix& x) {
  require_dims(x.cols() == m.in_dim(), "forward: input width must match model");
  ForwardCache cache;
  forward_cached(m, x, cache);
  return std::move(cache.acts.back());
}

double cross_entropy(const Vector& logits, int y) {
  if (y < 0 || y >= logits.size()) throw LabelOutOfRange("cross_entropy: label outside [0, c)");
  double mx = logits.maxCoeff();
  double lse = std::log((logits.array() - mx).exp().sum());
  return lse - (logits[y] - mx);
}

double cross_entropy_batch(const Matrix& logits, std::span<const int> y, Matrix* dlogits) {
  require_dims(static_cast<std::size_t>(logits.rows()) == y.size(),
               "cross_entropy_batch: rows must match labels");
  if (logits.rows() == 0) throw EmptyBatch("cross_entropy_batch: empty batch");
  for (int label : y)
    if (label < 0 || label >= logits.cols()) throw LabelOutOfRange("label outside [0, c)");
  double total = 0.0;
  Matrix res = softmax_residual(logits, y, total);
  const double inv_b = 1.0 / static_cast<double>(logits.rows());
  if (dlogits) *dlogits = res * inv_b;
  return total * inv_b;
}

Gradients zero_like(const Mlp& m) {
  Gradients g;
  for (const Layer& layer : m.layers)
    g.layers.push_back({Matrix::Zero(layer.w.rows(), layer.w.cols()),
                        Vector::Zero(layer.b.size())});
  return g;
}

double grad_params(const Mlp& m, const Matrix& x, std::span<const int> y, Gradients& grads) {
  check_batch(m, x, y);
  if (grads.layers.size() != m.layers.size()) grads = zero_like(m);
  ForwardCache cache;
  forward_cached(m, x, cache);
  Matrix dlogits;
  double loss = cross_entropy_batch(cache.acts.back(), y, &dlogits);
  backward(m, cache, std::move(dlogits), &grads, false);
  return loss;
}

Matrix grad_inputs(const Mlp& m, const Matrix& x, std::span<const int> y) {
  check_batch(m, x, y);
  ForwardCache cache;
  forward_cached(m, x, cache);
  double ignored = 0.0;
  Matrix dlogits = softmax_residual(cache.acts.back(), y, ignored);
  return backward(m, cache, std::move(dlogits), nullptr, true);
}

Vector grad_input(const Mlp& m, const Vector& x, int y) {
  const int labels[1] = {y};
  return grad_inputs(m, x.transpose(), labels).row(0).transpose();
}

void init_velocity(SgdState& state, const Mlp& m) {
  state.velocity.clear();
  for (const Layer& layer : m.layers)
    state.velocity.push_back({Matrix::Zero(layer.w.rows(), layer.w.cols()),
                              Vector::Zero(layer.b.size())});
}

void sgd_step(Mlp& m, const Gradients& grads, SgdState& state, double lr) {
  require_dims(grads.layers.size() == m.layers.size(), "sgd_step: gradient shape mismatch");
  if (state.velocity.size() != m.layers.size()) init_velocity(state, m);
  for (std::size_t i = 0; i < m.layers.size(); ++i) {
    Layer& layer = m.layers[i];
    Layer& vel = state.velocity[i];
    const Layer& g = grads.layers[i];
    require_dims(g.w.rows() == layer.w.rows() && g.w.cols() == layer.w.cols(),
                 "sgd_step: gradient shape mismatch");
    vel.w = state.momentum * vel.w + (g.w + state.weight_decay * layer.w);
    vel.b = state.momentum * vel.b + g.b;  // decay excludes biases
    layer.w -= lr * vel.w;
    layer.b -= lr * vel.b;
  }
}

double lr_at_epoch(const SgdState& state, int epoch) {
  double lr = state.learning_rate;
  for (const auto& [at, divisor] : state.schedule)
    if (epoch >= at) lr /= divisor;
  return lr;
}

Vector encode(const Autoencoder& ae, const Vector& x) { return forward(ae.encoder, x); }
Vector decode(const Autoencoder& ae, const Vector& z) { return forward(ae.decoder, z); }
Matrix decode_batch(const Autoencoder& ae, const Matrix& z) {
  return forward_batch(ae.decoder, z);
}

AeTrainResult train_autoencoder(const Matrix& x, Index latent_dim,
                                const std::vector<Index>& hidden, int epochs,
                                Index batch_size, SgdState opt, std::uint64_t seed) {
  const Index n = x.rows();
  const Index d = x.cols();
  if (latent_dim >= d) throw ConfigError("train_autoencoder: latent dim must be below d");
  if (n < 1) throw EmptyBatch("train_autoencoder: empty dataset");

  std::vector<Index> enc_dims{d};
  enc_dims.insert(enc_dims.end(), hidden.begin(), hidden.end());
  enc_dims.push_back(latent_dim);
  std::vector<Index> dec_dims{latent_dim};
  dec_dims.insert(dec_dims.end(), hidden.rbegin(), hidden.rend());
  dec_dims.push_back(d);

  Rng init = Rng::stream(seed, kStreamInit);
  AeTrainResult result;
  result.ae.encoder = make_mlp(enc_dims, Activation::Tanh, init);
  result.ae.decoder = make_mlp(dec_dims, Activation::Tanh, init);

  SgdState enc_state = opt;
  SgdState dec_state = opt;
  init_velocity(enc_state, result.ae.encoder);
  init_velocity(dec_state, result.ae.decoder);
  Gradients enc_grads = zero_like(result.ae.encoder);
  Gradients dec_grads = zero_like(result.ae.decoder);

  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < epochs; ++epoch) {
    double lr = lr_at_epoch(opt, epoch);
    Rng shuffle_rng = Rng::stream(seed, kStreamShuffle, epoch);
    shuffle_rng.shuffle(order);
    double epoch_loss = 0.0;
    Index seen = 0;
    for (Index start = 0; start < n; start += batch_size) {
      Index b = std::min(batch_size, n - start);
      Matrix xb(b, d);
      for (Index i = 0; i < b; ++i)
        xb.row(i) = x.row(order[static_cast<std::size_t>(start + i)]);

      ForwardCache enc_cache, dec_cache;
      forward_cached(result.ae.encoder, xb, enc_cache);
      forward_cached(result.ae.decoder, enc_cache.acts.back(), dec_cache);
      Matrix residual = dec_cache.acts.back() - xb;
      double loss = residual.squaredNorm() / static_cast<double>(b);
      Matrix dout = residual * (2.0 / static_cast<double>(b));
      Matrix dz = backward(result.ae.decoder, dec_cache, std::move(dout), &dec_grads, true);
      backward(result.ae.encoder, enc_cache, std::move(dz), &enc_grads, false);
      sgd_step(result.ae.decoder, dec_grads, dec_state, lr);
      sgd_step(result.ae.encoder, enc_grads, enc_state, lr);
      epoch_loss += loss * static_cast<double>(b);
      seen += b;
    }
    result.loss_trace.push_back(epoch_loss / static_cast<double>(seen));
  }
  return result;
}

namespace {

void write_layers(BinaryWriter& w, const std::vector<Layer>& layers) {
  w.u32(static_cast<std::uint32_t>(layers.size()));
  for (const Layer& layer : layers) {
    w.u32(static_cast<std::uint32_t>(layer.w.rows()));
    w.u32(static_cast<std::uint32_t>(layer.w.cols()));
    w.matrix(layer.w);
    for (Index i = 0; i < layer.b.size(); ++i) w.f64(layer.b[i]);
  }
}

std::vector<Layer> read_layers(BinaryReader& r) {
  std::uint32_t count = r.u32();
  if (count == 0 || count > 64) throw FormatError("TAMD layer count out of range");
  std::vector<Layer> layers;
  for (std::uint32_t i = 0; i < count; ++i) {
    Index out = static_cast<Index>(r.u32());
    Index in = static_cast<Index>(r.u32());
    if (out < 1 || in < 1) throw FormatError("TAMD layer dims out of range");
    Layer layer;
    layer.w = r.matrix(out, in);
    layer.b.resize(out);
    for (Index j = 0; j < out; ++j) layer.b[j] = r.f64();
    require_finite(layer.w, "load model");
    require_finite(layer.b, "load model");
    if (!layers.empty() && layers.back().w.rows() != in)
      throw FormatError("TAMD layer dims do not chain");
    layers.push_back(std::move(layer));
  }
  return layers;
}

}  // namespace

void save_mlp(const Mlp& m, const std::string& path) {
  BinaryWriter w(path);
  w.bytes(kMagic, 4);
  w.u32(kVersion);
  write_layers(w, m.layers);
  w.close();
}

Mlp load_mlp(const std::string& path, Activation hidden) {
  BinaryReader r(path);
  r.expect_magic(kMagic, "TAMD");
  if (r.u32() != kVersion) throw FormatError("unsupported TAMD version");
  Mlp m;
  m.hidden = hidden;
  m.layers = read_layers(r);
  return m;
}

void save_autoencoder(const Autoencoder& ae, const std::string& path) {
  Mlp combined;
  combined.layers = ae.encoder.layers;
  combined.layers.insert(combined.layers.end(), ae.decoder.layers.begin(),
                         ae.decoder.layers.end());
  save_mlp(combined, path);
}

Autoencoder load_autoencoder(const std::string& path) {
  Mlp combined = load_mlp(path, Activation::Tanh);
  // Split at the bottleneck: the layer with the smallest output width.
  std::size_t split = 0;
  Index best = combined.layers[0].w.rows();
  for (std::size_t i = 1; i < combined.layers.size(); ++i) {
    if (combined.layers[i].w.rows() < best) {
      best = combined.layers[i].w.rows();
      split = i;
    }
  }
  if (split + 1 >= combined.layers.size())
    throw FormatError("autoencoder checkpoint has no decoder layers");
  Autoencoder ae;
  ae.encoder.hidden = Activation::Tanh;
  ae.decoder.hidden = Activation::Tanh;
  ae.encoder.layers.assign(combined.layers.begin(),
                           combined.layers.begin() + static_cast<std::ptrdiff_t>(split + 1));
  ae.decoder.layers.assign(combined.layers.begin() + static_cast<std::ptrdiff_t>(split + 1),
                           combined.layers.end());
  return ae;
}

}  // namespace tart::network
