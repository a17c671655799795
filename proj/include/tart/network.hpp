#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "tart/types.hpp"

namespace tart {
class Rng;
}

namespace tart::network {

enum class Activation { ReLU, Tanh };  // hidden layers; output is always linear

struct Layer {
  Matrix w;  // out×in
  Vector b;  // out
};

/// Fully connected network: hidden activation on every layer but the last,
/// identity on the output.
struct Mlp {
  std::vector<Layer> layers;
  Activation hidden = Activation::ReLU;

  Index in_dim() const { return layers.front().w.cols(); }
  Index out_dim() const { return layers.back().w.rows(); }
};

/// Glorot-uniform weights (±√(6/(fan_in+fan_out))), zero biases.
Mlp make_mlp(const std::vector<Index>& dims, Activation hidden, Rng& rng);

bool same_shape(const Mlp& a, const Mlp& b);
bool bitwise_equal(const Mlp& a, const Mlp& b);

Vector forward(const Mlp& m, const Vector& x);
/// Batched forward: one example per row, logits per row.
Matrix forward_batch(const Mlp& m, const Matrix& x);

/// Stable cross-entropy: −log softmax(logits)[y] with max-shift.
double cross_entropy(const Vector& logits, int y);

/// Mean cross-entropy over a batch plus its gradient w.r.t. the logits
/// (softmax − onehot, scaled by 1/B).
double cross_entropy_batch(const Matrix& logits, std::span<const int> y, Matrix* dlogits);

struct Gradients {
  std::vector<Layer> layers;
};

Gradients zero_like(const Mlp& m);

/// Gradient of the mean batch cross-entropy w.r.t. all parameters.
/// Returns the loss.
double grad_params(const Mlp& m, const Matrix& x, std::span<const int> y, Gradients& grads);

/// Per-example gradient of the per-example loss w.r.t. the input, one row
/// per example.
Matrix grad_inputs(const Mlp& m, const Matrix& x, std::span<const int> y);
Vector grad_input(const Mlp& m, const Vector& x, int y);

/// SGD with momentum and L2-in-gradient weight decay:
///   v ← μ v + (g + λ θ);  θ ← θ − η v.
/// Weight decay skips biases. `schedule` lists (epoch, divisor) pairs whose
/// divisors compound once their epoch is reached.
struct SgdState {
  double learning_rate = 0.1;
  double momentum = 0.9;
  double weight_decay = 2e-4;
  std::vector<std::pair<int, double>> schedule;
  std::vector<Layer> velocity;
};

void init_velocity(SgdState& state, const Mlp& m);
void sgd_step(Mlp& m, const Gradients& grads, SgdState& state, double lr);
double lr_at_epoch(const SgdState& state, int epoch);

/// Encoder/decoder pair; hidden layers use tanh so the decoder is smooth
/// enough to sample tangent directions from.
struct Autoencoder {
  Mlp encoder;
  Mlp decoder;

  Index latent_dim() const { return encoder.out_dim(); }
};

Vector encode(const Autoencoder& ae, const Vector& x);
Vector decode(const Autoencoder& ae, const Vector& z);
Matrix decode_batch(const Autoencoder& ae, const Matrix& z);

struct AeTrainResult {
  Autoencoder ae;
  std::vector<double> loss_trace;  // per-epoch mean reconstruction error
};

/// Minimizes mean ‖D(E(x)) − x‖² by mini-batch SGD. `hidden` gives the
/// widths of the (mirrored) hidden layers on each side of the bottleneck.
AeTrainResult train_autoencoder(const Matrix& x, Index latent_dim,
                                const std::vector<Index>& hidden, int epochs,
                                Index batch_size, SgdState opt, std::uint64_t seed);

// TAMD checkpoints: magic "TAMD", version u32, layer count u32, then per
// layer out u32, in u32, weights row-major f64, bias f64. An autoencoder is
// stored as encoder plus decoder layers; the loader splits at the bottleneck
// (the layer with the smallest output width).
void save_mlp(const Mlp& m, const std::string& path);
Mlp load_mlp(const std::string& path, Activation hidden = Activation::ReLU);
void save_autoencoder(const Autoencoder& ae, const std::string& path);
Autoencoder load_autoencoder(const std::string& path);

}  // namespace tart::network
