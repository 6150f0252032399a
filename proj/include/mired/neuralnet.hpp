#pragma once

// Encoder / decoder / classifier-head MLP with hand-written reverse mode.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "mired/densemath.hpp"

namespace mired {

enum class Activation { relu, tanh, identity };

std::string to_string(Activation a);
Activation activation_from_string(const std::string& name);

struct LayerSpec {
  std::size_t in_dim = 0;
  std::size_t out_dim = 0;
  Activation activation = Activation::identity;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// y = act(x W + b), W is in_dim x out_dim.
struct DenseLayer {
  LayerSpec spec;
  DenseMatrix weights;
  std::vector<double> bias;

  friend bool operator==(const DenseLayer&, const DenseLayer&) = default;
};

struct MlpModel {
  std::vector<DenseLayer> encoder;
  std::vector<DenseLayer> decoder;
  DenseLayer head;  // latent -> class logits
  std::uint64_t seed = 0;

  std::size_t input_dim() const { return encoder.front().spec.in_dim; }
  std::size_t latent_dim() const { return encoder.back().spec.out_dim; }
  std::size_t n_classes() const { return head.spec.out_dim; }

  void validate() const;
  bool all_finite() const;

  friend bool operator==(const MlpModel&, const MlpModel&) = default;
};

/// Layer specs for a topology like {79, 30, 15}: hidden layers use
/// `hidden`, the latent layer is identity.
std::vector<LayerSpec> encoder_topology(std::span<const std::size_t> dims,
                                        Activation hidden = Activation::relu);

/// Glorot-uniform weights, zero biases; the decoder mirrors the encoder.
MlpModel init_model(std::span<const LayerSpec> encoder, std::size_t n_classes,
                    std::uint64_t seed);

/// Per-layer activations kept for the backward pass.
struct StackCache {
  std::vector<DenseMatrix> inputs;
  std::vector<DenseMatrix> preactivations;
};

struct LayerGrad {
  DenseMatrix weights;
  std::vector<double> bias;
};

struct LossBreakdown {
  double ce = 0.0;
  double rec = 0.0;
  double reg = 0.0;    // MI (bits), MMD, CORAL, or the NSAE second reconstruction
  double w_rec = 0.0;  // weight applied to rec
  double w_reg = 0.0;  // weight applied to reg
  double total = 0.0;  // ce + w_rec * rec + w_reg * reg
};

struct GradientBundle {
  std::vector<LayerGrad> encoder;
  std::vector<LayerGrad> decoder;
  LayerGrad head;
  LossBreakdown loss;

  bool all_finite() const;
};

GradientBundle zero_gradients(const MlpModel& model);

DenseMatrix forward_stack(std::span<const DenseLayer> layers, const DenseMatrix& x,
                          StackCache* cache = nullptr);

/// Accumulates parameter gradients into `grads` and returns d/d input.
DenseMatrix backward_stack(std::span<const DenseLayer> layers, const StackCache& cache,
                           const DenseMatrix& grad_out, std::span<LayerGrad> grads);

DenseMatrix encode(const MlpModel& model, const DenseMatrix& x);
DenseMatrix decode(const MlpModel& model, const DenseMatrix& z);
DenseMatrix classify_logits(const MlpModel& model, const DenseMatrix& z);

DenseMatrix softmax_rows(const DenseMatrix& logits);

/// Mean over the batch of -log softmax(logits)[label].
double cross_entropy_loss(const DenseMatrix& logits, std::span<const int> labels);
/// d cross_entropy_loss / d logits = (softmax - onehot) / l.
DenseMatrix cross_entropy_grad(const DenseMatrix& logits, std::span<const int> labels);

/// Mean over the batch of ||x_i - x_hat_i||^2.
double reconstruction_loss(const DenseMatrix& x, const DenseMatrix& x_hat);
/// d reconstruction_loss / d x_hat.
DenseMatrix reconstruction_grad(const DenseMatrix& x, const DenseMatrix& x_hat);

/// Encoder and head step with lr_encoder, decoder with lr_decoder.
void sgd_step(MlpModel& model, const GradientBundle& grads, double lr_encoder,
              double lr_decoder);

}  // namespace mired
