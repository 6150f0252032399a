#include "mired/neuralnet.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "mired/error.hpp"
#include "mired/kernels.hpp"

namespace mired {

namespace {

double activate(Activation a, double v) {
  switch (a) {
    case Activation::relu:
      return v > 0.0 ? v : 0.0;
    case Activation::tanh:
      return std::tanh(v);
    case Activation::identity:
      return v;
  }
  return v;
}

// Derivative expressed through the pre-activation.
double activate_grad(Activation a, double pre) {
  switch (a) {
    case Activation::relu:
      return pre > 0.0 ? 1.0 : 0.0;
    case Activation::tanh: {
      const double t = std::tanh(pre);
      return 1.0 - t * t;
    }
    case Activation::identity:
      return 1.0;
  }
  return 1.0;
}

DenseLayer make_layer(const LayerSpec& spec, std::mt19937_64& rng) {
  DenseLayer layer{spec, DenseMatrix(spec.in_dim, spec.out_dim),
                   std::vector<double>(spec.out_dim, 0.0)};
  const double bound = std::sqrt(6.0 / static_cast<double>(spec.in_dim + spec.out_dim));
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (double& w : layer.weights.data()) w = dist(rng);
  return layer;
}

LayerGrad zero_like(const DenseLayer& layer) {
  return {DenseMatrix(layer.weights.rows(), layer.weights.cols()),
          std::vector<double>(layer.bias.size(), 0.0)};
}

bool finite(const LayerGrad& g) {
  return g.weights.all_finite() &&
         std::all_of(g.bias.begin(), g.bias.end(), [](double v) { return std::isfinite(v); });
}

bool finite(const DenseLayer& l) {
  return l.weights.all_finite() &&
         std::all_of(l.bias.begin(), l.bias.end(), [](double v) { return std::isfinite(v); });
}

void step_layer(DenseLayer& layer, const LayerGrad& grad, double lr) {
  auto& w = layer.weights.data();
  const auto& g = grad.weights.data();
  for (std::size_t i = 0; i < w.size(); ++i) w[i] -= lr * g[i];
  for (std::size_t i = 0; i < layer.bias.size(); ++i) layer.bias[i] -= lr * grad.bias[i];
}

void require_labels(const DenseMatrix& logits, std::span<const int> labels) {
  if (labels.size() != logits.rows()) {
    throw ShapeError("cross entropy: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  const auto classes = static_cast<int>(logits.cols());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw ValueError("cross entropy: label " + std::to_string(labels[i]) + " at row " +
                       std::to_string(i) + " outside [0, " + std::to_string(classes) + ")");
    }
  }
}

}  // namespace

std::string to_string(Activation a) {
  switch (a) {
    case Activation::relu:
      return "relu";
    case Activation::tanh:
      return "tanh";
    case Activation::identity:
      return "identity";
  }
  return "identity";
}

Activation activation_from_string(const std::string& name) {
  if (name == "relu") return Activation::relu;
  if (name == "tanh") return Activation::tanh;
  if (name == "identity") return Activation::identity;
  throw ValueError("unknown activation '" + name + "'");
}

void MlpModel::validate() const {
  if (encoder.empty() || decoder.empty()) throw ShapeError("MlpModel: empty encoder or decoder");
  auto check_chain = [](const std::vector<DenseLayer>& layers, const char* name) {
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.weights.rows() != l.spec.in_dim || l.weights.cols() != l.spec.out_dim ||
          l.bias.size() != l.spec.out_dim) {
        throw ShapeError(std::string("MlpModel: ") + name + " layer " + std::to_string(i) +
                         " parameters do not match its spec");
      }
      if (i > 0 && layers[i - 1].spec.out_dim != l.spec.in_dim) {
        throw ShapeError(std::string("MlpModel: ") + name + " layers " + std::to_string(i - 1) +
                         " and " + std::to_string(i) + " do not chain");
      }
    }
  };
  check_chain(encoder, "encoder");
  check_chain(decoder, "decoder");
  if (decoder.front().spec.in_dim != latent_dim() || decoder.back().spec.out_dim != input_dim()) {
    throw ShapeError("MlpModel: decoder does not map latent back to input dimension");
  }
  if (head.spec.in_dim != latent_dim() || head.weights.rows() != latent_dim() ||
      head.weights.cols() != head.spec.out_dim || head.bias.size() != head.spec.out_dim) {
    throw ShapeError("MlpModel: classifier head does not match latent dimension");
  }
}

bool MlpModel::all_finite() const {
  return std::all_of(encoder.begin(), encoder.end(), [](const auto& l) { return finite(l); }) &&
         std::all_of(decoder.begin(), decoder.end(), [](const auto& l) { return finite(l); }) &&
         finite(head);
}

bool GradientBundle::all_finite() const {
  return std::all_of(encoder.begin(), encoder.end(), [](const auto& g) { return finite(g); }) &&
         std::all_of(decoder.begin(), decoder.end(), [](const auto& g) { return finite(g); }) &&
         finite(head);
}

std::vector<LayerSpec> encoder_topology(std::span<const std::size_t> dims, Activation hidden) {
  if (dims.size() < 2) throw ValueError("encoder topology needs at least input and latent dims");
  std::vector<LayerSpec> specs;
  for (std::size_t i = 0; i + 1 < dims.size(); ++i) {
    const bool latent = i + 2 == dims.size();
    specs.push_back({dims[i], dims[i + 1], latent ? Activation::identity : hidden});
  }
  return specs;
}

MlpModel init_model(std::span<const LayerSpec> encoder, std::size_t n_classes,
                    std::uint64_t seed) {
  if (encoder.empty()) throw ValueError("init_model: empty encoder spec");
  if (n_classes < 2) throw ValueError("init_model: need at least 2 classes");
  for (std::size_t i = 0; i < encoder.size(); ++i) {
    if (encoder[i].in_dim == 0 || encoder[i].out_dim == 0) {
      throw ValueError("init_model: layer " + std::to_string(i) + " has a zero dimension");
    }
    if (i > 0 && encoder[i - 1].out_dim != encoder[i].in_dim) {
      throw ValueError("init_model: layers " + std::to_string(i - 1) + " and " +
                       std::to_string(i) + " do not chain");
    }
  }

  // Decoder layer i undoes encoder layer n-1-i and reuses the activation the
  // encoder applied to the representation it reconstructs; the output is linear.
  const std::size_t n = encoder.size();
  std::vector<LayerSpec> decoder;
  for (std::size_t i = 0; i < n; ++i) {
    const LayerSpec& mirror = encoder[n - 1 - i];
    const Activation act = i + 1 == n ? Activation::identity : encoder[n - 2 - i].activation;
    decoder.push_back({mirror.out_dim, mirror.in_dim, act});
  }

  std::mt19937_64 rng(seed);
  MlpModel model;
  model.seed = seed;
  for (const auto& spec : encoder) model.encoder.push_back(make_layer(spec, rng));
  for (const auto& spec : decoder) model.decoder.push_back(make_layer(spec, rng));
  model.head = make_layer({encoder.back().out_dim, n_classes, Activation::identity}, rng);
  return model;
}

GradientBundle zero_gradients(const MlpModel& model) {
  GradientBundle g;
  for (const auto& l : model.encoder) g.encoder.push_back(zero_like(l));
  for (const auto& l : model.decoder) g.decoder.push_back(zero_like(l));
  g.head = zero_like(model.head);
  return g;
}

DenseMatrix forward_stack(std::span<const DenseLayer> layers, const DenseMatrix& x,
                          StackCache* cache) {
  if (cache) {
    cache->inputs.clear();
    cache->preactivations.clear();
  }
  DenseMatrix h = x;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const DenseLayer& layer = layers[li];
    if (h.cols() != layer.spec.in_dim) {
      throw ShapeError("forward: layer " + std::to_string(li) + " expects " +
                       std::to_string(layer.spec.in_dim) + " inputs, got " + h.shape_string());
    }
    DenseMatrix pre = kernels::matmul(h, layer.weights);
    for (std::size_t r = 0; r < pre.rows(); ++r)
      for (std::size_t c = 0; c < pre.cols(); ++c) pre(r, c) += layer.bias[c];
    DenseMatrix out = pre;
    if (layer.spec.activation != Activation::identity) {
      for (double& v : out.data()) v = activate(layer.spec.activation, v);
    }
    if (cache) {
      cache->inputs.push_back(std::move(h));
      cache->preactivations.push_back(std::move(pre));
    }
    h = std::move(out);
  }
  return h;
}

DenseMatrix backward_stack(std::span<const DenseLayer> layers, const StackCache& cache,
                           const DenseMatrix& grad_out, std::span<LayerGrad> grads) {
  if (cache.inputs.size() != layers.size() || grads.size() != layers.size()) {
    throw ShapeError("backward: cache/gradient layout does not match the layer stack");
  }
  DenseMatrix g = grad_out;
  for (std::size_t k = layers.size(); k-- > 0;) {
    const DenseLayer& layer = layers[k];
    const DenseMatrix& pre = cache.preactivations[k];
    if (g.rows() != pre.rows() || g.cols() != pre.cols()) {
      throw ShapeError("backward: gradient " + g.shape_string() + " does not match layer " +
                       std::to_string(k) + " output " + pre.shape_string());
    }
    if (layer.spec.activation != Activation::identity) {
      for (std::size_t i = 0; i < g.size(); ++i)
        g.data()[i] *= activate_grad(layer.spec.activation, pre.data()[i]);
    }
    grads[k].weights += kernels::matmul_tn(cache.inputs[k], g);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) grads[k].bias[c] += g(r, c);
    g = kernels::matmul_nt(g, layer.weights);
  }
  return g;
}

DenseMatrix encode(const MlpModel& model, const DenseMatrix& x) {
  return forward_stack(model.encoder, x);
}

DenseMatrix decode(const MlpModel& model, const DenseMatrix& z) {
  return forward_stack(model.decoder, z);
}

DenseMatrix classify_logits(const MlpModel& model, const DenseMatrix& z) {
  return forward_stack(std::span<const DenseLayer>(&model.head, 1), z);
}

DenseMatrix softmax_rows(const DenseMatrix& logits) {
  DenseMatrix p(logits.rows(), logits.cols());
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      p(r, c) = std::exp(row[c] - m);
      sum += p(r, c);
    }
    for (std::size_t c = 0; c < row.size(); ++c) p(r, c) /= sum;
  }
  return p;
}

double cross_entropy_loss(const DenseMatrix& logits, std::span<const int> labels) {
  require_labels(logits, labels);
  if (logits.rows() == 0) throw ValueError("cross_entropy_loss: empty batch");
  double total = 0.0;
  for (std::size_t r = 0; r < logits.rows(); ++r) {
    const auto row = logits.row(r);
    const double m = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double v : row) sum += std::exp(v - m);
    total += -(row[static_cast<std::size_t>(labels[r])] - m - std::log(sum));
  }
  return total / static_cast<double>(logits.rows());
}

DenseMatrix cross_entropy_grad(const DenseMatrix& logits, std::span<const int> labels) {
  require_labels(logits, labels);
  DenseMatrix g = softmax_rows(logits);
  const double inv_l = 1.0 / static_cast<double>(logits.rows());
  for (std::size_t r = 0; r < g.rows(); ++r) {
    g(r, static_cast<std::size_t>(labels[r])) -= 1.0;
    for (double& v : g.row(r)) v *= inv_l;
  }
  return g;
}

double reconstruction_loss(const DenseMatrix& x, const DenseMatrix& x_hat) {
  if (x.rows() != x_hat.rows() || x.cols() != x_hat.cols()) {
    throw ShapeError("reconstruction_loss: shape mismatch " + x.shape_string() + " vs " +
                     x_hat.shape_string());
  }
  if (x.rows() == 0) throw ValueError("reconstruction_loss: empty batch");
  return frobenius_distance_sq(x, x_hat) / static_cast<double>(x.rows());
}

DenseMatrix reconstruction_grad(const DenseMatrix& x, const DenseMatrix& x_hat) {
  DenseMatrix g = x_hat - x;
  g *= 2.0 / static_cast<double>(x.rows());
  return g;
}

void sgd_step(MlpModel& model, const GradientBundle& grads, double lr_encoder,
              double lr_decoder) {
  if (!(lr_encoder > 0.0) || !(lr_decoder > 0.0)) {
    throw ValueError("sgd_step: learning rates must be positive");
  }
  if (!grads.all_finite()) throw NumericalError("sgd_step: non-finite gradient");
  if (grads.encoder.size() != model.encoder.size() ||
      grads.decoder.size() != model.decoder.size()) {
    throw ShapeError("sgd_step: gradient layout does not match the model");
  }
  for (std::size_t i = 0; i < model.encoder.size(); ++i)
    step_layer(model.encoder[i], grads.encoder[i], lr_encoder);
  step_layer(model.head, grads.head, lr_encoder);
  for (std::size_t i = 0; i < model.decoder.size(); ++i)
    step_layer(model.decoder[i], grads.decoder[i], lr_decoder);
}

}  // namespace mired
