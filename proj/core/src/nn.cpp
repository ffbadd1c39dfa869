#include "tangrad/nn.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include "tangrad/errors.hpp"

namespace tangrad::nn {

namespace {

double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double apply_act(Activation a, double z) {
  switch (a) {
    case Activation::identity: return z;
    case Activation::relu: return z > 0.0 ? z : 0.0;
    case Activation::softplus: return softplus(z);
    case Activation::tanh: return std::tanh(z);
  }
  return z;
}

double act_derivative(Activation a, double z) {
  switch (a) {
    case Activation::identity: return 1.0;
    case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
    case Activation::softplus: return sigmoid(z);
    case Activation::tanh: {
      const double t = std::tanh(z);
      return 1.0 - t * t;
    }
  }
  return 1.0;
}

struct ForwardCache {
  std::vector<num::Vector> activations;  // a_0 .. a_L (a_0 = input)
  std::vector<num::Vector> preacts;      // z_1 .. z_L
};

ForwardCache forward_cached(const DenseNetwork& net, const num::Vector& x) {
  if (net.layers.empty()) throw DimensionMismatch("forward: empty network");
  if (x.size() != net.input_dim())
    throw DimensionMismatch("forward: input length " + std::to_string(x.size()) +
                            " vs network input dim " + std::to_string(net.input_dim()));
  ForwardCache c;
  c.activations.push_back(x);
  for (const Layer& layer : net.layers) {
    num::Vector z = num::matvec(layer.weight, c.activations.back());
    for (std::size_t i = 0; i < z.size(); ++i) z[i] += layer.bias[i];
    num::Vector a(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) a[i] = apply_act(layer.act, z[i]);
    c.preacts.push_back(std::move(z));
    c.activations.push_back(std::move(a));
  }
  return c;
}

// Backpropagates dL/d(output activation) to dL/d(input); optionally
// accumulates per-layer weight/bias gradients into grads.
num::Vector backprop(const DenseNetwork& net, const ForwardCache& c,
                     num::Vector delta, std::vector<Layer>* grads) {
  for (std::size_t li = net.layers.size(); li-- > 0;) {
    const Layer& layer = net.layers[li];
    const num::Vector& z = c.preacts[li];
    // dL/dz = dL/da .* act'(z)
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] *= act_derivative(layer.act, z[i]);
    if (grads) {
      Layer& g = (*grads)[li];
      const num::Vector& a_prev = c.activations[li];
      for (std::size_t r = 0; r < layer.weight.rows; ++r) {
        g.bias[r] += delta[r];
        double* grow = &g.weight.entries[r * g.weight.cols];
        for (std::size_t cidx = 0; cidx < layer.weight.cols; ++cidx)
          grow[cidx] += delta[r] * a_prev[cidx];
      }
    }
    // dL/da_prev = W^T dL/dz
    num::Vector prev(layer.weight.cols, 0.0);
    for (std::size_t r = 0; r < layer.weight.rows; ++r) {
      const double dr = delta[r];
      const double* wrow = &layer.weight.entries[r * layer.weight.cols];
      for (std::size_t cidx = 0; cidx < layer.weight.cols; ++cidx) prev[cidx] += wrow[cidx] * dr;
    }
    delta = std::move(prev);
  }
  return delta;
}

std::vector<Layer> zero_like(const DenseNetwork& net) {
  std::vector<Layer> grads;
  grads.reserve(net.layers.size());
  for (const Layer& l : net.layers) {
    Layer g;
    g.weight = num::Matrix(l.weight.rows, l.weight.cols, 0.0);
    g.bias.assign(l.bias.size(), 0.0);
    g.act = l.act;
    grads.push_back(std::move(g));
  }
  return grads;
}

struct AdamState {
  std::vector<Layer> m, v;
  long step = 0;
};

void apply_update(DenseNetwork& net, const std::vector<Layer>& grads,
                  const TrainConfig& cfg, AdamState& adam) {
  if (cfg.optimizer == OptimizerKind::sgd) {
    for (std::size_t li = 0; li < net.layers.size(); ++li) {
      Layer& l = net.layers[li];
      const Layer& g = grads[li];
      for (std::size_t i = 0; i < l.weight.entries.size(); ++i)
        l.weight.entries[i] -= cfg.learning_rate * g.weight.entries[i];
      for (std::size_t i = 0; i < l.bias.size(); ++i)
        l.bias[i] -= cfg.learning_rate * g.bias[i];
    }
    return;
  }
  adam.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  const double bc1 = 1.0 - std::pow(b1, double(adam.step));
  const double bc2 = 1.0 - std::pow(b2, double(adam.step));
  for (std::size_t li = 0; li < net.layers.size(); ++li) {
    Layer& l = net.layers[li];
    const Layer& g = grads[li];
    auto upd = [&](double& w, double& m, double& v, double grad) {
      m = b1 * m + (1.0 - b1) * grad;
      v = b2 * v + (1.0 - b2) * grad * grad;
      w -= cfg.learning_rate * (m / bc1) / (std::sqrt(v / bc2) + cfg.adam_eps);
    };
    for (std::size_t i = 0; i < l.weight.entries.size(); ++i)
      upd(l.weight.entries[i], adam.m[li].weight.entries[i], adam.v[li].weight.entries[i],
          g.weight.entries[i]);
    for (std::size_t i = 0; i < l.bias.size(); ++i)
      upd(l.bias[i], adam.m[li].bias[i], adam.v[li].bias[i], g.bias[i]);
  }
}

}  // namespace

num::Vector forward(const DenseNetwork& net, const num::Vector& x) {
  return forward_cached(net, x).activations.back();
}

num::Vector input_gradient(const DenseNetwork& net, const num::Vector& x,
                           std::size_t target) {
  if (target >= net.output_dim())
    throw DimensionMismatch("input_gradient: target " + std::to_string(target) +
                            " out of range for output dim " + std::to_string(net.output_dim()));
  ForwardCache c = forward_cached(net, x);
  num::Vector delta(net.output_dim(), 0.0);
  delta[target] = 1.0;
  return backprop(net, c, std::move(delta), nullptr);
}

num::Matrix decoder_jacobian(const DenseNetwork& decoder, const num::Vector& z) {
  ForwardCache c = forward_cached(decoder, z);
  const std::size_t n = decoder.input_dim();
  const std::size_t d = decoder.output_dim();
  num::Matrix jac(d, n);
  // Forward-mode tangent per latent coordinate.
  for (std::size_t j = 0; j < n; ++j) {
    num::Vector u(n, 0.0);
    u[j] = 1.0;
    for (std::size_t li = 0; li < decoder.layers.size(); ++li) {
      const Layer& layer = decoder.layers[li];
      num::Vector t = num::matvec(layer.weight, u);
      const num::Vector& pre = c.preacts[li];
      for (std::size_t i = 0; i < t.size(); ++i) t[i] *= act_derivative(layer.act, pre[i]);
      u = std::move(t);
    }
    for (std::size_t r = 0; r < d; ++r) jac(r, j) = u[r];
  }
  return jac;
}

DenseNetwork make_network(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                          std::size_t out_dim, Activation hidden_act,
                          Activation out_act, std::mt19937_64& rng) {
  std::vector<std::size_t> dims;
  dims.push_back(in_dim);
  dims.insert(dims.end(), hidden.begin(), hidden.end());
  dims.push_back(out_dim);

  DenseNetwork net;
  for (std::size_t li = 0; li + 1 < dims.size(); ++li) {
    Layer l;
    l.weight = num::Matrix(dims[li + 1], dims[li]);
    l.bias.assign(dims[li + 1], 0.0);
    l.act = (li + 2 == dims.size()) ? out_act : hidden_act;
    const double limit = std::sqrt(6.0 / double(dims[li] + dims[li + 1]));
    std::uniform_real_distribution<double> u(-limit, limit);
    for (double& w : l.weight.entries) w = u(rng);
    net.layers.push_back(std::move(l));
  }
  return net;
}

namespace {

// Shared minibatch loop. loss_grad fills dL/d(output) for one sample and
// returns the sample loss.
template <typename LossGrad>
void train_loop(DenseNetwork& net, const std::vector<const num::Vector*>& inputs,
                const TrainConfig& cfg, std::mt19937_64& rng, LossGrad&& loss_grad) {
  AdamState adam;
  adam.m = zero_like(net);
  adam.v = zero_like(net);

  std::vector<std::size_t> order(inputs.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Layer> grads = zero_like(net);
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t idx = order[k];
        ForwardCache c = forward_cached(net, *inputs[idx]);
        num::Vector delta(net.output_dim(), 0.0);
        epoch_loss += loss_grad(idx, c.activations.back(), delta);
        backprop(net, c, std::move(delta), &grads);
      }
      const double inv = 1.0 / double(end - start);
      for (Layer& g : grads) {
        for (double& w : g.weight.entries) w *= inv;
        for (double& b : g.bias) b *= inv;
      }
      apply_update(net, grads, cfg, adam);
    }
    if (!std::isfinite(epoch_loss))
      throw DivergedLoss("training loss became non-finite at epoch " + std::to_string(epoch));
  }
}

std::vector<std::size_t> default_hidden(const TrainConfig& cfg, std::size_t fallback) {
  return cfg.hidden.empty() ? std::vector<std::size_t>{fallback} : cfg.hidden;
}

}  // namespace

namespace {

AutoencoderPair init_autoencoder_with(std::size_t input_dim, std::size_t latent_dim,
                                      const TrainConfig& cfg, std::mt19937_64& rng) {
  if (latent_dim == 0 || latent_dim >= input_dim)
    throw InvalidSpec("autoencoder: need 0 < latent dim < d, got n=" +
                      std::to_string(latent_dim) + " d=" + std::to_string(input_dim));
  const std::vector<std::size_t> hidden =
      default_hidden(cfg, std::max<std::size_t>(16, 2 * latent_dim));
  AutoencoderPair ae;
  ae.encoder = make_network(input_dim, hidden, latent_dim, cfg.hidden_act,
                            Activation::identity, rng);
  ae.decoder = make_network(latent_dim, hidden, input_dim, cfg.hidden_act,
                            Activation::identity, rng);
  return ae;
}

}  // namespace

AutoencoderPair init_autoencoder(std::size_t input_dim, std::size_t latent_dim,
                                 const TrainConfig& cfg) {
  std::mt19937_64 rng(cfg.seed);
  return init_autoencoder_with(input_dim, latent_dim, cfg, rng);
}

AutoencoderPair train_autoencoder(const data::Dataset& data, std::size_t latent_dim,
                                  const TrainConfig& cfg) {
  if (data.points.empty()) throw EmptyDataset("train_autoencoder: empty dataset");
  const std::size_t d = data.dim();
  if (cfg.learning_rate <= 0.0 || cfg.epochs < 1 || cfg.batch_size < 1)
    throw InvalidSpec("train_autoencoder: invalid training config");

  std::mt19937_64 rng(cfg.seed);
  AutoencoderPair init = init_autoencoder_with(d, latent_dim, cfg, rng);

  // Train encoder+decoder end to end as one stacked network, split after.
  DenseNetwork stacked;
  stacked.layers = init.encoder.layers;
  stacked.layers.insert(stacked.layers.end(), init.decoder.layers.begin(),
                        init.decoder.layers.end());

  std::vector<const num::Vector*> inputs;
  inputs.reserve(data.size());
  for (const num::Vector& p : data.points) inputs.push_back(&p);

  train_loop(stacked, inputs, cfg, rng,
             [&](std::size_t idx, const num::Vector& out, num::Vector& delta) {
               const num::Vector& x = *inputs[idx];
               double loss = 0.0;
               const double inv_d = 1.0 / double(d);
               for (std::size_t i = 0; i < d; ++i) {
                 const double r = out[i] - x[i];
                 loss += r * r * inv_d;
                 delta[i] = 2.0 * r * inv_d;
               }
               return loss;
             });

  const auto enc_layers = std::ptrdiff_t(init.encoder.layers.size());
  AutoencoderPair ae;
  ae.encoder.layers.assign(stacked.layers.begin(), stacked.layers.begin() + enc_layers);
  ae.decoder.layers.assign(stacked.layers.begin() + enc_layers, stacked.layers.end());
  return ae;
}

DenseNetwork train_classifier(const data::Dataset& data, const std::vector<int>& labels,
                              const TrainConfig& cfg) {
  if (data.points.empty()) throw EmptyDataset("train_classifier: empty dataset");
  if (labels.size() != data.size())
    throw CountMismatch("train_classifier: " + std::to_string(data.size()) + " points vs " +
                        std::to_string(labels.size()) + " labels");
  if (cfg.learning_rate <= 0.0 || cfg.epochs < 1 || cfg.batch_size < 1)
    throw InvalidSpec("train_classifier: invalid training config");
  int max_label = 0;
  for (int l : labels) {
    if (l < 0) throw InvalidSpec("train_classifier: negative label");
    max_label = std::max(max_label, l);
  }
  const std::size_t classes = std::size_t(max_label) + 1;

  std::mt19937_64 rng(cfg.seed);
  DenseNetwork net = make_network(data.dim(), default_hidden(cfg, 32), classes,
                                  cfg.hidden_act, Activation::identity, rng);

  std::vector<const num::Vector*> inputs;
  inputs.reserve(data.size());
  for (const num::Vector& p : data.points) inputs.push_back(&p);

  // Softmax cross-entropy on the logits.
  train_loop(net, inputs, cfg, rng,
             [&](std::size_t idx, const num::Vector& logits, num::Vector& delta) {
               const double zmax = *std::max_element(logits.begin(), logits.end());
               double denom = 0.0;
               for (double z : logits) denom += std::exp(z - zmax);
               const int y = labels[idx];
               for (std::size_t i = 0; i < logits.size(); ++i) {
                 const double p = std::exp(logits[i] - zmax) / denom;
                 delta[i] = p - (int(i) == y ? 1.0 : 0.0);
               }
               return -(logits[std::size_t(y)] - zmax - std::log(denom));
             });
  return net;
}

double reconstruction_mse(const AutoencoderPair& ae, const data::Dataset& data) {
  if (data.points.empty()) throw EmptyDataset("reconstruction_mse: empty dataset");
  double total = 0.0;
  for (const num::Vector& x : data.points) {
    const num::Vector rec = forward(ae.decoder, forward(ae.encoder, x));
    for (std::size_t i = 0; i < x.size(); ++i) {
      const double r = rec[i] - x[i];
      total += r * r;
    }
  }
  return total / double(data.size() * data.dim());
}

double classification_accuracy(const DenseNetwork& net, const data::Dataset& data,
                               const std::vector<int>& labels) {
  if (labels.size() != data.size())
    throw CountMismatch("classification_accuracy: label count mismatch");
  if (data.points.empty()) throw EmptyDataset("classification_accuracy: empty dataset");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i)
    if (predicted_class(net, data.points[i]) == std::size_t(labels[i])) ++hits;
  return double(hits) / double(data.size());
}

std::size_t predicted_class(const DenseNetwork& net, const num::Vector& x) {
  const num::Vector out = forward(net, x);
  return std::size_t(std::max_element(out.begin(), out.end()) - out.begin());
}

namespace {

constexpr char kMagic[4] = {'T', 'G', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void write_u32_le(std::ostream& out, std::uint32_t v) {
  unsigned char b[4] = {static_cast<unsigned char>(v & 0xff),
                        static_cast<unsigned char>((v >> 8) & 0xff),
                        static_cast<unsigned char>((v >> 16) & 0xff),
                        static_cast<unsigned char>((v >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  if (!in.read(reinterpret_cast<char*>(b), 4))
    throw TruncatedFile("network file: truncated header");
  return std::uint32_t(b[0]) | (std::uint32_t(b[1]) << 8) | (std::uint32_t(b[2]) << 16) |
         (std::uint32_t(b[3]) << 24);
}

void write_f64_le(std::ostream& out, double x) {
  std::uint64_t bits;
  std::memcpy(&bits, &x, sizeof bits);
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
  out.write(reinterpret_cast<const char*>(b), 8);
}

double read_f64_le(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8))
    throw TruncatedFile("network file: truncated weights");
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i) bits |= std::uint64_t(b[i]) << (8 * i);
  double x;
  std::memcpy(&x, &bits, sizeof x);
  return x;
}

}  // namespace

void save_network(const DenseNetwork& net, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open for writing: " + path);
  out.write(kMagic, 4);
  write_u32_le(out, kVersion);
  write_u32_le(out, std::uint32_t(net.layers.size()));
  for (const Layer& l : net.layers) {
    write_u32_le(out, std::uint32_t(l.weight.cols));
    write_u32_le(out, std::uint32_t(l.weight.rows));
    write_u32_le(out, std::uint32_t(l.act));
  }
  for (const Layer& l : net.layers) {
    for (double w : l.weight.entries) write_f64_le(out, w);
    for (double b : l.bias) write_f64_le(out, b);
  }
  if (!out) throw DataError("write failed: " + path);
}

DenseNetwork load_network(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open file: " + path);
  char magic[4];
  if (!in.read(magic, 4)) throw TruncatedFile("network file: missing magic");
  if (std::memcmp(magic, kMagic, 4) != 0)
    throw BadMagic("network file: bad magic, expected TGNN");
  const std::uint32_t version = read_u32_le(in);
  if (version != kVersion)
    throw FileFormatError("network file: unsupported version " + std::to_string(version));
  const std::uint32_t layer_count = read_u32_le(in);
  if (layer_count == 0) throw FileFormatError("network file: zero layers");

  struct Dims { std::uint32_t in, out, act; };
  std::vector<Dims> dims(layer_count);
  for (auto& dd : dims) {
    dd.in = read_u32_le(in);
    dd.out = read_u32_le(in);
    dd.act = read_u32_le(in);
    if (dd.act > std::uint32_t(Activation::tanh))
      throw FileFormatError("network file: unknown activation tag " + std::to_string(dd.act));
  }
  for (std::size_t i = 1; i < dims.size(); ++i)
    if (dims[i].in != dims[i - 1].out)
      throw FileFormatError("network file: layer dimensions do not chain");

  DenseNetwork net;
  for (const Dims& dd : dims) {
    Layer l;
    l.weight = num::Matrix(dd.out, dd.in);
    l.bias.assign(dd.out, 0.0);
    l.act = Activation(dd.act);
    net.layers.push_back(std::move(l));
  }
  for (Layer& l : net.layers) {
    for (double& w : l.weight.entries) w = read_f64_le(in);
    for (double& b : l.bias) b = read_f64_le(in);
  }
  return net;
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::identity: return "identity";
    case Activation::relu: return "relu";
    case Activation::softplus: return "softplus";
    case Activation::tanh: return "tanh";
  }
  return "identity";
}

Activation activation_from_name(const std::string& name) {
  if (name == "identity") return Activation::identity;
  if (name == "relu") return Activation::relu;
  if (name == "softplus") return Activation::softplus;
  if (name == "tanh") return Activation::tanh;
  throw InvalidSpec("unknown activation: " + name);
}

}  // namespace tangrad::nn
