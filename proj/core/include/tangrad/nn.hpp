#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "tangrad/constants.hpp"
#include "tangrad/data.hpp"
#include "tangrad/numerics.hpp"

// Minimal dense feed-forward networks with manual backpropagation. Training
// mutates a network and is single-threaded per job; trained networks are
// immutable afterwards. forward / input_gradient / decoder_jacobian are pure.
namespace tangrad::nn {

enum class Activation : std::uint32_t {
  identity = 0,
  relu = 1,
  softplus = 2,
  tanh = 3,
};

struct Layer {
  num::Matrix weight;  // out_dim x in_dim
  num::Vector bias;    // out_dim
  Activation act = Activation::identity;
};

struct DenseNetwork {
  std::vector<Layer> layers;

  std::size_t input_dim() const { return layers.empty() ? 0 : layers.front().weight.cols; }
  std::size_t output_dim() const { return layers.empty() ? 0 : layers.back().weight.rows; }
};

struct AutoencoderPair {
  DenseNetwork encoder;  // d -> n
  DenseNetwork decoder;  // n -> d

  std::size_t latent_dim() const { return encoder.output_dim(); }
};

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
  double learning_rate = 1e-3;
  int epochs = 100;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  OptimizerKind optimizer = OptimizerKind::adam;
  double adam_beta1 = defaults::kAdamBeta1;
  double adam_beta2 = defaults::kAdamBeta2;
  double adam_eps = defaults::kAdamEps;
  // Hidden layer sizes; a single size-derived hidden layer is used when empty.
  std::vector<std::size_t> hidden;
  Activation hidden_act = Activation::softplus;
};

num::Vector forward(const DenseNetwork& net, const num::Vector& x);

// Gradient of output component `target` with respect to x, by backpropagation.
num::Vector input_gradient(const DenseNetwork& net, const num::Vector& x,
                           std::size_t target);

// d x n Jacobian of a decoder at latent point z; column j = d dec / d z_j.
num::Matrix decoder_jacobian(const DenseNetwork& decoder, const num::Vector& z);

// Seeded Xavier-uniform network. hidden_act applies to all but the last
// layer; the last layer uses out_act.
DenseNetwork make_network(std::size_t in_dim, const std::vector<std::size_t>& hidden,
                          std::size_t out_dim, Activation hidden_act,
                          Activation out_act, std::mt19937_64& rng);

// The untrained pair train_autoencoder starts from (same seed, same layout).
AutoencoderPair init_autoencoder(std::size_t input_dim, std::size_t latent_dim,
                                 const TrainConfig& cfg);

AutoencoderPair train_autoencoder(const data::Dataset& data, std::size_t latent_dim,
                                  const TrainConfig& cfg);

DenseNetwork train_classifier(const data::Dataset& data, const std::vector<int>& labels,
                              const TrainConfig& cfg);

double reconstruction_mse(const AutoencoderPair& ae, const data::Dataset& data);
double classification_accuracy(const DenseNetwork& net, const data::Dataset& data,
                               const std::vector<int>& labels);
std::size_t predicted_class(const DenseNetwork& net, const num::Vector& x);

// Binary weight file: magic "TGNN", then little-endian u32 version, u32 layer
// count, per-layer u32 in_dim / u32 out_dim / u32 activation tag, followed by
// per-layer row-major f64 weights and f64 bias.
void save_network(const DenseNetwork& net, const std::string& path);
DenseNetwork load_network(const std::string& path);

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& name);

}  // namespace tangrad::nn
