#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hgformer/hypergraph.hpp"
#include "hgformer/ops.hpp"
#include "hgformer/optim.hpp"

namespace hgformer {

enum class Precision { Double, Single };

/// Architecture, optimizer and run settings. Defaults cover what the
/// original experiments leave open (width, depth of the embedding, epochs,
/// dropout rate); every field is overridable from the CLI.
struct ModelConfig {
  double gamma = 0.3;
  int num_layers = 2;
  int num_heads = 4;
  int d_h = 64;
  int d_k = 16;
  int d_q = 16;
  double dropout = 0.5;
  bool use_residual = true;
  int num_classes = 0;
  int feature_dim = 0;
  double ln_eps = 1e-5;

  double lr = 0.01;
  double weight_decay = 5e-4;
  int epochs = 200;
  std::uint64_t seed = 0;
  Precision precision = Precision::Double;

  /// Throws InvalidParameters / GammaOutOfRange on a bad field.
  void validate() const;
};

template <class T>
struct HeadParams {
  Tensor<T> w_q;  // d_h x d_k
  Tensor<T> w_k;  // d_h x d_k
  Tensor<T> w_v;  // d_h x d_q
};

/// Views into one layer's entries of the parameter map.
template <class T>
struct LayerParams {
  std::vector<HeadParams<T>> heads;
  Tensor<T> w_z;       // (h * d_q) x d_h
  Tensor<T> ln_scale;  // 1 x d_h
  Tensor<T> ln_shift;  // 1 x d_h
};

/// Row-stochastic attention softmax((Z W_Q)(Z W_K)^T / sqrt(d_k)).
template <class T>
Tensor<T> attention_matrix(const Tensor<T>& z, const Tensor<T>& w_q, const Tensor<T>& w_k);

/// (gamma * softmax(Q K^T / sqrt(d_k)) + (1 - gamma) * L) V. The mixed
/// matrix is used as is; its rows need not sum to one.
template <class T>
Tensor<T> laplacian_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                              const Tensor<T>& lap, double gamma);

/// Concat(head_1..head_h) W_Z.
template <class T>
Tensor<T> multi_head(const Tensor<T>& z, const Tensor<T>& lap, double gamma,
                     const LayerParams<T>& layer);

struct LayerOptions {
  double gamma = 0.3;
  bool use_residual = true;
  double dropout = 0.0;
  double ln_eps = 1e-5;
};

/// LN(MultiHead(Z)) (+ Z when residual), then dropout in training mode.
template <class T>
Tensor<T> layer_forward(const Tensor<T>& z, const Tensor<T>& lap, const LayerParams<T>& layer,
                        const LayerOptions& opts, bool training, Rng& rng);

template <class T>
class Model {
 public:
  /// Initializes parameters from cfg.seed: Glorot-uniform projections, zero
  /// biases and LN shifts, unit LN scales, PReLU slope 0.25.
  explicit Model(ModelConfig cfg);

  const ModelConfig& config() const noexcept { return cfg_; }
  Params<T>& params() noexcept { return params_; }
  const Params<T>& params() const noexcept { return params_; }

  LayerParams<T> layer(int index) const;

  /// Logits N x C. `lap` is the N x N Laplacian as a constant tensor.
  Tensor<T> forward(const Tensor<T>& x, const Tensor<T>& lap, bool training, Rng& rng) const;

 private:
  ModelConfig cfg_;
  Params<T> params_;
};

std::string layer_param_name(int layer, const std::string& leaf);
std::string head_param_name(int layer, int head, const std::string& leaf);

template <class T>
Tensor<T> to_tensor(const Matrix& m);

template <class T>
Matrix to_matrix(const Tensor<T>& t);

/// Builds L from hg, then runs the model.
template <class T>
Tensor<T> model_forward(const Tensor<T>& x, const Hypergraph& hg, const Model<T>& model,
                        bool training, Rng& rng);

/// Row-wise softmax of logits without recording.
template <class T>
Tensor<T> predict_proba(const Tensor<T>& logits);

}  // namespace hgformer
