#include "hgformer/model.hpp"

#include <cmath>

namespace hgformer {

void ModelConfig::validate() const {
  auto bad = [](const std::string& what) { throw Error(ErrorKind::InvalidParameters, what); };
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw Error(ErrorKind::GammaOutOfRange, "gamma " + std::to_string(gamma) + " outside [0,1]");
  if (num_layers < 1) bad("num_layers must be >= 1");
  if (num_heads < 1) bad("num_heads must be >= 1");
  if (d_h < 1 || d_k < 1 || d_q < 1) bad("d_h, d_k and d_q must be positive");
  if (!(dropout >= 0.0 && dropout < 1.0))
    throw Error(ErrorKind::InvalidProbability, "dropout " + std::to_string(dropout));
  if (num_classes < 1) bad("num_classes must be >= 1");
  if (feature_dim < 1) bad("feature_dim must be >= 1");
  if (epochs < 0) bad("epochs must be >= 0");
  if (!(lr >= 0.0) || !(weight_decay >= 0.0)) bad("lr and weight_decay must be >= 0");
  if (!(ln_eps > 0.0)) bad("ln_eps must be > 0");
}

std::string layer_param_name(int layer, const std::string& leaf) {
  return "layers." + std::to_string(layer) + "." + leaf;
}

std::string head_param_name(int layer, int head, const std::string& leaf) {
  return "layers." + std::to_string(layer) + ".heads." + std::to_string(head) + "." + leaf;
}

template <class T>
Tensor<T> attention_matrix(const Tensor<T>& z, const Tensor<T>& w_q, const Tensor<T>& w_k) {
  if (w_q.cols() != w_k.cols())
    throw Error(ErrorKind::ShapeMismatch,
                "attention_matrix: W_Q " + w_q.shape_string() + " vs W_K " + w_k.shape_string());
  const Tensor<T> q = matmul(z, w_q);
  const Tensor<T> k = matmul(z, w_k);
  const T inv_sqrt_dk = T(1.0 / std::sqrt(static_cast<double>(q.cols())));
  return softmax_rows(scale(matmul_transposed(q, k), inv_sqrt_dk));
}

template <class T>
Tensor<T> laplacian_attention(const Tensor<T>& q, const Tensor<T>& k, const Tensor<T>& v,
                              const Tensor<T>& lap, double gamma) {
  if (!(gamma >= 0.0 && gamma <= 1.0))
    throw Error(ErrorKind::GammaOutOfRange, "gamma " + std::to_string(gamma) + " outside [0,1]");
  const std::size_t n = q.rows();
  if (k.rows() != n || v.rows() != n || lap.rows() != n || lap.cols() != n || q.cols() != k.cols())
    throw Error(ErrorKind::ShapeMismatch, "laplacian_attention: Q " + q.shape_string() + ", K " +
                                              k.shape_string() + ", V " + v.shape_string() +
                                              ", L " + lap.shape_string());
  const T inv_sqrt_dk = T(1.0 / std::sqrt(static_cast<double>(q.cols())));
  const Tensor<T> m = softmax_rows(scale(matmul_transposed(q, k), inv_sqrt_dk));
  const Tensor<T> a = mix(m, lap, T(gamma), T(1.0 - gamma));
  return matmul(a, v);
}

template <class T>
Tensor<T> multi_head(const Tensor<T>& z, const Tensor<T>& lap, double gamma,
                     const LayerParams<T>& layer) {
  if (layer.heads.empty()) throw Error(ErrorKind::ShapeMismatch, "multi_head: no heads");
  std::vector<Tensor<T>> heads;
  heads.reserve(layer.heads.size());
  for (const auto& h : layer.heads)
    heads.push_back(
        laplacian_attention(matmul(z, h.w_q), matmul(z, h.w_k), matmul(z, h.w_v), lap, gamma));
  const Tensor<T> cat = heads.size() == 1 ? heads.front() : concat_cols(heads);
  return matmul(cat, layer.w_z);
}

template <class T>
Tensor<T> layer_forward(const Tensor<T>& z, const Tensor<T>& lap, const LayerParams<T>& layer,
                        const LayerOptions& opts, bool training, Rng& rng) {
  Tensor<T> out =
      layer_norm(multi_head(z, lap, opts.gamma, layer), layer.ln_scale, layer.ln_shift, T(opts.ln_eps));
  if (opts.use_residual) {
    if (out.cols() != z.cols())
      throw Error(ErrorKind::ShapeMismatch, "residual: layer output " + out.shape_string() +
                                                " vs input " + z.shape_string());
    out = add(out, z);
  }
  return dropout(out, opts.dropout, training, rng);
}

namespace {

template <class T>
Tensor<T> glorot(std::size_t fan_in, std::size_t fan_out, Rng& rng) {
  const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::vector<T> v(fan_in * fan_out);
  for (auto& x : v) x = T(uniform(rng, -bound, bound));
  return Tensor<T>::parameter(fan_in, fan_out, std::move(v));
}

template <class T>
Tensor<T> constant_param(std::size_t rows, std::size_t cols, T value) {
  return Tensor<T>::parameter(rows, cols, std::vector<T>(rows * cols, value));
}

}  // namespace

template <class T>
Model<T>::Model(ModelConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  Rng rng(cfg_.seed);
  const auto c = static_cast<std::size_t>(cfg_.feature_dim);
  const auto dh = static_cast<std::size_t>(cfg_.d_h);
  const auto dk = static_cast<std::size_t>(cfg_.d_k);
  const auto dq = static_cast<std::size_t>(cfg_.d_q);
  const auto heads = static_cast<std::size_t>(cfg_.num_heads);

  params_["embed.weight"] = glorot<T>(c, dh, rng);
  params_["embed.bias"] = constant_param<T>(1, dh, T(0));
  params_["embed.prelu"] = constant_param<T>(1, 1, T(0.25));
  for (int l = 0; l < cfg_.num_layers; ++l) {
    for (int h = 0; h < cfg_.num_heads; ++h) {
      params_[head_param_name(l, h, "w_q")] = glorot<T>(dh, dk, rng);
      params_[head_param_name(l, h, "w_k")] = glorot<T>(dh, dk, rng);
      params_[head_param_name(l, h, "w_v")] = glorot<T>(dh, dq, rng);
    }
    params_[layer_param_name(l, "w_z")] = glorot<T>(heads * dq, dh, rng);
    params_[layer_param_name(l, "ln.scale")] = constant_param<T>(1, dh, T(1));
    params_[layer_param_name(l, "ln.shift")] = constant_param<T>(1, dh, T(0));
  }
  params_["out.weight"] = glorot<T>(dh, static_cast<std::size_t>(cfg_.num_classes), rng);
  params_["out.bias"] = constant_param<T>(1, static_cast<std::size_t>(cfg_.num_classes), T(0));
}

template <class T>
LayerParams<T> Model<T>::layer(int index) const {
  LayerParams<T> lp;
  for (int h = 0; h < cfg_.num_heads; ++h)
    lp.heads.push_back({params_.at(head_param_name(index, h, "w_q")),
                        params_.at(head_param_name(index, h, "w_k")),
                        params_.at(head_param_name(index, h, "w_v"))});
  lp.w_z = params_.at(layer_param_name(index, "w_z"));
  lp.ln_scale = params_.at(layer_param_name(index, "ln.scale"));
  lp.ln_shift = params_.at(layer_param_name(index, "ln.shift"));
  return lp;
}

template <class T>
Tensor<T> Model<T>::forward(const Tensor<T>& x, const Tensor<T>& lap, bool training,
                            Rng& rng) const {
  if (x.cols() != static_cast<std::size_t>(cfg_.feature_dim) || lap.rows() != x.rows() ||
      lap.cols() != x.rows())
    throw Error(ErrorKind::ShapeMismatch, "model_forward: X " + x.shape_string() + ", L " +
                                              lap.shape_string() + ", feature_dim " +
                                              std::to_string(cfg_.feature_dim));
  Tensor<T> z = add_row(matmul(x, params_.at("embed.weight")), params_.at("embed.bias"));
  z = dropout(prelu(z, params_.at("embed.prelu")), cfg_.dropout, training, rng);

  const LayerOptions opts{cfg_.gamma, cfg_.use_residual, cfg_.dropout, cfg_.ln_eps};
  for (int l = 0; l < cfg_.num_layers; ++l) z = layer_forward(z, lap, layer(l), opts, training, rng);

  return add_row(matmul(z, params_.at("out.weight")), params_.at("out.bias"));
}

template <class T>
Tensor<T> to_tensor(const Matrix& m) {
  std::vector<T> v(m.data().begin(), m.data().end());
  return Tensor<T>::from_values(m.rows(), m.cols(), std::move(v));
}

template <class T>
Matrix to_matrix(const Tensor<T>& t) {
  Matrix m(t.rows(), t.cols());
  for (std::size_t i = 0; i < t.size(); ++i) m.data()[i] = static_cast<double>(t.values()[i]);
  return m;
}

template <class T>
Tensor<T> model_forward(const Tensor<T>& x, const Hypergraph& hg, const Model<T>& model,
                        bool training, Rng& rng) {
  if (x.rows() != hg.num_nodes())
    throw Error(ErrorKind::ShapeMismatch, "X has " + std::to_string(x.rows()) + " rows, graph has " +
                                              std::to_string(hg.num_nodes()) + " nodes");
  return model.forward(x, to_tensor<T>(laplacian(hg).values), training, rng);
}

template <class T>
Tensor<T> predict_proba(const Tensor<T>& logits) {
  NoGradGuard guard;
  return softmax_rows(logits.detach());
}

#define HGFORMER_INSTANTIATE(T)                                                                  \
  template Tensor<T> attention_matrix(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&);      \
  template Tensor<T> laplacian_attention(const Tensor<T>&, const Tensor<T>&, const Tensor<T>&,    \
                                         const Tensor<T>&, double);                              \
  template Tensor<T> multi_head(const Tensor<T>&, const Tensor<T>&, double,                      \
                                const LayerParams<T>&);                                          \
  template Tensor<T> layer_forward(const Tensor<T>&, const Tensor<T>&, const LayerParams<T>&,    \
                                   const LayerOptions&, bool, Rng&);                             \
  template class Model<T>;                                                                       \
  template Tensor<T> to_tensor<T>(const Matrix&);                                                \
  template Matrix to_matrix(const Tensor<T>&);                                                   \
  template Tensor<T> model_forward(const Tensor<T>&, const Hypergraph&, const Model<T>&, bool,  \
                                   Rng&);                                                        \
  template Tensor<T> predict_proba(const Tensor<T>&);

HGFORMER_INSTANTIATE(double)
HGFORMER_INSTANTIATE(float)

#undef HGFORMER_INSTANTIATE

}  // namespace hgformer
