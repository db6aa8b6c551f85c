#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "aidetect/error.hpp"
#include "aidetect/rng.hpp"
#include "aidetect/tokenizer.hpp"

namespace aidetect::net {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using RowVector = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct ModelConfig {
  std::size_t vocab_size = 2000;
  std::size_t max_len = 256;
  std::size_t d_model = 64;
  std::size_t n_heads = 4;
  std::size_t n_layers = 2;
  std::size_t d_ff = 256;
  std::size_t n_labels = 2;
  double dropout = 0.1;

  std::size_t head_dim() const noexcept { return d_model / n_heads; }

  void validate() const {
    if (vocab_size == 0 || max_len < 2 || d_model == 0 || n_heads == 0 || d_ff == 0 || n_labels != 2) {
      throw ConfigError("model config has a zero dimension or n_labels != 2");
    }
    if (d_model % n_heads != 0) throw ConfigError("d_model must be divisible by n_heads");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  }

  bool operator==(const ModelConfig&) const = default;
};

inline nlohmann::json to_json(const ModelConfig& c) {
  return {{"vocab_size", c.vocab_size}, {"max_len", c.max_len}, {"d_model", c.d_model}, {"n_heads", c.n_heads},
          {"n_layers", c.n_layers},     {"d_ff", c.d_ff},       {"n_labels", c.n_labels}, {"dropout", c.dropout}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.vocab_size = j.at("vocab_size").get<std::size_t>();
  c.max_len = j.at("max_len").get<std::size_t>();
  c.d_model = j.at("d_model").get<std::size_t>();
  c.n_heads = j.at("n_heads").get<std::size_t>();
  c.n_layers = j.at("n_layers").get<std::size_t>();
  c.d_ff = j.at("d_ff").get<std::size_t>();
  c.n_labels = j.at("n_labels").get<std::size_t>();
  c.dropout = j.at("dropout").get<double>();
  c.validate();
  return c;
}

enum class TensorKind { Weight, Bias, Gain };

struct LayerParams {
  Matrix ln1_gain, ln1_bias;
  Matrix wq, wk, wv, wo;  // [d_model x d_model], no biases
  Matrix ln2_gain, ln2_bias;
  Matrix ff1_w, ff1_b;    // [d_model x d_ff], [1 x d_ff]
  Matrix ff2_w, ff2_b;    // [d_ff x d_model], [1 x d_model]
};

// Row-vector convention throughout: y = x * W + b.
struct Params {
  ModelConfig config;
  Matrix tok_emb;  // [vocab_size x d_model]
  Matrix pos_emb;  // [max_len x d_model]
  std::vector<LayerParams> layers;
  Matrix lnf_gain, lnf_bias;
  Matrix pool_w, pool_b;  // [d_model x d_model], [1 x d_model]
  Matrix out_w, out_b;    // [d_model x n_labels], [1 x n_labels]

  // Same shapes, every entry zero. Gains are zero too: this is the gradient
  // and moment layout, not a usable model.
  static Params zeros(const ModelConfig& c) {
    c.validate();
    Params p;
    p.config = c;
    const auto d = static_cast<Eigen::Index>(c.d_model);
    const auto ff = static_cast<Eigen::Index>(c.d_ff);
    p.tok_emb = Matrix::Zero(static_cast<Eigen::Index>(c.vocab_size), d);
    p.pos_emb = Matrix::Zero(static_cast<Eigen::Index>(c.max_len), d);
    p.layers.resize(c.n_layers);
    for (auto& l : p.layers) {
      l.ln1_gain = l.ln1_bias = l.ln2_gain = l.ln2_bias = Matrix::Zero(1, d);
      l.wq = l.wk = l.wv = l.wo = Matrix::Zero(d, d);
      l.ff1_w = Matrix::Zero(d, ff);
      l.ff1_b = Matrix::Zero(1, ff);
      l.ff2_w = Matrix::Zero(ff, d);
      l.ff2_b = Matrix::Zero(1, d);
    }
    p.lnf_gain = p.lnf_bias = Matrix::Zero(1, d);
    p.pool_w = Matrix::Zero(d, d);
    p.pool_b = Matrix::Zero(1, d);
    p.out_w = Matrix::Zero(d, static_cast<Eigen::Index>(c.n_labels));
    p.out_b = Matrix::Zero(1, static_cast<Eigen::Index>(c.n_labels));
    return p;
  }
};

// Visits every tensor in manifest order as f(name, tensor, kind). This order
// defines the checkpoint layout and the init RNG stream.
template <typename P, typename F>
  requires std::is_same_v<std::remove_const_t<P>, Params>
void for_each_tensor(P& p, F&& f) {
  f(std::string("tok_emb"), p.tok_emb, TensorKind::Weight);
  f(std::string("pos_emb"), p.pos_emb, TensorKind::Weight);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    auto& l = p.layers[i];
    const std::string pre = "layers." + std::to_string(i) + ".";
    f(pre + "ln1_gain", l.ln1_gain, TensorKind::Gain);
    f(pre + "ln1_bias", l.ln1_bias, TensorKind::Bias);
    f(pre + "wq", l.wq, TensorKind::Weight);
    f(pre + "wk", l.wk, TensorKind::Weight);
    f(pre + "wv", l.wv, TensorKind::Weight);
    f(pre + "wo", l.wo, TensorKind::Weight);
    f(pre + "ln2_gain", l.ln2_gain, TensorKind::Gain);
    f(pre + "ln2_bias", l.ln2_bias, TensorKind::Bias);
    f(pre + "ff1_w", l.ff1_w, TensorKind::Weight);
    f(pre + "ff1_b", l.ff1_b, TensorKind::Bias);
    f(pre + "ff2_w", l.ff2_w, TensorKind::Weight);
    f(pre + "ff2_b", l.ff2_b, TensorKind::Bias);
  }
  f(std::string("lnf_gain"), p.lnf_gain, TensorKind::Gain);
  f(std::string("lnf_bias"), p.lnf_bias, TensorKind::Bias);
  f(std::string("pool_w"), p.pool_w, TensorKind::Weight);
  f(std::string("pool_b"), p.pool_b, TensorKind::Bias);
  f(std::string("out_w"), p.out_w, TensorKind::Weight);
  f(std::string("out_b"), p.out_b, TensorKind::Bias);
}

template <typename P>
auto tensor_list(P& p) {
  using T = std::conditional_t<std::is_const_v<P>, const Matrix, Matrix>;
  std::vector<T*> out;
  for_each_tensor(p, [&](const std::string&, T& m, TensorKind) { out.push_back(&m); });
  return out;
}

inline std::vector<std::string> tensor_names(const Params& p) {
  std::vector<std::string> out;
  for_each_tensor(p, [&](const std::string& n, const Matrix&, TensorKind) { out.push_back(n); });
  return out;
}

inline std::size_t parameter_count(const Params& p) {
  std::size_t n = 0;
  for_each_tensor(p, [&](const std::string&, const Matrix& m, TensorKind) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

// Glorot-uniform weights (limit sqrt(6 / (rows + cols))), zero biases and
// shifts, unit gains. One Rng(seed) stream, tensors in manifest order,
// entries row-major.
inline Params init_params(const ModelConfig& config, std::uint64_t seed) {
  Params p = Params::zeros(config);
  Rng rng(seed);
  for_each_tensor(p, [&](const std::string&, Matrix& m, TensorKind kind) {
    switch (kind) {
      case TensorKind::Weight: {
        const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
        for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-limit, limit);
        break;
      }
      case TensorKind::Bias:
        m.setZero();
        break;
      case TensorKind::Gain:
        m.setOnes();
        break;
    }
  });
  return p;
}

enum class Mode { Train, Eval };

inline constexpr double kLayerNormEps = 1e-5;

namespace detail {

struct LayerNormCache {
  Matrix xhat;
  Eigen::VectorXd rstd;
};

inline Matrix layer_norm(const Matrix& x, const Matrix& gain, const Matrix& bias, LayerNormCache& cache) {
  const auto n = static_cast<double>(x.cols());
  cache.xhat.resize(x.rows(), x.cols());
  cache.rstd.resize(x.rows());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mean = x.row(r).sum() / n;
    const double var = (x.row(r).array() - mean).square().sum() / n;
    const double rstd = 1.0 / std::sqrt(var + kLayerNormEps);
    cache.rstd(r) = rstd;
    cache.xhat.row(r) = (x.row(r).array() - mean) * rstd;
  }
  return (cache.xhat.array().rowwise() * gain.row(0).array()).rowwise() + bias.row(0).array();
}

// Returns dx; accumulates dgain, dbias.
inline Matrix layer_norm_backward(const Matrix& dy, const Matrix& gain, const LayerNormCache& cache, Matrix& dgain,
                                  Matrix& dbias) {
  const auto n = static_cast<double>(dy.cols());
  dgain.row(0) += (dy.array() * cache.xhat.array()).colwise().sum().matrix();
  dbias.row(0) += dy.colwise().sum();
  const Matrix dxhat = dy.array().rowwise() * gain.row(0).array();
  Matrix dx(dy.rows(), dy.cols());
  for (Eigen::Index r = 0; r < dy.rows(); ++r) {
    const double s1 = dxhat.row(r).sum();
    const double s2 = dxhat.row(r).dot(cache.xhat.row(r));
    dx.row(r) = (cache.rstd(r) / n) * (n * dxhat.row(r).array() - s1 - cache.xhat.row(r).array() * s2).matrix();
  }
  return dx;
}

inline double gelu(double u) { return 0.5 * u * (1.0 + std::erf(u * std::numbers::sqrt2 / 2.0)); }

inline double gelu_grad(double u) {
  const double cdf = 0.5 * (1.0 + std::erf(u * std::numbers::sqrt2 / 2.0));
  const double pdf = std::exp(-0.5 * u * u) / std::sqrt(2.0 * std::numbers::pi);
  return cdf + u * pdf;
}

// Inverted dropout mask: entries are 0 or 1/(1-p). Empty when inactive.
inline Matrix dropout_mask(Eigen::Index rows, Eigen::Index cols, double p, Rng& rng) {
  Matrix m(rows, cols);
  const double scale = 1.0 / (1.0 - p);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform() >= p ? scale : 0.0;
  return m;
}

inline void softmax_rows(Matrix& s) {
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const double mx = s.row(r).maxCoeff();
    s.row(r) = (s.row(r).array() - mx).exp();
    s.row(r) /= s.row(r).sum();
  }
}

struct LayerCache {
  LayerNormCache ln1;
  Matrix a, q, k, v;
  std::vector<Matrix> probs;  // per head [L x L]
  Matrix ctx;
  Matrix attn_mask;
  LayerNormCache ln2;
  Matrix b, u, g;
  Matrix ff_mask;
};

struct ForwardCache {
  std::vector<TokenId> ids;  // attended prefix
  Matrix emb_mask;
  std::vector<LayerCache> layers;
  LayerNormCache lnf;
  Matrix hf;      // [1 x d] final-norm state of position 0
  Matrix pooled;  // [1 x d]
  Matrix logits;  // [1 x n_labels]
};

}  // namespace detail

// Attention maps are [layer][head], each L x L over the attended prefix
// (L = number of mask ones). Padding positions are never computed: they are
// excluded as keys and only position 0 feeds the head.
struct ForwardResult {
  std::vector<double> logits;
  std::vector<std::vector<Matrix>> attention;
};

inline std::size_t validate_input(const ModelConfig& c, std::span<const TokenId> ids, std::span<const std::uint8_t> mask) {
  if (ids.size() != c.max_len || mask.size() != c.max_len) {
    throw ShapeError("input length " + std::to_string(ids.size()) + "/" + std::to_string(mask.size()) +
                     " does not match max_len " + std::to_string(c.max_len));
  }
  std::size_t len = 0;
  while (len < mask.size() && mask[len] == 1) ++len;
  for (std::size_t i = len; i < mask.size(); ++i) {
    if (mask[i] != 0) throw ShapeError("attention mask must be a prefix of ones");
  }
  if (len == 0) throw ShapeError("attention mask selects no positions");
  for (std::size_t i = 0; i < len; ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= c.vocab_size) {
      throw ShapeError("token id " + std::to_string(ids[i]) + " outside vocab of size " + std::to_string(c.vocab_size));
    }
  }
  return len;
}

inline std::uint64_t example_seed(std::uint64_t batch_seed, std::size_t index) {
  return derive_seed(batch_seed, 0xD7, index);
}

namespace detail {

inline void run_forward(const Params& p, std::span<const TokenId> ids, std::span<const std::uint8_t> mask, Mode mode,
                        std::uint64_t seed, ForwardCache& cache) {
  const ModelConfig& c = p.config;
  const std::size_t len = validate_input(c, ids, mask);
  const auto L = static_cast<Eigen::Index>(len);
  const auto d = static_cast<Eigen::Index>(c.d_model);
  const auto dh = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  const bool drop = mode == Mode::Train && c.dropout > 0.0;
  Rng rng(seed);

  cache.ids.assign(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(len));
  Matrix h(L, d);
  for (Eigen::Index i = 0; i < L; ++i) h.row(i) = p.tok_emb.row(cache.ids[static_cast<std::size_t>(i)]) + p.pos_emb.row(i);
  if (drop) {
    cache.emb_mask = dropout_mask(L, d, c.dropout, rng);
    h.array() *= cache.emb_mask.array();
  } else {
    cache.emb_mask.resize(0, 0);
  }

  cache.layers.resize(c.n_layers);
  for (std::size_t li = 0; li < c.n_layers; ++li) {
    const LayerParams& lp = p.layers[li];
    LayerCache& lc = cache.layers[li];
    lc.a = layer_norm(h, lp.ln1_gain, lp.ln1_bias, lc.ln1);
    lc.q.noalias() = lc.a * lp.wq;
    lc.k.noalias() = lc.a * lp.wk;
    lc.v.noalias() = lc.a * lp.wv;
    lc.ctx.resize(L, d);
    lc.probs.resize(c.n_heads);
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd) * dh;
      Matrix s = (lc.q.middleCols(off, dh) * lc.k.middleCols(off, dh).transpose()) * scale;
      softmax_rows(s);
      lc.ctx.middleCols(off, dh).noalias() = s * lc.v.middleCols(off, dh);
      lc.probs[hd] = std::move(s);
    }
    Matrix o = lc.ctx * lp.wo;
    if (drop) {
      lc.attn_mask = dropout_mask(L, d, c.dropout, rng);
      o.array() *= lc.attn_mask.array();
    }
    h += o;

    lc.b = layer_norm(h, lp.ln2_gain, lp.ln2_bias, lc.ln2);
    lc.u = (lc.b * lp.ff1_w).rowwise() + lp.ff1_b.row(0);
    lc.g = lc.u.unaryExpr([](double x) { return gelu(x); });
    Matrix f = (lc.g * lp.ff2_w).rowwise() + lp.ff2_b.row(0);
    if (drop) {
      lc.ff_mask = dropout_mask(L, d, c.dropout, rng);
      f.array() *= lc.ff_mask.array();
    }
    h += f;
  }

  const Matrix h0 = h.row(0);
  cache.hf = layer_norm(h0, p.lnf_gain, p.lnf_bias, cache.lnf);
  cache.pooled = ((cache.hf * p.pool_w) + p.pool_b).array().tanh().matrix();
  cache.logits = cache.pooled * p.out_w + p.out_b;
}

}  // namespace detail

inline ForwardResult forward(const Params& params, std::span<const TokenId> ids, std::span<const std::uint8_t> mask,
                             Mode mode = Mode::Eval, std::uint64_t seed = 0) {
  detail::ForwardCache cache;
  detail::run_forward(params, ids, mask, mode, seed, cache);
  ForwardResult r;
  r.logits.assign(cache.logits.data(), cache.logits.data() + cache.logits.size());
  r.attention.resize(cache.layers.size());
  for (std::size_t i = 0; i < cache.layers.size(); ++i) r.attention[i] = std::move(cache.layers[i].probs);
  return r;
}

inline ForwardResult forward(const Params& params, const EncodedExample& ex, Mode mode = Mode::Eval,
                             std::uint64_t seed = 0) {
  return forward(params, ex.ids, ex.mask, mode, seed);
}

// -log softmax(logits)[label], via log-sum-exp.
inline double cross_entropy_loss(std::span<const double> logits, int label) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  double sum = 0.0;
  for (double z : logits) sum += std::exp(z - mx);
  return mx + std::log(sum) - logits[static_cast<std::size_t>(label)];
}

inline std::vector<double> softmax(std::span<const double> logits) {
  double mx = logits[0];
  for (double z : logits) mx = std::max(mx, z);
  std::vector<double> p(logits.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) sum += p[i] = std::exp(logits[i] - mx);
  for (double& x : p) x /= sum;
  return p;
}

struct Prediction {
  Label label = Label::Human;
  double p_ai = 0.0;
  double p_human = 0.0;
};

// Ties resolve to Human.
inline Prediction predict(const Params& params, const EncodedExample& ex) {
  const ForwardResult r = forward(params, ex, Mode::Eval);
  const auto p = softmax(r.logits);
  return {r.logits[1] > r.logits[0] ? Label::Ai : Label::Human, p[1], p[0]};
}

struct LossAndGrad {
  double loss = 0.0;
  Params grads;
};

namespace detail {

// Accumulates gradients of weight * CE(example) into g.
inline double backprop_example(const Params& p, const EncodedExample& ex, Mode mode, std::uint64_t seed, double weight,
                               Params& g) {
  if (!ex.label) throw ConfigError("training example has no label");
  const ModelConfig& c = p.config;
  ForwardCache cache;
  run_forward(p, ex.ids, ex.mask, mode, seed, cache);
  const int label = to_int(*ex.label);
  const std::span<const double> logits(cache.logits.data(), static_cast<std::size_t>(cache.logits.size()));
  const double loss = cross_entropy_loss(logits, label);

  const auto probs = softmax(logits);
  Matrix dlogits(1, cache.logits.cols());
  for (Eigen::Index i = 0; i < dlogits.cols(); ++i) {
    dlogits(0, i) = weight * (probs[static_cast<std::size_t>(i)] - (i == label ? 1.0 : 0.0));
  }
  g.out_w.noalias() += cache.pooled.transpose() * dlogits;
  g.out_b += dlogits;
  const Matrix dpooled = dlogits * p.out_w.transpose();
  const Matrix dz = dpooled.array() * (1.0 - cache.pooled.array().square());
  g.pool_w.noalias() += cache.hf.transpose() * dz;
  g.pool_b += dz;
  const Matrix dhf = dz * p.pool_w.transpose();
  const Matrix dh0 = layer_norm_backward(dhf, p.lnf_gain, cache.lnf, g.lnf_gain, g.lnf_bias);

  const auto L = static_cast<Eigen::Index>(cache.ids.size());
  const auto d = static_cast<Eigen::Index>(c.d_model);
  const auto dh = static_cast<Eigen::Index>(c.head_dim());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));

  Matrix dH = Matrix::Zero(L, d);
  dH.row(0) = dh0.row(0);

  for (std::size_t li = c.n_layers; li-- > 0;) {
    const LayerParams& lp = p.layers[li];
    LayerParams& lg = g.layers[li];
    const LayerCache& lc = cache.layers[li];

    // Feed-forward sublayer.
    Matrix df = dH;
    if (lc.ff_mask.size()) df.array() *= lc.ff_mask.array();
    lg.ff2_w.noalias() += lc.g.transpose() * df;
    lg.ff2_b.row(0) += df.colwise().sum();
    Matrix du = df * lp.ff2_w.transpose();
    du.array() *= lc.u.unaryExpr([](double x) { return gelu_grad(x); }).array();
    lg.ff1_w.noalias() += lc.b.transpose() * du;
    lg.ff1_b.row(0) += du.colwise().sum();
    const Matrix db = du * lp.ff1_w.transpose();
    dH += layer_norm_backward(db, lp.ln2_gain, lc.ln2, lg.ln2_gain, lg.ln2_bias);

    // Attention sublayer.
    Matrix dout = dH;
    if (lc.attn_mask.size()) dout.array() *= lc.attn_mask.array();
    lg.wo.noalias() += lc.ctx.transpose() * dout;
    const Matrix dctx = dout * lp.wo.transpose();
    Matrix dq(L, d), dk(L, d), dv(L, d);
    for (std::size_t hd = 0; hd < c.n_heads; ++hd) {
      const auto off = static_cast<Eigen::Index>(hd) * dh;
      const Matrix& P = lc.probs[hd];
      const auto dctx_h = dctx.middleCols(off, dh);
      dv.middleCols(off, dh).noalias() = P.transpose() * dctx_h;
      const Matrix dP = dctx_h * lc.v.middleCols(off, dh).transpose();
      Matrix dS = P.array() * (dP.array().colwise() - (dP.array() * P.array()).rowwise().sum());
      dS *= scale;
      dq.middleCols(off, dh).noalias() = dS * lc.k.middleCols(off, dh);
      dk.middleCols(off, dh).noalias() = dS.transpose() * lc.q.middleCols(off, dh);
    }
    lg.wq.noalias() += lc.a.transpose() * dq;
    lg.wk.noalias() += lc.a.transpose() * dk;
    lg.wv.noalias() += lc.a.transpose() * dv;
    Matrix da = dq * lp.wq.transpose();
    da.noalias() += dk * lp.wk.transpose();
    da.noalias() += dv * lp.wv.transpose();
    dH += layer_norm_backward(da, lp.ln1_gain, lc.ln1, lg.ln1_gain, lg.ln1_bias);
  }

  if (cache.emb_mask.size()) dH.array() *= cache.emb_mask.array();
  for (Eigen::Index i = 0; i < L; ++i) {
    g.tok_emb.row(cache.ids[static_cast<std::size_t>(i)]) += dH.row(i);
    g.pos_emb.row(i) += dH.row(i);
  }
  return loss;
}

}  // namespace detail

// Mean cross-entropy over the batch and its exact gradient. Element i uses
// dropout seed example_seed(seed, i), so forward(..., Mode::Train,
// example_seed(seed, i)) reproduces its dropout pattern.
inline LossAndGrad backward(const Params& params, std::span<const EncodedExample> batch, Mode mode = Mode::Train,
                            std::uint64_t seed = 0) {
  if (batch.empty()) throw ConfigError("backward needs a non-empty batch");
  LossAndGrad out{0.0, Params::zeros(params.config)};
  const double w = 1.0 / static_cast<double>(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    out.loss += w * detail::backprop_example(params, batch[i], mode, example_seed(seed, i), w, out.grads);
  }
  return out;
}

// Mean loss only (used by finite-difference checks).
inline double batch_loss(const Params& params, std::span<const EncodedExample> batch, Mode mode = Mode::Eval,
                         std::uint64_t seed = 0) {
  if (batch.empty()) throw ConfigError("batch_loss needs a non-empty batch");
  double loss = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto r = forward(params, batch[i], mode, example_seed(seed, i));
    loss += cross_entropy_loss(r.logits, to_int(*batch[i].label));
  }
  return loss / static_cast<double>(batch.size());
}

struct AdamState {
  Params m;
  Params v;
  std::int64_t t = 0;
  double lr = 5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  static AdamState fresh(const ModelConfig& c, double lr = 5e-4) {
    AdamState s{Params::zeros(c), Params::zeros(c)};
    s.lr = lr;
    return s;
  }
};

// One bias-corrected Adam update in place. Rejects non-finite gradients
// before touching anything.
inline void adam_step(Params& params, const Params& grads, AdamState& state) {
  const auto theta = tensor_list(params);
  const auto g = tensor_list(grads);
  const auto m = tensor_list(state.m);
  const auto v = tensor_list(state.v);
  if (theta.size() != g.size() || theta.size() != m.size() || theta.size() != v.size()) {
    throw ShapeError("adam_step: parameter, gradient and moment layouts differ");
  }
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i]->rows() != g[i]->rows() || theta[i]->cols() != g[i]->cols() || m[i]->rows() != theta[i]->rows() ||
        m[i]->cols() != theta[i]->cols()) {
      throw ShapeError("adam_step: tensor shape mismatch");
    }
    if (!g[i]->allFinite()) throw NumericError("adam_step: non-finite gradient");
  }
  state.t += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < theta.size(); ++i) {
    auto gm = g[i]->array();
    m[i]->array() = state.beta1 * m[i]->array() + (1.0 - state.beta1) * gm;
    v[i]->array() = state.beta2 * v[i]->array() + (1.0 - state.beta2) * gm.square();
    theta[i]->array() -= state.lr * (m[i]->array() / bc1) / ((v[i]->array() / bc2).sqrt() + state.eps);
  }
}

}  // namespace aidetect::net
