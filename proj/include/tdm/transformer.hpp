#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tdm/autograd.hpp"
#include "tdm/common.hpp"
#include "tdm/hash.hpp"
#include "tdm/rng.hpp"

namespace tdm {

struct TransformerConfig {
  int vocab_size = 257;
  int context_window = 256;
  int num_layers = 4;
  int num_heads = 4;
  int model_width = 128;
  int feedforward_width = 512;
  std::string positional_encoding = "sinusoidal";

  void validate() const {
    require(vocab_size > 1, "transformer: vocab_size must exceed 1");
    require(context_window >= 1, "transformer: context_window must be positive");
    require(num_layers >= 1 && num_heads >= 1, "transformer: layers/heads must be positive");
    require(model_width % num_heads == 0, "transformer: model_width must divide by num_heads");
    require(feedforward_width >= 1, "transformer: feedforward_width must be positive");
    require(positional_encoding == "sinusoidal",
            "transformer: only sinusoidal positions are supported");
  }
  int head_dim() const { return model_width / num_heads; }
};

template <typename S>
struct NamedTensor {
  std::string name;
  MatX<S> value;
  MatX<S> moment1;
  MatX<S> moment2;
};

// All trainable weights plus optimizer state, in a fixed declared order so
// checkpoints and gradient reductions are unambiguous.
template <typename S>
struct ModelParameters {
  std::vector<NamedTensor<S>> tensors;
  std::int64_t step = 0;

  NamedTensor<S>& find(const std::string& name) {
    for (auto& t : tensors)
      if (t.name == name) return t;
    throw TdmError("parameters: no tensor named " + name);
  }
  std::size_t count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += static_cast<std::size_t>(t.value.size());
    return n;
  }
  std::uint64_t content_hash() const {
    Hasher h;
    for (const auto& t : tensors) {
      h.update(t.name);
      h.update(t.value.data(), sizeof(S) * static_cast<std::size_t>(t.value.size()));
    }
    return h.digest();
  }
  void check_finite() const {
    for (const auto& t : tensors)
      require(t.value.allFinite(), "parameters: non-finite values in " + t.name);
  }
};

namespace detail {

template <typename S>
void push_tensor(ModelParameters<S>& p, const std::string& name, int rows, int cols) {
  NamedTensor<S> t;
  t.name = name;
  t.value = MatX<S>::Zero(rows, cols);
  t.moment1 = MatX<S>::Zero(rows, cols);
  t.moment2 = MatX<S>::Zero(rows, cols);
  p.tensors.push_back(std::move(t));
}

}  // namespace detail

template <typename S>
ModelParameters<S> make_transformer_parameters(const TransformerConfig& cfg) {
  cfg.validate();
  ModelParameters<S> p;
  const int w = cfg.model_width;
  detail::push_tensor(p, "tok_embedding", cfg.vocab_size, w);
  for (int l = 0; l < cfg.num_layers; ++l) {
    const std::string pre = "layer" + std::to_string(l) + ".";
    detail::push_tensor(p, pre + "ln1.gain", 1, w);
    detail::push_tensor(p, pre + "ln1.bias", 1, w);
    detail::push_tensor(p, pre + "attn.wq", w, w);
    detail::push_tensor(p, pre + "attn.wk", w, w);
    detail::push_tensor(p, pre + "attn.wv", w, w);
    detail::push_tensor(p, pre + "attn.wo", w, w);
    detail::push_tensor(p, pre + "attn.bq", 1, w);
    detail::push_tensor(p, pre + "attn.bk", 1, w);
    detail::push_tensor(p, pre + "attn.bv", 1, w);
    detail::push_tensor(p, pre + "attn.bo", 1, w);
    detail::push_tensor(p, pre + "ln2.gain", 1, w);
    detail::push_tensor(p, pre + "ln2.bias", 1, w);
    detail::push_tensor(p, pre + "ff.w1", w, cfg.feedforward_width);
    detail::push_tensor(p, pre + "ff.b1", 1, cfg.feedforward_width);
    detail::push_tensor(p, pre + "ff.w2", cfg.feedforward_width, w);
    detail::push_tensor(p, pre + "ff.b2", 1, w);
  }
  detail::push_tensor(p, "ln_f.gain", 1, w);
  detail::push_tensor(p, "ln_f.bias", 1, w);
  detail::push_tensor(p, "lm_head.w", w, cfg.vocab_size);
  detail::push_tensor(p, "lm_head.b", 1, cfg.vocab_size);
  return p;
}

template <typename S>
void init_transformer_parameters(ModelParameters<S>& p, std::uint64_t seed,
                                 double stddev = 0.02) {
  Rng rng(seed);
  for (auto& t : p.tensors) {
    const auto dot = t.name.rfind('.');
    const std::string leaf = dot == std::string::npos ? t.name : t.name.substr(dot + 1);
    if (leaf == "gain") {
      t.value.setOnes();
    } else if (!leaf.empty() && leaf[0] == 'b') {
      t.value.setZero();
    } else {
      for (int i = 0; i < t.value.rows(); ++i)
        for (int j = 0; j < t.value.cols(); ++j)
          t.value(i, j) = static_cast<S>(rng.normal(0.0, stddev));
    }
    t.moment1.setZero();
    t.moment2.setZero();
  }
  p.step = 0;
}

template <typename S>
MatX<S> sinusoidal_positions(int max_len, int width) {
  MatX<S> pos(max_len, width);
  for (int t = 0; t < max_len; ++t) {
    for (int i = 0; i < width / 2; ++i) {
      const double rate = std::pow(10000.0, -2.0 * i / width);
      pos(t, 2 * i) = static_cast<S>(std::sin(t * rate));
      pos(t, 2 * i + 1) = static_cast<S>(std::cos(t * rate));
    }
  }
  return pos;
}

constexpr double kLayerNormEps = 1e-5;

// Builds the full forward pass on a tape. param_ids line up with
// params.tensors so gradients can be read back after backward().
template <typename S>
struct TapeGraph {
  Tape<S> tape;
  std::vector<typename Tape<S>::Id> param_ids;
  typename Tape<S>::Id logits = -1;
};

template <typename S>
void build_forward(TapeGraph<S>& g, const ModelParameters<S>& params,
                   const TransformerConfig& cfg, std::span<const int> tokens,
                   const MatX<S>& positional) {
  using Id = typename Tape<S>::Id;
  const int q = static_cast<int>(tokens.size());
  require(q >= 1, "forward: empty token sequence");
  require(q <= cfg.context_window, "forward: sequence of " + std::to_string(q) +
                                       " tokens exceeds context window of " +
                                       std::to_string(cfg.context_window));
  for (int t : tokens)
    require(t >= 0 && t < cfg.vocab_size, "forward: token outside vocabulary");

  g.param_ids.clear();
  g.param_ids.reserve(params.tensors.size());
  for (const auto& t : params.tensors) g.param_ids.push_back(g.tape.input(t.value));

  auto pid = [&](std::size_t i) { return g.param_ids[i]; };
  std::size_t k = 0;
  const Id tok_emb = pid(k++);

  std::vector<int> ids(tokens.begin(), tokens.end());
  Id x = g.tape.embed(tok_emb, ids, positional.topRows(q));

  const int dh = cfg.head_dim();
  const S inv_sqrt_dh = S(1) / std::sqrt(static_cast<S>(dh));
  for (int l = 0; l < cfg.num_layers; ++l) {
    const Id ln1_g = pid(k++), ln1_b = pid(k++);
    const Id wq = pid(k++), wk = pid(k++), wv = pid(k++), wo = pid(k++);
    const Id bq = pid(k++), bk = pid(k++), bv = pid(k++), bo = pid(k++);
    const Id ln2_g = pid(k++), ln2_b = pid(k++);
    const Id fw1 = pid(k++), fb1 = pid(k++), fw2 = pid(k++), fb2 = pid(k++);

    const Id xn = g.tape.layer_norm(x, ln1_g, ln1_b, S(kLayerNormEps));
    const Id qp = g.tape.add_row(g.tape.matmul(xn, wq), bq);
    const Id kp = g.tape.add_row(g.tape.matmul(xn, wk), bk);
    const Id vp = g.tape.add_row(g.tape.matmul(xn, wv), bv);
    std::vector<Id> heads;
    heads.reserve(cfg.num_heads);
    for (int h = 0; h < cfg.num_heads; ++h) {
      const Id qh = g.tape.slice_cols(qp, h * dh, dh);
      const Id kh = g.tape.slice_cols(kp, h * dh, dh);
      const Id vh = g.tape.slice_cols(vp, h * dh, dh);
      const Id scores = g.tape.scale(g.tape.matmul_nt(qh, kh), inv_sqrt_dh);
      const Id probs = g.tape.causal_softmax(scores);
      heads.push_back(g.tape.matmul(probs, vh));
    }
    const Id attn = g.tape.add_row(g.tape.matmul(g.tape.concat_cols(heads), wo), bo);
    x = g.tape.add(x, attn);

    const Id x2 = g.tape.layer_norm(x, ln2_g, ln2_b, S(kLayerNormEps));
    const Id hidden = g.tape.gelu(g.tape.add_row(g.tape.matmul(x2, fw1), fb1));
    const Id ff = g.tape.add_row(g.tape.matmul(hidden, fw2), fb2);
    x = g.tape.add(x, ff);
  }
  const Id lnf_g = pid(k++), lnf_b = pid(k++);
  const Id head_w = pid(k++), head_b = pid(k++);
  const Id xf = g.tape.layer_norm(x, lnf_g, lnf_b, S(kLayerNormEps));
  g.logits = g.tape.add_row(g.tape.matmul(xf, head_w), head_b);
}

// Per-position logits; row i conditions only on tokens 0..i.
template <typename S>
MatX<S> forward_logits(const ModelParameters<S>& params, const TransformerConfig& cfg,
                       std::span<const int> tokens) {
  TapeGraph<S> g;
  const MatX<S> pos = sinusoidal_positions<S>(cfg.context_window, cfg.model_width);
  build_forward(g, params, cfg, tokens, pos);
  return g.tape.value(g.logits);
}

// Negative log-likelihood, summed over the q-1 predicted positions.
template <typename S>
S nll_loss(const ModelParameters<S>& params, const TransformerConfig& cfg,
           std::span<const int> tokens) {
  require(tokens.size() >= 2, "nll_loss: need at least two tokens");
  TapeGraph<S> g;
  const MatX<S> pos = sinusoidal_positions<S>(cfg.context_window, cfg.model_width);
  build_forward(g, params, cfg, tokens, pos);
  std::vector<int> targets(tokens.begin() + 1, tokens.end());
  const auto loss = g.tape.cross_entropy_sum(g.logits, targets);
  return g.tape.value(loss)(0, 0);
}

// Loss plus parameter gradients (aligned with params.tensors).
template <typename S>
S nll_loss_and_grad(const ModelParameters<S>& params, const TransformerConfig& cfg,
                    std::span<const int> tokens, const MatX<S>& positional,
                    std::vector<MatX<S>>& grads_out) {
  require(tokens.size() >= 2, "nll_loss: need at least two tokens");
  TapeGraph<S> g;
  build_forward(g, params, cfg, tokens, positional);
  std::vector<int> targets(tokens.begin() + 1, tokens.end());
  const auto loss = g.tape.cross_entropy_sum(g.logits, targets);
  g.tape.backward(loss);
  grads_out.resize(params.tensors.size());
  for (std::size_t i = 0; i < params.tensors.size(); ++i)
    grads_out[i] = g.tape.grad(g.param_ids[i]);
  return g.tape.value(loss)(0, 0);
}

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double clip_norm = 1.0;  // global gradient-norm clip
};

template <typename S>
void adam_step(ModelParameters<S>& params, std::vector<MatX<S>>& grads,
               const AdamConfig& opt) {
  require(grads.size() == params.tensors.size(), "adam: gradient count mismatch");
  double sq = 0.0;
  for (const auto& gm : grads) sq += static_cast<double>(gm.template cast<double>().squaredNorm());
  const double norm = std::sqrt(sq);
  const S rescale =
      static_cast<S>(norm > opt.clip_norm && norm > 0.0 ? opt.clip_norm / norm : 1.0);

  params.step += 1;
  const double t = static_cast<double>(params.step);
  const S bias1 = static_cast<S>(1.0 / (1.0 - std::pow(opt.beta1, t)));
  const S bias2 = static_cast<S>(1.0 / (1.0 - std::pow(opt.beta2, t)));
  const S b1 = static_cast<S>(opt.beta1), b2 = static_cast<S>(opt.beta2);
  const S lr = static_cast<S>(opt.learning_rate), eps = static_cast<S>(opt.eps);
  for (std::size_t i = 0; i < grads.size(); ++i) {
    auto& tn = params.tensors[i];
    MatX<S>& gm = grads[i];
    gm *= rescale;
    tn.moment1 = b1 * tn.moment1 + (S(1) - b1) * gm;
    tn.moment2 = (b2 * tn.moment2.array() + (S(1) - b2) * gm.array().square()).matrix();
    tn.value.array() -=
        lr * (tn.moment1.array() * bias1) /
        ((tn.moment2.array() * bias2).sqrt() + eps);
  }
}

}  // namespace tdm
