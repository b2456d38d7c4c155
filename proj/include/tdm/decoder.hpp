#pragma once

#include <span>
#include <vector>

#include "tdm/transformer.hpp"

namespace tdm {

// Incremental decoding with per-lane key/value caches. Lanes evolve
// independently (one per planner candidate); weights are shared read-only.
// The math matches the tape forward exactly; the test suite asserts logit
// agreement between the two paths.
template <typename S>
class BatchDecoder {
 public:
  BatchDecoder(const ModelParameters<S>& params, const TransformerConfig& cfg, int lanes)
      : params_(&params),
        cfg_(cfg),
        lanes_(lanes),
        positional_(sinusoidal_positions<S>(cfg.context_window, cfg.model_width)) {
    cfg.validate();
    require(lanes >= 1, "decoder: need at least one lane");
    const int w = cfg.model_width;
    k_cache_.resize(cfg.num_layers);
    v_cache_.resize(cfg.num_layers);
    for (int l = 0; l < cfg.num_layers; ++l) {
      k_cache_[l].assign(lanes, MatX<S>(cfg.context_window, w));
      v_cache_[l].assign(lanes, MatX<S>(cfg.context_window, w));
    }
    x_.resize(lanes, w);
    xn_.resize(lanes, w);
    q_.resize(lanes, w);
    k_.resize(lanes, w);
    v_.resize(lanes, w);
    ctx_.resize(lanes, w);
    hidden_.resize(lanes, cfg.feedforward_width);
    logits_.resize(lanes, cfg.vocab_size);
    scores_.resize(cfg.context_window);
    cache_tensor_ids();
  }

  int lanes() const { return lanes_; }
  int length() const { return length_; }
  int capacity() const { return cfg_.context_window; }
  bool has_logits() const { return has_logits_; }
  const MatX<S>& last_logits() const {
    require(has_logits_, "decoder: no logits available (rewound or empty)");
    return logits_;
  }

  void reset() {
    length_ = 0;
    has_logits_ = false;
  }

  // Drops the most recent `positions` tokens. Logits become stale until the
  // next advance/prime.
  void rewind(int positions) {
    require(positions >= 0 && positions <= length_, "decoder: bad rewind");
    length_ -= positions;
    has_logits_ = false;
  }

  // Processes a shared prefix with one sequence-parallel pass, then replicates
  // the cached keys/values to every lane. Far cheaper than per-token feeding.
  void prime(std::span<const int> prefix) {
    reset();
    if (prefix.empty()) return;
    const MatX<S> lrow = sequence_pass(prefix, 0);
    for (int l = 0; l < cfg_.num_layers; ++l)
      for (int b = 1; b < lanes_; ++b) {
        k_cache_[l][b].topRows(prefix.size()) = k_cache_[l][0].topRows(prefix.size());
        v_cache_[l][b].topRows(prefix.size()) = v_cache_[l][0].topRows(prefix.size());
      }
    length_ = static_cast<int>(prefix.size());
    logits_ = lrow.replicate(lanes_, 1);
    has_logits_ = true;
  }

  // Rebuilds every lane's cache from its own token stream (all streams must
  // share one length). Used after the context window overflows mid-rollout:
  // the front of each stream is dropped and positions restart at zero.
  void reprime_per_lane(const std::vector<std::vector<int>>& lane_tokens) {
    require(static_cast<int>(lane_tokens.size()) == lanes_, "decoder: lane count mismatch");
    const std::size_t len = lane_tokens[0].size();
    require(len >= 1, "decoder: cannot reprime from empty streams");
    for (const auto& t : lane_tokens)
      require(t.size() == len, "decoder: lane streams must share one length");
    reset();
    for (int b = 0; b < lanes_; ++b) {
      const MatX<S> lrow = sequence_pass(std::span<const int>(lane_tokens[b]), b);
      logits_.row(b) = lrow.row(0);
    }
    length_ = static_cast<int>(len);
    has_logits_ = true;
  }

  // Feeds one token per lane and computes logits for the following position.
  void advance(const std::vector<int>& tokens) {
    require(static_cast<int>(tokens.size()) == lanes_, "decoder: lane count mismatch");
    require(length_ < cfg_.context_window, "decoder: context window full");
    const int t = length_;
    const int w = cfg_.model_width;
    const int dh = cfg_.head_dim();
    const S inv_sqrt_dh = S(1) / std::sqrt(static_cast<S>(dh));

    for (int b = 0; b < lanes_; ++b) {
      require(tokens[b] >= 0 && tokens[b] < cfg_.vocab_size, "decoder: token out of vocab");
      x_.row(b) = tv(tok_emb_id_).row(tokens[b]) + positional_.row(t);
    }
    for (int l = 0; l < cfg_.num_layers; ++l) {
      const auto& ids = layer_ids_[l];
      layer_norm_rows(x_, tv(ids.ln1_gain), tv(ids.ln1_bias), xn_);
      q_.noalias() = xn_ * tv(ids.wq);
      q_.rowwise() += tv(ids.bq).row(0);
      k_.noalias() = xn_ * tv(ids.wk);
      k_.rowwise() += tv(ids.bk).row(0);
      v_.noalias() = xn_ * tv(ids.wv);
      v_.rowwise() += tv(ids.bv).row(0);
      for (int b = 0; b < lanes_; ++b) {
        k_cache_[l][b].row(t) = k_.row(b);
        v_cache_[l][b].row(t) = v_.row(b);
        for (int h = 0; h < cfg_.num_heads; ++h) {
          auto s = scores_.head(t + 1);
          s.noalias() = k_cache_[l][b].topRows(t + 1).middleCols(h * dh, dh) *
                        q_.row(b).segment(h * dh, dh).transpose();
          s *= inv_sqrt_dh;
          softmax_inplace(s);
          ctx_.row(b).segment(h * dh, dh).noalias() =
              (v_cache_[l][b].topRows(t + 1).middleCols(h * dh, dh).transpose() * s)
                  .transpose();
        }
      }
      x_.noalias() += ctx_ * tv(ids.wo);
      x_.rowwise() += tv(ids.bo).row(0);
      layer_norm_rows(x_, tv(ids.ln2_gain), tv(ids.ln2_bias), xn_);
      hidden_.noalias() = xn_ * tv(ids.fw1);
      hidden_.rowwise() += tv(ids.fb1).row(0);
      gelu_inplace(hidden_);
      x_.noalias() += hidden_ * tv(ids.fw2);
      x_.rowwise() += tv(ids.fb2).row(0);
    }
    layer_norm_rows(x_, tv(lnf_gain_id_), tv(lnf_bias_id_), xn_);
    logits_.noalias() = xn_ * tv(head_w_id_);
    logits_.rowwise() += tv(head_b_id_).row(0);
    length_ = t + 1;
    has_logits_ = true;
  }

  void advance_shared(int token) { advance(std::vector<int>(lanes_, token)); }

 private:
  struct LayerIds {
    int ln1_gain, ln1_bias, wq, wk, wv, wo, bq, bk, bv, bo;
    int ln2_gain, ln2_bias, fw1, fb1, fw2, fb2;
  };

  // Causal sequence-parallel forward over one lane's cache; returns the final
  // position's logits (1 x vocab).
  MatX<S> sequence_pass(std::span<const int> tokens, int lane) {
    const int q = static_cast<int>(tokens.size());
    require(q <= cfg_.context_window, "decoder: prefix exceeds context window");
    const int w = cfg_.model_width;
    MatX<S> x(q, w);
    for (int t = 0; t < q; ++t) {
      require(tokens[t] >= 0 && tokens[t] < cfg_.vocab_size, "decoder: token out of vocab");
      x.row(t) = tv(tok_emb_id_).row(tokens[t]) + positional_.row(t);
    }
    const int dh = cfg_.head_dim();
    const S inv_sqrt_dh = S(1) / std::sqrt(static_cast<S>(dh));
    MatX<S> xn(q, w), qp(q, w), kp(q, w), vp(q, w), ctx(q, w);
    for (int l = 0; l < cfg_.num_layers; ++l) {
      const auto& ids = layer_ids_[l];
      layer_norm_rows(x, tv(ids.ln1_gain), tv(ids.ln1_bias), xn);
      qp.noalias() = xn * tv(ids.wq);
      qp.rowwise() += tv(ids.bq).row(0);
      kp.noalias() = xn * tv(ids.wk);
      kp.rowwise() += tv(ids.bk).row(0);
      vp.noalias() = xn * tv(ids.wv);
      vp.rowwise() += tv(ids.bv).row(0);
      k_cache_[l][lane].topRows(q) = kp;
      v_cache_[l][lane].topRows(q) = vp;
      for (int h = 0; h < cfg_.num_heads; ++h) {
        const auto qh = qp.middleCols(h * dh, dh);
        const auto kh = kp.middleCols(h * dh, dh);
        const auto vh = vp.middleCols(h * dh, dh);
        for (int i = 0; i < q; ++i) {
          auto s = scores_.head(i + 1);
          s.noalias() = kh.topRows(i + 1) * qh.row(i).transpose();
          s *= inv_sqrt_dh;
          softmax_inplace(s);
          ctx.row(i).segment(h * dh, dh).noalias() =
              (vh.topRows(i + 1).transpose() * s).transpose();
        }
      }
      x.noalias() += ctx * tv(ids.wo);
      x.rowwise() += tv(ids.bo).row(0);
      layer_norm_rows(x, tv(ids.ln2_gain), tv(ids.ln2_bias), xn);
      MatX<S> hidden = xn * tv(ids.fw1);
      hidden.rowwise() += tv(ids.fb1).row(0);
      gelu_inplace(hidden);
      x.noalias() += hidden * tv(ids.fw2);
      x.rowwise() += tv(ids.fb2).row(0);
    }
    MatX<S> xf(1, w);
    const MatX<S> last = x.row(q - 1);
    layer_norm_rows(last, tv(lnf_gain_id_), tv(lnf_bias_id_), xf);
    MatX<S> lrow = xf * tv(head_w_id_);
    lrow.rowwise() += tv(head_b_id_).row(0);
    return lrow;
  }

  const MatX<S>& tv(int idx) const { return params_->tensors[idx].value; }

  void cache_tensor_ids() {
    auto index_of = [&](const std::string& name) {
      for (std::size_t i = 0; i < params_->tensors.size(); ++i)
        if (params_->tensors[i].name == name) return static_cast<int>(i);
      throw TdmError("decoder: no tensor named " + name);
    };
    tok_emb_id_ = index_of("tok_embedding");
    lnf_gain_id_ = index_of("ln_f.gain");
    lnf_bias_id_ = index_of("ln_f.bias");
    head_w_id_ = index_of("lm_head.w");
    head_b_id_ = index_of("lm_head.b");
    layer_ids_.resize(cfg_.num_layers);
    for (int l = 0; l < cfg_.num_layers; ++l) {
      const std::string pre = "layer" + std::to_string(l) + ".";
      auto& ids = layer_ids_[l];
      ids.ln1_gain = index_of(pre + "ln1.gain");
      ids.ln1_bias = index_of(pre + "ln1.bias");
      ids.wq = index_of(pre + "attn.wq");
      ids.wk = index_of(pre + "attn.wk");
      ids.wv = index_of(pre + "attn.wv");
      ids.wo = index_of(pre + "attn.wo");
      ids.bq = index_of(pre + "attn.bq");
      ids.bk = index_of(pre + "attn.bk");
      ids.bv = index_of(pre + "attn.bv");
      ids.bo = index_of(pre + "attn.bo");
      ids.ln2_gain = index_of(pre + "ln2.gain");
      ids.ln2_bias = index_of(pre + "ln2.bias");
      ids.fw1 = index_of(pre + "ff.w1");
      ids.fb1 = index_of(pre + "ff.b1");
      ids.fw2 = index_of(pre + "ff.w2");
      ids.fb2 = index_of(pre + "ff.b2");
    }
  }

  static void layer_norm_rows(const MatX<S>& x, const MatX<S>& gain, const MatX<S>& bias,
                              MatX<S>& out) {
    out.resize(x.rows(), x.cols());
    const int cols = static_cast<int>(x.cols());
    for (int r = 0; r < x.rows(); ++r) {
      const S mean = x.row(r).mean();
      const S var = (x.row(r).array() - mean).square().sum() / S(cols);
      const S inv = S(1) / std::sqrt(var + S(kLayerNormEps));
      out.row(r).array() =
          (x.row(r).array() - mean) * inv * gain.row(0).array() + bias.row(0).array();
    }
  }

  static void gelu_inplace(MatX<S>& x) {
    constexpr S k = S(0.7978845608028654);
    constexpr S c3 = S(0.044715);
    x = (S(0.5) * x.array() * (S(1) + (k * (x.array() + c3 * x.array().cube())).tanh()))
            .matrix();
  }

  template <typename V>
  static void softmax_inplace(V&& v) {
    const S mx = v.maxCoeff();
    v = (v.array() - mx).exp();
    v /= v.sum();
  }

  const ModelParameters<S>* params_;
  TransformerConfig cfg_;
  int lanes_;
  int length_ = 0;
  bool has_logits_ = false;
  MatX<S> positional_;
  std::vector<std::vector<MatX<S>>> k_cache_, v_cache_;
  std::vector<LayerIds> layer_ids_;
  int tok_emb_id_ = -1, lnf_gain_id_ = -1, lnf_bias_id_ = -1, head_w_id_ = -1,
      head_b_id_ = -1;
  MatX<S> x_, xn_, q_, k_, v_, ctx_, hidden_, logits_;
  VecX<S> scores_;
};

}  // namespace tdm
