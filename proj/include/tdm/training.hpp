#pragma once

#include <algorithm>
#include <optional>
#include <vector>

#include "tdm/tokenizer.hpp"
#include "tdm/transformer.hpp"

namespace tdm {

struct TrainOptions {
  int steps = 1000;
  int batch_sequences = 8;
  std::uint64_t seed = 0;
  AdamConfig adam;
  int log_every = 25;
  // When several corpora are given, batch items draw the corpus uniformly
  // first, then an episode inside it, so small corpora are not drowned out.
  bool uniform_per_corpus = true;
};

struct LossPoint {
  std::int64_t step;
  double loss;  // mean per-token nll over the batch
};

struct TrainResult {
  std::vector<LossPoint> curve;
  std::optional<double> final_loss;  // empty when no batch was seen
};

// One training corpus: tokenized episodes from a single environment.
struct TokenCorpus {
  std::vector<std::vector<int>> episodes;

  std::size_t total_tokens() const {
    std::size_t n = 0;
    for (const auto& e : episodes) n += e.size();
    return n;
  }
};

namespace detail {

// Random contiguous crop, deliberately not aligned to step boundaries: the
// generation-time history window truncates at token granularity, so training
// must cover every alignment.
inline std::span<const int> sample_crop(const std::vector<int>& episode, int window,
                                        Rng& rng) {
  if (static_cast<int>(episode.size()) <= window)
    return std::span<const int>(episode.data(), episode.size());
  const int start =
      static_cast<int>(rng.below(static_cast<std::uint64_t>(episode.size() - window + 1)));
  return std::span<const int>(episode.data() + start, window);
}

// Runs the given batches in order. Per-sequence gradients are computed in
// parallel but reduced in batch order, so the result is identical for any
// worker count.
template <typename S>
TrainResult train_on_batches(ModelParameters<S>& params, const TransformerConfig& cfg,
                             const std::vector<std::vector<std::span<const int>>>& batches,
                             const TrainOptions& opts) {
  TrainResult result;
  if (batches.empty()) return result;
  const MatX<S> positional = sinusoidal_positions<S>(cfg.context_window, cfg.model_width);

  for (std::size_t step = 0; step < batches.size(); ++step) {
    const auto& batch = batches[step];
    std::vector<std::vector<MatX<S>>> grads(batch.size());
    std::vector<double> losses(batch.size());
    std::vector<std::size_t> tokens(batch.size());
    parallel_for(static_cast<int>(batch.size()), [&](int b) {
      losses[b] =
          static_cast<double>(nll_loss_and_grad(params, cfg, batch[b], positional, grads[b]));
      tokens[b] = batch[b].size() - 1;
    });

    std::vector<MatX<S>> total = std::move(grads[0]);
    double loss_sum = losses[0];
    std::size_t token_sum = tokens[0];
    for (std::size_t b = 1; b < batch.size(); ++b) {
      for (std::size_t i = 0; i < total.size(); ++i) total[i] += grads[b][i];
      loss_sum += losses[b];
      token_sum += tokens[b];
    }
    const double mean_loss = loss_sum / static_cast<double>(token_sum);
    if (!std::isfinite(mean_loss))
      throw TdmError("training: non-finite loss at batch " + std::to_string(step));
    const S inv = static_cast<S>(1.0 / static_cast<double>(token_sum));
    for (auto& gm : total) gm *= inv;
    adam_step(params, total, opts.adam);

    if (step % static_cast<std::size_t>(opts.log_every) == 0 || step + 1 == batches.size())
      result.curve.push_back({params.step, mean_loss});
    result.final_loss = mean_loss;
  }
  params.check_finite();
  return result;
}

}  // namespace detail

// Seeded stochastic training: opts.steps batches sampled with replacement.
template <typename S>
TrainResult train_steps(ModelParameters<S>& params, const TransformerConfig& cfg,
                        const std::vector<const TokenCorpus*>& corpora,
                        const TrainOptions& opts) {
  std::vector<const std::vector<int>*> flat;
  std::vector<std::vector<const std::vector<int>*>> per_corpus(corpora.size());
  for (std::size_t c = 0; c < corpora.size(); ++c) {
    for (const auto& e : corpora[c]->episodes)
      if (e.size() >= 2) {
        per_corpus[c].push_back(&e);
        flat.push_back(&e);
      }
  }
  if (flat.empty()) return {};  // params untouched, loss undefined

  Rng sampler(derive_seed(opts.seed, "train.sampler"));
  std::vector<std::vector<std::span<const int>>> batches(
      opts.steps, std::vector<std::span<const int>>(opts.batch_sequences));
  for (auto& batch : batches) {
    for (auto& slot : batch) {
      const std::vector<int>* episode = nullptr;
      if (opts.uniform_per_corpus && corpora.size() > 1) {
        std::size_t c = sampler.below(per_corpus.size());
        while (per_corpus[c].empty()) c = sampler.below(per_corpus.size());
        episode = per_corpus[c][sampler.below(per_corpus[c].size())];
      } else {
        episode = flat[sampler.below(flat.size())];
      }
      slot = detail::sample_crop(*episode, cfg.context_window, sampler);
    }
  }
  return detail::train_on_batches(params, cfg, batches, opts);
}

// One shuffled pass over every usable episode, one crop each.
template <typename S>
TrainResult train_epoch(ModelParameters<S>& params, const TransformerConfig& cfg,
                        const TokenCorpus& corpus, const TrainOptions& opts) {
  std::vector<const std::vector<int>*> usable;
  for (const auto& e : corpus.episodes)
    if (e.size() >= 2) usable.push_back(&e);
  if (usable.empty()) return {};

  Rng sampler(derive_seed(opts.seed, "train.epoch"));
  for (std::size_t i = usable.size(); i > 1; --i)
    std::swap(usable[i - 1], usable[sampler.below(i)]);

  std::vector<std::vector<std::span<const int>>> batches;
  for (std::size_t at = 0; at < usable.size(); at += opts.batch_sequences) {
    std::vector<std::span<const int>> batch;
    for (std::size_t b = at; b < std::min(at + opts.batch_sequences, usable.size()); ++b)
      batch.push_back(detail::sample_crop(*usable[b], cfg.context_window, sampler));
    batches.push_back(std::move(batch));
  }
  return detail::train_on_batches(params, cfg, batches, opts);
}

}  // namespace tdm
