#include "capse/trainer.hpp"

#include <cmath>
#include <numeric>

#include "capse/error.hpp"

namespace capse {

namespace {

// Forward + backward + Adam over one batch; returns the batch loss.
double train_batch(const std::vector<LabeledTriple>& batch,
                   EmbeddingTable& emb, CapsEParams& params, AdamState& adam,
                   const AdamConfig& adam_cfg, const UpdateMask& mask) {
  std::vector<ForwardTrace> traces;
  traces.reserve(batch.size());
  double loss = 0.0;
  for (const LabeledTriple& lt : batch) {
    traces.push_back(capse_forward(lt.triple, emb, params));
    loss += capse_loss_term(traces.back().score, lt.label);
  }
  loss /= static_cast<double>(batch.size());
  const CapsEGrads grads = capse_backward(batch, emb, params, traces);
  adam_step(params, emb, grads, adam, adam_cfg, mask);
  return loss;
}

CapsETrainResult run_epochs(
    int epochs, int eval_every, const EmbeddingTable& emb,
    const CapsEParams& params, const CheckpointCallback& on_checkpoint,
    const std::function<double(int)>& run_one_epoch,
    const std::function<double()>& probe = {}) {
  CapsETrainResult result;
  for (int epoch = 1; epoch <= epochs; ++epoch) {
    const double loss = run_one_epoch(epoch);
    if (!std::isfinite(loss)) {
      throw NumericError("capse training: non-finite loss at epoch " +
                         std::to_string(epoch));
    }
    result.epoch_loss.push_back(loss);
    if (probe) result.probe_loss.push_back(probe());
    const bool at_cadence = eval_every > 0 && epoch % eval_every == 0;
    if (on_checkpoint && (at_cadence || epoch == epochs)) {
      on_checkpoint(CheckpointInfo{epoch, loss}, emb, params);
    }
  }
  return result;
}

}  // namespace

CapsETrainResult train_capse(const TripleSet& train, EmbeddingTable& emb,
                             CapsEParams& params, const RelationStats& stats,
                             const CapsETrainConfig& cfg,
                             const CheckpointCallback& on_checkpoint) {
  if (cfg.batch_size < 1) throw Error("train: batch_size must be >= 1");
  AdamState adam = AdamState::zeros_like(params, emb);
  const AdamConfig adam_cfg{.lr = cfg.lr};

  std::vector<std::size_t> order(train.size());
  std::iota(order.begin(), order.end(), 0);

  std::vector<LabeledTriple> probe;
  if (cfg.track_probe_loss) {
    Rng probe_rng(Rng::derive(cfg.seed, 0xBEEF));
    for (const Triple& pos : train.triples()) {
      probe.push_back({pos, +1});
      probe.push_back(
          {corrupt(pos, stats, train, emb.num_entities(), probe_rng), -1});
    }
  }

  auto one_epoch = [&](int epoch) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::vector<LabeledTriple> batch;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t idx = start; idx < end; ++idx) {
        const Triple& pos = train.triples()[order[idx]];
        batch.push_back({pos, +1});
        batch.push_back(
            {corrupt(pos, stats, train, emb.num_entities(), rng), -1});
      }
      loss_sum += train_batch(batch, emb, params, adam, adam_cfg,
                              cfg.update_embeddings);
      ++batches;
    }
    return batches == 0 ? 0.0 : loss_sum / static_cast<double>(batches);
  };

  std::function<double()> probe_fn;
  if (cfg.track_probe_loss) {
    probe_fn = [&]() { return capse_loss(probe, emb, params); };
  }
  return run_epochs(cfg.epochs, cfg.eval_every, emb, params, on_checkpoint,
                    one_epoch, probe_fn);
}

CapsETrainResult train_capse_labeled(const std::vector<LabeledTriple>& data,
                                     EmbeddingTable& emb, CapsEParams& params,
                                     const CapsETrainConfig& cfg,
                                     const CheckpointCallback& on_checkpoint) {
  if (cfg.batch_size < 1) throw Error("train: batch_size must be >= 1");
  AdamState adam = AdamState::zeros_like(params, emb);
  const AdamConfig adam_cfg{.lr = cfg.lr};

  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);

  auto one_epoch = [&](int epoch) {
    Rng rng(Rng::derive(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(order);

    double loss_sum = 0.0;
    std::size_t batches = 0;
    std::vector<LabeledTriple> batch;
    for (std::size_t start = 0; start < order.size();
         start += cfg.batch_size) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      batch.clear();
      for (std::size_t idx = start; idx < end; ++idx) {
        batch.push_back(data[order[idx]]);
      }
      loss_sum += train_batch(batch, emb, params, adam, adam_cfg,
                              cfg.update_embeddings);
      ++batches;
    }
    return batches == 0 ? 0.0 : loss_sum / static_cast<double>(batches);
  };

  return run_epochs(cfg.epochs, cfg.eval_every, emb, params, on_checkpoint,
                    one_epoch);
}

}  // namespace capse
