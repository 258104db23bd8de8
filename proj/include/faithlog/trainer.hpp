#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <utility>
#include <vector>

#include "faithlog/embedding.hpp"
#include "faithlog/losses.hpp"
#include "faithlog/model.hpp"
#include "faithlog/types.hpp"

namespace faithlog {

struct TrainConfig {
    int epochs = 20;
    int batch_size = 32;
    double learning_rate = 1e-3;
    LossWeights weights;
    std::uint64_t seed = 0;

    void validate() const {
        if (epochs < 1) throw ConfigError("train config: epochs must be >= 1");
        if (batch_size < 1) throw ConfigError("train config: batch_size must be >= 1");
        if (learning_rate <= 0.0) throw ConfigError("train config: learning_rate must be > 0");
        if (weights.lambda2 > 0.0 && batch_size < 2)
            throw ConfigError("train config: batch_size must be >= 2 when lambda2 > 0");
        weights.validate();
    }
};

struct EpochLog {
    int epoch = 0;
    double total = 0.0, ce = 0.0, rank = 0.0, kl = 0.0, consistency = 0.0;
    double heldout_f1 = 0.0;
};

struct FitResult {
    std::vector<EpochLog> log;
};

// Label-stratified, disjoint, seed-reproducible split.
std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction,
                                             std::uint64_t seed);

// Builds the embedding node for one sequence on the given tape.
using EmbedFn = std::function<ad::Var(ad::Tape&, const EventSequence&)>;

// Combined objective on one mini-batch. `rank_pairs[i]` is the batch index
// of the normal partner for anomalous sequence i (-1 skips the pair). The
// consistency term re-runs the forward pass with e_max masked out.
struct BatchLossResult {
    ad::Var total;
    LossBreakdown terms;
};
BatchLossResult batch_loss(ad::Tape& t, const FaithLogModel& model,
                           const std::vector<const EventSequence*>& seqs,
                           const EmbedFn& embed_fn, const LossWeights& weights,
                           const std::vector<int>& rank_pairs);

// Stratified mini-batch index assignment: anomalous sequences are spread
// round-robin over the batches so every batch carries both classes whenever
// the anomaly count allows it.
std::vector<std::vector<int>> make_batches(const Dataset& data, int batch_size,
                                           std::mt19937_64& rng);

double f1_score(const FaithLogModel& model, const EmbeddingProvider& emb,
                const Dataset& data);

// End-to-end training with the combined objective. When `heldout` is null a
// stratified 10% carve-out of `train` supplies the per-epoch F1 column and
// the model trains on the remaining 90%.
FitResult fit(FaithLogModel& model, EmbeddingProvider& emb, const Dataset& train,
              const Dataset* heldout, const TrainConfig& cfg);

}  // namespace faithlog
