#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "faithlog/types.hpp"

namespace faithlog {

enum class EmbeddingMode { DeterministicHash, TrainableLookup };

// Maps event templates to fixed-dimension vectors. Deterministic-hash mode
// is a pure function of the token list (seeded 64-bit integer hash per
// coordinate, uniform in [-1,1], scaled by 1/sqrt(d_model)); trainable mode
// is a lookup table keyed by template_id whose rows are trainable.
class EmbeddingProvider {
public:
    explicit EmbeddingProvider(int d_model, EmbeddingMode mode = EmbeddingMode::DeterministicHash,
                               std::uint64_t seed = 0, bool allow_growth = true);

    int d_model() const { return d_model_; }
    EmbeddingMode mode() const { return mode_; }
    std::uint64_t seed() const { return seed_; }

    RowVector embed_tokens(const std::vector<std::string>& tokens) const;
    RowVector embed_template(const EventTemplate& t) const;
    RowVector embed_id(int template_id) const;

    // Row i is the embedding of seq.events[i]. Uses the token list from
    // `store` when given, otherwise the canonical id key.
    Matrix embed_sequence(const EventSequence& seq) const;
    Matrix embed_sequence(const EventSequence& seq,
                          const std::vector<EventTemplate>& store) const;

    // Trainable mode only.
    void ensure_vocabulary(const Dataset& data);
    Matrix& table() { return table_; }
    Matrix& table_grad() { return table_grad_; }
    const Matrix& table() const { return table_; }
    int row_of(int template_id) const;
    int vocabulary_size() const { return static_cast<int>(vocab_.size()); }

    void export_table(const std::string& path, const std::vector<int>& template_ids) const;

private:
    int d_model_;
    EmbeddingMode mode_;
    std::uint64_t seed_;
    bool allow_growth_;
    std::unordered_map<int, int> vocab_;  // template_id -> table row
    Matrix table_;
    Matrix table_grad_;
};

}  // namespace faithlog
