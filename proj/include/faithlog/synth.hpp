#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "faithlog/trainer.hpp"
#include "faithlog/types.hpp"

namespace faithlog {

// Reproducible synthetic corpus: normal sequences are Markov-chain walks
// over normal templates; anomalous sequences overwrite 1-2 positions with
// anomaly templates, recording those positions as root-cause truth. Each
// event also renders to a text line so the corpus can exercise the parser
// end to end.
struct SynthConfig {
    int n_templates = 50;
    int n_anomaly_templates = 5;
    int n_sequences = 2000;
    int seq_length = 20;
    double anomaly_rate = 0.3;
    double noise_rate = 0.05;  // chance a walk step is replaced by a random normal event
    std::uint64_t seed = 7;

    void validate() const;
};

struct SynthCorpus {
    Dataset sequences;
    std::vector<std::string> raw_lines;  // one rendered line per event, sequence order
    std::vector<int> line_labels;        // 1 at root-cause lines
    int total_templates = 0;             // n_templates + n_anomaly_templates
};

SynthCorpus generate(const SynthConfig& config);

inline std::pair<Dataset, Dataset> split(const Dataset& data, double train_fraction,
                                         std::uint64_t seed) {
    return stratified_split(data, train_fraction, seed);
}

}  // namespace faithlog
