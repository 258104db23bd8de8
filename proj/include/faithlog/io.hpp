#pragma once

#include <string>
#include <vector>

#include "faithlog/trainer.hpp"
#include "faithlog/types.hpp"

namespace faithlog {

// Raw log input: one message per line, UTF-8; optional sidecar label file
// with one {0,1} per line, aligned by line number.
std::vector<LogRecord> read_raw_log(const std::string& path);
std::vector<int> read_labels(const std::string& path);

// Sequence dataset, one record per line:
//   sequence_id,label,id1,id2,...;rc1,rc2      (root-cause part may be empty)
inline constexpr const char* kDatasetFormatId = "seq-v1";
void write_dataset(const std::string& path, const Dataset& data,
                   const std::string& run_id = "");
Dataset load_dataset(const std::string& path,
                     const std::string& format = kDatasetFormatId);

// Template store: template_id <TAB> space-joined tokens, "<*>" wildcard.
void write_templates(const std::string& path, const std::vector<EventTemplate>& templates);
std::vector<EventTemplate> read_templates(const std::string& path);

// Flat key-value experiment config. Unknown keys are an error.
struct ExperimentConfig {
    TrainConfig train;
    int d_model = 64;
    int n_heads = 4;
    int n_layers = 2;
    bool negative_pathway = true;
};
ExperimentConfig parse_config_text(const std::string& text);
ExperimentConfig load_config(const std::string& path);

// Run id: pure function of config content and seed.
std::string run_id_of(const std::string& config_text, std::uint64_t seed);

void write_training_log(const std::string& path, const std::vector<EpochLog>& log,
                        const std::string& run_id);

}  // namespace faithlog
