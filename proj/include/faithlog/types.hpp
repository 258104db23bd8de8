#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace faithlog {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using RowVector = Eigen::RowVectorXd;

// Error taxonomy mirrored by the CLI exit codes.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct CheckpointError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LogRecord {
    std::int64_t line_no = 0;
    std::optional<std::int64_t> timestamp_ms;
    std::string source;
    std::string content;
    bool anomalous = false;
};

inline constexpr const char* kWildcard = "<*>";

struct EventTemplate {
    int template_id = -1;
    std::vector<std::string> tokens;

    int token_count() const { return static_cast<int>(tokens.size()); }
};

struct EventSequence {
    std::string sequence_id;
    std::vector<int> events;
    bool anomalous = false;
    std::vector<int> root_cause_positions;  // sorted, may be empty

    int length() const { return static_cast<int>(events.size()); }
};

using Dataset = std::vector<EventSequence>;

// Per-event signed attention scores from the final encoder layer.
// signed_scores[i] = positive-pathway mass on event i minus negative-pathway
// mass; distribution = softmax(signed_scores) over active events.
struct AttentionProfile {
    Vector signed_scores;
    Vector distribution;
    int argmax_index = 0;  // lowest-index tie-break
};

struct DetectionResult {
    double confidence = 0.0;  // p in (0,1)
    bool anomalous = false;   // p >= threshold
    AttentionProfile attention;
    Vector locator_scores;  // L(e_i) in [0,1], one per event
};

}  // namespace faithlog
