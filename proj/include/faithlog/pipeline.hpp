#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "faithlog/types.hpp"

namespace faithlog {

// Fixed-depth similarity-tree template parser. Levels: token count, then
// leading tokens (depth - 2 of them), then a leaf group of candidate
// templates compared by token similarity. Not safe for concurrent use;
// one parser per stream.
struct DrainConfig {
    int depth = 4;
    double similarity_threshold = 0.4;
    int max_children = 100;
};

class DrainParser {
public:
    explicit DrainParser(DrainConfig cfg = {});

    struct ParseOutcome {
        int template_id = -1;
        std::vector<std::string> parameters;  // line tokens at wildcard positions
    };
    ParseOutcome parse_line(const std::string& content);

    const std::vector<EventTemplate>& templates() const { return templates_; }
    const DrainConfig& config() const { return cfg_; }

    static std::vector<std::string> tokenize(const std::string& content);
    static bool is_numeric_token(const std::string& tok);

private:
    struct TreeNode {
        std::map<std::string, std::unique_ptr<TreeNode>> children;
        std::vector<int> leaf;  // template indices
    };
    TreeNode* descend(const std::vector<std::string>& tokens);

    DrainConfig cfg_;
    std::map<int, std::unique_ptr<TreeNode>> by_count_;
    std::vector<EventTemplate> templates_;
};

struct ParsedRecord {
    int template_id = -1;
    bool anomalous = false;
    std::optional<std::int64_t> timestamp_ms;
};

struct WindowConfig {
    enum class Kind { Count, Time };
    Kind kind = Kind::Count;
    int size = 20;
    int stride = 20;
    std::int64_t duration_ms = 60000;  // Time kind: tumbling window length
};

// Count windows start at 0, stride, 2*stride, ...; a shorter tail window is
// kept. Sequence label is anomalous iff any member record is; anomalous
// member indices become root-cause positions.
std::vector<EventSequence> sessionize(const std::vector<ParsedRecord>& records,
                                      const WindowConfig& window);

}  // namespace faithlog
