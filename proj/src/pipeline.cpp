#include "faithlog/pipeline.hpp"

#include <cctype>
#include <sstream>

namespace faithlog {

DrainParser::DrainParser(DrainConfig cfg) : cfg_(cfg) {
    if (cfg_.depth < 3) throw ConfigError("drain: depth must be >= 3");
    if (cfg_.similarity_threshold <= 0.0 || cfg_.similarity_threshold >= 1.0)
        throw ConfigError("drain: similarity_threshold must be in (0,1)");
    if (cfg_.max_children < 1) throw ConfigError("drain: max_children must be >= 1");
}

std::vector<std::string> DrainParser::tokenize(const std::string& content) {
    std::vector<std::string> tokens;
    std::istringstream in(content);
    std::string tok;
    while (in >> tok) tokens.push_back(tok);
    return tokens;
}

bool DrainParser::is_numeric_token(const std::string& tok) {
    if (tok.empty()) return false;
    for (char c : tok)
        if (!std::isdigit(static_cast<unsigned char>(c))) return false;
    return true;
}

DrainParser::TreeNode* DrainParser::descend(const std::vector<std::string>& tokens) {
    const int count = static_cast<int>(tokens.size());
    auto& root = by_count_[count];
    if (!root) root = std::make_unique<TreeNode>();
    TreeNode* node = root.get();
    const int levels = cfg_.depth - 2;
    for (int lvl = 0; lvl < levels && lvl < count; ++lvl) {
        const std::string& key = tokens[lvl] == kWildcard ? std::string(kWildcard) : tokens[lvl];
        auto it = node->children.find(key);
        if (it == node->children.end()) {
            if (static_cast<int>(node->children.size()) >= cfg_.max_children &&
                !node->children.count(kWildcard)) {
                node->children[kWildcard] = std::make_unique<TreeNode>();
            }
            if (static_cast<int>(node->children.size()) >= cfg_.max_children) {
                it = node->children.find(kWildcard);
            } else {
                it = node->children.emplace(key, std::make_unique<TreeNode>()).first;
            }
        }
        node = it->second.get();
    }
    return node;
}

DrainParser::ParseOutcome DrainParser::parse_line(const std::string& content) {
    std::vector<std::string> tokens = tokenize(content);
    if (tokens.empty()) throw InputError("parse_line: empty log message");
    // numeric-only tokens are pre-masked before tree descent
    for (std::string& tok : tokens)
        if (is_numeric_token(tok)) tok = kWildcard;

    TreeNode* leaf_node = descend(tokens);

    // best leaf template by token similarity; wildcards do not count as matches
    int best = -1;
    double best_sim = -1.0;
    for (int idx : leaf_node->leaf) {
        const EventTemplate& t = templates_[idx];
        if (t.token_count() != static_cast<int>(tokens.size())) continue;
        int same = 0;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (t.tokens[i] != kWildcard && t.tokens[i] == tokens[i]) ++same;
        double sim = static_cast<double>(same) / static_cast<double>(tokens.size());
        if (sim > best_sim) {
            best_sim = sim;
            best = idx;
        }
    }

    ParseOutcome out;
    if (best >= 0 && best_sim > cfg_.similarity_threshold) {
        EventTemplate& t = templates_[best];
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (t.tokens[i] != tokens[i]) t.tokens[i] = kWildcard;
        out.template_id = t.template_id;
        for (std::size_t i = 0; i < tokens.size(); ++i)
            if (t.tokens[i] == kWildcard) out.parameters.push_back(tokens[i]);
        return out;
    }

    EventTemplate t;
    t.template_id = static_cast<int>(templates_.size());
    t.tokens = tokens;
    templates_.push_back(t);
    leaf_node->leaf.push_back(t.template_id);
    out.template_id = t.template_id;
    for (std::size_t i = 0; i < tokens.size(); ++i)
        if (tokens[i] == kWildcard) out.parameters.push_back(tokens[i]);
    return out;
}

std::vector<EventSequence> sessionize(const std::vector<ParsedRecord>& records,
                                      const WindowConfig& window) {
    std::vector<EventSequence> out;
    if (records.empty()) return out;

    auto make_sequence = [&](std::size_t begin, std::size_t end, int seq_index) {
        EventSequence s;
        char buf[32];
        std::snprintf(buf, sizeof(buf), "w%05d", seq_index);
        s.sequence_id = buf;
        for (std::size_t i = begin; i < end; ++i) {
            s.events.push_back(records[i].template_id);
            if (records[i].anomalous) {
                s.anomalous = true;
                s.root_cause_positions.push_back(static_cast<int>(i - begin));
            }
        }
        return s;
    };

    if (window.kind == WindowConfig::Kind::Count) {
        if (window.size < 1) throw ConfigError("sessionize: window size must be >= 1");
        if (window.stride < 1) throw ConfigError("sessionize: stride must be >= 1");
        int idx = 0;
        for (std::size_t start = 0; start < records.size();
             start += static_cast<std::size_t>(window.stride)) {
            std::size_t end = std::min(records.size(), start + static_cast<std::size_t>(window.size));
            out.push_back(make_sequence(start, end, idx++));
        }
    } else {
        if (window.duration_ms < 1) throw ConfigError("sessionize: duration must be >= 1 ms");
        for (const ParsedRecord& r : records)
            if (!r.timestamp_ms)
                throw ConfigError("sessionize: time windows require timestamps on every record");
        int idx = 0;
        std::int64_t t0 = *records.front().timestamp_ms;
        std::size_t begin = 0;
        std::int64_t bucket = 0;
        for (std::size_t i = 0; i < records.size(); ++i) {
            std::int64_t b = (*records[i].timestamp_ms - t0) / window.duration_ms;
            if (b != bucket) {
                out.push_back(make_sequence(begin, i, idx++));
                begin = i;
                bucket = b;
            }
        }
        out.push_back(make_sequence(begin, records.size(), idx++));
    }
    return out;
}

}  // namespace faithlog
