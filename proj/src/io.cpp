#include "faithlog/io.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace faithlog {

namespace {

std::string trim(const std::string& s) {
    std::size_t b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    std::size_t e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_on(const std::string& s, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

}  // namespace

std::vector<LogRecord> read_raw_log(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open log file: " + path);
    std::vector<LogRecord> out;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string content = trim(line);
        if (content.empty()) continue;
        LogRecord r;
        r.line_no = line_no;
        r.content = content;
        out.push_back(std::move(r));
    }
    return out;
}

std::vector<int> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open label file: " + path);
    std::vector<int> out;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty()) continue;
        if (t != "0" && t != "1")
            throw InputError("label file " + path + " line " + std::to_string(line_no) +
                             ": expected 0 or 1");
        out.push_back(t == "1" ? 1 : 0);
    }
    return out;
}

void write_dataset(const std::string& path, const Dataset& data, const std::string& run_id) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open dataset for writing: " + path);
    if (!run_id.empty()) out << "# run_id=" << run_id << "\n";
    for (const EventSequence& s : data) {
        out << s.sequence_id << "," << (s.anomalous ? 1 : 0);
        for (int e : s.events) out << "," << e;
        out << ";";
        for (std::size_t i = 0; i < s.root_cause_positions.size(); ++i)
            out << (i ? "," : "") << s.root_cause_positions[i];
        out << "\n";
    }
}

Dataset load_dataset(const std::string& path, const std::string& format) {
    if (format != kDatasetFormatId)
        throw ConfigError("load_dataset: unknown format id '" + format + "'");
    std::ifstream in(path);
    if (!in) throw InputError("cannot open dataset: " + path);
    Dataset data;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        auto at_line = [&](const std::string& msg) {
            return InputError("dataset " + path + " line " + std::to_string(line_no) + ": " + msg);
        };
        auto halves = split_on(t, ';');
        if (halves.size() != 2) throw at_line("expected exactly one ';'");
        auto head = split_on(halves[0], ',');
        if (head.size() < 3) throw at_line("expected sequence_id,label,events...");
        EventSequence s;
        s.sequence_id = head[0];
        if (head[1] == "1") s.anomalous = true;
        else if (head[1] == "0") s.anomalous = false;
        else throw at_line("label must be 0 or 1");
        try {
            for (std::size_t i = 2; i < head.size(); ++i) s.events.push_back(std::stoi(head[i]));
            if (!trim(halves[1]).empty())
                for (const std::string& r : split_on(halves[1], ','))
                    s.root_cause_positions.push_back(std::stoi(r));
        } catch (const std::exception&) {
            throw at_line("malformed integer field");
        }
        if (s.events.empty()) throw at_line("sequence must have at least one event");
        for (int rc : s.root_cause_positions)
            if (rc < 0 || rc >= s.length())
                throw InputError("dataset " + path + ": sequence " + s.sequence_id +
                                 ": root_cause index " + std::to_string(rc) + " out of range");
        if (!s.root_cause_positions.empty() && !s.anomalous)
            throw InputError("dataset " + path + ": sequence " + s.sequence_id +
                             ": root causes on a normal sequence");
        std::sort(s.root_cause_positions.begin(), s.root_cause_positions.end());
        data.push_back(std::move(s));
    }
    return data;
}

void write_templates(const std::string& path, const std::vector<EventTemplate>& templates) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open template store for writing: " + path);
    for (const EventTemplate& t : templates) {
        out << t.template_id << "\t";
        for (int i = 0; i < t.token_count(); ++i) out << (i ? " " : "") << t.tokens[i];
        out << "\n";
    }
}

std::vector<EventTemplate> read_templates(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open template store: " + path);
    std::vector<EventTemplate> out;
    std::string line;
    std::int64_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        std::size_t tab = line.find('\t');
        if (tab == std::string::npos)
            throw InputError("template store " + path + " line " + std::to_string(line_no) +
                             ": expected tab separator");
        EventTemplate t;
        try {
            t.template_id = std::stoi(line.substr(0, tab));
        } catch (const std::exception&) {
            throw InputError("template store " + path + " line " + std::to_string(line_no) +
                             ": malformed template_id");
        }
        std::istringstream toks(line.substr(tab + 1));
        std::string tok;
        while (toks >> tok) t.tokens.push_back(tok);
        out.push_back(std::move(t));
    }
    return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
    ExperimentConfig cfg;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        std::replace(t.begin(), t.end(), '=', ' ');
        std::istringstream kv(t);
        std::string key, value;
        kv >> key >> value;
        if (key.empty() || value.empty())
            throw ConfigError("config line " + std::to_string(line_no) + ": expected key value");
        try {
            if (key == "epochs") cfg.train.epochs = std::stoi(value);
            else if (key == "batch_size") cfg.train.batch_size = std::stoi(value);
            else if (key == "learning_rate") cfg.train.learning_rate = std::stod(value);
            else if (key == "lambda1") cfg.train.weights.lambda1 = std::stod(value);
            else if (key == "lambda2") cfg.train.weights.lambda2 = std::stod(value);
            else if (key == "lambda3") cfg.train.weights.lambda3 = std::stod(value);
            else if (key == "lambda4") cfg.train.weights.lambda4 = std::stod(value);
            else if (key == "seed") cfg.train.seed = std::stoull(value);
            else if (key == "d_model") cfg.d_model = std::stoi(value);
            else if (key == "n_heads") cfg.n_heads = std::stoi(value);
            else if (key == "n_layers") cfg.n_layers = std::stoi(value);
            else if (key == "negative_pathway")
                cfg.negative_pathway = (value == "1" || value == "true");
            else
                throw ConfigError("config line " + std::to_string(line_no) + ": unknown key '" +
                                  key + "'");
        } catch (const ConfigError&) {
            throw;
        } catch (const std::exception&) {
            throw ConfigError("config line " + std::to_string(line_no) + ": malformed value for " +
                              key);
        }
    }
    return cfg;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open config: " + path);
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config_text(buf.str());
}

std::string run_id_of(const std::string& config_text, std::uint64_t seed) {
    std::uint64_t h = 0x464c4f47ULL ^ seed;
    auto mix = [&](std::uint64_t x) {
        h ^= x + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    };
    for (unsigned char c : config_text) mix(c);
    mix(seed);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

void write_training_log(const std::string& path, const std::vector<EpochLog>& log,
                        const std::string& run_id) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open training log for writing: " + path);
    if (!run_id.empty()) out << "# run_id=" << run_id << "\n";
    out << "epoch,total,ce,rank,kl,consistency,heldout_f1\n";
    char buf[256];
    for (const EpochLog& e : log) {
        std::snprintf(buf, sizeof(buf), "%d,%.6f,%.6f,%.6f,%.6f,%.6f,%.6f\n", e.epoch, e.total,
                      e.ce, e.rank, e.kl, e.consistency, e.heldout_f1);
        out << buf;
    }
}

}  // namespace faithlog
