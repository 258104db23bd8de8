#include "faithlog/embedding.hpp"

#include <cmath>
#include <fstream>

namespace faithlog {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t hash_bytes(std::uint64_t h, const std::string& s) {
    for (unsigned char c : s) h = splitmix64(h ^ c);
    return h;
}

}  // namespace

EmbeddingProvider::EmbeddingProvider(int d_model, EmbeddingMode mode, std::uint64_t seed,
                                     bool allow_growth)
    : d_model_(d_model), mode_(mode), seed_(seed), allow_growth_(allow_growth) {
    if (d_model <= 0 || d_model % 2 != 0)
        throw ConfigError("embedding: d_model must be a positive even integer");
    table_ = Matrix::Zero(0, d_model_);
    table_grad_ = Matrix::Zero(0, d_model_);
}

RowVector EmbeddingProvider::embed_tokens(const std::vector<std::string>& tokens) const {
    std::uint64_t h0 = splitmix64(seed_ ^ 0x5162666c6f67ULL);
    for (const std::string& tok : tokens) {
        h0 = hash_bytes(h0, tok);
        h0 = splitmix64(h0 ^ 0x1f);  // token boundary
    }
    RowVector v(d_model_);
    const double scale = 1.0 / std::sqrt(static_cast<double>(d_model_));
    for (int c = 0; c < d_model_; ++c) {
        std::uint64_t h = splitmix64(h0 ^ static_cast<std::uint64_t>(c));
        double u = static_cast<double>(h >> 11) * (1.0 / 9007199254740992.0);  // [0,1)
        v(c) = (2.0 * u - 1.0) * scale;
    }
    return v;
}

RowVector EmbeddingProvider::embed_template(const EventTemplate& t) const {
    if (mode_ == EmbeddingMode::TrainableLookup) return embed_id(t.template_id);
    return embed_tokens(t.tokens);
}

RowVector EmbeddingProvider::embed_id(int template_id) const {
    if (mode_ == EmbeddingMode::TrainableLookup) {
        auto it = vocab_.find(template_id);
        if (it == vocab_.end())
            throw ConfigError("embedding vocabulary: unknown template_id " +
                              std::to_string(template_id));
        return table_.row(it->second);
    }
    return embed_tokens({std::to_string(template_id)});
}

Matrix EmbeddingProvider::embed_sequence(const EventSequence& seq) const {
    Matrix m(seq.length(), d_model_);
    for (int i = 0; i < seq.length(); ++i) m.row(i) = embed_id(seq.events[i]);
    return m;
}

Matrix EmbeddingProvider::embed_sequence(const EventSequence& seq,
                                         const std::vector<EventTemplate>& store) const {
    Matrix m(seq.length(), d_model_);
    for (int i = 0; i < seq.length(); ++i) {
        int id = seq.events[i];
        if (id < 0 || id >= static_cast<int>(store.size()))
            throw InputError("embed_sequence: template_id not in store");
        m.row(i) = embed_template(store[id]);
    }
    return m;
}

void EmbeddingProvider::ensure_vocabulary(const Dataset& data) {
    if (mode_ != EmbeddingMode::TrainableLookup) return;
    for (const EventSequence& s : data)
        for (int id : s.events) {
            if (vocab_.count(id)) continue;
            if (!allow_growth_)
                throw ConfigError("embedding vocabulary: unknown template_id " +
                                  std::to_string(id) + " and growth disabled");
            int row = static_cast<int>(vocab_.size());
            vocab_[id] = row;
            table_.conservativeResize(row + 1, d_model_);
            // initialize the new row from the deterministic hash so trainable
            // mode starts from the same point as hash mode
            table_.row(row) = embed_tokens({std::to_string(id)});
            table_grad_.conservativeResize(row + 1, d_model_);
            table_grad_.row(row).setZero();
        }
}

int EmbeddingProvider::row_of(int template_id) const {
    auto it = vocab_.find(template_id);
    if (it == vocab_.end())
        throw ConfigError("embedding vocabulary: unknown template_id " +
                          std::to_string(template_id));
    return it->second;
}

void EmbeddingProvider::export_table(const std::string& path,
                                     const std::vector<int>& template_ids) const {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open embedding export: " + path);
    out.precision(17);
    for (int id : template_ids) {
        RowVector v = embed_id(id);
        out << id;
        for (int c = 0; c < d_model_; ++c) out << " " << v(c);
        out << "\n";
    }
}

}  // namespace faithlog
