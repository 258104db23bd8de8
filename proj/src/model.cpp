#include "faithlog/model.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

namespace faithlog {

void ModelConfig::validate() const {
    if (d_model <= 0 || n_heads <= 0 || n_layers < 1 || hidden <= 0)
        throw ConfigError("model config: all dimensions must be positive");
    if (d_model % 2 != 0) throw ConfigError("model config: d_model must be even");
    if (d_model % n_heads != 0)
        throw ConfigError("model config: n_heads must divide d_model");
}

Vector positional_encoding(int i, int d_model) {
    if (d_model % 2 != 0) throw ConfigError("positional encoding: d_model must be even");
    if (i < 0) throw ConfigError("positional encoding: position must be non-negative");
    Vector p(d_model);
    for (int j = 0; 2 * j < d_model; ++j) {
        double angle = static_cast<double>(i) /
                       std::pow(10000.0, (2.0 * j) / static_cast<double>(d_model));
        p(2 * j) = std::sin(angle);
        p(2 * j + 1) = std::cos(angle);
    }
    return p;
}

Matrix positional_encoding_matrix(int n, int d_model) {
    Matrix pe(n, d_model);
    for (int i = 0; i < n; ++i) pe.row(i) = positional_encoding(i, d_model).transpose();
    return pe;
}

namespace {
enum class Init { Weight, Zero, One };
}

FaithLogModel::FaithLogModel(ModelConfig cfg) : cfg_(cfg) {
    cfg_.validate();
    init_params();
}

void FaithLogModel::init_params() {
    std::mt19937_64 rng(cfg_.seed);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);

    auto add = [&](const std::string& name, int rows, int cols, Init kind) {
        Param p;
        p.name = name;
        p.value = Matrix::Zero(rows, cols);
        p.grad = Matrix::Zero(rows, cols);
        switch (kind) {
            case Init::Weight: {
                double s = 1.0 / std::sqrt(static_cast<double>(rows));
                for (int r = 0; r < rows; ++r)
                    for (int c = 0; c < cols; ++c) p.value(r, c) = uni(rng) * s;
                break;
            }
            case Init::Zero:
                break;
            case Init::One:
                p.value.setOnes();
                break;
        }
        params_.push_back(std::move(p));
    };

    const int d = cfg_.d_model;
    const int dk = cfg_.d_k();
    const int h = cfg_.hidden;
    for (int l = 0; l < cfg_.n_layers; ++l) {
        std::string lp = "layer" + std::to_string(l) + ".";
        for (const char* path : {"pos", "neg"}) {
            for (int head = 0; head < cfg_.n_heads; ++head) {
                std::string hp = lp + path + ".h" + std::to_string(head) + ".";
                add(hp + "Wq", d, dk, Init::Weight);
                add(hp + "Wk", d, dk, Init::Weight);
                add(hp + "Wv", d, dk, Init::Weight);
            }
        }
        add(lp + "Wo", d, d, Init::Weight);
        add(lp + "ln1.gain", 1, d, Init::One);
        add(lp + "ln1.bias", 1, d, Init::Zero);
        add(lp + "ff.W1", d, h, Init::Weight);
        add(lp + "ff.b1", 1, h, Init::Zero);
        add(lp + "ff.W2", h, d, Init::Weight);
        add(lp + "ff.b2", 1, d, Init::Zero);
        add(lp + "ln2.gain", 1, d, Init::One);
        add(lp + "ln2.bias", 1, d, Init::Zero);
    }
    layer_stride_ = 6 * cfg_.n_heads + 9;

    det_base_ = static_cast<int>(params_.size());
    add("detector.W1", d, h, Init::Weight);
    add("detector.b1", 1, h, Init::Zero);
    add("detector.W2", h, 1, Init::Weight);
    add("detector.b2", 1, 1, Init::Zero);

    loc_base_ = static_cast<int>(params_.size());
    add("locator.W1", d, h, Init::Weight);
    add("locator.b1", 1, h, Init::Zero);
    add("locator.W2", h, 1, Init::Weight);
    add("locator.b2", 1, 1, Init::Zero);
}

void FaithLogModel::zero_grads() {
    for (Param& p : params_) p.grad.setZero();
}

FaithLogModel::ForwardVars FaithLogModel::forward(ad::Tape& t, ad::Var embeddings,
                                                  const std::vector<char>& active) const {
    const Eigen::Index n = t.value(embeddings).rows();
    if (n < 1) throw InputError("forward: empty sequence");
    if (t.value(embeddings).cols() != cfg_.d_model)
        throw ShapeError("forward: embedding width != d_model");
    if (static_cast<Eigen::Index>(active.size()) != n)
        throw ShapeError("forward: active mask size mismatch");

    const int H = cfg_.n_heads;
    const double inv_sqrt_dk = 1.0 / std::sqrt(static_cast<double>(cfg_.d_k()));

    // scale embeddings by sqrt(d_model) so the near-unit-norm event vectors
    // are not drowned out by the O(sqrt(d)) positional encoding
    ad::Var x = t.add(t.scale(embeddings, std::sqrt(static_cast<double>(cfg_.d_model))),
                      t.constant(positional_encoding_matrix(static_cast<int>(n), cfg_.d_model)));

    std::vector<ad::Var> last_pos_attn, last_neg_attn;
    for (int l = 0; l < cfg_.n_layers; ++l) {
        const int base = l * layer_stride_;
        auto pathway = [&](int path_off, std::vector<ad::Var>& attn_out) {
            std::vector<ad::Var> heads;
            attn_out.clear();
            for (int head = 0; head < H; ++head) {
                int hb = base + path_off + 3 * head;
                ad::Var q = t.matmul(x, use(t, hb + 0));
                ad::Var k = t.matmul(x, use(t, hb + 1));
                ad::Var v = t.matmul(x, use(t, hb + 2));
                ad::Var logits = t.scale(t.matmul_nt(q, k), inv_sqrt_dk);
                ad::Var attn = t.softmax_rows_masked(logits, active);
                attn_out.push_back(attn);
                heads.push_back(t.matmul(attn, v));
            }
            return t.hcat(heads);
        };

        std::vector<ad::Var> pos_attn, neg_attn;
        ad::Var combined = pathway(0, pos_attn);
        if (cfg_.negative_pathway) {
            ad::Var neg = pathway(3 * H, neg_attn);
            combined = t.sub(combined, neg);
        }
        ad::Var attn_out = t.matmul(combined, use(t, base + 6 * H));

        auto layernorm_affine = [&](ad::Var in, int gain_idx, int bias_idx) {
            ad::Var normed = t.layernorm_rows(in);
            return t.add_rowvec(t.cwise_mul_rowvec(normed, use(t, gain_idx)),
                                use(t, bias_idx));
        };
        x = layernorm_affine(t.add(x, attn_out), base + 6 * H + 1, base + 6 * H + 2);
        ad::Var ff_h = t.relu(t.add_rowvec(t.matmul(x, use(t, base + 6 * H + 3)),
                                           use(t, base + 6 * H + 4)));
        ad::Var ff = t.add_rowvec(t.matmul(ff_h, use(t, base + 6 * H + 5)),
                                  use(t, base + 6 * H + 6));
        x = layernorm_affine(t.add(x, ff), base + 6 * H + 7, base + 6 * H + 8);

        if (l == cfg_.n_layers - 1) {
            last_pos_attn = pos_attn;
            last_neg_attn = neg_attn;
        }
    }

    // Per-event mass: mean over heads and active query rows of attention
    // weight received by each event, positive minus negative pathway.
    auto pathway_mass = [&](const std::vector<ad::Var>& attns) {
        ad::Var acc = t.mean_rows_masked(attns[0], active);
        for (std::size_t i = 1; i < attns.size(); ++i)
            acc = t.add(acc, t.mean_rows_masked(attns[i], active));
        return t.scale(acc, 1.0 / static_cast<double>(attns.size()));
    };
    ad::Var signed_scores = pathway_mass(last_pos_attn);
    if (cfg_.negative_pathway)
        signed_scores = t.sub(signed_scores, pathway_mass(last_neg_attn));

    ad::Var attn_dist = t.softmax_rows_masked(signed_scores, active);

    ad::Var pooled = t.matmul(attn_dist, x);
    ad::Var det_h = t.relu(t.add_rowvec(t.matmul(pooled, use(t, det_base_ + 0)),
                                        use(t, det_base_ + 1)));
    ad::Var p = t.sigmoid(t.add_rowvec(t.matmul(det_h, use(t, det_base_ + 2)),
                                       use(t, det_base_ + 3)));

    ad::Var loc_h = t.relu(t.add_rowvec(t.matmul(x, use(t, loc_base_ + 0)),
                                        use(t, loc_base_ + 1)));
    ad::Var loc = t.sigmoid(t.add_rowvec(t.matmul(loc_h, use(t, loc_base_ + 2)),
                                         use(t, loc_base_ + 3)));

    return ForwardVars{x, signed_scores, attn_dist, p, loc};
}

AttentionProfile make_profile(const Vector& signed_scores, const Vector& distribution,
                              const std::vector<char>& active) {
    AttentionProfile prof;
    prof.signed_scores = signed_scores;
    prof.distribution = distribution;
    int best = -1;
    for (int i = 0; i < signed_scores.size(); ++i) {
        if (!active[i]) continue;
        if (best < 0 || signed_scores(i) > signed_scores(best)) best = i;
    }
    prof.argmax_index = best;
    return prof;
}

DetectionResult FaithLogModel::detect(const Matrix& embeddings,
                                      const std::vector<char>* active) const {
    if (embeddings.rows() < 1) throw InputError("detect: empty sequence");
    std::vector<char> mask(embeddings.rows(), 1);
    if (active) {
        if (static_cast<Eigen::Index>(active->size()) != embeddings.rows())
            throw ShapeError("detect: mask size mismatch");
        mask = *active;
    }
    ad::Tape t;
    ForwardVars fv = forward(t, t.constant(embeddings), mask);

    DetectionResult res;
    res.confidence = t.value(fv.confidence)(0, 0);
    res.anomalous = res.confidence >= kDecisionThreshold;
    Vector ss = t.value(fv.signed_scores).row(0).transpose();
    Vector dist = t.value(fv.attn_dist).row(0).transpose();
    res.attention = make_profile(ss, dist, mask);
    res.locator_scores = t.value(fv.locator).col(0);
    return res;
}

Vector FaithLogModel::locate(const Matrix& features) const {
    if (features.cols() != cfg_.d_model) throw ShapeError("locate: feature width != d_model");
    ad::Tape t;
    ad::Var x = t.constant(features);
    ad::Var h = t.relu(t.add_rowvec(t.matmul(x, use(t, loc_base_ + 0)), use(t, loc_base_ + 1)));
    ad::Var l = t.sigmoid(t.add_rowvec(t.matmul(h, use(t, loc_base_ + 2)), use(t, loc_base_ + 3)));
    return t.value(l).col(0);
}

std::optional<std::vector<char>> FaithLogModel::remove_event(
    const std::vector<char>& active, int index) {
    if (index < 0 || index >= static_cast<int>(active.size()))
        throw InputError("remove_event: index out of range");
    if (!active[index]) throw InputError("remove_event: event already removed");
    int n_active = 0;
    for (char a : active) n_active += a ? 1 : 0;
    if (n_active < 2) return std::nullopt;
    std::vector<char> out = active;
    out[index] = 0;
    return out;
}

// ---- checkpoint io ----------------------------------------------------

void save_checkpoint(const std::string& path, const FaithLogModel& model,
                     const std::string& run_id) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot open checkpoint for writing: " + path);
    const ModelConfig& c = model.config();
    out << "faithlog-checkpoint v1\n";
    out << "run_id " << (run_id.empty() ? "-" : run_id) << "\n";
    out << "d_model " << c.d_model << "\n";
    out << "n_heads " << c.n_heads << "\n";
    out << "n_layers " << c.n_layers << "\n";
    out << "hidden " << c.hidden << "\n";
    out << "negative_pathway " << (c.negative_pathway ? 1 : 0) << "\n";
    out << "seed " << c.seed << "\n";
    out << "n_params " << model.param_count() << "\n";
    char buf[64];
    model.for_each_param([&](const Param& p) {
        out << p.name << " " << p.value.rows() << " " << p.value.cols() << "\n";
        for (Eigen::Index r = 0; r < p.value.rows(); ++r) {
            for (Eigen::Index col = 0; col < p.value.cols(); ++col) {
                std::snprintf(buf, sizeof(buf), "%a", p.value(r, col));
                out << buf << (col + 1 == p.value.cols() ? "" : " ");
            }
            out << "\n";
        }
    });
    if (!out) throw InputError("checkpoint write failed: " + path);
}

FaithLogModel load_checkpoint(const std::string& path, std::string* run_id_out) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open checkpoint: " + path);
    std::string magic, version;
    in >> magic >> version;
    if (magic != "faithlog-checkpoint" || version != "v1")
        throw CheckpointError("not a faithlog checkpoint: " + path);

    ModelConfig cfg;
    std::string run_id;
    std::size_t n_params = 0;
    auto expect_key = [&](const char* key) {
        std::string k;
        in >> k;
        if (k != key) throw CheckpointError("checkpoint header: expected " + std::string(key));
    };
    expect_key("run_id");
    in >> run_id;
    expect_key("d_model");
    in >> cfg.d_model;
    expect_key("n_heads");
    in >> cfg.n_heads;
    expect_key("n_layers");
    in >> cfg.n_layers;
    expect_key("hidden");
    in >> cfg.hidden;
    int neg = 1;
    expect_key("negative_pathway");
    in >> neg;
    cfg.negative_pathway = neg != 0;
    expect_key("seed");
    in >> cfg.seed;
    expect_key("n_params");
    in >> n_params;
    if (!in) throw CheckpointError("malformed checkpoint header: " + path);
    if (run_id_out) *run_id_out = (run_id == "-" ? "" : run_id);

    FaithLogModel model(cfg);
    if (n_params != model.param_count())
        throw CheckpointError("checkpoint parameter count mismatch");
    model.for_each_param([&](Param& p) {
        std::string name;
        Eigen::Index rows = 0, cols = 0;
        in >> name >> rows >> cols;
        if (!in || name != p.name || rows != p.value.rows() || cols != p.value.cols())
            throw CheckpointError("checkpoint shape mismatch at parameter " + p.name);
        std::string tok;
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index col = 0; col < cols; ++col) {
                in >> tok;
                if (!in) throw CheckpointError("truncated checkpoint at " + p.name);
                p.value(r, col) = std::strtod(tok.c_str(), nullptr);
            }
    });
    return model;
}

}  // namespace faithlog
