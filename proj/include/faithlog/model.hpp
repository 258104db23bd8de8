#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "faithlog/autodiff.hpp"
#include "faithlog/types.hpp"

namespace faithlog {

struct ModelConfig {
    int d_model = 64;
    int n_heads = 4;
    int n_layers = 2;
    int hidden = 128;
    bool negative_pathway = true;
    std::uint64_t seed = 0;

    int d_k() const { return d_model / n_heads; }
    void validate() const;
};

inline constexpr double kDecisionThreshold = 0.5;

// Sinusoidal positional encoding: component 2j = sin(i / 10000^(2j/d)),
// component 2j+1 = cos(i / 10000^(2j/d)).
Vector positional_encoding(int i, int d_model);
Matrix positional_encoding_matrix(int n, int d_model);

struct Param {
    std::string name;
    Matrix value;
    Matrix grad;
};

class FaithLogModel {
public:
    explicit FaithLogModel(ModelConfig cfg);

    const ModelConfig& config() const { return cfg_; }

    // Differentiable forward pass for one sequence. `embeddings` is the
    // n x d_model event-embedding node (positional encodings are added
    // inside). `active[i] == 0` masks event i out of attention, pooling and
    // locator aggregation while keeping its positional identity.
    struct ForwardVars {
        ad::Var features;       // n x d_model
        ad::Var signed_scores;  // 1 x n
        ad::Var attn_dist;      // 1 x n, softmax over active events
        ad::Var confidence;     // 1 x 1
        ad::Var locator;        // n x 1
    };
    ForwardVars forward(ad::Tape& t, ad::Var embeddings,
                        const std::vector<char>& active) const;

    // Inference convenience: runs the forward pass and extracts plain values.
    DetectionResult detect(const Matrix& embeddings,
                           const std::vector<char>* active = nullptr) const;

    // Position-wise locator head applied to encoder features.
    Vector locate(const Matrix& features) const;

    // Mask for re-detection with one event removed. Returns nullopt when
    // fewer than two events are active (consistency term is skipped then).
    static std::optional<std::vector<char>> remove_event(
        const std::vector<char>& active, int index);

    template <class F>
    void for_each_param(F&& f) {
        for (Param& p : params_) f(p);
    }
    template <class F>
    void for_each_param(F&& f) const {
        for (const Param& p : params_) f(p);
    }
    void zero_grads();

    std::size_t param_count() const { return params_.size(); }

private:
    struct Layout;
    const Param& at(int idx) const { return params_[idx]; }
    ad::Var use(ad::Tape& t, int idx) const {
        return t.param(params_[idx].value, &const_cast<Param&>(params_[idx]).grad);
    }
    void init_params();

    ModelConfig cfg_;
    std::vector<Param> params_;
    // index bases, filled by build
    int layer_stride_ = 0;
    int det_base_ = 0;
    int loc_base_ = 0;
};

AttentionProfile make_profile(const Vector& signed_scores, const Vector& distribution,
                              const std::vector<char>& active);

void save_checkpoint(const std::string& path, const FaithLogModel& model,
                     const std::string& run_id = "");
FaithLogModel load_checkpoint(const std::string& path, std::string* run_id_out = nullptr);

}  // namespace faithlog
