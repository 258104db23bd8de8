#pragma once

#include "faithlog/types.hpp"

namespace faithlog {

inline constexpr double kProbEps = 1e-7;  // confidence clamp for cross-entropy
inline constexpr double kKlEps = 1e-8;    // locator-to-distribution smoothing

struct LossWeights {
    double lambda1 = 1.0;  // cross-entropy
    double lambda2 = 0.1;  // ranking
    double lambda3 = 0.1;  // KL alignment
    double lambda4 = 0.1;  // adversarial consistency

    void validate() const {
        if (lambda1 <= 0.0) throw ConfigError("loss weights: lambda1 must be > 0");
        if (lambda2 < 0.0 || lambda3 < 0.0 || lambda4 < 0.0)
            throw ConfigError("loss weights: lambdas must be non-negative");
    }
};

// Sum over the batch of -[y log p + (1-y) log(1-p)], p clamped to
// [eps, 1-eps].
double ce_loss(const std::vector<double>& confidences, const std::vector<int>& labels);

// Hinge over the per-sequence locator maxima:
//   max(0, 1 + max(L_normal) - max(L_anomalous))
double rank_loss_pair(const Vector& locator_normal, const Vector& locator_anomalous);

// KL(L_hat || A) where L_hat(e_i) = (L(e_i)+eps) / sum_j (L(e_j)+eps).
double kl_loss(const Vector& locator_scores, const Vector& attention_distribution);

// Hinge max(0, 1 + p' - p); p' is the confidence after removing e_max.
double consistency_loss(double p, double p_prime);

struct LossBreakdown {
    double ce = 0.0, rank = 0.0, kl = 0.0, consistency = 0.0;
    double total(const LossWeights& w) const {
        return w.lambda1 * ce + w.lambda2 * rank + w.lambda3 * kl + w.lambda4 * consistency;
    }
};

}  // namespace faithlog
