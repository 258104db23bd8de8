#include "faithlog/losses.hpp"

#include <algorithm>
#include <cmath>

namespace faithlog {

double ce_loss(const std::vector<double>& confidences, const std::vector<int>& labels) {
    if (confidences.size() != labels.size())
        throw ShapeError("ce_loss: batch size mismatch");
    double total = 0.0;
    for (std::size_t i = 0; i < confidences.size(); ++i) {
        double p = std::clamp(confidences[i], kProbEps, 1.0 - kProbEps);
        total += labels[i] ? -std::log(p) : -std::log(1.0 - p);
    }
    return total;
}

double rank_loss_pair(const Vector& locator_normal, const Vector& locator_anomalous) {
    if (locator_normal.size() == 0 || locator_anomalous.size() == 0)
        throw ShapeError("rank_loss: empty score list");
    double mn = locator_normal.maxCoeff();
    double ma = locator_anomalous.maxCoeff();
    return std::max(0.0, 1.0 + mn - ma);
}

double kl_loss(const Vector& locator_scores, const Vector& attention_distribution) {
    if (locator_scores.size() != attention_distribution.size())
        throw ShapeError("kl_loss: length mismatch");
    const Eigen::Index n = locator_scores.size();
    Vector lhat = locator_scores.array() + kKlEps;
    lhat /= lhat.sum();
    double kl = 0.0;
    for (Eigen::Index i = 0; i < n; ++i)
        kl += lhat(i) * std::log(lhat(i) / attention_distribution(i));
    return kl;
}

double consistency_loss(double p, double p_prime) {
    return std::max(0.0, 1.0 + p_prime - p);
}

}  // namespace faithlog
