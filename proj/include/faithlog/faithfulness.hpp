#pragma once

#include <map>
#include <string>
#include <vector>

#include "faithlog/embedding.hpp"
#include "faithlog/model.hpp"
#include "faithlog/types.hpp"

namespace faithlog {

// Event indices sorted by signed attention score descending, lowest-index
// tie-break, plus the ground-truth root-cause set.
struct RankedLocalization {
    std::string sequence_id;
    std::vector<int> ranked_events;       // permutation of 0..n-1
    std::vector<int> truth;               // non-empty for evaluated sequences
    std::vector<int> locator_ranked;      // supplementary: ranked by locator score
};

struct RankMetrics {
    std::map<int, double> hr;   // hit rate at k
    std::map<int, double> pr;   // precision at k
    std::map<int, double> map;  // mean average precision at k
    double mrr = 0.0;
};

// Standard IR definitions: HR@k = fraction with a truth index in the top k;
// PR@k = mean |top-k ∩ truth| / k; MAP@k = mean average precision truncated
// at k; MRR = mean 1/rank of the first hit.
RankMetrics rank_metrics(const std::vector<RankedLocalization>& localizations,
                         const std::vector<int>& ks);

// Runs detection on every anomalous sequence carrying root-cause labels and
// ranks its events by signed attention score. Sequences without labels are
// excluded and counted.
std::vector<RankedLocalization> localize(const FaithLogModel& model,
                                         const EmbeddingProvider& emb, const Dataset& data,
                                         int* excluded_count = nullptr);

struct PerturbVerdict {
    std::string sequence_id;
    double p = 0.0;        // confidence on the full sequence
    double p_prime = 0.0;  // confidence with e_max removed
    bool supportive = false;
    bool skipped = false;  // not predicted anomalous, or n < 2
};

struct SupportRateResult {
    double sr = 0.0;
    int evaluated = 0;
    int supportive = 0;
    std::vector<PerturbVerdict> verdicts;
};

// Evaluated on sequences the model detects as anomalous with n >= 2;
// supportive iff p' < p (ties count against the model).
SupportRateResult support_rate(const FaithLogModel& model, const EmbeddingProvider& emb,
                               const Dataset& data);

struct FaithfulnessReport {
    RankMetrics rank;
    RankMetrics locator_rank;  // supplementary: locator-score localization
    double sr = 0.0;
    int localized = 0;
    int excluded = 0;
    int perturb_evaluated = 0;
    int perturb_supportive = 0;
};

FaithfulnessReport evaluate_faithfulness(const FaithLogModel& model,
                                         const EmbeddingProvider& emb, const Dataset& data,
                                         const std::vector<int>& ks = {1, 3, 5});

// JSON report; metric values as percentages with 2 decimals.
void write_report(const std::string& path, const FaithfulnessReport& report,
                  const std::string& run_id);

void write_verdicts(const std::string& path, const SupportRateResult& sr,
                    const std::vector<RankedLocalization>& locs, const std::string& run_id);

}  // namespace faithlog
