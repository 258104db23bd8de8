#include "faithlog/faithfulness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <unordered_map>

#include <json.hpp>

namespace faithlog {

namespace {

std::vector<int> rank_by_score(const Vector& scores) {
    std::vector<int> idx(scores.size());
    for (int i = 0; i < static_cast<int>(idx.size()); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](int a, int b) {
        if (scores(a) != scores(b)) return scores(a) > scores(b);
        return a < b;
    });
    return idx;
}

int first_hit_rank(const std::vector<int>& ranked, const std::vector<int>& truth) {
    for (std::size_t r = 0; r < ranked.size(); ++r)
        if (std::find(truth.begin(), truth.end(), ranked[r]) != truth.end())
            return static_cast<int>(r) + 1;
    return 0;  // no hit
}

double round2(double v) { return std::round(v * 100.0) / 100.0; }

}  // namespace

RankMetrics rank_metrics(const std::vector<RankedLocalization>& localizations,
                         const std::vector<int>& ks) {
    if (localizations.empty())
        throw InputError("rank_metrics: no localizations (metrics undefined)");
    for (const auto& l : localizations)
        if (l.truth.empty()) throw InputError("rank_metrics: empty truth for " + l.sequence_id);

    RankMetrics m;
    const double n = static_cast<double>(localizations.size());
    for (int k : ks) {
        double hr = 0.0, pr = 0.0, ap = 0.0;
        for (const auto& l : localizations) {
            int hits = 0;
            double ap_sum = 0.0;
            const int kk = std::min<int>(k, static_cast<int>(l.ranked_events.size()));
            for (int i = 0; i < kk; ++i) {
                bool rel = std::find(l.truth.begin(), l.truth.end(), l.ranked_events[i]) !=
                           l.truth.end();
                if (rel) {
                    ++hits;
                    ap_sum += static_cast<double>(hits) / static_cast<double>(i + 1);
                }
            }
            if (hits > 0) hr += 1.0;
            pr += static_cast<double>(hits) / static_cast<double>(k);
            ap += ap_sum / static_cast<double>(std::min<int>(k, static_cast<int>(l.truth.size())));
        }
        m.hr[k] = hr / n;
        m.pr[k] = pr / n;
        m.map[k] = ap / n;
    }
    double mrr = 0.0;
    for (const auto& l : localizations) {
        int r = first_hit_rank(l.ranked_events, l.truth);
        if (r > 0) mrr += 1.0 / static_cast<double>(r);
    }
    m.mrr = mrr / n;
    return m;
}

std::vector<RankedLocalization> localize(const FaithLogModel& model,
                                         const EmbeddingProvider& emb, const Dataset& data,
                                         int* excluded_count) {
    std::vector<RankedLocalization> out;
    int excluded = 0;
    for (const EventSequence& s : data) {
        if (!s.anomalous) continue;
        if (s.root_cause_positions.empty()) {
            ++excluded;
            continue;
        }
        DetectionResult r = model.detect(emb.embed_sequence(s));
        RankedLocalization loc;
        loc.sequence_id = s.sequence_id;
        loc.truth = s.root_cause_positions;
        loc.ranked_events = rank_by_score(r.attention.signed_scores);
        loc.locator_ranked = rank_by_score(r.locator_scores);
        out.push_back(std::move(loc));
    }
    if (excluded_count) *excluded_count = excluded;
    return out;
}

SupportRateResult support_rate(const FaithLogModel& model, const EmbeddingProvider& emb,
                               const Dataset& data) {
    SupportRateResult res;
    for (const EventSequence& s : data) {
        Matrix embs = emb.embed_sequence(s);
        DetectionResult r = model.detect(embs);
        PerturbVerdict v;
        v.sequence_id = s.sequence_id;
        v.p = r.confidence;
        if (!r.anomalous || s.length() < 2) {
            v.skipped = true;
            res.verdicts.push_back(v);
            continue;
        }
        std::vector<char> all(s.length(), 1);
        auto masked = FaithLogModel::remove_event(all, r.attention.argmax_index);
        if (!masked) {
            v.skipped = true;
            res.verdicts.push_back(v);
            continue;
        }
        DetectionResult r2 = model.detect(embs, &*masked);
        v.p_prime = r2.confidence;
        v.supportive = v.p_prime < v.p;  // strict; ties count against the model
        res.verdicts.push_back(v);
        ++res.evaluated;
        if (v.supportive) ++res.supportive;
    }
    if (res.evaluated == 0) throw InputError("support_rate: no eligible sequences");
    res.sr = static_cast<double>(res.supportive) / static_cast<double>(res.evaluated);
    return res;
}

FaithfulnessReport evaluate_faithfulness(const FaithLogModel& model,
                                         const EmbeddingProvider& emb, const Dataset& data,
                                         const std::vector<int>& ks) {
    FaithfulnessReport rep;
    auto locs = localize(model, emb, data, &rep.excluded);
    rep.localized = static_cast<int>(locs.size());
    rep.rank = rank_metrics(locs, ks);
    std::vector<RankedLocalization> by_locator = locs;
    for (auto& l : by_locator) l.ranked_events = l.locator_ranked;
    rep.locator_rank = rank_metrics(by_locator, ks);
    SupportRateResult sr = support_rate(model, emb, data);
    rep.sr = sr.sr;
    rep.perturb_evaluated = sr.evaluated;
    rep.perturb_supportive = sr.supportive;
    return rep;
}

void write_report(const std::string& path, const FaithfulnessReport& report,
                  const std::string& run_id) {
    nlohmann::json metrics;
    for (const auto& [k, v] : report.rank.hr) metrics["hr@" + std::to_string(k)] = round2(100.0 * v);
    for (const auto& [k, v] : report.rank.pr)
        if (k > 1) metrics["pr@" + std::to_string(k)] = round2(100.0 * v);
    for (const auto& [k, v] : report.rank.map)
        if (k > 1) metrics["map@" + std::to_string(k)] = round2(100.0 * v);
    metrics["mrr"] = round2(100.0 * report.rank.mrr);
    metrics["sr"] = round2(100.0 * report.sr);

    nlohmann::json supplementary;
    for (const auto& [k, v] : report.locator_rank.hr)
        supplementary["locator_hr@" + std::to_string(k)] = round2(100.0 * v);
    supplementary["locator_mrr"] = round2(100.0 * report.locator_rank.mrr);

    nlohmann::json j;
    j["run_id"] = run_id;
    j["metrics"] = metrics;
    j["supplementary"] = supplementary;
    j["counts"] = {{"localized", report.localized},
                   {"excluded", report.excluded},
                   {"perturb_evaluated", report.perturb_evaluated},
                   {"perturb_supportive", report.perturb_supportive}};

    std::ofstream out(path);
    if (!out) throw InputError("cannot open report for writing: " + path);
    out << j.dump(2) << "\n";
}

void write_verdicts(const std::string& path, const SupportRateResult& sr,
                    const std::vector<RankedLocalization>& locs, const std::string& run_id) {
    std::unordered_map<std::string, const RankedLocalization*> by_id;
    for (const auto& l : locs) by_id[l.sequence_id] = &l;
    std::ofstream out(path);
    if (!out) throw InputError("cannot open verdict file for writing: " + path);
    if (!run_id.empty()) out << "# run_id=" << run_id << "\n";
    out << "sequence_id,p,p_prime,verdict,first_hit_rank,locator_first_hit_rank\n";
    char buf[256];
    for (const PerturbVerdict& v : sr.verdicts) {
        std::string rank = "-", lrank = "-";
        auto it = by_id.find(v.sequence_id);
        if (it != by_id.end()) {
            rank = std::to_string(first_hit_rank(it->second->ranked_events, it->second->truth));
            lrank = std::to_string(first_hit_rank(it->second->locator_ranked, it->second->truth));
        }
        std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%s,%s,%s\n", v.sequence_id.c_str(), v.p,
                      v.p_prime,
                      v.skipped ? "skipped" : (v.supportive ? "supportive" : "non-supportive"),
                      rank.c_str(), lrank.c_str());
        out << buf;
    }
}

}  // namespace faithlog
