#include "faithlog/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace faithlog {

namespace {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t x = seed ^ (0x9e3779b97f4a7c15ULL * (stream + 1));
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

const char* kVerbs[] = {"started", "finished", "queued", "flushed", "opened",
                        "closed",  "retried",  "synced", "loaded",  "sent"};

}  // namespace

void SynthConfig::validate() const {
    if (n_templates < 1 || n_anomaly_templates < 1 || n_sequences < 1)
        throw ConfigError("synth config: counts must be positive");
    if (seq_length < 2) throw ConfigError("synth config: seq_length must be >= 2");
    if (anomaly_rate <= 0.0 || anomaly_rate >= 1.0)
        throw ConfigError("synth config: anomaly_rate must be in (0,1)");
    if (noise_rate < 0.0 || noise_rate > 1.0)
        throw ConfigError("synth config: noise_rate must be in [0,1]");
    if (anomaly_rate * n_sequences < 1.0)
        throw ConfigError("synth config: anomaly_rate * n_sequences must be >= 1");
}

SynthCorpus generate(const SynthConfig& cfg) {
    cfg.validate();
    const int T = cfg.n_templates;
    const int A = cfg.n_anomaly_templates;

    // fixed sparse transition structure: each state allows ~20% successors
    std::mt19937_64 chain_rng(mix_seed(cfg.seed, 0));
    const int fanout = std::max(1, static_cast<int>(std::lround(0.2 * T)));
    std::vector<std::vector<int>> successors(T);
    {
        std::vector<int> all(T);
        for (int i = 0; i < T; ++i) all[i] = i;
        for (int i = 0; i < T; ++i) {
            std::vector<int> pool = all;
            std::shuffle(pool.begin(), pool.end(), chain_rng);
            successors[i].assign(pool.begin(), pool.begin() + fanout);
        }
    }

    // label assignment: exactly round(anomaly_rate * n) anomalous sequences
    const int n_anom = static_cast<int>(std::lround(cfg.anomaly_rate * cfg.n_sequences));
    std::vector<char> is_anom(cfg.n_sequences, 0);
    for (int i = 0; i < n_anom; ++i) is_anom[i] = 1;
    std::shuffle(is_anom.begin(), is_anom.end(), chain_rng);

    auto render = [&](int template_id, std::mt19937_64& rng) {
        std::uniform_int_distribution<int> num(0, 99999);
        char buf[128];
        if (template_id < T) {
            std::snprintf(buf, sizeof(buf), "task%d worker %s job %d took %d ms", template_id,
                          kVerbs[template_id % 10], num(rng), num(rng));
        } else {
            std::snprintf(buf, sizeof(buf), "fault%d critical error code %d raised at %d",
                          template_id - T, num(rng), num(rng));
        }
        return std::string(buf);
    };

    SynthCorpus corpus;
    corpus.total_templates = T + A;
    for (int s = 0; s < cfg.n_sequences; ++s) {
        std::mt19937_64 rng(mix_seed(cfg.seed, 1 + static_cast<std::uint64_t>(s)));
        std::uniform_int_distribution<int> any_normal(0, T - 1);
        std::uniform_real_distribution<double> coin(0.0, 1.0);

        EventSequence seq;
        char idbuf[16];
        std::snprintf(idbuf, sizeof(idbuf), "s%05d", s);
        seq.sequence_id = idbuf;
        int state = any_normal(rng);
        for (int i = 0; i < cfg.seq_length; ++i) {
            if (i > 0) {
                const std::vector<int>& succ = successors[state];
                std::uniform_int_distribution<std::size_t> next(0, succ.size() - 1);
                state = succ[next(rng)];
            }
            int event = state;
            if (coin(rng) < cfg.noise_rate) event = any_normal(rng);
            seq.events.push_back(event);
        }

        if (is_anom[s]) {
            seq.anomalous = true;
            std::uniform_int_distribution<int> count(1, 2);
            std::uniform_int_distribution<int> pos(1, cfg.seq_length - 1);  // never the first slot
            std::uniform_int_distribution<int> anom_tpl(T, T + A - 1);
            int c = count(rng);
            std::vector<int> positions;
            while (static_cast<int>(positions.size()) < c) {
                int p = pos(rng);
                if (std::find(positions.begin(), positions.end(), p) == positions.end())
                    positions.push_back(p);
            }
            std::sort(positions.begin(), positions.end());
            for (int p : positions) seq.events[p] = anom_tpl(rng);
            seq.root_cause_positions = positions;
        }

        for (int i = 0; i < cfg.seq_length; ++i) {
            corpus.raw_lines.push_back(render(seq.events[i], rng));
            bool root = std::find(seq.root_cause_positions.begin(),
                                  seq.root_cause_positions.end(),
                                  i) != seq.root_cause_positions.end();
            corpus.line_labels.push_back(root ? 1 : 0);
        }
        corpus.sequences.push_back(std::move(seq));
    }
    return corpus;
}

}  // namespace faithlog
