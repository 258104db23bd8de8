#include "faithlog/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace faithlog {

std::pair<Dataset, Dataset> stratified_split(const Dataset& data, double train_fraction,
                                             std::uint64_t seed) {
    if (train_fraction <= 0.0 || train_fraction >= 1.0)
        throw ConfigError("split: train_fraction must be in (0,1)");
    std::vector<int> normal, anomalous;
    for (int i = 0; i < static_cast<int>(data.size()); ++i)
        (data[i].anomalous ? anomalous : normal).push_back(i);
    std::mt19937_64 rng(seed);
    std::shuffle(normal.begin(), normal.end(), rng);
    std::shuffle(anomalous.begin(), anomalous.end(), rng);

    std::vector<char> in_train(data.size(), 0);
    auto take = [&](std::vector<int>& idx) {
        std::size_t k = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(idx.size())));
        for (std::size_t i = 0; i < k; ++i) in_train[idx[i]] = 1;
    };
    take(normal);
    take(anomalous);

    Dataset train, test;
    for (int i = 0; i < static_cast<int>(data.size()); ++i)
        (in_train[i] ? train : test).push_back(data[i]);
    int train_anom = 0, test_anom = 0;
    for (const auto& s : train) train_anom += s.anomalous;
    for (const auto& s : test) test_anom += s.anomalous;
    if (!anomalous.empty() && (train_anom == 0 || test_anom == 0))
        throw ConfigError("split: a split side has zero anomalous sequences");
    return {std::move(train), std::move(test)};
}

std::vector<std::vector<int>> make_batches(const Dataset& data, int batch_size,
                                           std::mt19937_64& rng) {
    std::vector<int> normal, anomalous;
    for (int i = 0; i < static_cast<int>(data.size()); ++i)
        (data[i].anomalous ? anomalous : normal).push_back(i);
    std::shuffle(normal.begin(), normal.end(), rng);
    std::shuffle(anomalous.begin(), anomalous.end(), rng);

    const int n = static_cast<int>(data.size());
    const int n_batches = std::max(1, (n + batch_size - 1) / batch_size);
    std::vector<std::vector<int>> batches(n_batches);
    int b = 0;
    for (int idx : anomalous) {
        batches[b].push_back(idx);
        b = (b + 1) % n_batches;
    }
    // fill remaining capacity with normals
    std::size_t pos = 0;
    for (int i = 0; i < n_batches && pos < normal.size(); ++i)
        while (static_cast<int>(batches[i].size()) < batch_size && pos < normal.size())
            batches[i].push_back(normal[pos++]);
    while (pos < normal.size()) batches.back().push_back(normal[pos++]);
    batches.erase(std::remove_if(batches.begin(), batches.end(),
                                 [](const std::vector<int>& v) { return v.empty(); }),
                  batches.end());
    return batches;
}

BatchLossResult batch_loss(ad::Tape& t, const FaithLogModel& model,
                           const std::vector<const EventSequence*>& seqs,
                           const EmbedFn& embed_fn, const LossWeights& weights,
                           const std::vector<int>& rank_pairs) {
    const int n = static_cast<int>(seqs.size());
    if (static_cast<int>(rank_pairs.size()) != n)
        throw ShapeError("batch_loss: rank_pairs size mismatch");

    std::vector<ad::Var> embeds(n);
    std::vector<FaithLogModel::ForwardVars> fv(n);
    for (int i = 0; i < n; ++i) {
        embeds[i] = embed_fn(t, *seqs[i]);
        std::vector<char> active(seqs[i]->length(), 1);
        fv[i] = model.forward(t, embeds[i], active);
    }

    ad::Var zero = t.constant(Matrix::Zero(1, 1));

    // cross-entropy, summed over the batch
    ad::Var ce = zero;
    for (int i = 0; i < n; ++i) {
        ad::Var pc = t.clamp(fv[i].confidence, kProbEps, 1.0 - kProbEps);
        ad::Var term = seqs[i]->anomalous
                           ? t.scale(t.log(pc), -1.0)
                           : t.scale(t.log(t.add_scalar(t.scale(pc, -1.0), 1.0)), -1.0);
        ce = t.add(ce, term);
    }

    // ranking hinge, mean over anomalous/normal pairs
    ad::Var rank = zero;
    int n_pairs = 0;
    for (int i = 0; i < n; ++i) {
        if (!seqs[i]->anomalous || rank_pairs[i] < 0) continue;
        ad::Var max_anom = t.max_elem(fv[i].locator);
        ad::Var max_norm = t.max_elem(fv[rank_pairs[i]].locator);
        rank = t.add(rank, t.relu(t.add_scalar(t.sub(max_norm, max_anom), 1.0)));
        ++n_pairs;
    }
    if (n_pairs > 0) rank = t.scale(rank, 1.0 / n_pairs);

    // KL(L_hat || A) on anomalous sequences, differentiable through both the
    // locator target and the attention distribution
    ad::Var kl = zero;
    int n_kl = 0;
    for (int i = 0; i < n; ++i) {
        if (!seqs[i]->anomalous) continue;
        ad::Var u = t.add_scalar(t.transpose(fv[i].locator), kKlEps);  // 1 x n
        ad::Var lhat = t.mul_scalarvar(u, t.cwise_inv(t.sum(u)));
        ad::Var term = t.sum(t.cwise_mul(lhat, t.sub(t.log(lhat), t.log(fv[i].attn_dist))));
        kl = t.add(kl, term);
        ++n_kl;
    }
    if (n_kl > 0) kl = t.scale(kl, 1.0 / n_kl);

    // consistency hinge: re-detect with the highest-attention event removed
    ad::Var cons = zero;
    int n_cons = 0;
    for (int i = 0; i < n; ++i) {
        if (!seqs[i]->anomalous || seqs[i]->length() < 2) continue;
        const Matrix& ss = t.value(fv[i].signed_scores);
        int emax = 0;
        for (int j = 1; j < seqs[i]->length(); ++j)
            if (ss(0, j) > ss(0, emax)) emax = j;
        std::vector<char> active(seqs[i]->length(), 1);
        active[emax] = 0;
        FaithLogModel::ForwardVars fv2 = model.forward(t, embeds[i], active);
        cons = t.add(cons,
                     t.relu(t.add_scalar(t.sub(fv2.confidence, fv[i].confidence), 1.0)));
        ++n_cons;
    }
    if (n_cons > 0) cons = t.scale(cons, 1.0 / n_cons);

    BatchLossResult res;
    res.terms.ce = t.value(ce)(0, 0);
    res.terms.rank = t.value(rank)(0, 0);
    res.terms.kl = t.value(kl)(0, 0);
    res.terms.consistency = t.value(cons)(0, 0);
    res.total = t.add(t.add(t.scale(ce, weights.lambda1), t.scale(rank, weights.lambda2)),
                      t.add(t.scale(kl, weights.lambda3), t.scale(cons, weights.lambda4)));
    return res;
}

double f1_score(const FaithLogModel& model, const EmbeddingProvider& emb,
                const Dataset& data) {
    int tp = 0, fp = 0, fn = 0;
    for (const EventSequence& s : data) {
        DetectionResult r = model.detect(emb.embed_sequence(s));
        if (r.anomalous && s.anomalous) ++tp;
        else if (r.anomalous && !s.anomalous) ++fp;
        else if (!r.anomalous && s.anomalous) ++fn;
    }
    const double denom = 2.0 * tp + fp + fn;
    return denom == 0.0 ? 0.0 : 2.0 * tp / denom;
}

FitResult fit(FaithLogModel& model, EmbeddingProvider& emb, const Dataset& train,
              const Dataset* heldout, const TrainConfig& cfg) {
    cfg.validate();
    if (train.empty()) throw ConfigError("fit: empty training set");

    Dataset carved_train, carved_eval;
    const Dataset* train_ptr = &train;
    const Dataset* eval_ptr = heldout;
    if (!heldout) {
        std::tie(carved_train, carved_eval) = stratified_split(train, 0.9, cfg.seed);
        train_ptr = &carved_train;
        eval_ptr = &carved_eval;
    }

    bool has_normal = false, has_anom = false;
    for (const EventSequence& s : *train_ptr) (s.anomalous ? has_anom : has_normal) = true;
    if (cfg.weights.lambda2 > 0.0 && (!has_normal || !has_anom))
        throw ConfigError("fit: ranking loss requires both classes in the training set");

    const bool trainable = emb.mode() == EmbeddingMode::TrainableLookup;
    if (trainable) emb.ensure_vocabulary(*train_ptr);

    // cache embeddings in hash mode; look rows up through the table otherwise
    std::unordered_map<const EventSequence*, Matrix> cache;
    EmbedFn embed_fn;
    if (trainable) {
        embed_fn = [&](ad::Tape& t, const EventSequence& s) {
            std::vector<int> rows;
            rows.reserve(s.events.size());
            for (int id : s.events) rows.push_back(emb.row_of(id));
            return t.select_rows(t.param(emb.table(), &emb.table_grad()), rows);
        };
    } else {
        for (const EventSequence& s : *train_ptr) cache[&s] = emb.embed_sequence(s);
        embed_fn = [&](ad::Tape& t, const EventSequence& s) {
            auto it = cache.find(&s);
            return t.constant(it != cache.end() ? it->second : emb.embed_sequence(s));
        };
    }

    // Adam state, one slot per parameter in registry order
    struct Moment {
        Matrix m, v;
    };
    std::vector<Matrix*> values;
    std::vector<Matrix*> grads;
    model.for_each_param([&](Param& p) {
        values.push_back(&p.value);
        grads.push_back(&p.grad);
    });
    if (trainable) {
        values.push_back(&emb.table());
        grads.push_back(&emb.table_grad());
    }
    std::vector<Moment> moments(values.size());
    for (std::size_t i = 0; i < values.size(); ++i) {
        moments[i].m = Matrix::Zero(values[i]->rows(), values[i]->cols());
        moments[i].v = Matrix::Zero(values[i]->rows(), values[i]->cols());
    }
    const double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
    long step = 0;

    std::mt19937_64 rng(cfg.seed);
    FitResult result;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        auto batches = make_batches(*train_ptr, cfg.batch_size, rng);
        LossBreakdown sums;
        double total_sum = 0.0;
        for (const std::vector<int>& batch : batches) {
            std::vector<const EventSequence*> seqs;
            std::vector<int> normal_pos;
            for (int idx : batch) {
                seqs.push_back(&(*train_ptr)[idx]);
                if (!(*train_ptr)[idx].anomalous)
                    normal_pos.push_back(static_cast<int>(seqs.size()) - 1);
            }
            std::vector<int> rank_pairs(seqs.size(), -1);
            if (cfg.weights.lambda2 > 0.0 && !normal_pos.empty()) {
                std::uniform_int_distribution<std::size_t> pick(0, normal_pos.size() - 1);
                for (std::size_t i = 0; i < seqs.size(); ++i)
                    if (seqs[i]->anomalous) rank_pairs[i] = normal_pos[pick(rng)];
            }

            for (Matrix* g : grads) g->setZero();
            if (trainable && emb.table_grad().rows() != emb.table().rows())
                emb.table_grad() = Matrix::Zero(emb.table().rows(), emb.table().cols());

            ad::Tape tape;
            BatchLossResult bl =
                batch_loss(tape, model, seqs, embed_fn, cfg.weights, rank_pairs);
            tape.backward(bl.total);

            ++step;
            const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(step));
            const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(step));
            for (std::size_t i = 0; i < values.size(); ++i) {
                Moment& mo = moments[i];
                if (mo.m.rows() != values[i]->rows()) {  // grown embedding table
                    mo.m = Matrix::Zero(values[i]->rows(), values[i]->cols());
                    mo.v = Matrix::Zero(values[i]->rows(), values[i]->cols());
                }
                mo.m = beta1 * mo.m + (1.0 - beta1) * (*grads[i]);
                mo.v = beta2 * mo.v + (1.0 - beta2) * grads[i]->cwiseProduct(*grads[i]);
                Matrix mhat = mo.m / bc1;
                Matrix vhat = mo.v / bc2;
                values[i]->array() -=
                    cfg.learning_rate * mhat.array() / (vhat.array().sqrt() + adam_eps);
            }

            sums.ce += bl.terms.ce;
            sums.rank += bl.terms.rank;
            sums.kl += bl.terms.kl;
            sums.consistency += bl.terms.consistency;
            total_sum += tape.value(bl.total)(0, 0);
        }
        const double nb = static_cast<double>(batches.size());
        EpochLog el;
        el.epoch = epoch;
        el.total = total_sum / nb;
        el.ce = sums.ce / nb;
        el.rank = sums.rank / nb;
        el.kl = sums.kl / nb;
        el.consistency = sums.consistency / nb;
        el.heldout_f1 = eval_ptr && !eval_ptr->empty() ? f1_score(model, emb, *eval_ptr) : 0.0;
        result.log.push_back(el);
    }
    return result;
}

}  // namespace faithlog
