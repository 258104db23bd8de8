#include <doctest.h>

#include <random>

#include "faithlog/trainer.hpp"

using namespace faithlog;

namespace {

// Tiny batch for the check: one anomalous and one normal sequence, n = 3.
struct Fixture {
    FaithLogModel model;
    EmbeddingProvider emb{8};
    Dataset data;
    std::vector<const EventSequence*> seqs;
    std::vector<int> rank_pairs;
    LossWeights weights{1.0, 0.5, 0.5, 0.5};

    Fixture() : model(make_config()) {
        EventSequence anom;
        anom.sequence_id = "a";
        anom.events = {1, 5, 2};
        anom.anomalous = true;
        anom.root_cause_positions = {1};
        EventSequence norm;
        norm.sequence_id = "n";
        norm.events = {1, 2, 3};
        data = {anom, norm};
        seqs = {&data[0], &data[1]};
        rank_pairs = {1, -1};
    }

    static ModelConfig make_config() {
        ModelConfig c;
        c.d_model = 8;
        c.n_heads = 2;
        c.n_layers = 1;
        c.hidden = 8;
        c.seed = 21;
        return c;
    }

    EmbedFn embed_fn() {
        return [this](ad::Tape& t, const EventSequence& s) {
            return t.constant(emb.embed_sequence(s));
        };
    }

    double loss_value() {
        ad::Tape t;
        BatchLossResult r = batch_loss(t, model, seqs, embed_fn(), weights, rank_pairs);
        return t.value(r.total)(0, 0);
    }
};

}  // namespace

TEST_CASE("total-loss gradients match central finite differences per parameter group") {
    Fixture fx;

    fx.model.zero_grads();
    {
        ad::Tape t;
        BatchLossResult r =
            batch_loss(t, fx.model, fx.seqs, fx.embed_fn(), fx.weights, fx.rank_pairs);
        // all four terms must be live, otherwise the check is vacuous
        CHECK(r.terms.ce > 0.0);
        CHECK(r.terms.rank > 0.0);
        CHECK(r.terms.kl > 0.0);
        CHECK(r.terms.consistency > 0.0);
        t.backward(r.total);
    }

    const double step = 1e-5;
    fx.model.for_each_param([&](Param& p) {
        double group_worst = 0.0;
        // probe a bounded number of coordinates per group to keep runtime low
        const Eigen::Index total = p.value.size();
        const Eigen::Index probes = std::min<Eigen::Index>(total, 6);
        std::mt19937_64 rng(std::hash<std::string>{}(p.name));
        for (Eigen::Index k = 0; k < probes; ++k) {
            Eigen::Index flat = std::uniform_int_distribution<Eigen::Index>(0, total - 1)(rng);
            Eigen::Index r = flat % p.value.rows();
            Eigen::Index c = flat / p.value.rows();
            double keep = p.value(r, c);
            p.value(r, c) = keep + step;
            double up = fx.loss_value();
            p.value(r, c) = keep - step;
            double dn = fx.loss_value();
            p.value(r, c) = keep;
            double fd = (up - dn) / (2.0 * step);
            double analytic = p.grad(r, c);
            double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
            group_worst = std::max(group_worst, std::abs(fd - analytic) / denom);
        }
        INFO("parameter group ", p.name);
        CHECK(group_worst < 1e-4);
    });
}

TEST_CASE("trainable embedding table receives correct gradients") {
    Fixture fx;
    EmbeddingProvider emb(8, EmbeddingMode::TrainableLookup, 0, true);
    emb.ensure_vocabulary(fx.data);
    EmbedFn fn = [&](ad::Tape& t, const EventSequence& s) {
        std::vector<int> rows;
        for (int id : s.events) rows.push_back(emb.row_of(id));
        return t.select_rows(t.param(emb.table(), &emb.table_grad()), rows);
    };
    auto loss_value = [&]() {
        ad::Tape t;
        return t.value(batch_loss(t, fx.model, fx.seqs, fn, fx.weights, fx.rank_pairs).total)(0, 0);
    };

    fx.model.zero_grads();
    emb.table_grad().setZero();
    {
        ad::Tape t;
        t.backward(batch_loss(t, fx.model, fx.seqs, fn, fx.weights, fx.rank_pairs).total);
    }
    const double step = 1e-5;
    double worst = 0.0;
    for (int probe = 0; probe < 8; ++probe) {
        std::mt19937_64 rng(probe);
        Eigen::Index r = std::uniform_int_distribution<Eigen::Index>(0, emb.table().rows() - 1)(rng);
        Eigen::Index c = std::uniform_int_distribution<Eigen::Index>(0, 7)(rng);
        double keep = emb.table()(r, c);
        emb.table()(r, c) = keep + step;
        double up = loss_value();
        emb.table()(r, c) = keep - step;
        double dn = loss_value();
        emb.table()(r, c) = keep;
        double fd = (up - dn) / (2.0 * step);
        double analytic = emb.table_grad()(r, c);
        double denom = std::max({std::abs(fd), std::abs(analytic), 1e-6});
        worst = std::max(worst, std::abs(fd - analytic) / denom);
    }
    CHECK(worst < 1e-4);
}
