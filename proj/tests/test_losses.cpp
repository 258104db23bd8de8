#include <doctest.h>

#include <cmath>
#include <random>

#include "faithlog/losses.hpp"

using namespace faithlog;

TEST_CASE("cross-entropy worked examples") {
    CHECK(ce_loss({1.0 - kProbEps}, {1}) == doctest::Approx(0.0).epsilon(1e-6));
    CHECK(ce_loss({0.5}, {1}) == doctest::Approx(std::log(2.0)).epsilon(1e-9));
    CHECK(ce_loss({0.5, 0.5}, {1, 0}) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-9));
    // clamping keeps saturated confidences finite
    CHECK(std::isfinite(ce_loss({1.0}, {0})));
    CHECK(std::isfinite(ce_loss({0.0}, {1})));
    CHECK_THROWS_AS(ce_loss({0.5}, {1, 0}), ShapeError);
}

TEST_CASE("ranking hinge worked examples") {
    Vector zero(1), one(1), half(1), p1(1), p9(1);
    zero << 0.0;
    one << 1.0;
    half << 0.5;
    p1 << 0.1;
    p9 << 0.9;
    CHECK(rank_loss_pair(zero, one) == doctest::Approx(0.0));
    CHECK(rank_loss_pair(half, half) == doctest::Approx(1.0));
    CHECK(rank_loss_pair(p9, p1) == doctest::Approx(1.8));
    // only the per-sequence maxima matter
    Vector multi(3);
    multi << 0.1, 0.9, 0.3;
    CHECK(rank_loss_pair(multi, one) == doctest::Approx(0.9));
    CHECK_THROWS_AS(rank_loss_pair(Vector(), one), ShapeError);
}

TEST_CASE("KL alignment worked examples") {
    Vector a2(2);
    a2 << 0.5, 0.5;
    Vector same(2);
    same << 0.3, 0.3;  // normalizes to (0.5, 0.5)
    CHECK(kl_loss(same, a2) == doctest::Approx(0.0).epsilon(1e-9));

    Vector onehot(2);
    onehot << 1.0, 0.0;
    CHECK(kl_loss(onehot, a2) == doctest::Approx(std::log(2.0)).epsilon(1e-3));
    CHECK_THROWS_AS(kl_loss(onehot, Vector::Ones(3)), ShapeError);
}

TEST_CASE("KL is non-negative for random valid pairs") {
    std::mt19937_64 rng(77);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        int n = 2 + static_cast<int>(u(rng) * 8);
        Vector l(n), a(n);
        for (int i = 0; i < n; ++i) {
            l(i) = u(rng);
            a(i) = u(rng) + 1e-3;
        }
        a /= a.sum();
        CHECK(kl_loss(l, a) >= -1e-12);
    }
}

TEST_CASE("consistency hinge worked examples and bounds") {
    CHECK(consistency_loss(1.0, 0.0) == doctest::Approx(0.0));
    CHECK(consistency_loss(0.4, 0.4) == doctest::Approx(1.0));
    CHECK(consistency_loss(0.0, 1.0) == doctest::Approx(2.0));
    for (double p : {0.0, 0.3, 0.9, 1.0})
        for (double pp : {0.0, 0.2, 0.8, 1.0}) {
            double v = consistency_loss(p, pp);
            CHECK(v >= 0.0);
            CHECK(v <= 2.0);
        }
}

TEST_CASE("combined objective is the weighted sum of terms") {
    LossBreakdown terms;
    terms.ce = 0.5;
    terms.rank = 1.0;
    terms.kl = 0.0;
    terms.consistency = 2.0;
    LossWeights all_one{1.0, 1.0, 1.0, 1.0};
    CHECK(terms.total(all_one) == doctest::Approx(3.5));

    LossWeights ce_only{1.0, 0.0, 0.0, 0.0};
    CHECK(terms.total(ce_only) == doctest::Approx(terms.ce));

    LossWeights doubled{2.0, 2.0, 2.0, 2.0};
    CHECK(terms.total(doubled) == doctest::Approx(2.0 * terms.total(all_one)));

    LossWeights bad{0.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    LossWeights neg{1.0, -0.1, 0.0, 0.0};
    CHECK_THROWS_AS(neg.validate(), ConfigError);
}
