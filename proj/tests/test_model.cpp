#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>

#include "faithlog/autodiff.hpp"
#include "faithlog/embedding.hpp"
#include "faithlog/model.hpp"

using namespace faithlog;

namespace {

ModelConfig tiny_config(std::uint64_t seed = 1) {
    ModelConfig c;
    c.d_model = 8;
    c.n_heads = 2;
    c.n_layers = 1;
    c.hidden = 8;
    c.seed = seed;
    return c;
}

Matrix random_embeddings(int n, int d, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 0.5);
    Matrix m(n, d);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) m(i, j) = g(rng);
    return m;
}

// Copies the positive-pathway projections over the negative ones so the
// dual-attention difference cancels exactly.
void mirror_pathways(FaithLogModel& model) {
    std::map<std::string, Matrix> pos;
    model.for_each_param([&](Param& p) {
        auto at = p.name.find(".pos.");
        if (at != std::string::npos) pos[p.name] = p.value;
    });
    model.for_each_param([&](Param& p) {
        auto at = p.name.find(".neg.");
        if (at == std::string::npos) return;
        std::string key = p.name;
        key.replace(at, 5, ".pos.");
        p.value = pos.at(key);
    });
}

}  // namespace

TEST_CASE("positional encoding matches the closed form") {
    // i = 0: even components sin(0) = 0, odd components cos(0) = 1
    Vector p0 = positional_encoding(0, 12);
    for (int j = 0; j < 6; ++j) {
        CHECK(p0(2 * j) == 0.0);
        CHECK(p0(2 * j + 1) == 1.0);
    }
    Vector p1 = positional_encoding(1, 4);
    CHECK(p1(0) == doctest::Approx(0.841471).epsilon(1e-6));
    CHECK(p1(1) == doctest::Approx(0.540302).epsilon(1e-6));
    CHECK(p1(2) == doctest::Approx(0.0099998).epsilon(1e-4));
    CHECK(p1(3) == doctest::Approx(0.99995).epsilon(1e-6));
    CHECK_THROWS_AS(positional_encoding(1, 5), ConfigError);
}

TEST_CASE("positional encoding agrees with direct evaluation at random points") {
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> pos(0, 500);
    std::uniform_int_distribution<int> dim(1, 64);
    for (int trial = 0; trial < 100; ++trial) {
        int d = 2 * dim(rng);
        int i = pos(rng);
        Vector p = positional_encoding(i, d);
        int j = std::uniform_int_distribution<int>(0, d / 2 - 1)(rng);
        long double angle = static_cast<long double>(i) /
                            std::pow(10000.0L, (2.0L * j) / static_cast<long double>(d));
        CHECK(std::abs(p(2 * j) - static_cast<double>(std::sin(angle))) < 1e-9);
        CHECK(std::abs(p(2 * j + 1) - static_cast<double>(std::cos(angle))) < 1e-9);
    }
}

TEST_CASE("signed scores: bounded, zero-sum with dual pathway, unit-sum without") {
    Matrix E = random_embeddings(6, 8, 3);

    FaithLogModel dual(tiny_config(2));
    DetectionResult r = dual.detect(E);
    CHECK(r.attention.signed_scores.sum() == doctest::Approx(0.0).epsilon(1e-9));
    for (int i = 0; i < 6; ++i) {
        CHECK(r.attention.signed_scores(i) >= -1.0);
        CHECK(r.attention.signed_scores(i) <= 1.0);
    }
    CHECK(r.attention.distribution.sum() == doctest::Approx(1.0).epsilon(1e-9));

    ModelConfig cfg = tiny_config(2);
    cfg.negative_pathway = false;
    FaithLogModel single(cfg);
    DetectionResult rs = single.detect(E);
    CHECK(rs.attention.signed_scores.sum() == doctest::Approx(1.0).epsilon(1e-9));
    for (int i = 0; i < 6; ++i) CHECK(rs.attention.signed_scores(i) >= 0.0);
}

TEST_CASE("identical pathways cancel: zero attention output and zero signed scores") {
    FaithLogModel model(tiny_config(4));
    mirror_pathways(model);
    Matrix E = random_embeddings(5, 8, 9);
    DetectionResult r = model.detect(E);
    for (int i = 0; i < 5; ++i)
        CHECK(std::abs(r.attention.signed_scores(i)) <= 1e-6);
}

TEST_CASE("single-event sequence: scalar softmax") {
    FaithLogModel model(tiny_config(5));
    Matrix E = random_embeddings(1, 8, 1);
    DetectionResult r = model.detect(E);
    CHECK(r.attention.distribution(0) == doctest::Approx(1.0));
    // pos mass = 1 and neg mass = w with w in [0,1]
    CHECK(r.attention.signed_scores(0) <= 1.0);
    CHECK(r.attention.signed_scores(0) >= -1.0);

    mirror_pathways(model);
    DetectionResult rz = model.detect(E);
    CHECK(rz.attention.signed_scores(0) == doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("detect is deterministic and bounded") {
    FaithLogModel model(tiny_config(6));
    Matrix E = random_embeddings(7, 8, 2);
    DetectionResult a = model.detect(E);
    DetectionResult b = model.detect(E);
    CHECK(a.confidence == b.confidence);
    CHECK(a.confidence > 0.0);
    CHECK(a.confidence < 1.0);
    CHECK(a.locator_scores.size() == 7);
    for (int i = 0; i < 7; ++i) {
        CHECK(a.locator_scores(i) >= 0.0);
        CHECK(a.locator_scores(i) <= 1.0);
    }
    FaithLogModel same_seed(tiny_config(6));
    CHECK(same_seed.detect(E).confidence == a.confidence);
}

TEST_CASE("locator head is position-wise: permuting feature rows permutes scores") {
    FaithLogModel model(tiny_config(7));
    Matrix F = random_embeddings(4, 8, 3);
    Vector l = model.locate(F);
    for (int i = 0; i < 4; ++i) {
        CHECK(l(i) >= 0.0);
        CHECK(l(i) <= 1.0);
    }
    Matrix P = F;
    P.row(0) = F.row(3);
    P.row(3) = F.row(0);
    Vector lp = model.locate(P);
    CHECK(lp(0) == l(3));
    CHECK(lp(3) == l(0));
    CHECK(lp(1) == l(1));
}

TEST_CASE("remove_event masks and renormalizes") {
    FaithLogModel model(tiny_config(8));
    Matrix E = random_embeddings(5, 8, 4);
    std::vector<char> all(5, 1);
    auto masked = FaithLogModel::remove_event(all, 2);
    REQUIRE(masked.has_value());
    DetectionResult r = model.detect(E, &*masked);
    double total = 0.0;
    for (int i = 0; i < 5; ++i) {
        if (i == 2) CHECK(r.attention.distribution(i) == 0.0);
        total += r.attention.distribution(i);
    }
    CHECK(total == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.attention.argmax_index != 2);

    CHECK_THROWS_AS(FaithLogModel::remove_event(all, 9), InputError);
    std::vector<char> one(1, 1);
    CHECK_FALSE(FaithLogModel::remove_event(one, 0).has_value());
}

TEST_CASE("masked 2-event detect equals 1-active-event detect at same position") {
    FaithLogModel model(tiny_config(9));
    Matrix E = random_embeddings(2, 8, 5);
    std::vector<char> keep_second = {0, 1};
    DetectionResult masked = model.detect(E, &keep_second);
    // same matrix, row 0 replaced by arbitrary content; must not matter
    Matrix E2 = E;
    E2.row(0).setConstant(3.14);
    DetectionResult replaced = model.detect(E2, &keep_second);
    CHECK(masked.confidence == doctest::Approx(replaced.confidence).epsilon(1e-12));
    CHECK(masked.attention.signed_scores(1) ==
          doctest::Approx(replaced.attention.signed_scores(1)).epsilon(1e-12));
}

TEST_CASE("attention rows sum to one in every layer and pathway") {
    // exercised through the tape: run a forward pass and inspect softmax
    // outputs indirectly via the invariants already checked above; here we
    // check the full-profile invariant on a larger model
    ModelConfig cfg;
    cfg.d_model = 16;
    cfg.n_heads = 4;
    cfg.n_layers = 2;
    cfg.hidden = 16;
    cfg.seed = 10;
    FaithLogModel model(cfg);
    Matrix E = random_embeddings(9, 16, 6);
    DetectionResult r = model.detect(E);
    CHECK(r.attention.distribution.sum() == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(r.attention.signed_scores.sum() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("checkpoint round-trip is bitwise") {
    FaithLogModel model(tiny_config(11));
    auto path = std::filesystem::temp_directory_path() / "faithlog_ckpt_test.txt";
    save_checkpoint(path.string(), model, "deadbeef");
    std::string run_id;
    FaithLogModel loaded = load_checkpoint(path.string(), &run_id);
    CHECK(run_id == "deadbeef");
    Matrix E = random_embeddings(4, 8, 7);
    CHECK(loaded.detect(E).confidence == model.detect(E).confidence);

    bool identical = true;
    std::vector<const Param*> a, b;
    model.for_each_param([&](const Param& p) { a.push_back(&p); });
    loaded.for_each_param([&](const Param& p) { b.push_back(&p); });
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i]->value != b[i]->value) identical = false;
    CHECK(identical);
    std::filesystem::remove(path);
}

TEST_CASE("checkpoint with edited shape fails to load") {
    FaithLogModel model(tiny_config(12));
    auto path = std::filesystem::temp_directory_path() / "faithlog_ckpt_bad.txt";
    save_checkpoint(path.string(), model);
    // corrupt: change d_model in the header without changing arrays
    std::ifstream in(path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    in.close();
    auto at = content.find("d_model 8");
    REQUIRE(at != std::string::npos);
    content.replace(at, 9, "d_model 4");
    std::ofstream out(path);
    out << content;
    out.close();
    CHECK_THROWS_AS(load_checkpoint(path.string()), CheckpointError);
    std::filesystem::remove(path);
}

TEST_CASE("empty and mismatched inputs are rejected") {
    FaithLogModel model(tiny_config(13));
    Matrix empty(0, 8);
    CHECK_THROWS_AS(model.detect(empty), InputError);
    Matrix wrong = random_embeddings(3, 6, 1);
    CHECK_THROWS_AS(model.detect(wrong), ShapeError);
}
