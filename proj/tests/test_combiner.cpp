#include <cmath>

#include <doctest.h>

#include "ekp/combiner.hpp"
#include "ekp/errors.hpp"
#include "ekp/random.hpp"
#include "oracles.hpp"

using namespace ekp;

namespace {

Vector random_vec(int n, std::uint64_t seed, double lo = -2.0, double hi = 2.0) {
    Rng rng(seed);
    Vector v(n);
    for (int i = 0; i < n; ++i) v(i) = rng.uniform(lo, hi);
    return v;
}

/// Projection optimality: no sampled feasible point may be closer to v.
template <class Feasible>
void check_projection(const Vector& v, const Vector& proj, Feasible feasible,
                      std::uint64_t seed) {
    REQUIRE(feasible(proj));
    const double dist = (proj - v).norm();
    Rng rng(seed);
    for (int t = 0; t < 500; ++t) {
        Vector z = proj;
        for (Eigen::Index i = 0; i < z.size(); ++i)
            z(i) = std::max(0.0, z(i) + rng.uniform(-0.5, 0.5));
        if (!feasible(z)) continue;
        CHECK(dist <= (z - v).norm() + 1e-10);
    }
}

}  // namespace

TEST_SUITE("projections") {

TEST_CASE("simplex-capped projection is feasible and optimal") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int n = 2 + static_cast<int>(seed % 4);
        const Vector v = random_vec(n, seed + 10);
        const double cap = 0.5 + 0.25 * static_cast<double>(seed % 3);
        const Vector proj = project_nonneg_l1(v, cap);
        check_projection(v, proj, [&](const Vector& z) {
            return z.minCoeff() >= -1e-12 && z.lpNorm<1>() <= cap + 1e-10;
        }, seed + 500);
    }
    SUBCASE("interior points are fixed points") {
        Vector v(2);
        v << 0.1, 0.2;
        CHECK((project_nonneg_l1(v, 1.0) - v).lpNorm<Eigen::Infinity>() <= 1e-15);
    }
    SUBCASE("known value on the boundary") {
        Vector v(2);
        v << 1.0, 1.0;
        const Vector proj = project_nonneg_l1(v, 1.0);
        CHECK(proj(0) == doctest::Approx(0.5).epsilon(1e-12));
        CHECK(proj(1) == doctest::Approx(0.5).epsilon(1e-12));
    }
}

TEST_CASE("ball-capped projection clips then rescales") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int n = 2 + static_cast<int>(seed % 4);
        const Vector v = random_vec(n, seed + 30);
        const Vector proj = project_nonneg_l2(v, 1.0);
        check_projection(v, proj, [&](const Vector& z) {
            return z.minCoeff() >= -1e-12 && z.norm() <= 1.0 + 1e-10;
        }, seed + 600);
    }
}

TEST_CASE("weighted-cap projection handles uneven weights") {
    for (std::uint64_t seed = 0; seed < 8; ++seed) {
        const int n = 2 + static_cast<int>(seed % 4);
        const Vector v = random_vec(n, seed + 70);
        const Vector w = random_vec(n, seed + 90, 0.5, 4.0);
        const double cap = 1.0;
        const Vector proj = project_nonneg_weighted_l1(v, w, cap);
        check_projection(v, proj, [&](const Vector& z) {
            return z.minCoeff() >= -1e-12 && w.dot(z) <= cap + 1e-10;
        }, seed + 700);
    }
    SUBCASE("uniform weights reduce to the plain simplex cap") {
        const Vector v = random_vec(4, 123);
        const Vector w = Vector::Ones(4);
        const Vector a = project_nonneg_weighted_l1(v, w, 1.0);
        const Vector b = project_nonneg_l1(v, 1.0);
        CHECK((a - b).lpNorm<Eigen::Infinity>() <= 1e-12);
    }
}

}  // TEST_SUITE

TEST_SUITE("combiner") {

TEST_CASE("loss names round-trip") {
    CHECK(parse_loss(loss_name(Loss::hinge)) == Loss::hinge);
    CHECK(parse_loss(loss_name(Loss::square)) == Loss::square);
    CHECK_THROWS_AS(parse_loss("absolute"), ParseError);
}

TEST_CASE("objective is the plain unnormalized sum of losses") {
    Matrix p(3, 2);
    p << 1, 0, 0, 1, 1, 1;
    Vector y(3);
    y << 1, -1, 1;
    Vector mu(2);
    mu << 0.5, 0.25;
    CHECK(combiner_objective(p, y, mu, Loss::square) ==
          doctest::Approx(oracle::combo_loss(p, y, mu, Loss::square)).epsilon(1e-14));
    CHECK(combiner_objective(p, y, mu, Loss::hinge) ==
          doctest::Approx(oracle::combo_loss(p, y, mu, Loss::hinge)).epsilon(1e-14));
}

TEST_CASE("perfect column takes all the weight under square loss") {
    Rng rng(5);
    const int m = 25;
    Vector y(m);
    for (int i = 0; i < m; ++i) y(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
    Matrix p(m, 2);
    p.col(0) = y;
    p.col(1) = -y;
    for (const int q : {1, 2}) {
        const CombinerWeights w = fit_combiner(p, y, q, 1.0, Loss::square);
        CHECK(w.mu(0) == doctest::Approx(1.0).epsilon(1e-6));
        CHECK(w.mu(1) == doctest::Approx(0.0).epsilon(1e-6));
    }
}

TEST_CASE("single perfect column is rescaled to exactly one") {
    const Vector y = random_vec(20, 77);
    Matrix p(20, 1);
    p.col(0) = y;
    const CombinerWeights w = fit_combiner(p, y, 1, 100.0, Loss::square);
    CHECK(w.mu(0) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("square loss is certified against the refined grid oracle") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const int p = 1 + static_cast<int>(seed % 3);
        const int m = 10 + static_cast<int>(seed) * 5;  // up to 35
        Rng rng(seed + 11);
        Matrix pred(m, p);
        for (Eigen::Index i = 0; i < pred.size(); ++i) pred(i) = rng.gaussian();
        const Vector y = random_vec(m, seed + 21);
        const double cap = seed % 2 == 0 ? 1.0 : 2.0;
        for (const int q : {1, 2}) {
            const CombinerWeights w = fit_combiner(pred, y, q, cap, Loss::square);
            const double ours = combiner_objective(pred, y, w.mu, Loss::square);
            const double opt = oracle::grid_min_combiner(pred, y, q, cap, Loss::square);
            CHECK(ours <= opt + 1e-6 * (1.0 + std::abs(opt)));
            const double norm = q == 1 ? w.mu.lpNorm<1>() : w.mu.norm();
            CHECK(norm <= cap * (1.0 + 1e-9));
            CHECK(w.mu.minCoeff() >= 0.0);
        }
    }
}

TEST_CASE("hinge loss is certified against the refined grid oracle") {
    for (std::uint64_t seed = 0; seed < 6; ++seed) {
        const int p = 1 + static_cast<int>(seed % 3);
        const int m = 12 + static_cast<int>(seed) * 5;
        Rng rng(seed + 31);
        Matrix pred(m, p);
        for (Eigen::Index i = 0; i < pred.size(); ++i) pred(i) = rng.gaussian();
        Vector y(m);
        for (int i = 0; i < m; ++i) y(i) = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double cap = seed % 2 == 0 ? 1.0 : 2.0;
        for (const int q : {1, 2}) {
            const CombinerWeights w = fit_combiner(pred, y, q, cap, Loss::hinge);
            const double ours = combiner_objective(pred, y, w.mu, Loss::hinge);
            const double opt = oracle::grid_min_combiner(pred, y, q, cap, Loss::hinge);
            CHECK(ours <= opt + 1e-6 * (1.0 + std::abs(opt)));
        }
    }
}

TEST_CASE("input validation") {
    Matrix p(3, 2);
    p.setOnes();
    Vector y(3);
    y << 1, -1, 1;
    CHECK_THROWS_AS(fit_combiner(p, y, 3, 1.0, Loss::square), DomainError);
    CHECK_THROWS_AS(fit_combiner(p, y, 1, 0.0, Loss::square), DomainError);
    Vector real_y(3);
    real_y << 0.5, 2.0, -1.0;
    CHECK_THROWS_AS(fit_combiner(p, real_y, 1, 1.0, Loss::hinge), DomainError);
    Vector short_y(2);
    short_y << 1, -1;
    CHECK_THROWS_AS(fit_combiner(p, short_y, 1, 1.0, Loss::square), ShapeError);
}

TEST_CASE("prediction applies the learned weights") {
    Matrix p(3, 2);
    p << 1, 2, 3, 4, 5, 6;
    CombinerWeights w;
    w.mu.resize(2);
    w.mu << 0.5, 0.25;
    const Vector scores = predict_combination(w, p);
    CHECK(scores(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(scores(2) == doctest::Approx(4.0).epsilon(1e-14));
}

}  // TEST_SUITE
