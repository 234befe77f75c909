#include <cmath>

#include <doctest.h>

#include "ekp/base_learner.hpp"
#include "ekp/errors.hpp"
#include "ekp/mkl.hpp"
#include "ekp/random.hpp"
#include "ekp/synthetic.hpp"
#include "oracles.hpp"

using namespace ekp;

namespace {

std::vector<KernelMatrix> kernel_pair(const DataSet& data) {
    std::vector<KernelSpec> specs = {{1, "gaussian", 0.5}, {2, "gaussian", 2.0}};
    return gaussian_kernel_set(data.features, data.features, specs);
}

DataSet classification_sample(int n, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    cfg.task = Task::classification;
    return make_synthetic(cfg);
}

}  // namespace

TEST_SUITE("fixed_weights") {

TEST_CASE("uniform weights split the cap evenly") {
    const Vector mu = uniform_weights(4, 1.0);
    CHECK(mu.size() == 4);
    CHECK(mu.isApproxToConstant(0.25, 1e-15));
    CHECK(uniform_weights(1, 3.0)(0) == 3.0);
    CHECK_THROWS_AS(uniform_weights(0, 1.0), DomainError);
    CHECK_THROWS_AS(uniform_weights(2, 0.0), DomainError);
}

TEST_CASE("alignment scores follow the hand-computed two-kernel case") {
    // K1 = [[1,-1],[-1,1]] is its own centered matrix with score 2;
    // the all-ones kernel centers to zero and scores 0.
    KernelMatrix k1, k2;
    k1.values.resize(2, 2);
    k1.values << 1, -1, -1, 1;
    k1.is_square = true;
    k1.spec_id = 1;
    k2.values = Matrix::Ones(2, 2);
    k2.is_square = true;
    k2.spec_id = 2;
    Vector y(2);
    y << 1, -1;
    const std::vector<KernelMatrix> kernels = {k1, k2};

    bool fallback = true;
    const Vector mu = align_weights(kernels, y, 1.0, &fallback);
    CHECK_FALSE(fallback);
    CHECK(mu(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(mu(1) == doctest::Approx(0.0).epsilon(1e-12));

    const Vector muf = alignf_weights(kernels, y, 1.0, &fallback);
    CHECK_FALSE(fallback);
    CHECK(muf(0) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(muf(1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("duplicated kernels split align weight equally") {
    const DataSet data = classification_sample(20, 1);
    auto kernels = kernel_pair(data);
    kernels.push_back(kernels[0]);
    const Vector mu = align_weights(kernels, data.labels, 1.0);
    CHECK(mu(0) == doctest::Approx(mu(2)).epsilon(1e-12));
    CHECK(mu.sum() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("single kernel gets the whole cap from both methods") {
    const DataSet data = classification_sample(15, 2);
    std::vector<KernelSpec> spec = {{1, "gaussian", 1.0}};
    const auto kernels = gaussian_kernel_set(data.features, data.features, spec);
    CHECK(align_weights(kernels, data.labels, 2.0)(0) == doctest::Approx(2.0));
    CHECK(alignf_weights(kernels, data.labels, 2.0)(0) == doctest::Approx(2.0));
}

TEST_CASE("alignf maximizes centered alignment over the weight simplex") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const DataSet data = classification_sample(25, seed + 10);
        const auto kernels = kernel_pair(data);
        const Vector mu = alignf_weights(kernels, data.labels, 1.0);
        const double ours = centered_alignment(kernels, mu, data.labels);

        // alignment is scale-invariant, so a grid over the cap simplex suffices
        const double best = -oracle::grid_min_2d(
            [&](double a, double b) {
                Vector v(2);
                v << a, b;
                return v.lpNorm<1>() < 1e-6
                           ? 0.0
                           : -centered_alignment(kernels, v, data.labels);
            },
            [](double, double) { return true; }, 1.0, 1.0);
        CHECK(ours >= best - 1e-6);
    }
}

TEST_CASE("alignf dominates align and unif in centered alignment") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const DataSet data = classification_sample(30, seed + 40);
        std::vector<KernelSpec> specs;
        const int p = 2 + static_cast<int>(seed % 4);
        for (int k = 0; k < p; ++k)
            specs.push_back({k + 1, "gaussian", std::ldexp(1.0, k - 2)});
        const auto kernels = gaussian_kernel_set(data.features, data.features, specs);
        const Vector& y = data.labels;
        const double a_unif = centered_alignment(kernels, uniform_weights(p, 1.0), y);
        const double a_align = centered_alignment(kernels, align_weights(kernels, y, 1.0), y);
        const double a_alignf = centered_alignment(kernels, alignf_weights(kernels, y, 1.0), y);
        CHECK(a_alignf >= a_align - 1e-9);
        CHECK(a_alignf >= a_unif - 1e-9);
    }
}

TEST_CASE("weight pickers are bitwise deterministic") {
    const DataSet data = classification_sample(20, 60);
    const auto kernels = kernel_pair(data);
    const Vector a1 = align_weights(kernels, data.labels, 1.0);
    const Vector a2 = align_weights(kernels, data.labels, 1.0);
    CHECK((a1 - a2).lpNorm<Eigen::Infinity>() == 0.0);
    const Vector f1 = alignf_weights(kernels, data.labels, 1.0);
    const Vector f2 = alignf_weights(kernels, data.labels, 1.0);
    CHECK((f1 - f2).lpNorm<Eigen::Infinity>() == 0.0);
}

}  // TEST_SUITE

TEST_SUITE("os_svm") {

TEST_CASE("single kernel reduces to an SVM on the trace-rescaled kernel") {
    const DataSet data = classification_sample(30, 3);
    std::vector<KernelSpec> spec = {{1, "gaussian", 1.0}};
    const auto kernels = gaussian_kernel_set(data.features, data.features, spec);
    const MKLModel model = train_os_svm(kernels, data.labels, 1.0, 1.0);

    const double trace = kernels[0].values.trace();
    CHECK(model.mu(0) == doctest::Approx(1.0 / trace).epsilon(1e-6));

    KernelMatrix rescaled = kernels[0];
    rescaled.values *= 1.0 / trace;
    rescaled.spec_id = kCombinedKernelId;
    const SvmSolution direct = solve_svm_dual(rescaled, data.labels, 1.0);
    CHECK(model.objective_trace.back() ==
          doctest::Approx(2.0 * direct.dual_objective).epsilon(1e-4));
}

TEST_CASE("the label kernel crowds out a noise kernel") {
    const DataSet data = classification_sample(24, 4);
    KernelMatrix label_kernel;
    label_kernel.values = data.labels * data.labels.transpose();
    label_kernel.is_square = true;
    label_kernel.spec_id = 1;
    // a narrow-bandwidth kernel is near-identity: uninformative for these labels
    const KernelMatrix noise =
        gaussian_kernel_matrix(data.features, data.features, 8.0, 2);
    const std::vector<KernelMatrix> kernels = {label_kernel, noise};

    const MKLModel model = train_os_svm(kernels, data.labels, 1.0, 1.0);
    CHECK(model.mu(0) * label_kernel.values.trace() >= 0.9);
}

TEST_CASE("weights stay feasible and the trace never increases") {
    const DataSet data = classification_sample(26, 5);
    const auto kernels = kernel_pair(data);
    const MKLModel model = train_os_svm(kernels, data.labels, 1.0, 2.0);
    CHECK(model.mu.minCoeff() >= 0.0);
    double weighted = 0.0;
    for (int k = 0; k < 2; ++k)
        weighted += model.mu(k) * kernels[static_cast<std::size_t>(k)].values.trace();
    CHECK(weighted <= 2.0 * (1.0 + 1e-9));
    REQUIRE(model.objective_trace.size() >= 1);
    for (std::size_t i = 1; i < model.objective_trace.size(); ++i)
        CHECK(model.objective_trace[i] <=
              model.objective_trace[i - 1] + 1e-9 * (1.0 + std::abs(model.objective_trace[i - 1])));
}

TEST_CASE("final objective matches an exhaustive grid over the weight polytope") {
    const DataSet data = classification_sample(22, 6);
    const auto kernels = kernel_pair(data);
    const double cap = 1.0;
    const double t1 = kernels[0].values.trace();
    const double t2 = kernels[1].values.trace();

    SvmOptions tight;
    tight.kkt_tol = 1e-6;
    tight.gap_tol = 1e-6;
    auto j_at = [&](double m1, double m2) {
        Vector mu(2);
        mu << m1, m2;
        const KernelMatrix combined = combine_kernels(mu, kernels);
        return 2.0 * solve_svm_dual(combined, data.labels, 1.0, tight).dual_objective;
    };
    const double grid_best = oracle::grid_min_2d(
        j_at, [&](double a, double b) { return a * t1 + b * t2 <= cap * (1 + 1e-12); },
        cap / t1, cap / t2, 21, 5);

    const MKLModel model = train_os_svm(kernels, data.labels, 1.0, cap);
    CHECK(model.objective_trace.back() <=
          grid_best + 1e-3 * (1.0 + std::abs(grid_best)));
}

TEST_CASE("binary labels are required") {
    const DataSet data = classification_sample(10, 7);
    const auto kernels = kernel_pair(data);
    Vector real_labels = Vector::LinSpaced(10, -0.5, 0.5);
    CHECK_THROWS_AS(train_os_svm(kernels, real_labels, 1.0, 1.0), DomainError);
}

}  // TEST_SUITE

TEST_SUITE("os_krr") {

namespace {

DataSet regression_sample(int n, std::uint64_t seed) {
    SyntheticConfig cfg;
    cfg.n = n;
    cfg.seed = seed;
    cfg.task = Task::regression;
    return make_synthetic(cfg);
}

double ridge_j(const std::vector<KernelMatrix>& kernels, const Vector& mu,
               const Vector& y, double lambda) {
    const KernelMatrix combined = combine_kernels(mu, kernels);
    const Eigen::Index m = y.size();
    return y.dot((combined.values + lambda * Matrix::Identity(m, m)).ldlt().solve(y));
}

}  // namespace

TEST_CASE("single kernel takes the full cap") {
    const DataSet data = regression_sample(25, 8);
    std::vector<KernelSpec> spec = {{1, "gaussian", 1.0}};
    const auto kernels = gaussian_kernel_set(data.features, data.features, spec);
    const MKLModel model = train_os_krr(kernels, data.labels, 0.5, 2.0);
    CHECK(model.mu(0) == doctest::Approx(2.0).epsilon(1e-5));

    // 1-D grid over the cap interval never beats the returned objective
    double grid_best = std::numeric_limits<double>::infinity();
    for (int t = 0; t <= 400; ++t) {
        Vector mu(1);
        mu << 2.0 * t / 400.0;
        grid_best = std::min(grid_best, ridge_j(kernels, mu, data.labels, 0.5));
    }
    CHECK(model.objective_trace.back() <= grid_best + 1e-6 * (1.0 + grid_best));
}

TEST_CASE("identical kernels pool their weight on the symmetric point") {
    // J depends on the weight sum only; under the L2 cap the feasible maximum
    // of the sum sits at the symmetric point with sum = sqrt(2) * cap, so the
    // two-kernel optimum matches a single-kernel run at that enlarged cap.
    const DataSet data = regression_sample(20, 9);
    std::vector<KernelSpec> spec = {{1, "gaussian", 1.0}};
    auto kernels = gaussian_kernel_set(data.features, data.features, spec);
    const MKLModel single =
        train_os_krr(kernels, data.labels, 1.0, std::sqrt(2.0));

    auto duplicated = kernels;
    duplicated.push_back(kernels[0]);
    duplicated.back().spec_id = 2;
    const MKLModel pair = train_os_krr(duplicated, data.labels, 1.0, 1.0);

    CHECK(pair.objective_trace.back() ==
          doctest::Approx(single.objective_trace.back()).epsilon(1e-6));
    // J is constant along mu_1 + mu_2 = const: check arc invariance directly
    Vector left(2), mid(2);
    left << 1.0, 0.2;
    mid << 0.6, 0.6;
    CHECK(ridge_j(duplicated, left, data.labels, 1.0) ==
          doctest::Approx(ridge_j(duplicated, mid, data.labels, 1.0)).epsilon(1e-9));
}

TEST_CASE("huge regularization sends J to y'y/lambda") {
    const DataSet data = regression_sample(15, 10);
    const auto kernels = kernel_pair(data);
    const MKLModel model = train_os_krr(kernels, data.labels, 1e12, 1.0);
    const double j = model.objective_trace.back();
    CHECK(std::abs(j * 1e12 / data.labels.squaredNorm() - 1.0) <= 1e-3);
}

TEST_CASE("weights stay feasible and the trace never increases") {
    const DataSet data = regression_sample(24, 11);
    const auto kernels = kernel_pair(data);
    const MKLModel model = train_os_krr(kernels, data.labels, 0.3, 1.5);
    CHECK(model.mu.minCoeff() >= 0.0);
    CHECK(model.mu.norm() <= 1.5 * (1.0 + 1e-9));
    REQUIRE(model.objective_trace.size() >= 1);
    for (std::size_t i = 1; i < model.objective_trace.size(); ++i)
        CHECK(model.objective_trace[i] <=
              model.objective_trace[i - 1] + 1e-9 * (1.0 + std::abs(model.objective_trace[i - 1])));
    CHECK(model.objective_trace.back() ==
          doctest::Approx(ridge_j(kernels, model.mu, data.labels, 0.3)).epsilon(1e-9));
}

TEST_CASE("final objective matches an exhaustive grid over the quarter disk") {
    const DataSet data = regression_sample(28, 12);
    const auto kernels = kernel_pair(data);
    const double cap = 1.0, lambda = 0.5;
    auto j_at = [&](double a, double b) {
        Vector mu(2);
        mu << a, b;
        return ridge_j(kernels, mu, data.labels, lambda);
    };
    const double grid_best = oracle::grid_min_2d(
        j_at,
        [&](double a, double b) { return a * a + b * b <= cap * cap * (1 + 1e-12); },
        cap, cap, 33, 6);
    const MKLModel model = train_os_krr(kernels, data.labels, lambda, cap);
    CHECK(model.objective_trace.back() <=
          grid_best + 1e-3 * (1.0 + std::abs(grid_best)));
}

TEST_CASE("the stored predictor evaluates ridge on the combined kernel") {
    const DataSet data = regression_sample(18, 13);
    const auto kernels = kernel_pair(data);
    const MKLModel model = train_os_krr(kernels, data.labels, 0.5, 1.0);
    const KernelMatrix combined = combine_kernels(model.mu, kernels);
    const Vector scores = predict(model.predictor, combined);
    const Eigen::Index m = data.size();
    const Vector alpha =
        (combined.values + 0.5 * Matrix::Identity(m, m)).ldlt().solve(data.labels);
    CHECK((scores - combined.values * alpha).lpNorm<Eigen::Infinity>() <= 1e-6);
}

}  // TEST_SUITE
