#include "ekp/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Cholesky>

#include "ekp/errors.hpp"
#include "ekp/random.hpp"

namespace ekp {

namespace {

std::vector<int> shuffled(std::vector<int> idx, std::uint64_t seed) {
    std::uint64_t state = seed;
    for (std::size_t i = idx.size(); i > 1; --i) {
        state = mix64(state + 0x9E3779B97F4A7C15ULL);
        std::swap(idx[i - 1], idx[state % i]);
    }
    return idx;
}

std::vector<int> index_range(int n) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), 0);
    return idx;
}

}  // namespace

namespace {

std::pair<std::vector<int>, std::vector<int>> split_indices(const DataSet& data,
                                                            double ratio,
                                                            std::uint64_t seed) {
    const int m = static_cast<int>(data.size());
    if (m < 2) throw DomainError("need at least two points to split");
    if (!(ratio > 0.0 && ratio < 1.0)) throw DomainError("split ratio must be in (0,1)");
    const int n1 = static_cast<int>(std::lround(ratio * m));
    if (n1 <= 0 || n1 >= m)
        throw DomainError("split ratio yields an empty part at m=" + std::to_string(m));

    std::vector<int> first, second;
    if (data.task == Task::classification) {
        std::vector<int> pos, neg;
        for (int i = 0; i < m; ++i)
            (data.labels(i) > 0 ? pos : neg).push_back(i);
        pos = shuffled(std::move(pos), seed);
        neg = shuffled(std::move(neg), mix64(seed ^ 0xA5A5A5A5A5A5A5A5ULL));
        // Per-class counts rounded to the same ratio, reconciled to hit n1 exactly.
        int n1_pos = static_cast<int>(std::lround(ratio * static_cast<double>(pos.size())));
        n1_pos = std::clamp(n1_pos, std::max(0, n1 - static_cast<int>(neg.size())),
                            std::min(static_cast<int>(pos.size()), n1));
        const int n1_neg = n1 - n1_pos;
        first.assign(pos.begin(), pos.begin() + n1_pos);
        first.insert(first.end(), neg.begin(), neg.begin() + n1_neg);
        second.assign(pos.begin() + n1_pos, pos.end());
        second.insert(second.end(), neg.begin() + n1_neg, neg.end());
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
    } else {
        std::vector<int> idx = shuffled(index_range(m), seed);
        first.assign(idx.begin(), idx.begin() + n1);
        second.assign(idx.begin() + n1, idx.end());
        std::sort(first.begin(), first.end());
        std::sort(second.begin(), second.end());
    }
    return {std::move(first), std::move(second)};
}

}  // namespace

std::pair<DataSet, DataSet> split_sample(const DataSet& data, double ratio,
                                         std::uint64_t seed) {
    auto [first, second] = split_indices(data, ratio, seed);
    return {subset(data, first), subset(data, second)};
}

namespace {

[[noreturn]] void rethrow_with_kernel(int k, const std::exception& e) {
    const std::string msg = "kernel " + std::to_string(k) + ": " + e.what();
    try {
        throw;
    } catch (const NumericError& n) {
        throw NumericError(msg, n.detail);
    } catch (const DomainError&) {
        throw DomainError(msg);
    } catch (const ShapeError&) {
        throw ShapeError(msg);
    } catch (...) {
        throw Error(msg);
    }
}

}  // namespace

StagePreparation prepare_stages(const DataSet& data, const std::vector<KernelSpec>& specs,
                                double base_reg, double ratio, std::uint64_t seed) {
    if (specs.empty()) throw DomainError("need at least one kernel");

    StagePreparation prep;
    auto [idx1, idx2] = split_indices(data, ratio, seed);
    const DataSet part1 = subset(data, idx1);
    const DataSet part2 = subset(data, idx2);
    prep.stage1_index = std::move(idx1);
    prep.stage2_index = std::move(idx2);
    prep.stage1_features = part1.features;
    prep.stage2_labels = part2.labels;

    const auto train_kernels = gaussian_kernel_set(part1.features, part1.features, specs);
    prep.bases.reserve(specs.size());
    for (std::size_t k = 0; k < specs.size(); ++k) {
        try {
            if (data.task == Task::classification)
                prep.bases.push_back(train_svm(train_kernels[k], part1.labels, base_reg));
            else
                prep.bases.push_back(train_krr(train_kernels[k], part1.labels, base_reg));
        } catch (const std::exception& e) {
            rethrow_with_kernel(static_cast<int>(k), e);
        }
    }
    prep.stage2_predictions =
        base_predictions(prep.bases, specs, prep.stage1_features, part2.features);
    return prep;
}

PredictionMatrix base_predictions(const std::vector<BaseHypothesis>& bases,
                                  const std::vector<KernelSpec>& specs,
                                  const Matrix& stage1_features, const Matrix& x) {
    if (bases.size() != specs.size())
        throw ShapeError("one base predictor per kernel required");
    if (x.cols() != stage1_features.cols())
        throw ShapeError("feature dimension does not match training");
    const auto cross = gaussian_kernel_set(x, stage1_features, specs);
    PredictionMatrix pred(x.rows(), static_cast<Eigen::Index>(bases.size()));
    for (std::size_t k = 0; k < bases.size(); ++k)
        pred.col(static_cast<Eigen::Index>(k)) = predict(bases[k], cross[k]);
    return pred;
}

EnsembleModel train_ekp(const DataSet& data, const std::vector<KernelSpec>& specs,
                        int q, double cap, double base_reg, double ratio,
                        std::uint64_t seed) {
    StagePreparation prep = prepare_stages(data, specs, base_reg, ratio, seed);

    EnsembleModel model;
    model.specs = specs;
    model.task = data.task;
    model.stage1_index = std::move(prep.stage1_index);
    model.stage2_index = std::move(prep.stage2_index);
    model.stage1_features = std::move(prep.stage1_features);
    model.bases = std::move(prep.bases);

    const Loss loss = data.task == Task::classification ? Loss::hinge : Loss::square;
    model.weights =
        fit_combiner(prep.stage2_predictions, prep.stage2_labels, q, cap, loss);
    return model;
}

Vector predict_ekp(const EnsembleModel& model, const Matrix& x_test) {
    const PredictionMatrix pred =
        base_predictions(model.bases, model.specs, model.stage1_features, x_test);
    return predict_combination(model.weights, pred);
}

double single_stage_objective(const Vector& mu, const std::vector<Vector>& alphas,
                              const std::vector<double>& lambdas, const DataSet& data,
                              const std::vector<KernelMatrix>& kernels, Loss loss) {
    const auto p = static_cast<std::size_t>(mu.size());
    if (alphas.size() != p || lambdas.size() != p || kernels.size() != p)
        throw ShapeError("weight, coefficient, regularizer, kernel counts must agree");
    const auto m = data.size();

    double penalty = 0.0;
    Vector scores = Vector::Zero(static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < p; ++k) {
        if (lambdas[k] < 0.0) throw DomainError("negative regularizer");
        if (kernels[k].rows() != static_cast<Eigen::Index>(m) ||
            alphas[k].size() != static_cast<Eigen::Index>(m))
            throw ShapeError("kernel or coefficient size does not match sample");
        const Vector fk = kernels[k].values * alphas[k];
        penalty += lambdas[k] * alphas[k].dot(fk);
        scores += mu(static_cast<Eigen::Index>(k)) * fk;
    }

    double emp = 0.0;
    if (loss == Loss::square)
        emp = (scores - data.labels).squaredNorm();
    else
        emp = (1.0 - data.labels.array() * scores.array()).cwiseMax(0.0).sum();
    return penalty + emp;
}

SingleStageSolution solve_single_stage_square(const Vector& mu,
                                              const std::vector<double>& lambdas,
                                              const DataSet& data,
                                              const std::vector<KernelMatrix>& kernels) {
    const auto p = static_cast<std::size_t>(mu.size());
    if (lambdas.size() != p || kernels.size() != p)
        throw ShapeError("weight, regularizer, kernel counts must agree");
    const auto m = static_cast<Eigen::Index>(data.size());
    if ((mu.array() < 0.0).any()) throw DomainError("weights must be non-negative");

    std::vector<std::size_t> kept;
    for (std::size_t k = 0; k < p; ++k) {
        if (mu(static_cast<Eigen::Index>(k)) <= 1e-12) continue;
        if (lambdas[k] <= 0.0)
            throw DomainError("kernel " + std::to_string(k) +
                              ": active weight requires a positive regularizer");
        if (kernels[k].rows() != m || !kernels[k].is_square)
            throw ShapeError("kernel " + std::to_string(k) + ": bad shape");
        kept.push_back(k);
    }

    SingleStageSolution sol;
    sol.alphas.assign(p, Vector::Zero(m));
    if (kept.empty()) {
        sol.objective = data.labels.squaredNorm();
        return sol;
    }

    // At the stationary point every block satisfies alpha_k = (mu_k/lambda_k) u
    // with u solving (I + G) u = y, G = sum_k (mu_k^2 / lambda_k) K_k. The
    // objective collapses to u . y.
    Matrix g = Matrix::Zero(m, m);
    for (std::size_t k : kept) {
        const double w = mu(static_cast<Eigen::Index>(k));
        g += (w * w / lambdas[k]) * kernels[k].values;
    }
    Matrix a = g;
    a.diagonal().array() += 1.0;
    Eigen::LDLT<Matrix> ldlt(a);
    if (ldlt.info() != Eigen::Success)
        throw NumericError("joint system factorization failed");
    Vector u = ldlt.solve(data.labels);
    u += ldlt.solve(data.labels - a * u);

    const Vector resid = data.labels - a * u;  // = y - u - G u
    double grad_sq = 0.0;
    for (std::size_t k : kept) {
        const double w = mu(static_cast<Eigen::Index>(k));
        grad_sq += (2.0 * w * (kernels[k].values * resid)).squaredNorm();
    }
    const double tol = 1e-8 * (1.0 + data.labels.norm());
    if (std::sqrt(grad_sq) > tol)
        throw NumericError("joint solve left a large gradient", std::sqrt(grad_sq));

    for (std::size_t k : kept)
        sol.alphas[k] = (mu(static_cast<Eigen::Index>(k)) / lambdas[k]) * u;
    sol.objective = u.dot(data.labels);
    return sol;
}

EquivalenceReport verify_one_stage_equivalence(const Vector& mu, double lambda,
                                               const DataSet& data,
                                               const std::vector<KernelMatrix>& kernels) {
    if (lambda <= 0.0) throw DomainError("lambda must be positive");
    if ((mu.array() < -1e-9).any())
        throw DomainError("weight vector has a negative component");
    const double l1 = mu.cwiseMax(0.0).sum();
    const double l2sq = mu.cwiseMax(0.0).squaredNorm();
    if (std::abs(l1 - 1.0) > 1e-9 && std::abs(l2sq - 1.0) > 1e-9)
        throw DomainError("weight vector is not normalized in either norm");

    std::vector<double> lambdas(static_cast<std::size_t>(mu.size()));
    for (Eigen::Index k = 0; k < mu.size(); ++k)
        lambdas[static_cast<std::size_t>(k)] = lambda * std::max(mu(k), 0.0);

    EquivalenceReport rep;
    rep.mu = mu;
    rep.lambda = lambda;
    rep.obj_joint = solve_single_stage_square(mu, lambdas, data, kernels).objective;

    const KernelMatrix k_mu = combine_kernels(mu.cwiseMax(0.0), kernels);
    const BaseHypothesis h = train_krr(k_mu, data.labels, lambda);
    const Vector fitted = k_mu.values * h.alpha;
    rep.obj_combined = lambda * h.alpha.dot(fitted) + (fitted - data.labels).squaredNorm();
    rep.rel_gap =
        std::abs(rep.obj_joint - rep.obj_combined) / (1.0 + std::abs(rep.obj_combined));
    return rep;
}

}  // namespace ekp
