#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ekp/base_learner.hpp"
#include "ekp/combiner.hpp"
#include "ekp/dataset.hpp"
#include "ekp/kernel.hpp"

namespace ekp {

/// Two-stage ensemble: p base kernel predictors plus non-negative mixing weights.
struct EnsembleModel {
    std::vector<BaseHypothesis> bases;
    CombinerWeights weights;
    std::vector<KernelSpec> specs;
    Matrix stage1_features;  // expansion points of every base
    std::vector<int> stage1_index;
    std::vector<int> stage2_index;
    Task task = Task::regression;
};

struct SingleStageSolution {
    std::vector<Vector> alphas;
    double objective = 0.0;
};

/// Comparison of the joint weighted-regularization objective against kernel
/// ridge regression on the mixed kernel, at a fixed weight vector.
struct EquivalenceReport {
    Vector mu;
    double lambda = 0.0;
    double obj_joint = 0.0;     // one-stage objective with lambda_k = lambda * mu_k
    double obj_combined = 0.0;  // ridge objective on the combined kernel
    double rel_gap = 0.0;
};

/// Deterministic shuffle split; first part gets round(ratio * m) points.
/// Classification data is stratified by label.
std::pair<DataSet, DataSet> split_sample(const DataSet& data, double ratio,
                                         std::uint64_t seed);

/// Stage-1 work shared across combiner fits: base predictors trained on the
/// first part of the split and their predictions on the second part.
struct StagePreparation {
    std::vector<BaseHypothesis> bases;
    PredictionMatrix stage2_predictions;
    Vector stage2_labels;
    Matrix stage1_features;
    std::vector<int> stage1_index;
    std::vector<int> stage2_index;
};

StagePreparation prepare_stages(const DataSet& data, const std::vector<KernelSpec>& specs,
                                double base_reg, double ratio, std::uint64_t seed);

/// Base-predictor outputs on arbitrary points, one column per kernel.
PredictionMatrix base_predictions(const std::vector<BaseHypothesis>& bases,
                                  const std::vector<KernelSpec>& specs,
                                  const Matrix& stage1_features, const Matrix& x);

EnsembleModel train_ekp(const DataSet& data, const std::vector<KernelSpec>& specs,
                        int q, double cap, double base_reg, double ratio,
                        std::uint64_t seed);

/// Raw ensemble scores on new points; classification callers threshold at 0.
Vector predict_ekp(const EnsembleModel& model, const Matrix& x_test);

/// sum_k lambda_k alpha_k^T K_k alpha_k + sum_i loss(sum_k mu_k (K_k alpha_k)_i, y_i)
double single_stage_objective(const Vector& mu, const std::vector<Vector>& alphas,
                              const std::vector<double>& lambdas, const DataSet& data,
                              const std::vector<KernelMatrix>& kernels, Loss loss);

/// Exact minimizer of the square-loss joint objective at fixed weights.
/// Kernels with mu_k <= 1e-12 are dropped (their alpha comes back zero).
SingleStageSolution solve_single_stage_square(const Vector& mu,
                                              const std::vector<double>& lambdas,
                                              const DataSet& data,
                                              const std::vector<KernelMatrix>& kernels);

/// Checks that the joint objective with lambda_k = lambda * mu_k matches ridge
/// regression on the combined kernel sum_k mu_k K_k.
EquivalenceReport verify_one_stage_equivalence(const Vector& mu, double lambda,
                                               const DataSet& data,
                                               const std::vector<KernelMatrix>& kernels);

}  // namespace ekp
