#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ekp/dataset.hpp"
#include "ekp/kernel.hpp"

namespace ekp {

/// Experiment protocol: k-fold rotation where each rotation uses one fold for
/// testing, the next fold for validation, and the rest for training.
struct CVConfig {
    int n_folds = 5;
    std::vector<std::string> methods;  // unif, align, alignf, os-svm, os-krr, l1-ens, l2-ens
    int gamma_min = -4;                // Gaussian bandwidth exponents, gamma = 2^g
    int gamma_max = 3;
    std::vector<double> cap_grid = default_cap_grid();
    std::vector<double> ratio_grid = default_ratio_grid();  // ensemble split fractions
    double base_reg = 1.0;             // lambda for regression, C for classification
    std::uint64_t seed = 0;
    Task task = Task::regression;

    static std::vector<double> default_cap_grid();    // 2^-4 .. 2^4
    static std::vector<double> default_ratio_grid();  // 0.1 .. 0.9
};

struct MethodCV {
    std::string method;
    std::vector<double> test_errors;      // one entry per completed rotation
    std::vector<double> selected_caps;
    std::vector<double> selected_ratios;  // empty for single-stage methods
    double mean_error = 0.0;
    double std_dev = 0.0;
    double wall_seconds = 0.0;  // console diagnostics only, never serialized
};

struct CVResult {
    std::vector<MethodCV> methods;
    std::vector<int> skipped_rotations;
    std::vector<std::string> warnings;
    std::string rotation_scheme;
    std::uint64_t seed = 0;
    CVConfig config;
};

/// One hyperparameter candidate with its validation metric.
struct Candidate {
    double cap = 0.0;
    double ratio = 0.0;
    bool has_ratio = false;
    double metric = 0.0;
};

/// Argmin of the validation metric; ties go to the smallest cap, then the
/// smallest ratio.
Candidate select_hyperparameters(const std::vector<Candidate>& candidates);

/// Fraction of points whose score sign differs from the label; sign(0) is +1.
double misclassification_error(const Vector& scores, const Vector& y);

double rmse(const Vector& predictions, const Vector& y);

CVResult run_cv_experiment(const DataSet& data, const CVConfig& config);

}  // namespace ekp
