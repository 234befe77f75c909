#pragma once

#include "ekp/dataset.hpp"
#include "ekp/kernel.hpp"

namespace ekp {

/// A kernel predictor in representer form: h(x) = sum_i alpha_i K(x_i, x) + bias.
/// For SVM, alpha holds the signed coefficients a_i * y_i of the dual solution.
struct BaseHypothesis {
    Vector alpha;
    double bias = 0.0;
    int spec_id = 0;
    double reg = 0.0;  // lambda for KRR, C for SVM
    double rkhs_norm = 0.0;
    Task task = Task::regression;
    bool degenerate = false;  // single-class SVM input, constant predictor
};

/// Kernel ridge regression: solves (K + lambda I) alpha = y.
BaseHypothesis train_krr(const KernelMatrix& k, const Vector& y, double lambda);

struct SvmOptions {
    double kkt_tol = 1e-4;       // stop when the maximal KKT violation is below this
    double gap_tol = 1e-4;       // relative duality gap certificate
    long max_pair_steps = 100000;
    const Vector* warm_start = nullptr;  // dual variables in [0, C], y-feasible
};

/// Full dual solution, kept around for the one-stage kernel-learning outer loops.
struct SvmSolution {
    BaseHypothesis h;
    Vector dual;            // a_i in [0, C]
    double dual_objective;  // sum a - 1/2 a^T Q a
    double primal_objective;
    double gap;
    double kkt_violation;
    long pair_steps;
};

SvmSolution solve_svm_dual(const KernelMatrix& k, const Vector& y, double c,
                           const SvmOptions& opts = {});

/// C-SVM trained on a precomputed Gram matrix.
BaseHypothesis train_svm(const KernelMatrix& k, const Vector& y, double c,
                         const SvmOptions& opts = {});

/// Representer evaluation over a cross-kernel block (rows = test points).
Vector predict(const BaseHypothesis& h, const KernelMatrix& cross);

/// sqrt(max(alpha^T K alpha, 0))
double rkhs_norm(const BaseHypothesis& h, const KernelMatrix& k_train);

}  // namespace ekp
