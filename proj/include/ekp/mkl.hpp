#pragma once

#include <string>
#include <vector>

#include "ekp/base_learner.hpp"
#include "ekp/kernel.hpp"

namespace ekp {

/// Kernel-selection model: learned combination weights plus the final predictor
/// trained on the combined kernel.
struct MKLModel {
    Vector mu;
    Vector alpha;  // dual variables (os-svm) or ridge coefficients (os-krr)
    double bias = 0.0;
    std::string method;
    std::vector<double> objective_trace;  // best outer objective per iteration
    BaseHypothesis predictor;             // evaluate with the combined cross-kernel
    bool converged = true;
    bool fallback_uniform = false;
};

/// mu_k = cap / p for every k.
Vector uniform_weights(int p, double cap);

/// Weights proportional to the centered-kernel alignment scores
/// y^T Kc_k y / ||Kc_k||_F, clipped at zero and scaled to sum to cap.
/// An all-zero score vector falls back to uniform weights (flag set if given).
Vector align_weights(const std::vector<KernelMatrix>& kernels, const Vector& y,
                     double cap, bool* used_fallback = nullptr);

/// Joint alignment maximization: minimizes v^T M v - 2 a.v over v >= 0 with
/// M_kl = <Kc_k, Kc_l>_F and a_k = y^T Kc_k y, then scales to sum cap.
Vector alignf_weights(const std::vector<KernelMatrix>& kernels, const Vector& y,
                      double cap, bool* used_fallback = nullptr);

/// Alignment of the centered combined kernel with y y^T; 0 when degenerate.
double centered_alignment(const std::vector<KernelMatrix>& kernels, const Vector& mu,
                          const Vector& y);

/// One-stage SVM kernel learning: min over {mu >= 0, sum_k mu_k Tr[K_k] <= cap}
/// of twice the maximal SVM dual objective on the combined kernel.
MKLModel train_os_svm(const std::vector<KernelMatrix>& kernels, const Vector& y,
                      double c, double cap);

/// One-stage ridge kernel learning: min over {mu >= 0, ||mu||_2 <= cap} of
/// y^T (K_mu + lambda I)^{-1} y.
MKLModel train_os_krr(const std::vector<KernelMatrix>& kernels, const Vector& y,
                      double lambda, double cap);

}  // namespace ekp
