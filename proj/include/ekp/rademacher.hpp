#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ekp/kernel.hpp"

namespace ekp {

/// Empirical complexity of the weighted-ensemble family: the sign-vector
/// average of ||(Lambda_k sqrt(sigma^T K_k sigma))_k||_r divided by m, with r
/// the dual exponent of the weight-norm order q.
struct RademacherEstimate {
    double value = 0.0;
    double std_error = 0.0;      // 0 in exhaustive mode
    std::uint64_t n_sigma = 0;   // draws, or 2^m for exhaustive
    double r = 2.0;              // dual exponent; infinity means max over kernels
    Vector lambdas;
    Eigen::Index m = 0;
    std::uint64_t seed = 0;
};

/// Closed-form bound value together with the inputs that produced it.
/// kind is one of: trace-norm, log-count, root-trace-norm, power-count, margin.
struct BoundReport {
    std::string kind;
    double value = 0.0;
    int eta0_num = 23;  // the moment constant eta0 = 23/22, kept as a ratio
    int eta0_den = 22;
    Vector lambdas;
    Vector traces;
    double lambda_star = 0.0;
    double r2 = 0.0;
    Eigen::Index m = 0;
    int p = 0;
    double r = 0.0;
    double rho = 0.0;
    double delta = 0.0;
    double margin_loss = 0.0;
    double complexity = 0.0;
    bool vacuous = false;
};

struct MomentCheck {
    double lhs = 0.0;  // estimate of E[(sigma^T K sigma)^r]
    double rhs = 0.0;  // (eta0 r Tr[K])^r
    double std_error = 0.0;
    std::uint64_t n_sigma = 0;
    std::uint64_t seed = 0;  // 0 in exhaustive mode
    bool exhaustive = false;
    bool holds = false;
};

/// Dual exponent of q: q=1 maps to infinity (max over kernels).
double dual_exponent(double q);

/// Monte-Carlo estimate over n_sigma uniform sign vectors; deterministic in
/// (inputs, seed, n_sigma) regardless of evaluation order.
RademacherEstimate estimate_complexity(const std::vector<KernelMatrix>& kernels,
                                       const Vector& lambdas, double q,
                                       std::uint64_t n_sigma, std::uint64_t seed);

/// Exact expectation by enumerating all 2^m sign vectors (m <= 20).
RademacherEstimate enumerate_complexity(const std::vector<KernelMatrix>& kernels,
                                        const Vector& lambdas, double q);

/// sqrt(eta0 r ||(Lambda_k^2 Tr K_k)_k||_r) / m
BoundReport bound_trace_norm(const std::vector<KernelMatrix>& kernels,
                             const Vector& lambdas, int r);

/// sqrt(eta0 e ceil(ln p) Lambda*^2 R^2 / m); requires p >= 2.
BoundReport bound_log_count(int p, double lambda_star, double r2, Eigen::Index m);

/// sqrt(eta0 r) ||(Lambda_k sqrt(Tr K_k))_k||_r / m
BoundReport bound_root_trace_norm(const std::vector<KernelMatrix>& kernels,
                                  const Vector& lambdas, int r);

/// sqrt(eta0 r p^(2/r) Lambda*^2 R^2 / m); requires p >= 2.
BoundReport bound_power_count(int p, double lambda_star, double r2, Eigen::Index m,
                              int r);

/// margin_loss + (2/rho) complexity + 3 sqrt(ln(2/delta) / (2m))
BoundReport margin_bound(double margin_loss, double complexity, double rho,
                         double delta, Eigen::Index m);

/// Checks E[(sigma^T K sigma)^r] <= (eta0 r Tr[K])^r, exhaustively for m <= 12.
MomentCheck moment_check(const KernelMatrix& k, int r, std::uint64_t n_sigma,
                         std::uint64_t seed);

}  // namespace ekp
