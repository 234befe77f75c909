#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace ekp {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// spec_id of a kernel obtained by combining several base kernels.
inline constexpr int kCombinedKernelId = -1;

struct KernelSpec {
    int id = 0;
    std::string family = "gaussian";
    double gamma = 1.0;  // bandwidth: K(x,x') = exp(-gamma * ||x-x'||^2)
};

/// Gaussian specs for the bandwidth grid 2^g, g in [g_lo, g_hi]; ids 1..p.
std::vector<KernelSpec> gaussian_grid(int g_lo, int g_hi);

/// Dense Gram matrix (or cross block) of one kernel.
struct KernelMatrix {
    Matrix values;
    int spec_id = kCombinedKernelId;
    bool is_square = false;

    Eigen::Index rows() const { return values.rows(); }
    Eigen::Index cols() const { return values.cols(); }
};

/// Gaussian kernel evaluations between the rows of xa and xb.
/// The square flag is set iff xa and xb are the same point set; in that case
/// the diagonal is exactly 1 and the matrix is exactly symmetric.
KernelMatrix gaussian_kernel_matrix(const Matrix& xa, const Matrix& xb,
                                    double gamma, int spec_id = 0);

/// Builds all kernels of a Gaussian spec set over one shared distance matrix.
std::vector<KernelMatrix> gaussian_kernel_set(const Matrix& xa, const Matrix& xb,
                                              const std::vector<KernelSpec>& specs);

/// HKH with H = I - 11^T/m; every row and column of the result sums to zero.
KernelMatrix center_kernel_matrix(const KernelMatrix& k);

/// sum_ij A_ij * B_ij
double frobenius_inner(const Matrix& a, const Matrix& b);

/// Entrywise sum_k mu_k K_k; weights must be non-negative.
KernelMatrix combine_kernels(const Vector& mu, const std::vector<KernelMatrix>& kernels);

/// sigma^T K sigma
double quadratic_form(const Vector& sigma, const KernelMatrix& k);

}  // namespace ekp
