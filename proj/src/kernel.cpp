#include "ekp/kernel.hpp"

#include <cmath>

#include "ekp/errors.hpp"

namespace ekp {

std::vector<KernelSpec> gaussian_grid(int g_lo, int g_hi) {
    if (g_hi < g_lo) throw DomainError("gaussian_grid: empty exponent range");
    std::vector<KernelSpec> specs;
    int id = 1;
    for (int g = g_lo; g <= g_hi; ++g)
        specs.push_back(KernelSpec{id++, "gaussian", std::ldexp(1.0, g)});
    return specs;
}

namespace {

// ||a_i - b_j||^2 via the norm expansion, tiny negatives clamped to zero.
Matrix squared_distances(const Matrix& xa, const Matrix& xb) {
    Vector na = xa.rowwise().squaredNorm();
    Vector nb = xb.rowwise().squaredNorm();
    Matrix d = (-2.0 * xa * xb.transpose());
    d.colwise() += na;
    d.rowwise() += nb.transpose();
    return d.cwiseMax(0.0);
}

bool same_point_set(const Matrix& xa, const Matrix& xb) {
    if (&xa == &xb) return true;
    if (xa.rows() != xb.rows() || xa.cols() != xb.cols()) return false;
    return (xa.array() == xb.array()).all();
}

}  // namespace

KernelMatrix gaussian_kernel_matrix(const Matrix& xa, const Matrix& xb,
                                    double gamma, int spec_id) {
    if (xa.cols() != xb.cols())
        throw ShapeError("gaussian_kernel_matrix: feature dimensions differ");
    if (!(gamma > 0.0))
        throw DomainError("gaussian_kernel_matrix: gamma must be positive");

    KernelMatrix k;
    k.spec_id = spec_id;
    k.is_square = same_point_set(xa, xb);

    Matrix d = squared_distances(xa, xb);
    if (k.is_square) d.diagonal().setZero();
    k.values = (-gamma * d.array()).exp();
    if (k.is_square)
        k.values = 0.5 * (k.values + k.values.transpose()).eval();
    return k;
}

std::vector<KernelMatrix> gaussian_kernel_set(const Matrix& xa, const Matrix& xb,
                                              const std::vector<KernelSpec>& specs) {
    if (xa.cols() != xb.cols())
        throw ShapeError("gaussian_kernel_set: feature dimensions differ");
    const bool square = same_point_set(xa, xb);
    Matrix d = squared_distances(xa, xb);
    if (square) d.diagonal().setZero();

    std::vector<KernelMatrix> out;
    out.reserve(specs.size());
    for (const auto& spec : specs) {
        if (!(spec.gamma > 0.0))
            throw DomainError("gaussian_kernel_set: gamma must be positive");
        KernelMatrix k;
        k.spec_id = spec.id;
        k.is_square = square;
        k.values = (-spec.gamma * d.array()).exp();
        if (square)
            k.values = 0.5 * (k.values + k.values.transpose()).eval();
        out.push_back(std::move(k));
    }
    return out;
}

KernelMatrix center_kernel_matrix(const KernelMatrix& k) {
    if (k.rows() != k.cols() || !k.is_square)
        throw ShapeError("center_kernel_matrix: input must be square");
    const auto m = k.rows();
    Vector row_mean = k.values.rowwise().mean();
    Vector col_mean = k.values.colwise().mean();
    const double total_mean = k.values.mean();

    KernelMatrix out;
    out.spec_id = k.spec_id;
    out.is_square = true;
    out.values = k.values;
    out.values.colwise() -= row_mean;
    out.values.rowwise() -= col_mean.transpose();
    out.values.array() += total_mean;
    (void)m;
    return out;
}

double frobenius_inner(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ShapeError("frobenius_inner: shapes differ");
    return (a.array() * b.array()).sum();
}

KernelMatrix combine_kernels(const Vector& mu, const std::vector<KernelMatrix>& kernels) {
    if (kernels.empty() || mu.size() != static_cast<Eigen::Index>(kernels.size()))
        throw ShapeError("combine_kernels: weight/kernel count mismatch");
    for (Eigen::Index k = 0; k < mu.size(); ++k)
        if (mu[k] < 0.0)
            throw DomainError("combine_kernels: negative weight at index " + std::to_string(k));

    const auto rows = kernels.front().rows();
    const auto cols = kernels.front().cols();
    bool square = true;
    for (const auto& k : kernels) {
        if (k.rows() != rows || k.cols() != cols)
            throw ShapeError("combine_kernels: kernel shapes differ");
        square = square && k.is_square;
    }

    KernelMatrix out;
    out.spec_id = kCombinedKernelId;
    out.is_square = square;
    out.values = Matrix::Zero(rows, cols);
    for (std::size_t k = 0; k < kernels.size(); ++k)
        out.values += mu[static_cast<Eigen::Index>(k)] * kernels[k].values;
    return out;
}

double quadratic_form(const Vector& sigma, const KernelMatrix& k) {
    if (k.rows() != k.cols())
        throw ShapeError("quadratic_form: kernel must be square");
    if (sigma.size() != k.rows())
        throw ShapeError("quadratic_form: vector length does not match kernel size");
    return sigma.dot(k.values * sigma);
}

}  // namespace ekp
