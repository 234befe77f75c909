#include "ekp/rademacher.hpp"

#include <bit>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "ekp/errors.hpp"
#include "ekp/random.hpp"

namespace ekp {

namespace {

constexpr double kEta0 = 23.0 / 22.0;

void check_stack(const std::vector<KernelMatrix>& kernels, const Vector& lambdas) {
    if (kernels.empty()) throw ShapeError("need at least one kernel");
    if (static_cast<std::size_t>(lambdas.size()) != kernels.size())
        throw ShapeError("one norm cap per kernel required");
    if ((lambdas.array() <= 0.0).any())
        throw DomainError("norm caps must be positive");
    const auto m = kernels.front().rows();
    for (const auto& k : kernels) {
        if (!k.is_square || k.rows() != k.cols())
            throw ShapeError("kernel matrices must be square");
        if (k.rows() != m) throw ShapeError("kernel sizes disagree");
    }
}

// sigma^T K sigma must be non-negative for PSD K; tolerate roundoff only.
double clamp_form(double w, Eigen::Index m, int kernel_id) {
    if (w < -1e-8 * static_cast<double>(m))
        throw NumericError(
            "kernel " + std::to_string(kernel_id) + ": quadratic form is negative", w);
    return std::max(w, 0.0);
}

double norm_r(const Vector& v, double r) {
    if (std::isinf(r)) return v.maxCoeff();
    if (r == 1.0) return v.sum();
    if (r == 2.0) return v.norm();
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.size(); ++i) s += std::pow(v(i), r);
    return std::pow(s, 1.0 / r);
}

struct RunningMoments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void add(double x) {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }
    double variance() const {
        return count > 1 ? std::max(m2, 0.0) / static_cast<double>(count - 1) : 0.0;
    }
    double std_error() const {
        return std::sqrt(variance() / static_cast<double>(count));
    }
};

// Walks all sign vectors with the last component fixed at +1 (the summand is
// invariant under sigma -> -sigma) and calls visit with sigma^T K_k sigma per
// kernel. Gray-code order so each step flips a single sign.
template <typename Visit>
void enumerate_forms(const std::vector<KernelMatrix>& kernels, Visit&& visit) {
    const auto m = kernels.front().rows();
    const auto p = kernels.size();
    Vector sigma = Vector::Ones(m);
    std::vector<Vector> u(p);
    Vector forms(static_cast<Eigen::Index>(p));
    for (std::size_t k = 0; k < p; ++k) {
        u[k] = kernels[k].values * sigma;
        forms(static_cast<Eigen::Index>(k)) = sigma.dot(u[k]);
    }
    visit(forms);

    const std::uint64_t half = m >= 1 ? (std::uint64_t{1} << (m - 1)) : 1;
    for (std::uint64_t t = 1; t < half; ++t) {
        const int j = std::countr_zero(t);
        const double sj = sigma(j);
        for (std::size_t k = 0; k < p; ++k) {
            forms(static_cast<Eigen::Index>(k)) +=
                -4.0 * sj * u[k](j) + 4.0 * kernels[k].values(j, j);
            u[k] -= 2.0 * sj * kernels[k].values.col(j);
        }
        sigma(j) = -sj;
        visit(forms);
    }
}

}  // namespace

double dual_exponent(double q) {
    if (q == 1.0) return std::numeric_limits<double>::infinity();
    if (q > 1.0) return q / (q - 1.0);
    throw DomainError("norm order q must be >= 1");
}

RademacherEstimate estimate_complexity(const std::vector<KernelMatrix>& kernels,
                                       const Vector& lambdas, double q,
                                       std::uint64_t n_sigma, std::uint64_t seed) {
    check_stack(kernels, lambdas);
    if (n_sigma == 0) throw DomainError("need at least one sign draw");
    const double r = dual_exponent(q);
    const auto m = kernels.front().rows();
    const auto p = static_cast<Eigen::Index>(kernels.size());

    RunningMoments stats;
    Vector sigma(m), v(p);
    for (std::uint64_t t = 0; t < n_sigma; ++t) {
        SignStream stream(seed, t);
        stream.fill_signs(sigma);
        for (Eigen::Index k = 0; k < p; ++k) {
            const auto& km = kernels[static_cast<std::size_t>(k)];
            const double w = clamp_form(quadratic_form(sigma, km), m, km.spec_id);
            v(k) = lambdas(k) * std::sqrt(w);
        }
        stats.add(norm_r(v, r));
    }

    RademacherEstimate est;
    est.value = stats.mean / static_cast<double>(m);
    est.std_error = stats.std_error() / static_cast<double>(m);
    est.n_sigma = n_sigma;
    est.r = r;
    est.lambdas = lambdas;
    est.m = m;
    est.seed = seed;
    return est;
}

RademacherEstimate enumerate_complexity(const std::vector<KernelMatrix>& kernels,
                                        const Vector& lambdas, double q) {
    check_stack(kernels, lambdas);
    const auto m = kernels.front().rows();
    if (m > 20)
        throw DomainError("enumeration needs 2^m evaluations; for m > 20 use the "
                          "Monte Carlo estimator");
    const double r = dual_exponent(q);
    const auto p = static_cast<Eigen::Index>(kernels.size());

    double total = 0.0;
    std::uint64_t visits = 0;
    Vector v(p);
    enumerate_forms(kernels, [&](const Vector& forms) {
        for (Eigen::Index k = 0; k < p; ++k) {
            const auto& km = kernels[static_cast<std::size_t>(k)];
            const double w = clamp_form(forms(k), m, km.spec_id);
            v(k) = lambdas(k) * std::sqrt(w);
        }
        total += norm_r(v, r);
        ++visits;
    });

    RademacherEstimate est;
    est.value = total / static_cast<double>(visits) / static_cast<double>(m);
    est.std_error = 0.0;
    est.n_sigma = std::uint64_t{1} << m;
    est.r = r;
    est.lambdas = lambdas;
    est.m = m;
    est.seed = 0;
    return est;
}

BoundReport bound_trace_norm(const std::vector<KernelMatrix>& kernels,
                             const Vector& lambdas, int r) {
    check_stack(kernels, lambdas);
    if (r < 1) throw DomainError("norm exponent must be a positive integer");
    const auto m = kernels.front().rows();
    const auto p = static_cast<Eigen::Index>(kernels.size());

    BoundReport rep;
    rep.kind = "trace-norm";
    rep.lambdas = lambdas;
    rep.traces.resize(p);
    Vector v(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        rep.traces(k) = kernels[static_cast<std::size_t>(k)].values.trace();
        v(k) = lambdas(k) * lambdas(k) * rep.traces(k);
    }
    rep.m = m;
    rep.p = static_cast<int>(p);
    rep.r = r;
    rep.value = std::sqrt(kEta0 * r * norm_r(v, r)) / static_cast<double>(m);
    return rep;
}

BoundReport bound_log_count(int p, double lambda_star, double r2, Eigen::Index m) {
    if (p < 2) throw DomainError("this bound needs at least two kernels");
    if (lambda_star <= 0.0 || r2 <= 0.0 || m < 1)
        throw DomainError("cap, kernel diagonal bound, and sample size must be positive");

    BoundReport rep;
    rep.kind = "log-count";
    rep.lambda_star = lambda_star;
    rep.r2 = r2;
    rep.m = m;
    rep.p = p;
    const double ceil_log = std::ceil(std::log(static_cast<double>(p)));
    rep.value = std::sqrt(kEta0 * std::numbers::e * ceil_log * lambda_star * lambda_star *
                          r2 / static_cast<double>(m));
    return rep;
}

BoundReport bound_root_trace_norm(const std::vector<KernelMatrix>& kernels,
                                  const Vector& lambdas, int r) {
    check_stack(kernels, lambdas);
    if (r < 1) throw DomainError("norm exponent must be a positive integer");
    const auto m = kernels.front().rows();
    const auto p = static_cast<Eigen::Index>(kernels.size());

    BoundReport rep;
    rep.kind = "root-trace-norm";
    rep.lambdas = lambdas;
    rep.traces.resize(p);
    Vector u(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        rep.traces(k) = kernels[static_cast<std::size_t>(k)].values.trace();
        u(k) = lambdas(k) * std::sqrt(std::max(rep.traces(k), 0.0));
    }
    rep.m = m;
    rep.p = static_cast<int>(p);
    rep.r = r;
    rep.value = std::sqrt(kEta0 * r) * norm_r(u, r) / static_cast<double>(m);
    return rep;
}

BoundReport bound_power_count(int p, double lambda_star, double r2, Eigen::Index m,
                              int r) {
    if (p < 2) throw DomainError("this bound needs at least two kernels");
    if (r < 1) throw DomainError("norm exponent must be a positive integer");
    if (lambda_star <= 0.0 || r2 <= 0.0 || m < 1)
        throw DomainError("cap, kernel diagonal bound, and sample size must be positive");

    BoundReport rep;
    rep.kind = "power-count";
    rep.lambda_star = lambda_star;
    rep.r2 = r2;
    rep.m = m;
    rep.p = p;
    rep.r = r;
    rep.value = std::sqrt(kEta0 * r * std::pow(static_cast<double>(p), 2.0 / r) *
                          lambda_star * lambda_star * r2 / static_cast<double>(m));
    return rep;
}

BoundReport margin_bound(double margin_loss, double complexity, double rho,
                         double delta, Eigen::Index m) {
    if (margin_loss < 0.0 || margin_loss > 1.0)
        throw DomainError("margin loss is a fraction in [0,1]");
    if (complexity < 0.0) throw DomainError("complexity must be non-negative");
    if (rho <= 0.0) throw DomainError("margin must be positive");
    if (!(delta > 0.0 && delta < 1.0)) throw DomainError("confidence must be in (0,1)");
    if (m < 1) throw DomainError("sample size must be positive");

    BoundReport rep;
    rep.kind = "margin";
    rep.margin_loss = margin_loss;
    rep.complexity = complexity;
    rep.rho = rho;
    rep.delta = delta;
    rep.m = m;
    rep.value = margin_loss + (2.0 / rho) * complexity +
                3.0 * std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(m)));
    rep.vacuous = rep.value >= 1.0;
    return rep;
}

MomentCheck moment_check(const KernelMatrix& k, int r, std::uint64_t n_sigma,
                         std::uint64_t seed) {
    if (r < 1 || r > 4) throw DomainError("moment order must be in {1,2,3,4}");
    if (!k.is_square || k.rows() != k.cols())
        throw ShapeError("kernel matrix must be square");
    const auto m = k.rows();
    const double trace = k.values.trace();

    MomentCheck chk;
    chk.rhs = std::pow(kEta0 * r * trace, r);

    if (m <= 12) {
        double total = 0.0;
        std::uint64_t visits = 0;
        std::vector<KernelMatrix> one{k};
        enumerate_forms(one, [&](const Vector& forms) {
            total += std::pow(clamp_form(forms(0), m, k.spec_id), r);
            ++visits;
        });
        chk.lhs = total / static_cast<double>(visits);
        chk.std_error = 0.0;
        chk.n_sigma = std::uint64_t{1} << m;
        chk.exhaustive = true;
        chk.holds = chk.lhs <= chk.rhs * (1.0 + 1e-12);
        return chk;
    }

    if (n_sigma == 0) throw DomainError("need at least one sign draw");
    RunningMoments stats;
    Vector sigma(m);
    for (std::uint64_t t = 0; t < n_sigma; ++t) {
        SignStream stream(seed, t);
        stream.fill_signs(sigma);
        stats.add(std::pow(clamp_form(quadratic_form(sigma, k), m, k.spec_id), r));
    }
    chk.lhs = stats.mean;
    chk.std_error = stats.std_error();
    chk.n_sigma = n_sigma;
    chk.seed = seed;
    chk.exhaustive = false;
    const double rel_err = chk.lhs > 0.0 ? chk.std_error / chk.lhs : 0.0;
    chk.holds = chk.lhs <= chk.rhs * (1.0 + 3.0 * rel_err);
    return chk;
}

}  // namespace ekp
