#include "ekp/mkl.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <Eigen/Cholesky>

#include "ekp/combiner.hpp"
#include "ekp/errors.hpp"

namespace ekp {

namespace {

void check_kernel_stack(const std::vector<KernelMatrix>& kernels, const Vector& y) {
    if (kernels.empty()) throw ShapeError("need at least one kernel");
    for (const auto& k : kernels) {
        if (!k.is_square || k.rows() != k.cols())
            throw ShapeError("kernel matrices must be square");
        if (k.rows() != y.size()) throw ShapeError("kernel size does not match labels");
    }
}

std::vector<KernelMatrix> centered(const std::vector<KernelMatrix>& kernels) {
    std::vector<KernelMatrix> out;
    out.reserve(kernels.size());
    for (const auto& k : kernels) out.push_back(center_kernel_matrix(k));
    return out;
}

}  // namespace

Vector uniform_weights(int p, double cap) {
    if (p < 1) throw DomainError("need at least one kernel");
    if (cap <= 0.0) throw DomainError("cap must be positive");
    return Vector::Constant(p, cap / p);
}

Vector align_weights(const std::vector<KernelMatrix>& kernels, const Vector& y,
                     double cap, bool* used_fallback) {
    check_kernel_stack(kernels, y);
    if (cap <= 0.0) throw DomainError("cap must be positive");
    const auto p = static_cast<Eigen::Index>(kernels.size());

    Vector score(p);
    for (Eigen::Index k = 0; k < p; ++k) {
        const KernelMatrix kc = center_kernel_matrix(kernels[static_cast<std::size_t>(k)]);
        const double norm = kc.values.norm();
        score(k) = norm > 1e-300 ? y.dot(kc.values * y) / norm : 0.0;
    }
    score = score.cwiseMax(0.0);
    const double total = score.sum();
    if (total <= 0.0) {
        if (used_fallback != nullptr) *used_fallback = true;
        return uniform_weights(static_cast<int>(p), cap);
    }
    if (used_fallback != nullptr) *used_fallback = false;
    return (cap / total) * score;
}

namespace {

// min_{v >= 0} v^T M v - 2 a.v for PSD M: projected gradient with exact step,
// then an active-set pass that solves the reduced normal equations.
Vector nonneg_quadratic_min(const Matrix& m, const Vector& a) {
    const auto p = a.size();
    auto value = [&](const Vector& v) { return v.dot(m * v) - 2.0 * a.dot(v); };

    Vector v = Vector::Zero(p);
    for (int it = 0; it < 500; ++it) {
        const Vector g = 2.0 * (m * v - a);
        const double gg = g.squaredNorm();
        if (gg <= 1e-28) break;
        const double curve = 2.0 * g.dot(m * g);
        const double step = curve > 1e-300 ? gg / curve : 1.0;
        Vector next = (v - step * g).cwiseMax(0.0);
        if ((next - v).lpNorm<Eigen::Infinity>() <= 1e-15 * (1.0 + v.lpNorm<Eigen::Infinity>()))
            break;
        v = std::move(next);
    }

    // Active-set refinement. Keeps the better of the two answers.
    Vector w = Vector::Zero(p);
    std::vector<bool> passive(static_cast<std::size_t>(p), false);
    const double tol = 1e-12 * (1.0 + a.cwiseAbs().maxCoeff());
    for (int outer = 0; outer < 3 * static_cast<int>(p) + 3; ++outer) {
        const Vector resid = a - m * w;
        int pick = -1;
        double best = tol;
        for (Eigen::Index j = 0; j < p; ++j) {
            if (!passive[static_cast<std::size_t>(j)] && resid(j) > best) {
                best = resid(j);
                pick = static_cast<int>(j);
            }
        }
        if (pick < 0) break;
        passive[static_cast<std::size_t>(pick)] = true;

        for (int inner = 0; inner < 3 * static_cast<int>(p) + 3; ++inner) {
            std::vector<int> idx;
            for (Eigen::Index j = 0; j < p; ++j)
                if (passive[static_cast<std::size_t>(j)]) idx.push_back(static_cast<int>(j));
            const auto n = static_cast<Eigen::Index>(idx.size());
            Matrix msub(n, n);
            Vector asub(n);
            for (Eigen::Index r = 0; r < n; ++r) {
                asub(r) = a(idx[static_cast<std::size_t>(r)]);
                for (Eigen::Index c = 0; c < n; ++c)
                    msub(r, c) = m(idx[static_cast<std::size_t>(r)], idx[static_cast<std::size_t>(c)]);
            }
            // Duplicate kernels make M singular; a whisper of ridge keeps the solve stable.
            msub.diagonal().array() += 1e-12 * (1.0 + msub.trace() / std::max<double>(1, n));
            Vector z = msub.ldlt().solve(asub);

            if ((z.array() >= 0.0).all()) {
                w.setZero();
                for (Eigen::Index r = 0; r < n; ++r) w(idx[static_cast<std::size_t>(r)]) = z(r);
                break;
            }
            double alpha = 1.0;
            for (Eigen::Index r = 0; r < n; ++r) {
                if (z(r) < 0.0) {
                    const double wr = w(idx[static_cast<std::size_t>(r)]);
                    alpha = std::min(alpha, wr / (wr - z(r)));
                }
            }
            for (Eigen::Index r = 0; r < n; ++r) {
                const int j = idx[static_cast<std::size_t>(r)];
                w(j) += alpha * (z(r) - w(j));
                if (w(j) <= 1e-14) {
                    w(j) = 0.0;
                    passive[static_cast<std::size_t>(j)] = false;
                }
            }
        }
    }

    Vector best = value(w) < value(v) ? w : v;

    // Exact coordinate minimization polish: drives the KKT residual of this
    // tiny p-dimensional problem to machine precision even when M is nearly
    // singular (adjacent-bandwidth kernels are strongly correlated).
    const double kkt_tol = 1e-15 * (1.0 + a.cwiseAbs().maxCoeff());
    for (int sweep = 0; sweep < 100000; ++sweep) {
        double worst = 0.0;
        for (Eigen::Index i = 0; i < p; ++i) {
            if (m(i, i) <= 1e-300) continue;
            const double gi = 2.0 * (m.row(i).dot(best) - a(i));
            const double viol = best(i) > 0.0 ? std::abs(gi) : std::max(0.0, -gi);
            worst = std::max(worst, viol);
            best(i) = std::max(0.0, best(i) - gi / (2.0 * m(i, i)));
        }
        if (worst <= kkt_tol) break;
    }
    return best;
}

}  // namespace

Vector alignf_weights(const std::vector<KernelMatrix>& kernels, const Vector& y,
                      double cap, bool* used_fallback) {
    check_kernel_stack(kernels, y);
    if (cap <= 0.0) throw DomainError("cap must be positive");
    const auto p = static_cast<Eigen::Index>(kernels.size());

    const auto kc = centered(kernels);
    Matrix m(p, p);
    Vector a(p);
    for (Eigen::Index i = 0; i < p; ++i) {
        a(i) = y.dot(kc[static_cast<std::size_t>(i)].values * y);
        for (Eigen::Index j = i; j < p; ++j) {
            m(i, j) = frobenius_inner(kc[static_cast<std::size_t>(i)].values,
                                      kc[static_cast<std::size_t>(j)].values);
            m(j, i) = m(i, j);
        }
    }

    const Vector v = nonneg_quadratic_min(m, a);
    const double total = v.sum();
    if (total <= 1e-300) {
        if (used_fallback != nullptr) *used_fallback = true;
        return uniform_weights(static_cast<int>(p), cap);
    }
    if (used_fallback != nullptr) *used_fallback = false;
    return (cap / total) * v;
}

double centered_alignment(const std::vector<KernelMatrix>& kernels, const Vector& mu,
                          const Vector& y) {
    check_kernel_stack(kernels, y);
    const KernelMatrix combined = combine_kernels(mu.cwiseMax(0.0), kernels);
    const KernelMatrix kc = center_kernel_matrix(combined);
    const double denom = kc.values.norm() * y.squaredNorm();
    if (denom <= 1e-300) return 0.0;
    return y.dot(kc.values * y) / denom;
}

namespace {

struct OuterLoopResult {
    Vector mu;
    double objective = 0.0;
    std::vector<double> trace;
    bool converged = false;
};

}  // namespace

MKLModel train_os_svm(const std::vector<KernelMatrix>& kernels, const Vector& y,
                      double c, double cap) {
    check_kernel_stack(kernels, y);
    if (c <= 0.0 || cap <= 0.0) throw DomainError("C and cap must be positive");
    const auto p = static_cast<Eigen::Index>(kernels.size());

    Vector traces(p);
    for (Eigen::Index k = 0; k < p; ++k)
        traces(k) = std::max(kernels[static_cast<std::size_t>(k)].values.trace(), 1e-300);

    SvmOptions inner;
    inner.kkt_tol = 1e-6;
    inner.gap_tol = 1e-6;
    inner.max_pair_steps = 500000;

    Vector warm;
    // Evaluates J(mu) = 2 max_a (sum a - 1/2 a^T Q a) and the subgradient
    // component -s^T K_k s with s the signed dual at the maximizer.
    auto evaluate = [&](const Vector& mu, Vector* subgrad) {
        const KernelMatrix k_mu = combine_kernels(mu, kernels);
        SvmOptions opts = inner;
        if (warm.size() == y.size()) opts.warm_start = &warm;
        const SvmSolution sol = solve_svm_dual(k_mu, y, c, opts);
        warm = sol.dual;
        if (subgrad != nullptr) {
            subgrad->resize(p);
            const Vector& s = sol.h.alpha;
            for (Eigen::Index k = 0; k < p; ++k)
                (*subgrad)(k) = -s.dot(kernels[static_cast<std::size_t>(k)].values * s);
        }
        return 2.0 * sol.dual_objective;
    };

    OuterLoopResult res;
    Vector mu = Vector::Constant(p, cap / traces.sum());
    Vector g(p);
    double j_cur = evaluate(mu, &g);
    res.mu = mu;
    res.objective = j_cur;
    res.trace.push_back(j_cur);

    const double eta0 = mu.norm() / std::max(g.norm(), 1e-300);
    double j_prev = j_cur;
    for (int t = 1; t <= 200; ++t) {
        mu = project_nonneg_weighted_l1(mu - (eta0 / std::sqrt(static_cast<double>(t))) * g,
                                        traces, cap);
        j_cur = evaluate(mu, &g);
        if (j_cur < res.objective) {
            res.objective = j_cur;
            res.mu = mu;
        }
        res.trace.push_back(res.objective);
        if (std::abs(j_cur - j_prev) < 1e-5 * (1.0 + std::abs(j_cur))) {
            res.converged = true;
            break;
        }
        j_prev = j_cur;
    }

    // Coordinate (compass) polish around the best iterate: probe +/- steps per
    // weight, shrink the step when no probe improves.
    mu = res.mu;
    double step = std::max(mu.lpNorm<Eigen::Infinity>(), cap / traces.sum());
    const double step_floor = step * 1e-5;
    while (step > step_floor) {
        bool improved = false;
        for (Eigen::Index k = 0; k < p; ++k) {
            for (const double sgn : {1.0, -1.0}) {
                Vector probe = mu;
                probe(k) += sgn * step;
                probe = project_nonneg_weighted_l1(probe, traces, cap);
                if ((probe - mu).lpNorm<Eigen::Infinity>() <= 1e-16) continue;
                const double j_probe = evaluate(probe, nullptr);
                if (j_probe < res.objective - 1e-14 * (1.0 + std::abs(res.objective))) {
                    res.objective = j_probe;
                    mu = probe;
                    improved = true;
                }
            }
        }
        if (!improved) step *= 0.5;
    }
    res.mu = mu;
    res.trace.push_back(res.objective);

    const KernelMatrix k_mu = combine_kernels(res.mu, kernels);
    SvmOptions final_opts = inner;
    if (warm.size() == y.size()) final_opts.warm_start = &warm;
    const SvmSolution sol = solve_svm_dual(k_mu, y, c, final_opts);

    MKLModel model;
    model.mu = res.mu;
    model.alpha = sol.dual;
    model.bias = sol.h.bias;
    model.method = "os-svm";
    model.objective_trace = std::move(res.trace);
    model.predictor = sol.h;
    model.converged = res.converged;
    return model;
}

MKLModel train_os_krr(const std::vector<KernelMatrix>& kernels, const Vector& y,
                      double lambda, double cap) {
    check_kernel_stack(kernels, y);
    if (lambda <= 0.0 || cap <= 0.0) throw DomainError("lambda and cap must be positive");
    const auto p = static_cast<Eigen::Index>(kernels.size());
    const auto m = y.size();

    // J(mu) = y^T (K_mu + lambda I)^{-1} y, dJ/dmu_k = -alpha^T K_k alpha.
    auto evaluate = [&](const Vector& mu, Vector* grad, Vector* alpha_out) {
        Matrix a = combine_kernels(mu, kernels).values;
        a.diagonal().array() += lambda;
        Eigen::LLT<Matrix> llt(a);
        if (llt.info() != Eigen::Success)
            throw NumericError("combined ridge system not positive definite");
        const Vector alpha = llt.solve(y);
        if (grad != nullptr) {
            grad->resize(p);
            for (Eigen::Index k = 0; k < p; ++k)
                (*grad)(k) = -alpha.dot(kernels[static_cast<std::size_t>(k)].values * alpha);
        }
        if (alpha_out != nullptr) *alpha_out = alpha;
        return y.dot(alpha);
    };

    OuterLoopResult res;
    Vector mu = Vector::Constant(p, cap / std::sqrt(static_cast<double>(p)));
    Vector g(p), g_next(p);
    double j_cur = evaluate(mu, &g, nullptr);
    res.mu = mu;
    res.objective = j_cur;
    res.trace.push_back(j_cur);

    double eta = mu.norm() / std::max(g.norm(), 1e-300);
    for (int it = 0; it < 2000; ++it) {
        // Backtracking on the projected step until the quadratic model holds.
        Vector next;
        double j_next = std::numeric_limits<double>::infinity();
        for (int bt = 0; bt < 60; ++bt) {
            next = project_nonneg_l2(mu - eta * g, cap);
            const Vector d = next - mu;
            j_next = evaluate(next, &g_next, nullptr);
            if (j_next <= j_cur + g.dot(d) + d.squaredNorm() / (2.0 * eta) +
                              1e-12 * (1.0 + std::abs(j_cur)))
                break;
            eta *= 0.5;
        }
        const double change = j_cur - j_next;
        mu = std::move(next);
        j_cur = j_next;
        g = g_next;
        if (j_cur < res.objective) {
            res.objective = j_cur;
            res.mu = mu;
        }
        res.trace.push_back(res.objective);
        if (std::abs(change) < 1e-5 * (1.0 + std::abs(j_cur))) res.converged = true;
        if (std::abs(change) < 1e-11 * (1.0 + std::abs(j_cur))) break;
        eta *= 1.5;
    }

    Vector alpha;
    res.objective = evaluate(res.mu, nullptr, &alpha);
    res.trace.push_back(res.objective);

    MKLModel model;
    model.mu = res.mu;
    model.alpha = alpha;
    model.bias = 0.0;
    model.method = "os-krr";
    model.objective_trace = std::move(res.trace);
    model.predictor.alpha = alpha;
    model.predictor.bias = 0.0;
    model.predictor.spec_id = kCombinedKernelId;
    model.predictor.reg = lambda;
    model.predictor.task = Task::regression;
    model.predictor.rkhs_norm = rkhs_norm(model.predictor, combine_kernels(res.mu, kernels));
    model.converged = res.converged;
    return model;
}

}  // namespace ekp
