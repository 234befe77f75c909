#include "ekp/base_learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Cholesky>

#include "ekp/errors.hpp"

namespace ekp {

namespace {

void check_training_inputs(const KernelMatrix& k, const Vector& y) {
    if (!k.is_square || k.rows() != k.cols())
        throw ShapeError("training kernel matrix must be square");
    if (k.rows() != y.size())
        throw ShapeError("kernel size does not match label count");
    if (y.size() == 0) throw ShapeError("empty training set");
}

}  // namespace

BaseHypothesis train_krr(const KernelMatrix& k, const Vector& y, double lambda) {
    check_training_inputs(k, y);
    if (lambda <= 0.0) throw DomainError("krr requires lambda > 0");

    const auto m = y.size();
    Matrix a = k.values;
    a.diagonal().array() += lambda;

    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        // K + lambda I is PD in exact arithmetic; nudge past roundoff.
        const double jitter = 1e-10 * k.values.trace() / static_cast<double>(m);
        a.diagonal().array() += jitter;
        llt.compute(a);
        if (llt.info() != Eigen::Success)
            throw NumericError("krr factorization failed", jitter);
    }

    Vector alpha = llt.solve(y);
    Vector resid = y - a * alpha;
    alpha += llt.solve(resid);
    resid = y - a * alpha;
    const double rel = resid.norm() / std::max(y.norm(), 1e-300);
    if (!(rel <= 1e-8)) throw NumericError("krr solve did not converge", rel);

    BaseHypothesis h;
    h.alpha = std::move(alpha);
    h.bias = 0.0;
    h.spec_id = k.spec_id;
    h.reg = lambda;
    h.task = Task::regression;
    h.rkhs_norm = rkhs_norm(h, k);
    return h;
}

namespace {

struct SmoState {
    Vector a;      // dual variables in [0, C]
    Vector grad;   // G_i = (Qa)_i - 1
    const Matrix& k;
    const Vector& y;
    double c;

    SmoState(const Matrix& kernel, const Vector& labels, double box)
        : k(kernel), y(labels), c(box) {}
};

// Maximal-violating-pair selection. Returns false when the KKT gap m(a) - M(a)
// is within tol, i.e. the iterate is an eps-accurate solution.
bool select_pair(const SmoState& s, double tol, int& out_i, int& out_j,
                 double& out_violation) {
    const auto m = s.a.size();
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    int ii = -1, jj = -1;
    for (Eigen::Index t = 0; t < m; ++t) {
        const double score = -s.y(t) * s.grad(t);
        const bool in_up = (s.y(t) > 0 && s.a(t) < s.c) || (s.y(t) < 0 && s.a(t) > 0);
        const bool in_low = (s.y(t) > 0 && s.a(t) > 0) || (s.y(t) < 0 && s.a(t) < s.c);
        if (in_up && score > up_best) {
            up_best = score;
            ii = static_cast<int>(t);
        }
        if (in_low && score < low_best) {
            low_best = score;
            jj = static_cast<int>(t);
        }
    }
    out_violation = up_best - low_best;
    out_i = ii;
    out_j = jj;
    return ii >= 0 && jj >= 0 && out_violation > tol;
}

double compute_bias(const SmoState& s) {
    // Average of y_t - f(x_t) over free support vectors; those points satisfy
    // the margin with equality, so each gives an exact bias estimate.
    double sum = 0.0;
    int n_free = 0;
    const auto m = s.a.size();
    for (Eigen::Index t = 0; t < m; ++t) {
        if (s.a(t) > 0.0 && s.a(t) < s.c) {
            sum += -s.y(t) * s.grad(t);
            ++n_free;
        }
    }
    if (n_free > 0) return sum / n_free;

    // No free SV: any value between the bound scores is consistent; take the midpoint.
    double up_best = -std::numeric_limits<double>::infinity();
    double low_best = std::numeric_limits<double>::infinity();
    for (Eigen::Index t = 0; t < m; ++t) {
        const double score = -s.y(t) * s.grad(t);
        const bool in_up = (s.y(t) > 0 && s.a(t) < s.c) || (s.y(t) < 0 && s.a(t) > 0);
        const bool in_low = (s.y(t) > 0 && s.a(t) > 0) || (s.y(t) < 0 && s.a(t) < s.c);
        if (in_up) up_best = std::max(up_best, score);
        if (in_low) low_best = std::min(low_best, score);
    }
    if (!std::isfinite(up_best) || !std::isfinite(low_best)) return 0.0;
    return 0.5 * (up_best + low_best);
}

}  // namespace

SvmSolution solve_svm_dual(const KernelMatrix& k, const Vector& y, double c,
                           const SvmOptions& opts) {
    check_training_inputs(k, y);
    if (c <= 0.0) throw DomainError("svm requires C > 0");
    const auto m = y.size();
    for (Eigen::Index i = 0; i < m; ++i)
        if (y(i) != 1.0 && y(i) != -1.0)
            throw DomainError("svm labels must be +1/-1 after normalization");

    const bool has_pos = (y.array() > 0).any();
    const bool has_neg = (y.array() < 0).any();
    if (!has_pos || !has_neg) {
        SvmSolution sol;
        sol.h.alpha = Vector::Zero(m);
        sol.h.bias = has_pos ? 1.0 : -1.0;
        sol.h.spec_id = k.spec_id;
        sol.h.reg = c;
        sol.h.task = Task::classification;
        sol.h.degenerate = true;
        sol.dual = Vector::Zero(m);
        sol.dual_objective = 0.0;
        sol.primal_objective = 0.0;
        sol.gap = 0.0;
        sol.kkt_violation = 0.0;
        sol.pair_steps = 0;
        return sol;
    }

    SmoState s(k.values, y, c);
    bool warm = false;
    if (opts.warm_start != nullptr && opts.warm_start->size() == m) {
        s.a = opts.warm_start->cwiseMax(0.0).cwiseMin(c);
        // Pair updates preserve y^T a = 0, so the start point must satisfy it.
        if (std::abs(y.dot(s.a)) <= 1e-9 * std::max(1.0, s.a.sum())) {
            Vector signed_a = s.a.cwiseProduct(y);
            s.grad = (k.values * signed_a).cwiseProduct(y);
            s.grad.array() -= 1.0;
            warm = true;
        }
    }
    if (!warm) {
        s.a = Vector::Zero(m);
        s.grad = Vector::Constant(m, -1.0);
    }

    long steps = 0;
    double violation = 0.0;
    double tol = opts.kkt_tol;
    int i = -1, j = -1;

    auto run_to_tol = [&](double t) {
        while (steps < opts.max_pair_steps && select_pair(s, t, i, j, violation)) {
            const double kii = s.k(i, i), kjj = s.k(j, j), kij = s.k(i, j);
            double curv = kii + kjj - 2.0 * kij;
            if (curv < 1e-12) curv = 1e-12;
            // Unconstrained optimum along the feasible direction, then clip to the box.
            const double score_i = -s.y(i) * s.grad(i);
            const double score_j = -s.y(j) * s.grad(j);
            double step = (score_i - score_j) / curv;

            const double max_i = s.y(i) > 0 ? s.c - s.a(i) : s.a(i);
            const double max_j = s.y(j) > 0 ? s.a(j) : s.c - s.a(j);
            step = std::min(step, std::min(max_i, max_j));
            if (step <= 0.0) break;

            s.a(i) += s.y(i) > 0 ? step : -step;
            s.a(j) += s.y(j) > 0 ? -step : step;
            // dG_t = step * y_t (K_ti - K_tj)
            s.grad += step * (s.y.array() * (s.k.col(i) - s.k.col(j)).array()).matrix();
            ++steps;
        }
    };

    run_to_tol(tol);

    auto evaluate = [&](SvmSolution& sol) {
        Vector signed_a = s.a.cwiseProduct(y);
        const double quad = signed_a.dot(k.values * signed_a);
        sol.dual_objective = s.a.sum() - 0.5 * quad;
        const double bias = compute_bias(s);
        // Primal at (w, b) implied by the dual iterate, hinge slacks explicit:
        // f~_i = y_i (G_i + 1) is the margin-free decision value.
        double hinge = 0.0;
        for (Eigen::Index t = 0; t < m; ++t) {
            const double f = y(t) * (s.grad(t) + 1.0) + bias;
            hinge += std::max(0.0, 1.0 - y(t) * f);
        }
        sol.primal_objective = 0.5 * quad + c * hinge;
        sol.gap = sol.primal_objective - sol.dual_objective;
        sol.h.bias = bias;
    };

    SvmSolution sol;
    sol.h.spec_id = k.spec_id;
    sol.h.reg = c;
    sol.h.task = Task::classification;
    evaluate(sol);

    // Certificate check: shrink the pair tolerance until the duality gap closes.
    const double scale = std::max(1.0, std::abs(sol.dual_objective));
    while (sol.gap > opts.gap_tol * scale && tol > 1e-12 &&
           steps < opts.max_pair_steps) {
        tol /= 10.0;
        run_to_tol(tol);
        evaluate(sol);
    }

    select_pair(s, 0.0, i, j, violation);
    sol.kkt_violation = std::max(violation, 0.0);
    sol.dual = s.a;
    sol.h.alpha = s.a.cwiseProduct(y);
    sol.h.rkhs_norm = rkhs_norm(sol.h, k);
    sol.pair_steps = steps;
    return sol;
}

BaseHypothesis train_svm(const KernelMatrix& k, const Vector& y, double c,
                         const SvmOptions& opts) {
    return solve_svm_dual(k, y, c, opts).h;
}

Vector predict(const BaseHypothesis& h, const KernelMatrix& cross) {
    if (cross.cols() != h.alpha.size())
        throw ShapeError("cross kernel column count does not match training size");
    if (h.spec_id != cross.spec_id)
        throw DomainError("kernel id mismatch between hypothesis and evaluation matrix");
    Vector out = cross.values * h.alpha;
    out.array() += h.bias;
    return out;
}

double rkhs_norm(const BaseHypothesis& h, const KernelMatrix& k_train) {
    if (k_train.rows() != h.alpha.size())
        throw ShapeError("kernel size does not match coefficient count");
    const double q = h.alpha.dot(k_train.values * h.alpha);
    return std::sqrt(std::max(q, 0.0));
}

}  // namespace ekp
