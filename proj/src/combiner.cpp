#include "ekp/combiner.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <Eigen/Eigenvalues>

#include "ekp/errors.hpp"

namespace ekp {

std::string loss_name(Loss loss) {
    return loss == Loss::hinge ? "hinge" : "square";
}

Loss parse_loss(const std::string& name) {
    if (name == "hinge") return Loss::hinge;
    if (name == "square") return Loss::square;
    throw ParseError("unknown loss: " + name);
}

Vector project_nonneg_l1(const Vector& v, double cap) {
    Vector x = v.cwiseMax(0.0);
    const double total = x.sum();
    if (total <= cap) return x;

    // Projection onto the scaled simplex {x >= 0, sum x = cap}: x_i = max(v_i - tau, 0)
    // with tau chosen from the sorted prefix sums.
    std::vector<double> u(x.data(), x.data() + x.size());
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cum = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        cum += u[j];
        const double t = (cum - cap) / static_cast<double>(j + 1);
        if (u[j] - t > 0.0)
            tau = t;
        else
            break;
    }
    return (x.array() - tau).cwiseMax(0.0).matrix();
}

Vector project_nonneg_l2(const Vector& v, double cap) {
    Vector x = v.cwiseMax(0.0);
    const double norm = x.norm();
    if (norm > cap) x *= cap / norm;
    return x;
}

Vector project_nonneg_weighted_l1(const Vector& v, const Vector& w, double cap) {
    if (v.size() != w.size()) throw ShapeError("projection weight size mismatch");
    if ((w.array() <= 0.0).any()) throw DomainError("projection weights must be positive");
    Vector x = v.cwiseMax(0.0);
    if (w.dot(x) <= cap) return x;

    // Waterfilling on {x >= 0, w.x = cap}: x_i = max(v_i - tau w_i, 0), with the
    // active set determined by the sorted ratios v_i / w_i.
    const auto n = v.size();
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return x(a) / w(a) > x(b) / w(b); });
    double s1 = 0.0, s2 = 0.0, tau = 0.0;
    for (std::size_t j = 0; j < order.size(); ++j) {
        const int i = order[j];
        s1 += w(i) * x(i);
        s2 += w(i) * w(i);
        const double t = (s1 - cap) / s2;
        if (x(i) - t * w(i) > 0.0)
            tau = t;
        else
            break;
    }
    return (x.array() - tau * w.array()).cwiseMax(0.0).matrix();
}

namespace {

void check_combiner_inputs(const PredictionMatrix& p, const Vector& y) {
    if (p.rows() != y.size()) throw ShapeError("prediction rows do not match labels");
    if (p.cols() < 1) throw ShapeError("need at least one prediction column");
    if (!p.allFinite()) throw DomainError("non-finite prediction entries");
    if (!y.allFinite()) throw DomainError("non-finite labels");
}

Vector project(const Vector& v, int q, double cap) {
    return q == 1 ? project_nonneg_l1(v, cap) : project_nonneg_l2(v, cap);
}

double largest_eigenvalue(const Matrix& g) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(g, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

// Monotone accelerated projected gradient for F(mu) = ||P mu - y||^2.
Vector solve_square(const PredictionMatrix& p, const Vector& y, int q, double cap) {
    const auto dim = p.cols();
    const Matrix gram = p.transpose() * p;
    const Vector pty = p.transpose() * y;
    const double lip = 2.0 * std::max(largest_eigenvalue(gram), 0.0);
    Vector mu = Vector::Zero(dim);
    if (lip <= 1e-300) return mu;  // P == 0, objective constant

    auto value = [&](const Vector& m) {
        return m.dot(gram * m) - 2.0 * pty.dot(m) + y.squaredNorm();
    };
    auto gradient = [&](const Vector& m) -> Vector { return 2.0 * (gram * m - pty); };

    Vector z = mu;
    double t = 1.0;
    double f = value(mu);
    for (int it = 0; it < 10000; ++it) {
        Vector cand = project(z - gradient(z) / lip, q, cap);
        double f_cand = value(cand);
        if (f_cand > f) {
            // Restart from the plain projected step; the descent lemma keeps it monotone.
            cand = project(mu - gradient(mu) / lip, q, cap);
            f_cand = value(cand);
            t = 1.0;
        }
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        z = cand + ((t - 1.0) / t_next) * (cand - mu);
        t = t_next;
        const double change = f - f_cand;
        mu = std::move(cand);
        f = f_cand;
        if (change >= 0.0 && change <= 1e-9 * (1.0 + std::abs(f))) break;
    }
    return mu;
}

double hinge_sum(const PredictionMatrix& p, const Vector& y, const Vector& mu) {
    return (1.0 - y.array() * (p * mu).array()).cwiseMax(0.0).sum();
}

// Hinge fit: projected subgradient with averaging, then a smoothed-loss
// continuation that drives the accuracy to the certified tolerance.
Vector solve_hinge(const PredictionMatrix& p, const Vector& y, int q, double cap) {
    const auto dim = p.cols();
    const Matrix gram = p.transpose() * p;
    const double gram_top = std::max(largest_eigenvalue(gram), 1e-300);

    Vector mu = Vector::Zero(dim);
    Vector best = mu;
    double best_f = hinge_sum(p, y, mu);

    auto consider = [&](const Vector& m) {
        const double f = hinge_sum(p, y, m);
        if (f < best_f) {
            best_f = f;
            best = m;
        }
    };

    // Subgradient phase with a decaying step and running average.
    double grad_scale = 0.0;
    for (Eigen::Index i = 0; i < p.rows(); ++i)
        grad_scale += p.row(i).norm();
    grad_scale = std::max(grad_scale, 1e-300);
    const double eta0 = cap / grad_scale;
    Vector avg = Vector::Zero(dim);
    for (int it = 1; it <= 300; ++it) {
        const Vector scores = p * mu;
        const Eigen::ArrayXd margins = 1.0 - y.array() * scores.array();
        const Vector active = (margins > 0.0).select(y.array(), 0.0).matrix();
        const Vector g = -(p.transpose() * active);
        mu = project(mu - (eta0 / std::sqrt(static_cast<double>(it))) * g, q, cap);
        avg = ((it - 1.0) * avg + mu) / it;
        consider(mu);
    }
    consider(avg);

    // Continuation on the Moreau envelope of the hinge: with envelope width d,
    // the smoothed loss has a (top eigenvalue of P^T P)/d Lipschitz gradient and
    // sits within d/2 per active point of the true hinge.
    auto smooth_value = [&](const Vector& m, double d) {
        double total = 0.0;
        const Vector scores = p * m;
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double z = 1.0 - y(i) * scores(i);
            if (z <= 0.0)
                continue;
            else if (z <= d)
                total += z * z / (2.0 * d);
            else
                total += z - 0.5 * d;
        }
        return total;
    };
    auto smooth_gradient = [&](const Vector& m, double d) -> Vector {
        const Vector scores = p * m;
        Vector w(y.size());
        for (Eigen::Index i = 0; i < y.size(); ++i) {
            const double z = 1.0 - y(i) * scores(i);
            w(i) = z <= 0.0 ? 0.0 : (z <= d ? z / d : 1.0);
        }
        return -(p.transpose() * y.cwiseProduct(w));
    };

    Vector cur = best;
    for (double d = 1.0; d >= 0.5e-9; d /= 10.0) {
        const double lip = gram_top / d;
        Vector z = cur;
        double t = 1.0;
        double f = smooth_value(cur, d);
        for (int it = 0; it < 400; ++it) {
            Vector cand = project(z - smooth_gradient(z, d) / lip, q, cap);
            double f_cand = smooth_value(cand, d);
            if (f_cand > f) {
                cand = project(cur - smooth_gradient(cur, d) / lip, q, cap);
                f_cand = smooth_value(cand, d);
                t = 1.0;
            }
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            z = cand + ((t - 1.0) / t_next) * (cand - cur);
            t = t_next;
            const double change = f - f_cand;
            cur = std::move(cand);
            f = f_cand;
            if (change >= 0.0 && change <= 1e-12 * (1.0 + std::abs(f))) break;
        }
        consider(cur);
    }
    return best;
}

}  // namespace

double combiner_objective(const PredictionMatrix& p, const Vector& y,
                          const Vector& mu, Loss loss) {
    check_combiner_inputs(p, y);
    if (p.cols() != mu.size()) throw ShapeError("weight length does not match columns");
    const Vector scores = p * mu;
    if (loss == Loss::square) return (scores - y).squaredNorm();
    return (1.0 - y.array() * scores.array()).cwiseMax(0.0).sum();
}

CombinerWeights fit_combiner(const PredictionMatrix& p, const Vector& y, int q,
                             double cap, Loss loss) {
    check_combiner_inputs(p, y);
    if (q != 1 && q != 2) throw DomainError("combiner norm order must be 1 or 2");
    if (cap <= 0.0) throw DomainError("combiner cap must be positive");
    if (loss == Loss::hinge) {
        for (Eigen::Index i = 0; i < y.size(); ++i)
            if (y(i) != 1.0 && y(i) != -1.0)
                throw DomainError("hinge combiner requires +1/-1 labels");
    }

    CombinerWeights w;
    w.q = q;
    w.cap = cap;
    w.loss = loss;
    w.mu = loss == Loss::square ? solve_square(p, y, q, cap)
                                : solve_hinge(p, y, q, cap);
    return w;
}

Vector predict_combination(const CombinerWeights& w, const PredictionMatrix& p) {
    if (p.cols() != w.mu.size())
        throw ShapeError("prediction columns do not match weight length");
    return p * w.mu;
}

}  // namespace ekp
