#include "ekp/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "ekp/errors.hpp"
#include "ekp/kernel.hpp"
#include "ekp/random.hpp"

namespace ekp {

DataSet make_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n < 2 || cfg.dim < 1 || cfg.n_centers < 1)
        throw DomainError("synthetic generator needs n >= 2, dim >= 1, centers >= 1");
    if (cfg.gamma0 <= 0.0) throw DomainError("generative bandwidth must be positive");
    if (cfg.noise < 0.0) throw DomainError("noise level must be non-negative");

    Rng rng(cfg.seed);
    Matrix x(cfg.n, cfg.dim);
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j) x(i, j) = rng.uniform(-1.0, 1.0);

    Matrix centers(cfg.n_centers, cfg.dim);
    for (Eigen::Index i = 0; i < centers.rows(); ++i)
        for (Eigen::Index j = 0; j < centers.cols(); ++j)
            centers(i, j) = rng.uniform(-1.0, 1.0);

    Vector coef(cfg.n_centers);
    for (Eigen::Index j = 0; j < coef.size(); ++j)
        coef(j) = rng.uniform() < 0.5 ? -1.0 : 1.0;

    const KernelMatrix cross = gaussian_kernel_matrix(x, centers, cfg.gamma0);
    Vector f = cross.values * coef;
    for (Eigen::Index i = 0; i < f.size(); ++i) f(i) += cfg.noise * rng.gaussian();

    DataSet data;
    data.features = std::move(x);
    data.task = cfg.task;
    data.source = "synthetic(seed=" + std::to_string(cfg.seed) + ")";
    data.format = "generated";

    if (cfg.task == Task::regression) {
        data.labels = std::move(f);
    } else {
        std::vector<double> sorted(f.data(), f.data() + f.size());
        std::nth_element(sorted.begin(), sorted.begin() + sorted.size() / 2, sorted.end());
        const double median = sorted[sorted.size() / 2];
        data.labels.resize(f.size());
        for (Eigen::Index i = 0; i < f.size(); ++i)
            data.labels(i) = f(i) >= median ? 1.0 : -1.0;
    }
    normalize_labels(data);
    return data;
}

}  // namespace ekp
