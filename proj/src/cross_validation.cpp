#include "ekp/cross_validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "ekp/base_learner.hpp"
#include "ekp/combiner.hpp"
#include "ekp/errors.hpp"
#include "ekp/mkl.hpp"
#include "ekp/pipeline.hpp"
#include "ekp/random.hpp"

namespace ekp {

std::vector<double> CVConfig::default_cap_grid() {
    std::vector<double> grid;
    for (int g = -4; g <= 4; ++g) grid.push_back(std::ldexp(1.0, g));
    return grid;
}

std::vector<double> CVConfig::default_ratio_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 9; ++i) grid.push_back(i / 10.0);
    return grid;
}

Candidate select_hyperparameters(const std::vector<Candidate>& candidates) {
    if (candidates.empty()) throw DomainError("no hyperparameter candidates");
    const Candidate* best = &candidates.front();
    for (const Candidate& c : candidates) {
        if (c.metric < best->metric ||
            (c.metric == best->metric &&
             (c.cap < best->cap || (c.cap == best->cap && c.ratio < best->ratio))))
            best = &c;
    }
    if (!std::isfinite(best->metric))
        throw NumericError("no hyperparameter candidate produced a finite metric");
    return *best;
}

double misclassification_error(const Vector& scores, const Vector& y) {
    if (scores.size() != y.size()) throw ShapeError("score and label sizes differ");
    if (y.size() == 0) throw ShapeError("empty evaluation set");
    Eigen::Index wrong = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        const double predicted = scores(i) >= 0.0 ? 1.0 : -1.0;
        if (predicted != y(i)) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(y.size());
}

double rmse(const Vector& predictions, const Vector& y) {
    if (predictions.size() != y.size()) throw ShapeError("prediction and label sizes differ");
    if (y.size() == 0) throw ShapeError("empty evaluation set");
    return std::sqrt((predictions - y).squaredNorm() / static_cast<double>(y.size()));
}

namespace {

const std::set<std::string> kKnownMethods = {"unif",  "align",  "alignf", "os-svm",
                                             "os-krr", "l1-ens", "l2-ens"};

void validate_config(const DataSet& data, const CVConfig& cfg) {
    if (cfg.n_folds < 3)
        throw DomainError("need at least 3 folds for train/validation/test roles");
    if (data.size() < static_cast<std::size_t>(cfg.n_folds) * 2)
        throw DomainError("dataset too small for the fold count");
    if (cfg.methods.empty()) throw DomainError("no methods requested");
    if (cfg.cap_grid.empty() || cfg.ratio_grid.empty())
        throw DomainError("hyperparameter grids must be non-empty");
    if (cfg.gamma_min > cfg.gamma_max) throw DomainError("empty bandwidth range");
    if (cfg.base_reg <= 0.0) throw DomainError("base regularization must be positive");
    for (double cap : cfg.cap_grid)
        if (cap <= 0.0) throw DomainError("cap grid entries must be positive");
    for (double ratio : cfg.ratio_grid)
        if (!(ratio > 0.0 && ratio < 1.0))
            throw DomainError("ratio grid entries must be in (0,1)");
    for (const std::string& method : cfg.methods) {
        if (kKnownMethods.count(method) == 0)
            throw DomainError("unknown method: " + method);
        if (method == "os-svm" && cfg.task != Task::classification)
            throw DomainError("os-svm applies to classification only");
        if (method == "os-krr" && cfg.task != Task::regression)
            throw DomainError("os-krr applies to regression only");
    }
    if (cfg.task != data.task) throw DomainError("config task does not match dataset");
}

std::vector<std::vector<int>> make_folds(const DataSet& data, int n_folds,
                                         std::uint64_t seed) {
    const int m = static_cast<int>(data.size());
    std::vector<int> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);

    auto shuffle = [](std::vector<int> idx, std::uint64_t s) {
        std::uint64_t state = s;
        for (std::size_t i = idx.size(); i > 1; --i) {
            state = mix64(state + 0x9E3779B97F4A7C15ULL);
            std::swap(idx[i - 1], idx[state % i]);
        }
        return idx;
    };

    std::vector<std::vector<int>> folds(static_cast<std::size_t>(n_folds));
    if (data.task == Task::classification) {
        // Stratified deal: shuffle each class, then distribute round robin.
        std::vector<int> pos, neg;
        for (int i = 0; i < m; ++i) (data.labels(i) > 0 ? pos : neg).push_back(i);
        pos = shuffle(std::move(pos), seed);
        neg = shuffle(std::move(neg), mix64(seed ^ 0xC3C3C3C3C3C3C3C3ULL));
        int slot = 0;
        for (int i : pos) folds[static_cast<std::size_t>(slot++ % n_folds)].push_back(i);
        for (int i : neg) folds[static_cast<std::size_t>(slot++ % n_folds)].push_back(i);
    } else {
        order = shuffle(std::move(order), seed);
        for (int t = 0; t < m; ++t)
            folds[static_cast<std::size_t>(t % n_folds)].push_back(order[static_cast<std::size_t>(t)]);
    }
    for (auto& fold : folds) std::sort(fold.begin(), fold.end());
    return folds;
}

struct RotationData {
    DataSet train, valid, test;
};

RotationData assemble_rotation(const DataSet& data,
                               const std::vector<std::vector<int>>& folds, int rot) {
    const int n_folds = static_cast<int>(folds.size());
    const int test_fold = rot;
    const int valid_fold = (rot + 1) % n_folds;

    std::vector<int> train_idx;
    for (int f = 0; f < n_folds; ++f) {
        if (f == test_fold || f == valid_fold) continue;
        train_idx.insert(train_idx.end(), folds[static_cast<std::size_t>(f)].begin(),
                         folds[static_cast<std::size_t>(f)].end());
    }
    std::sort(train_idx.begin(), train_idx.end());

    RotationData r;
    r.train = subset(data, train_idx);
    r.valid = subset(data, folds[static_cast<std::size_t>(valid_fold)]);
    r.test = subset(data, folds[static_cast<std::size_t>(test_fold)]);

    // Standardize with training-fold statistics only.
    const FeatureScaler scaler = fit_scaler(r.train.features);
    r.train.features = scaler.apply(r.train.features);
    r.valid.features = scaler.apply(r.valid.features);
    r.test.features = scaler.apply(r.test.features);
    return r;
}

double metric_for(Task task, const Vector& scores, const Vector& y) {
    return task == Task::classification ? misclassification_error(scores, y)
                                        : rmse(scores, y);
}

// Combination weights for the selection-only methods at unit scale.
Vector method_direction(const std::string& method,
                        const std::vector<KernelMatrix>& kernels, const Vector& y) {
    const int p = static_cast<int>(kernels.size());
    if (method == "unif") return uniform_weights(p, 1.0);
    if (method == "align") return align_weights(kernels, y, 1.0);
    return alignf_weights(kernels, y, 1.0);
}

struct RotationOutcome {
    double test_error = 0.0;
    double cap = 0.0;
    double ratio = 0.0;
    bool has_ratio = false;
};

// unif / align / alignf: pick the cap on validation, report the test metric.
RotationOutcome run_fixed_weight_method(const std::string& method,
                                        const RotationData& r,
                                        const std::vector<KernelSpec>& specs,
                                        const CVConfig& cfg) {
    const auto kernels = gaussian_kernel_set(r.train.features, r.train.features, specs);
    const auto cross_valid = gaussian_kernel_set(r.valid.features, r.train.features, specs);
    const auto cross_test = gaussian_kernel_set(r.test.features, r.train.features, specs);
    const Vector direction = method_direction(method, kernels, r.train.labels);

    auto fit_and_score = [&](double cap, const std::vector<KernelMatrix>& cross,
                             const Vector& y_eval) {
        const Vector mu = cap * direction;
        const KernelMatrix k_mu = combine_kernels(mu, kernels);
        const BaseHypothesis h =
            cfg.task == Task::classification
                ? train_svm(k_mu, r.train.labels, cfg.base_reg)
                : train_krr(k_mu, r.train.labels, cfg.base_reg);
        const Vector scores = predict(h, combine_kernels(mu, cross));
        return metric_for(cfg.task, scores, y_eval);
    };

    std::vector<Candidate> candidates;
    for (double cap : cfg.cap_grid)
        candidates.push_back({cap, 0.0, false,
                              fit_and_score(cap, cross_valid, r.valid.labels)});
    const Candidate chosen = select_hyperparameters(candidates);

    RotationOutcome out;
    out.cap = chosen.cap;
    out.test_error = fit_and_score(chosen.cap, cross_test, r.test.labels);
    return out;
}

// os-svm / os-krr: the kernel weights are learned per cap candidate.
RotationOutcome run_one_stage_method(const std::string& method, const RotationData& r,
                                     const std::vector<KernelSpec>& specs,
                                     const CVConfig& cfg) {
    const auto kernels = gaussian_kernel_set(r.train.features, r.train.features, specs);
    const auto cross_valid = gaussian_kernel_set(r.valid.features, r.train.features, specs);
    const auto cross_test = gaussian_kernel_set(r.test.features, r.train.features, specs);

    std::vector<Candidate> candidates;
    std::vector<MKLModel> models;
    for (double cap : cfg.cap_grid) {
        MKLModel model = method == "os-svm"
                             ? train_os_svm(kernels, r.train.labels, cfg.base_reg, cap)
                             : train_os_krr(kernels, r.train.labels, cfg.base_reg, cap);
        const Vector scores =
            predict(model.predictor, combine_kernels(model.mu, cross_valid));
        candidates.push_back({cap, 0.0, false,
                              metric_for(cfg.task, scores, r.valid.labels)});
        models.push_back(std::move(model));
    }
    const Candidate chosen = select_hyperparameters(candidates);

    RotationOutcome out;
    out.cap = chosen.cap;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        if (candidates[i].cap == chosen.cap) {
            const MKLModel& model = models[i];
            const Vector scores =
                predict(model.predictor, combine_kernels(model.mu, cross_test));
            out.test_error = metric_for(cfg.task, scores, r.test.labels);
            break;
        }
    }
    return out;
}

// l1-ens / l2-ens: stage-1 bases are cached per split ratio; combiner weights
// are refit per cap.
RotationOutcome run_ensemble_method(const std::string& method, const RotationData& r,
                                    const std::vector<KernelSpec>& specs,
                                    const CVConfig& cfg, std::uint64_t rot_seed) {
    const int q = method == "l1-ens" ? 1 : 2;
    const Loss loss = cfg.task == Task::classification ? Loss::hinge : Loss::square;

    struct RatioCache {
        StagePreparation prep;
        PredictionMatrix valid_predictions;
    };

    std::vector<Candidate> candidates;
    std::vector<RatioCache> cache;
    cache.reserve(cfg.ratio_grid.size());
    for (std::size_t ri = 0; ri < cfg.ratio_grid.size(); ++ri) {
        const double ratio = cfg.ratio_grid[ri];
        RatioCache rc;
        rc.prep = prepare_stages(r.train, specs, cfg.base_reg, ratio,
                                 mix64(rot_seed + ri));
        rc.valid_predictions = base_predictions(rc.prep.bases, specs,
                                                rc.prep.stage1_features, r.valid.features);
        for (double cap : cfg.cap_grid) {
            const CombinerWeights w = fit_combiner(rc.prep.stage2_predictions,
                                                   rc.prep.stage2_labels, q, cap, loss);
            const Vector scores = predict_combination(w, rc.valid_predictions);
            candidates.push_back({cap, ratio, true,
                                  metric_for(cfg.task, scores, r.valid.labels)});
        }
        cache.push_back(std::move(rc));
    }
    const Candidate chosen = select_hyperparameters(candidates);

    RotationOutcome out;
    out.cap = chosen.cap;
    out.ratio = chosen.ratio;
    out.has_ratio = true;
    for (std::size_t ri = 0; ri < cfg.ratio_grid.size(); ++ri) {
        if (cfg.ratio_grid[ri] == chosen.ratio) {
            const RatioCache& rc = cache[ri];
            const CombinerWeights w = fit_combiner(rc.prep.stage2_predictions,
                                                   rc.prep.stage2_labels, q, chosen.cap,
                                                   loss);
            const PredictionMatrix test_pred = base_predictions(
                rc.prep.bases, specs, rc.prep.stage1_features, r.test.features);
            out.test_error =
                metric_for(cfg.task, predict_combination(w, test_pred), r.test.labels);
            break;
        }
    }
    return out;
}

bool single_class(const Vector& y) {
    return !((y.array() > 0).any() && (y.array() < 0).any());
}

}  // namespace

CVResult run_cv_experiment(const DataSet& data, const CVConfig& config) {
    validate_config(data, config);

    CVResult result;
    result.seed = config.seed;
    result.config = config;
    result.rotation_scheme = "test=fold i, validation=fold (i+1) mod n_folds";
    for (const std::string& method : config.methods)
        result.methods.push_back(MethodCV{method, {}, {}, {}, 0.0, 0.0, 0.0});

    const std::vector<KernelSpec> specs = gaussian_grid(config.gamma_min, config.gamma_max);
    const auto folds = make_folds(data, config.n_folds, config.seed);

    for (int rot = 0; rot < config.n_folds; ++rot) {
        const RotationData r = assemble_rotation(data, folds, rot);
        if (config.task == Task::classification && single_class(r.train.labels)) {
            result.skipped_rotations.push_back(rot);
            result.warnings.push_back("rotation " + std::to_string(rot) +
                                      " skipped: training folds hold a single class");
            continue;
        }
        const std::uint64_t rot_seed =
            mix64(config.seed ^ mix64(static_cast<std::uint64_t>(rot)));

        for (MethodCV& mc : result.methods) {
            const auto t0 = std::chrono::steady_clock::now();
            RotationOutcome out;
            if (mc.method == "unif" || mc.method == "align" || mc.method == "alignf")
                out = run_fixed_weight_method(mc.method, r, specs, config);
            else if (mc.method == "os-svm" || mc.method == "os-krr")
                out = run_one_stage_method(mc.method, r, specs, config);
            else
                out = run_ensemble_method(mc.method, r, specs, config, rot_seed);
            const auto t1 = std::chrono::steady_clock::now();

            mc.test_errors.push_back(out.test_error);
            mc.selected_caps.push_back(out.cap);
            if (out.has_ratio) mc.selected_ratios.push_back(out.ratio);
            mc.wall_seconds += std::chrono::duration<double>(t1 - t0).count();
        }
    }

    for (MethodCV& mc : result.methods) {
        const auto n = mc.test_errors.size();
        if (n == 0)
            throw DomainError("every rotation was skipped for method " + mc.method);
        const double mean =
            std::accumulate(mc.test_errors.begin(), mc.test_errors.end(), 0.0) /
            static_cast<double>(n);
        double ss = 0.0;
        for (double e : mc.test_errors) ss += (e - mean) * (e - mean);
        mc.mean_error = mean;
        mc.std_dev = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
    }
    return result;
}

}  // namespace ekp
