#pragma once

#include <string>

#include "ekp/kernel.hpp"

namespace ekp {

enum class Loss { hinge, square };

std::string loss_name(Loss loss);
Loss parse_loss(const std::string& name);

/// Rows are second-stage sample points, column k holds base predictor k's outputs.
using PredictionMatrix = Matrix;

struct CombinerWeights {
    Vector mu;
    int q = 1;         // norm order of the cap, 1 or 2
    double cap = 1.0;  // ||mu||_q <= cap
    Loss loss = Loss::square;
};

/// Euclidean projection onto {x >= 0, sum x <= cap}.
Vector project_nonneg_l1(const Vector& v, double cap);

/// Euclidean projection onto {x >= 0, ||x||_2 <= cap}.
Vector project_nonneg_l2(const Vector& v, double cap);

/// Euclidean projection onto {x >= 0, w.x <= cap} for positive weights w.
Vector project_nonneg_weighted_l1(const Vector& v, const Vector& w, double cap);

/// Sum over sample points of hinge(s,y)=max(1-ys,0) or square(s,y)=(s-y)^2
/// evaluated at scores s = P mu.
double combiner_objective(const PredictionMatrix& p, const Vector& y,
                          const Vector& mu, Loss loss);

/// Fits non-negative weights over the prediction columns under ||mu||_q <= cap,
/// minimizing the summed loss. No intercept.
CombinerWeights fit_combiner(const PredictionMatrix& p, const Vector& y, int q,
                             double cap, Loss loss);

Vector predict_combination(const CombinerWeights& w, const PredictionMatrix& p);

}  // namespace ekp
