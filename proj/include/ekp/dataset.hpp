#pragma once

#include <string>

#include "ekp/kernel.hpp"

namespace ekp {

enum class Task { classification, regression };

std::string task_name(Task t);
Task parse_task(const std::string& name);

/// A labeled sample. Classification labels are normalized to {-1,+1}.
struct DataSet {
    Matrix features;  // m x d, one row per point
    Vector labels;    // length m
    Task task = Task::classification;
    std::string source;         // file path or generator tag
    std::string format;         // "csv", "svmlight", "synthetic"
    bool labels_remapped = false;  // true when 0/1 input labels were mapped to -1/+1

    Eigen::Index size() const { return features.rows(); }
    Eigen::Index dim() const { return features.cols(); }
};

/// Validates invariants (non-empty, finite, label range for classification)
/// and applies the 0/1 -> -1/+1 remapping. Throws DomainError on violation.
void normalize_labels(DataSet& data);

/// Row subset of a dataset.
DataSet subset(const DataSet& data, const std::vector<int>& indices);

/// Per-feature z-score statistics.
struct FeatureScaler {
    Vector mean;
    Vector scale;  // standard deviation, 1 where the feature is constant

    Matrix apply(const Matrix& x) const;
};

/// Fits mean/std on the given rows only.
FeatureScaler fit_scaler(const Matrix& x);

}  // namespace ekp
