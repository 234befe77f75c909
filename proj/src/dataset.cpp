#include "ekp/dataset.hpp"

#include <cmath>
#include <set>

#include "ekp/errors.hpp"

namespace ekp {

std::string task_name(Task t) {
    return t == Task::classification ? "classification" : "regression";
}

Task parse_task(const std::string& name) {
    if (name == "classification") return Task::classification;
    if (name == "regression") return Task::regression;
    throw DomainError("unknown task '" + name + "' (expected classification|regression)");
}

void normalize_labels(DataSet& data) {
    if (data.size() < 1 || data.dim() < 1)
        throw DomainError("dataset must have at least one row and one feature");
    if (!data.features.allFinite() || !data.labels.allFinite())
        throw DomainError("dataset contains non-finite values");
    if (data.labels.size() != data.size())
        throw ShapeError("label count does not match row count");

    if (data.task != Task::classification) return;

    std::set<double> values(data.labels.begin(), data.labels.end());
    for (double v : values)
        if (v != -1.0 && v != 0.0 && v != 1.0)
            throw DomainError("classification labels must lie in {-1,0,+1}; found " +
                              std::to_string(v));
    if (values.count(0.0)) {
        if (values.count(-1.0))
            throw DomainError("ambiguous classification labels: both 0 and -1 present");
        // 0/1 input convention
        for (Eigen::Index i = 0; i < data.labels.size(); ++i)
            data.labels[i] = data.labels[i] == 0.0 ? -1.0 : 1.0;
        data.labels_remapped = true;
    }
}

DataSet subset(const DataSet& data, const std::vector<int>& indices) {
    DataSet out;
    out.task = data.task;
    out.source = data.source;
    out.format = data.format;
    out.labels_remapped = data.labels_remapped;
    out.features.resize(static_cast<Eigen::Index>(indices.size()), data.dim());
    out.labels.resize(static_cast<Eigen::Index>(indices.size()));
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] < 0 || indices[i] >= data.size())
            throw DomainError("subset: index out of range");
        out.features.row(static_cast<Eigen::Index>(i)) = data.features.row(indices[i]);
        out.labels[static_cast<Eigen::Index>(i)] = data.labels[indices[i]];
    }
    return out;
}

Matrix FeatureScaler::apply(const Matrix& x) const {
    if (x.cols() != mean.size())
        throw ShapeError("FeatureScaler: feature dimension mismatch");
    Matrix out = x;
    out.rowwise() -= mean.transpose();
    out.array().rowwise() /= scale.transpose().array();
    return out;
}

FeatureScaler fit_scaler(const Matrix& x) {
    if (x.rows() < 1) throw DomainError("fit_scaler: empty matrix");
    FeatureScaler s;
    s.mean = x.colwise().mean();
    Matrix centered = x.rowwise() - s.mean.transpose();
    s.scale = (centered.array().square().colwise().sum() / double(x.rows())).sqrt();
    for (Eigen::Index j = 0; j < s.scale.size(); ++j)
        if (s.scale[j] <= 0.0) s.scale[j] = 1.0;
    return s;
}

}  // namespace ekp
