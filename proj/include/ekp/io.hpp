#pragma once

#include <string>

#include "ekp/dataset.hpp"
#include "ekp/kernel.hpp"

namespace ekp {

/// Loads a dataset from disk. Formats:
///   csv       numeric columns, label last, optional header (auto-detected)
///   svmlight  "label idx:val ..." with 1-based sparse indices, densified
/// Labels are normalized for the task (0/1 classification input maps to -1/+1).
DataSet load_dataset(const std::string& path, const std::string& format, Task task);

/// Reads an m x m kernel matrix from csv; must be square and symmetric up to
/// roundoff (then symmetrized exactly).
KernelMatrix load_kernel_csv(const std::string& path, int spec_id);

std::string read_text_file(const std::string& path);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace ekp
