#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "ekp/cross_validation.hpp"
#include "ekp/pipeline.hpp"
#include "ekp/rademacher.hpp"

namespace ekp {

using ordered_json = nlohmann::ordered_json;

/// Serializers with stable key order and full-precision numbers, so identical
/// runs produce byte-identical files. Wall-clock timings are never included.
ordered_json to_json(const RademacherEstimate& est);
ordered_json to_json(const BoundReport& rep);
ordered_json to_json(const MomentCheck& chk);
ordered_json to_json(const EquivalenceReport& rep);
ordered_json to_json(const CVConfig& cfg);
ordered_json to_json(const CVResult& result);

/// Serializes doc (indent 2, trailing newline) to path.
void write_result(const ordered_json& doc, const std::string& path);

/// One row per method, "mean±std" formatted per task.
std::string render_method_table(const CVResult& result);

/// Aggregates previously written result files into one text table.
std::string render_table_from_files(const std::vector<std::string>& paths);

}  // namespace ekp
