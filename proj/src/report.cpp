#include "ekp/report.hpp"

#include <cmath>
#include <cstdio>

#include "ekp/errors.hpp"
#include "ekp/io.hpp"
#include "ekp/version.hpp"

namespace ekp {

namespace {

ordered_json vec(const Vector& v) {
    ordered_json arr = ordered_json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
    return arr;
}

ordered_json exponent(double r) {
    if (std::isinf(r)) return "inf";
    return r;
}

std::string format_metric(const std::string& task, double mean, double std_dev) {
    char buf[64];
    if (task == "classification")
        std::snprintf(buf, sizeof buf, "%.1f±%.1f%%", 100.0 * mean, 100.0 * std_dev);
    else
        std::snprintf(buf, sizeof buf, "%.4f±%.4f", mean, std_dev);
    return buf;
}

std::string pad(const std::string& s, std::size_t width) {
    return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

std::string render_rows(const std::vector<std::vector<std::string>>& rows) {
    std::vector<std::size_t> widths;
    for (const auto& row : rows) {
        if (widths.size() < row.size()) widths.resize(row.size(), 0);
        for (std::size_t c = 0; c < row.size(); ++c)
            widths[c] = std::max(widths[c], row[c].size());
    }
    std::string out;
    for (const auto& row : rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out += c + 1 < row.size() ? pad(row[c], widths[c] + 2) : row[c];
        }
        out += '\n';
    }
    return out;
}

}  // namespace

ordered_json to_json(const RademacherEstimate& est) {
    ordered_json j;
    j["kind"] = "complexity-estimate";
    j["value"] = est.value;
    j["std_error"] = est.std_error;
    j["n_sigma"] = est.n_sigma;
    j["r"] = exponent(est.r);
    j["lambdas"] = vec(est.lambdas);
    j["m"] = est.m;
    j["seed"] = est.seed;
    return j;
}

ordered_json to_json(const BoundReport& rep) {
    ordered_json j;
    j["kind"] = rep.kind;
    j["value"] = rep.value;
    j["eta0"] = std::to_string(rep.eta0_num) + "/" + std::to_string(rep.eta0_den);
    ordered_json inputs;
    if (rep.kind == "trace-norm" || rep.kind == "root-trace-norm") {
        inputs["lambdas"] = vec(rep.lambdas);
        inputs["traces"] = vec(rep.traces);
        inputs["m"] = rep.m;
        inputs["p"] = rep.p;
        inputs["r"] = exponent(rep.r);
    } else if (rep.kind == "log-count") {
        inputs["lambda_star"] = rep.lambda_star;
        inputs["r2"] = rep.r2;
        inputs["m"] = rep.m;
        inputs["p"] = rep.p;
    } else if (rep.kind == "power-count") {
        inputs["lambda_star"] = rep.lambda_star;
        inputs["r2"] = rep.r2;
        inputs["m"] = rep.m;
        inputs["p"] = rep.p;
        inputs["r"] = exponent(rep.r);
    } else if (rep.kind == "margin") {
        inputs["margin_loss"] = rep.margin_loss;
        inputs["complexity"] = rep.complexity;
        inputs["rho"] = rep.rho;
        inputs["delta"] = rep.delta;
        inputs["m"] = rep.m;
        j["vacuous"] = rep.vacuous;
    }
    j["inputs"] = inputs;
    return j;
}

ordered_json to_json(const MomentCheck& chk) {
    ordered_json j;
    j["kind"] = "moment-check";
    j["lhs"] = chk.lhs;
    j["rhs"] = chk.rhs;
    j["std_error"] = chk.std_error;
    j["n_sigma"] = chk.n_sigma;
    j["seed"] = chk.seed;
    j["exhaustive"] = chk.exhaustive;
    j["holds"] = chk.holds;
    return j;
}

ordered_json to_json(const EquivalenceReport& rep) {
    ordered_json j;
    j["kind"] = "equivalence";
    j["mu"] = vec(rep.mu);
    j["lambda"] = rep.lambda;
    j["obj_joint"] = rep.obj_joint;
    j["obj_combined"] = rep.obj_combined;
    j["rel_gap"] = rep.rel_gap;
    return j;
}

ordered_json to_json(const CVConfig& cfg) {
    ordered_json j;
    j["n_folds"] = cfg.n_folds;
    j["methods"] = cfg.methods;
    j["gamma_min"] = cfg.gamma_min;
    j["gamma_max"] = cfg.gamma_max;
    j["cap_grid"] = cfg.cap_grid;
    j["ratio_grid"] = cfg.ratio_grid;
    j["base_reg"] = cfg.base_reg;
    j["seed"] = cfg.seed;
    j["task"] = task_name(cfg.task);
    return j;
}

ordered_json to_json(const CVResult& result) {
    ordered_json j;
    j["kind"] = "cv-result";
    j["seed"] = result.seed;
    j["rotation_scheme"] = result.rotation_scheme;
    j["config"] = to_json(result.config);
    j["skipped_rotations"] = result.skipped_rotations;
    j["warnings"] = result.warnings;
    ordered_json methods = ordered_json::array();
    for (const MethodCV& mc : result.methods) {
        ordered_json row;
        row["method"] = mc.method;
        row["mean_error"] = mc.mean_error;
        row["std_dev"] = mc.std_dev;
        row["test_errors"] = mc.test_errors;
        row["selected_caps"] = mc.selected_caps;
        row["selected_ratios"] = mc.selected_ratios;
        methods.push_back(std::move(row));
    }
    j["methods"] = methods;
    return j;
}

void write_result(const ordered_json& doc, const std::string& path) {
    ordered_json top;
    top["version"] = kVersion;
    for (const auto& [key, value] : doc.items()) top[key] = value;
    write_text_file(path, top.dump(2) + "\n");
}

std::string render_method_table(const CVResult& result) {
    const std::string task = task_name(result.config.task);
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"method", task == "classification" ? "error" : "rmse"});
    for (const MethodCV& mc : result.methods)
        rows.push_back({mc.method, format_metric(task, mc.mean_error, mc.std_dev)});
    return render_rows(rows);
}

std::string render_table_from_files(const std::vector<std::string>& paths) {
    std::vector<std::vector<std::string>> rows;
    rows.push_back({"source", "method", "result"});
    for (const std::string& path : paths) {
        ordered_json doc;
        try {
            doc = ordered_json::parse(read_text_file(path));
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(path + ": " + e.what());
        }
        const std::string kind = doc.value("kind", "");
        if (kind == "cv-result") {
            const std::string task = doc.at("config").value("task", "regression");
            for (const auto& mc : doc.at("methods")) {
                rows.push_back({path, mc.value("method", "?"),
                                format_metric(task, mc.value("mean_error", 0.0),
                                              mc.value("std_dev", 0.0))});
            }
        } else if (kind == "complexity-estimate" || kind == "complexity-session") {
            const ordered_json& est =
                kind == "complexity-session" ? doc.at("estimate") : doc;
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g (stderr %.2g)",
                          est.value("value", 0.0), est.value("std_error", 0.0));
            rows.push_back({path, kind, buf});
            if (kind == "complexity-session") {
                for (const auto& b : doc.value("bounds", ordered_json::array())) {
                    std::snprintf(buf, sizeof buf, "%.6g", b.value("value", 0.0));
                    rows.push_back({path, b.value("kind", "?"), buf});
                }
            }
        } else if (!kind.empty()) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6g", doc.value("value", 0.0));
            rows.push_back({path, kind, buf});
        } else {
            rows.push_back({path, "?", "unrecognized result file"});
        }
    }
    return render_rows(rows);
}

}  // namespace ekp
