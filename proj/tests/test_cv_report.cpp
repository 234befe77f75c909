#include <cstdio>
#include <filesystem>

#include <doctest.h>

#include "ekp/cross_validation.hpp"
#include "ekp/errors.hpp"
#include "ekp/io.hpp"
#include "ekp/random.hpp"
#include "ekp/report.hpp"
#include "ekp/synthetic.hpp"

using namespace ekp;

namespace {

DataSet separable_classification(int n, std::uint64_t seed) {
    // labels follow the sign of the first feature, held away from zero
    Rng rng(seed);
    DataSet data;
    data.features.resize(n, 2);
    data.labels.resize(n);
    for (int i = 0; i < n; ++i) {
        const double margin = 0.25 + 0.75 * rng.uniform();
        const double side = i % 2 == 0 ? 1.0 : -1.0;
        data.features(i, 0) = side * margin;
        data.features(i, 1) = rng.uniform(-1.0, 1.0);
        data.labels(i) = side;
    }
    data.task = Task::classification;
    data.source = "separable";
    data.format = "generated";
    return data;
}

CVConfig small_config(Task task) {
    CVConfig cfg;
    cfg.task = task;
    cfg.gamma_min = -2;
    cfg.gamma_max = 1;
    cfg.cap_grid = {0.5, 2.0};
    cfg.ratio_grid = {0.5};
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_SUITE("metrics") {

TEST_CASE("misclassification counts sign disagreements, zero scoring positive") {
    Vector scores(4), y(4);
    scores << 1.5, -0.2, 0.0, 0.3;
    y << 1, 1, -1, -1;
    CHECK(misclassification_error(scores, y) == doctest::Approx(0.75));
}

TEST_CASE("rmse matches the closed form") {
    Vector pred(3), y(3);
    pred << 1, 2, 3;
    y << 1, 0, 0;
    CHECK(rmse(pred, y) == doctest::Approx(std::sqrt(13.0 / 3.0)).epsilon(1e-12));
}

TEST_CASE("hyperparameter ties resolve to the smallest cap then ratio") {
    std::vector<Candidate> cands;
    cands.push_back({2.0, 0.5, true, 0.1});
    cands.push_back({0.5, 0.7, true, 0.1});
    cands.push_back({0.5, 0.3, true, 0.1});
    cands.push_back({4.0, 0.1, true, 0.2});
    const Candidate best = select_hyperparameters(cands);
    CHECK(best.cap == 0.5);
    CHECK(best.ratio == 0.3);
    CHECK_THROWS_AS(select_hyperparameters({}), DomainError);

    SUBCASE("a strictly better metric wins regardless of size") {
        cands.push_back({8.0, 0.9, true, 0.05});
        CHECK(select_hyperparameters(cands).cap == 8.0);
    }
}

}  // TEST_SUITE

TEST_SUITE("cv") {

TEST_CASE("config validation rejects malformed protocols") {
    const DataSet data = separable_classification(40, 1);
    CVConfig cfg = small_config(Task::classification);
    cfg.methods = {"unif"};

    SUBCASE("too few folds") {
        cfg.n_folds = 2;
        CHECK_THROWS_AS(run_cv_experiment(data, cfg), DomainError);
    }
    SUBCASE("unknown method") {
        cfg.methods = {"boost"};
        CHECK_THROWS_AS(run_cv_experiment(data, cfg), DomainError);
    }
    SUBCASE("os-krr needs regression") {
        cfg.methods = {"os-krr"};
        CHECK_THROWS_AS(run_cv_experiment(data, cfg), DomainError);
    }
    SUBCASE("task mismatch with the dataset") {
        cfg.task = Task::regression;
        CHECK_THROWS_AS(run_cv_experiment(data, cfg), DomainError);
    }
    SUBCASE("empty cap grid") {
        cfg.cap_grid = {};
        CHECK_THROWS_AS(run_cv_experiment(data, cfg), DomainError);
    }
    SUBCASE("ratio outside the open interval") {
        cfg.ratio_grid = {0.0, 0.5};
        CHECK_THROWS_AS(run_cv_experiment(data, cfg), DomainError);
    }
}

TEST_CASE("default grids cover the documented ranges") {
    const auto caps = CVConfig::default_cap_grid();
    REQUIRE(caps.size() == 9);
    CHECK(caps.front() == doctest::Approx(0.0625));
    CHECK(caps.back() == doctest::Approx(16.0));
    const auto ratios = CVConfig::default_ratio_grid();
    REQUIRE(ratios.size() == 9);
    CHECK(ratios.front() == doctest::Approx(0.1));
    CHECK(ratios.back() == doctest::Approx(0.9));
}

TEST_CASE("an easily separable dataset is solved by every method") {
    const DataSet data = separable_classification(100, 2);
    CVConfig cfg = small_config(Task::classification);
    cfg.methods = {"unif", "align", "alignf", "os-svm", "l1-ens", "l2-ens"};
    const CVResult result = run_cv_experiment(data, cfg);
    REQUIRE(result.methods.size() == 6);
    for (const MethodCV& mc : result.methods) {
        INFO("method ", mc.method);
        CHECK(mc.mean_error <= 0.05);
        CHECK(mc.test_errors.size() == 5);
        CHECK(mc.selected_caps.size() == 5);
    }
    CHECK(result.skipped_rotations.empty());
}

TEST_CASE("feature scaling neutralizes wild column magnitudes") {
    DataSet data = separable_classification(80, 3);
    data.features.col(0) *= 1e4;  // z-scoring must absorb this
    CVConfig cfg = small_config(Task::classification);
    cfg.methods = {"unif"};
    const CVResult result = run_cv_experiment(data, cfg);
    CHECK(result.methods[0].mean_error <= 0.05);
}

TEST_CASE("regression methods run end to end on synthetic data") {
    SyntheticConfig scfg;
    scfg.n = 60;
    scfg.seed = 4;
    scfg.task = Task::regression;
    const DataSet data = make_synthetic(scfg);
    CVConfig cfg = small_config(Task::regression);
    cfg.methods = {"unif", "align", "alignf", "os-krr", "l1-ens", "l2-ens"};
    const CVResult result = run_cv_experiment(data, cfg);
    for (const MethodCV& mc : result.methods) {
        INFO("method ", mc.method);
        CHECK(mc.mean_error < 1.0);
        CHECK(mc.std_dev >= 0.0);
    }
    const auto& ens = result.methods[4];
    CHECK(ens.selected_ratios.size() == 5);
}

TEST_CASE("single-class training folds are skipped with a warning") {
    // two positives among twelve points: with three stratified folds, one
    // rotation trains on folds holding no positive at all
    DataSet data = separable_classification(12, 5);
    for (int i = 0; i < 12; ++i) {
        data.labels(i) = i < 2 ? 1.0 : -1.0;
        data.features(i, 0) = data.labels(i) * (0.5 + 0.01 * i);
    }
    CVConfig cfg = small_config(Task::classification);
    cfg.n_folds = 3;
    cfg.methods = {"unif"};
    const CVResult result = run_cv_experiment(data, cfg);
    CHECK_FALSE(result.skipped_rotations.empty());
    CHECK_FALSE(result.warnings.empty());
    CHECK(result.methods[0].test_errors.size() ==
          3 - result.skipped_rotations.size());
}

TEST_CASE("the experiment is deterministic given the seed") {
    const DataSet data = separable_classification(60, 6);
    CVConfig cfg = small_config(Task::classification);
    cfg.methods = {"unif", "l1-ens"};
    const CVResult a = run_cv_experiment(data, cfg);
    const CVResult b = run_cv_experiment(data, cfg);
    CHECK(to_json(a).dump(2) == to_json(b).dump(2));
}

}  // TEST_SUITE

TEST_SUITE("report") {

TEST_CASE("numbers round-trip exactly through the serialized form") {
    RademacherEstimate est;
    est.value = 0.1234567890123456789;
    est.std_error = 3.0e-17;
    est.n_sigma = 100000;
    est.r = std::numeric_limits<double>::infinity();
    est.lambdas = Vector::Constant(2, 1.0 / 3.0);
    est.m = 50;
    est.seed = 42;
    const ordered_json doc = to_json(est);
    const ordered_json back = ordered_json::parse(doc.dump());
    CHECK(back["value"].get<double>() == est.value);
    CHECK(back["std_error"].get<double>() == est.std_error);
    CHECK(back["lambdas"][0].get<double>() == 1.0 / 3.0);
    CHECK(back["r"].get<std::string>() == "inf");
}

TEST_CASE("written result files start with the version and are stable") {
    const auto path =
        (std::filesystem::temp_directory_path() / "ekp_report_test.json").string();
    ordered_json doc;
    doc["kind"] = "probe";
    doc["value"] = 0.25;
    write_result(doc, path);
    const std::string first = read_text_file(path);
    CHECK(first.find("\"version\"") < first.find("\"kind\""));
    CHECK(first.back() == '\n');
    write_result(doc, path);
    CHECK(read_text_file(path) == first);
}

TEST_CASE("method tables render one mean-spread row per method") {
    CVResult result;
    result.config.task = Task::classification;
    MethodCV a;
    a.method = "unif";
    a.mean_error = 0.123;
    a.std_dev = 0.009;
    MethodCV b;
    b.method = "l1-ens";
    b.mean_error = 0.094;
    b.std_dev = 0.005;
    result.methods = {a, b};
    const std::string table = render_method_table(result);
    CHECK(table.find("unif") != std::string::npos);
    CHECK(table.find("12.3") != std::string::npos);
    CHECK(table.find("9.4") != std::string::npos);
    CHECK(table.find("0.9") != std::string::npos);
    CHECK(table.find("±") != std::string::npos);

    SUBCASE("regression tables print plain rmse") {
        result.config.task = Task::regression;
        for (auto& mc : result.methods) {
            mc.mean_error = 1.375;
            mc.std_dev = 0.25;
        }
        const std::string rt = render_method_table(result);
        CHECK(rt.find("1.3750") != std::string::npos);
        CHECK(rt.find("%") == std::string::npos);
    }
}

TEST_CASE("serialized cv results omit wall-clock timings") {
    CVResult result;
    result.config.task = Task::regression;
    MethodCV mc;
    mc.method = "unif";
    mc.wall_seconds = 123.0;
    result.methods = {mc};
    const std::string text = to_json(result).dump();
    CHECK(text.find("wall") == std::string::npos);
    CHECK(text.find("123") == std::string::npos);
}

TEST_CASE("result files aggregate back into a text table") {
    const auto dir = std::filesystem::temp_directory_path();
    const auto cv_path = (dir / "ekp_cv_agg.json").string();
    CVResult result;
    result.config.task = Task::classification;
    MethodCV mc;
    mc.method = "alignf";
    mc.mean_error = 0.2;
    mc.std_dev = 0.01;
    result.methods = {mc};
    write_result(to_json(result), cv_path);

    const auto est_path = (dir / "ekp_est_agg.json").string();
    RademacherEstimate est;
    est.value = 0.5;
    est.std_error = 0.001;
    est.n_sigma = 10;
    est.r = 2.0;
    est.lambdas = Vector::Ones(1);
    est.m = 4;
    est.seed = 0;
    write_result(to_json(est), est_path);

    const auto ses_path = (dir / "ekp_ses_agg.json").string();
    ordered_json session;
    session["kind"] = "complexity-session";
    session["estimate"] = to_json(est);
    session["bounds"] = ordered_json::array();
    session["bounds"].push_back({{"kind", "trace-norm"}, {"value", 0.703125}});
    write_result(session, ses_path);

    const std::string table =
        render_table_from_files({cv_path, est_path, ses_path});
    CHECK(table.find("alignf") != std::string::npos);
    CHECK(table.find("20.0") != std::string::npos);
    CHECK(table.find("complexity-estimate") != std::string::npos);
    CHECK(table.find("complexity-session") != std::string::npos);
    CHECK(table.find("trace-norm") != std::string::npos);
    CHECK(table.find("0.703125") != std::string::npos);

    CHECK_THROWS_AS(render_table_from_files({"/nonexistent.json"}), IoError);
    const auto junk_path = (dir / "ekp_junk.json").string();
    write_text_file(junk_path, "not json");
    CHECK_THROWS_AS(render_table_from_files({junk_path}), ParseError);
}

}  // TEST_SUITE
