#include "cfkd/dataio/sampling.hpp"
#include "cfkd/errors.hpp"
#include "cfkd/harness/experiment.hpp"
#include "cfkd/harness/grid.hpp"
#include "cfkd/models/settings.hpp"
#include "synthetic.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

using namespace cfkd;
using namespace cfkd::harness;
using dataio::TreatmentKind;

namespace {

const Method kAllMethods[] = {Method::Hf,   Method::Pft,  Method::Mftlnn,
                              Method::Mfdf, Method::Cfkd, Method::Icfkd,
                              Method::CfkdNoTeacherOutput, Method::CfkdNoTeacherFeature, Method::CfkdNoInput};

ExperimentPlan small_plan(Protocol p, std::vector<Method> methods, std::uint64_t seed = 3) {
    ExperimentPlan plan = default_plan(p, TreatmentKind::DeclineReduction, seed);
    plan.methods = std::move(methods);
    plan.lf_pool = 300;
    plan.hf_pool = 60;
    plan.sizes = {10};
    plan.size_draws = 3;
    plan.min_size = 10;
    plan.max_size = 20;
    plan.repetitions = 2;
    plan.teacher = {{32, 16}, numcore::Activation::LeakyReLU, 32, 0.01};
    for (Method m : plan.methods) {
        MethodConfig c = config_for(plan, m);
        if (!c.hidden.empty()) {
            c.hidden = {16, 16};
        }
        c.aligned_dim = 16;
        c.unfrozen = 1;
        c.unfrozen_autoencoder = 1;
        plan.configs[m] = c;
    }
    return plan;
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

} // namespace

TEST_CASE("method keys, labels and ids are stable") {
    std::set<std::uint64_t> ids;
    for (Method m : kAllMethods) {
        CHECK(method_from_key(method_key(m)) == m);
        ids.insert(method_id(m));
    }
    CHECK(ids.size() == 9);
    CHECK(method_id(Method::Hf) == 1);
    CHECK(method_id(Method::CfkdNoInput) == 9);
    CHECK(method_label(Method::Cfkd) == "CFKD-AFN");
    CHECK(method_label(Method::Mftlnn) == "MF-TLNN");
    CHECK(method_key(Method::CfkdNoTeacherOutput) == "cfkd-no-ylh");
    CHECK_THROWS(method_from_key("nope"));
    CHECK(!uses_teacher(Method::Hf));
    CHECK(uses_autoencoder(Method::Mftlnn));
    CHECK(!uses_autoencoder(Method::Cfkd));
}

TEST_CASE("method configs round trip through JSON") {
    for (Method m : kAllMethods) {
        const auto c = reference_config(m, TreatmentKind::ActivityBoost);
        CHECK(method_config_from_json(to_json(c), reference_config(m, TreatmentKind::ActivityBoost)) == c);
        auto tweaked = c;
        tweaked.learning_rate = 0.001;
        CHECK(method_config_from_json(to_json(tweaked), c) == tweaked);
    }
    // Serialized fields win over a different treatment's fallback.
    const auto t3 = reference_config(Method::Mfdf, TreatmentKind::ActivityBoost);
    CHECK(method_config_from_json(to_json(t3), reference_config(Method::Mfdf, TreatmentKind::DeclineReduction)).hidden ==
          t3.hidden);
    const auto t = reference_teacher(TreatmentKind::SymptomRelief);
    CHECK(teacher_config_from_json(to_json(t)) == t);
    auto bad = to_json(reference_config(Method::Hf, TreatmentKind::DeclineReduction));
    bad["learning_rate"] = -1.0;
    CHECK_THROWS(method_config_from_json(bad, reference_config(Method::Hf, TreatmentKind::DeclineReduction)));
}

TEST_CASE("ratio arithmetic") {
    CHECK(std::abs(improvement_ratio(0.32, 0.35) - 8.571428571428571) <= 1e-9);
    CHECK(std::round(improvement_ratio(0.32, 0.35) * 100.0) / 100.0 == 8.57);
    CHECK(improvement_ratio(0.5, 0.5) == 0.0);
    CHECK(improvement_ratio(0.6, 0.5) < 0.0);
}

TEST_CASE("grid search core: winner, ties and divergence") {
    const std::size_t params[] = {100, 80, 80, 120};
    const double lrs[] = {0.01, 0.01, 0.001, 0.01};
    std::set<std::size_t> seen_val;
    auto flat = [&](std::size_t, std::span<const std::size_t> tr, std::span<const std::size_t> va) {
        CHECK(tr.size() + va.size() == 20);
        for (std::size_t v : va) {
            seen_val.insert(v);
        }
        return 1.0;
    };
    const auto tie = grid_search(4, 20, 5, 1, flat, params, lrs);
    CHECK(tie.best == 2);
    CHECK(seen_val.size() == 20);
    CHECK(tie.table.size() == 4);
    CHECK(tie.table[0].fold_mse.size() == 5);

    const std::size_t same_params[] = {50, 50};
    const double same_lr[] = {0.01, 0.01};
    CHECK(grid_search(2, 20, 5, 1, flat, same_params, same_lr).best == 0);

    auto graded = [](std::size_t c, std::span<const std::size_t>, std::span<const std::size_t>) {
        if (c == 0) {
            throw NumericError("diverged");
        }
        return c == 3 ? 0.5 : 2.0;
    };
    const auto g = grid_search(4, 20, 5, 1, graded, params, lrs);
    CHECK(g.best == 3);
    CHECK(std::isinf(g.table[0].mean_mse));
    CHECK_THROWS_AS(grid_search(0, 20, 5, 1, flat, {}, {}), ContractError);
    const auto j = to_json(g);
    CHECK(j.at("best") == 3);
}

TEST_CASE("grid search over configurations") {
    const auto hf = testing::make_dataset(40, dataio::Fidelity::High, 5);
    MethodConfig only = reference_config(Method::Hf, TreatmentKind::DeclineReduction);
    only.hidden = {16, 16};
    const auto single = grid_search(std::vector<MethodConfig>{only}, Upstream{}, hf, 5, 7);
    CHECK(single.best == only);
    CHECK(single.outcome.table.size() == 1);
    CHECK(std::isfinite(single.outcome.table[0].mean_mse));

    MethodConfig big = only;
    big.hidden = {64, 64};
    const auto twin = grid_search(std::vector<MethodConfig>{only, only, big}, Upstream{}, hf, 5, 7);
    CHECK(twin.outcome.table[0].mean_mse == twin.outcome.table[1].mean_mse);
    CHECK(twin.outcome.best != 1);
    CHECK(twin.outcome.table[2].parameters > twin.outcome.table[0].parameters);

    CHECK_THROWS_AS(grid_search(std::vector<MethodConfig>{}, Upstream{}, hf, 5, 7), ContractError);
    CHECK_THROWS_AS(validate(GridSpace{}), ContractError);
}

TEST_CASE("reference grid holds the published picks") {
    CHECK(halving_widths(128, 5) == std::vector<std::size_t>{128, 64, 32, 16, 16});
    CHECK(halving_widths(32, 6) == std::vector<std::size_t>{32, 16, 16, 16, 16, 16});
    for (int t = 1; t <= 4; ++t) {
        INFO("treatment " << t);
        const auto kind = dataio::treatment_from_number(t);
        const auto grid = reference_grid(kind);
        CHECK_NOTHROW(validate(grid));
        CHECK(grid.teacher.size() == 162);
        const auto teacher = reference_teacher(kind);
        CHECK(std::find(grid.teacher.begin(), grid.teacher.end(), teacher) != grid.teacher.end());
        for (Method m : {Method::Hf, Method::Pft, Method::Mftlnn, Method::Mfdf, Method::Cfkd}) {
            INFO(method_key(m));
            const auto& list = grid.methods.at(m);
            CHECK(std::find(list.begin(), list.end(), reference_config(m, kind)) != list.end());
            for (const auto& c : list) {
                CHECK(c.batch_size == 8);
                CHECK((c.learning_rate == 0.01 || c.learning_rate == 0.001));
            }
        }
        CHECK(grid.methods.at(Method::Hf).size() == 40);
        CHECK(grid.methods.at(Method::Cfkd).size() == 80);
        CHECK(grid.methods.at(Method::Icfkd).size() == 9);
    }
    const auto t1 = reference_teacher(TreatmentKind::DeclineReduction);
    CHECK(t1.hidden.size() == 7);
    CHECK(t1.activation == numcore::Activation::LeakyReLU);
}

TEST_CASE("plan validation") {
    auto plan = small_plan(Protocol::FineGrained, {Method::Hf});
    CHECK_NOTHROW(validate(plan));
    auto p = plan;
    p.methods.clear();
    CHECK_THROWS_AS(validate(p), ContractError);
    p = plan;
    p.methods = {Method::Hf, Method::Hf};
    CHECK_THROWS_AS(validate(p), ContractError);
    p = plan;
    p.hf_pool = p.lf_pool;
    CHECK_THROWS_AS(validate(p), ContractError);
    p = plan;
    p.sizes = {60};
    CHECK_THROWS_AS(validate(p), ContractError);
    p = small_plan(Protocol::Ablation, {Method::Cfkd, Method::Hf});
    CHECK_THROWS_AS(validate(p), ContractError);
    CHECK_THROWS_AS(run_expected(plan), ContractError);
    CHECK(default_plan(Protocol::FineGrained, TreatmentKind::DeclineReduction, 1).repetitions == 20);
    CHECK(default_plan(Protocol::Expected, TreatmentKind::DeclineReduction, 1).size_draws == 50);
    CHECK(default_plan(Protocol::Expected, TreatmentKind::DeclineReduction, 1).hf_pool == 500);
    CHECK(default_plan(Protocol::Expected, TreatmentKind::DeclineReduction, 1).lf_pool == 5000);
    CHECK(default_plan(Protocol::Ablation, TreatmentKind::DeclineReduction, 1).methods.size() == 4);
}

TEST_CASE("expected protocol with HF only: one row over 50 runs") {
    ExperimentPlan plan = default_plan(Protocol::Expected, TreatmentKind::DeclineReduction, 11);
    plan.methods = {Method::Hf};
    plan.lf_pool = 300;
    plan.hf_pool = 120;
    auto c = config_for(plan, Method::Hf);
    c.hidden = {16, 16};
    plan.configs[Method::Hf] = c;
    const auto sizes = planned_sizes(plan);
    REQUIRE(sizes.size() == 50);
    CHECK(*std::min_element(sizes.begin(), sizes.end()) >= 10);
    CHECK(*std::max_element(sizes.begin(), sizes.end()) <= 100);
    CHECK(std::set<std::size_t>(sizes.begin(), sizes.end()).size() > 10);
    CHECK(planned_sizes(plan) == sizes);
    const auto report = run_expected(plan);
    REQUIRE(report.rows.size() == 1);
    CHECK(report.rows[0].method == "HF");
    CHECK(report.rows[0].size == "expected");
    CHECK(report.rows[0].runs == 50);
    CHECK(report.runs.size() == 50);
    for (std::size_t i = 0; i < 50; ++i) {
        CHECK(report.runs[i].size == sizes[report.runs[i].size_index]);
    }
    CHECK(report.ratios.empty());
}

TEST_CASE("fine-grained bookkeeping, pairing and seed isolation") {
    const auto plan = small_plan(Protocol::FineGrained, {Method::Hf, Method::Cfkd});
    const auto report = run_fine_grained(plan);
    CHECK(report.runs.size() == 4);
    REQUIRE(report.rows.size() == 2);
    for (const auto& r : report.rows) {
        CHECK(r.size == "10");
        CHECK(r.runs == 2);
        CHECK(r.mse_std >= 0.0);
        CHECK(r.mape_std >= 0.0);
    }
    REQUIRE(report.ratios.size() == 1);
    const auto* hf = report.find("HF", "10");
    const auto* cf = report.find("CFKD-AFN", "10");
    REQUIRE(hf != nullptr);
    REQUIRE(cf != nullptr);
    CHECK(report.ratios[0].mse_ratio == doctest::Approx(improvement_ratio(cf->mse_mean, hf->mse_mean)));
    CHECK(report.provenance.contains("config_hash"));
    CHECK(report.provenance.at("config_hash").get<std::string>().size() == 16);

    const auto alone = run_fine_grained(small_plan(Protocol::FineGrained, {Method::Hf}));
    std::vector<RunRecord> hf_runs;
    for (const auto& r : report.runs) {
        if (r.method == Method::Hf) {
            hf_runs.push_back(r);
        }
    }
    CHECK(alone.runs == hf_runs);

    CHECK(subsample_seed(3, 0, 1) != subsample_seed(3, 0, 0));
    CHECK(run_seed(3, 0, 0, Method::Hf) != run_seed(3, 0, 0, Method::Cfkd));
}

TEST_CASE("reports are deterministic across runs and thread counts") {
    auto plan = small_plan(Protocol::FineGrained, {Method::Hf, Method::Mfdf, Method::Cfkd});
    const auto serial = run_fine_grained(plan);
    plan.threads = 3;
    const auto parallel = run_fine_grained(plan);
    CHECK(serial.runs == parallel.runs);
    CHECK(report_csv(serial) == report_csv(parallel));
    CHECK(ratios_csv(serial) == ratios_csv(parallel));
}

TEST_CASE("ablation pairs the CFKD-AFN family on identical subsamples") {
    auto plan = small_plan(Protocol::Ablation, {Method::Cfkd, Method::CfkdNoTeacherOutput,
                                                Method::CfkdNoTeacherFeature, Method::CfkdNoInput});
    plan.repetitions = 1;
    const auto ctx = prepare_context(plan);
    const auto report = run_protocol(plan, ctx);
    CHECK(report.rows.size() == 4);
    CHECK(report.ratios.size() == 3);
    CHECK(report.runs.size() == 4 * plan.size_draws);

    const auto train = ctx.hf_pool.subset(dataio::subsample_indices(ctx.hf_pool.size(), 12, 5));
    for (Method m : {Method::CfkdNoTeacherOutput, Method::CfkdNoTeacherFeature, Method::CfkdNoInput}) {
        const auto model = std::get<models::CfkdAfnModel>(train_method(config_for(plan, m), ctx.upstream, train, 9));
        CHECK(model.fused_dim() == 2 * model.aligned_dim());
        CHECK(model.fusion.logits.size() == 2);
        CHECK(model.predictor.input_dim() == 2 * model.aligned_dim());
    }
    const auto full = std::get<models::CfkdAfnModel>(train_method(config_for(plan, Method::Cfkd), ctx.upstream, train, 9));
    CHECK(full.fused_dim() == 3 * full.aligned_dim());
}

TEST_CASE("report emission and parsing") {
    const auto report = run_fine_grained(small_plan(Protocol::FineGrained, {Method::Hf, Method::Cfkd}));
    CHECK(report_from_json(to_json(report)) == report);
    const auto csv = report_csv(report);
    CHECK(csv.rfind("method,size,mse_mean,mse_std,mape_mean,mape_std\n", 0) == 0);
    CHECK(ratios_csv(report).rfind("method,size,mse_ratio,mape_ratio\n", 0) == 0);
    CHECK(csv.find("HF,10,") != std::string::npos);

    const auto dir = std::filesystem::temp_directory_path() / "cfkd_test_report";
    std::filesystem::create_directories(dir);
    emit_report(report, (dir / "r.csv").string(), ReportFormat::Csv);
    emit_report(report, (dir / "r.json").string(), ReportFormat::Json);
    CHECK(read_file(dir / "r.csv") == csv);
    CHECK(read_file(dir / "r_ratios.csv") == ratios_csv(report));
    CHECK(std::filesystem::exists(dir / "r_provenance.json"));
    CHECK(read_report_json((dir / "r.json").string()) == report);
    CHECK_THROWS_AS(emit_report(report, (dir / "missing" / "x.csv").string(), ReportFormat::Csv), IoError);
    CHECK_THROWS_AS(read_report_json((dir / "absent.json").string()), IoError);
    std::filesystem::remove_all(dir);

    auto j = to_json(report);
    j["rows"][0]["runs"] = 0;
    CHECK_THROWS(report_from_json(j));
}

TEST_CASE("config hash tracks the plan") {
    const auto a = small_plan(Protocol::FineGrained, {Method::Hf});
    auto b = a;
    CHECK(config_hash(a) == config_hash(b));
    b.master_seed += 1;
    CHECK(config_hash(a) != config_hash(b));
    CHECK(plan_to_json(a).at("protocol") == "fine");
    CHECK(protocol_from_string(to_string(Protocol::Ablation)) == Protocol::Ablation);
}
