// cfkd command-line tool: data generation, training, benchmarks, tuning and attribution.

#include "cfkd/dataio/csv.hpp"
#include "cfkd/dataio/metrics.hpp"
#include "cfkd/dataio/sampling.hpp"
#include "cfkd/errors.hpp"
#include "cfkd/harness/experiment.hpp"
#include "cfkd/harness/grid.hpp"
#include "cfkd/interpret/attribution.hpp"
#include "cfkd/models/checkpoint.hpp"
#include "cfkd/numcore/random.hpp"
#include "cfkd/patientsim/simulator.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace cfkd;
using nlohmann::json;

namespace {

constexpr int kExitContract = 2;
constexpr int kExitIo = 3;

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    try {
        json j;
        in >> j;
        return j;
    } catch (const json::exception& e) {
        throw IoError(path + " is not valid JSON: " + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
    std::ofstream out(path);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw IoError("cannot create directory " + dir);
    }
}

dataio::TreatmentKind treatment_arg(int t) {
    require(t >= 1 && t <= 4, "treatment must be 1..4");
    return dataio::treatment_from_number(t);
}

struct GenArgs {
    int treatment = 1;
    std::string fidelity = "high";
    std::size_t n = 100;
    std::uint64_t seed = 0;
    std::string out;
    std::size_t threads = 1;
};

void run_gen(const GenArgs& a) {
    const auto fid = dataio::fidelity_from_string(a.fidelity);
    const auto ds = patientsim::generate_dataset(a.n, patientsim::FidelityLevel::of(fid),
                                                 patientsim::TreatmentSpec::standard(treatment_arg(a.treatment)),
                                                 patientsim::SimParams{}, a.seed, a.threads);
    dataio::write_dataset_csv(a.out, ds);
    std::printf("wrote %zu %s-fidelity rows for treatment %d to %s\n", ds.size(), a.fidelity.c_str(), a.treatment,
                a.out.c_str());
}

struct TrainArgs {
    std::string method;
    std::string lf;
    std::string hf;
    std::string config;
    std::string out;
};

// Config: {"seed": S, "teacher": {...}, "method": {...}}; every key is optional.
void run_train(const TrainArgs& a) {
    const auto method = harness::method_from_key(a.method);
    const json cfg = a.config.empty() ? json::object() : read_json_file(a.config);
    const auto hf = dataio::read_dataset_csv(a.hf);
    require(hf.fidelity == dataio::Fidelity::High, a.hf + " is not a high-fidelity dataset");
    require(hf.treatment != dataio::TreatmentKind::None, a.hf + " has no treatment tag 1..4");
    const std::uint64_t seed = cfg.value("seed", std::uint64_t{0});
    harness::TeacherConfig teacher_cfg = harness::reference_teacher(hf.treatment);
    harness::MethodConfig method_cfg = harness::reference_config(method, hf.treatment);
    try {
        if (cfg.contains("teacher")) {
            teacher_cfg = harness::teacher_config_from_json(cfg.at("teacher"));
        }
        if (cfg.contains("method")) {
            method_cfg = harness::method_config_from_json(cfg.at("method"), method_cfg);
        }
    } catch (const json::exception& e) {
        throw ContractError(std::string("invalid config: ") + e.what());
    }
    require(method_cfg.method == method, "config method does not match --method");

    harness::Upstream up;
    if (harness::uses_teacher(method)) {
        require(!a.lf.empty(), "--lf is required for method " + a.method);
        const auto lf = dataio::read_dataset_csv(a.lf);
        require(lf.fidelity == dataio::Fidelity::Low, a.lf + " is not a low-fidelity dataset");
        require(lf.treatment == hf.treatment, "--lf and --hf carry different treatments");
        up.teacher = std::make_shared<const models::LowFiModel>(
            harness::train_teacher(lf, teacher_cfg, numcore::derive_seed({seed, 1})));
        if (harness::uses_autoencoder(method)) {
            up.autoencoder = std::make_shared<const models::AutoencoderModel>(
                harness::train_teacher_autoencoder(lf, teacher_cfg, numcore::derive_seed({seed, 2})));
        }
    }
    const auto model = harness::train_method(method_cfg, up, hf, numcore::derive_seed({seed, 3}));
    const double fit = dataio::mse(hf.labels, harness::predict(model, hf.features));
    auto envelope = models::checkpoint_envelope(a.method, harness::checkpoint_model(model));
    envelope["config"] = {{"seed", seed},
                          {"treatment", dataio::treatment_number(hf.treatment)},
                          {"teacher", harness::to_json(teacher_cfg)},
                          {"method", harness::to_json(method_cfg)}};
    models::write_checkpoint(a.out, envelope);
    std::printf("trained %s on %zu rows (training MSE %.4f), checkpoint %s\n",
                harness::method_label(method).c_str(), hf.size(), fit, a.out.c_str());
}

struct BenchArgs {
    std::string protocol = "expected";
    int treatment = 1;
    std::uint64_t seed = 0;
    std::string out;
    bool fast = false;
    std::size_t threads = 1;
    std::size_t repetitions = 0;
    std::string config;
};

// The config file may hold {"teacher": {...}, "methods": {"cfkd": {...}, ...}}, e.g. tune output.
void run_bench(const BenchArgs& a) {
    const auto protocol = harness::protocol_from_string(a.protocol);
    const auto treatment = treatment_arg(a.treatment);
    auto plan = a.fast ? harness::fast_plan(protocol, treatment, a.seed)
                       : harness::default_plan(protocol, treatment, a.seed);
    plan.threads = a.threads;
    if (a.repetitions > 0) {
        plan.repetitions = a.repetitions;
    }
    if (!a.config.empty()) {
        const json cfg = read_json_file(a.config);
        try {
            if (cfg.contains("teacher")) {
                plan.teacher = harness::teacher_config_from_json(cfg.at("teacher"));
            }
            if (cfg.contains("methods")) {
                for (const auto& [key, mj] : cfg.at("methods").items()) {
                    const auto m = harness::method_from_key(key);
                    plan.configs[m] = harness::method_config_from_json(mj, harness::config_for(plan, m));
                }
            }
        } catch (const json::exception& e) {
            throw ContractError(std::string("invalid config: ") + e.what());
        }
    }
    // Threads only change scheduling, so they stay out of the report.
    plan.flags = {{"protocol", a.protocol},
                  {"treatment", std::to_string(a.treatment)},
                  {"seed", std::to_string(a.seed)},
                  {"fast", a.fast ? "true" : "false"}};
    if (a.repetitions > 0) {
        plan.flags["reps"] = std::to_string(a.repetitions);
    }
    if (!a.config.empty()) {
        plan.flags["config"] = std::filesystem::path(a.config).filename().string();
    }
    harness::validate(plan);
    make_dir(a.out);
    const auto ctx = harness::prepare_context(plan);
    const auto report = harness::run_protocol(plan, ctx);
    const auto dir = std::filesystem::path(a.out);
    harness::emit_report(report, (dir / "report.csv").string(), harness::ReportFormat::Csv);
    harness::emit_report(report, (dir / "report.json").string(), harness::ReportFormat::Json);
    std::cout << harness::report_csv(report);
    if (!report.ratios.empty()) {
        std::cout << harness::ratios_csv(report);
    }
}

struct TuneArgs {
    std::string method;
    int treatment = 1;
    std::uint64_t seed = 0;
    std::size_t folds = 5;
    std::size_t tuning_size = 100;
    bool fast = false;
    std::string out;
};

void run_tune(const TuneArgs& a) {
    const auto treatment = treatment_arg(a.treatment);
    auto plan = a.fast ? harness::fast_plan(harness::Protocol::Expected, treatment, a.seed)
                       : harness::default_plan(harness::Protocol::Expected, treatment, a.seed);
    const auto space = harness::reference_grid(treatment);
    harness::validate(space);
    json result{{"treatment", a.treatment}, {"seed", a.seed}, {"folds", a.folds}};
    if (a.method == "teacher") {
        plan.methods = {harness::Method::Pft};
        const auto lf = patientsim::generate_dataset(plan.lf_pool, patientsim::FidelityLevel::low(),
                                                     patientsim::TreatmentSpec::standard(treatment),
                                                     patientsim::SimParams{}, numcore::derive_seed({a.seed, 0x4C46}));
        const auto r = harness::grid_search(space.teacher, lf, a.folds, numcore::derive_seed({a.seed, 0x435646}));
        result["teacher"] = harness::to_json(r.best);
        result["cv"] = harness::to_json(r.outcome);
    } else {
        const auto method = harness::method_from_key(a.method);
        plan.methods = {method};
        plan.configs = {{method, harness::reference_config(method, treatment)}};
        require(a.tuning_size < plan.hf_pool, "--tuning-size must be smaller than the high-fidelity pool");
        const auto ctx = harness::prepare_context(plan);
        const auto tuning = dataio::subsample(ctx.hf_pool, a.tuning_size, numcore::derive_seed({a.seed, 0x54554E45}));
        const auto r = harness::grid_search(space.methods.at(method), ctx.upstream, tuning, a.folds,
                                            numcore::derive_seed({a.seed, 0x435646}));
        result["methods"] = {{a.method, harness::to_json(r.best)}};
        result["cv"] = harness::to_json(r.outcome);
    }
    const std::string text = result.dump(2);
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        write_json_file(a.out, result);
        std::printf("wrote grid-search result to %s\n", a.out.c_str());
    }
}

struct InterpretArgs {
    std::string ckpt;
    std::string data;
    std::string out;
    std::size_t mi_steps = 1000;
};

void run_interpret(const InterpretArgs& a) {
    const auto envelope = models::read_checkpoint(a.ckpt);
    const std::string method = envelope.at("method").get<std::string>();
    require(method == "icfkd", "interpret needs an icfkd checkpoint, got '" + method + "'");
    const auto model = std::get<interpret::IcfkdModel>(harness::model_from_checkpoint(method, envelope.at("model")));
    const auto ds = dataio::read_dataset_csv(a.data);
    require(!ds.empty(), a.data + " has no rows");
    make_dir(a.out);
    const auto dir = std::filesystem::path(a.out);
    const auto report = interpret::gradient_x_input(model, ds.features);
    interpret::write_attribution_csv(report, dir / "attribution.csv");
    write_json_file(dir / "attribution.json", interpret::to_json(report));
    json summary{{"samples", ds.size()},
                 {"beta", model.beta},
                 {"vector_dim", model.vector_dim()},
                 {"mse", dataio::mse(ds.labels, interpret::predict(model, ds.features))}};
    if (ds.size() >= 64 && a.mi_steps > 0) {
        summary["vector_mi_nats"] = interpret::vector_mutual_information(model, ds.features, a.mi_steps, 0);
    }
    write_json_file(dir / "summary.json", summary);
    std::printf("attribution over %zu samples written to %s\n", ds.size(), a.out.c_str());
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"cfkd: cross-fidelity knowledge distillation toolkit"};
    app.require_subcommand(1);

    GenArgs gen;
    auto* gen_cmd = app.add_subcommand("gen-data", "simulate a fidelity-tagged dataset");
    gen_cmd->add_option("--treatment", gen.treatment, "treatment 1..4")->required()->check(CLI::Range(1, 4));
    gen_cmd->add_option("--fidelity", gen.fidelity, "high or low")->required()->check(CLI::IsMember({"high", "low"}));
    gen_cmd->add_option("--n", gen.n, "number of patients")->required()->check(CLI::PositiveNumber);
    gen_cmd->add_option("--seed", gen.seed, "random seed");
    gen_cmd->add_option("--out", gen.out, "output CSV")->required();
    gen_cmd->add_option("--threads", gen.threads, "worker threads")->check(CLI::PositiveNumber);

    TrainArgs train;
    auto* train_cmd = app.add_subcommand("train", "train one method and write a checkpoint");
    train_cmd->add_option("--method", train.method, "hf, pft, mftlnn, mfdf, cfkd, icfkd")
        ->required()
        ->check(CLI::IsMember({"hf", "pft", "mftlnn", "mfdf", "cfkd", "icfkd"}));
    train_cmd->add_option("--lf", train.lf, "low-fidelity CSV");
    train_cmd->add_option("--hf", train.hf, "high-fidelity CSV")->required();
    train_cmd->add_option("--config", train.config, "JSON config");
    train_cmd->add_option("--out", train.out, "checkpoint path")->required();

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark protocol");
    bench_cmd->add_option("--protocol", bench.protocol, "expected, fine, ablation")
        ->required()
        ->check(CLI::IsMember({"expected", "fine", "ablation"}));
    bench_cmd->add_option("--treatment", bench.treatment, "treatment 1..4")->required()->check(CLI::Range(1, 4));
    bench_cmd->add_option("--seed", bench.seed, "master seed");
    bench_cmd->add_option("--out", bench.out, "output directory")->required();
    bench_cmd->add_flag("--fast", bench.fast, "2000/200 pools, 20 size draws, 5 repetitions");
    bench_cmd->add_option("--threads", bench.threads, "worker threads")->check(CLI::PositiveNumber);
    bench_cmd->add_option("--reps", bench.repetitions, "override repetitions");
    bench_cmd->add_option("--config", bench.config, "JSON with teacher / per-method settings");

    TuneArgs tune;
    auto* tune_cmd = app.add_subcommand("tune", "grid search with k-fold cross-validation");
    tune_cmd->add_option("--method", tune.method, "teacher or a method key")->required();
    tune_cmd->add_option("--treatment", tune.treatment, "treatment 1..4")->required()->check(CLI::Range(1, 4));
    tune_cmd->add_option("--seed", tune.seed, "seed");
    tune_cmd->add_option("--folds", tune.folds, "number of folds")->check(CLI::Range(2, 100));
    tune_cmd->add_option("--tuning-size", tune.tuning_size, "high-fidelity rows used for tuning");
    tune_cmd->add_flag("--fast", tune.fast, "use the fast pool sizes");
    tune_cmd->add_option("--out", tune.out, "output JSON");

    InterpretArgs interp;
    auto* interp_cmd = app.add_subcommand("interpret", "Gradient x Input attribution of an iCFKD-AFN checkpoint");
    interp_cmd->add_option("--ckpt", interp.ckpt, "checkpoint")->required();
    interp_cmd->add_option("--data", interp.data, "dataset CSV")->required();
    interp_cmd->add_option("--out", interp.out, "output directory")->required();
    interp_cmd->add_option("--mi-steps", interp.mi_steps, "critic steps for the MI estimate (0 skips it)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitContract;
    }

    try {
        if (*gen_cmd) {
            run_gen(gen);
        } else if (*train_cmd) {
            run_train(train);
        } else if (*bench_cmd) {
            run_bench(bench);
        } else if (*tune_cmd) {
            run_tune(tune);
        } else if (*interp_cmd) {
            run_interpret(interp);
        }
    } catch (const ContractError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitContract;
    } catch (const IoError& e) {
        std::cerr << "I/O error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
