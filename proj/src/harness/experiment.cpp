#include "cfkd/harness/experiment.hpp"

#include "cfkd/dataio/metrics.hpp"
#include "cfkd/dataio/sampling.hpp"
#include "cfkd/errors.hpp"
#include "cfkd/numcore/parallel.hpp"
#include "cfkd/numcore/random.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

namespace cfkd::harness {

using dataio::TreatmentKind;
using nlohmann::json;
using numcore::derive_seed;

namespace {

constexpr std::uint64_t kLfPoolSalt = 0x4C46504F4F4C;
constexpr std::uint64_t kHfPoolSalt = 0x48465F4F4F4C;
constexpr std::uint64_t kTeacherSalt = 0x544541434852;
constexpr std::uint64_t kAutoencoderSalt = 0x4155544F454E;
constexpr std::uint64_t kSizeSalt = 0x53495A4553;
constexpr std::uint64_t kSubsampleSalt = 0x535542;

const char* const kExpectedLabel = "expected";

bool ablation_member(Method m) {
    return m == Method::Cfkd || m == Method::CfkdNoTeacherOutput || m == Method::CfkdNoTeacherFeature ||
           m == Method::CfkdNoInput;
}

double sample_std(const std::vector<double>& v, double mean) {
    if (v.size() < 2) {
        return 0.0;
    }
    double ss = 0.0;
    for (double x : v) {
        ss += (x - mean) * (x - mean);
    }
    return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

std::string fixed4(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.4f", v);
    return buf;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw IoError("failed writing " + path.string());
    }
}

} // namespace

std::string to_string(Protocol p) {
    switch (p) {
    case Protocol::Expected:
        return "expected";
    case Protocol::FineGrained:
        return "fine";
    case Protocol::Ablation:
        return "ablation";
    }
    return "?";
}

Protocol protocol_from_string(const std::string& s) {
    if (s == "expected") {
        return Protocol::Expected;
    }
    if (s == "fine") {
        return Protocol::FineGrained;
    }
    if (s == "ablation") {
        return Protocol::Ablation;
    }
    throw ContractError("unknown protocol '" + s + "' (expected, fine, ablation)");
}

ExperimentPlan default_plan(Protocol protocol, TreatmentKind treatment, std::uint64_t master_seed) {
    ExperimentPlan plan;
    plan.treatment = treatment;
    plan.protocol = protocol;
    plan.master_seed = master_seed;
    plan.teacher = reference_teacher(treatment);
    switch (protocol) {
    case Protocol::Expected:
        plan.methods = {Method::Hf, Method::Pft, Method::Mftlnn, Method::Mfdf, Method::Cfkd};
        break;
    case Protocol::FineGrained:
        plan.methods = {Method::Hf, Method::Pft, Method::Mftlnn, Method::Mfdf, Method::Cfkd};
        plan.repetitions = 20;
        break;
    case Protocol::Ablation:
        plan.methods = {Method::Cfkd, Method::CfkdNoTeacherOutput, Method::CfkdNoTeacherFeature, Method::CfkdNoInput};
        break;
    }
    for (Method m : plan.methods) {
        plan.configs[m] = reference_config(m, treatment);
    }
    return plan;
}

ExperimentPlan fast_plan(Protocol protocol, TreatmentKind treatment, std::uint64_t master_seed) {
    ExperimentPlan plan = default_plan(protocol, treatment, master_seed);
    plan.lf_pool = 2000;
    plan.hf_pool = 200;
    plan.size_draws = 20;
    if (protocol == Protocol::FineGrained) {
        plan.repetitions = 5;
    }
    return plan;
}

void validate(const ExperimentPlan& plan) {
    require(!plan.methods.empty(), "plan: empty method set");
    require(std::set<Method>(plan.methods.begin(), plan.methods.end()).size() == plan.methods.size(),
            "plan: duplicate method");
    require(plan.treatment != TreatmentKind::None, "plan: treatment must be 1..4");
    require(plan.hf_pool < plan.lf_pool, "plan: the high-fidelity pool must be smaller than the low-fidelity pool");
    require(plan.repetitions >= 1, "plan: repetitions must be at least 1");
    require(plan.threads >= 1, "plan: threads must be at least 1");
    std::size_t largest = 0;
    if (plan.protocol == Protocol::FineGrained) {
        require(!plan.sizes.empty(), "plan: empty size list");
        for (std::size_t s : plan.sizes) {
            require(s >= 2, "plan: training sizes must be at least 2");
            largest = std::max(largest, s);
        }
    } else {
        require(plan.size_draws >= 1, "plan: size_draws must be at least 1");
        require(plan.min_size >= 2 && plan.min_size <= plan.max_size, "plan: invalid size range");
        largest = plan.max_size;
    }
    require(largest < plan.hf_pool, "plan: high-fidelity pool of " + std::to_string(plan.hf_pool) +
                                        " leaves no test rows for training size " + std::to_string(largest));
    if (plan.protocol == Protocol::Ablation) {
        for (Method m : plan.methods) {
            require(ablation_member(m), "plan: ablation accepts only CFKD-AFN and its variants, not " + method_key(m));
        }
    }
    for (const auto& [m, c] : plan.configs) {
        require(c.method == m, "plan: config keyed by " + method_key(m) + " describes " + method_key(c.method));
    }
}

MethodConfig config_for(const ExperimentPlan& plan, Method method) {
    const auto it = plan.configs.find(method);
    return it != plan.configs.end() ? it->second : reference_config(method, plan.treatment);
}

PreparedContext prepare_context(const ExperimentPlan& plan) {
    validate(plan);
    const auto treatment = patientsim::TreatmentSpec::standard(plan.treatment);
    const patientsim::SimParams params;
    PreparedContext ctx;
    ctx.hf_pool = patientsim::generate_dataset(plan.hf_pool, patientsim::FidelityLevel::high(), treatment, params,
                                               derive_seed({plan.master_seed, kHfPoolSalt}), plan.threads);
    const bool need_teacher = std::any_of(plan.methods.begin(), plan.methods.end(), uses_teacher);
    const bool need_ae = std::any_of(plan.methods.begin(), plan.methods.end(), uses_autoencoder);
    if (need_teacher || need_ae) {
        ctx.lf_pool = patientsim::generate_dataset(plan.lf_pool, patientsim::FidelityLevel::low(), treatment, params,
                                                   derive_seed({plan.master_seed, kLfPoolSalt}), plan.threads);
    }
    if (need_teacher) {
        ctx.upstream.teacher = std::make_shared<const models::LowFiModel>(
            train_teacher(ctx.lf_pool, plan.teacher, derive_seed({plan.master_seed, kTeacherSalt})));
    }
    if (need_ae) {
        ctx.upstream.autoencoder = std::make_shared<const models::AutoencoderModel>(
            train_teacher_autoencoder(ctx.lf_pool, plan.teacher, derive_seed({plan.master_seed, kAutoencoderSalt})));
    }
    return ctx;
}

std::vector<std::size_t> planned_sizes(const ExperimentPlan& plan) {
    if (plan.protocol == Protocol::FineGrained) {
        return plan.sizes;
    }
    auto rng = numcore::make_rng({plan.master_seed, kSizeSalt});
    std::vector<std::size_t> sizes;
    for (std::size_t i = 0; i < plan.size_draws; ++i) {
        sizes.push_back(static_cast<std::size_t>(
            numcore::draw_int(rng, static_cast<long>(plan.min_size), static_cast<long>(plan.max_size))));
    }
    return sizes;
}

std::uint64_t subsample_seed(std::uint64_t master, std::size_t size_index, std::size_t repetition) {
    return derive_seed({master, size_index, repetition, kSubsampleSalt});
}

std::uint64_t run_seed(std::uint64_t master, std::size_t size_index, std::size_t repetition, Method method) {
    return derive_seed({master, size_index, repetition, method_id(method)});
}

const ReportRow* ExperimentReport::find(const std::string& method, const std::string& size) const {
    for (const auto& r : rows) {
        if (r.method == method && r.size == size) {
            return &r;
        }
    }
    return nullptr;
}

double improvement_ratio(double ours, double other) {
    require(other != 0.0, "ratio: competing metric is zero");
    return (other - ours) / other * 100.0;
}

ExperimentReport run_protocol(const ExperimentPlan& plan, const PreparedContext& ctx) {
    validate(plan);
    require(ctx.hf_pool.size() == plan.hf_pool, "context does not match the plan's high-fidelity pool");
    const auto sizes = planned_sizes(plan);
    const std::size_t reps = plan.repetitions;
    const std::size_t n_methods = plan.methods.size();
    const std::size_t cells = sizes.size() * reps * n_methods;
    std::vector<MethodConfig> configs;
    for (Method m : plan.methods) {
        configs.push_back(config_for(plan, m));
    }
    std::vector<RunRecord> runs(cells);
    numcore::parallel_for(cells, plan.threads, [&](std::size_t cell) {
        const std::size_t m = cell % n_methods;
        const std::size_t r = (cell / n_methods) % reps;
        const std::size_t si = cell / (n_methods * reps);
        const auto taken = dataio::subsample_indices(ctx.hf_pool.size(), sizes[si],
                                                     subsample_seed(plan.master_seed, si, r));
        const auto train = ctx.hf_pool.subset(taken);
        const auto test = ctx.hf_pool.subset(dataio::complement_indices(ctx.hf_pool.size(), taken));
        const Method method = plan.methods[m];
        const auto model = train_method(configs[m], ctx.upstream, train, run_seed(plan.master_seed, si, r, method));
        const auto pred = predict(model, test.features);
        runs[cell] = {method, si, r, sizes[si], dataio::mse(test.labels, pred), dataio::mape(test.labels, pred)};
    });
    ExperimentReport report;
    report.runs = std::move(runs);
    json prov;
    prov["tool"] = "cfkd";
    prov["report_version"] = 1;
    prov["plan"] = plan_to_json(plan);
    prov["config_hash"] = config_hash(plan);
    prov["sizes"] = sizes;
    prov["seeds"] = {{"master", plan.master_seed},
                     {"hf_pool", derive_seed({plan.master_seed, kHfPoolSalt})},
                     {"lf_pool", derive_seed({plan.master_seed, kLfPoolSalt})},
                     {"teacher", derive_seed({plan.master_seed, kTeacherSalt})},
                     {"autoencoder", derive_seed({plan.master_seed, kAutoencoderSalt})}};
    report.provenance = std::move(prov);
    aggregate(report, plan.protocol, Method::Cfkd);
    return report;
}

ExperimentReport run_expected(const ExperimentPlan& plan) {
    require(plan.protocol == Protocol::Expected, "run_expected: plan protocol is " + to_string(plan.protocol));
    return run_protocol(plan, prepare_context(plan));
}

ExperimentReport run_fine_grained(const ExperimentPlan& plan) {
    require(plan.protocol == Protocol::FineGrained, "run_fine_grained: plan protocol is " + to_string(plan.protocol));
    return run_protocol(plan, prepare_context(plan));
}

ExperimentReport run_ablation(const ExperimentPlan& plan) {
    require(plan.protocol == Protocol::Ablation, "run_ablation: plan protocol is " + to_string(plan.protocol));
    return run_protocol(plan, prepare_context(plan));
}

void aggregate(ExperimentReport& report, Protocol protocol, Method reference) {
    report.rows.clear();
    report.ratios.clear();
    std::vector<Method> methods;
    std::vector<std::string> labels;
    auto size_label = [&](const RunRecord& r) {
        return protocol == Protocol::FineGrained ? std::to_string(r.size) : std::string(kExpectedLabel);
    };
    for (const auto& r : report.runs) {
        if (std::find(methods.begin(), methods.end(), r.method) == methods.end()) {
            methods.push_back(r.method);
        }
        const auto l = size_label(r);
        if (std::find(labels.begin(), labels.end(), l) == labels.end()) {
            labels.push_back(l);
        }
    }
    for (Method m : methods) {
        for (const auto& l : labels) {
            std::vector<double> mses;
            std::vector<double> mapes;
            for (const auto& r : report.runs) {
                if (r.method == m && size_label(r) == l) {
                    mses.push_back(r.mse);
                    mapes.push_back(r.mape);
                }
            }
            if (mses.empty()) {
                continue;
            }
            ReportRow row;
            row.method = method_label(m);
            row.size = l;
            row.runs = mses.size();
            row.mse_mean = std::accumulate(mses.begin(), mses.end(), 0.0) / static_cast<double>(mses.size());
            row.mape_mean = std::accumulate(mapes.begin(), mapes.end(), 0.0) / static_cast<double>(mapes.size());
            row.mse_std = sample_std(mses, row.mse_mean);
            row.mape_std = sample_std(mapes, row.mape_mean);
            report.rows.push_back(row);
        }
    }
    const std::string ours = method_label(reference);
    for (const auto& row : report.rows) {
        if (row.method == ours) {
            continue;
        }
        const ReportRow* ref = report.find(ours, row.size);
        if (ref == nullptr) {
            continue;
        }
        report.ratios.push_back({row.method, row.size, improvement_ratio(ref->mse_mean, row.mse_mean),
                                 improvement_ratio(ref->mape_mean, row.mape_mean)});
    }
}

json plan_to_json(const ExperimentPlan& plan) {
    json methods = json::array();
    json configs = json::object();
    for (Method m : plan.methods) {
        methods.push_back(method_key(m));
        configs[method_key(m)] = to_json(config_for(plan, m));
    }
    json j{{"treatment", dataio::treatment_number(plan.treatment)},
           {"protocol", to_string(plan.protocol)},
           {"methods", methods},
           {"lf_pool", plan.lf_pool},
           {"hf_pool", plan.hf_pool},
           {"repetitions", plan.repetitions},
           {"master_seed", plan.master_seed},
           {"teacher", to_json(plan.teacher)},
           {"method_configs", configs},
           {"flags", plan.flags}};
    if (plan.protocol == Protocol::FineGrained) {
        j["sizes"] = plan.sizes;
    } else {
        j["size_draws"] = plan.size_draws;
        j["size_range"] = {plan.min_size, plan.max_size};
    }
    return j;
}

std::string config_hash(const ExperimentPlan& plan) {
    const std::string text = plan_to_json(plan).dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string report_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "method,size,mse_mean,mse_std,mape_mean,mape_std\n";
    for (const auto& r : report.rows) {
        out << r.method << ',' << r.size << ',' << fixed4(r.mse_mean) << ',' << fixed4(r.mse_std) << ','
            << fixed4(r.mape_mean) << ',' << fixed4(r.mape_std) << '\n';
    }
    return out.str();
}

std::string ratios_csv(const ExperimentReport& report) {
    std::ostringstream out;
    out << "method,size,mse_ratio,mape_ratio\n";
    for (const auto& r : report.ratios) {
        out << r.method << ',' << r.size << ',' << fixed4(r.mse_ratio) << ',' << fixed4(r.mape_ratio) << '\n';
    }
    return out.str();
}

json to_json(const ExperimentReport& report) {
    json rows = json::array();
    for (const auto& r : report.rows) {
        rows.push_back({{"method", r.method},
                        {"size", r.size},
                        {"runs", r.runs},
                        {"mse_mean", r.mse_mean},
                        {"mse_std", r.mse_std},
                        {"mape_mean", r.mape_mean},
                        {"mape_std", r.mape_std}});
    }
    json ratios = json::array();
    for (const auto& r : report.ratios) {
        ratios.push_back({{"method", r.method}, {"size", r.size}, {"mse_ratio", r.mse_ratio}, {"mape_ratio", r.mape_ratio}});
    }
    json runs = json::array();
    for (const auto& r : report.runs) {
        runs.push_back({{"method", method_key(r.method)},
                        {"size_index", r.size_index},
                        {"repetition", r.repetition},
                        {"size", r.size},
                        {"mse", r.mse},
                        {"mape", r.mape}});
    }
    return {{"rows", rows}, {"ratios", ratios}, {"runs", runs}, {"provenance", report.provenance}};
}

ExperimentReport report_from_json(const json& j) {
    ExperimentReport report;
    try {
        for (const auto& r : j.at("rows")) {
            report.rows.push_back({r.at("method").get<std::string>(), r.at("size").get<std::string>(),
                                   r.at("runs").get<std::size_t>(), r.at("mse_mean").get<double>(),
                                   r.at("mse_std").get<double>(), r.at("mape_mean").get<double>(),
                                   r.at("mape_std").get<double>()});
        }
        for (const auto& r : j.at("ratios")) {
            report.ratios.push_back({r.at("method").get<std::string>(), r.at("size").get<std::string>(),
                                     r.at("mse_ratio").get<double>(), r.at("mape_ratio").get<double>()});
        }
        for (const auto& r : j.at("runs")) {
            report.runs.push_back({method_from_key(r.at("method").get<std::string>()),
                                   r.at("size_index").get<std::size_t>(), r.at("repetition").get<std::size_t>(),
                                   r.at("size").get<std::size_t>(), r.at("mse").get<double>(),
                                   r.at("mape").get<double>()});
        }
        report.provenance = j.at("provenance");
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed report JSON: ") + e.what());
    }
    for (const auto& r : report.rows) {
        require(r.runs >= 1, "report row " + r.method + " records no runs");
    }
    return report;
}

ExperimentReport read_report_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open report " + path);
    }
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError("report " + path + " is not valid JSON: " + e.what());
    }
    return report_from_json(j);
}

void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format) {
    require(!report.rows.empty(), "emit_report: report has no rows");
    const std::filesystem::path p(path);
    if (format == ReportFormat::Json) {
        write_text(p, to_json(report).dump(2) + "\n");
        return;
    }
    const auto dir = p.parent_path();
    const auto stem = p.stem().string();
    write_text(p, report_csv(report));
    write_text(dir / (stem + "_ratios.csv"), ratios_csv(report));
    write_text(dir / (stem + "_provenance.json"), report.provenance.dump(2) + "\n");
}

} // namespace cfkd::harness
