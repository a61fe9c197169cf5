#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/harness/methods.hpp"
#include "cfkd/patientsim/simulator.hpp"

#include <json.hpp>

#include <cstddef>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cfkd::harness {

enum class Protocol { Expected, FineGrained, Ablation };

std::string to_string(Protocol p);
Protocol protocol_from_string(const std::string& s);

struct ExperimentPlan {
    dataio::TreatmentKind treatment = dataio::TreatmentKind::DeclineReduction;
    Protocol protocol = Protocol::Expected;
    std::vector<Method> methods;
    std::size_t lf_pool = 5000;
    std::size_t hf_pool = 500;
    /// FineGrained: the explicit training sizes.
    std::vector<std::size_t> sizes{10, 20, 40, 80, 100};
    /// Expected / Ablation: number of sizes drawn from Uniform{min_size..max_size}.
    std::size_t size_draws = 50;
    std::size_t min_size = 10;
    std::size_t max_size = 100;
    /// Repetitions per size (FineGrained) or per drawn size (Expected / Ablation).
    std::size_t repetitions = 1;
    std::uint64_t master_seed = 0;
    std::size_t threads = 1;
    TeacherConfig teacher;
    /// Per-method hyperparameters; methods missing here use the reference settings.
    std::map<Method, MethodConfig> configs;
    /// Echo of the command line, stored in the provenance block.
    std::map<std::string, std::string> flags;
};

/// Plan with the reference teacher and method settings for `treatment`.
ExperimentPlan default_plan(Protocol protocol, dataio::TreatmentKind treatment, std::uint64_t master_seed);
/// 2000 LF / 200 HF, 5 repetitions (fine-grained), 20 size draws.
ExperimentPlan fast_plan(Protocol protocol, dataio::TreatmentKind treatment, std::uint64_t master_seed);

/// Throws ContractError on an inconsistent plan: empty method set, HF pool not
/// smaller than the LF pool, a training size leaving no test rows, or (for
/// Ablation) a method outside the CFKD-AFN family.
void validate(const ExperimentPlan& plan);

MethodConfig config_for(const ExperimentPlan& plan, Method method);

/// Pools and teacher-side models shared by every cell of one plan.
struct PreparedContext {
    dataio::FidelityDataset lf_pool;
    dataio::FidelityDataset hf_pool;
    Upstream upstream;
};

/// Generates both pools and trains the teacher (and, if MF-TLNN is planned,
/// the autoencoder). Pure function of the plan's seed and settings.
PreparedContext prepare_context(const ExperimentPlan& plan);

/// Training sizes per size index: the drawn sizes, or the explicit list.
std::vector<std::size_t> planned_sizes(const ExperimentPlan& plan);

/// Seeds for one cell. The subsample seed ignores the method so methods are paired.
std::uint64_t subsample_seed(std::uint64_t master, std::size_t size_index, std::size_t repetition);
std::uint64_t run_seed(std::uint64_t master, std::size_t size_index, std::size_t repetition, Method method);

struct RunRecord {
    Method method = Method::Hf;
    std::size_t size_index = 0;
    std::size_t repetition = 0;
    std::size_t size = 0;
    double mse = 0.0;
    double mape = 0.0;

    friend bool operator==(const RunRecord&, const RunRecord&) = default;
};

struct ReportRow {
    std::string method;
    /// Training size, or "expected" for a row averaged over drawn sizes.
    std::string size;
    std::size_t runs = 0;
    double mse_mean = 0.0;
    double mse_std = 0.0;
    double mape_mean = 0.0;
    double mape_std = 0.0;

    friend bool operator==(const ReportRow&, const ReportRow&) = default;
};

/// Relative improvement of the reference model over `method` in percent.
struct RatioRow {
    std::string method;
    std::string size;
    double mse_ratio = 0.0;
    double mape_ratio = 0.0;

    friend bool operator==(const RatioRow&, const RatioRow&) = default;
};

struct ExperimentReport {
    std::vector<ReportRow> rows;
    std::vector<RatioRow> ratios;
    std::vector<RunRecord> runs;
    nlohmann::json provenance;

    const ReportRow* find(const std::string& method, const std::string& size) const;

    friend bool operator==(const ExperimentReport&, const ExperimentReport&) = default;
};

/// (other - ours) / other * 100.
double improvement_ratio(double ours, double other);

/// Runs every cell of the plan against a prepared context.
ExperimentReport run_protocol(const ExperimentPlan& plan, const PreparedContext& context);

/// Each checks the plan's protocol, prepares the context and runs it.
ExperimentReport run_expected(const ExperimentPlan& plan);
ExperimentReport run_fine_grained(const ExperimentPlan& plan);
ExperimentReport run_ablation(const ExperimentPlan& plan);

/// Aggregates runs into rows (sample std, 0 for a single run) and ratio rows
/// against `reference` when it is among the runs.
void aggregate(ExperimentReport& report, Protocol protocol, Method reference);

/// 16-hex-digit FNV-1a hash of the plan's canonical JSON.
std::string config_hash(const ExperimentPlan& plan);
nlohmann::json plan_to_json(const ExperimentPlan& plan);

enum class ReportFormat { Csv, Json };

/// Csv writes the table to `path` and the ratio rows next to it as
/// <stem>_ratios.csv, with the provenance as <stem>_provenance.json. Json
/// writes the full report. Throws IoError when a file cannot be written.
void emit_report(const ExperimentReport& report, const std::string& path, ReportFormat format);

std::string report_csv(const ExperimentReport& report);
std::string ratios_csv(const ExperimentReport& report);
nlohmann::json to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const nlohmann::json& j);
ExperimentReport read_report_json(const std::string& path);

} // namespace cfkd::harness
