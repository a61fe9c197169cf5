#pragma once

#include "cfkd/dataio/dataset.hpp"
#include "cfkd/numcore/random.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <span>

namespace cfkd::patientsim {

using dataio::Fidelity;
using dataio::TreatmentKind;

enum class BmiClass { Low = 0, Normal = 1, High = 2 };

/// The fourteen patient characteristics. Bounds: age 40..85, pack_years 10..89,
/// bronchodilator_resp 15..31.
struct PatientProfile {
    int age = 64;
    BmiClass bmi = BmiClass::Normal;
    bool smoking = false;
    int pack_years = 44;
    bool sex_female = false;
    bool heart_failure = false;
    bool other_cvd = false;
    bool diabetes = false;
    bool depression = false;
    bool asthma_rhinitis = false;
    bool emphysema = false;
    bool concomitant_conditions = false;
    bool eosinophil_high = false;
    int bronchodilator_resp = 23;

    /// Encoded in dataset column order (bmi as 0/1/2, booleans as 0/1).
    std::array<double, dataio::kFeatureCount> features() const;
    static PatientProfile from_features(std::span<const double> x);

    friend bool operator==(const PatientProfile&, const PatientProfile&) = default;
};

struct TreatmentSpec {
    TreatmentKind kind = TreatmentKind::None;
    /// T1: fractional decline reduction; T2: fractional interval extension;
    /// T3: activity points; T4: fractional symptom-probability reduction.
    double magnitude = 0.0;

    /// Default magnitudes: T1 0.20, T2 0.30, T3 4 points, T4 0.20.
    static TreatmentSpec standard(TreatmentKind kind);
};

struct FidelityLevel {
    Fidelity level = Fidelity::High;
    std::size_t replications = 1000;
    bool annual_backfill = true;

    static FidelityLevel high() { return {Fidelity::High, 1000, true}; }
    static FidelityLevel low() { return {Fidelity::Low, 100, false}; }
    static FidelityLevel of(Fidelity f) { return f == Fidelity::High ? high() : low(); }
};

/// Surrogate discrete-event model constants. Hazards are per year, volumes in litres.
struct SimParams {
    double horizon = 20.0;
    double death_fev1_threshold = 0.2;

    // Lung function.
    double initial_fev1 = 2.5;
    double fev1_age_slope = 0.02;
    double fev1_emphysema = 0.1;
    double fev1_female = 0.3;
    double fev1_bdr_slope = 0.01;
    double annual_decline = 0.06;
    double decline_smoking_factor = 1.25;
    double decline_female_factor = 0.9;
    double exacerbation_fev1_drop = 0.05;
    double pneumonia_fev1_drop = 0.03;

    // Event base rates.
    double exacerbation_rate = 0.5;
    double pneumonia_rate = 0.1;
    double death_rate = 0.03;

    // Exacerbation log-hazard coefficients.
    double exac_smoking = 0.4;
    double exac_emphysema = 0.3;
    double exac_pack_years = 0.01;
    double exac_activity = 0.05;
    double exac_asthma = 0.3;
    double exac_eosinophil = 0.25;

    // Death log-hazard coefficients.
    double death_age = 0.03;
    double death_heart_failure = 0.5;
    double death_other_cvd = 0.3;
    double death_bmi_low = 0.3;

    // Pneumonia log-hazard coefficients.
    double pneu_diabetes = 0.2;
    double pneu_concomitant = 0.2;

    // Annual utility.
    double utility_base = 0.85;
    double utility_fev1 = 0.15;
    double utility_dyspnea = 0.06;
    double utility_cough = 0.04;
    double utility_depression = 0.05;
    double utility_activity = 0.004;
    double utility_bmi_high = 0.02;

    // Symptom probabilities per year.
    double dyspnea_base = 0.3;
    double dyspnea_fev1 = 0.3;
    double cough_base = 0.35;
    double cough_smoking = 0.15;
};

/// Draws one patient from the fidelity level's population distribution.
PatientProfile sample_profile(const FidelityLevel& fidelity, numcore::Rng& rng);

/// One event sequence; returns the QALYs accrued until death, FEV1 below the
/// threshold, or the horizon.
double simulate_replication(const PatientProfile& profile, const TreatmentSpec& treatment,
                            bool annual_backfill, const SimParams& params, numcore::Rng& rng);

/// Mean QALYs over `fidelity.replications` event sequences. Replication r uses
/// the stream derive_seed(stream_seed, r), so the result is a pure function of
/// its arguments.
double simulate_qaly(const PatientProfile& profile, const TreatmentSpec& treatment, const FidelityLevel& fidelity,
                     const SimParams& params, std::uint64_t stream_seed);

/// n patients drawn and simulated under one treatment. Deterministic per seed
/// regardless of `threads`.
dataio::FidelityDataset generate_dataset(std::size_t n, const FidelityLevel& fidelity,
                                         const TreatmentSpec& treatment, const SimParams& params,
                                         std::uint64_t seed, std::size_t threads = 1);

/// Stream seeds generate_dataset uses for patient i.
std::uint64_t profile_stream(std::uint64_t seed, std::size_t patient);
std::uint64_t outcome_stream(std::uint64_t seed, std::size_t patient);

} // namespace cfkd::patientsim
