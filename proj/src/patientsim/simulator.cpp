#include "cfkd/patientsim/simulator.hpp"

#include "cfkd/errors.hpp"
#include "cfkd/numcore/parallel.hpp"

#include <algorithm>
#include <cmath>

namespace cfkd::patientsim {

using numcore::Rng;

std::array<double, dataio::kFeatureCount> PatientProfile::features() const {
    auto b = [](bool v) { return v ? 1.0 : 0.0; };
    return {static_cast<double>(age),
            static_cast<double>(static_cast<int>(bmi)),
            b(smoking),
            static_cast<double>(pack_years),
            b(sex_female),
            b(heart_failure),
            b(other_cvd),
            b(diabetes),
            b(depression),
            b(asthma_rhinitis),
            b(emphysema),
            b(concomitant_conditions),
            b(eosinophil_high),
            static_cast<double>(bronchodilator_resp)};
}

PatientProfile PatientProfile::from_features(std::span<const double> x) {
    require(x.size() == dataio::kFeatureCount, "PatientProfile::from_features: expected 14 values");
    const int bmi = static_cast<int>(std::lround(x[1]));
    require(bmi >= 0 && bmi <= 2, "PatientProfile::from_features: bmi class must be 0, 1 or 2");
    auto flag = [](double v) { return v >= 0.5; };
    PatientProfile p;
    p.age = static_cast<int>(std::lround(x[0]));
    p.bmi = static_cast<BmiClass>(bmi);
    p.smoking = flag(x[2]);
    p.pack_years = static_cast<int>(std::lround(x[3]));
    p.sex_female = flag(x[4]);
    p.heart_failure = flag(x[5]);
    p.other_cvd = flag(x[6]);
    p.diabetes = flag(x[7]);
    p.depression = flag(x[8]);
    p.asthma_rhinitis = flag(x[9]);
    p.emphysema = flag(x[10]);
    p.concomitant_conditions = flag(x[11]);
    p.eosinophil_high = flag(x[12]);
    p.bronchodilator_resp = static_cast<int>(std::lround(x[13]));
    return p;
}

TreatmentSpec TreatmentSpec::standard(TreatmentKind kind) {
    switch (kind) {
    case TreatmentKind::None:
        return {kind, 0.0};
    case TreatmentKind::DeclineReduction:
        return {kind, 0.20};
    case TreatmentKind::ExacerbationDelay:
        return {kind, 0.30};
    case TreatmentKind::ActivityBoost:
        return {kind, 4.0};
    case TreatmentKind::SymptomRelief:
        return {kind, 0.20};
    }
    return {kind, 0.0};
}

namespace {

/// Round(Normal(mean, sd²) | [lo, hi]) with truncation by resampling.
int rounded_truncated_normal(Rng& rng, double mean, double sd, int lo, int hi) {
    for (;;) {
        const double x = numcore::draw_normal(rng, mean, sd);
        if (x >= lo && x <= hi) {
            return static_cast<int>(std::lround(x));
        }
    }
}

BmiClass draw_bmi(Rng& rng, double p_low, double p_normal) {
    const double u = numcore::draw_uniform01(rng);
    if (u < p_low) {
        return BmiClass::Low;
    }
    if (u < p_low + p_normal) {
        return BmiClass::Normal;
    }
    return BmiClass::High;
}

struct PatientRates {
    double exacerbation;
    double pneumonia;
    double death;
    double decline;
    double fev1_start;
    double activity;
    double symptom_scale;
    double exacerbation_wait_scale;
};

PatientRates patient_rates(const PatientProfile& p, const TreatmentSpec& t, const SimParams& s) {
    const double activity = t.kind == TreatmentKind::ActivityBoost ? t.magnitude : 0.0;
    PatientRates r{};
    r.activity = activity;
    r.exacerbation = s.exacerbation_rate *
                     std::exp(s.exac_smoking * p.smoking + s.exac_emphysema * p.emphysema +
                              s.exac_pack_years * (p.pack_years - 44) - s.exac_activity * activity +
                              s.exac_asthma * p.asthma_rhinitis + s.exac_eosinophil * p.eosinophil_high);
    r.death = s.death_rate * std::exp(s.death_age * (p.age - 64) + s.death_heart_failure * p.heart_failure +
                                      s.death_other_cvd * p.other_cvd +
                                      s.death_bmi_low * (p.bmi == BmiClass::Low));
    r.pneumonia = s.pneumonia_rate * std::exp(s.pneu_diabetes * p.diabetes + s.pneu_concomitant * p.concomitant_conditions);
    r.decline = s.annual_decline * (p.smoking ? s.decline_smoking_factor : 1.0) *
                (p.sex_female ? s.decline_female_factor : 1.0);
    if (t.kind == TreatmentKind::DeclineReduction) {
        r.decline *= 1.0 - t.magnitude;
    }
    r.fev1_start = s.initial_fev1 - s.fev1_age_slope * (p.age - 40) - s.fev1_emphysema * p.emphysema -
                   s.fev1_female * p.sex_female + s.fev1_bdr_slope * (p.bronchodilator_resp - 23);
    r.symptom_scale = t.kind == TreatmentKind::SymptomRelief ? 1.0 - t.magnitude : 1.0;
    r.exacerbation_wait_scale = t.kind == TreatmentKind::ExacerbationDelay ? 1.0 + t.magnitude : 1.0;
    return r;
}

struct Symptoms {
    bool dyspnea = false;
    bool cough = false;
};

Symptoms draw_symptoms(const PatientProfile& p, const PatientRates& r, const SimParams& s, double fev1, Rng& rng) {
    const double deficit = std::clamp((s.initial_fev1 - fev1) / s.initial_fev1, 0.0, 1.0);
    const double p_dysp = std::clamp((s.dyspnea_base + s.dyspnea_fev1 * deficit) * r.symptom_scale, 0.0, 1.0);
    const double p_cough = std::clamp((s.cough_base + s.cough_smoking * p.smoking) * r.symptom_scale, 0.0, 1.0);
    Symptoms out;
    out.dyspnea = numcore::draw_bernoulli(rng, p_dysp);
    out.cough = numcore::draw_bernoulli(rng, p_cough);
    return out;
}

double annual_utility(const PatientProfile& p, const PatientRates& r, const SimParams& s, double fev1,
                      const Symptoms& sym) {
    const double u = s.utility_base - s.utility_fev1 * (s.initial_fev1 - fev1) / s.initial_fev1 -
                     s.utility_dyspnea * sym.dyspnea - s.utility_cough * sym.cough -
                     s.utility_depression * p.depression + s.utility_activity * r.activity -
                     s.utility_bmi_high * (p.bmi == BmiClass::High);
    return std::clamp(u, 0.0, 1.0);
}

enum class Event { Exacerbation, Pneumonia, Death };

} // namespace

PatientProfile sample_profile(const FidelityLevel& fidelity, Rng& rng) {
    PatientProfile p;
    if (fidelity.level == Fidelity::High) {
        p.age = rounded_truncated_normal(rng, 64.0, 7.0, 40, 85);
        p.bmi = draw_bmi(rng, 0.15, 0.61);
        p.smoking = numcore::draw_bernoulli(rng, 0.39);
        p.pack_years = rounded_truncated_normal(rng, 44.0, 15.0, 10, 89);
        p.sex_female = numcore::draw_bernoulli(rng, 0.27);
        p.heart_failure = numcore::draw_bernoulli(rng, 0.05);
        p.other_cvd = numcore::draw_bernoulli(rng, 0.12);
        p.diabetes = numcore::draw_bernoulli(rng, 0.11);
        p.depression = numcore::draw_bernoulli(rng, 0.085);
        p.asthma_rhinitis = numcore::draw_bernoulli(rng, 0.047);
        p.emphysema = numcore::draw_bernoulli(rng, 0.53);
        p.concomitant_conditions = numcore::draw_bernoulli(rng, 0.56);
        p.eosinophil_high = numcore::draw_bernoulli(rng, 0.22);
        p.bronchodilator_resp = rounded_truncated_normal(rng, 23.0, 5.0, 15, 31);
    } else {
        p.age = static_cast<int>(numcore::draw_int(rng, 40, 85));
        p.bmi = draw_bmi(rng, 1.0 / 3.0, 1.0 / 3.0);
        p.smoking = numcore::draw_bernoulli(rng, 0.5);
        p.pack_years = static_cast<int>(numcore::draw_int(rng, 10, 89));
        p.sex_female = numcore::draw_bernoulli(rng, 0.5);
        p.heart_failure = numcore::draw_bernoulli(rng, 0.5);
        p.other_cvd = numcore::draw_bernoulli(rng, 0.5);
        p.diabetes = numcore::draw_bernoulli(rng, 0.5);
        p.depression = numcore::draw_bernoulli(rng, 0.5);
        p.asthma_rhinitis = numcore::draw_bernoulli(rng, 0.5);
        p.emphysema = numcore::draw_bernoulli(rng, 0.5);
        p.concomitant_conditions = numcore::draw_bernoulli(rng, 0.5);
        p.eosinophil_high = numcore::draw_bernoulli(rng, 0.5);
        p.bronchodilator_resp = static_cast<int>(numcore::draw_int(rng, 15, 31));
    }
    return p;
}

double simulate_replication(const PatientProfile& profile, const TreatmentSpec& treatment, bool annual_backfill,
                            const SimParams& params, Rng& rng) {
    if (!(params.horizon > 0.0)) {
        return 0.0;
    }
    const PatientRates rates = patient_rates(profile, treatment, params);
    const double threshold = params.death_fev1_threshold;
    double fev1 = rates.fev1_start;
    if (fev1 < threshold) {
        return 0.0;
    }
    Symptoms symptoms = draw_symptoms(profile, rates, params, fev1, rng);
    double t = 0.0;
    double qaly = 0.0;

    for (;;) {
        const double wait_exac =
            numcore::draw_exponential(rng, rates.exacerbation) * rates.exacerbation_wait_scale;
        const double wait_pneu = numcore::draw_exponential(rng, rates.pneumonia);
        const double wait_death = numcore::draw_exponential(rng, rates.death);
        Event event = Event::Exacerbation;
        double wait = wait_exac;
        if (wait_pneu < wait) {
            wait = wait_pneu;
            event = Event::Pneumonia;
        }
        if (wait_death < wait) {
            wait = wait_death;
            event = Event::Death;
        }
        const double t_event = t + wait;
        const double end = std::min(t_event, params.horizon);

        if (annual_backfill) {
            // Retrospective simulation: outcomes advance at every anniversary
            // between the two events.
            double s = t;
            while (s < end) {
                const double anniversary = std::floor(s) + 1.0;
                const double e = std::min(anniversary, end);
                qaly += annual_utility(profile, rates, params, fev1, symptoms) * (e - s);
                fev1 -= rates.decline * (e - s);
                s = e;
                if (s == anniversary && s < end) {
                    if (fev1 < threshold) {
                        return qaly;
                    }
                    symptoms = draw_symptoms(profile, rates, params, fev1, rng);
                }
            }
        } else {
            // Fill-forward: the state after the preceding event covers the whole
            // interval; skipped years are not simulated, so lung function only
            // advances by the event year's decline.
            qaly += annual_utility(profile, rates, params, fev1, symptoms) * (end - t);
            fev1 -= rates.decline * std::min(end - t, 1.0);
        }

        if (t_event >= params.horizon) {
            return qaly;
        }
        t = t_event;
        switch (event) {
        case Event::Death:
            return qaly;
        case Event::Exacerbation:
            fev1 -= params.exacerbation_fev1_drop;
            break;
        case Event::Pneumonia:
            fev1 -= params.pneumonia_fev1_drop;
            break;
        }
        if (fev1 < threshold) {
            return qaly;
        }
        symptoms = draw_symptoms(profile, rates, params, fev1, rng);
    }
}

double simulate_qaly(const PatientProfile& profile, const TreatmentSpec& treatment, const FidelityLevel& fidelity,
                     const SimParams& params, std::uint64_t stream_seed) {
    require(fidelity.replications >= 1, "simulate_qaly: replications must be >= 1");
    if (!(params.horizon > 0.0)) {
        return 0.0;
    }
    double sum = 0.0;
    for (std::size_t r = 0; r < fidelity.replications; ++r) {
        Rng rng(numcore::derive_seed({stream_seed, r}));
        sum += simulate_replication(profile, treatment, fidelity.annual_backfill, params, rng);
    }
    return sum / static_cast<double>(fidelity.replications);
}

std::uint64_t profile_stream(std::uint64_t seed, std::size_t patient) {
    return numcore::derive_seed({seed, patient, 0x50524F46ULL});
}

std::uint64_t outcome_stream(std::uint64_t seed, std::size_t patient) {
    return numcore::derive_seed({seed, patient, 0x4F555443ULL});
}

dataio::FidelityDataset generate_dataset(std::size_t n, const FidelityLevel& fidelity, const TreatmentSpec& treatment,
                                         const SimParams& params, std::uint64_t seed, std::size_t threads) {
    require(n >= 1, "generate_dataset: n must be >= 1");
    dataio::FidelityDataset ds;
    ds.fidelity = fidelity.level;
    ds.treatment = treatment.kind;
    ds.features = numcore::Tensor2D(n, dataio::kFeatureCount);
    ds.labels.assign(n, 0.0);
    numcore::parallel_for(n, threads, [&](std::size_t i) {
        Rng rng(profile_stream(seed, i));
        const PatientProfile p = sample_profile(fidelity, rng);
        const auto x = p.features();
        std::copy(x.begin(), x.end(), ds.features.row(i).begin());
        ds.labels[i] = simulate_qaly(p, treatment, fidelity, params, outcome_stream(seed, i));
    });
    return ds;
}

} // namespace cfkd::patientsim
