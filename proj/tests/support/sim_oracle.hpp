#pragma once

// Independent distribution oracles for the patient simulator: expected
// category probabilities from the published marginals, Pearson chi-square and
// a paired one-sided t-test, all via Boost.Math.

#include "cfkd/patientsim/simulator.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace cfkd::testing {

using Histogram = std::map<int, double>;

inline std::vector<patientsim::PatientProfile> draw_cohort(const patientsim::FidelityLevel& f, std::size_t n,
                                                           std::uint64_t seed) {
    auto rng = numcore::make_rng({seed});
    std::vector<patientsim::PatientProfile> out;
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(patientsim::sample_profile(f, rng));
    }
    return out;
}

/// Upper-tail p-value of Pearson's statistic for counts against probabilities.
inline double chi_square_p(const Histogram& counts, const Histogram& probs, std::size_t n) {
    double chi2 = 0.0;
    for (const auto& [k, p] : probs) {
        const double e = p * static_cast<double>(n);
        const auto it = counts.find(k);
        const double o = it == counts.end() ? 0.0 : it->second;
        chi2 += (o - e) * (o - e) / e;
    }
    const boost::math::chi_squared dist(static_cast<double>(probs.size() - 1));
    return boost::math::cdf(boost::math::complement(dist, chi2));
}

/// Rounded value of a Normal(mean, sd) truncated to [lo, hi].
inline Histogram rounded_truncated_probs(double mean, double sd, int lo, int hi) {
    const boost::math::normal n(mean, sd);
    const double mass = boost::math::cdf(n, hi) - boost::math::cdf(n, lo);
    Histogram p;
    for (int k = lo; k <= hi; ++k) {
        const double a = std::max<double>(k - 0.5, lo);
        const double b = std::min<double>(k + 0.5, hi);
        p[k] = (boost::math::cdf(n, b) - boost::math::cdf(n, a)) / mass;
    }
    return p;
}

inline Histogram uniform_probs(int lo, int hi) {
    Histogram p;
    for (int k = lo; k <= hi; ++k) {
        p[k] = 1.0 / (hi - lo + 1);
    }
    return p;
}

/// Pools sparse bins left to right so every expected count is at least 5.
inline void pool_sparse(Histogram& counts, Histogram& probs, std::size_t n) {
    Histogram pc;
    Histogram pp;
    double acc_p = 0.0;
    double acc_c = 0.0;
    for (const auto& [k, p] : probs) {
        acc_p += p;
        const auto it = counts.find(k);
        acc_c += it == counts.end() ? 0.0 : it->second;
        if (acc_p * static_cast<double>(n) >= 5.0) {
            pp[k] = acc_p;
            pc[k] = acc_c;
            acc_p = 0.0;
            acc_c = 0.0;
        }
    }
    if (acc_p > 0.0) {
        pp.rbegin()->second += acc_p;
        pc.rbegin()->second += acc_c;
    }
    counts = pc;
    probs = pp;
}

struct MarginalTest {
    std::string feature;
    double p_value = 0.0;
};

/// Goodness of fit of every profile feature against the published marginals.
inline std::vector<MarginalTest> marginal_tests(const std::vector<patientsim::PatientProfile>& cohort, bool high) {
    using patientsim::PatientProfile;
    std::vector<MarginalTest> out;
    const std::size_t n = cohort.size();
    auto categorical = [&](const std::string& name, const std::function<int(const PatientProfile&)>& get,
                           Histogram probs) {
        Histogram counts;
        for (const auto& p : cohort) {
            counts[get(p)] += 1.0;
        }
        pool_sparse(counts, probs, n);
        out.push_back({name, chi_square_p(counts, probs, n)});
    };
    struct Binary {
        const char* name;
        bool PatientProfile::*field;
        double high;
    };
    const Binary binaries[] = {
        {"smoking", &PatientProfile::smoking, 0.39},
        {"sex_female", &PatientProfile::sex_female, 0.27},
        {"heart_failure", &PatientProfile::heart_failure, 0.05},
        {"other_cvd", &PatientProfile::other_cvd, 0.12},
        {"diabetes", &PatientProfile::diabetes, 0.11},
        {"depression", &PatientProfile::depression, 0.085},
        {"asthma_rhinitis", &PatientProfile::asthma_rhinitis, 0.047},
        {"emphysema", &PatientProfile::emphysema, 0.53},
        {"concomitant", &PatientProfile::concomitant_conditions, 0.56},
        {"eosinophil_high", &PatientProfile::eosinophil_high, 0.22},
    };
    for (const auto& b : binaries) {
        const double p = high ? b.high : 0.5;
        categorical(b.name, [&](const PatientProfile& x) { return (x.*(b.field)) ? 1 : 0; }, {{0, 1.0 - p}, {1, p}});
    }
    categorical("bmi", [](const PatientProfile& x) { return static_cast<int>(x.bmi); },
                high ? Histogram{{0, 0.15}, {1, 0.61}, {2, 0.24}} : Histogram{{0, 1.0 / 3}, {1, 1.0 / 3}, {2, 1.0 / 3}});
    categorical("age", [](const PatientProfile& x) { return x.age; },
                high ? rounded_truncated_probs(64, 7, 40, 85) : uniform_probs(40, 85));
    categorical("pack_years", [](const PatientProfile& x) { return x.pack_years; },
                high ? rounded_truncated_probs(44, 15, 10, 89) : uniform_probs(10, 89));
    categorical("bdr", [](const PatientProfile& x) { return x.bronchodilator_resp; },
                high ? rounded_truncated_probs(23, 5, 15, 31) : uniform_probs(15, 31));
    return out;
}

struct PairedTest {
    double mean_difference = 0.0;
    double p_value = 1.0;
};

/// One-sided paired t-test of H1: mean(first - second) > 0.
inline PairedTest paired_greater(const std::vector<double>& first, const std::vector<double>& second) {
    const std::size_t n = first.size();
    double m = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        m += first[i] - second[i];
    }
    m /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = first[i] - second[i] - m;
        ss += d * d;
    }
    const double se = std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
    const boost::math::students_t dist(static_cast<double>(n - 1));
    return {m, boost::math::cdf(boost::math::complement(dist, m / se))};
}

/// Paired cohort QALYs under treatment 1 and under no treatment, high fidelity.
inline PairedTest treatment_one_effect(std::size_t patients, std::uint64_t seed) {
    const patientsim::SimParams params;
    const auto cohort = draw_cohort(patientsim::FidelityLevel::high(), patients, seed);
    std::vector<double> treated;
    std::vector<double> control;
    for (std::size_t i = 0; i < cohort.size(); ++i) {
        treated.push_back(patientsim::simulate_qaly(
            cohort[i], patientsim::TreatmentSpec::standard(dataio::TreatmentKind::DeclineReduction),
            patientsim::FidelityLevel::high(), params, 1000 + i));
        control.push_back(patientsim::simulate_qaly(cohort[i],
                                                    patientsim::TreatmentSpec::standard(dataio::TreatmentKind::None),
                                                    patientsim::FidelityLevel::high(), params, 1000 + i));
    }
    return paired_greater(treated, control);
}

} // namespace cfkd::testing
