// Seeded, parallel EDMD trial engine shared by the variance oracle, the
// convergence studies and the bound-validity checks.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "koopman/dictionaries.hpp"
#include "koopman/edmd.hpp"
#include "koopman/galerkin.hpp"
#include "koopman/systems.hpp"

namespace koopman {

/// Everything a single trial needs. Pointers are non-owning and must outlive
/// the call.
struct TrialSetup {
    const System *system = nullptr;
    const Dictionary *dict = nullptr;
    /// Exact (or reference-model) Gram pair and K_V the errors refer to.
    const KoopmanGalerkinMatrix *reference = nullptr;
    Regime regime = Regime::Ergodic;
    /// Initial law for i.i.d. sampling; defaults to invariant_sampler(system).
    StateSampler mu0;
    std::optional<std::size_t> burn_in;
    EdmdOptions options;
};

struct TrialOutcome {
    double err_C = 0.0;
    double err_Cplus = 0.0;
    /// NaN when C^ is numerically singular.
    double err_K = 0.0;
    bool singular = false;
};

/// Seed of trial `trial` at sample size m: independent stream per (seed, m, trial).
std::uint64_t trial_seed(std::uint64_t seed, std::size_t m, std::size_t trial);

TrialOutcome run_trial(const TrialSetup &setup, std::size_t m, std::uint64_t seed);

/// Outcomes in trial order; identical for any thread count.
std::vector<TrialOutcome> run_trials(const TrialSetup &setup, std::size_t m, std::size_t n_trials,
                                     std::uint64_t seed, unsigned threads = 1);

/// Mean and standard error of a sample; stderr is +inf for fewer than two values.
struct MeanEstimate {
    double mean = 0.0;
    double std_error = 0.0;
};
MeanEstimate mean_estimate(const std::vector<double> &values);

} // namespace koopman
