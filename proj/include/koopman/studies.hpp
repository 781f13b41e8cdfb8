// Monte Carlo studies: convergence rates, variance checks and bound
// validity grids, with deterministic CSV output.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "koopman/bounds.hpp"
#include "koopman/config.hpp"
#include "koopman/galerkin.hpp"
#include "koopman/representation.hpp"

namespace koopman {

struct StudyConfig {
    Json system;
    Json dictionary;
    Regime regime = Regime::Ergodic;
    std::vector<std::size_t> m_grid;
    std::size_t n_trials = 50;
    std::uint64_t seed = 0;
    std::vector<double> error_quantiles{0.9};
    std::optional<std::size_t> burn_in;
    /// i.i.d. reference law on chain states; the invariant law by default.
    std::optional<std::vector<double>> iid_weights;
    /// Reference-model mode: truth = estimate from one run of this length.
    std::optional<std::size_t> reference_m;
    /// Error levels for bound grids.
    std::vector<double> epsilon_grid{0.5, 1.0};
    /// Thin-measure parameters for the superlinear bounds.
    std::optional<double> alpha;
    std::optional<double> theta;
    double ridge = 0.0;
    unsigned threads = 1;
};

/// Validates: m_grid nonempty and strictly increasing, n_trials >= 30,
/// quantiles in (0, 1), epsilons positive.
StudyConfig study_config_from_json(const Json &j);
Json to_json(const StudyConfig &cfg);

/// System, dictionary and the truth errors are measured against.
struct StudyProblem {
    System system;
    Dictionary dict;
    KoopmanGalerkinMatrix reference;
    /// Exact representation w.r.t. the sampling law, when one exists.
    std::optional<KoopmanMatrixRep> rep;
    StateSampler mu0;
    double L = 1.0;
    bool reference_model = false;
};
StudyProblem make_problem(const StudyConfig &cfg);

struct ConvergenceRow {
    std::size_t m = 0;
    std::size_t n_trials = 0;
    std::size_t n_singular = 0;
    double rmse_C = 0.0;
    double rmse_Cplus = 0.0;
    /// over trials with an invertible C^
    double rmse_K = 0.0;
    std::vector<double> quantiles_C;
    std::vector<double> quantiles_Cplus;
    std::vector<double> quantiles_K;
    /// sqrt(E||C - C^||^2) from the exact variance formulas; NaN without a representation
    double theory_rmse_C = 0.0;
    double theory_rmse_Cplus = 0.0;
};

struct ConvergenceTable {
    std::vector<double> quantiles;
    std::vector<ConvergenceRow> rows;
    bool reference_model = false;
    std::uint64_t config_hash = 0;
};

struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_stderr = 0.0;
    std::size_t n_points = 0;
};

struct ConvergenceResult {
    ConvergenceTable table;
    RateFit fit_C;
    RateFit fit_Cplus;
    RateFit fit_K;
};

ConvergenceResult run_convergence_study(const StudyConfig &cfg);

enum class Metric { C, Cplus, K };

/// OLS of log(value) on log(m); InsufficientPoints below 4 positive points.
RateFit fit_rate(std::span<const double> m, std::span<const double> values);
RateFit fit_rate(const ConvergenceTable &table, Metric metric);

/// Linear interpolation between order statistics; NaN for empty input.
double quantile(std::vector<double> values, double q);

struct VarianceCheckRow {
    std::size_t m = 0;
    double var_C_exact = 0.0;
    double var_C_mc = 0.0;
    double stderr_C = 0.0;
    double var_Cplus_exact = 0.0;
    double var_Cplus_mc = 0.0;
    double stderr_Cplus = 0.0;
    bool within_3sigma = false;
};

/// Exact variances (ergodic: p_m formula; i.i.d.: E/m) against the oracle.
/// Throws UnsupportedSystem without an exact representation.
std::vector<VarianceCheckRow> run_variance_check(const StudyConfig &cfg);

/// |exact - mc| <= 3 stderr, with a 1e-12 relative floor for zero variance.
bool within_three_sigma(double exact, double mc, double stderr_value);

struct BoundGridRow {
    BoundBranch branch = BoundBranch::ErgodicLinear;
    std::size_t m = 0;
    double epsilon = 0.0;
    double p_bound = 0.0;
    /// fraction of trials with ||K^ - K_V||_F > eps or singular C^
    double p_empirical = 0.0;
    double stderr_empirical = 0.0;
    std::size_t n_trials = 0;
    std::size_t n_singular = 0;
};

struct BoundGrid {
    BoundInputs inputs;
    std::vector<BoundBranch> branches;
    std::vector<BoundGridRow> rows;
    std::uint64_t config_hash = 0;
};

/// Branches for the regime: ergodic linear (spectral gap), superlinear or
/// kappa = 0 (alpha, theta given, unitary); i.i.d. Markov and Hoeffding.
BoundGrid run_bound_grid(const StudyConfig &cfg);

/// Whether empirical <= bound + 3 Bernoulli stderr wherever bound <= 0.5.
bool bound_grid_valid(const BoundGrid &grid);

std::string to_csv(const ConvergenceTable &table);
std::string to_csv(const std::vector<VarianceCheckRow> &rows, std::uint64_t hash);
std::string to_csv(const BoundGrid &grid);

Json to_json(const ConvergenceResult &result);
Json to_json(const RateFit &fit);
Json to_json(const std::vector<VarianceCheckRow> &rows);
Json to_json(const BoundGrid &grid);

} // namespace koopman
