// Exact variances of the empirical Gram matrices under ergodic sampling,
// the Fejér-kernel form for unitary systems, and a Monte Carlo oracle.
#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <optional>

#include "koopman/dictionaries.hpp"
#include "koopman/galerkin.hpp"
#include "koopman/representation.hpp"
#include "koopman/systems.hpp"

namespace koopman {

/// p_m(z) = 2 sum_{k=1}^{m-1} (1 - k/m) z^{k-1}
std::complex<double> pm_polynomial(std::size_t m, std::complex<double> z);

enum class PmMethod { Auto, Horner, ClosedForm, Spectral };

/// p_m(K0) Q on the representation. ClosedForm needs a spectral gap,
/// Spectral needs K0 normal (both throw NumericalError otherwise).
Matrix pm_apply(const KoopmanMatrixRep &rep, std::size_t m, PmMethod method = PmMethod::Auto);

struct VarianceReport {
    std::size_t m = 0;
    double sigma2_plus = 0.0;
    double sigma2_zero = 0.0;
    double E_plus = 0.0;
    double E_zero = 0.0;
    /// E||C+ - C+^||_F^2 = sigma2_plus / m
    double var_Cplus = 0.0;
    /// E||C - C^||_F^2 = sigma2_zero / m
    double var_C = 0.0;
};

/**
 * The functions entering the variance formulas, stored as coefficient columns
 * (index i*N + j):
 *   plus:      Q g_ij,   g_ij  = psi_i * K psi_j
 *   plus_dual: Q g*_ji,  g*_ji = psi_j * K* psi_i
 *   zero:      Q psi_ij, psi_ij = psi_i * psi_j
 */
struct VarianceFamily {
    Matrix plus;
    Matrix plus_dual;
    Matrix zero;
    Vector phi;
    Matrix C;
    Matrix Cplus;
    double E_plus = 0.0;
    double E_zero = 0.0;
};
VarianceFamily variance_family(const KoopmanMatrixRep &rep, const Dictionary &dict);

VarianceReport exact_variance(const KoopmanMatrixRep &rep, const Dictionary &dict, std::size_t m,
                              PmMethod method = PmMethod::Auto);

/// F_m(t) = 1 + 2 sum_{k=1}^{m-1} (1 - k/m) cos(k t), t in radians, summed
/// as (1/m)|sum_{k<m} e^{ikt}|^2.
double fejer_kernel(std::size_t m, double t);
/// (1/m)(1 - cos mt)/(1 - cos t), with the limit m at t = 0 mod 2 pi.
double fejer_kernel_closed_form(std::size_t m, double t);

/// ||(1/m) sum_{k<m} K0^k f||^2 for every column f of fs, summed.
double ergodic_average_norm2(const KoopmanMatrixRep &rep, const Matrix &fs, std::size_t m);

/// Variance of a unitary system as a sum of squared ergodic averages.
/// Throws NotUnitary.
VarianceReport fejer_variance(const KoopmanMatrixRep &rep, const Dictionary &dict, std::size_t m);

/// The same variance in three independent forms.
struct FejerForms {
    VarianceReport ergodic_average;
    /// (1/m) sum_n F_m(2 pi t_n) w_n over the spectral measures.
    VarianceReport spectral;
    /// sum_n w_n |1 - c_n^m|^2 / (m^2 |1 - c_n|^2), c_n = exp(2 pi i t_n).
    VarianceReport geometric;
};
FejerForms fejer_variance_forms(const KoopmanMatrixRep &rep, const Dictionary &dict,
                                std::size_t m);

struct OracleOptions {
    Regime regime = Regime::Ergodic;
    /// i.i.d. initial law; defaults to the invariant law.
    StateSampler mu0;
    /// Truth the errors are measured against; defaults to exact_gram(sys, dict).
    std::optional<GramPair> reference;
    std::optional<std::size_t> burn_in;
    unsigned threads = 1;
};

struct OracleResult {
    std::size_t m = 0;
    std::size_t n_trials = 0;
    double var_C_hat = 0.0;
    double var_Cplus_hat = 0.0;
    /// +inf for a single trial.
    double stderr_C = 0.0;
    double stderr_Cplus = 0.0;
};

/// Sample means of ||C - C^||_F^2 and ||C+ - C+^||_F^2 over independent runs.
OracleResult montecarlo_variance_oracle(const System &sys, const Dictionary &dict, std::size_t m,
                                        std::size_t n_trials, std::uint64_t seed,
                                        const OracleOptions &options = {});

} // namespace koopman
