// Discrete spectral measures of unitary Koopman operators, arc masses and
// the thin-measure certificate near the eigenvalue 1.
#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "koopman/representation.hpp"

namespace koopman {

/// Angle in revolutions mapped to [-1/2, 1/2).
double wrap_revolutions(double t);

struct SpectralAtom {
    /// exp(2 pi i t) is the eigenvalue, t in [-1/2, 1/2)
    double t = 0.0;
    double weight = 0.0;
};

struct SpectralMeasure {
    /// Sorted by |t| ascending (ties by t).
    std::vector<SpectralAtom> atoms;
    double total_mass = 0.0;
};

/// Sorts, merges coincident angles and drops zero weights.
SpectralMeasure make_spectral_measure(std::vector<SpectralAtom> atoms);

/// Spectral measure of a mean-zero f under a unitary representation.
/// Circle representations are analytic; finite sets use a Schur form.
/// Throws NotUnitary, NotMeanZero (||(I-Q)f|| > 1e-10).
SpectralMeasure spectral_measure(const KoopmanMatrixRep &rep, const Vector &f);

/// f = sum_k c_k exp(2 pi i k t) under rotation by t0; k = 0 is rejected.
SpectralMeasure spectral_measure_exponential(
    double t0, const std::vector<std::pair<long, std::complex<double>>> &coeffs);

/// Mass of the arc S_gamma = {|t| <= gamma}.
double arc_mass(const SpectralMeasure &meas, double gamma);

struct ThinMeasureCertificate {
    double alpha = 1.0;
    double theta = 0.25;
    double kappa = 0.0;
    /// mu(S_theta) = 0
    bool exact = false;
};

/// Smallest kappa with mu(S_gamma) <= kappa mu(S_theta) gamma^alpha on (0, theta].
/// The sup is exact over atom radii; gamma_grid is an extra cross-check.
ThinMeasureCertificate certify_thin_measure(const SpectralMeasure &meas, double alpha, double theta,
                                            std::span<const double> gamma_grid = {});

struct WeightedL2Check {
    /// sum_n w_n |t_n|^{-alpha}; +inf with an atom at t = 0
    double S = 0.0;
    /// S / total_mass
    double kappa_bound = 0.0;
};
WeightedL2Check weighted_l2_check(const SpectralMeasure &meas, double alpha);

/// S / mu(S_theta): a constant that always dominates the certified kappa.
double weighted_l2_kappa(const SpectralMeasure &meas, double alpha, double theta);

/// (1/m) sum_n F_m(2 pi t_n) w_n
double fejer_spectral_variance(const SpectralMeasure &meas, std::size_t m);
/// sum_n w_n sin^2(m pi t_n) / (m^2 sin^2(pi t_n))
double geometric_spectral_variance(const SpectralMeasure &meas, std::size_t m);

} // namespace koopman
