// Empirical EDMD estimators C^, C+^ and K^_m = C^^{-1} C+^.
#pragma once

#include <cstddef>

#include "koopman/dictionaries.hpp"
#include "koopman/galerkin.hpp"
#include "koopman/systems.hpp"

namespace koopman {

struct EdmdEstimate {
    GramPair gram;
    Matrix Khat;
    std::size_t m = 0;
    Regime regime = Regime::Ergodic;
};

struct EdmdOptions {
    /// Tikhonov shift added to C^ before solving; exploratory only.
    double ridge = 0.0;
};

/// C^ = Psi_X Psi_X^T / m, C+^ = Psi_X Psi_Y^T / m.
GramPair empirical_gram(const Dictionary &dict, const SamplePairs &pairs);

/// Smallest singular value of C^ must exceed 1e-12 times the largest,
/// otherwise SingularEmpiricalMass.
EdmdEstimate edmd_estimate(const Dictionary &dict, const SamplePairs &pairs,
                           const EdmdOptions &options = {});

/// Same solve starting from an already assembled empirical Gram pair.
EdmdEstimate edmd_from_gram(const GramPair &gram, Regime regime, const EdmdOptions &options = {});

/// Whether C^ passes the numerical invertibility threshold.
bool empirically_invertible(const Matrix &c_hat);

struct EstimationError {
    double err_K = 0.0;
    double err_C = 0.0;
    double err_Cplus = 0.0;
};

/// Frobenius distances to the exact reference; DimensionMismatch on size mismatch.
EstimationError estimation_error(const EdmdEstimate &est, const KoopmanGalerkinMatrix &ref);

} // namespace koopman
