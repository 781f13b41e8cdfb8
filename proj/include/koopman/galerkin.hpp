// Exact mass/stiffness matrices C, C+ and the Galerkin matrix K_V = C^{-1} C+.
#pragma once

#include <cstddef>
#include <cstdint>

#include "koopman/dictionaries.hpp"
#include "koopman/systems.hpp"

namespace koopman {

struct Provenance {
    enum class Kind { Exact, Empirical };
    Kind kind = Kind::Exact;
    std::size_t m = 0;
    std::uint64_t seed = 0;

    static Provenance exact() { return {}; }
    static Provenance empirical(std::size_t m, std::uint64_t seed) {
        return {Kind::Empirical, m, seed};
    }
};

/// C = (<psi_i, psi_j>), C+ = (<psi_i, K psi_j>).
struct GramPair {
    Matrix C;
    Matrix Cplus;
    Provenance provenance;

    std::size_t size() const { return static_cast<std::size_t>(C.rows()); }
};

struct KoopmanGalerkinMatrix {
    Matrix KV;
    GramPair source;
};

/// Exact finite sums over the invariant law. Throws SingularMass if cond(C) > 1e12.
GramPair exact_gram(const FiniteMarkovSystem &sys, const Dictionary &dict);

/// Same, with respect to an arbitrary reference law nu on the states.
GramPair exact_gram(const FiniteMarkovSystem &sys, const Dictionary &dict, const Vector &weights);

/// Analytic Fourier Gram pair of a rotation: C = I, C+ block rotations.
GramPair exact_gram_circle(const CircleRotationSystem &sys, const Dictionary &fourier);

/// Composite trapezoid rule on `nodes` equispaced points (default 2^16);
/// exact for trigonometric polynomials of degree < nodes.
GramPair quadrature_gram_circle(const CircleRotationSystem &sys, const Dictionary &dict,
                                std::size_t nodes = std::size_t{1} << 16);

/// Dispatch on the system: chains and Fourier rotations are exact, other
/// circle dictionaries use quadrature. Throws UnsupportedSystem otherwise.
GramPair exact_gram(const System &sys, const Dictionary &dict);

/// Solves C X = C+ with a Cholesky-type factorization; throws SingularMass.
KoopmanGalerkinMatrix galerkin_matrix(const GramPair &gram);

/// 2-norm condition number of a symmetric matrix via its singular values.
double condition_number(const Matrix &c);

/// ||C^{-1}||_F via the explicit inverse (small N).
double inverse_frobenius_norm(const Matrix &c);

} // namespace koopman
