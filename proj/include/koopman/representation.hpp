// Finite matrix representation of the Koopman operator on a function space
// that is closed under the products the variance formulas need.
#pragma once

#include <cstddef>
#include <optional>

#include "koopman/dictionaries.hpp"
#include "koopman/systems.hpp"

namespace koopman {

/**
 * Functions are coefficient vectors in a basis that is orthogonal for the
 * reference measure; `weights` are the squared basis norms, so
 * <f, g> = sum_i w_i f_i g_i.
 *
 * FiniteSet: the basis is the point masses of a finite state space (every
 * function is representable, products are pointwise).
 * CircleFourier: the real orthonormal Fourier basis
 * {1, sqrt2 cos(2 pi k t), sqrt2 sin(2 pi k t)}, k <= max_freq; products
 * follow the product-to-sum rules and must stay within max_freq.
 */
class KoopmanMatrixRep {
public:
    enum class Kind { FiniteSet, CircleFourier };

    /// K acting on functions of a finite set, inner product weighted by `weights`.
    static KoopmanMatrixRep on_finite_set(Matrix K, Vector weights);
    /// Rotation Koopman operator on trigonometric polynomials of degree <= max_freq.
    static KoopmanMatrixRep circle(const CircleRotationSystem &sys, std::size_t max_freq);

    Kind kind() const { return kind_; }
    std::size_t dim() const { return static_cast<std::size_t>(K_.rows()); }

    const Matrix &K() const { return K_; }
    const Vector &weights() const { return weights_; }
    /// Orthogonal projector onto mean-zero functions.
    const Matrix &Q() const { return Q_; }
    /// Q K Q; equals K on the mean-zero subspace.
    const Matrix &K0() const { return K0_; }
    /// Adjoint in the weighted inner product, W^{-1} K^T W.
    Matrix adjoint() const;
    /// Coefficients of the constant function.
    const Vector &unit() const { return unit_; }

    double inner(const Vector &f, const Vector &g) const;
    double norm(const Vector &f) const;
    Vector product(const Vector &f, const Vector &g) const;

    /// dim x N matrix whose columns are the dictionary functions.
    Matrix dictionary_coefficients(const Dictionary &dict) const;

    /// W^{1/2} A W^{-1/2}: the matrix of A in an orthonormal basis.
    Matrix orthonormal(const Matrix &a) const;
    /// Operator norm of A in the weighted inner product.
    double operator_norm(const Matrix &a) const;

    /// || B^T B - I ||_F <= tol for B = orthonormal(K).
    bool is_unitary(double tol = 1e-8) const;
    /// || B B^T - B^T B ||_F <= tol for B = orthonormal(K0).
    bool is_normal(double tol = 1e-10) const;

    /// Eigenvalues of K0 restricted to the mean-zero subspace.
    Eigen::VectorXcd mean_zero_spectrum() const;
    /// dist(1, spectrum of K0 on the mean-zero subspace).
    double spectral_gap() const;

    std::optional<double> rotation_angle() const { return t0_; }
    std::size_t max_freq() const { return max_freq_; }

private:
    KoopmanMatrixRep() = default;
    void finalize();

    Kind kind_ = Kind::FiniteSet;
    Matrix K_;
    Vector weights_;
    Matrix Q_;
    Matrix K0_;
    Vector unit_;
    std::optional<double> t0_;
    std::size_t max_freq_ = 0;
};

/// Finite chain: K = P on all functions, weights = invariant law.
/// Circle rotation with a Fourier dictionary of degree F: trigonometric
/// polynomials of degree 2F. Throws UnsupportedSystem otherwise.
KoopmanMatrixRep build_rep(const System &sys, const Dictionary &dict);

/// Finite chain with an arbitrary reference law (i.i.d. sampling from nu).
KoopmanMatrixRep build_rep(const FiniteMarkovSystem &sys, const Vector &weights);

} // namespace koopman
