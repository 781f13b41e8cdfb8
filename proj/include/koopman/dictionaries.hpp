// Observable dictionaries D = {psi_1, ..., psi_N} and linear-independence
// diagnostics with respect to a system's reference measure.
#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <variant>

#include "koopman/systems.hpp"

namespace koopman {

enum class DictionaryKind { Indicator, Fourier, Monomial, RandomFourier };

const char *to_string(DictionaryKind kind);

/// Indicators of chain states: Psi(i) = e_i.
struct IndicatorSpec {
    std::size_t n_states = 1;
};

/// {1, sqrt2 cos(2 pi k t), sqrt2 sin(2 pi k t)}, k = 1..max_freq, on t in [0,1).
struct FourierSpec {
    std::size_t max_freq = 0;
};

/// All monomials of total degree <= degree in `dim` variables, graded order.
struct MonomialSpec {
    std::size_t dim = 1;
    std::size_t degree = 1;
};

/// cos(w_j . x), sin(w_j . x) for n_features Gaussian frequencies w_j ~ N(0, I/bandwidth^2).
struct RandomFourierSpec {
    std::size_t dim = 1;
    std::size_t n_features = 1;
    double bandwidth = 1.0;
    std::uint64_t seed = 0;
};

class Dictionary {
public:
    static Dictionary indicator(std::size_t n_states);
    static Dictionary fourier(std::size_t max_freq);
    static Dictionary monomial(std::size_t dim, std::size_t degree);
    static Dictionary random_fourier(std::size_t dim, std::size_t n_features, double bandwidth,
                                     std::uint64_t seed);

    DictionaryKind kind() const;
    std::size_t size() const { return size_; }
    std::size_t state_dim() const;
    double scale() const { return scale_; }

    /// Same observables multiplied by `factor` (psi_j -> factor * psi_j).
    Dictionary scaled(double factor) const;

    /// Writes Psi(x) into out (length size()). Throws DomainError for states
    /// outside the space (NaN, non-integer chain states, wrong dimension).
    void evaluate(std::span<const double> x, std::span<double> out) const;
    Vector evaluate(std::span<const double> x) const;

    /// phi(x) = sum_j psi_j(x)^2
    double phi(std::span<const double> x) const;
    /// Finite sup of phi when known in closed form.
    std::optional<double> phi_sup() const;

    /// RFF frequencies (n_features x dim); empty for other kinds.
    const Matrix &frequencies() const { return frequencies_; }

    using Spec = std::variant<IndicatorSpec, FourierSpec, MonomialSpec, RandomFourierSpec>;
    const Spec &spec() const { return spec_; }

private:
    Dictionary() = default;
    Spec spec_;
    std::size_t size_ = 0;
    double scale_ = 1.0;
    Matrix frequencies_;
    std::vector<std::vector<unsigned>> exponents_;
};

/// N x m matrix whose column k is Psi(states.col(k)).
Matrix evaluate_batch(const Dictionary &dict, const Matrix &states);

enum class Independence { Dependent, Independent, StronglyIndependent };

const char *to_string(Independence value);

/**
 * mu-linear independence w.r.t. the system's reference measure.
 *
 * Finite chains use the exact invariant law; the circle uses arc length
 * (analytic for Fourier, trapezoid quadrature otherwise). Dependent iff the
 * mass matrix has condition number > 1e12.
 */
Independence check_mu_linear_independence(const Dictionary &dict, const System &sys);

/**
 * For finite chains: whether every transition x -> y with P(x,y) > 0 has
 * rank[Psi(x), Psi(y)] = N, which is the enumerated form of the
 * hyperplane condition guaranteeing a.s. invertibility of the empirical
 * mass matrix under ergodic sampling with m >= N + 1.
 */
bool satisfies_ergodic_invertibility_condition(const Dictionary &dict,
                                               const FiniteMarkovSystem &sys);

} // namespace koopman
