// Markov processes, deterministic maps and SDE discretizations, together with
// the ergodic and i.i.d. samplers that produce EDMD training pairs.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "koopman/rng.hpp"

namespace koopman {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Row-stochastic transition matrix on {0, ..., n-1} with its invariant law.
class FiniteMarkovSystem {
public:
    /// Throws InvalidArgument unless every row is a probability vector (1e-12).
    explicit FiniteMarkovSystem(Matrix transition);

    std::size_t n_states() const { return static_cast<std::size_t>(transition_.rows()); }
    const Matrix &transition() const { return transition_; }

    bool is_irreducible() const { return irreducible_; }
    /// gcd of cycle lengths; 0 for reducible chains.
    unsigned period() const { return period_; }
    bool is_ergodic() const { return irreducible_ && period_ == 1; }

    /// Unique invariant law; throws NonErgodicChain for non-ergodic chains.
    const Vector &invariant() const;

    /// Whether P is reversible w.r.t. its invariant law (1e-12).
    bool is_reversible() const;

    std::size_t step(std::size_t state, CounterRng &rng) const;
    std::size_t sample_invariant(CounterRng &rng) const;

private:
    Matrix transition_;
    Matrix cumulative_;
    std::optional<Vector> invariant_;
    std::vector<double> invariant_cdf_;
    bool irreducible_ = false;
    unsigned period_ = 0;
};

/// [[1-p, p], [q, 1-q]]
FiniteMarkovSystem two_state_chain(double p, double q);
/// Rows with i.i.d. uniform(0.05, 1) entries, normalized; strictly positive,
/// hence ergodic.
FiniteMarkovSystem random_ergodic_chain(std::size_t n_states, std::uint64_t seed);

/// Invariant probability vector; throws NonErgodicChain if not ergodic.
Vector invariant_measure(const FiniteMarkovSystem &sys);

/// Matrix of K acting on functions: (K psi)(i) = sum_j P[i][j] psi(j).
Matrix koopman_matrix_exact(const FiniteMarkovSystem &sys);

/// (a + b*sqrt(d)) / c, kept symbolically so configs round-trip exactly.
struct QuadraticIrrational {
    long a = 0;
    long b = 1;
    long c = 1;
    long d = 2;

    double value() const;
    /// (sqrt(5) - 1) / 2
    static QuadraticIrrational golden() { return {-1, 1, 2, 5}; }
};

/// Rotation t -> (t + t0) mod 1 on the circle parametrized by t in [0, 1).
class CircleRotationSystem {
public:
    explicit CircleRotationSystem(QuadraticIrrational angle);

    /// Arbitrary angle in [0, 1); used for rational test rotations.
    static CircleRotationSystem from_angle(double t0);

    double t0() const { return t0_; }
    const std::optional<QuadraticIrrational> &symbolic_angle() const { return angle_; }

    double step(double t) const {
        const double next = t + t0_;
        return next >= 1.0 ? next - 1.0 : next;
    }

private:
    CircleRotationSystem() = default;
    std::optional<QuadraticIrrational> angle_;
    double t0_ = 0.0;
};

/// In-place map evaluation: out = T(x).
using StateMap = std::function<void(std::span<const double> x, std::span<double> out)>;
/// Writes one draw from a measure into `out`.
using StateSampler = std::function<void(CounterRng &rng, std::span<double> out)>;

/// x_{n+1} = T(x_n) + eps_n with i.i.d. noise.
struct NoisyMapSystem {
    StateMap map;
    StateSampler noise;
    std::size_t state_dim = 1;
    Vector initial_state;
};

/// Isotropic Gaussian noise with the given standard deviation.
StateSampler gaussian_noise(double stddev);

/// dY = f(Y) dt + sigma(Y) dW, sampled every `lag` by Euler-Maruyama.
struct SdeSystem {
    StateMap drift;
    /// Writes the state_dim x noise_dim diffusion matrix at x.
    std::function<void(std::span<const double> x, Matrix &out)> diffusion;
    std::size_t state_dim = 1;
    std::size_t noise_dim = 1;
    double integrator_dt = 1e-3;
    double lag = 0.1;
    Vector initial_state;

    /// Euler-Maruyama substeps per Koopman lag; throws InvalidArgument
    /// unless lag is a positive integer multiple of integrator_dt.
    std::size_t substeps() const;
};

using System = std::variant<FiniteMarkovSystem, CircleRotationSystem, NoisyMapSystem, SdeSystem>;

std::size_t state_dim(const System &sys);

/// Advances `state` by one Koopman lag in place.
void step_state(const System &sys, std::span<double> state, CounterRng &rng);

enum class Regime { Ergodic, Iid };

const char *to_string(Regime regime);

/// m training pairs stored column-wise (state_dim x m).
struct SamplePairs {
    Matrix xs;
    Matrix ys;
    Regime regime = Regime::Ergodic;
    std::uint64_t seed = 0;

    std::size_t size() const { return static_cast<std::size_t>(xs.cols()); }
};

/**
 * Single trajectory x_0, ..., x_m with ys[k] = xs[k+1].
 *
 * Finite chains draw x_0 from the exact invariant law and the circle
 * rotation from arc length. Other systems start at their initial state and
 * discard `burn_in` steps (default 10 m).
 */
SamplePairs sample_ergodic(const System &sys, std::size_t m,
                           std::optional<std::size_t> burn_in, std::uint64_t seed);

/// The underlying trajectory x_0, ..., x_m (state_dim x (m+1)) of sample_ergodic.
Matrix sample_trajectory(const System &sys, std::size_t m, std::optional<std::size_t> burn_in,
                         std::uint64_t seed);
/// Independent pairs x_k ~ mu0, y_k ~ rho(x_k, .); pair k uses stream k.
SamplePairs sample_iid(const System &sys, const StateSampler &mu0, std::size_t m,
                       std::uint64_t seed);

/// Categorical law on chain states.
StateSampler categorical_sampler(const Vector &probabilities);
/// Invariant law of an ergodic system with a closed form (chain, circle).
StateSampler invariant_sampler(const System &sys);
StateSampler point_mass(const Vector &state);

} // namespace koopman
