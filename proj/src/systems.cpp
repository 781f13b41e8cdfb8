#include "koopman/systems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <string>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

constexpr double kRowSumTol = 1e-12;
constexpr double kInvarianceTol = 1e-10;

std::vector<int> bfs_levels(const Matrix &adjacency, bool transpose) {
    const auto n = adjacency.rows();
    std::vector<int> level(static_cast<std::size_t>(n), -1);
    std::queue<Eigen::Index> frontier;
    level[0] = 0;
    frontier.push(0);
    while (!frontier.empty()) {
        const auto u = frontier.front();
        frontier.pop();
        for (Eigen::Index v = 0; v < n; ++v) {
            const double w = transpose ? adjacency(v, u) : adjacency(u, v);
            if (w > 0.0 && level[static_cast<std::size_t>(v)] < 0) {
                level[static_cast<std::size_t>(v)] = level[static_cast<std::size_t>(u)] + 1;
                frontier.push(v);
            }
        }
    }
    return level;
}

std::size_t draw_categorical(const double *cdf, std::size_t n, double u) {
    for (std::size_t j = 0; j + 1 < n; ++j)
        if (u < cdf[j]) return j;
    return n - 1;
}

std::size_t as_chain_state(double x, std::size_t n) {
    const double r = std::round(x);
    if (!std::isfinite(x) || r != x || r < 0.0 || r >= static_cast<double>(n))
        throw DomainError("chain state " + std::to_string(x) + " is not in {0.." +
                          std::to_string(n - 1) + "}");
    return static_cast<std::size_t>(r);
}

} // namespace

FiniteMarkovSystem::FiniteMarkovSystem(Matrix transition) : transition_(std::move(transition)) {
    const auto n = transition_.rows();
    if (n == 0 || transition_.cols() != n)
        throw InvalidArgument("transition matrix must be square and non-empty");
    for (Eigen::Index i = 0; i < n; ++i) {
        if ((transition_.row(i).array() < 0.0).any() || !transition_.row(i).allFinite())
            throw InvalidArgument("transition row " + std::to_string(i) + " has negative entries");
        if (std::abs(transition_.row(i).sum() - 1.0) > kRowSumTol)
            throw InvalidArgument("transition row " + std::to_string(i) + " does not sum to 1");
    }

    cumulative_.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) cumulative_(i, j) = (acc += transition_(i, j));
    }

    // Irreducible iff state 0 reaches and is reached by every state.
    const auto forward = bfs_levels(transition_, false);
    const auto backward = bfs_levels(transition_, true);
    irreducible_ = std::none_of(forward.begin(), forward.end(), [](int l) { return l < 0; }) &&
                   std::none_of(backward.begin(), backward.end(), [](int l) { return l < 0; });
    if (irreducible_) {
        // Period = gcd over edges u->v of level(u) + 1 - level(v).
        unsigned g = 0;
        for (Eigen::Index u = 0; u < n; ++u)
            for (Eigen::Index v = 0; v < n; ++v)
                if (transition_(u, v) > 0.0) {
                    const int diff = forward[static_cast<std::size_t>(u)] + 1 -
                                     forward[static_cast<std::size_t>(v)];
                    g = std::gcd(g, static_cast<unsigned>(std::abs(diff)));
                }
        period_ = g;
    }
    if (!is_ergodic()) return;

    // Solve pi^T (P - I) = 0 with one equation replaced by sum(pi) = 1.
    Matrix a = transition_.transpose() - Matrix::Identity(n, n);
    a.row(n - 1).setOnes();
    Vector rhs = Vector::Zero(n);
    rhs(n - 1) = 1.0;
    Vector pi = a.fullPivLu().solve(rhs);
    pi = pi.cwiseMax(0.0);
    pi /= pi.sum();
    if ((pi.transpose() * transition_ - pi.transpose()).cwiseAbs().maxCoeff() > kInvarianceTol)
        throw NonErgodicChain("invariant law did not converge to 1e-10");
    invariant_ = pi;
    invariant_cdf_.resize(static_cast<std::size_t>(n));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) invariant_cdf_[static_cast<std::size_t>(i)] = (acc += pi(i));
}

const Vector &FiniteMarkovSystem::invariant() const {
    if (!invariant_) {
        throw NonErgodicChain(irreducible_ ? "chain is periodic with period " + std::to_string(period_)
                                           : std::string("chain is reducible"));
    }
    return *invariant_;
}

bool FiniteMarkovSystem::is_reversible() const {
    const Vector &pi = invariant();
    const Matrix flux = pi.asDiagonal() * transition_;
    return (flux - flux.transpose()).cwiseAbs().maxCoeff() <= 1e-12;
}

std::size_t FiniteMarkovSystem::step(std::size_t state, CounterRng &rng) const {
    const auto n = n_states();
    const double u = rng.uniform();
    const auto row = static_cast<Eigen::Index>(state);
    for (std::size_t j = 0; j + 1 < n; ++j)
        if (u < cumulative_(row, static_cast<Eigen::Index>(j))) return j;
    return n - 1;
}

std::size_t FiniteMarkovSystem::sample_invariant(CounterRng &rng) const {
    invariant();
    return draw_categorical(invariant_cdf_.data(), invariant_cdf_.size(), rng.uniform());
}

FiniteMarkovSystem two_state_chain(double p, double q) {
    Matrix t(2, 2);
    t << 1.0 - p, p, q, 1.0 - q;
    return FiniteMarkovSystem(t);
}

FiniteMarkovSystem random_ergodic_chain(std::size_t n_states, std::uint64_t seed) {
    if (n_states < 1) throw InvalidArgument("chain needs at least one state");
    const auto n = static_cast<Eigen::Index>(n_states);
    CounterRng rng(seed);
    Matrix t(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        for (Eigen::Index j = 0; j < n; ++j) t(i, j) = 0.05 + 0.95 * rng.uniform();
        t.row(i) /= t.row(i).sum();
    }
    return FiniteMarkovSystem(t);
}

Vector invariant_measure(const FiniteMarkovSystem &sys) { return sys.invariant(); }

Matrix koopman_matrix_exact(const FiniteMarkovSystem &sys) { return sys.transition(); }

double QuadraticIrrational::value() const {
    if (c == 0 || d < 0) throw InvalidArgument("quadratic irrational needs c != 0 and d >= 0");
    return (static_cast<double>(a) + static_cast<double>(b) * std::sqrt(static_cast<double>(d))) /
           static_cast<double>(c);
}

CircleRotationSystem::CircleRotationSystem(QuadraticIrrational angle) : angle_(angle) {
    const double v = angle.value();
    const long root = std::lround(std::sqrt(static_cast<double>(angle.d)));
    if (angle.b == 0 || root * root == angle.d)
        throw InvalidArgument("rotation angle (a+b*sqrt(d))/c must be irrational");
    t0_ = v - std::floor(v);
}

CircleRotationSystem CircleRotationSystem::from_angle(double t0) {
    if (!std::isfinite(t0)) throw InvalidArgument("rotation angle must be finite");
    CircleRotationSystem sys;
    sys.t0_ = t0 - std::floor(t0);
    return sys;
}

StateSampler gaussian_noise(double stddev) {
    if (!(stddev >= 0.0)) throw InvalidArgument("noise standard deviation must be >= 0");
    return [stddev](CounterRng &rng, std::span<double> out) {
        for (double &v : out) v = stddev == 0.0 ? 0.0 : stddev * rng.normal();
    };
}

std::size_t SdeSystem::substeps() const {
    if (!(integrator_dt > 0.0) || !(lag > 0.0))
        throw InvalidArgument("SDE lag and integrator_dt must be positive");
    const double ratio = lag / integrator_dt;
    const double n = std::round(ratio);
    if (n < 1.0 || std::abs(n * integrator_dt - lag) > 1e-9 * lag)
        throw InvalidArgument("SDE lag must be an integer multiple of integrator_dt");
    return static_cast<std::size_t>(n);
}

std::size_t state_dim(const System &sys) {
    return std::visit(
        [](const auto &s) -> std::size_t {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FiniteMarkovSystem> ||
                          std::is_same_v<T, CircleRotationSystem>)
                return 1;
            else
                return s.state_dim;
        },
        sys);
}

void step_state(const System &sys, std::span<double> state, CounterRng &rng) {
    std::visit(
        [&](const auto &s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FiniteMarkovSystem>) {
                state[0] = static_cast<double>(s.step(as_chain_state(state[0], s.n_states()), rng));
            } else if constexpr (std::is_same_v<T, CircleRotationSystem>) {
                state[0] = s.step(state[0]);
            } else if constexpr (std::is_same_v<T, NoisyMapSystem>) {
                thread_local std::vector<double> mapped, noise;
                mapped.resize(s.state_dim);
                noise.resize(s.state_dim);
                s.map(state, mapped);
                s.noise(rng, noise);
                for (std::size_t i = 0; i < s.state_dim; ++i) state[i] = mapped[i] + noise[i];
            } else {
                const std::size_t d = s.state_dim;
                const std::size_t k = s.noise_dim;
                const std::size_t steps = s.substeps();
                const double dt = s.integrator_dt;
                const double sqrt_dt = std::sqrt(dt);
                thread_local std::vector<double> drift, dw;
                thread_local Matrix sigma;
                drift.resize(d);
                dw.resize(k);
                sigma.resize(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(k));
                for (std::size_t n = 0; n < steps; ++n) {
                    s.drift(state, drift);
                    s.diffusion(state, sigma);
                    for (double &w : dw) w = sqrt_dt * rng.normal();
                    for (std::size_t i = 0; i < d; ++i) {
                        double incr = drift[i] * dt;
                        for (std::size_t j = 0; j < k; ++j)
                            incr += sigma(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) * dw[j];
                        state[i] += incr;
                    }
                }
            }
        },
        sys);
}

const char *to_string(Regime regime) { return regime == Regime::Ergodic ? "ergodic" : "iid"; }

namespace {

std::span<double> column(Matrix &m, Eigen::Index k) {
    return {m.col(k).data(), static_cast<std::size_t>(m.rows())};
}

Vector initial_state_of(const System &sys) {
    return std::visit(
        [](const auto &s) -> Vector {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, FiniteMarkovSystem> ||
                          std::is_same_v<T, CircleRotationSystem>)
                return Vector::Zero(1);
            else {
                if (static_cast<std::size_t>(s.initial_state.size()) != s.state_dim)
                    throw DimensionMismatch("initial state has the wrong dimension");
                return s.initial_state;
            }
        },
        sys);
}

} // namespace

Matrix sample_trajectory(const System &sys, std::size_t m, std::optional<std::size_t> burn_in,
                         std::uint64_t seed) {
    if (m < 1) throw InvalidArgument("ergodic sampling needs m >= 1");
    const auto d = static_cast<Eigen::Index>(state_dim(sys));
    CounterRng rng(seed);

    Vector x = initial_state_of(sys);
    std::size_t discard = 0;
    if (const auto *chain = std::get_if<FiniteMarkovSystem>(&sys)) {
        if (!chain->is_ergodic()) chain->invariant();  // throws NonErgodicChain
        x(0) = static_cast<double>(chain->sample_invariant(rng));
        discard = burn_in.value_or(0);
    } else if (std::holds_alternative<CircleRotationSystem>(sys)) {
        x(0) = rng.uniform();
        discard = burn_in.value_or(0);
    } else {
        discard = burn_in.value_or(10 * m);
    }
    std::span<double> xs_span(x.data(), static_cast<std::size_t>(d));
    for (std::size_t i = 0; i < discard; ++i) step_state(sys, xs_span, rng);

    Matrix trajectory(d, static_cast<Eigen::Index>(m + 1));
    trajectory.col(0) = x;
    for (std::size_t k = 1; k <= m; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        trajectory.col(kk) = trajectory.col(kk - 1);
        step_state(sys, column(trajectory, kk), rng);
    }
    return trajectory;
}

SamplePairs sample_ergodic(const System &sys, std::size_t m, std::optional<std::size_t> burn_in,
                           std::uint64_t seed) {
    const Matrix trajectory = sample_trajectory(sys, m, burn_in, seed);
    SamplePairs pairs;
    pairs.xs = trajectory.leftCols(static_cast<Eigen::Index>(m));
    pairs.ys = trajectory.rightCols(static_cast<Eigen::Index>(m));
    pairs.regime = Regime::Ergodic;
    pairs.seed = seed;
    return pairs;
}

SamplePairs sample_iid(const System &sys, const StateSampler &mu0, std::size_t m,
                       std::uint64_t seed) {
    if (m < 1) throw InvalidArgument("sample_iid needs m >= 1");
    const auto d = static_cast<Eigen::Index>(state_dim(sys));
    SamplePairs pairs;
    pairs.xs.resize(d, static_cast<Eigen::Index>(m));
    pairs.ys.resize(d, static_cast<Eigen::Index>(m));
    for (std::size_t k = 0; k < m; ++k) {
        const auto kk = static_cast<Eigen::Index>(k);
        CounterRng rng(seed, k);
        mu0(rng, column(pairs.xs, kk));
        pairs.ys.col(kk) = pairs.xs.col(kk);
        step_state(sys, column(pairs.ys, kk), rng);
    }
    pairs.regime = Regime::Iid;
    pairs.seed = seed;
    return pairs;
}

StateSampler categorical_sampler(const Vector &probabilities) {
    if (probabilities.size() == 0 || (probabilities.array() < 0.0).any() ||
        std::abs(probabilities.sum() - 1.0) > 1e-12)
        throw InvalidArgument("categorical law must be a probability vector");
    std::vector<double> cdf(static_cast<std::size_t>(probabilities.size()));
    double acc = 0.0;
    for (Eigen::Index i = 0; i < probabilities.size(); ++i)
        cdf[static_cast<std::size_t>(i)] = (acc += probabilities(i));
    return [cdf = std::move(cdf)](CounterRng &rng, std::span<double> out) {
        out[0] = static_cast<double>(draw_categorical(cdf.data(), cdf.size(), rng.uniform()));
    };
}

StateSampler invariant_sampler(const System &sys) {
    if (const auto *chain = std::get_if<FiniteMarkovSystem>(&sys))
        return categorical_sampler(chain->invariant());
    if (std::holds_alternative<CircleRotationSystem>(sys))
        return [](CounterRng &rng, std::span<double> out) { out[0] = rng.uniform(); };
    throw UnsupportedSystem("no closed-form invariant law for this system");
}

StateSampler point_mass(const Vector &state) {
    return [state](CounterRng &, std::span<double> out) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = state(static_cast<Eigen::Index>(i));
    };
}

} // namespace koopman
