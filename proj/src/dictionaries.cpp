#include "koopman/dictionaries.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "koopman/errors.hpp"
#include "koopman/galerkin.hpp"

namespace koopman {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr std::size_t kCircleQuadratureNodes = std::size_t{1} << 16;

void require_finite(std::span<const double> x) {
    for (double v : x)
        if (!std::isfinite(v)) throw DomainError("state has non-finite coordinates");
}

// Graded order: by total degree, then lexicographically descending exponents.
void enumerate_exponents(std::size_t dim, std::size_t degree,
                         std::vector<std::vector<unsigned>> &out) {
    std::vector<unsigned> current(dim, 0);
    for (std::size_t total = 0; total <= degree; ++total) {
        auto fill = [&](auto &&self, std::size_t pos, std::size_t remaining) -> void {
            if (pos + 1 == dim) {
                current[pos] = static_cast<unsigned>(remaining);
                out.push_back(current);
                return;
            }
            for (std::size_t e = remaining + 1; e-- > 0;) {
                current[pos] = static_cast<unsigned>(e);
                self(self, pos + 1, remaining - e);
            }
        };
        fill(fill, 0, total);
    }
}

} // namespace

const char *to_string(DictionaryKind kind) {
    switch (kind) {
    case DictionaryKind::Indicator: return "indicator";
    case DictionaryKind::Fourier: return "fourier";
    case DictionaryKind::Monomial: return "monomial";
    case DictionaryKind::RandomFourier: return "rff";
    }
    return "unknown";
}

const char *to_string(Independence value) {
    switch (value) {
    case Independence::Dependent: return "dependent";
    case Independence::Independent: return "independent";
    case Independence::StronglyIndependent: return "strongly_independent";
    }
    return "unknown";
}

Dictionary Dictionary::indicator(std::size_t n_states) {
    if (n_states == 0) throw InvalidArgument("indicator dictionary needs n_states >= 1");
    Dictionary d;
    d.spec_ = IndicatorSpec{n_states};
    d.size_ = n_states;
    return d;
}

Dictionary Dictionary::fourier(std::size_t max_freq) {
    Dictionary d;
    d.spec_ = FourierSpec{max_freq};
    d.size_ = 2 * max_freq + 1;
    return d;
}

Dictionary Dictionary::monomial(std::size_t dim, std::size_t degree) {
    if (dim == 0) throw InvalidArgument("monomial dictionary needs dim >= 1");
    Dictionary d;
    d.spec_ = MonomialSpec{dim, degree};
    enumerate_exponents(dim, degree, d.exponents_);
    d.size_ = d.exponents_.size();
    return d;
}

Dictionary Dictionary::random_fourier(std::size_t dim, std::size_t n_features, double bandwidth,
                                      std::uint64_t seed) {
    if (dim == 0 || n_features == 0) throw InvalidArgument("rff needs dim, n_features >= 1");
    if (!(bandwidth > 0.0)) throw InvalidArgument("rff bandwidth must be positive");
    Dictionary d;
    d.spec_ = RandomFourierSpec{dim, n_features, bandwidth, seed};
    d.size_ = 2 * n_features;
    d.frequencies_.resize(static_cast<Eigen::Index>(n_features), static_cast<Eigen::Index>(dim));
    CounterRng rng(seed);
    for (Eigen::Index j = 0; j < d.frequencies_.rows(); ++j)
        for (Eigen::Index i = 0; i < d.frequencies_.cols(); ++i)
            d.frequencies_(j, i) = rng.normal() / bandwidth;
    return d;
}

DictionaryKind Dictionary::kind() const { return static_cast<DictionaryKind>(spec_.index()); }

std::size_t Dictionary::state_dim() const {
    return std::visit(
        [](const auto &s) -> std::size_t {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, MonomialSpec> || std::is_same_v<T, RandomFourierSpec>)
                return s.dim;
            else
                return 1;
        },
        spec_);
}

Dictionary Dictionary::scaled(double factor) const {
    Dictionary d = *this;
    d.scale_ *= factor;
    return d;
}

void Dictionary::evaluate(std::span<const double> x, std::span<double> out) const {
    if (x.size() != state_dim()) throw DomainError("state dimension does not match dictionary");
    if (out.size() != size_) throw DimensionMismatch("output buffer has the wrong length");
    require_finite(x);
    std::visit(
        [&](const auto &s) {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IndicatorSpec>) {
                const double r = std::round(x[0]);
                if (r != x[0] || r < 0.0 || r >= static_cast<double>(s.n_states))
                    throw DomainError("indicator dictionary needs an integer state in range");
                std::fill(out.begin(), out.end(), 0.0);
                out[static_cast<std::size_t>(r)] = scale_;
            } else if constexpr (std::is_same_v<T, FourierSpec>) {
                const double amp = std::numbers::sqrt2 * scale_;
                out[0] = scale_;
                for (std::size_t k = 1; k <= s.max_freq; ++k) {
                    const double arg = 2.0 * std::numbers::pi * static_cast<double>(k) * x[0];
                    out[2 * k - 1] = amp * std::cos(arg);
                    out[2 * k] = amp * std::sin(arg);
                }
            } else if constexpr (std::is_same_v<T, MonomialSpec>) {
                for (std::size_t j = 0; j < size_; ++j) {
                    double v = scale_;
                    for (std::size_t i = 0; i < s.dim; ++i)
                        for (unsigned e = 0; e < exponents_[j][i]; ++e) v *= x[i];
                    out[j] = v;
                }
            } else {
                for (std::size_t j = 0; j < s.n_features; ++j) {
                    double arg = 0.0;
                    for (std::size_t i = 0; i < s.dim; ++i)
                        arg += frequencies_(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i)) * x[i];
                    out[2 * j] = scale_ * std::cos(arg);
                    out[2 * j + 1] = scale_ * std::sin(arg);
                }
            }
        },
        spec_);
}

Vector Dictionary::evaluate(std::span<const double> x) const {
    Vector out(static_cast<Eigen::Index>(size_));
    evaluate(x, {out.data(), size_});
    return out;
}

double Dictionary::phi(std::span<const double> x) const { return evaluate(x).squaredNorm(); }

std::optional<double> Dictionary::phi_sup() const {
    const double s2 = scale_ * scale_;
    return std::visit(
        [&](const auto &s) -> std::optional<double> {
            using T = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<T, IndicatorSpec>) return s2;
            else if constexpr (std::is_same_v<T, FourierSpec>)
                return s2 * static_cast<double>(2 * s.max_freq + 1);
            else if constexpr (std::is_same_v<T, RandomFourierSpec>)
                return s2 * static_cast<double>(s.n_features);
            else return std::nullopt;
        },
        spec_);
}

Matrix evaluate_batch(const Dictionary &dict, const Matrix &states) {
    const auto n = static_cast<Eigen::Index>(dict.size());
    const auto d = static_cast<std::size_t>(states.rows());
    Matrix out(n, states.cols());
    for (Eigen::Index k = 0; k < states.cols(); ++k)
        dict.evaluate({states.col(k).data(), d}, {out.col(k).data(), dict.size()});
    return out;
}

Independence check_mu_linear_independence(const Dictionary &dict, const System &sys) {
    if (const auto *chain = std::get_if<FiniteMarkovSystem>(&sys)) {
        const Vector &pi = chain->invariant();
        const auto n = static_cast<Eigen::Index>(chain->n_states());
        Matrix states(1, n);
        for (Eigen::Index i = 0; i < n; ++i) states(0, i) = static_cast<double>(i);
        const Matrix psi = evaluate_batch(dict, states);
        const Matrix c = psi * pi.asDiagonal() * psi.transpose();
        if (condition_number(c) > kConditionLimit) return Independence::Dependent;
        // Atoms: a single Psi(x) with pi(x) > 0 must span R^N, i.e. N == 1 and
        // Psi(x) != 0; otherwise some lambda != 0 vanishes on that atom.
        for (Eigen::Index i = 0; i < n; ++i) {
            if (pi(i) <= 0.0) continue;
            if (dict.size() > 1 || psi.col(i).cwiseAbs().maxCoeff() == 0.0)
                return Independence::Independent;
        }
        return Independence::StronglyIndependent;
    }
    if (std::holds_alternative<CircleRotationSystem>(sys)) {
        if (dict.state_dim() != 1 || dict.kind() == DictionaryKind::Indicator)
            throw DomainError("dictionary is not defined on the circle");
        Matrix c;
        if (dict.kind() == DictionaryKind::Fourier) {
            c = Matrix::Identity(static_cast<Eigen::Index>(dict.size()),
                                 static_cast<Eigen::Index>(dict.size())) *
                (dict.scale() * dict.scale());
        } else {
            const auto nodes = static_cast<Eigen::Index>(kCircleQuadratureNodes);
            Matrix grid(1, nodes);
            for (Eigen::Index k = 0; k < nodes; ++k)
                grid(0, k) = static_cast<double>(k) / static_cast<double>(nodes);
            const Matrix psi = evaluate_batch(dict, grid);
            c = psi * psi.transpose() / static_cast<double>(nodes);
        }
        if (condition_number(c) > kConditionLimit) return Independence::Dependent;
        // Every dictionary kind on the circle is real-analytic, so a nonzero
        // combination has finitely many zeros (arc-length null set).
        return Independence::StronglyIndependent;
    }
    throw UnsupportedSystem("reference measure is not computable for this system");
}

bool satisfies_ergodic_invertibility_condition(const Dictionary &dict,
                                               const FiniteMarkovSystem &sys) {
    const auto n = static_cast<Eigen::Index>(sys.n_states());
    const auto big_n = static_cast<Eigen::Index>(dict.size());
    if (big_n > 2) return false;  // two vectors always share an (N-1)-dim subspace
    const Matrix &p = sys.transition();
    for (Eigen::Index x = 0; x < n; ++x) {
        const double xs[1] = {static_cast<double>(x)};
        const Vector px = dict.evaluate(xs);
        for (Eigen::Index y = 0; y < n; ++y) {
            if (p(x, y) <= 0.0) continue;
            const double ys[1] = {static_cast<double>(y)};
            Matrix pair(big_n, 2);
            pair.col(0) = px;
            pair.col(1) = dict.evaluate(ys);
            Eigen::FullPivLU<Matrix> lu(pair);
            lu.setThreshold(1e-12);
            if (lu.rank() < big_n) return false;
        }
    }
    return true;
}

} // namespace koopman
