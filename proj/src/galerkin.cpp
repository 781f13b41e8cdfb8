#include "koopman/galerkin.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

constexpr double kConditionLimit = 1e12;
constexpr double kResidualTol = 1e-9;

Matrix chain_states(std::size_t n) {
    Matrix states(1, static_cast<Eigen::Index>(n));
    for (Eigen::Index i = 0; i < states.cols(); ++i) states(0, i) = static_cast<double>(i);
    return states;
}

void require_invertible(const Matrix &c, const char *what) {
    const double cond = condition_number(c);
    if (!(cond <= kConditionLimit))
        throw SingularMass(std::string(what) + " has condition number " + std::to_string(cond));
}

} // namespace

double condition_number(const Matrix &c) {
    if (c.size() == 0) return 0.0;
    Eigen::JacobiSVD<Matrix> svd(c);
    const auto &s = svd.singularValues();
    const double smallest = s(s.size() - 1);
    return smallest > 0.0 ? s(0) / smallest : std::numeric_limits<double>::infinity();
}

double inverse_frobenius_norm(const Matrix &c) {
    require_invertible(c, "mass matrix");
    return c.inverse().norm();
}

GramPair exact_gram(const FiniteMarkovSystem &sys, const Dictionary &dict, const Vector &weights) {
    if (static_cast<std::size_t>(weights.size()) != sys.n_states())
        throw DimensionMismatch("reference law length differs from the number of states");
    const Matrix psi = evaluate_batch(dict, chain_states(sys.n_states()));
    GramPair gram;
    gram.C = psi * weights.asDiagonal() * psi.transpose();
    gram.Cplus = psi * weights.asDiagonal() * sys.transition() * psi.transpose();
    gram.provenance = Provenance::exact();
    require_invertible(gram.C, "exact mass matrix");
    return gram;
}

GramPair exact_gram(const FiniteMarkovSystem &sys, const Dictionary &dict) {
    return exact_gram(sys, dict, sys.invariant());
}

GramPair exact_gram_circle(const CircleRotationSystem &sys, const Dictionary &fourier) {
    const auto *spec = std::get_if<FourierSpec>(&fourier.spec());
    if (!spec) throw InvalidArgument("exact circle Gram pair needs a Fourier dictionary");
    const auto n = static_cast<Eigen::Index>(fourier.size());
    const double s2 = fourier.scale() * fourier.scale();
    GramPair gram;
    gram.C = Matrix::Identity(n, n) * s2;
    gram.Cplus = Matrix::Zero(n, n);
    gram.Cplus(0, 0) = s2;
    for (std::size_t k = 1; k <= spec->max_freq; ++k) {
        const double arg = 2.0 * std::numbers::pi * static_cast<double>(k) * sys.t0();
        const double c = std::cos(arg) * s2, s = std::sin(arg) * s2;
        const auto i = static_cast<Eigen::Index>(2 * k - 1);
        gram.Cplus(i, i) = c;
        gram.Cplus(i, i + 1) = s;
        gram.Cplus(i + 1, i) = -s;
        gram.Cplus(i + 1, i + 1) = c;
    }
    gram.provenance = Provenance::exact();
    return gram;
}

GramPair quadrature_gram_circle(const CircleRotationSystem &sys, const Dictionary &dict,
                                std::size_t nodes) {
    if (nodes == 0) throw InvalidArgument("quadrature needs at least one node");
    const auto count = static_cast<Eigen::Index>(nodes);
    Matrix xs(1, count), ys(1, count);
    for (Eigen::Index k = 0; k < count; ++k) {
        xs(0, k) = static_cast<double>(k) / static_cast<double>(nodes);
        ys(0, k) = sys.step(xs(0, k));
    }
    const Matrix px = evaluate_batch(dict, xs);
    const Matrix py = evaluate_batch(dict, ys);
    GramPair gram;
    gram.C = px * px.transpose() / static_cast<double>(nodes);
    gram.Cplus = px * py.transpose() / static_cast<double>(nodes);
    gram.provenance = Provenance::exact();
    require_invertible(gram.C, "quadrature mass matrix");
    return gram;
}

GramPair exact_gram(const System &sys, const Dictionary &dict) {
    if (const auto *chain = std::get_if<FiniteMarkovSystem>(&sys)) return exact_gram(*chain, dict);
    if (const auto *circle = std::get_if<CircleRotationSystem>(&sys)) {
        if (dict.kind() == DictionaryKind::Fourier) return exact_gram_circle(*circle, dict);
        return quadrature_gram_circle(*circle, dict);
    }
    throw UnsupportedSystem("exact Gram matrices need a finite chain or a circle rotation");
}

KoopmanGalerkinMatrix galerkin_matrix(const GramPair &gram) {
    if (gram.C.rows() != gram.C.cols() || gram.C.rows() != gram.Cplus.rows() ||
        gram.Cplus.rows() != gram.Cplus.cols())
        throw DimensionMismatch("C and C+ must be square with equal sizes");
    require_invertible(gram.C, "mass matrix");
    KoopmanGalerkinMatrix out;
    out.KV = gram.C.ldlt().solve(gram.Cplus);
    const double residual = (gram.C * out.KV - gram.Cplus).norm();
    if (residual > kResidualTol * std::max(gram.Cplus.norm(), 1e-300)) {
        // LDLT can lose accuracy on indefinite round-off; retry with QR.
        out.KV = gram.C.colPivHouseholderQr().solve(gram.Cplus);
    }
    out.source = gram;
    return out;
}

} // namespace koopman
