#include "koopman/representation.hpp"

#include <cmath>
#include <complex>
#include <numbers>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

using Complex = std::complex<double>;

// Orthonormal real layout [c0, a1, b1, ..., aK, bK] <-> exponential
// coefficients h(-K..K) of the same function.
std::vector<Complex> to_exponential(const Vector &f, std::size_t max_freq) {
    std::vector<Complex> h(2 * max_freq + 1);
    const auto center = static_cast<std::ptrdiff_t>(max_freq);
    h[static_cast<std::size_t>(center)] = f(0);
    for (std::size_t k = 1; k <= max_freq; ++k) {
        const double a = f(static_cast<Eigen::Index>(2 * k - 1));
        const double b = f(static_cast<Eigen::Index>(2 * k));
        h[max_freq + k] = Complex(a, -b) / std::numbers::sqrt2;
        h[max_freq - k] = Complex(a, b) / std::numbers::sqrt2;
    }
    return h;
}

} // namespace

KoopmanMatrixRep KoopmanMatrixRep::on_finite_set(Matrix K, Vector weights) {
    if (K.rows() != K.cols() || K.rows() != weights.size())
        throw DimensionMismatch("K must be square and match the weight vector");
    if ((weights.array() <= 0.0).any())
        throw InvalidArgument("reference law must charge every state");
    KoopmanMatrixRep rep;
    rep.kind_ = Kind::FiniteSet;
    rep.K_ = std::move(K);
    rep.weights_ = weights / weights.sum();
    rep.unit_ = Vector::Ones(rep.K_.rows());
    rep.finalize();
    return rep;
}

KoopmanMatrixRep KoopmanMatrixRep::circle(const CircleRotationSystem &sys, std::size_t max_freq) {
    const auto n = static_cast<Eigen::Index>(2 * max_freq + 1);
    KoopmanMatrixRep rep;
    rep.kind_ = Kind::CircleFourier;
    rep.max_freq_ = max_freq;
    rep.t0_ = sys.t0();
    rep.K_ = Matrix::Zero(n, n);
    rep.K_(0, 0) = 1.0;
    for (std::size_t k = 1; k <= max_freq; ++k) {
        const double arg = 2.0 * std::numbers::pi * static_cast<double>(k) * sys.t0();
        const double c = std::cos(arg), s = std::sin(arg);
        const auto i = static_cast<Eigen::Index>(2 * k - 1);
        rep.K_(i, i) = c;
        rep.K_(i, i + 1) = s;
        rep.K_(i + 1, i) = -s;
        rep.K_(i + 1, i + 1) = c;
    }
    rep.weights_ = Vector::Ones(n);
    rep.unit_ = Vector::Zero(n);
    rep.unit_(0) = 1.0;
    rep.finalize();
    return rep;
}

void KoopmanMatrixRep::finalize() {
    const auto n = K_.rows();
    // Q f = f - <f, 1> 1
    Q_ = Matrix::Identity(n, n) - unit_ * (weights_.cwiseProduct(unit_)).transpose();
    K0_ = Q_ * K_ * Q_;
}

Matrix KoopmanMatrixRep::adjoint() const {
    return weights_.cwiseInverse().asDiagonal() * K_.transpose() * weights_.asDiagonal();
}

double KoopmanMatrixRep::inner(const Vector &f, const Vector &g) const {
    return (f.array() * weights_.array() * g.array()).sum();
}

double KoopmanMatrixRep::norm(const Vector &f) const { return std::sqrt(inner(f, f)); }

Vector KoopmanMatrixRep::product(const Vector &f, const Vector &g) const {
    if (f.size() != K_.rows() || g.size() != K_.rows())
        throw DimensionMismatch("function coefficients have the wrong length");
    if (kind_ == Kind::FiniteSet) return f.cwiseProduct(g);

    const auto fh = to_exponential(f, max_freq_);
    const auto gh = to_exponential(g, max_freq_);
    const auto kmax = static_cast<std::ptrdiff_t>(max_freq_);
    std::vector<Complex> h(4 * max_freq_ + 1);
    for (std::ptrdiff_t i = -kmax; i <= kmax; ++i)
        for (std::ptrdiff_t j = -kmax; j <= kmax; ++j)
            h[static_cast<std::size_t>(i + j + 2 * kmax)] +=
                fh[static_cast<std::size_t>(i + kmax)] * gh[static_cast<std::size_t>(j + kmax)];

    double truncated = 0.0;
    for (std::ptrdiff_t k = kmax + 1; k <= 2 * kmax; ++k)
        truncated += std::norm(h[static_cast<std::size_t>(k + 2 * kmax)]);
    if (truncated > 1e-24 * std::max(1.0, norm(f) * norm(f) * norm(g) * norm(g)))
        throw DomainError("product exceeds the representation's maximal frequency");

    Vector out(K_.rows());
    out(0) = h[static_cast<std::size_t>(2 * kmax)].real();
    for (std::size_t k = 1; k <= max_freq_; ++k) {
        const Complex hk = h[static_cast<std::size_t>(2 * kmax) + k];
        out(static_cast<Eigen::Index>(2 * k - 1)) = std::numbers::sqrt2 * hk.real();
        out(static_cast<Eigen::Index>(2 * k)) = -std::numbers::sqrt2 * hk.imag();
    }
    return out;
}

Matrix KoopmanMatrixRep::dictionary_coefficients(const Dictionary &dict) const {
    const auto n = K_.rows();
    const auto big_n = static_cast<Eigen::Index>(dict.size());
    if (kind_ == Kind::FiniteSet) {
        Matrix states(1, n);
        for (Eigen::Index i = 0; i < n; ++i) states(0, i) = static_cast<double>(i);
        return evaluate_batch(dict, states).transpose();
    }
    const auto *spec = std::get_if<FourierSpec>(&dict.spec());
    if (!spec) throw UnsupportedSystem("circle representation needs a Fourier dictionary");
    if (spec->max_freq > max_freq_)
        throw DomainError("dictionary frequency exceeds the representation");
    Matrix coeffs = Matrix::Zero(n, big_n);
    for (Eigen::Index j = 0; j < big_n; ++j) coeffs(j, j) = dict.scale();
    return coeffs;
}

Matrix KoopmanMatrixRep::orthonormal(const Matrix &a) const {
    const Vector root = weights_.cwiseSqrt();
    return root.asDiagonal() * a * root.cwiseInverse().asDiagonal();
}

double KoopmanMatrixRep::operator_norm(const Matrix &a) const {
    Eigen::JacobiSVD<Matrix> svd(orthonormal(a));
    return svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
}

bool KoopmanMatrixRep::is_unitary(double tol) const {
    const Matrix b = orthonormal(K_);
    return (b.transpose() * b - Matrix::Identity(b.rows(), b.cols())).norm() <= tol;
}

bool KoopmanMatrixRep::is_normal(double tol) const {
    const Matrix b = orthonormal(K0_);
    return (b * b.transpose() - b.transpose() * b).norm() <= tol;
}

Eigen::VectorXcd KoopmanMatrixRep::mean_zero_spectrum() const {
    // Restrict to range(Q) with an orthonormal basis of the complement of 1.
    const Matrix b = orthonormal(K0_);
    const Matrix q = orthonormal(Q_);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(q);
    std::vector<Eigen::Index> keep;
    for (Eigen::Index i = 0; i < eig.eigenvalues().size(); ++i)
        if (eig.eigenvalues()(i) > 0.5) keep.push_back(i);
    Matrix basis(b.rows(), static_cast<Eigen::Index>(keep.size()));
    for (std::size_t i = 0; i < keep.size(); ++i)
        basis.col(static_cast<Eigen::Index>(i)) = eig.eigenvectors().col(keep[i]);
    if (basis.cols() == 0) return Eigen::VectorXcd(0);
    const Matrix restricted = basis.transpose() * b * basis;
    return Eigen::EigenSolver<Matrix>(restricted, false).eigenvalues();
}

double KoopmanMatrixRep::spectral_gap() const {
    const auto spectrum = mean_zero_spectrum();
    double gap = std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < spectrum.size(); ++i)
        gap = std::min(gap, std::abs(Complex(1.0, 0.0) - spectrum(i)));
    return gap;
}

KoopmanMatrixRep build_rep(const FiniteMarkovSystem &sys, const Vector &weights) {
    return KoopmanMatrixRep::on_finite_set(koopman_matrix_exact(sys), weights);
}

KoopmanMatrixRep build_rep(const System &sys, const Dictionary &dict) {
    if (const auto *chain = std::get_if<FiniteMarkovSystem>(&sys))
        return build_rep(*chain, chain->invariant());
    if (const auto *circle = std::get_if<CircleRotationSystem>(&sys)) {
        const auto *spec = std::get_if<FourierSpec>(&dict.spec());
        if (!spec) throw UnsupportedSystem("circle representation needs a Fourier dictionary");
        return KoopmanMatrixRep::circle(*circle, 2 * spec->max_freq);
    }
    throw UnsupportedSystem("no exact representation for noisy-map or SDE systems");
}

} // namespace koopman
