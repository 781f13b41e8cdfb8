#include "koopman/variance.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "koopman/errors.hpp"
#include "koopman/montecarlo.hpp"
#include "koopman/spectral.hpp"

namespace koopman {

namespace {

using Complex = std::complex<double>;

double pm_coefficient(std::size_t m, std::size_t k) {
    return 2.0 * (1.0 - static_cast<double>(k) / static_cast<double>(m));
}

Matrix pm_horner(const KoopmanMatrixRep &rep, std::size_t m) {
    const auto n = static_cast<Eigen::Index>(rep.dim());
    if (m < 2) return Matrix::Zero(n, n);
    const Matrix &k0 = rep.K0();
    Matrix acc = pm_coefficient(m, m - 1) * Matrix::Identity(n, n);
    for (std::size_t k = m - 1; k-- > 1;) {
        acc = acc * k0;
        acc.diagonal().array() += pm_coefficient(m, k);
    }
    return acc * rep.Q();
}

Matrix matrix_power(Matrix base, std::size_t e) {
    Matrix result = Matrix::Identity(base.rows(), base.cols());
    while (e > 0) {
        if (e & 1U) result = result * base;
        e >>= 1U;
        if (e > 0) base = base * base;
    }
    return result;
}

// On range(Q): p_m(K0) = 2 (I-K0)^{-1} (I - (1/m)(I-K0)^{-1}(I - K0^m)).
// A = I - K0 + (I - Q) agrees with I - K0 on range(Q) and is invertible there.
Matrix pm_closed_form(const KoopmanMatrixRep &rep, std::size_t m) {
    const auto n = static_cast<Eigen::Index>(rep.dim());
    if (m < 2) return Matrix::Zero(n, n);
    if (!(rep.spectral_gap() > 1e-10)) throw NoSpectralGap("closed form needs 1 outside the spectrum of K0");
    const Matrix identity = Matrix::Identity(n, n);
    const Matrix a = identity - rep.K0() + (identity - rep.Q());
    const Eigen::PartialPivLU<Matrix> lu(a);
    const Matrix inner = rep.Q() - matrix_power(rep.K0(), m) * rep.Q();
    const Matrix sum = lu.solve(inner);
    return 2.0 * lu.solve(rep.Q() - sum / static_cast<double>(m));
}

Matrix pm_spectral(const KoopmanMatrixRep &rep, std::size_t m) {
    const auto n = static_cast<Eigen::Index>(rep.dim());
    if (m < 2) return Matrix::Zero(n, n);
    if (!rep.is_normal()) throw NumericalError("spectral evaluation of p_m needs a normal K0");
    const Matrix b = rep.orthonormal(rep.K0());
    Eigen::ComplexSchur<Matrix> schur(b);
    const Eigen::MatrixXcd &z = schur.matrixU();
    Eigen::VectorXcd values(n);
    for (Eigen::Index i = 0; i < n; ++i) values(i) = pm_polynomial(m, schur.matrixT()(i, i));
    const Matrix p_orth = (z * values.asDiagonal() * z.adjoint()).real();
    const Vector root = rep.weights().cwiseSqrt();
    return root.cwiseInverse().asDiagonal() * p_orth * root.asDiagonal() * rep.Q();
}

double clamp_rounding(double value, double scale) {
    if (value < 0.0 && value > -1e-12 * std::max(1.0, scale)) return 0.0;
    return value;
}

VarianceReport make_report(std::size_t m, double sigma2_plus, double sigma2_zero,
                           const VarianceFamily &fam) {
    VarianceReport r;
    r.m = m;
    r.sigma2_plus = sigma2_plus;
    r.sigma2_zero = sigma2_zero;
    r.E_plus = fam.E_plus;
    r.E_zero = fam.E_zero;
    r.var_Cplus = sigma2_plus / static_cast<double>(m);
    r.var_C = sigma2_zero / static_cast<double>(m);
    return r;
}

void require_m(std::size_t m) {
    if (m < 1) throw InvalidArgument("m must be at least 1");
}

} // namespace

Complex pm_polynomial(std::size_t m, Complex z) {
    require_m(m);
    if (m == 1) return 0.0;
    const double md = static_cast<double>(m);
    if (m > 64 && std::abs(1.0 - z) > 1e-3) {
        // (2/(1-z)) (1 - (1/m) (1 - z^m)/(1 - z))
        const Complex one_minus = 1.0 - z;
        const Complex geometric = (1.0 - std::pow(z, static_cast<double>(m))) / one_minus;
        return 2.0 / one_minus * (1.0 - geometric / md);
    }
    Complex acc = pm_coefficient(m, m - 1);
    for (std::size_t k = m - 1; k-- > 1;) acc = acc * z + pm_coefficient(m, k);
    return acc;
}

Matrix pm_apply(const KoopmanMatrixRep &rep, std::size_t m, PmMethod method) {
    require_m(m);
    switch (method) {
    case PmMethod::Horner: return pm_horner(rep, m);
    case PmMethod::ClosedForm: return pm_closed_form(rep, m);
    case PmMethod::Spectral: return pm_spectral(rep, m);
    case PmMethod::Auto: break;
    }
    if (m <= 64) return pm_horner(rep, m);
    if (rep.spectral_gap() > 1e-6) return pm_closed_form(rep, m);
    if (rep.is_normal()) return pm_spectral(rep, m);
    return pm_horner(rep, m);
}

VarianceFamily variance_family(const KoopmanMatrixRep &rep, const Dictionary &dict) {
    const Matrix psi = rep.dictionary_coefficients(dict);
    const Matrix kpsi = rep.K() * psi;
    const Matrix kstar_psi = rep.adjoint() * psi;
    const auto n = psi.cols();
    const auto dim = psi.rows();

    VarianceFamily fam;
    fam.plus.resize(dim, n * n);
    fam.plus_dual.resize(dim, n * n);
    fam.zero.resize(dim, n * n);
    fam.phi = Vector::Zero(dim);
    fam.C.resize(n, n);
    fam.Cplus.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        fam.phi += rep.product(psi.col(i), psi.col(i));
        for (Eigen::Index j = 0; j < n; ++j) {
            const Eigen::Index col = i * n + j;
            fam.plus.col(col) = rep.Q() * rep.product(psi.col(i), kpsi.col(j));
            fam.plus_dual.col(col) = rep.Q() * rep.product(psi.col(j), kstar_psi.col(i));
            fam.zero.col(col) = rep.Q() * rep.product(psi.col(i), psi.col(j));
            fam.C(i, j) = rep.inner(psi.col(i), psi.col(j));
            fam.Cplus(i, j) = rep.inner(psi.col(i), kpsi.col(j));
        }
    }
    const double phi2 = rep.inner(fam.phi, fam.phi);
    fam.E_plus = clamp_rounding(rep.inner(rep.K() * fam.phi, fam.phi) - fam.Cplus.squaredNorm(), phi2);
    fam.E_zero = clamp_rounding(phi2 - fam.C.squaredNorm(), phi2);
    return fam;
}

VarianceReport exact_variance(const KoopmanMatrixRep &rep, const Dictionary &dict, std::size_t m,
                              PmMethod method) {
    require_m(m);
    const VarianceFamily fam = variance_family(rep, dict);
    const Matrix p = pm_apply(rep, m, method);
    const Matrix p_plus = p * fam.plus;
    const Matrix kp_zero = rep.K0() * (p * fam.zero);
    double cross_plus = 0.0, cross_zero = 0.0;
    for (Eigen::Index c = 0; c < fam.plus.cols(); ++c) {
        cross_plus += rep.inner(p_plus.col(c), fam.plus_dual.col(c));
        cross_zero += rep.inner(kp_zero.col(c), fam.zero.col(c));
    }
    return make_report(m, fam.E_plus + cross_plus, fam.E_zero + cross_zero, fam);
}

double fejer_kernel(std::size_t m, double t) {
    require_m(m);
    // same kernel as (1/m)|sum_{k<m} e^{ikt}|^2; the cosine form cancels
    // badly once F_m is O(1/m)
    std::complex<double> dirichlet = 0.0;
    for (std::size_t k = 0; k < m; ++k) dirichlet += std::polar(1.0, static_cast<double>(k) * t);
    return std::norm(dirichlet) / static_cast<double>(m);
}

double fejer_kernel_closed_form(std::size_t m, double t) {
    require_m(m);
    const double md = static_cast<double>(m);
    const double half = std::sin(t / 2.0);
    if (std::abs(half) < 1e-12) return md;
    // (1 - cos x) = 2 sin^2(x/2) keeps the ratio accurate near t = 0
    const double top = std::sin(md * t / 2.0);
    return top * top / (md * half * half);
}

double ergodic_average_norm2(const KoopmanMatrixRep &rep, const Matrix &fs, std::size_t m) {
    require_m(m);
    Matrix current = fs;
    Matrix sum = fs;
    for (std::size_t k = 1; k < m; ++k) {
        current = rep.K0() * current;
        sum += current;
    }
    sum /= static_cast<double>(m);
    double total = 0.0;
    for (Eigen::Index c = 0; c < sum.cols(); ++c) total += rep.inner(sum.col(c), sum.col(c));
    return total;
}

VarianceReport fejer_variance(const KoopmanMatrixRep &rep, const Dictionary &dict, std::size_t m) {
    require_m(m);
    if (!rep.is_unitary()) throw NotUnitary("Fejér representation needs a unitary Koopman operator");
    const VarianceFamily fam = variance_family(rep, dict);
    const double md = static_cast<double>(m);
    return make_report(m, md * ergodic_average_norm2(rep, fam.plus, m),
                       md * ergodic_average_norm2(rep, fam.zero, m), fam);
}

FejerForms fejer_variance_forms(const KoopmanMatrixRep &rep, const Dictionary &dict,
                                std::size_t m) {
    FejerForms forms;
    forms.ergodic_average = fejer_variance(rep, dict, m);
    const VarianceFamily fam = variance_family(rep, dict);
    const double md = static_cast<double>(m);
    double spec_plus = 0.0, spec_zero = 0.0, geo_plus = 0.0, geo_zero = 0.0;
    for (Eigen::Index c = 0; c < fam.plus.cols(); ++c) {
        const SpectralMeasure mp = spectral_measure(rep, fam.plus.col(c));
        const SpectralMeasure mz = spectral_measure(rep, fam.zero.col(c));
        spec_plus += fejer_spectral_variance(mp, m);
        spec_zero += fejer_spectral_variance(mz, m);
        geo_plus += geometric_spectral_variance(mp, m);
        geo_zero += geometric_spectral_variance(mz, m);
    }
    forms.spectral = make_report(m, md * spec_plus, md * spec_zero, fam);
    forms.geometric = make_report(m, md * geo_plus, md * geo_zero, fam);
    return forms;
}

OracleResult montecarlo_variance_oracle(const System &sys, const Dictionary &dict, std::size_t m,
                                        std::size_t n_trials, std::uint64_t seed,
                                        const OracleOptions &options) {
    require_m(m);
    if (n_trials < 1) throw InvalidArgument("oracle needs at least one trial");
    KoopmanGalerkinMatrix reference;
    reference.source = options.reference ? *options.reference : exact_gram(sys, dict);
    // K_V is not needed for Gram errors; skip the solve if C is singular.
    if (empirically_invertible(reference.source.C))
        reference.KV = galerkin_matrix(reference.source).KV;
    else
        reference.KV = Matrix::Zero(reference.source.C.rows(), reference.source.C.cols());

    TrialSetup setup;
    setup.system = &sys;
    setup.dict = &dict;
    setup.reference = &reference;
    setup.regime = options.regime;
    setup.mu0 = options.mu0;
    setup.burn_in = options.burn_in;
    const auto outcomes = run_trials(setup, m, n_trials, seed, options.threads);

    std::vector<double> sq_c(n_trials), sq_cp(n_trials);
    for (std::size_t i = 0; i < n_trials; ++i) {
        sq_c[i] = outcomes[i].err_C * outcomes[i].err_C;
        sq_cp[i] = outcomes[i].err_Cplus * outcomes[i].err_Cplus;
    }
    const MeanEstimate c = mean_estimate(sq_c);
    const MeanEstimate cp = mean_estimate(sq_cp);
    return {m, n_trials, c.mean, cp.mean, c.std_error, cp.std_error};
}

} // namespace koopman
