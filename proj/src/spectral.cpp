#include "koopman/spectral.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "koopman/errors.hpp"
#include "koopman/variance.hpp"

namespace koopman {

namespace {

constexpr double kMergeTol = 1e-12;

void require_mean_zero(const KoopmanMatrixRep &rep, const Vector &f) {
    if (f.size() != static_cast<Eigen::Index>(rep.dim()))
        throw DimensionMismatch("coefficient vector does not match the representation");
    const Vector mean_part = f - rep.Q() * f;
    if (rep.norm(mean_part) > 1e-10 * std::max(1.0, rep.norm(f)))
        throw NotMeanZero("spectral measure requested for a function with nonzero mean");
}

// k t0 mod 1 without losing the fractional part for large k
double multiple_angle(long k, double t0) {
    return wrap_revolutions(std::fmod(static_cast<double>(k) * t0, 1.0));
}

} // namespace

double wrap_revolutions(double t) {
    double r = t - std::floor(t + 0.5);
    if (r >= 0.5) r -= 1.0;
    return r;
}

SpectralMeasure make_spectral_measure(std::vector<SpectralAtom> atoms) {
    for (const auto &a : atoms)
        if (!(a.weight >= 0.0) || !std::isfinite(a.t))
            throw InvalidArgument("spectral atoms need finite angles and nonnegative weights");
    std::sort(atoms.begin(), atoms.end(), [](const SpectralAtom &x, const SpectralAtom &y) {
        return x.t < y.t;
    });
    std::vector<SpectralAtom> merged;
    for (const auto &a : atoms) {
        if (!merged.empty() && std::abs(merged.back().t - a.t) <= kMergeTol)
            merged.back().weight += a.weight;
        else
            merged.push_back(a);
    }
    SpectralMeasure meas;
    for (const auto &a : merged) {
        if (a.weight > 0.0) meas.atoms.push_back(a);
        meas.total_mass += a.weight;
    }
    std::stable_sort(meas.atoms.begin(), meas.atoms.end(),
                     [](const SpectralAtom &x, const SpectralAtom &y) {
                         return std::abs(x.t) < std::abs(y.t);
                     });
    return meas;
}

SpectralMeasure spectral_measure(const KoopmanMatrixRep &rep, const Vector &f) {
    if (!rep.is_unitary()) throw NotUnitary("spectral measures need a unitary Koopman operator");
    require_mean_zero(rep, f);
    std::vector<SpectralAtom> atoms;

    if (rep.kind() == KoopmanMatrixRep::Kind::CircleFourier) {
        // a sqrt2 cos + b sqrt2 sin = ((a - ib) e_k + (a + ib) e_{-k}) / sqrt2
        const double t0 = *rep.rotation_angle();
        for (std::size_t k = 1; k <= rep.max_freq(); ++k) {
            const double a = f(static_cast<Eigen::Index>(2 * k - 1));
            const double b = f(static_cast<Eigen::Index>(2 * k));
            const double w = 0.5 * (a * a + b * b);
            if (w == 0.0) continue;
            const auto kk = static_cast<long>(k);
            atoms.push_back({multiple_angle(kk, t0), w});
            atoms.push_back({multiple_angle(-kk, t0), w});
        }
        return make_spectral_measure(std::move(atoms));
    }

    const Matrix b = rep.orthonormal(rep.K());
    Eigen::ComplexSchur<Matrix> schur(b);
    const Eigen::VectorXcd coeffs =
        schur.matrixU().adjoint() * rep.weights().cwiseSqrt().cwiseProduct(f).cast<std::complex<double>>();
    const double total = rep.inner(f, f);
    for (Eigen::Index i = 0; i < coeffs.size(); ++i) {
        const double w = std::norm(coeffs(i));
        // drop rounding noise, in particular at the eigenvalue 1
        if (w <= 1e-20 * std::max(1.0, total)) continue;
        const double t = std::arg(schur.matrixT()(i, i)) / (2.0 * std::numbers::pi);
        atoms.push_back({wrap_revolutions(t), w});
    }
    return make_spectral_measure(std::move(atoms));
}

SpectralMeasure spectral_measure_exponential(
    double t0, const std::vector<std::pair<long, std::complex<double>>> &coeffs) {
    std::vector<SpectralAtom> atoms;
    for (const auto &[k, c] : coeffs) {
        if (k == 0) throw NotMeanZero("constant mode has no place in a mean-zero spectral measure");
        atoms.push_back({multiple_angle(k, t0), std::norm(c)});
    }
    return make_spectral_measure(std::move(atoms));
}

double arc_mass(const SpectralMeasure &meas, double gamma) {
    if (!(gamma > 0.0 && gamma <= 0.5)) throw DomainError("arc half-width must lie in (0, 1/2]");
    double mass = 0.0;
    for (const auto &a : meas.atoms)
        if (std::abs(a.t) <= gamma) mass += a.weight;
    return mass;
}

ThinMeasureCertificate certify_thin_measure(const SpectralMeasure &meas, double alpha, double theta,
                                            std::span<const double> gamma_grid) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0, 2)");
    if (!(theta > 0.0 && theta < 0.5)) throw DomainError("theta must lie in (0, 1/2)");
    ThinMeasureCertificate cert{alpha, theta, 0.0, false};
    const double inside = arc_mass(meas, theta);
    if (inside == 0.0) {
        for (const auto &a : meas.atoms)
            if (std::abs(a.t) < theta && a.weight > 0.0)
                throw DegenerateTheta("zero arc mass with an atom inside the arc");
        cert.exact = true;
        return cert;
    }
    // gamma -> mu(S_gamma) / gamma^alpha decreases between atom radii and
    // jumps up at them, so the sup is attained at a radius.
    for (const auto &a : meas.atoms) {
        const double r = std::abs(a.t);
        if (r > theta) break;
        if (r == 0.0) {
            cert.kappa = std::numeric_limits<double>::infinity();
            return cert;
        }
        cert.kappa = std::max(cert.kappa, arc_mass(meas, r) / (inside * std::pow(r, alpha)));
    }
    for (double gamma : gamma_grid) {
        if (!(gamma > 0.0 && gamma <= theta)) continue;
        cert.kappa = std::max(cert.kappa, arc_mass(meas, gamma) / (inside * std::pow(gamma, alpha)));
    }
    return cert;
}

WeightedL2Check weighted_l2_check(const SpectralMeasure &meas, double alpha) {
    WeightedL2Check out;
    for (const auto &a : meas.atoms) {
        if (a.t == 0.0) {
            out.S = std::numeric_limits<double>::infinity();
            break;
        }
        out.S += a.weight * std::pow(std::abs(a.t), -alpha);
    }
    out.kappa_bound = meas.total_mass > 0.0 ? out.S / meas.total_mass : 0.0;
    return out;
}

double weighted_l2_kappa(const SpectralMeasure &meas, double alpha, double theta) {
    const double inside = arc_mass(meas, theta);
    if (inside == 0.0) return 0.0;
    return weighted_l2_check(meas, alpha).S / inside;
}

double fejer_spectral_variance(const SpectralMeasure &meas, std::size_t m) {
    double sum = 0.0;
    for (const auto &a : meas.atoms)
        sum += fejer_kernel(m, 2.0 * std::numbers::pi * a.t) * a.weight;
    return sum / static_cast<double>(m);
}

double geometric_spectral_variance(const SpectralMeasure &meas, std::size_t m) {
    if (m < 1) throw InvalidArgument("m must be at least 1");
    const double md = static_cast<double>(m);
    double sum = 0.0;
    for (const auto &a : meas.atoms) {
        const double den = std::sin(std::numbers::pi * a.t);
        if (den == 0.0) {
            sum += a.weight;
            continue;
        }
        const double num = std::sin(md * std::numbers::pi * a.t);
        sum += a.weight * num * num / (md * md * den * den);
    }
    return sum;
}

} // namespace koopman
