#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "koopman/errors.hpp"
#include "koopman/rng.hpp"
#include "koopman/spectral.hpp"
#include "koopman/variance.hpp"

using namespace koopman;
using Complex = std::complex<double>;

namespace {

const double kGolden = (std::sqrt(5.0) - 1.0) / 2.0;

KoopmanMatrixRep golden_circle(std::size_t max_freq) {
    return KoopmanMatrixRep::circle(CircleRotationSystem(QuadraticIrrational::golden()), max_freq);
}

Vector random_mean_zero(const KoopmanMatrixRep &rep, CounterRng &rng) {
    Vector f(static_cast<Eigen::Index>(rep.dim()));
    for (auto &v : f) v = rng.normal();
    return rep.Q() * f;
}

} // namespace

TEST(Spectral, WrapRevolutions) {
    EXPECT_NEAR(wrap_revolutions(0.7), -0.3, 1e-15);
    EXPECT_NEAR(wrap_revolutions(0.25), 0.25, 1e-15);
    EXPECT_EQ(wrap_revolutions(0.5), -0.5);
    EXPECT_EQ(wrap_revolutions(-0.5), -0.5);
    EXPECT_NEAR(wrap_revolutions(3.1), 0.1, 1e-12);
    EXPECT_NEAR(wrap_revolutions(-2.9), 0.1, 1e-12);
}

TEST(Spectral, SingleExponential) {
    const auto meas = spectral_measure_exponential(kGolden, {{1, Complex(0.6, 0.8)}});
    ASSERT_EQ(meas.atoms.size(), 1u);
    EXPECT_NEAR(meas.atoms[0].t, kGolden - 1.0, 1e-12);
    EXPECT_NEAR(meas.atoms[0].weight, 1.0, 1e-15);
    EXPECT_THROW(spectral_measure_exponential(kGolden, {{0, 1.0}}), NotMeanZero);
}

TEST(Spectral, RealModeSplitsIntoConjugateAtoms) {
    const auto rep = golden_circle(2);
    Vector f = Vector::Zero(5);
    f(1) = 0.3;  // sqrt2 cos
    f(2) = -0.4; // sqrt2 sin
    const auto meas = spectral_measure(rep, f);
    ASSERT_EQ(meas.atoms.size(), 2u);
    EXPECT_NEAR(std::abs(meas.atoms[0].t), 1.0 - kGolden, 1e-12);
    EXPECT_NEAR(meas.atoms[0].t, -meas.atoms[1].t, 1e-12);
    EXPECT_NEAR(meas.atoms[0].weight, 0.125, 1e-15);
    EXPECT_NEAR(meas.atoms[1].weight, 0.125, 1e-15);
    EXPECT_NEAR(meas.total_mass, 0.25, 1e-15);
}

TEST(Spectral, ZeroFunctionHasEmptyMeasure) {
    const auto meas = spectral_measure(golden_circle(1), Vector::Zero(3));
    EXPECT_TRUE(meas.atoms.empty());
    EXPECT_EQ(meas.total_mass, 0.0);
    const auto cert = certify_thin_measure(meas, 1.0, 0.2);
    EXPECT_TRUE(cert.exact);
    EXPECT_EQ(cert.kappa, 0.0);
}

TEST(Spectral, TwoExponentials) {
    const auto meas = spectral_measure_exponential(kGolden, {{1, 1.0}, {2, Complex(0.0, 2.0)}});
    ASSERT_EQ(meas.atoms.size(), 2u);
    // 2 t0 wraps to 0.236..., closer to 0 than t0 -> -0.381...
    EXPECT_NEAR(meas.atoms[0].t, 2 * kGolden - 1.0, 1e-12);
    EXPECT_NEAR(meas.atoms[0].weight, 4.0, 1e-15);
    EXPECT_NEAR(meas.atoms[1].weight, 1.0, 1e-15);
    EXPECT_NEAR(meas.total_mass, 5.0, 1e-15);
}

TEST(Spectral, TotalMassIsNormSquared) {
    CounterRng rng(2024);
    const auto circle = golden_circle(5);
    Matrix perm = Matrix::Zero(4, 4);
    for (int i = 0; i < 4; ++i) perm(i, (i + 1) % 4) = 1.0;
    const auto cycle = KoopmanMatrixRep::on_finite_set(perm, Vector::Ones(4));
    for (int trial = 0; trial < 100; ++trial) {
        for (const auto *rep : {&circle, &cycle}) {
            const Vector f = random_mean_zero(*rep, rng);
            const auto meas = spectral_measure(*rep, f);
            const double n2 = rep->norm(f) * rep->norm(f);
            EXPECT_NEAR(meas.total_mass, n2, 1e-10 * std::max(1.0, n2));
            for (const auto &a : meas.atoms) EXPECT_GE(a.weight, 0.0);
        }
    }
}

TEST(Spectral, CyclicPermutationMatchesDft) {
    const int n = 5;
    Matrix perm = Matrix::Zero(n, n);
    for (int i = 0; i < n; ++i) perm(i, (i + 1) % n) = 1.0;  // (Kf)(i) = f(i+1)
    const auto rep = KoopmanMatrixRep::on_finite_set(perm, Vector::Ones(n));
    Vector f(n);
    f << 1.0, -2.0, 0.5, 3.0, -2.5;
    const auto meas = spectral_measure(rep, f);
    // e_k(i) = exp(2 pi i k i / n) are orthonormal eigenfunctions for the eigenvalue exp(2 pi i k / n)
    std::vector<SpectralAtom> expected;
    for (int k = 1; k < n; ++k) {
        Complex c = 0.0;
        for (int i = 0; i < n; ++i) c += f(i) * std::polar(1.0, -2 * std::numbers::pi * k * i / n) / double(n);
        expected.push_back({wrap_revolutions(double(k) / n), std::norm(c)});
    }
    const auto oracle = make_spectral_measure(expected);
    ASSERT_EQ(meas.atoms.size(), oracle.atoms.size());
    for (std::size_t i = 0; i < meas.atoms.size(); ++i) {
        EXPECT_NEAR(meas.atoms[i].t, oracle.atoms[i].t, 1e-10);
        EXPECT_NEAR(meas.atoms[i].weight, oracle.atoms[i].weight, 1e-10);
    }
}

TEST(Spectral, Preconditions) {
    EXPECT_THROW(spectral_measure(golden_circle(1), Vector::Unit(3, 0)), NotMeanZero);
    const auto chain = two_state_chain(0.3, 0.3);
    const auto rep = build_rep(chain, chain.invariant());
    Vector f(2);
    f << 1.0, -1.0;
    EXPECT_THROW(spectral_measure(rep, f), NotUnitary);
}

TEST(Spectral, ArcMass) {
    const auto meas = make_spectral_measure({{0.1, 1.0}, {-0.25, 2.0}, {0.4, 3.0}});
    EXPECT_EQ(arc_mass(meas, 0.05), 0.0);
    EXPECT_EQ(arc_mass(meas, 0.1), 1.0);
    EXPECT_EQ(arc_mass(meas, 0.3), 3.0);
    EXPECT_EQ(arc_mass(meas, 0.5), meas.total_mass);
    double prev = 0.0;
    for (double g = 0.01; g <= 0.5; g += 0.01) {
        const double m = arc_mass(meas, g);
        EXPECT_GE(m, prev);
        prev = m;
    }
    EXPECT_THROW(arc_mass(meas, 0.0), DomainError);
    EXPECT_THROW(arc_mass(meas, 0.6), DomainError);
}

TEST(ThinMeasure, SupAtAtomRadius) {
    const auto meas = make_spectral_measure({{0.1, 1.0}, {-0.15, 1.0}, {0.4, 5.0}});
    // candidates: 1/(2*0.1) = 5 and 2/(2*0.15) = 6.67
    const auto cert = certify_thin_measure(meas, 1.0, 0.2);
    EXPECT_FALSE(cert.exact);
    EXPECT_NEAR(cert.kappa, 2.0 / (2.0 * 0.15), 1e-12);
    // a dense grid never exceeds the exact sup
    std::vector<double> grid;
    for (int i = 1; i <= 2000; ++i) grid.push_back(0.2 * i / 2000.0);
    EXPECT_NEAR(certify_thin_measure(meas, 1.0, 0.2, grid).kappa, cert.kappa, 1e-12);
}

TEST(ThinMeasure, AtomAtZeroIsUnbounded) {
    const auto meas = make_spectral_measure({{0.0, 1.0}, {0.3, 1.0}});
    EXPECT_TRUE(std::isinf(certify_thin_measure(meas, 1.0, 0.35).kappa));
    EXPECT_TRUE(std::isinf(weighted_l2_check(meas, 1.0).S));
}

TEST(ThinMeasure, GoldenRotationFamily) {
    // the Fourier(1) family lives on frequencies 1 and 2: atoms at |t| = 0.382 and 0.236
    const System sys = CircleRotationSystem(QuadraticIrrational::golden());
    const auto dict = Dictionary::fourier(1);
    const auto rep = build_rep(sys, dict);
    const auto fam = variance_family(rep, dict);
    const double t2 = 2 * kGolden - 1.0;
    for (Eigen::Index c = 0; c < fam.zero.cols(); ++c) {
        const auto meas = spectral_measure(rep, fam.zero.col(c));
        const auto exact = certify_thin_measure(meas, 1.0, 0.2);
        EXPECT_TRUE(exact.exact);
        EXPECT_EQ(exact.kappa, 0.0);
        const auto cert = certify_thin_measure(meas, 1.5, 0.3);
        if (arc_mass(meas, 0.3) > 0.0) EXPECT_NEAR(cert.kappa, std::pow(t2, -1.5), 1e-9);
    }
}

TEST(ThinMeasure, WeightedSum) {
    const auto meas = make_spectral_measure({{0.25, 1.0}, {-0.5, 1.0}});
    const auto chk = weighted_l2_check(meas, 1.0);
    EXPECT_NEAR(chk.S, 4.0 + 2.0, 1e-12);
    EXPECT_NEAR(chk.kappa_bound, 3.0, 1e-12);
}

TEST(ThinMeasure, MassNormalizedSumCanUnderestimate) {
    // S / total mass falls below the exact sup when most mass sits outside the arc
    const auto meas = make_spectral_measure({{0.1, 1.0}, {0.4, 100.0}});
    const auto cert = certify_thin_measure(meas, 1.0, 0.2);
    EXPECT_NEAR(cert.kappa, 10.0, 1e-12);
    const auto chk = weighted_l2_check(meas, 1.0);
    EXPECT_NEAR(chk.kappa_bound, 260.0 / 101.0, 1e-12);
    EXPECT_LT(chk.kappa_bound, cert.kappa);
    EXPECT_GE(weighted_l2_kappa(meas, 1.0, 0.2), cert.kappa);
}

TEST(ThinMeasure, ArcNormalizedSumDominates) {
    CounterRng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<SpectralAtom> atoms;
        for (int i = 0; i < 6; ++i) atoms.push_back({rng.uniform() - 0.5, rng.uniform()});
        const auto meas = make_spectral_measure(atoms);
        for (double alpha : {0.5, 1.0, 1.7}) {
            for (double theta : {0.05, 0.2, 0.45}) {
                if (arc_mass(meas, theta) == 0.0) continue;
                EXPECT_GE(weighted_l2_kappa(meas, alpha, theta) * (1 + 1e-12),
                          certify_thin_measure(meas, alpha, theta).kappa);
            }
        }
    }
}

TEST(ThinMeasure, Validation) {
    const auto meas = make_spectral_measure({{0.1, 1.0}});
    EXPECT_THROW(certify_thin_measure(meas, 2.0, 0.2), DomainError);
    EXPECT_THROW(certify_thin_measure(meas, 1.0, 0.5), DomainError);
}

TEST(Spectral, FejerFormsMatchErgodicAverage) {
    CounterRng rng(3);
    const auto rep = golden_circle(4);
    const Vector f = random_mean_zero(rep, rng);
    const auto meas = spectral_measure(rep, f);
    for (std::size_t m : {1u, 2u, 17u, 300u}) {
        const double direct = ergodic_average_norm2(rep, f, m);
        EXPECT_NEAR(fejer_spectral_variance(meas, m), direct, 1e-10 * std::max(1.0, direct));
        EXPECT_NEAR(geometric_spectral_variance(meas, m), direct, 1e-10 * std::max(1.0, direct));
    }
}

TEST(Spectral, AverageDecaysAsMSquaredAwayFromOne) {
    // with no mass near t = 0, sum w sin^2 / (m^2 sin^2) <= total / (m^2 sin^2(pi theta))
    const auto meas = spectral_measure(golden_circle(1), Vector::Unit(3, 1));
    const double theta = 0.3;
    for (std::size_t m : {10u, 100u, 1000u}) {
        const double md = static_cast<double>(m);
        const double s = std::sin(std::numbers::pi * theta);
        EXPECT_LE(geometric_spectral_variance(meas, m), meas.total_mass / (md * md * s * s));
    }
}
