#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>

#include "koopman/errors.hpp"
#include "koopman/spectral.hpp"
#include "koopman/variance.hpp"

using namespace koopman;
using Complex = std::complex<double>;

namespace {

// Exact E||C - C^||^2 and E||C+ - C+^||^2 by enumerating every path
// x_0, ..., x_m of a stationary chain.
std::pair<double, double> enumerate_paths(const FiniteMarkovSystem &chain, const Dictionary &dict, std::size_t m) {
    const auto n = static_cast<std::size_t>(chain.n_states());
    const Vector &pi = chain.invariant();
    const Matrix &p = chain.transition();
    const auto big_n = static_cast<Eigen::Index>(dict.size());
    std::vector<Vector> psi(n);
    for (std::size_t s = 0; s < n; ++s) {
        std::vector<double> x{static_cast<double>(s)};
        psi[s] = dict.evaluate(x);
    }
    Matrix c = Matrix::Zero(big_n, big_n), cp = Matrix::Zero(big_n, big_n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) {
            c += (i == j ? pi(static_cast<Eigen::Index>(i)) : 0.0) * psi[i] * psi[i].transpose();
            cp += pi(static_cast<Eigen::Index>(i)) * p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) *
                  psi[i] * psi[j].transpose();
        }
    std::size_t total = 1;
    for (std::size_t k = 0; k <= m; ++k) total *= n;
    double vc = 0.0, vcp = 0.0;
    std::vector<std::size_t> path(m + 1);
    for (std::size_t code = 0; code < total; ++code) {
        std::size_t rest = code;
        for (auto &s : path) {
            s = rest % n;
            rest /= n;
        }
        double prob = pi(static_cast<Eigen::Index>(path[0]));
        for (std::size_t k = 0; k < m; ++k)
            prob *= p(static_cast<Eigen::Index>(path[k]), static_cast<Eigen::Index>(path[k + 1]));
        if (prob == 0.0) continue;
        Matrix ch = Matrix::Zero(big_n, big_n), cph = Matrix::Zero(big_n, big_n);
        for (std::size_t k = 0; k < m; ++k) {
            ch += psi[path[k]] * psi[path[k]].transpose();
            cph += psi[path[k]] * psi[path[k + 1]].transpose();
        }
        ch /= static_cast<double>(m);
        cph /= static_cast<double>(m);
        vc += prob * (ch - c).squaredNorm();
        vcp += prob * (cph - cp).squaredNorm();
    }
    return {vc, vcp};
}

} // namespace

TEST(Pm, SpecialValues) {
    for (std::size_t m : {1u, 2u, 7u, 100u, 1000u}) EXPECT_NEAR(pm_polynomial(m, 1.0).real(), m - 1.0, 1e-9);
    EXPECT_EQ(pm_polynomial(1, Complex(0.3, 0.2)), Complex(0.0));
    EXPECT_NEAR(std::abs(pm_polynomial(2, 0.0) - 1.0), 0.0, 1e-15);
}

TEST(Pm, ClosedFormMatchesSum) {
    // oracle: the defining sum, evaluated term by term
    for (std::size_t m : {65u, 200u, 1000u}) {
        for (Complex z : {Complex(0.4, 0.0), Complex(-0.9, 0.1), std::polar(1.0, 2.0)}) {
            Complex sum = 0.0;
            for (std::size_t k = 1; k < m; ++k)
                sum += 2.0 * (1.0 - static_cast<double>(k) / m) * std::pow(z, static_cast<double>(k - 1));
            EXPECT_LT(std::abs(pm_polynomial(m, z) - sum), 1e-9 * std::max(1.0, std::abs(sum)));
        }
    }
}

TEST(Pm, MatrixMethodsAgree) {
    const auto chain = random_ergodic_chain(4, 3);  // not reversible: closed form vs Horner
    const auto rep = build_rep(chain, chain.invariant());
    for (std::size_t m : {2u, 10u, 300u}) {
        const Matrix h = pm_apply(rep, m, PmMethod::Horner);
        EXPECT_LT((pm_apply(rep, m, PmMethod::ClosedForm) - h).norm(), 1e-10 * std::max(1.0, h.norm()));
    }
    const auto two = two_state_chain(0.3, 0.3);  // reversible: all three
    const auto rep2 = build_rep(two, two.invariant());
    for (std::size_t m : {5u, 500u}) {
        const Matrix h = pm_apply(rep2, m, PmMethod::Horner);
        EXPECT_LT((pm_apply(rep2, m, PmMethod::Spectral) - h).norm(), 1e-10);
        EXPECT_LT((pm_apply(rep2, m, PmMethod::ClosedForm) - h).norm(), 1e-10);
    }
    const auto circle = KoopmanMatrixRep::circle(CircleRotationSystem(QuadraticIrrational::golden()), 4);
    const Matrix hc = pm_apply(circle, 400, PmMethod::Horner);
    EXPECT_LT((pm_apply(circle, 400, PmMethod::Spectral) - hc).norm(), 1e-9 * hc.norm());
    EXPECT_LT((pm_apply(circle, 400, PmMethod::ClosedForm) - hc).norm(), 1e-9 * hc.norm());
}

TEST(Pm, ClosedFormNeedsGap) {
    const auto rep = KoopmanMatrixRep::circle(CircleRotationSystem::from_angle(0.5), 2);
    EXPECT_THROW(pm_apply(rep, 10, PmMethod::ClosedForm), NoSpectralGap);
}

TEST(ExactVariance, TwoStateConstants) {
    const System sys = two_state_chain(0.3, 0.3);
    const auto dict = Dictionary::indicator(2);
    const auto v = exact_variance(build_rep(sys, dict), dict, 1);
    EXPECT_NEAR(v.E_zero, 0.5, 1e-15);
    EXPECT_NEAR(v.E_plus, 0.71, 1e-15);
    EXPECT_NEAR(v.sigma2_zero, 0.5, 1e-15);
    EXPECT_NEAR(v.var_C, 0.5, 1e-15);
}

TEST(ExactVariance, MatchesPathEnumeration) {
    struct Case {
        FiniteMarkovSystem chain;
        Dictionary dict;
        std::size_t max_m;
    };
    const Case cases[] = {
        {two_state_chain(0.3, 0.3), Dictionary::indicator(2), 10},
        {two_state_chain(0.1, 0.45), Dictionary::indicator(2), 10},
        {random_ergodic_chain(3, 17), Dictionary::monomial(1, 2), 7},
        {random_ergodic_chain(3, 4), Dictionary::indicator(3).scaled(1.7), 6},
    };
    for (const auto &c : cases) {
        const auto rep = build_rep(c.chain, c.chain.invariant());
        for (std::size_t m = 1; m <= c.max_m; ++m) {
            const auto [vc, vcp] = enumerate_paths(c.chain, c.dict, m);
            const auto v = exact_variance(rep, c.dict, m);
            EXPECT_NEAR(v.var_C, vc, 1e-12 * std::max(1.0, vc)) << "m = " << m;
            EXPECT_NEAR(v.var_Cplus, vcp, 1e-12 * std::max(1.0, vcp)) << "m = " << m;
        }
    }
}

TEST(ExactVariance, ConstantDictionaryHasNoVariance) {
    const auto chain = random_ergodic_chain(4, 6);
    const auto dict = Dictionary::monomial(1, 0);
    const auto rep = build_rep(chain, chain.invariant());
    for (std::size_t m : {1u, 10u, 100u}) {
        const auto v = exact_variance(rep, dict, m);
        EXPECT_NEAR(v.sigma2_plus, 0.0, 1e-14);
        EXPECT_NEAR(v.sigma2_zero, 0.0, 1e-14);
    }
}

TEST(ExactVariance, OperatorNormBounds) {
    const auto chain = random_ergodic_chain(5, 30);
    const auto dict = Dictionary::monomial(1, 2);
    const auto rep = build_rep(chain, chain.invariant());
    const auto n = static_cast<Eigen::Index>(rep.dim());
    const Matrix a = Matrix::Identity(n, n) - rep.K0() + (Matrix::Identity(n, n) - rep.Q());
    const Matrix resolvent = a.partialPivLu().solve(rep.Q());
    const double r = rep.operator_norm(resolvent);
    const double r0 = rep.operator_norm(rep.K0() * resolvent);
    for (std::size_t m : {1u, 3u, 20u, 200u, 5000u}) {
        const auto v = exact_variance(rep, dict, m);
        const Matrix p = pm_apply(rep, m);
        EXPECT_LE(v.sigma2_plus, (1.0 + rep.operator_norm(p)) * v.E_plus + 1e-12);
        EXPECT_LE(v.sigma2_zero, (1.0 + rep.operator_norm(rep.K0() * p)) * v.E_zero + 1e-12);
        EXPECT_LE(v.sigma2_plus, (1.0 + 4.0 * r) * v.E_plus + 1e-12);
        EXPECT_LE(v.sigma2_zero, (1.0 + 4.0 * r0) * v.E_zero + 1e-12);
    }
}

TEST(Fejer, KernelValues) {
    for (std::size_t m : {1u, 2u, 10u, 1000u}) EXPECT_NEAR(fejer_kernel(m, 0.0), static_cast<double>(m), 1e-9);
    for (double t : {0.1, 1.0, 3.0}) EXPECT_DOUBLE_EQ(fejer_kernel(1, t), 1.0);
    // the squared closed form disagrees with the defining sum; the unsquared one matches
    for (std::size_t m : {3u, 10u, 57u}) {
        for (double t : {0.3, 1.0, 2.5}) {
            const double sum = fejer_kernel(m, t);
            EXPECT_NEAR(fejer_kernel_closed_form(m, t), sum, 1e-11);
            const double r = (1 - std::cos(m * t)) / (1 - std::cos(t));
            EXPECT_NEAR(r / m, sum, 1e-11);
            if (m > 1) EXPECT_GT(std::abs(r * r / m - sum), 1e-5);
        }
    }
}

TEST(Fejer, SingleModeMatchesGeometricSeries) {
    const CircleRotationSystem sys(QuadraticIrrational::golden());
    const auto rep = KoopmanMatrixRep::circle(sys, 1);
    const Vector f = Vector::Unit(3, 1);  // sqrt2 cos(2 pi t)
    for (std::size_t m : {1u, 10u, 100u, 1000u}) {
        const double avg = ergodic_average_norm2(rep, f, m);
        const double t = 2 * std::numbers::pi * sys.t0();
        EXPECT_NEAR(avg, fejer_kernel(m, t) / m, 1e-12);
        const Complex c = std::polar(1.0, t);
        const double geo = std::norm(1.0 - std::pow(c, static_cast<double>(m))) /
                           (static_cast<double>(m) * m * std::norm(1.0 - c));
        EXPECT_NEAR(avg, geo, 1e-12);
    }
}

TEST(Fejer, UnitaryFormulasAgree) {
    const System sys = CircleRotationSystem(QuadraticIrrational::golden());
    for (std::size_t f : {1u, 2u}) {
        const auto dict = Dictionary::fourier(f);
        const auto rep = build_rep(sys, dict);
        for (std::size_t m : {1u, 10u, 100u}) {
            const auto pm = exact_variance(rep, dict, m);
            const auto fej = fejer_variance(rep, dict, m);
            EXPECT_NEAR(pm.sigma2_plus, fej.sigma2_plus, 1e-9 * std::max(1.0, fej.sigma2_plus));
            EXPECT_NEAR(pm.sigma2_zero, fej.sigma2_zero, 1e-9 * std::max(1.0, fej.sigma2_zero));
            const auto forms = fejer_variance_forms(rep, dict, m);
            EXPECT_NEAR(forms.spectral.var_C, fej.var_C, 1e-9 * fej.var_C);
            EXPECT_NEAR(forms.geometric.var_Cplus, fej.var_Cplus, 1e-9 * fej.var_Cplus);
        }
    }
}

TEST(Fejer, RequiresUnitary) {
    const System sys = two_state_chain(0.3, 0.3);
    const auto dict = Dictionary::indicator(2);
    EXPECT_THROW(fejer_variance(build_rep(sys, dict), dict, 10), NotUnitary);
}

TEST(Oracle, TwoStateWithinThreeSigma) {
    const System sys = two_state_chain(0.3, 0.3);
    const auto dict = Dictionary::indicator(2);
    const auto exact = exact_variance(build_rep(sys, dict), dict, 10);
    const auto o = montecarlo_variance_oracle(sys, dict, 10, 20000, 123);
    EXPECT_NEAR(o.var_C_hat, exact.var_C, 3 * o.stderr_C);
    EXPECT_NEAR(o.var_Cplus_hat, exact.var_Cplus, 3 * o.stderr_Cplus);
}

TEST(Oracle, IidCrossTermsVanish) {
    const auto chain = random_ergodic_chain(3, 2);
    const System sys = chain;
    const auto dict = Dictionary::monomial(1, 2);
    const auto v = exact_variance(build_rep(chain, chain.invariant()), dict, 1);
    OracleOptions opts;
    opts.regime = Regime::Iid;
    const auto o = montecarlo_variance_oracle(sys, dict, 20, 20000, 7, opts);
    EXPECT_NEAR(o.var_Cplus_hat, v.E_plus / 20.0, 3 * o.stderr_Cplus);
    EXPECT_NEAR(o.var_C_hat, v.E_zero / 20.0, 3 * o.stderr_C);
}

TEST(Oracle, ThreadCountDoesNotChangeResults) {
    const System sys = random_ergodic_chain(3, 9);
    const auto dict = Dictionary::indicator(3);
    OracleOptions one, three;
    three.threads = 3;
    const auto a = montecarlo_variance_oracle(sys, dict, 25, 500, 4, one);
    const auto b = montecarlo_variance_oracle(sys, dict, 25, 500, 4, three);
    EXPECT_EQ(a.var_C_hat, b.var_C_hat);
    EXPECT_EQ(a.stderr_Cplus, b.stderr_Cplus);
}

TEST(Oracle, SingleTrialHasInfiniteStderr) {
    const System sys = two_state_chain(0.3, 0.3);
    const auto o = montecarlo_variance_oracle(sys, Dictionary::indicator(2), 5, 1, 1);
    EXPECT_TRUE(std::isinf(o.stderr_C));
}

TEST(Oracle, CircleFejerValue) {
    const System sys = CircleRotationSystem(QuadraticIrrational::golden());
    const auto dict = Dictionary::fourier(1);
    const auto v = fejer_variance(build_rep(sys, dict), dict, 50);
    const auto o = montecarlo_variance_oracle(sys, dict, 50, 2000, 8);
    EXPECT_NEAR(o.var_C_hat, v.var_C, 3 * o.stderr_C + 1e-12);
    EXPECT_NEAR(o.var_Cplus_hat, v.var_Cplus, 3 * o.stderr_Cplus + 1e-12);
}
