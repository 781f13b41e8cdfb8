#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "koopman/edmd.hpp"
#include "koopman/errors.hpp"
#include "koopman/rng.hpp"

using namespace koopman;

TEST(Edmd, IndicatorEstimateIsTransitionCountRatio) {
    const System sys = random_ergodic_chain(4, 21);
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const auto pairs = sample_ergodic(sys, 400, std::nullopt, seed);
        // oracle: count transitions
        Matrix counts = Matrix::Zero(4, 4);
        for (Eigen::Index k = 0; k < 400; ++k)
            counts(static_cast<Eigen::Index>(pairs.xs(0, k)), static_cast<Eigen::Index>(pairs.ys(0, k))) += 1.0;
        Matrix ratio = counts;
        for (Eigen::Index i = 0; i < 4; ++i) ratio.row(i) /= counts.row(i).sum();
        const auto est = edmd_estimate(Dictionary::indicator(4), pairs);
        EXPECT_LT((est.Khat - ratio).cwiseAbs().maxCoeff(), 1e-12) << "seed " << seed;
    }
}

TEST(Edmd, EmpiricalMassIsSymmetricPsd) {
    const System sys = CircleRotationSystem(QuadraticIrrational::golden());
    const auto g = empirical_gram(Dictionary::fourier(3), sample_ergodic(sys, 50, std::nullopt, 4));
    EXPECT_LT((g.C - g.C.transpose()).norm(), 1e-14);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(g.C);
    EXPECT_GE(eig.eigenvalues().minCoeff(), -1e-12);
    EXPECT_EQ(g.provenance.kind, Provenance::Kind::Empirical);
    EXPECT_EQ(g.provenance.m, 50u);
}

TEST(Edmd, IidEstimatesArePermutationInvariant) {
    const auto chain = random_ergodic_chain(3, 6);
    const System sys = chain;
    auto pairs = sample_iid(sys, categorical_sampler(chain.invariant()), 300, 10);
    const auto dict = Dictionary::monomial(1, 2);
    const auto a = edmd_estimate(dict, pairs);
    std::vector<Eigen::Index> perm(300);
    std::iota(perm.begin(), perm.end(), 0);
    std::reverse(perm.begin(), perm.end());
    std::rotate(perm.begin(), perm.begin() + 77, perm.end());
    SamplePairs shuffled = pairs;
    for (Eigen::Index k = 0; k < 300; ++k) {
        shuffled.xs.col(k) = pairs.xs.col(perm[static_cast<std::size_t>(k)]);
        shuffled.ys.col(k) = pairs.ys.col(perm[static_cast<std::size_t>(k)]);
    }
    const auto b = edmd_estimate(dict, shuffled);
    EXPECT_LT((a.gram.C - b.gram.C).norm(), 1e-12);
    EXPECT_LT((a.Khat - b.Khat).norm(), 1e-10);
}

TEST(Edmd, JointScalingInvariance) {
    const System sys = random_ergodic_chain(4, 2);
    const auto pairs = sample_ergodic(sys, 500, std::nullopt, 3);
    const auto d = Dictionary::monomial(1, 2);
    const auto a = edmd_estimate(d, pairs);
    const auto b = edmd_estimate(d.scaled(2.0), pairs);
    EXPECT_LT((a.Khat - b.Khat).norm(), 1e-10);
}

TEST(Edmd, SingularEmpiricalMass) {
    const System sys = two_state_chain(0.3, 0.3);
    const auto pairs = sample_ergodic(sys, 1, std::nullopt, 1);
    EXPECT_THROW(edmd_estimate(Dictionary::indicator(2), pairs), SingularEmpiricalMass);
}

TEST(Edmd, ConsistentForLargeSamples) {
    const auto chain = random_ergodic_chain(3, 8);
    const System sys = chain;
    const auto ref = galerkin_matrix(exact_gram(chain, Dictionary::indicator(3)));
    const auto est = edmd_estimate(Dictionary::indicator(3), sample_ergodic(sys, 200000, std::nullopt, 5));
    const auto err = estimation_error(est, ref);
    EXPECT_LT(err.err_K, 0.02);
    EXPECT_LT(err.err_C, 0.01);
}

TEST(Edmd, DimensionMismatch) {
    const auto chain = two_state_chain(0.3, 0.3);
    const auto est = edmd_estimate(Dictionary::indicator(2), sample_ergodic(System(chain), 100, std::nullopt, 1));
    const auto ref = galerkin_matrix(exact_gram(random_ergodic_chain(3, 1), Dictionary::indicator(3)));
    EXPECT_THROW(estimation_error(est, ref), DimensionMismatch);
}
