#include <gtest/gtest.h>

#include <cmath>
#include <numeric>

#include "koopman/errors.hpp"
#include "koopman/rng.hpp"
#include "koopman/studies.hpp"

using namespace koopman;

namespace {

struct Ols {
    double slope, intercept;
};

// textbook least squares on (log m, log v)
Ols ols_loglog(const std::vector<double> &m, const std::vector<double> &v) {
    const double n = static_cast<double>(m.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        const double x = std::log(m[i]), y = std::log(v[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    return {slope, (sy - slope * sx) / n};
}

Json chain_config() {
    return Json::parse(R"({
        "system": {"type": "finite_chain", "two_state": {"p": 0.3, "q": 0.3}},
        "dictionary": {"kind": "indicator"},
        "m_grid": [10, 20, 50, 100],
        "n_trials": 40,
        "seed": 5,
        "error_quantiles": [0.5, 0.9]
    })");
}

} // namespace

TEST(FitRate, ExactPowerLaw) {
    const std::vector<double> m{10, 100, 1000, 10000};
    std::vector<double> v;
    for (double x : m) v.push_back(3.0 / std::sqrt(x));
    const auto fit = fit_rate(m, v);
    EXPECT_NEAR(fit.slope, -0.5, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
    EXPECT_NEAR(fit.r2, 1.0, 1e-12);
    EXPECT_EQ(fit.n_points, 4u);
}

TEST(FitRate, NoisyPowerLawMatchesOls) {
    CounterRng rng(1);
    std::vector<double> m, v;
    for (double x = 10; x <= 1e5; x *= 2) {
        m.push_back(x);
        v.push_back(std::pow(x, -0.5) * (1 + 0.01 * rng.normal()));
    }
    const auto fit = fit_rate(m, v);
    const auto oracle = ols_loglog(m, v);
    EXPECT_NEAR(fit.slope, oracle.slope, 1e-12);
    EXPECT_NEAR(fit.intercept, oracle.intercept, 1e-12);
    EXPECT_NEAR(fit.slope, -0.5, 0.05);
    EXPECT_GT(fit.slope_stderr, 0.0);
}

TEST(FitRate, NeedsFourPoints) {
    const std::vector<double> m{1, 2, 3}, v{1, 0.5, 0.3};
    EXPECT_THROW(fit_rate(m, v), InsufficientPoints);
    // nonpositive values are dropped before counting
    const std::vector<double> m4{1, 2, 3, 4}, v4{1, 0.5, 0.0, 0.2};
    EXPECT_THROW(fit_rate(m4, v4), InsufficientPoints);
}

TEST(Quantile, LinearInterpolation) {
    EXPECT_EQ(quantile({3, 1, 2, 4}, 0.5), 2.5);
    EXPECT_EQ(quantile({1, 2, 3, 4, 5}, 0.9), 4.6);
    EXPECT_EQ(quantile({7}, 0.3), 7.0);
    EXPECT_TRUE(std::isnan(quantile({}, 0.5)));
}

TEST(StudyConfig, Validation) {
    auto j = chain_config();
    EXPECT_NO_THROW(study_config_from_json(j));
    auto bad = j;
    bad["m_grid"] = {10, 10, 20};
    EXPECT_THROW(study_config_from_json(bad), InvalidArgument);
    bad = j;
    bad["n_trials"] = 10;
    EXPECT_THROW(study_config_from_json(bad), InvalidArgument);
    bad = j;
    bad["error_quantiles"] = {1.0};
    EXPECT_THROW(study_config_from_json(bad), DomainError);
    bad = j;
    bad["alpha"] = 1.0;
    EXPECT_THROW(study_config_from_json(bad), InvalidArgument);
    bad = j;
    bad.erase("system");
    EXPECT_THROW(study_config_from_json(bad), InvalidArgument);
    bad = j;
    bad["regime"] = "mixing";
    EXPECT_THROW(study_config_from_json(bad), InvalidArgument);
}

TEST(Convergence, DeterministicAndThreadInvariant) {
    auto cfg = study_config_from_json(chain_config());
    const std::string a = to_csv(run_convergence_study(cfg).table);
    const std::string b = to_csv(run_convergence_study(cfg).table);
    cfg.threads = 3;
    const std::string c = to_csv(run_convergence_study(cfg).table);
    EXPECT_EQ(a, b);
    EXPECT_EQ(a, c);
    EXPECT_EQ(a.rfind("# schema: koopman-cert/convergence/v1", 0), 0u);
    cfg.seed = 6;
    EXPECT_NE(to_csv(run_convergence_study(cfg).table), a);
}

TEST(Convergence, TheoryColumnUsesExactVariance) {
    const auto res = run_convergence_study(study_config_from_json(chain_config()));
    ASSERT_EQ(res.table.rows.size(), 4u);
    const System sys = two_state_chain(0.3, 0.3);
    const auto dict = Dictionary::indicator(2);
    const auto rep = build_rep(sys, dict);
    for (const auto &row : res.table.rows) {
        const auto v = exact_variance(rep, dict, row.m);
        EXPECT_NEAR(row.theory_rmse_C, std::sqrt(v.var_C), 1e-12);
        EXPECT_NEAR(row.theory_rmse_Cplus, std::sqrt(v.var_Cplus), 1e-12);
        EXPECT_EQ(row.quantiles_C.size(), 2u);
        EXPECT_LE(row.quantiles_C[0], row.quantiles_C[1]);
    }
}

TEST(Convergence, IidRateIsHalf) {
    auto j = chain_config();
    j["regime"] = "iid";
    j["m_grid"] = {100, 400, 1600, 6400};
    j["n_trials"] = 200;
    const auto res = run_convergence_study(study_config_from_json(j));
    EXPECT_NEAR(res.fit_C.slope, -0.5, 0.05);
    EXPECT_NEAR(res.fit_Cplus.slope, -0.5, 0.05);
}

TEST(VarianceCheck, ChainAgreesWithinThreeSigma) {
    auto j = chain_config();
    j["system"] = Json::parse(R"({"type": "finite_chain", "random": {"n_states": 3, "seed": 2}})");
    j["m_grid"] = {5, 50};
    j["n_trials"] = 4000;
    const auto rows = run_variance_check(study_config_from_json(j));
    ASSERT_EQ(rows.size(), 2u);
    for (const auto &r : rows) EXPECT_TRUE(r.within_3sigma) << "m = " << r.m;
}

TEST(VarianceCheck, ZeroVarianceFloor) {
    EXPECT_TRUE(within_three_sigma(0.0, 0.0, 0.0));
    EXPECT_TRUE(within_three_sigma(1.0, 1.0 + 1e-13, 0.0));
    EXPECT_FALSE(within_three_sigma(1.0, 1.1, 0.01));
}

TEST(ReferenceModel, OrnsteinUhlenbeck) {
    const auto j = Json::parse(R"({
        "system": {"type": "sde", "kind": "ornstein_uhlenbeck", "theta": 1, "sigma": 1, "dt": 0.01, "lag": 0.1},
        "dictionary": {"kind": "monomial", "degree": 1},
        "m_grid": [100, 200, 400, 800, 5000],
        "n_trials": 30,
        "burn_in": 100,
        "reference_m": 20000,
        "seed": 3
    })");
    const auto res = run_convergence_study(study_config_from_json(j));
    EXPECT_TRUE(res.table.reference_model);
    // rows beyond a tenth of the reference length are not reported
    ASSERT_EQ(res.table.rows.size(), 4u);
    for (const auto &row : res.table.rows) EXPECT_TRUE(std::isnan(row.theory_rmse_C));
    EXPECT_LT(res.table.rows.back().rmse_C, res.table.rows.front().rmse_C);
    auto no_ref = j;
    no_ref.erase("reference_m");
    EXPECT_THROW(run_convergence_study(study_config_from_json(no_ref)), InvalidArgument);
}

TEST(BoundGrid, TwoStateChainIsValid) {
    auto j = chain_config();
    j["m_grid"] = {1000, 4000};
    j["epsilon_grid"] = {1.0, 2.0};
    j["n_trials"] = 200;
    const auto grid = run_bound_grid(study_config_from_json(j));
    ASSERT_EQ(grid.branches.size(), 1u);
    EXPECT_EQ(grid.branches[0], BoundBranch::ErgodicLinear);
    EXPECT_EQ(grid.rows.size(), 4u);
    EXPECT_TRUE(bound_grid_valid(grid));
    const std::string csv = to_csv(grid);
    EXPECT_EQ(csv.rfind("# schema: koopman-cert/bounds/v1", 0), 0u);
}

TEST(BoundGrid, IidBranches) {
    auto j = chain_config();
    j["regime"] = "iid";
    j["m_grid"] = {500, 4000};
    j["epsilon_grid"] = {1.0};
    j["n_trials"] = 100;
    const auto grid = run_bound_grid(study_config_from_json(j));
    ASSERT_EQ(grid.branches.size(), 2u);
    EXPECT_EQ(grid.rows.size(), 4u);
    EXPECT_TRUE(bound_grid_valid(grid));
}
