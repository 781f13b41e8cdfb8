#include "koopman/montecarlo.hpp"

#include <cmath>
#include <limits>

#include "koopman/errors.hpp"
#include "koopman/parallel.hpp"
#include "koopman/rng.hpp"

namespace koopman {

std::uint64_t trial_seed(std::uint64_t seed, std::size_t m, std::size_t trial) {
    return derive_seed(derive_seed(seed, m), trial);
}

TrialOutcome run_trial(const TrialSetup &setup, std::size_t m, std::uint64_t seed) {
    if (!setup.system || !setup.dict || !setup.reference)
        throw InvalidArgument("trial setup is incomplete");
    GramPair gram;
    if (setup.regime == Regime::Ergodic) {
        // Evaluate the trajectory once; xs and ys share all but one state.
        const Matrix traj = sample_trajectory(*setup.system, m, setup.burn_in, seed);
        const Matrix psi = evaluate_batch(*setup.dict, traj);
        const auto mm = static_cast<Eigen::Index>(m);
        const double inv_m = 1.0 / static_cast<double>(m);
        gram.C = psi.leftCols(mm) * psi.leftCols(mm).transpose() * inv_m;
        gram.Cplus = psi.leftCols(mm) * psi.rightCols(mm).transpose() * inv_m;
        gram.provenance = Provenance::empirical(m, seed);
    } else {
        const StateSampler mu0 = setup.mu0 ? setup.mu0 : invariant_sampler(*setup.system);
        gram = empirical_gram(*setup.dict, sample_iid(*setup.system, mu0, m, seed));
    }
    const GramPair &ref = setup.reference->source;
    if (gram.C.rows() != ref.C.rows()) throw DimensionMismatch("reference has the wrong size");

    TrialOutcome out;
    out.err_C = (gram.C - ref.C).norm();
    out.err_Cplus = (gram.Cplus - ref.Cplus).norm();
    if (empirically_invertible(gram.C + setup.options.ridge * Matrix::Identity(gram.C.rows(), gram.C.cols()))) {
        const EdmdEstimate est = edmd_from_gram(gram, setup.regime, setup.options);
        out.err_K = (est.Khat - setup.reference->KV).norm();
    } else {
        out.singular = true;
        out.err_K = std::numeric_limits<double>::quiet_NaN();
    }
    return out;
}

std::vector<TrialOutcome> run_trials(const TrialSetup &setup, std::size_t m, std::size_t n_trials,
                                     std::uint64_t seed, unsigned threads) {
    std::vector<TrialOutcome> out(n_trials);
    parallel_for(n_trials, threads, [&](std::size_t i) {
        out[i] = run_trial(setup, m, trial_seed(seed, m, i));
    });
    return out;
}

MeanEstimate mean_estimate(const std::vector<double> &values) {
    MeanEstimate est;
    const auto n = static_cast<double>(values.size());
    if (values.empty()) return {std::numeric_limits<double>::quiet_NaN(),
                                std::numeric_limits<double>::infinity()};
    double sum = 0.0;
    for (double v : values) sum += v;
    est.mean = sum / n;
    if (values.size() < 2) {
        est.std_error = std::numeric_limits<double>::infinity();
        return est;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - est.mean) * (v - est.mean);
    est.std_error = std::sqrt(ss / (n - 1.0) / n);
    return est;
}

} // namespace koopman
