// Concentration bounds for the EDMD estimators as computable functions of
// system and dictionary constants.
#pragma once

#include <cstddef>
#include <optional>
#include <utility>

#include "koopman/dictionaries.hpp"
#include "koopman/representation.hpp"

namespace koopman {

struct ThinParams {
    double alpha = 1.0;
    double kappa = 0.0;
    double theta = 0.25;
    /// every f in the family has mu_f(S_theta) = 0
    bool kappa_zero = false;
};

struct BoundInputs {
    double norm_Cinv = 0.0;   ///< ||C^{-1}||_F
    double norm_Cplus = 0.0;  ///< ||C+||_F
    double E_plus = 0.0;
    double E_zero = 0.0;
    double norm_phi_L2 = 0.0;  ///< ||phi||
    std::optional<double> sup_phi;
    double L = 1.0;
    std::optional<double> resolvent_norm;     ///< ||(I - K0)^{-1}||
    std::optional<double> k0_resolvent_norm;  ///< ||K0 (I - K0)^{-1}||
    std::optional<ThinParams> thin;
    double M_const = 0.0;
};

/// 8 (1 + a^2 b^2)^2 / b^2 * max{E0, E+}
double superlinear_M(double norm_Cinv, double norm_Cplus, double E_zero, double E_plus);

struct BoundInputOptions {
    /// constant with nu P <= L^2 nu; 1 for the invariant law
    double L = 1.0;
    /// Certify the thin-measure condition (unitary representations only).
    std::optional<double> alpha;
    std::optional<double> theta;
};

/// Constants computed exactly from a representation. Resolvent norms are set
/// when the spectral gap exceeds 1e-10; thin parameters when alpha and theta
/// are given and K is unitary (kappa is the max over the family).
BoundInputs make_bound_inputs(const KoopmanMatrixRep &rep, const Dictionary &dict,
                              const BoundInputOptions &options = {});

/// sqrt(max_j (nu P)_j / nu_j)
double chain_L_constant(const FiniteMarkovSystem &sys, const Vector &nu);

enum class BoundBranch { ErgodicLinear, ErgodicSuperlinear, ErgodicKappaZero, IidMarkov, IidHoeffding };
const char *to_string(BoundBranch branch);

struct BoundReport {
    double epsilon = 0.0;
    std::size_t m = 0;
    /// never clamped; values above 1 are vacuous
    double p_bound = 0.0;
    BoundBranch branch = BoundBranch::ErgodicLinear;
    BoundInputs constants_used;
};

/// [1 + 4R] [2ab + eps]^2 [(b^{-2} + a^2) ||phi||^2 - 2]
double alpha_constant(const BoundInputs &in, double epsilon);
BoundReport ergodic_linear_bound(const BoundInputs &in, std::size_t m, double epsilon);
/// ceil(alpha / (delta eps^2))
std::size_t m_required(const BoundInputs &in, double delta, double epsilon);

/// C(alpha): (4 - 3a)/(1 - a) below 1, 3 at 1, 3/((a - 1)(2 - a)) above.
double C_alpha(double alpha);
/// max{2/(1 - cos 2 pi theta), kappa C(alpha)}
double C_alpha_kappa_theta(double alpha, double kappa, double theta);
/// Same with the cosine taken at theta itself (radian reading of the constant).
double C_alpha_kappa_theta_radians(double alpha, double kappa, double theta);

/// C(alpha, kappa, theta) M / (m^alpha eps^2), or M / ((1 - cos 2 pi theta) m^2 eps^2)
/// when every certificate is exact. Needs eps in (0, 2).
BoundReport superlinear_bound(const BoundInputs &in, std::size_t m, double epsilon);

BoundReport iid_markov_bound(const BoundInputs &in, std::size_t m, double epsilon);
/// Throws MissingSupBound without sup_phi.
BoundReport iid_hoeffding_bound(const BoundInputs &in, std::size_t m, double epsilon);
/// (Markov, Hoeffding)
std::pair<BoundReport, BoundReport> iid_bounds(const BoundInputs &in, std::size_t m,
                                               double epsilon);

/// Tail bound P(||A - A^||_F > delta) for one Gram matrix:
/// Chebyshev form coefficient / (m^rate delta^2) or
/// Hoeffding form coefficient * exp(-m delta^2 / scale).
struct MatrixTailBound {
    enum class Form { Chebyshev, Hoeffding };
    Form form = Form::Chebyshev;
    double coefficient = 0.0;
    double rate = 1.0;
    double scale = 1.0;
    double evaluate(std::size_t m, double delta) const;
};

struct MatrixBounds {
    MatrixTailBound C;
    MatrixTailBound Cplus;
    BoundBranch branch = BoundBranch::ErgodicLinear;
};

/// Per-matrix bounds with the sharp variance constants of each branch.
MatrixBounds estimator_error_bounds(const BoundInputs &in, BoundBranch branch);
/// Evaluated at (m, eps): (bound for C, bound for C+).
std::pair<BoundReport, BoundReport> estimator_error_bounds(const BoundInputs &in, BoundBranch branch,
                                                           std::size_t m, double epsilon);
/// Per-matrix bounds with the variance constants relaxed through ||phi||
/// exactly as the composite bounds do; combining them reproduces the
/// composite constants.
MatrixBounds relaxed_estimator_bounds(const BoundInputs &in, BoundBranch branch);

/// P(||K_V - K^||_F > eps) <= bound_Cplus((eps/tau) b) + bound_C((eps/tau)/a),
/// tau = 2ab + eps. With `worst_case_tau`, tau^2 is replaced by its bound
/// 8(1 + a^2 b^2), valid for eps < 2.
BoundReport combine_bounds(const MatrixBounds &bounds, const BoundInputs &in, std::size_t m,
                           double epsilon, bool worst_case_tau = false);

/// Dispatch to the composite bound of a branch.
BoundReport composite_bound(const BoundInputs &in, BoundBranch branch, std::size_t m,
                            double epsilon);

/// Smallest m beyond which the Hoeffding bound stays below the Markov bound.
std::size_t hoeffding_crossover(const BoundInputs &in, double epsilon);

} // namespace koopman
