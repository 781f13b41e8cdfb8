#include "koopman/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "koopman/errors.hpp"
#include "koopman/galerkin.hpp"
#include "koopman/spectral.hpp"
#include "koopman/variance.hpp"

namespace koopman {

namespace {

void require_positive(double epsilon, std::size_t m) {
    if (!(epsilon > 0.0) || !std::isfinite(epsilon)) throw DomainError("epsilon must be positive");
    if (m < 1) throw InvalidArgument("m must be at least 1");
}

void require_cplus(const BoundInputs &in) {
    if (!(in.norm_Cplus > 0.0)) throw DomainError("bounds need C+ != 0");
}

BoundReport report(const BoundInputs &in, BoundBranch branch, std::size_t m, double epsilon,
                   double p) {
    return {epsilon, m, p, branch, in};
}

double one_minus_cos(double theta) {
    const double s = std::sin(std::numbers::pi * theta);
    return 2.0 * s * s;  // 1 - cos(2 pi theta)
}

const ThinParams &require_thin(const BoundInputs &in) {
    if (!in.thin) throw MissingCertificate("superlinear bound needs thin-measure certificates");
    return *in.thin;
}

double require_resolvent(const std::optional<double> &r) {
    if (!r) throw NoSpectralGap("eigenvalue 1 of K is not isolated");
    return *r;
}

} // namespace

double superlinear_M(double a, double b, double E_zero, double E_plus) {
    const double s = 1.0 + a * a * b * b;
    return 8.0 * s * s / (b * b) * std::max(E_zero, E_plus);
}

double chain_L_constant(const FiniteMarkovSystem &sys, const Vector &nu) {
    if (nu.size() != static_cast<Eigen::Index>(sys.n_states()))
        throw DimensionMismatch("reference law has the wrong length");
    const Vector pushed = sys.transition().transpose() * nu;
    double worst = 0.0;
    for (Eigen::Index j = 0; j < nu.size(); ++j) {
        if (nu(j) <= 0.0) {
            if (pushed(j) > 0.0) return std::numeric_limits<double>::infinity();
            continue;
        }
        worst = std::max(worst, pushed(j) / nu(j));
    }
    return std::sqrt(worst);
}

BoundInputs make_bound_inputs(const KoopmanMatrixRep &rep, const Dictionary &dict,
                              const BoundInputOptions &options) {
    const VarianceFamily fam = variance_family(rep, dict);
    BoundInputs in;
    in.norm_Cinv = inverse_frobenius_norm(fam.C);
    in.norm_Cplus = fam.Cplus.norm();
    in.E_plus = fam.E_plus;
    in.E_zero = fam.E_zero;
    in.norm_phi_L2 = rep.norm(fam.phi);
    in.L = options.L;
    in.sup_phi = dict.phi_sup();
    if (!in.sup_phi && rep.kind() == KoopmanMatrixRep::Kind::FiniteSet)
        in.sup_phi = fam.phi.maxCoeff();

    if (rep.spectral_gap() > 1e-10) {
        const auto n = static_cast<Eigen::Index>(rep.dim());
        const Matrix identity = Matrix::Identity(n, n);
        const Matrix a = identity - rep.K0() + (identity - rep.Q());
        const Matrix resolvent = a.partialPivLu().solve(rep.Q());
        in.resolvent_norm = rep.operator_norm(resolvent);
        in.k0_resolvent_norm = rep.operator_norm(rep.K0() * resolvent);
    }

    if (options.alpha && options.theta && rep.is_unitary()) {
        ThinParams thin{*options.alpha, 0.0, *options.theta, true};
        for (const Matrix *family : {&fam.zero, &fam.plus}) {
            for (Eigen::Index c = 0; c < family->cols(); ++c) {
                const auto cert = certify_thin_measure(spectral_measure(rep, family->col(c)),
                                                       thin.alpha, thin.theta);
                thin.kappa = std::max(thin.kappa, cert.kappa);
                thin.kappa_zero = thin.kappa_zero && cert.exact;
            }
        }
        in.thin = thin;
    }
    in.M_const = superlinear_M(in.norm_Cinv, in.norm_Cplus, in.E_zero, in.E_plus);
    return in;
}

const char *to_string(BoundBranch branch) {
    switch (branch) {
    case BoundBranch::ErgodicLinear: return "ergodic_linear";
    case BoundBranch::ErgodicSuperlinear: return "ergodic_superlinear";
    case BoundBranch::ErgodicKappaZero: return "ergodic_kappa_zero";
    case BoundBranch::IidMarkov: return "iid_markov";
    case BoundBranch::IidHoeffding: return "iid_hoeffding";
    }
    return "unknown";
}

double alpha_constant(const BoundInputs &in, double epsilon) {
    require_cplus(in);
    const double r = require_resolvent(in.resolvent_norm);
    const double a = in.norm_Cinv, b = in.norm_Cplus;
    const double bracket = (1.0 / (b * b) + a * a) * in.norm_phi_L2 * in.norm_phi_L2 - 2.0;
    if (bracket < 0.0) throw NegativeBracket("(||C+||^-2 + ||C^-1||^2)||phi||^2 - 2 is negative");
    const double sigma = 2.0 * a * b + epsilon;
    return (1.0 + 4.0 * r) * sigma * sigma * bracket;
}

BoundReport ergodic_linear_bound(const BoundInputs &in, std::size_t m, double epsilon) {
    require_positive(epsilon, m);
    const double alpha = alpha_constant(in, epsilon);
    return report(in, BoundBranch::ErgodicLinear, m, epsilon,
                  alpha / (static_cast<double>(m) * epsilon * epsilon));
}

std::size_t m_required(const BoundInputs &in, double delta, double epsilon) {
    if (!(delta > 0.0)) throw DomainError("delta must be positive");
    require_positive(epsilon, 1);
    return static_cast<std::size_t>(std::ceil(alpha_constant(in, epsilon) / (delta * epsilon * epsilon)));
}

double C_alpha(double alpha) {
    if (!(alpha > 0.0 && alpha < 2.0)) throw DomainError("alpha must lie in (0, 2)");
    if (alpha < 1.0) return (4.0 - 3.0 * alpha) / (1.0 - alpha);
    if (alpha == 1.0) return 3.0;
    return 3.0 / ((alpha - 1.0) * (2.0 - alpha));
}

double C_alpha_kappa_theta(double alpha, double kappa, double theta) {
    if (!(theta > 0.0 && theta < 0.5)) throw DomainError("theta must lie in (0, 1/2)");
    return std::max(2.0 / one_minus_cos(theta), kappa * C_alpha(alpha));
}

double C_alpha_kappa_theta_radians(double alpha, double kappa, double theta) {
    if (!(theta > 0.0 && theta < 0.5)) throw DomainError("theta must lie in (0, 1/2)");
    return std::max(2.0 / (1.0 - std::cos(theta)), kappa * C_alpha(alpha));
}

BoundReport superlinear_bound(const BoundInputs &in, std::size_t m, double epsilon) {
    require_positive(epsilon, m);
    if (epsilon >= 2.0) throw DomainError("superlinear bound holds for eps in (0, 2)");
    const ThinParams &thin = require_thin(in);
    const double md = static_cast<double>(m);
    if (thin.kappa_zero)
        return report(in, BoundBranch::ErgodicKappaZero, m, epsilon,
                      in.M_const / (one_minus_cos(thin.theta) * md * md * epsilon * epsilon));
    const double c = C_alpha_kappa_theta(thin.alpha, thin.kappa, thin.theta);
    return report(in, BoundBranch::ErgodicSuperlinear, m, epsilon,
                  c * in.M_const / (std::pow(md, thin.alpha) * epsilon * epsilon));
}

BoundReport iid_markov_bound(const BoundInputs &in, std::size_t m, double epsilon) {
    require_positive(epsilon, m);
    require_cplus(in);
    const double a = in.norm_Cinv, b = in.norm_Cplus;
    const double bracket = (in.L / (b * b) + a * a) * in.norm_phi_L2 * in.norm_phi_L2 - 2.0;
    if (bracket < 0.0) throw NegativeBracket("(L||C+||^-2 + ||C^-1||^2)||phi||^2 - 2 is negative");
    const double sigma = 2.0 * a * b + epsilon;
    return report(in, BoundBranch::IidMarkov, m, epsilon,
                  sigma * sigma / (static_cast<double>(m) * epsilon * epsilon) * bracket);
}

BoundReport iid_hoeffding_bound(const BoundInputs &in, std::size_t m, double epsilon) {
    require_positive(epsilon, m);
    require_cplus(in);
    if (!in.sup_phi) throw MissingSupBound("Hoeffding bound needs a finite sup of phi");
    const double a = in.norm_Cinv, b = in.norm_Cplus;
    const double tau = (2.0 * a * b + epsilon) * *in.sup_phi;
    const double md = static_cast<double>(m);
    const double e2 = epsilon * epsilon;
    const double p = 2.0 * std::exp(-md * e2 * b * b / (2.0 * tau * tau * (1.0 + in.L) * (1.0 + in.L))) +
                     2.0 * std::exp(-md * e2 / (8.0 * tau * tau * a * a));
    return report(in, BoundBranch::IidHoeffding, m, epsilon, p);
}

std::pair<BoundReport, BoundReport> iid_bounds(const BoundInputs &in, std::size_t m,
                                               double epsilon) {
    return {iid_markov_bound(in, m, epsilon), iid_hoeffding_bound(in, m, epsilon)};
}

double MatrixTailBound::evaluate(std::size_t m, double delta) const {
    if (!(delta > 0.0)) throw DomainError("threshold must be positive");
    const double md = static_cast<double>(m);
    if (form == Form::Hoeffding) return coefficient * std::exp(-md * delta * delta / scale);
    return coefficient / (std::pow(md, rate) * delta * delta);
}

namespace {

MatrixTailBound chebyshev(double coefficient, double rate) {
    return {MatrixTailBound::Form::Chebyshev, coefficient, rate, 1.0};
}

} // namespace

MatrixBounds estimator_error_bounds(const BoundInputs &in, BoundBranch branch) {
    MatrixBounds out;
    out.branch = branch;
    switch (branch) {
    case BoundBranch::ErgodicLinear:
        out.Cplus = chebyshev((1.0 + 4.0 * require_resolvent(in.resolvent_norm)) * in.E_plus, 1.0);
        out.C = chebyshev((1.0 + 4.0 * require_resolvent(in.k0_resolvent_norm)) * in.E_zero, 1.0);
        break;
    case BoundBranch::ErgodicSuperlinear: {
        const ThinParams &thin = require_thin(in);
        const double c = C_alpha_kappa_theta(thin.alpha, thin.kappa, thin.theta);
        out.Cplus = chebyshev(c * in.E_plus, thin.alpha);
        out.C = chebyshev(c * in.E_zero, thin.alpha);
        break;
    }
    case BoundBranch::ErgodicKappaZero: {
        const ThinParams &thin = require_thin(in);
        if (!thin.kappa_zero) throw MissingCertificate("kappa = 0 branch needs exact certificates");
        const double c = 2.0 / one_minus_cos(thin.theta);
        out.Cplus = chebyshev(c * in.E_plus, 2.0);
        out.C = chebyshev(c * in.E_zero, 2.0);
        break;
    }
    case BoundBranch::IidMarkov:
        out.Cplus = chebyshev(in.E_plus, 1.0);
        out.C = chebyshev(in.E_zero, 1.0);
        break;
    case BoundBranch::IidHoeffding: {
        if (!in.sup_phi) throw MissingSupBound("Hoeffding bound needs a finite sup of phi");
        const double s = *in.sup_phi;
        out.Cplus = {MatrixTailBound::Form::Hoeffding, 2.0, 1.0,
                     2.0 * (1.0 + in.L) * (1.0 + in.L) * s * s};
        out.C = {MatrixTailBound::Form::Hoeffding, 2.0, 1.0, 8.0 * s * s};
        break;
    }
    }
    return out;
}

std::pair<BoundReport, BoundReport> estimator_error_bounds(const BoundInputs &in, BoundBranch branch,
                                                           std::size_t m, double epsilon) {
    require_positive(epsilon, m);
    const MatrixBounds b = estimator_error_bounds(in, branch);
    return {report(in, branch, m, epsilon, b.C.evaluate(m, epsilon)),
            report(in, branch, m, epsilon, b.Cplus.evaluate(m, epsilon))};
}

MatrixBounds relaxed_estimator_bounds(const BoundInputs &in, BoundBranch branch) {
    MatrixBounds out = estimator_error_bounds(in, branch);
    const double phi2 = in.norm_phi_L2 * in.norm_phi_L2;
    const double b2 = in.norm_Cplus * in.norm_Cplus;
    const double inv_a2 = 1.0 / (in.norm_Cinv * in.norm_Cinv);
    switch (branch) {
    case BoundBranch::ErgodicLinear: {
        // <K phi, phi> <= ||phi||^2 and ||C||_F >= 1/||C^-1||_F. The C bound
        // is raised to the (I - K0)^{-1} constant, which dominates
        // ||K0 (I - K0)^{-1}|| whenever K0 is normal.
        const double r = 1.0 + 4.0 * std::max(require_resolvent(in.resolvent_norm),
                                              require_resolvent(in.k0_resolvent_norm));
        out.Cplus.coefficient = r * (phi2 - b2);
        out.C.coefficient = r * (phi2 - inv_a2);
        break;
    }
    case BoundBranch::IidMarkov:
        out.Cplus.coefficient = in.L * phi2 - b2;
        out.C.coefficient = phi2 - inv_a2;
        break;
    case BoundBranch::ErgodicSuperlinear:
    case BoundBranch::ErgodicKappaZero: {
        const double worst = std::max(in.E_plus, in.E_zero);
        const ThinParams &thin = require_thin(in);
        const double c = branch == BoundBranch::ErgodicKappaZero
                             ? 2.0 / one_minus_cos(thin.theta)
                             : C_alpha_kappa_theta(thin.alpha, thin.kappa, thin.theta);
        out.Cplus.coefficient = c * worst;
        out.C.coefficient = c * worst;
        break;
    }
    case BoundBranch::IidHoeffding: break;
    }
    return out;
}

BoundReport combine_bounds(const MatrixBounds &bounds, const BoundInputs &in, std::size_t m,
                           double epsilon, bool worst_case_tau) {
    require_positive(epsilon, m);
    require_cplus(in);
    const double a = in.norm_Cinv, b = in.norm_Cplus;
    double tau = 2.0 * a * b + epsilon;
    if (worst_case_tau) {
        if (epsilon >= 2.0) throw DomainError("worst-case tau holds for eps in (0, 2)");
        tau = std::sqrt(8.0 * (1.0 + a * a * b * b));
    }
    const double shrink = epsilon / tau;
    const double p = bounds.Cplus.evaluate(m, shrink * b) + bounds.C.evaluate(m, shrink / a);
    return report(in, bounds.branch, m, epsilon, p);
}

BoundReport composite_bound(const BoundInputs &in, BoundBranch branch, std::size_t m,
                            double epsilon) {
    switch (branch) {
    case BoundBranch::ErgodicLinear: return ergodic_linear_bound(in, m, epsilon);
    case BoundBranch::ErgodicSuperlinear:
    case BoundBranch::ErgodicKappaZero: return superlinear_bound(in, m, epsilon);
    case BoundBranch::IidMarkov: return iid_markov_bound(in, m, epsilon);
    case BoundBranch::IidHoeffding: return iid_hoeffding_bound(in, m, epsilon);
    }
    throw InvalidArgument("unknown bound branch");
}

std::size_t hoeffding_crossover(const BoundInputs &in, double epsilon) {
    auto below = [&](double m) {
        const auto mm = static_cast<std::size_t>(m);
        return iid_hoeffding_bound(in, mm, epsilon).p_bound < iid_markov_bound(in, mm, epsilon).p_bound;
    };
    // m * (2 e^{-c1 m} + 2 e^{-c2 m}) decreases beyond 1/min(c1, c2), so the
    // last crossing lies beyond that point.
    const double a = in.norm_Cinv, b = in.norm_Cplus;
    if (!in.sup_phi) throw MissingSupBound("Hoeffding bound needs a finite sup of phi");
    const double tau = (2.0 * a * b + epsilon) * *in.sup_phi;
    const double c1 = epsilon * epsilon * b * b / (2.0 * tau * tau * (1.0 + in.L) * (1.0 + in.L));
    const double c2 = epsilon * epsilon / (8.0 * tau * tau * a * a);
    double lo = std::max(1.0, std::ceil(1.0 / std::min(c1, c2)));
    if (below(lo)) {
        // the last crossing lies before lo; scan back to it
        if (lo > 1e7) throw NumericalError("Hoeffding crossover scan too long");
        auto m = static_cast<std::size_t>(lo);
        while (m > 1 && below(static_cast<double>(m - 1))) --m;
        return m;
    }
    double hi = 2.0 * lo;
    while (!below(hi)) {
        hi *= 2.0;
        if (hi > 1e18) throw NumericalError("no Hoeffding crossover below 1e18");
    }
    while (hi - lo > 1.0) {
        const double mid = std::floor((lo + hi) / 2.0);
        (below(mid) ? hi : lo) = mid;
    }
    return static_cast<std::size_t>(hi);
}

} // namespace koopman
