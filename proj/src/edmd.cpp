#include "koopman/edmd.hpp"

#include <string>

#include "koopman/errors.hpp"

namespace koopman {

namespace {
constexpr double kRelativeSingularCutoff = 1e-12;
}

GramPair empirical_gram(const Dictionary &dict, const SamplePairs &pairs) {
    const std::size_t m = pairs.size();
    if (m < 1) throw InvalidArgument("empirical_gram needs at least one pair");
    const Matrix psi_x = evaluate_batch(dict, pairs.xs);
    const Matrix psi_y = evaluate_batch(dict, pairs.ys);
    GramPair gram;
    gram.C = psi_x * psi_x.transpose() / static_cast<double>(m);
    gram.Cplus = psi_x * psi_y.transpose() / static_cast<double>(m);
    gram.provenance = Provenance::empirical(m, pairs.seed);
    return gram;
}

bool empirically_invertible(const Matrix &c_hat) {
    Eigen::JacobiSVD<Matrix> svd(c_hat);
    const auto &s = svd.singularValues();
    return s.size() > 0 && s(s.size() - 1) > kRelativeSingularCutoff * s(0);
}

EdmdEstimate edmd_from_gram(const GramPair &gram, Regime regime, const EdmdOptions &options) {
    Matrix c = gram.C;
    if (options.ridge != 0.0) c.diagonal().array() += options.ridge;
    if (!empirically_invertible(c))
        throw SingularEmpiricalMass("empirical mass matrix is numerically singular (m = " +
                                    std::to_string(gram.provenance.m) + ", N = " +
                                    std::to_string(gram.C.rows()) + ")");
    EdmdEstimate est;
    est.gram = gram;
    est.Khat = c.colPivHouseholderQr().solve(gram.Cplus);
    est.m = gram.provenance.m;
    est.regime = regime;
    return est;
}

EdmdEstimate edmd_estimate(const Dictionary &dict, const SamplePairs &pairs,
                           const EdmdOptions &options) {
    return edmd_from_gram(empirical_gram(dict, pairs), pairs.regime, options);
}

EstimationError estimation_error(const EdmdEstimate &est, const KoopmanGalerkinMatrix &ref) {
    if (est.Khat.rows() != ref.KV.rows() || est.Khat.cols() != ref.KV.cols() ||
        est.gram.C.rows() != ref.source.C.rows())
        throw DimensionMismatch("estimate and reference use dictionaries of different size");
    return {(ref.KV - est.Khat).norm(), (ref.source.C - est.gram.C).norm(),
            (ref.source.Cplus - est.gram.Cplus).norm()};
}

} // namespace koopman
