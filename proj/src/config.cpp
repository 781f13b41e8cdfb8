#include "koopman/config.hpp"

#include <cmath>
#include <cstdio>

#include "koopman/errors.hpp"

namespace koopman {

namespace {

template <typename T>
T get(const Json &j, const char *key) {
    if (!j.is_object() || !j.contains(key)) throw InvalidArgument(std::string("missing field \"") + key + "\"");
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("field \"") + key + "\": " + e.what());
    }
}

template <typename T>
T get_or(const Json &j, const char *key, T fallback) {
    return j.contains(key) ? get<T>(j, key) : fallback;
}

Vector initial_state(const Json &j, std::size_t dim) {
    if (!j.contains("initial_state")) return Vector::Zero(static_cast<Eigen::Index>(dim));
    Vector x = vector_from_json(j.at("initial_state"));
    if (x.size() != static_cast<Eigen::Index>(dim))
        throw DimensionMismatch("initial_state has the wrong dimension");
    return x;
}

System chain_from_json(const Json &j) {
    if (j.contains("transition")) return FiniteMarkovSystem(matrix_from_json(j.at("transition")));
    if (j.contains("two_state")) {
        const Json &t = j.at("two_state");
        return two_state_chain(get<double>(t, "p"), get<double>(t, "q"));
    }
    if (j.contains("random")) {
        const Json &r = j.at("random");
        return random_ergodic_chain(get<std::size_t>(r, "n_states"), get<std::uint64_t>(r, "seed"));
    }
    throw InvalidArgument("finite_chain needs \"transition\", \"two_state\" or \"random\"");
}

System circle_from_json(const Json &j) {
    if (!j.contains("t0")) throw InvalidArgument("circle_rotation needs \"t0\"");
    const Json &t = j.at("t0");
    if (t.is_string()) {
        if (t.get<std::string>() != "golden") throw InvalidArgument("unknown named angle " + t.dump());
        return CircleRotationSystem(QuadraticIrrational::golden());
    }
    if (t.is_number()) return CircleRotationSystem::from_angle(t.get<double>());
    QuadraticIrrational q{get<long>(t, "a"), get<long>(t, "b"), get<long>(t, "c"), get<long>(t, "d")};
    return CircleRotationSystem(q);
}

System noisy_map_from_json(const Json &j) {
    const Matrix a = matrix_from_json(j.at("matrix"));
    if (a.rows() != a.cols()) throw DimensionMismatch("noisy_map matrix must be square");
    const double std_dev = get<double>(j, "noise_std");
    if (!(std_dev >= 0.0)) throw DomainError("noise_std must be nonnegative");
    NoisyMapSystem sys;
    sys.state_dim = static_cast<std::size_t>(a.rows());
    sys.map = [a](std::span<const double> x, std::span<double> out) {
        Eigen::Map<const Vector> xv(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::Map<Vector>(out.data(), static_cast<Eigen::Index>(out.size())) = a * xv;
    };
    sys.noise = gaussian_noise(std_dev);
    sys.initial_state = initial_state(j, sys.state_dim);
    return sys;
}

System sde_from_json(const Json &j) {
    const auto kind = get<std::string>(j, "kind");
    const double sigma = get_or<double>(j, "sigma", 1.0);
    SdeSystem sys;
    sys.integrator_dt = get_or<double>(j, "dt", 1e-3);
    sys.lag = get_or<double>(j, "lag", 0.1);
    sys.initial_state = initial_state(j, 1);
    if (kind == "ornstein_uhlenbeck") {
        const double theta = get_or<double>(j, "theta", 1.0);
        sys.drift = [theta](std::span<const double> x, std::span<double> out) { out[0] = -theta * x[0]; };
    } else if (kind == "double_well") {
        sys.drift = [](std::span<const double> x, std::span<double> out) {
            out[0] = x[0] - x[0] * x[0] * x[0];
        };
    } else {
        throw UnsupportedSystem("unknown sde kind \"" + kind + "\"");
    }
    sys.diffusion = [sigma](std::span<const double>, Matrix &out) {
        out.resize(1, 1);
        out(0, 0) = sigma;
    };
    sys.substeps();  // validates dt and lag
    return sys;
}

} // namespace

System system_from_json(const Json &j) {
    const auto type = get<std::string>(j, "type");
    try {
        if (type == "finite_chain") return chain_from_json(j);
        if (type == "circle_rotation") return circle_from_json(j);
        if (type == "noisy_map") return noisy_map_from_json(j);
        if (type == "sde") return sde_from_json(j);
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("system config: ") + e.what());
    }
    throw UnsupportedSystem("unknown system type \"" + type + "\"");
}

Dictionary dictionary_from_json(const Json &j, const System &sys) {
    const auto kind = get<std::string>(j, "kind");
    const std::size_t dim = state_dim(sys);
    Dictionary dict = [&] {
        if (kind == "indicator") {
            const auto *chain = std::get_if<FiniteMarkovSystem>(&sys);
            if (!chain) throw UnsupportedSystem("indicator dictionaries need a finite chain");
            const auto n = get_or<std::size_t>(j, "n_states", chain->n_states());
            if (n != chain->n_states()) throw DimensionMismatch("n_states differs from the chain");
            return Dictionary::indicator(n);
        }
        if (kind == "fourier") return Dictionary::fourier(get<std::size_t>(j, "max_freq"));
        if (kind == "monomial")
            return Dictionary::monomial(get_or<std::size_t>(j, "dim", dim), get<std::size_t>(j, "degree"));
        if (kind == "rff")
            return Dictionary::random_fourier(get_or<std::size_t>(j, "dim", dim),
                                              get<std::size_t>(j, "n_features"),
                                              get<double>(j, "bandwidth"), get<std::uint64_t>(j, "seed"));
        throw InvalidArgument("unknown dictionary kind \"" + kind + "\"");
    }();
    if (dict.state_dim() != dim) throw DimensionMismatch("dictionary dimension differs from the system");
    if (j.contains("scale")) dict = dict.scaled(get<double>(j, "scale"));
    return dict;
}

Matrix matrix_from_json(const Json &j) {
    if (!j.is_array() || j.empty() || !j.front().is_array())
        throw InvalidArgument("matrix must be a nonempty array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = static_cast<Eigen::Index>(j.front().size());
    Matrix a(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const Json &row = j.at(static_cast<std::size_t>(i));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
            throw DimensionMismatch("matrix rows have different lengths");
        for (Eigen::Index k = 0; k < cols; ++k) {
            const Json &v = row.at(static_cast<std::size_t>(k));
            if (!v.is_number()) throw InvalidArgument("matrix entries must be numbers");
            a(i, k) = v.get<double>();
        }
    }
    return a;
}

Vector vector_from_json(const Json &j) {
    if (!j.is_array()) throw InvalidArgument("vector must be an array");
    Vector v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) {
        if (!j[i].is_number()) throw InvalidArgument("vector entries must be numbers");
        v(static_cast<Eigen::Index>(i)) = j[i].get<double>();
    }
    return v;
}

Json to_json(const Matrix &a) {
    Json rows = Json::array();
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        Json row = Json::array();
        for (Eigen::Index k = 0; k < a.cols(); ++k) row.push_back(a(i, k));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json to_json(const Vector &v) {
    Json out = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
    return out;
}

std::uint64_t config_hash(const Json &j) {
    std::uint64_t h = 14695981039346656037ULL;
    for (unsigned char c : j.dump()) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string hex(std::uint64_t value) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(value));
    return buf;
}

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", value);
    return buf;
}

namespace {

// JSON has no infinities; encode them as strings.
Json number(double value) {
    if (std::isfinite(value)) return value;
    return format_double(value);
}

template <typename T>
Json optional_number(const std::optional<T> &v) {
    return v ? number(*v) : Json(nullptr);
}

} // namespace

Json to_json(const GramPair &g) {
    Json j{{"C", to_json(g.C)}, {"Cplus", to_json(g.Cplus)}};
    if (g.provenance.kind == Provenance::Kind::Exact) {
        j["provenance"] = {{"kind", "exact"}};
    } else {
        j["provenance"] = {{"kind", "empirical"}, {"m", g.provenance.m}, {"seed", g.provenance.seed}};
    }
    return j;
}

Json to_json(const EdmdEstimate &est, std::uint64_t seed, std::uint64_t hash) {
    return {{"m", est.m},
            {"regime", to_string(est.regime)},
            {"seed", seed},
            {"config_hash", hex(hash)},
            {"gram", to_json(est.gram)},
            {"Khat", to_json(est.Khat)}};
}

Json to_json(const VarianceReport &r) {
    return {{"m", r.m},
            {"sigma2_plus", number(r.sigma2_plus)},
            {"sigma2_zero", number(r.sigma2_zero)},
            {"E_plus", number(r.E_plus)},
            {"E_zero", number(r.E_zero)},
            {"var_Cplus", number(r.var_Cplus)},
            {"var_C", number(r.var_C)}};
}

Json to_json(const OracleResult &r) {
    return {{"m", r.m},
            {"n_trials", r.n_trials},
            {"var_C_hat", number(r.var_C_hat)},
            {"var_Cplus_hat", number(r.var_Cplus_hat)},
            {"stderr_C", number(r.stderr_C)},
            {"stderr_Cplus", number(r.stderr_Cplus)}};
}

Json to_json(const SpectralMeasure &meas) {
    Json atoms = Json::array();
    for (const auto &a : meas.atoms) atoms.push_back({{"t", a.t}, {"weight", a.weight}});
    return {{"atoms", atoms}, {"total_mass", meas.total_mass}};
}

Json to_json(const ThinMeasureCertificate &cert) {
    return {{"alpha", cert.alpha}, {"theta", cert.theta}, {"kappa", number(cert.kappa)}, {"exact", cert.exact}};
}

Json to_json(const BoundInputs &in) {
    Json j{{"norm_Cinv", number(in.norm_Cinv)},
           {"norm_Cplus", number(in.norm_Cplus)},
           {"E_plus", number(in.E_plus)},
           {"E_zero", number(in.E_zero)},
           {"norm_phi_L2", number(in.norm_phi_L2)},
           {"sup_phi", optional_number(in.sup_phi)},
           {"L", number(in.L)},
           {"resolvent_norm", optional_number(in.resolvent_norm)},
           {"k0_resolvent_norm", optional_number(in.k0_resolvent_norm)},
           {"M_const", number(in.M_const)}};
    if (in.thin) {
        j["thin"] = {{"alpha", in.thin->alpha},
                     {"kappa", number(in.thin->kappa)},
                     {"theta", in.thin->theta},
                     {"kappa_zero", in.thin->kappa_zero}};
    } else {
        j["thin"] = nullptr;
    }
    return j;
}

Json to_json(const BoundReport &r) {
    return {{"epsilon", r.epsilon},
            {"m", r.m},
            {"p_bound", number(r.p_bound)},
            {"branch", to_string(r.branch)},
            {"constants_used", to_json(r.constants_used)}};
}

} // namespace koopman
