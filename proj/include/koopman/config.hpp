// JSON configuration of systems and dictionaries, and JSON views of the
// library's result types.
#pragma once

#include <cstdint>
#include <string>

#include <json.hpp>

#include "koopman/bounds.hpp"
#include "koopman/dictionaries.hpp"
#include "koopman/edmd.hpp"
#include "koopman/galerkin.hpp"
#include "koopman/spectral.hpp"
#include "koopman/systems.hpp"
#include "koopman/variance.hpp"

namespace koopman {

using Json = nlohmann::json;

/**
 * {"type": "finite_chain", "transition": [[...], ...]}
 * {"type": "finite_chain", "two_state": {"p": 0.3, "q": 0.3}}
 * {"type": "finite_chain", "random": {"n_states": 5, "seed": 11}}
 * {"type": "circle_rotation", "t0": "golden" | {"a":-1,"b":1,"c":2,"d":5} | 0.25}
 * {"type": "noisy_map", "matrix": [[...]], "noise_std": 0.1, "initial_state": [...]}
 * {"type": "sde", "kind": "ornstein_uhlenbeck" | "double_well", "theta": 1,
 *  "sigma": 0.5, "dt": 1e-3, "lag": 0.1, "initial_state": [0]}
 * Throws ConfigError subclasses on malformed input.
 */
System system_from_json(const Json &j);

/**
 * {"kind": "indicator"} (size taken from the chain), {"kind": "fourier", "max_freq": 2},
 * {"kind": "monomial", "degree": 3}, {"kind": "rff", "n_features": 100,
 * "bandwidth": 2.0, "seed": 7}; optional "scale".
 */
Dictionary dictionary_from_json(const Json &j, const System &sys);

Matrix matrix_from_json(const Json &j);
Vector vector_from_json(const Json &j);
Json to_json(const Matrix &a);
Json to_json(const Vector &v);

/// FNV-1a over the canonical dump of the config.
std::uint64_t config_hash(const Json &j);
std::string hex(std::uint64_t value);
/// Round-trip decimal representation (%.17g); "nan", "inf", "-inf" otherwise.
std::string format_double(double value);

Json to_json(const GramPair &g);
Json to_json(const EdmdEstimate &est, std::uint64_t seed, std::uint64_t hash);
Json to_json(const VarianceReport &r);
Json to_json(const OracleResult &r);
Json to_json(const SpectralMeasure &meas);
Json to_json(const ThinMeasureCertificate &cert);
Json to_json(const BoundInputs &in);
Json to_json(const BoundReport &r);

} // namespace koopman
