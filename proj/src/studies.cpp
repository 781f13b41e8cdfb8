#include "koopman/studies.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "koopman/errors.hpp"
#include "koopman/montecarlo.hpp"
#include "koopman/rng.hpp"
#include "koopman/variance.hpp"

namespace koopman {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
// stream id of the reference-model run, disjoint from any m
constexpr std::uint64_t kReferenceStream = 0x7265666572656e63ULL;

template <typename T>
T field(const Json &j, const char *key) {
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("study config field \"") + key + "\": " + e.what());
    }
}

bool has_exact_reference(const System &sys) {
    return std::holds_alternative<FiniteMarkovSystem>(sys) ||
           std::holds_alternative<CircleRotationSystem>(sys);
}

std::optional<KoopmanMatrixRep> try_rep(const System &sys, const Dictionary &dict) {
    if (std::holds_alternative<FiniteMarkovSystem>(sys)) return build_rep(sys, dict);
    if (std::holds_alternative<CircleRotationSystem>(sys) && dict.kind() == DictionaryKind::Fourier)
        return build_rep(sys, dict);
    return std::nullopt;
}

TrialSetup setup_for(const StudyProblem &p, const StudyConfig &cfg) {
    TrialSetup s;
    s.system = &p.system;
    s.dict = &p.dict;
    s.reference = &p.reference;
    s.regime = cfg.regime;
    s.mu0 = p.mu0;
    s.burn_in = cfg.burn_in;
    s.options.ridge = cfg.ridge;
    return s;
}

double rms(const std::vector<double> &v) {
    if (v.empty()) return kNaN;
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s / static_cast<double>(v.size()));
}

std::string join_doubles(const std::vector<double> &values) {
    std::string out;
    for (double v : values) out += "," + format_double(v);
    return out;
}

std::string quantile_label(double q) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q%g", q);
    return buf;
}

} // namespace

StudyConfig study_config_from_json(const Json &j) {
    if (!j.is_object()) throw InvalidArgument("study config must be a JSON object");
    StudyConfig cfg;
    for (const char *key : {"system", "dictionary", "m_grid"})
        if (!j.contains(key)) throw InvalidArgument(std::string("missing field \"") + key + "\"");
    cfg.system = j.at("system");
    cfg.dictionary = j.at("dictionary");
    const auto regime = j.value("regime", std::string("ergodic"));
    if (regime == "ergodic") cfg.regime = Regime::Ergodic;
    else if (regime == "iid") cfg.regime = Regime::Iid;
    else throw InvalidArgument("regime must be \"ergodic\" or \"iid\"");
    cfg.m_grid = field<std::vector<std::size_t>>(j, "m_grid");
    if (j.contains("n_trials")) cfg.n_trials = field<std::size_t>(j, "n_trials");
    if (j.contains("seed")) cfg.seed = field<std::uint64_t>(j, "seed");
    if (j.contains("error_quantiles")) cfg.error_quantiles = field<std::vector<double>>(j, "error_quantiles");
    if (j.contains("burn_in")) cfg.burn_in = field<std::size_t>(j, "burn_in");
    if (j.contains("iid_weights")) cfg.iid_weights = field<std::vector<double>>(j, "iid_weights");
    if (j.contains("reference_m")) cfg.reference_m = field<std::size_t>(j, "reference_m");
    if (j.contains("epsilon_grid")) cfg.epsilon_grid = field<std::vector<double>>(j, "epsilon_grid");
    if (j.contains("alpha")) cfg.alpha = field<double>(j, "alpha");
    if (j.contains("theta")) cfg.theta = field<double>(j, "theta");
    if (j.contains("ridge")) cfg.ridge = field<double>(j, "ridge");
    if (j.contains("threads")) cfg.threads = field<unsigned>(j, "threads");

    if (cfg.m_grid.empty()) throw InvalidArgument("m_grid must not be empty");
    for (std::size_t i = 0; i < cfg.m_grid.size(); ++i) {
        if (cfg.m_grid[i] < 1) throw InvalidArgument("m_grid entries must be positive");
        if (i > 0 && cfg.m_grid[i] <= cfg.m_grid[i - 1])
            throw InvalidArgument("m_grid must be strictly increasing");
    }
    if (cfg.n_trials < 30) throw InvalidArgument("n_trials must be at least 30");
    for (double q : cfg.error_quantiles)
        if (!(q > 0.0 && q < 1.0)) throw DomainError("error quantiles must lie in (0, 1)");
    for (double e : cfg.epsilon_grid)
        if (!(e > 0.0)) throw DomainError("epsilon_grid entries must be positive");
    if (cfg.ridge < 0.0) throw DomainError("ridge must be nonnegative");
    if (cfg.alpha.has_value() != cfg.theta.has_value())
        throw InvalidArgument("alpha and theta must be given together");
    return cfg;
}

Json to_json(const StudyConfig &cfg) {
    Json j{{"system", cfg.system},
           {"dictionary", cfg.dictionary},
           {"regime", to_string(cfg.regime)},
           {"m_grid", cfg.m_grid},
           {"n_trials", cfg.n_trials},
           {"seed", cfg.seed},
           {"error_quantiles", cfg.error_quantiles},
           {"epsilon_grid", cfg.epsilon_grid},
           {"ridge", cfg.ridge}};
    if (cfg.burn_in) j["burn_in"] = *cfg.burn_in;
    if (cfg.iid_weights) j["iid_weights"] = *cfg.iid_weights;
    if (cfg.reference_m) j["reference_m"] = *cfg.reference_m;
    if (cfg.alpha) j["alpha"] = *cfg.alpha;
    if (cfg.theta) j["theta"] = *cfg.theta;
    return j;
}

StudyProblem make_problem(const StudyConfig &cfg) {
    System sys = system_from_json(cfg.system);
    Dictionary dict = dictionary_from_json(cfg.dictionary, sys);
    StudyProblem p{std::move(sys), std::move(dict), {}, std::nullopt, {}, 1.0, false};

    const auto *chain = std::get_if<FiniteMarkovSystem>(&p.system);
    if (cfg.iid_weights && !chain) throw InvalidArgument("iid_weights apply to finite chains only");

    if (cfg.regime == Regime::Iid) {
        if (!has_exact_reference(p.system))
            throw UnsupportedSystem("i.i.d. studies need a finite chain or circle rotation");
        if (chain) {
            const Vector nu = cfg.iid_weights
                                  ? Eigen::Map<const Vector>(cfg.iid_weights->data(),
                                                             static_cast<Eigen::Index>(cfg.iid_weights->size()))
                                        .eval()
                                  : chain->invariant();
            if (nu.size() != static_cast<Eigen::Index>(chain->n_states()))
                throw DimensionMismatch("iid_weights length differs from the chain");
            p.mu0 = categorical_sampler(nu);
            p.L = chain_L_constant(*chain, nu);
            p.rep = build_rep(*chain, nu);
            p.reference = galerkin_matrix(exact_gram(*chain, p.dict, nu));
        } else {
            p.mu0 = invariant_sampler(p.system);
            p.rep = try_rep(p.system, p.dict);
            p.reference = galerkin_matrix(exact_gram(p.system, p.dict));
        }
        return p;
    }

    if (has_exact_reference(p.system) && !cfg.reference_m) {
        p.rep = try_rep(p.system, p.dict);
        p.reference = galerkin_matrix(exact_gram(p.system, p.dict));
        return p;
    }
    if (!cfg.reference_m) throw InvalidArgument("systems without an exact reference need reference_m");
    // reference-model mode: one long run plays the role of the truth
    const std::uint64_t ref_seed = derive_seed(cfg.seed, kReferenceStream);
    const EdmdEstimate ref = edmd_estimate(
        p.dict, sample_ergodic(p.system, *cfg.reference_m, cfg.burn_in, ref_seed), {cfg.ridge});
    p.reference.KV = ref.Khat;
    p.reference.source = ref.gram;
    p.reference_model = true;
    return p;
}

double quantile(std::vector<double> values, double q) {
    if (values.empty()) return kNaN;
    std::sort(values.begin(), values.end());
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return values[lo] + frac * (values[hi] - values[lo]);
}

ConvergenceResult run_convergence_study(const StudyConfig &cfg) {
    const StudyProblem p = make_problem(cfg);
    const TrialSetup setup = setup_for(p, cfg);
    ConvergenceResult result;
    result.table.quantiles = cfg.error_quantiles;
    result.table.reference_model = p.reference_model;
    result.table.config_hash = config_hash(to_json(cfg));

    const std::size_t cap = p.reference_model ? *cfg.reference_m / 10 : std::numeric_limits<std::size_t>::max();
    for (std::size_t m : cfg.m_grid) {
        if (m > cap) continue;
        const auto outcomes = run_trials(setup, m, cfg.n_trials, cfg.seed, cfg.threads);
        std::vector<double> ec, ecp, ek;
        ConvergenceRow row;
        row.m = m;
        row.n_trials = cfg.n_trials;
        for (const auto &o : outcomes) {
            ec.push_back(o.err_C);
            ecp.push_back(o.err_Cplus);
            if (o.singular) ++row.n_singular;
            else ek.push_back(o.err_K);
        }
        row.rmse_C = rms(ec);
        row.rmse_Cplus = rms(ecp);
        row.rmse_K = rms(ek);
        for (double q : cfg.error_quantiles) {
            row.quantiles_C.push_back(quantile(ec, q));
            row.quantiles_Cplus.push_back(quantile(ecp, q));
            row.quantiles_K.push_back(quantile(ek, q));
        }
        row.theory_rmse_C = row.theory_rmse_Cplus = kNaN;
        if (p.rep && !p.reference_model) {
            if (cfg.regime == Regime::Ergodic) {
                const VarianceReport v = exact_variance(*p.rep, p.dict, m);
                row.theory_rmse_C = std::sqrt(v.var_C);
                row.theory_rmse_Cplus = std::sqrt(v.var_Cplus);
            } else {
                const VarianceReport v = exact_variance(*p.rep, p.dict, 1);
                row.theory_rmse_C = std::sqrt(v.E_zero / static_cast<double>(m));
                row.theory_rmse_Cplus = std::sqrt(v.E_plus / static_cast<double>(m));
            }
        }
        result.table.rows.push_back(std::move(row));
    }
    auto fit_or_empty = [&](Metric metric) {
        try {
            return fit_rate(result.table, metric);
        } catch (const InsufficientPoints &) {
            return RateFit{kNaN, kNaN, kNaN, kNaN, 0};
        }
    };
    result.fit_C = fit_or_empty(Metric::C);
    result.fit_Cplus = fit_or_empty(Metric::Cplus);
    result.fit_K = fit_or_empty(Metric::K);
    return result;
}

RateFit fit_rate(std::span<const double> m, std::span<const double> values) {
    if (m.size() != values.size()) throw DimensionMismatch("m and values differ in length");
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] > 0.0 && values[i] > 0.0 && std::isfinite(values[i])) {
            xs.push_back(std::log(m[i]));
            ys.push_back(std::log(values[i]));
        }
    }
    const std::size_t n = xs.size();
    if (n < 4) throw InsufficientPoints("rate fit needs at least 4 positive points");
    const double nd = static_cast<double>(n);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        mx += xs[i];
        my += ys[i];
    }
    mx /= nd;
    my /= nd;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        sxy += (xs[i] - mx) * (ys[i] - my);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0) throw InsufficientPoints("rate fit needs distinct m values");
    RateFit fit;
    fit.n_points = n;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = ys[i] - (fit.intercept + fit.slope * xs[i]);
        ss_res += r * r;
    }
    fit.r2 = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    fit.slope_stderr = std::sqrt(ss_res / (nd - 2.0) / sxx);
    return fit;
}

RateFit fit_rate(const ConvergenceTable &table, Metric metric) {
    std::vector<double> ms, vs;
    for (const auto &row : table.rows) {
        ms.push_back(static_cast<double>(row.m));
        vs.push_back(metric == Metric::C ? row.rmse_C : metric == Metric::Cplus ? row.rmse_Cplus : row.rmse_K);
    }
    return fit_rate(ms, vs);
}

bool within_three_sigma(double exact, double mc, double stderr_value) {
    return std::abs(exact - mc) <= 3.0 * stderr_value + 1e-12 * std::max(1.0, std::abs(exact));
}

std::vector<VarianceCheckRow> run_variance_check(const StudyConfig &cfg) {
    const StudyProblem p = make_problem(cfg);
    if (!p.rep || p.reference_model)
        throw UnsupportedSystem("variance check needs an exact representation");
    OracleOptions opts;
    opts.regime = cfg.regime;
    opts.mu0 = p.mu0;
    opts.reference = p.reference.source;
    opts.burn_in = cfg.burn_in;
    opts.threads = cfg.threads;
    std::vector<VarianceCheckRow> rows;
    for (std::size_t m : cfg.m_grid) {
        VarianceCheckRow row;
        row.m = m;
        if (cfg.regime == Regime::Ergodic) {
            const VarianceReport v = exact_variance(*p.rep, p.dict, m);
            row.var_C_exact = v.var_C;
            row.var_Cplus_exact = v.var_Cplus;
        } else {
            const VarianceReport v = exact_variance(*p.rep, p.dict, 1);
            row.var_C_exact = v.E_zero / static_cast<double>(m);
            row.var_Cplus_exact = v.E_plus / static_cast<double>(m);
        }
        const OracleResult o = montecarlo_variance_oracle(p.system, p.dict, m, cfg.n_trials, cfg.seed, opts);
        row.var_C_mc = o.var_C_hat;
        row.stderr_C = o.stderr_C;
        row.var_Cplus_mc = o.var_Cplus_hat;
        row.stderr_Cplus = o.stderr_Cplus;
        row.within_3sigma = within_three_sigma(row.var_C_exact, row.var_C_mc, row.stderr_C) &&
                            within_three_sigma(row.var_Cplus_exact, row.var_Cplus_mc, row.stderr_Cplus);
        rows.push_back(row);
    }
    return rows;
}

BoundGrid run_bound_grid(const StudyConfig &cfg) {
    const StudyProblem p = make_problem(cfg);
    if (!p.rep || p.reference_model) throw UnsupportedSystem("bounds need an exact representation");
    BoundInputOptions opts;
    opts.L = p.L;
    opts.alpha = cfg.alpha;
    opts.theta = cfg.theta;
    BoundGrid grid;
    grid.inputs = make_bound_inputs(*p.rep, p.dict, opts);
    grid.config_hash = config_hash(to_json(cfg));
    if (cfg.regime == Regime::Ergodic) {
        if (grid.inputs.resolvent_norm) grid.branches.push_back(BoundBranch::ErgodicLinear);
        if (grid.inputs.thin)
            grid.branches.push_back(grid.inputs.thin->kappa_zero ? BoundBranch::ErgodicKappaZero
                                                                 : BoundBranch::ErgodicSuperlinear);
    } else {
        grid.branches.push_back(BoundBranch::IidMarkov);
        if (grid.inputs.sup_phi) grid.branches.push_back(BoundBranch::IidHoeffding);
    }
    if (grid.branches.empty()) throw NoSpectralGap("no bound applies: no spectral gap and no thin-measure parameters");

    const TrialSetup setup = setup_for(p, cfg);
    for (std::size_t m : cfg.m_grid) {
        const auto outcomes = run_trials(setup, m, cfg.n_trials, cfg.seed, cfg.threads);
        std::size_t singular = 0;
        for (const auto &o : outcomes) singular += o.singular ? 1 : 0;
        for (BoundBranch branch : grid.branches) {
            for (double eps : cfg.epsilon_grid) {
                BoundGridRow row;
                row.branch = branch;
                row.m = m;
                row.epsilon = eps;
                try {
                    row.p_bound = composite_bound(grid.inputs, branch, m, eps).p_bound;
                } catch (const DomainError &) {
                    continue;  // outside the branch's range of eps
                }
                std::size_t exceed = 0;
                for (const auto &o : outcomes) exceed += (o.singular || o.err_K > eps) ? 1 : 0;
                const double n = static_cast<double>(outcomes.size());
                row.n_trials = outcomes.size();
                row.n_singular = singular;
                row.p_empirical = static_cast<double>(exceed) / n;
                row.stderr_empirical = std::sqrt(row.p_empirical * (1.0 - row.p_empirical) / n);
                grid.rows.push_back(row);
            }
        }
    }
    return grid;
}

bool bound_grid_valid(const BoundGrid &grid) {
    for (const auto &row : grid.rows)
        if (row.p_bound <= 0.5 && row.p_empirical > row.p_bound + 3.0 * row.stderr_empirical) return false;
    return true;
}

std::string to_csv(const ConvergenceTable &table) {
    std::ostringstream out;
    out << "# schema: koopman-cert/convergence/v1\n";
    out << "# config_hash: " << hex(table.config_hash) << "\n";
    out << "# reference_model: " << (table.reference_model ? "true" : "false") << "\n";
    out << "m,n_trials,n_singular,rmse_C,rmse_Cplus,rmse_K";
    for (const char *metric : {"C", "Cplus", "K"})
        for (double q : table.quantiles) out << "," << quantile_label(q) << "_" << metric;
    out << ",theory_rmse_C,theory_rmse_Cplus\n";
    for (const auto &r : table.rows) {
        out << r.m << "," << r.n_trials << "," << r.n_singular << "," << format_double(r.rmse_C) << ","
            << format_double(r.rmse_Cplus) << "," << format_double(r.rmse_K)
            << join_doubles(r.quantiles_C) << join_doubles(r.quantiles_Cplus) << join_doubles(r.quantiles_K)
            << "," << format_double(r.theory_rmse_C) << "," << format_double(r.theory_rmse_Cplus) << "\n";
    }
    return out.str();
}

std::string to_csv(const std::vector<VarianceCheckRow> &rows, std::uint64_t hash) {
    std::ostringstream out;
    out << "# schema: koopman-cert/variance/v1\n";
    out << "# config_hash: " << hex(hash) << "\n";
    out << "m,var_C_exact,var_C_mc,stderr_C,var_Cplus_exact,var_Cplus_mc,stderr_Cplus,within_3sigma\n";
    for (const auto &r : rows) {
        out << r.m << "," << format_double(r.var_C_exact) << "," << format_double(r.var_C_mc) << ","
            << format_double(r.stderr_C) << "," << format_double(r.var_Cplus_exact) << ","
            << format_double(r.var_Cplus_mc) << "," << format_double(r.stderr_Cplus) << ","
            << (r.within_3sigma ? "true" : "false") << "\n";
    }
    return out.str();
}

std::string to_csv(const BoundGrid &grid) {
    std::ostringstream out;
    out << "# schema: koopman-cert/bounds/v1\n";
    out << "# config_hash: " << hex(grid.config_hash) << "\n";
    out << "branch,m,epsilon,p_bound,p_empirical,stderr_empirical,n_trials,n_singular\n";
    for (const auto &r : grid.rows) {
        out << to_string(r.branch) << "," << r.m << "," << format_double(r.epsilon) << ","
            << format_double(r.p_bound) << "," << format_double(r.p_empirical) << ","
            << format_double(r.stderr_empirical) << "," << r.n_trials << "," << r.n_singular << "\n";
    }
    return out.str();
}

namespace {

Json num(double v) {
    if (std::isfinite(v)) return v;
    return format_double(v);
}

} // namespace

Json to_json(const RateFit &fit) {
    return {{"slope", num(fit.slope)},
            {"intercept", num(fit.intercept)},
            {"r2", num(fit.r2)},
            {"slope_stderr", num(fit.slope_stderr)},
            {"n_points", fit.n_points}};
}

Json to_json(const ConvergenceResult &result) {
    Json rows = Json::array();
    for (const auto &r : result.table.rows) {
        Json q = Json::object();
        for (std::size_t i = 0; i < result.table.quantiles.size(); ++i) {
            const std::string label = quantile_label(result.table.quantiles[i]);
            q[label] = {{"C", num(r.quantiles_C[i])}, {"Cplus", num(r.quantiles_Cplus[i])}, {"K", num(r.quantiles_K[i])}};
        }
        rows.push_back({{"m", r.m},
                        {"n_trials", r.n_trials},
                        {"n_singular", r.n_singular},
                        {"rmse_C", num(r.rmse_C)},
                        {"rmse_Cplus", num(r.rmse_Cplus)},
                        {"rmse_K", num(r.rmse_K)},
                        {"quantiles", q},
                        {"theory_rmse_C", num(r.theory_rmse_C)},
                        {"theory_rmse_Cplus", num(r.theory_rmse_Cplus)}});
    }
    return {{"schema", "koopman-cert/convergence/v1"},
            {"config_hash", hex(result.table.config_hash)},
            {"reference_model", result.table.reference_model},
            {"rows", rows},
            {"fit", {{"C", to_json(result.fit_C)}, {"Cplus", to_json(result.fit_Cplus)}, {"K", to_json(result.fit_K)}}}};
}

Json to_json(const std::vector<VarianceCheckRow> &rows) {
    Json out = Json::array();
    for (const auto &r : rows) {
        out.push_back({{"m", r.m},
                       {"var_C_exact", num(r.var_C_exact)},
                       {"var_C_mc", num(r.var_C_mc)},
                       {"stderr_C", num(r.stderr_C)},
                       {"var_Cplus_exact", num(r.var_Cplus_exact)},
                       {"var_Cplus_mc", num(r.var_Cplus_mc)},
                       {"stderr_Cplus", num(r.stderr_Cplus)},
                       {"within_3sigma", r.within_3sigma}});
    }
    return out;
}

Json to_json(const BoundGrid &grid) {
    Json rows = Json::array();
    for (const auto &r : grid.rows) {
        rows.push_back({{"branch", to_string(r.branch)},
                        {"m", r.m},
                        {"epsilon", r.epsilon},
                        {"p_bound", num(r.p_bound)},
                        {"p_empirical", num(r.p_empirical)},
                        {"stderr_empirical", num(r.stderr_empirical)},
                        {"n_trials", r.n_trials},
                        {"n_singular", r.n_singular}});
    }
    Json branches = Json::array();
    for (BoundBranch b : grid.branches) branches.push_back(to_string(b));
    return {{"schema", "koopman-cert/bounds/v1"},
            {"config_hash", hex(grid.config_hash)},
            {"inputs", to_json(grid.inputs)},
            {"branches", branches},
            {"rows", rows}};
}

} // namespace koopman
