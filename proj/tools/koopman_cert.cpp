// koopman-cert: EDMD estimation, exact variances, bounds and convergence studies.
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "koopman/config.hpp"
#include "koopman/edmd.hpp"
#include "koopman/errors.hpp"
#include "koopman/montecarlo.hpp"
#include "koopman/studies.hpp"

namespace fs = std::filesystem;
using namespace koopman;

namespace {

struct Options {
    std::string config;
    std::string out = ".";
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::string format = "csv";
};

StudyConfig load(const Options &opt) {
    std::ifstream in(opt.config);
    if (!in) throw InvalidArgument("cannot open config " + opt.config);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw InvalidArgument(std::string("config is not valid JSON: ") + e.what());
    }
    StudyConfig cfg = study_config_from_json(j);
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.threads) cfg.threads = *opt.threads;
    return cfg;
}

void write(const Options &opt, const std::string &name, const std::string &content) {
    fs::create_directories(opt.out);
    const fs::path path = fs::path(opt.out) / name;
    std::ofstream out(path);
    if (!out) throw InvalidArgument("cannot write " + path.string());
    out << content;
    std::cout << "wrote " << path.string() << "\n";
}

void emit(const Options &opt, const std::string &stem, const std::string &csv, const Json &json) {
    if (opt.format == "json") write(opt, stem + ".json", json.dump(2) + "\n");
    else write(opt, stem + ".csv", csv);
}

void cmd_study(const Options &opt) {
    const StudyConfig cfg = load(opt);
    const ConvergenceResult r = run_convergence_study(cfg);
    emit(opt, "convergence", to_csv(r.table), to_json(r));
    std::cout << "slope C " << format_double(r.fit_C.slope) << ", C+ " << format_double(r.fit_Cplus.slope)
              << ", K " << format_double(r.fit_K.slope) << "\n";
}

void cmd_variance(const Options &opt) {
    const StudyConfig cfg = load(opt);
    const auto rows = run_variance_check(cfg);
    emit(opt, "variance", to_csv(rows, config_hash(to_json(cfg))), to_json(rows));
    std::size_t ok = 0;
    for (const auto &r : rows) ok += r.within_3sigma ? 1 : 0;
    std::cout << ok << "/" << rows.size() << " rows within 3 sigma\n";
}

void cmd_bounds(const Options &opt) {
    const StudyConfig cfg = load(opt);
    const BoundGrid grid = run_bound_grid(cfg);
    write(opt, "bounds.json", to_json(grid).dump(2) + "\n");
    if (opt.format == "csv") write(opt, "bounds.csv", to_csv(grid));
    std::cout << "bounds " << (bound_grid_valid(grid) ? "valid" : "VIOLATED") << " on the grid\n";
}

void cmd_estimate(const Options &opt) {
    const StudyConfig cfg = load(opt);
    const StudyProblem p = make_problem(cfg);
    const std::size_t m = cfg.m_grid.back();
    const SamplePairs pairs = cfg.regime == Regime::Ergodic ? sample_ergodic(p.system, m, cfg.burn_in, cfg.seed)
                                                            : sample_iid(p.system, p.mu0, m, cfg.seed);
    const EdmdEstimate est = edmd_estimate(p.dict, pairs, {cfg.ridge});
    Json j = to_json(est, cfg.seed, config_hash(to_json(cfg)));
    const EstimationError err = estimation_error(est, p.reference);
    j["error"] = {{"err_K", err.err_K}, {"err_C", err.err_C}, {"err_Cplus", err.err_Cplus},
                  {"reference_model", p.reference_model}};
    j["reference"] = {{"KV", to_json(p.reference.KV)}, {"gram", to_json(p.reference.source)}};
    write(opt, "estimate.json", j.dump(2) + "\n");
}

void cmd_simulate(const Options &opt) {
    const StudyConfig cfg = load(opt);
    const StudyProblem p = make_problem(cfg);
    const std::size_t m = cfg.m_grid.back();
    const SamplePairs pairs = cfg.regime == Regime::Ergodic ? sample_ergodic(p.system, m, cfg.burn_in, cfg.seed)
                                                            : sample_iid(p.system, p.mu0, m, cfg.seed);
    const auto d = pairs.xs.rows();
    if (opt.format == "json") {
        write(opt, "samples.json",
              Json{{"regime", to_string(pairs.regime)}, {"seed", pairs.seed},
                   {"xs", to_json(Matrix(pairs.xs.transpose()))}, {"ys", to_json(Matrix(pairs.ys.transpose()))}}
                      .dump() + "\n");
        return;
    }
    std::ostringstream out;
    out << "# schema: koopman-cert/samples/v1\n# seed: " << cfg.seed << "\n";
    for (Eigen::Index i = 0; i < d; ++i) out << (i ? "," : "") << "x" << i;
    for (Eigen::Index i = 0; i < d; ++i) out << ",y" << i;
    out << "\n";
    for (Eigen::Index k = 0; k < pairs.xs.cols(); ++k) {
        for (Eigen::Index i = 0; i < d; ++i) out << (i ? "," : "") << format_double(pairs.xs(i, k));
        for (Eigen::Index i = 0; i < d; ++i) out << "," << format_double(pairs.ys(i, k));
        out << "\n";
    }
    write(opt, "samples.csv", out.str());
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"EDMD estimation with exact variances and concentration bounds"};
    app.require_subcommand(1);
    Options opt;
    std::uint64_t seed = 0;
    unsigned threads = 0;

    struct Sub {
        const char *name;
        const char *help;
        void (*run)(const Options &);
    };
    const Sub subs[] = {
        {"study", "convergence-rate study (RMSE vs m, rate fit)", cmd_study},
        {"variance", "exact variances against the Monte Carlo oracle", cmd_variance},
        {"bounds", "bound constants and validity grid", cmd_bounds},
        {"estimate", "single EDMD estimate at the largest m", cmd_estimate},
        {"simulate", "sample training pairs at the largest m", cmd_simulate},
    };
    std::vector<std::pair<CLI::App *, const Sub *>> commands;
    for (const auto &s : subs) {
        CLI::App *sub = app.add_subcommand(s.name, s.help);
        sub->add_option("--config", opt.config, "study config JSON")->required()->check(CLI::ExistingFile);
        sub->add_option("--out", opt.out, "output directory");
        sub->add_option("--seed", seed, "override the config seed");
        sub->add_option("--threads", threads, "worker threads (0 = all cores)");
        sub->add_option("--format", opt.format, "csv or json")->check(CLI::IsMember({"csv", "json"}));
        commands.emplace_back(sub, &s);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    for (auto &[sub, s] : commands) {
        if (!sub->parsed()) continue;
        if (sub->count("--seed")) opt.seed = seed;
        if (sub->count("--threads")) opt.threads = threads;
        try {
            s->run(opt);
            return 0;
        } catch (const ConfigError &e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const NumericalError &e) {
            std::cerr << "numerical error: " << e.what() << "\n";
            return 3;
        } catch (const std::exception &e) {
            std::cerr << "error: " << e.what() << "\n";
            return 1;
        }
    }
    return 2;
}
