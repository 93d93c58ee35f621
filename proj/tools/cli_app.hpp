#pragma once

// diffvote command-line front end: generate, optimize, experiment, check.
//
// Exit codes: 0 success, 1 property failure, 2 input validation,
// 3 runtime abort.

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "diffvote/diffvote.hpp"

namespace diffvote::cli {

enum ExitCode : int { kOk = 0, kPropertyFailure = 1, kValidation = 2, kRuntimeAbort = 3 };

namespace detail {

using nlohmann::json;

inline json read_json_file(const std::string& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw ValidationError(std::string("cannot read ") + what + " file '" + path + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("cannot parse ") + what + " file '" + path + "': " + e.what());
    }
}

inline void write_output(const std::string& path, const std::string& content, std::ostream& out) {
    if (path.empty() || path == "-") {
        out << content;
        return;
    }
    std::ofstream file(path, std::ios::binary);
    if (!file) throw ValidationError("cannot write output file '" + path + "'");
    file << content;
    if (!file) throw ValidationError("failed writing output file '" + path + "'");
}

// --seed, then DIFFVOTE_SEED, then 0.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("DIFFVOTE_SEED")) {
        try {
            std::size_t used = 0;
            const auto v = std::stoull(env, &used);
            if (used == std::string(env).size()) return v;
        } catch (const std::exception&) {
        }
        throw ValidationError(std::string("DIFFVOTE_SEED is not an unsigned integer: '") + env + "'");
    }
    return 0;
}

template <typename T>
T pick(const std::optional<T>& flag, const json& config, const char* key, T fallback);

// --seed, then the config's "seed", then DIFFVOTE_SEED, then 0.
inline std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag, const json& config) {
    if (flag || !config.contains("seed")) return resolve_seed(flag);
    return pick<std::uint64_t>(std::nullopt, config, "seed", 0);
}

template <typename T>
T pick(const std::optional<T>& flag, const json& config, const char* key, T fallback) {
    if (flag) return *flag;
    if (config.contains(key)) {
        try {
            return config.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ValidationError(std::string("config key \"") + key + "\": " + e.what());
        }
    }
    return fallback;
}

inline std::string join(const std::vector<std::size_t>& xs) {
    std::string s;
    for (std::size_t k = 0; k < xs.size(); ++k) s += (k ? " " : "") + std::to_string(xs[k]);
    return s;
}

inline std::string fmt17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace detail

struct GenerateArgs {
    std::optional<std::string> regime;
    std::optional<std::size_t> m;
    std::optional<double> scale;
    std::optional<std::uint64_t> seed;
    std::string config;
    std::string out = "-";
    bool oracles = false;
};

inline int cmd_generate(const GenerateArgs& args, std::ostream& out) {
    using namespace detail;
    const json config = args.config.empty() ? json::object() : read_json_file(args.config, "config");
    const auto regime_name = pick<std::string>(args.regime, config, "regime", "");
    if (regime_name.empty()) throw ValidationError("missing required option --regime");
    const auto m = pick<std::size_t>(args.m, config, "m", 0);
    if (!args.m && !config.contains("m")) throw ValidationError("missing required option --m");

    RegimeSpec spec;
    spec.kind = parse_regime(regime_name);
    spec.m = m;
    spec.scale = pick<double>(args.scale, config, "scale", default_scale(spec.kind));
    spec.seed = resolve_seed(args.seed, config);
    const auto matrix = generate_regime(spec);
    write_output(args.out, to_json(matrix).dump(2) + "\n", out);

    if (args.oracles) {
        const auto cope = copeland(matrix);
        std::ostringstream os;
        os << "copeland scores:";
        for (double s : cope.scores) os << ' ' << s;
        os << "\ncopeland winners: " << join(cope.winners) << '\n';
        const auto cw = condorcet_winner(matrix);
        os << "condorcet winner: " << (cw ? std::to_string(*cw) : std::string("none")) << '\n';
        os << "borda scores:";
        for (double s : borda_scores(matrix)) os << ' ' << fmt17(s);
        os << '\n';
        if (matrix.m() <= kKemenyMaxAlternatives) {
            const auto kem = kemeny_optimal(matrix);
            os << "kemeny ranking: " << join(kem.ranking.order())
               << "\nkemeny disagreement: " << fmt17(kem.disagreement) << '\n';
        } else {
            os << "kemeny ranking: skipped (m > " << kKemenyMaxAlternatives << ")\n";
        }
        out << os.str();
    }
    return kOk;
}

struct OptimizeArgs {
    std::string matrix;
    std::string config;
    std::optional<std::string> loss;
    std::optional<double> tau, beta, lambda, lr, init_sigma;
    std::optional<std::size_t> steps;
    std::optional<std::string> init;
    std::optional<std::uint64_t> seed;
    bool trace = false;
    std::string out = "-";
};

inline int cmd_optimize(const OptimizeArgs& args, std::ostream& out) {
    using namespace detail;
    const json config = args.config.empty() ? json::object() : read_json_file(args.config, "config");
    std::string matrix_path = args.matrix;
    if (matrix_path.empty()) {
        // A relative path inside a config file is relative to that file.
        matrix_path = pick<std::string>(std::nullopt, config, "matrix", "");
        if (!matrix_path.empty() && std::filesystem::path(matrix_path).is_relative())
            matrix_path = (std::filesystem::path(args.config).parent_path() / matrix_path).string();
    }
    if (matrix_path.empty()) throw ValidationError("missing required option --matrix");
    const auto matrix = matrix_from_json(read_json_file(matrix_path, "matrix"));

    json loss_json = config.value("loss", json::object());
    if (!loss_json.is_object()) throw ValidationError("config key \"loss\" must be an object");
    if (args.loss) loss_json["family"] = *args.loss;
    if (args.tau) loss_json["tau"] = *args.tau;
    if (args.beta) loss_json["beta"] = *args.beta;
    if (args.lambda) loss_json["lambda"] = *args.lambda;
    if (!loss_json.contains("family")) throw ValidationError("missing required option --loss");
    const LossSpec loss = loss_from_json(loss_json);

    OptimConfig cfg;
    cfg.learning_rate = pick<double>(args.lr, config, "learning_rate", default_learning_rate(loss));
    cfg.steps = pick<std::size_t>(args.steps, config, "steps", 2000);
    const auto init = pick<std::string>(args.init, config, "init", "zeros");
    const std::uint64_t seed = resolve_seed(args.seed, config);
    if (init == "gaussian")
        cfg.init = InitSeededGaussian{pick<double>(args.init_sigma, config, "init_sigma", 0.01), seed};
    else if (init != "zeros")
        throw ValidationError("--init must be 'zeros' or 'gaussian', got '" + init + "'");
    cfg.record_trajectory = args.trace || config.value("record_trajectory", false);

    const auto result = gradient_descent(loss, matrix, cfg);
    const Ranking ranking = induced_ranking(result.final);

    json report;
    report["loss"] = to_json(loss);
    report["config"] = {{"learning_rate", cfg.learning_rate},
                        {"steps", cfg.steps},
                        {"init", init},
                        {"seed", seed}};
    if (init == "gaussian") report["config"]["init_sigma"] = std::get<InitSeededGaussian>(cfg.init).sigma;
    report["result"] = to_json(result);
    report["ranking"] = to_json(ranking);

    const auto cope = copeland(matrix);
    const auto cw = condorcet_winner(matrix);
    json metrics;
    metrics["copeland_winners"] = cope.winners;
    metrics["copeland_agreement"] =
        std::find(cope.winners.begin(), cope.winners.end(), ranking.top()) != cope.winners.end();
    metrics["condorcet_winner"] = cw ? json(*cw) : json(nullptr);
    metrics["borda_scores"] = borda_scores(matrix);
    metrics["expected_disagreement"] = expected_disagreement(ranking, matrix);
    if (matrix.m() <= kKemenyMaxAlternatives) {
        const auto kem = kemeny_optimal(matrix);
        metrics["kemeny_ranking"] = to_json(kem.ranking);
        metrics["kemeny_disagreement"] = kem.disagreement;
        metrics["kendall_to_kemeny"] = kendall_distance(ranking, kem.ranking);
    }
    if (matrix.m() == 2) metrics["final_margin"] = result.final[0] - result.final[1];
    report["metrics"] = metrics;
    report["axioms"] = json::array({axiom_json("condorcet", check_condorcet_criterion(ranking.top(), matrix))});

    write_output(args.out, report.dump(2) + "\n", out);
    return kOk;
}

struct ExperimentArgs {
    std::string which;
    std::string config;
    std::string out = "-";
    std::string format = "csv";
    unsigned threads = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> steps;
};

namespace detail {

inline std::vector<std::uint64_t> seeds_from(const json& config, std::size_t fallback_count) {
    if (config.contains("seeds")) return config.at("seeds").get<std::vector<std::uint64_t>>();
    return ExperimentGrid::default_seeds(config.value("num_seeds", fallback_count));
}

inline std::vector<LossSpec> losses_from(const json& arr) {
    std::vector<LossSpec> out;
    for (const auto& j : arr) out.push_back(loss_from_json(j));
    return out;
}

inline void offset_seeds(std::vector<std::uint64_t>& seeds, const std::optional<std::uint64_t>& base) {
    // --seed / DIFFVOTE_SEED shift the seed list to base, base+1, ...
    if (!base) return;
    for (std::size_t k = 0; k < seeds.size(); ++k) seeds[k] = *base + k;
}

inline std::optional<std::uint64_t> seed_override(const std::optional<std::uint64_t>& flag) {
    if (flag) return flag;
    if (std::getenv("DIFFVOTE_SEED")) return resolve_seed(std::nullopt);
    return std::nullopt;
}

inline ExperimentGrid grid_from_json(const json& c) {
    ExperimentGrid g;
    if (c.contains("m_values")) g.m_values = c.at("m_values").get<std::vector<std::size_t>>();
    if (c.contains("regimes")) {
        g.regimes.clear();
        for (const auto& r : c.at("regimes")) g.regimes.push_back(parse_regime(r.get<std::string>()));
    }
    if (c.contains("losses")) {
        g.losses.clear();
        for (const auto& f : c.at("losses")) g.losses.push_back(parse_family(f.get<std::string>()));
    }
    if (c.contains("tau_grid")) g.tau_grid = c.at("tau_grid").get<std::vector<double>>();
    if (c.contains("beta_grid")) g.beta_grid = c.at("beta_grid").get<std::vector<double>>();
    if (c.contains("lambda_grid")) g.lambda_grid = c.at("lambda_grid").get<std::vector<double>>();
    if (c.contains("scales"))
        for (const auto& [k, v] : c.at("scales").items()) g.scales[parse_regime(k)] = v.get<double>();
    g.seeds = seeds_from(c, 20);
    g.steps = c.value("steps", g.steps);
    g.init_sigma = c.value("init_sigma", g.init_sigma);
    return g;
}

inline Exp2Config exp2_from_json(const json& c) {
    Exp2Config cfg;
    if (c.contains("family")) {
        cfg.family.first_utilities = c.at("family").at("first_utilities").get<std::vector<double>>();
        cfg.family.second_utilities = c.at("family").at("second_utilities").get<std::vector<double>>();
    }
    if (c.contains("weights")) cfg.weights = c.at("weights").get<std::vector<double>>();
    if (c.contains("losses")) cfg.losses = losses_from(c.at("losses"));
    cfg.seeds = seeds_from(c, 20);
    cfg.steps = c.value("steps", cfg.steps);
    cfg.init_sigma = c.value("init_sigma", cfg.init_sigma);
    return cfg;
}

inline Exp3Config exp3_from_json(const json& c) {
    Exp3Config cfg;
    if (c.contains("matrix")) {
        cfg.matrix = matrix_from_json(c.at("matrix"));
    } else if (c.contains("regime")) {
        const auto& r = c.at("regime");
        RegimeSpec spec;
        spec.kind = parse_regime(r.at("kind").get<std::string>());
        spec.m = r.at("m").get<std::size_t>();
        spec.scale = r.value("scale", default_scale(spec.kind));
        cfg.matrix = generate_regime(spec);
    }
    if (c.contains("losses")) cfg.losses = losses_from(c.at("losses"));
    if (c.contains("delta_grid")) {
        const auto& d = c.at("delta_grid");
        if (d.is_array()) {
            cfg.delta_grid = d.get<std::vector<double>>();
        } else {
            const double lo = d.at("min").get<double>(), hi = d.at("max").get<double>(),
                         step = d.at("step").get<double>();
            if (!(step > 0.0) || hi < lo) throw ValidationError("delta_grid needs min <= max and step > 0");
            cfg.delta_grid.clear();
            for (long k = 0; lo + k * step <= hi + 1e-12; ++k) cfg.delta_grid.push_back(lo + k * step);
        }
    }
    cfg.steps = c.value("steps", cfg.steps);
    return cfg;
}

inline void print_exp3_summary(std::ostream& os, const std::vector<GradientSample>& samples) {
    std::vector<std::pair<std::string, double>> peaks;
    for (const auto& s : samples) {
        const std::string key = s.loss.label() + " " + s.series;
        auto it = std::find_if(peaks.begin(), peaks.end(), [&](const auto& p) { return p.first == key; });
        if (it == peaks.end())
            peaks.emplace_back(key, s.grad_magnitude);
        else
            it->second = std::max(it->second, s.grad_magnitude);
    }
    for (const auto& [key, peak] : peaks) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%-52s peak |grad| %.6g\n", key.c_str(), peak);
        os << buf;
    }
}

}  // namespace detail

inline int cmd_experiment(const ExperimentArgs& args, std::ostream& out, std::ostream& err) {
    using namespace detail;
    const json config = args.config.empty() ? json::object() : read_json_file(args.config, "config");
    if (args.format != "csv" && args.format != "json")
        throw ValidationError("--format must be 'csv' or 'json'");
    const bool to_stdout = args.out.empty() || args.out == "-";
    std::ostream& table = to_stdout ? err : out;
    const auto seed = seed_override(args.seed);
    std::ostringstream body;

    try {
        if (args.which == "exp1" || args.which == "exp2") {
            std::vector<MetricsRecord> records;
            if (args.which == "exp1") {
                auto grid = grid_from_json(config);
                offset_seeds(grid.seeds, seed);
                if (args.steps) grid.steps = *args.steps;
                records = run_exp1(grid, args.threads);
            } else {
                auto cfg = exp2_from_json(config);
                offset_seeds(cfg.seeds, seed);
                if (args.steps) cfg.steps = *args.steps;
                records = run_exp2(cfg, args.threads);
            }
            if (args.format == "json")
                body << to_json_array(records).dump(2) << '\n';
            else
                write_records_csv(body, records, args.which == "exp2");
            write_output(args.out, body.str(), out);
            print_summary(table, summarize(records));
            const bool all_failed = std::all_of(records.begin(), records.end(),
                                                [](const auto& r) { return r.error.has_value(); });
            if (all_failed) {
                err << "every experiment cell failed\n";
                return kRuntimeAbort;
            }
            return kOk;
        }
        if (args.which == "exp3") {
            auto cfg = exp3_from_json(config);
            if (args.steps) cfg.steps = *args.steps;
            const auto samples = run_exp3(cfg);
            if (args.format == "json")
                body << to_json_array(samples).dump(2) << '\n';
            else
                write_exp3_csv(body, samples);
            write_output(args.out, body.str(), out);
            print_exp3_summary(table, samples);
            return kOk;
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("invalid experiment config: ") + e.what());
    }
    throw ValidationError("unknown experiment '" + args.which + "' (expected exp1, exp2 or exp3)");
}

struct CheckArgs {
    bool json = false;
    std::optional<std::string> inject_fault;
};

inline int cmd_check(const CheckArgs& args, std::ostream& out) {
    CheckOptions opts;
    if (args.inject_fault) opts.perturb_family = parse_family(*args.inject_fault);
    const auto results = run_property_suite(opts);
    const bool all_passed =
        std::all_of(results.begin(), results.end(), [](const auto& r) { return r.passed; });
    if (args.json) {
        out << nlohmann::json{{"passed", all_passed}, {"properties", to_json_array(results)}}.dump(2)
            << '\n';
    } else {
        for (const auto& r : results)
            out << (r.passed ? "PASS " : "FAIL ") << r.name << "  " << r.detail << '\n';
        out << (all_passed ? "all properties passed\n" : "property failures detected\n");
    }
    return all_passed ? kOk : kPropertyFailure;
}

/// Parses argv and dispatches. Never throws; returns the process exit code.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout,
               std::ostream& err = std::cerr) {
    CLI::App app{"diffvote: differentiable voting losses, social-choice oracles and experiments"};
    app.require_subcommand(1);

    GenerateArgs gen;
    auto* generate = app.add_subcommand("generate", "Generate a synthetic preference matrix");
    generate->add_option("--regime", gen.regime, "transitive | near_tie | cyclic | sharply_transitive");
    generate->add_option("--m", gen.m, "Number of alternatives");
    generate->add_option("--scale", gen.scale, "Regime sharpness (cyclic: edge offset d)");
    generate->add_option("--seed", gen.seed, "Seed (falls back to DIFFVOTE_SEED)");
    generate->add_option("--config", gen.config, "JSON config; flags take precedence");
    generate->add_option("--out", gen.out, "Output path for the matrix JSON ('-' for stdout)");
    generate->add_flag("--oracles", gen.oracles, "Print Copeland, Condorcet, Borda and Kemeny results");

    OptimizeArgs opt;
    auto* optimize = app.add_subcommand("optimize", "Run gradient descent of one loss on a matrix");
    optimize->add_option("--matrix", opt.matrix, "Matrix JSON file");
    optimize->add_option("--config", opt.config, "JSON config; flags take precedence");
    optimize->add_option("--loss", opt.loss, "btl | soft_copeland | soft_kemeny | exponential | hinge");
    optimize->add_option("--tau", opt.tau, "Temperature");
    optimize->add_option("--beta", opt.beta, "Soft Copeland saturation");
    optimize->add_option("--lambda", opt.lambda, "Soft Copeland margin regularization");
    optimize->add_option("--lr", opt.lr, "Learning rate (default depends on the loss)");
    optimize->add_option("--steps", opt.steps, "Number of descent steps");
    optimize->add_option("--init", opt.init, "zeros | gaussian");
    optimize->add_option("--init-sigma", opt.init_sigma, "Std-dev of the gaussian init");
    optimize->add_option("--seed", opt.seed, "Seed for the gaussian init (falls back to DIFFVOTE_SEED)");
    optimize->add_flag("--trace", opt.trace, "Record the objective trajectory");
    optimize->add_option("--out", opt.out, "Output path for the result JSON ('-' for stdout)");

    ExperimentArgs exp;
    auto* experiment = app.add_subcommand("experiment", "Run exp1, exp2 or exp3");
    experiment->add_option("name", exp.which, "exp1 | exp2 | exp3")->required();
    experiment->add_option("--config", exp.config, "JSON experiment config");
    experiment->add_option("--out", exp.out, "Output path ('-' for stdout)");
    experiment->add_option("--format", exp.format, "csv | json");
    experiment->add_option("--threads", exp.threads, "Worker threads (results do not depend on it)");
    experiment->add_option("--seed", exp.seed, "First seed; seeds become seed, seed+1, ...");
    experiment->add_option("--steps", exp.steps, "Override the descent step budget");

    CheckArgs chk;
    auto* check = app.add_subcommand("check", "Run the gradient and limit-property self-checks");
    check->add_flag("--json", chk.json, "Machine-readable report");
    check->add_option("--inject-fault", chk.inject_fault,
                      "Perturb one family's analytic gradient (test mode)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << app.help();
        return kValidation;
    }

    try {
        if (generate->parsed()) return cmd_generate(gen, out);
        if (optimize->parsed()) return cmd_optimize(opt, out);
        if (experiment->parsed()) return cmd_experiment(exp, out, err);
        if (check->parsed()) return cmd_check(chk, out);
    } catch (const ValidationError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const OptimizerError& e) {
        err << "optimizer aborted: " << e.what() << '\n';
        return kRuntimeAbort;
    } catch (const std::exception& e) {
        err << "fatal: " << e.what() << '\n';
        return kRuntimeAbort;
    }
    return kValidation;
}

}  // namespace diffvote::cli
