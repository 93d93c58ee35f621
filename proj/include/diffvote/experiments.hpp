#pragma once

// Desk-scale experiment harness: rule recovery under smoothing (exp1),
// hidden-context aggregation (exp2) and gradient geometry (exp3).
//
// Cells are independent and run on a small worker pool; each cell's
// generator is derived from (seed, matrix-cell index), and records are
// stored by cell index, so output never depends on the thread count.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "diffvote/error.hpp"
#include "diffvote/losses.hpp"
#include "diffvote/optimizer.hpp"
#include "diffvote/oracles.hpp"
#include "diffvote/preferences.hpp"

namespace diffvote {

struct ExperimentGrid {
    std::vector<std::size_t> m_values{5, 7, 9};
    std::vector<RegimeKind> regimes{RegimeKind::Transitive, RegimeKind::NearTie, RegimeKind::Cyclic,
                                    RegimeKind::SharplyTransitive};
    std::vector<LossFamily> losses{std::begin(kAllFamilies), std::end(kAllFamilies)};
    std::vector<double> tau_grid{1.0, 0.3, 0.1, 0.05, 0.01};
    std::vector<double> beta_grid{1.0, 4.0, 16.0, 100.0};
    std::vector<double> lambda_grid{0.1, 0.01, 0.001};
    std::vector<std::uint64_t> seeds = default_seeds(20);
    // Regime scale overrides; absent regimes use default_scale().
    std::map<RegimeKind, double> scales;
    std::size_t steps = 2000;
    double init_sigma = 0.01;

    static std::vector<std::uint64_t> default_seeds(std::size_t n, std::uint64_t first = 0) {
        std::vector<std::uint64_t> s(n);
        for (std::size_t k = 0; k < n; ++k) s[k] = first + k;
        return s;
    }

    double scale_for(RegimeKind k) const {
        const auto it = scales.find(k);
        return it == scales.end() ? default_scale(k) : it->second;
    }

    void validate() const {
        using detail::require;
        require(!m_values.empty() && !regimes.empty() && !losses.empty() && !tau_grid.empty() &&
                    !beta_grid.empty() && !lambda_grid.empty() && !seeds.empty(),
                "experiment grid: every list must be nonempty");
        for (std::size_t m : m_values)
            require(m >= 3 && m <= kKemenyMaxAlternatives,
                    "experiment grid: m = " + std::to_string(m) + " outside [3, 9]");
        for (const auto* g : {&tau_grid, &beta_grid, &lambda_grid})
            for (double v : *g)
                require(std::isfinite(v) && v > 0.0, "experiment grid: hyperparameters must be positive");
        for (const auto& [k, s] : scales)
            require(std::isfinite(s) && s > 0.0, "experiment grid: regime scales must be positive");
        require(steps >= 1, "experiment grid: steps must be >= 1");
        require(std::isfinite(init_sigma) && init_sigma >= 0.0,
                "experiment grid: init_sigma must be >= 0");
    }
};

/// Every hyperparameter point of the grid for the selected families.
inline std::vector<LossSpec> loss_points(const ExperimentGrid& grid) {
    std::vector<LossSpec> out;
    for (LossFamily f : grid.losses) {
        switch (f) {
            case LossFamily::BTL:
            case LossFamily::SoftKemeny:
                for (double tau : grid.tau_grid) out.push_back(LossSpec::make(f, tau, 0.0, 0.0));
                break;
            case LossFamily::SoftCopeland:
                for (double tau : grid.tau_grid)
                    for (double beta : grid.beta_grid)
                        for (double lambda : grid.lambda_grid)
                            out.push_back(LossSpec::soft_copeland(tau, beta, lambda));
                break;
            case LossFamily::Exponential: out.push_back(LossSpec::exponential()); break;
            case LossFamily::Hinge: out.push_back(LossSpec::hinge()); break;
        }
    }
    return out;
}

struct MetricsRecord {
    LossSpec loss;
    std::string regime;
    std::size_t m = 0;
    std::uint64_t seed = 0;
    bool copeland_agreement = false;
    std::size_t kendall_to_kemeny = 0;
    AxiomStatus condorcet_status = AxiomStatus::Vacuous;
    double expected_disagreement = 0.0;
    std::vector<std::size_t> ranking;
    std::optional<std::string> error;

    // Hidden-context runs only.
    std::optional<double> weight;
    std::optional<AxiomStatus> majority_status;
    std::optional<AxiomStatus> pareto_status;

    std::size_t top() const { return ranking.empty() ? 0 : ranking.front(); }
};

/// Oracle outputs for one matrix, computed once and shared by all cells.
struct OracleSummary {
    CopelandResult copeland;
    KemenyResult kemeny;
    std::optional<std::size_t> condorcet;

    explicit OracleSummary(const PreferenceMatrix& matrix, unsigned threads = 1)
        : copeland(diffvote::copeland(matrix)),
          kemeny(kemeny_optimal(matrix, threads)),
          condorcet(condorcet_winner(matrix)) {}
};

/// Fills the oracle metrics of a record from an optimized reward vector.
inline void score_against(MetricsRecord& rec, const RewardVector& rewards,
                          const PreferenceMatrix& matrix, const OracleSummary& oracles) {
    const Ranking ranking = induced_ranking(rewards);
    rec.ranking = ranking.order();
    const auto& winners = oracles.copeland.winners;
    rec.copeland_agreement =
        std::find(winners.begin(), winners.end(), ranking.top()) != winners.end();
    rec.kendall_to_kemeny = kendall_distance(ranking, oracles.kemeny.ranking);
    rec.condorcet_status = check_condorcet_criterion(ranking.top(), matrix);
    rec.expected_disagreement = expected_disagreement(ranking, matrix);
}

namespace detail {

// Runs job(k) for k in [0, n) on up to `threads` workers. The first
// exception (by index) is rethrown after all workers finish.
template <typename Job>
void parallel_for(std::size_t n, unsigned threads, Job&& job) {
    threads = std::max(1u, threads);
    if (threads == 1 || n <= 1) {
        for (std::size_t k = 0; k < n; ++k) job(k);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(n);
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < std::min<std::size_t>(threads, n); ++t)
        pool.emplace_back([&] {
            for (std::size_t k = next++; k < n; k = next++) {
                try {
                    job(k);
                } catch (...) {
                    errors[k] = std::current_exception();
                }
            }
        });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
        if (e) std::rethrow_exception(e);
}

inline OptimConfig cell_config(const LossSpec& loss, std::size_t steps, double sigma,
                               std::uint64_t seed, std::uint64_t matrix_cell) {
    OptimConfig cfg;
    cfg.learning_rate = default_learning_rate(loss);
    cfg.steps = steps;
    cfg.init = InitSeededGaussian{sigma, derive_seed(seed, matrix_cell)};
    return cfg;
}

inline void run_cell(MetricsRecord& rec, const PreferenceMatrix& matrix,
                     const OracleSummary& oracles, const OptimConfig& cfg) {
    try {
        const auto result = gradient_descent(rec.loss, matrix, cfg);
        score_against(rec, result.final, matrix, oracles);
    } catch (const OptimizerError& e) {
        rec.error = e.what();
    }
}

}  // namespace detail

/// Rule recovery under smoothing: every (regime, m, loss point, seed).
inline std::vector<MetricsRecord> run_exp1(const ExperimentGrid& grid, unsigned threads = 1) {
    grid.validate();
    const auto points = loss_points(grid);

    struct MatrixCell {
        RegimeKind regime;
        std::size_t m;
        PreferenceMatrix matrix;
    };
    std::vector<MatrixCell> cells;
    for (RegimeKind regime : grid.regimes)
        for (std::size_t m : grid.m_values)
            cells.push_back({regime, m, generate_regime({regime, m, grid.scale_for(regime), 0})});

    std::vector<std::optional<OracleSummary>> oracles(cells.size());
    detail::parallel_for(cells.size(), threads,
                         [&](std::size_t c) { oracles[c].emplace(cells[c].matrix); });

    const std::size_t per_cell = points.size() * grid.seeds.size();
    std::vector<MetricsRecord> records(cells.size() * per_cell);
    detail::parallel_for(records.size(), threads, [&](std::size_t k) {
        const std::size_t c = k / per_cell;
        const std::size_t p = (k % per_cell) / grid.seeds.size();
        const std::uint64_t seed = grid.seeds[k % grid.seeds.size()];
        MetricsRecord& rec = records[k];
        rec.loss = points[p];
        rec.regime = std::string(to_string(cells[c].regime));
        rec.m = cells[c].m;
        rec.seed = seed;
        detail::run_cell(rec, cells[c].matrix, *oracles[c],
                         detail::cell_config(points[p], grid.steps, grid.init_sigma, seed, c));
    });
    return records;
}

/// Two contexts with logistic-link utilities; weight w goes to the first.
struct TwoContextFamily {
    std::vector<double> first_utilities;
    std::vector<double> second_utilities;

    ContextMixture at(double w) const {
        detail::require(w >= 0.0 && w <= 1.0, "mixture weight must lie in [0, 1]");
        detail::require(first_utilities.size() == second_utilities.size(),
                        "both contexts must rank the same alternatives");
        return ContextMixture({{w, logistic_matrix(first_utilities)},
                               {1.0 - w, logistic_matrix(second_utilities)}});
    }
};

/// Three alternatives, two hidden contexts, found by exhaustive search over
/// utility triples in {0, .5, 1, 1.5, 2, 3} and weights {.55, .6, .65, .7}.
/// At w = 0.65 the marginal has Condorcet winner 0 while its Borda argmax
/// is 1 (Borda scores 1.2310, 1.2696, 0.4994).
struct BordaCondorcetSplit {
    static constexpr double kWeight = 0.65;
    static constexpr std::size_t kCondorcetWinner = 0;
    static constexpr std::size_t kBordaWinner = 1;

    static TwoContextFamily family() { return {{3.0, 1.5, 0.0}, {0.0, 3.0, 1.5}}; }
    static ContextMixture mixture() { return family().at(kWeight); }
};

struct Exp2Config {
    TwoContextFamily family = BordaCondorcetSplit::family();
    std::vector<double> weights = default_weights();
    std::vector<LossSpec> losses = default_losses();
    std::vector<std::uint64_t> seeds = ExperimentGrid::default_seeds(20);
    std::size_t steps = 2000;
    double init_sigma = 0.01;

    static std::vector<double> default_weights() {
        std::vector<double> w;
        for (int k = 0; k <= 20; ++k) w.push_back(k / 20.0);
        w.push_back(BordaCondorcetSplit::kWeight);
        std::sort(w.begin(), w.end());
        w.erase(std::unique(w.begin(), w.end(),
                            [](double a, double b) { return std::abs(a - b) < 1e-12; }),
                w.end());
        return w;
    }

    static std::vector<LossSpec> default_losses() {
        return {LossSpec::btl(0.1), LossSpec::soft_copeland(0.1, 4.0, 0.01),
                LossSpec::soft_kemeny(0.1), LossSpec::exponential(), LossSpec::hinge()};
    }

    void validate() const {
        detail::require(!weights.empty() && !losses.empty() && !seeds.empty(),
                        "exp2: weights, losses and seeds must be nonempty");
        for (double w : weights)
            detail::require(w >= 0.0 && w <= 1.0, "exp2: weights must lie in [0, 1]");
        detail::require(steps >= 1, "exp2: steps must be >= 1");
        detail::require(std::isfinite(init_sigma) && init_sigma >= 0.0,
                        "exp2: init_sigma must be >= 0");
        family.at(0.5);
    }
};

/// Hidden-context aggregation: each loss is optimized on the marginal of the
/// (w, 1-w) mixture and scored against marginal oracles plus the
/// contexts-as-voters majority-winner and Pareto checks.
inline std::vector<MetricsRecord> run_exp2(const Exp2Config& config, unsigned threads = 1) {
    config.validate();
    struct WeightCell {
        ContextMixture mixture;
        PreferenceMatrix marginal;
    };
    std::vector<WeightCell> cells;
    for (double w : config.weights) {
        auto mix = config.family.at(w);
        auto marginal = mixture_marginal(mix);
        cells.push_back({std::move(mix), std::move(marginal)});
    }
    std::vector<std::optional<OracleSummary>> oracles(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) oracles[c].emplace(cells[c].marginal);

    const std::size_t per_cell = config.losses.size() * config.seeds.size();
    std::vector<MetricsRecord> records(cells.size() * per_cell);
    detail::parallel_for(records.size(), threads, [&](std::size_t k) {
        const std::size_t c = k / per_cell;
        const std::size_t p = (k % per_cell) / config.seeds.size();
        const std::uint64_t seed = config.seeds[k % config.seeds.size()];
        MetricsRecord& rec = records[k];
        rec.loss = config.losses[p];
        rec.regime = "mixture";
        rec.m = cells[c].marginal.m();
        rec.seed = seed;
        rec.weight = config.weights[c];
        detail::run_cell(rec, cells[c].marginal, *oracles[c],
                         detail::cell_config(rec.loss, config.steps, config.init_sigma, seed, c));
        if (!rec.error) {
            const Ranking ranking(rec.ranking);
            rec.majority_status = check_majority_winner(ranking.top(), cells[c].mixture);
            rec.pareto_status = check_pareto(ranking, cells[c].mixture);
        }
    });
    return records;
}

struct GradientSample {
    LossSpec loss;
    std::string series;  // "converged" or "profile"
    double delta = 0.0;
    double grad_magnitude = 0.0;
};

struct Exp3Config {
    PreferenceMatrix matrix = generate_regime({RegimeKind::Transitive, 5, 1.0, 0});
    std::vector<LossSpec> losses = default_losses();
    std::vector<double> delta_grid = default_delta_grid();
    std::size_t steps = 2000;

    static std::vector<LossSpec> default_losses() {
        return {LossSpec::btl(1.0),
                LossSpec::soft_kemeny(1.0),
                LossSpec::soft_copeland(1.0, 1.0, 0.01),
                LossSpec::soft_copeland(1.0, 4.0, 0.01),
                LossSpec::soft_copeland(1.0, 16.0, 0.01),
                LossSpec::exponential(),
                LossSpec::hinge()};
    }

    static std::vector<double> default_delta_grid() {
        std::vector<double> g;
        for (int k = -100; k <= 100; ++k) g.push_back(k / 10.0);
        return g;
    }
};

/// Gradient geometry: per loss, |d risk / d delta| on the converged pair
/// margins (each pair weighted by its own eta) and the y = +1 loss-shape
/// profile |d loss / d delta| over the delta grid.
inline std::vector<GradientSample> run_exp3(const Exp3Config& config) {
    detail::require(!config.losses.empty() && !config.delta_grid.empty(),
                    "exp3: losses and delta grid must be nonempty");
    std::vector<GradientSample> out;
    const auto& matrix = config.matrix;
    for (const auto& loss : config.losses) {
        OptimConfig cfg;
        cfg.learning_rate = default_learning_rate(loss);
        cfg.steps = config.steps;
        const auto result = gradient_descent(loss, matrix, cfg);
        for (std::size_t a = 0; a < matrix.m(); ++a)
            for (std::size_t b = a + 1; b < matrix.m(); ++b) {
                const double delta = result.final[a] - result.final[b];
                out.push_back({loss, "converged", delta,
                               std::abs(conditional_risk_grad(loss, delta, matrix(a, b)))});
            }
        for (double delta : config.delta_grid)
            out.push_back({loss, "profile", delta, std::abs(loss_grad_margin(loss, delta, +1))});
    }
    return out;
}

struct SummaryRow {
    std::string loss;
    std::string regime;
    std::size_t m = 0;
    std::size_t runs = 0;
    std::size_t failed = 0;
    double copeland_agreement_rate = 0.0;
    double mean_kendall_to_kemeny = 0.0;
    std::size_t condorcet_satisfied = 0;
    std::size_t condorcet_nonvacuous = 0;

    std::optional<double> condorcet_rate() const {
        if (condorcet_nonvacuous == 0) return std::nullopt;
        return static_cast<double>(condorcet_satisfied) / static_cast<double>(condorcet_nonvacuous);
    }
};

/// Aggregates per (loss point, regime, m) in order of first appearance.
/// Exp2 records are grouped per weight as regime "mixture(w=...)".
inline std::vector<SummaryRow> summarize(const std::vector<MetricsRecord>& records) {
    detail::require(!records.empty(), "summarize: no records");
    std::vector<SummaryRow> rows;
    std::map<std::tuple<std::string, std::string, std::size_t>, std::size_t> index;
    for (const auto& rec : records) {
        std::string regime = rec.regime;
        if (rec.weight) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "(w=%g)", *rec.weight);
            regime += buf;
        }
        const auto key = std::make_tuple(rec.loss.label(), regime, rec.m);
        auto [it, inserted] = index.try_emplace(key, rows.size());
        if (inserted) rows.push_back({rec.loss.label(), regime, rec.m});
        SummaryRow& row = rows[it->second];
        ++row.runs;
        if (rec.error) {
            ++row.failed;
            continue;
        }
        row.copeland_agreement_rate += rec.copeland_agreement ? 1.0 : 0.0;
        row.mean_kendall_to_kemeny += static_cast<double>(rec.kendall_to_kemeny);
        if (rec.condorcet_status != AxiomStatus::Vacuous) {
            ++row.condorcet_nonvacuous;
            if (rec.condorcet_status == AxiomStatus::Satisfied) ++row.condorcet_satisfied;
        }
    }
    for (auto& row : rows) {
        const std::size_t ok = row.runs - row.failed;
        if (ok > 0) {
            row.copeland_agreement_rate /= static_cast<double>(ok);
            row.mean_kendall_to_kemeny /= static_cast<double>(ok);
        }
    }
    return rows;
}

inline void print_summary(std::ostream& os, const std::vector<SummaryRow>& rows) {
    char line[256];
    std::snprintf(line, sizeof line, "%-42s %-22s %3s %5s %6s %9s %11s %14s\n", "loss", "regime",
                  "m", "runs", "failed", "copeland", "kendall", "condorcet");
    os << line;
    for (const auto& r : rows) {
        std::string cond = "n/a (0)";
        if (const auto rate = r.condorcet_rate()) {
            char buf[48];
            std::snprintf(buf, sizeof buf, "%.3f (%zu)", *rate, r.condorcet_nonvacuous);
            cond = buf;
        }
        std::snprintf(line, sizeof line, "%-42s %-22s %3zu %5zu %6zu %9.3f %11.3f %14s\n",
                      r.loss.c_str(), r.regime.c_str(), r.m, r.runs, r.failed,
                      r.copeland_agreement_rate, r.mean_kendall_to_kemeny, cond.c_str());
        os << line;
    }
}

// --- Output formats -------------------------------------------------------

inline constexpr const char* kRecordsCsvHeader =
    "loss,tau,beta,lambda,regime,m,seed,copeland_agreement,kendall_to_kemeny,condorcet_status,"
    "expected_disagreement";
inline constexpr const char* kExp2ExtraCsvHeader = ",weight,top,majority_winner,pareto";
inline constexpr const char* kExp3CsvHeader = "loss,tau,beta,series,delta,grad_magnitude";

namespace detail {

inline std::string csv_number(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

inline std::string csv_hyper(double v, bool used) {
    return used ? csv_number(v) : std::string();
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<MetricsRecord>& records,
                              bool hidden_context_columns = false) {
    os << kRecordsCsvHeader << (hidden_context_columns ? kExp2ExtraCsvHeader : "") << '\n';
    for (const auto& r : records) {
        os << to_string(r.loss.family) << ',' << detail::csv_hyper(r.loss.tau, r.loss.uses_tau())
           << ',' << detail::csv_hyper(r.loss.beta, r.loss.uses_beta_lambda()) << ','
           << detail::csv_hyper(r.loss.lambda, r.loss.uses_beta_lambda()) << ',' << r.regime
           << ',' << r.m << ',' << r.seed << ',';
        if (r.error)
            os << "error,nan,error,nan";
        else
            os << (r.copeland_agreement ? "true" : "false") << ',' << r.kendall_to_kemeny << ','
               << to_string(r.condorcet_status) << ',' << detail::csv_number(r.expected_disagreement);
        if (hidden_context_columns) {
            os << ',' << (r.weight ? detail::csv_number(*r.weight) : std::string()) << ',';
            if (r.error)
                os << ",error,error";
            else
                os << r.top() << ',' << (r.majority_status ? to_string(*r.majority_status) : "")
                   << ',' << (r.pareto_status ? to_string(*r.pareto_status) : "");
        }
        os << '\n';
    }
}

inline void write_exp3_csv(std::ostream& os, const std::vector<GradientSample>& samples) {
    os << kExp3CsvHeader << '\n';
    for (const auto& s : samples)
        os << to_string(s.loss.family) << ',' << detail::csv_hyper(s.loss.tau, s.loss.uses_tau())
           << ',' << detail::csv_hyper(s.loss.beta, s.loss.uses_beta_lambda()) << ','
           << s.series << ',' << detail::csv_number(s.delta) << ','
           << detail::csv_number(s.grad_magnitude) << '\n';
}

inline nlohmann::json to_json(const MetricsRecord& r) {
    nlohmann::json j = {{"loss", to_json(r.loss)}, {"regime", r.regime}, {"m", r.m},
                        {"seed", r.seed}};
    if (r.error) {
        j["error"] = *r.error;
        return j;
    }
    j["copeland_agreement"] = r.copeland_agreement;
    j["kendall_to_kemeny"] = r.kendall_to_kemeny;
    j["condorcet_status"] = to_string(r.condorcet_status);
    j["expected_disagreement"] = r.expected_disagreement;
    j["ranking"] = r.ranking;
    if (r.weight) j["weight"] = *r.weight;
    if (r.majority_status) j["majority_winner"] = to_string(*r.majority_status);
    if (r.pareto_status) j["pareto"] = to_string(*r.pareto_status);
    return j;
}

inline nlohmann::json to_json(const GradientSample& s) {
    return {{"loss", to_json(s.loss)}, {"series", s.series}, {"delta", s.delta},
            {"grad_magnitude", s.grad_magnitude}};
}

template <typename T>
nlohmann::json to_json_array(const std::vector<T>& items) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& x : items) arr.push_back(to_json(x));
    return arr;
}

}  // namespace diffvote
