// Command-line front end: solvers, simulation, verification, reproduction.
#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include "csched/builtin_models.hpp"
#include "csched/simkit.hpp"
#include "csched/structcheck.hpp"

namespace {

using namespace csched;

constexpr int kExitSolver = 1;
constexpr int kExitUsage = 2;

/// Writes to --out if given, else stdout.
class OutStream {
public:
    explicit OutStream(const std::string& path) {
        if (!path.empty()) {
            file_.open(path);
            if (!file_) throw ModelError("cannot open output file: " + path);
        }
    }
    std::ostream& get() { return file_.is_open() ? file_ : std::cout; }

private:
    std::ofstream file_;
};

ObjectiveKind parse_objective(const std::string& s) {
    if (s == "covariance") return ObjectiveKind::Covariance;
    if (s == "information") return ObjectiveKind::Information;
    throw CLI::ValidationError("--objective must be covariance or information");
}

CovarianceLadder base_ladder(const SystemModel& model) {
    return build_ladder(steady_state_filter(model).P_bar, 2, model);
}

int cmd_solve(const std::string& model_name, int K, double beta,
              const std::string& objective, const std::string& info, int trunc,
              const std::string& out) {
    const SystemModel model = resolve_model(model_name);
    const ObjectiveConfig obj{beta, parse_objective(objective)};
    const CovarianceLadder lad = base_ladder(model);
    if (info == "full") {
        const FullSolution sol = solve_finite_full(model, lad, K, obj);
        OutStream os(out.empty() ? "" : out + "_policy.csv");
        write_policy_csv(os.get(), sol.policy);
        if (!out.empty()) {
            std::ofstream vf(out + "_values.csv");
            write_values_csv(vf, sol.values);
        }
    } else if (info == "partial") {
        const PartialSolution sol = solve_finite_partial(
            model, lad, K, obj, trunc > 0 ? std::optional<int>(trunc) : std::nullopt);
        OutStream os(out.empty() ? "" : out + "_policy.csv");
        write_partial_policy_csv(os.get(), sol);
        if (!out.empty()) {
            std::ofstream bf(out + "_beliefs.csv");
            write_belief_defs_csv(bf, sol);
        }
    } else {
        throw CLI::ValidationError("--info must be full or partial");
    }
    return 0;
}

int cmd_solve_inf(const std::string& model_name, double beta, const std::string& objective,
                  const std::string& info, int N, const std::string& out) {
    const SystemModel model = resolve_model(model_name);
    const ObjectiveConfig obj{beta, parse_objective(objective)};
    const CovarianceLadder lad = base_ladder(model);
    OutStream os(out);
    if (info == "full") {
        const AvgCostSolution sol = relative_value_iteration(model, lad, obj, N);
        write_avg_cost_csv(os.get(), sol);
    } else if (info == "partial") {
        const AvgCostBeliefSolution sol = relative_value_iteration_partial(model, lad, obj, N);
        os.get() << "rho,iterations,residual\n"
                 << sol.rho << ',' << sol.iterations << ',' << sol.residual << '\n';
        os.get() << "suffix,n,h,nu\n";
        for (std::uint64_t s = 0; s < (std::uint64_t{1} << N); ++s)
            for (int n = 0; n <= N; ++n)
                os.get() << s << ',' << n << ',' << sol.h_at(s, n) << ',' << sol.nu(s, n)
                         << '\n';
    } else {
        throw CLI::ValidationError("--info must be full or partial");
    }
    return 0;
}

struct PolicySpec {
    std::unique_ptr<Policy> policy;
    TxMode mode = TxMode::EstimateTx;
    bool episodic = false;  // finite-horizon table, runs in episodes of K
    int t = -1;
};

PolicySpec make_policy(const std::string& spec, const SystemModel& model, int horizon,
                       double beta, ObjectiveKind kind, int trunc) {
    PolicySpec out;
    const ObjectiveConfig obj{beta, kind};
    if (spec.rfind("threshold:", 0) == 0) {
        out.t = std::stoi(spec.substr(10));
        out.policy = std::make_unique<ThresholdSchedPolicy>(out.t);
    } else if (spec == "dp-full") {
        out.policy = std::make_unique<FullTablePolicy>(
            solve_finite_full(model, base_ladder(model), horizon, obj).policy);
        out.episodic = true;
    } else if (spec == "dp-partial") {
        out.policy = std::make_unique<PartialTablePolicy>(
            std::make_shared<PartialSolution>(solve_finite_partial(
                model, base_ladder(model), horizon, obj,
                trunc > 0 ? std::optional<int>(trunc) : std::nullopt)));
        out.episodic = true;
    } else if (spec == "rvi-full") {
        out.policy = std::make_unique<StationaryTablePolicy>(
            relative_value_iteration(model, base_ladder(model), obj, horizon));
    } else if (spec == "rvi-partial") {
        out.policy = std::make_unique<StationaryBeliefPolicy>(
            relative_value_iteration_partial(model, base_ladder(model), obj, horizon));
    } else if (spec == "dp-meas-full") {
        out.policy = std::make_unique<MeasFullPolicy>(
            std::make_shared<MeasFullSolution>(solve_finite_full_meas(model, horizon, beta)));
        out.mode = TxMode::MeasurementTx;
        out.episodic = true;
    } else if (spec == "dp-meas-partial") {
        out.policy = std::make_unique<MeasPartialPolicy>(std::make_shared<MeasPartialSolution>(
            solve_finite_partial_meas(model, horizon, beta)));
        out.mode = TxMode::MeasurementTx;
        out.episodic = true;
    } else {
        throw CLI::ValidationError("unknown --policy: " + spec);
    }
    return out;
}

int cmd_simulate(const std::string& model_name, const std::string& policy_spec, long steps,
                 std::vector<std::uint64_t> seeds, int horizon, double beta,
                 const std::string& objective, int trunc, const std::string& trace_path,
                 const std::string& out) {
    const SystemModel model = resolve_model(model_name);
    PolicySpec ps = make_policy(policy_spec, model, horizon, beta,
                                parse_objective(objective), trunc);
    if (seeds.empty()) seeds.push_back(1);

    std::vector<SimRecord> records;
    for (std::uint64_t seed : seeds) {
        SimConfig cfg;
        cfg.seed = seed;
        if (ps.episodic) {
            cfg.horizon = horizon;
            cfg.episodes = std::max<long>(1, steps / horizon);
        } else {
            cfg.horizon = steps;
            cfg.episodes = 1;
        }
        cfg.mode = ps.mode;
        cfg.record_trace = !trace_path.empty() && seeds.size() == 1;
        records.push_back(simulate(model, *ps.policy, cfg));
        if (cfg.record_trace) {
            std::ofstream tf(trace_path);
            write_trace_csv(tf, records.back());
            records.back().trace.clear();
        }
    }
    OutStream os(out);
    write_summary_csv(os.get(), records, beta, ps.t);
    return 0;
}

int cmd_sweep(const std::string& model_name, std::vector<double> betas,
              const std::string& objective, const std::string& info, bool finite,
              int horizon, long steps, std::uint64_t seed, const std::string& out) {
    const SystemModel model = resolve_model(model_name);
    if (betas.empty())
        for (int i = 1; i <= 9; ++i) betas.push_back(0.1 * i);
    SweepSpec spec;
    spec.kind = parse_objective(objective);
    if (info == "full") spec.info = InfoMode::Full;
    else if (info == "partial") spec.info = InfoMode::Partial;
    else throw CLI::ValidationError("--info must be full or partial");
    spec.infinite = !finite;
    spec.horizon = horizon;
    spec.sim_steps = steps;
    spec.seed = seed;
    const auto points = sweep_beta(model, spec, betas);
    OutStream os(out);
    write_sweep_csv(os.get(), points);
    return 0;
}

int cmd_verify(const std::string& model_name, int K, double beta,
               const std::string& objective, int n_inf, int samples, std::uint64_t seed,
               const std::string& out) {
    const SystemModel model = resolve_model(model_name);
    const ObjectiveConfig obj{beta, parse_objective(objective)};
    const CovarianceLadder lad = base_ladder(model);

    StructureReport report;
    const FullSolution full = solve_finite_full(model, lad, K, obj);
    report.merge(verify_threshold_rows(full.policy, ThresholdAxis::N));
    report.merge(verify_threshold_rows(full.policy, ThresholdAxis::Ne));

    const int pk = std::min(K, 10);
    const PartialSolution partial =
        solve_finite_partial(model, lad, pk, obj,
                             pk > kExactBeliefDepthCap ? std::optional<int>(8) : std::nullopt);
    report.merge(verify_threshold_rows(partial));

    const AvgCostSolution inf = relative_value_iteration(model, lad, obj, n_inf);
    report.merge(verify_threshold_rows(inf, ThresholdAxis::N));
    report.merge(verify_threshold_rows(inf, ThresholdAxis::Ne));

    const AvgCostBeliefSolution binf =
        relative_value_iteration_partial(model, lad, obj, std::min(n_inf, 8));
    report.merge(verify_threshold_rows(binf));

    report.merge(verify_lemma_suite(model, samples, seed));

    OutStream os(out);
    write_report_csv(os.get(), report);
    return report.all_pass() ? 0 : kExitSolver;
}

int cmd_bounds(const std::string& model_name, const std::string& out) {
    const SystemModel model = resolve_model(model_name);
    const SteadyState steady = steady_state_filter(model);
    const LeakageBounds b = leakage_bounds(model, steady);
    int t_min = -1;
    try {
        t_min = min_t_for_unbounded(model);
    } catch (const ModelError&) {
    }
    OutStream os(out);
    os.get() << "delta_L,delta_U,N_prime,t_min,stability_threshold\n"
             << b.delta_L << ',' << b.delta_U << ',' << b.N_prime << ',' << t_min << ','
             << stability_threshold(model) << '\n';
    return 0;
}

int cmd_reproduce(const std::string& what, long steps, std::uint64_t seed,
                  const std::string& out) {
    SystemModel model = SystemModel::from_json_text(kBuiltinPaperModel);
    OutStream os(out);
    if (what == "table1") {
        os.get() << "lambda_e,t,mean_trP,mean_trPe,tx_rate,steps,seed\n";
        for (double lam_e : {0.6, 0.8}) {
            model.lambda_e = lam_e;
            for (int t = 1; t <= 6; ++t) {
                ThresholdSchedPolicy policy(t);
                SimConfig cfg;
                cfg.horizon = steps;
                cfg.seed = seed;
                const SimRecord rec = simulate(model, policy, cfg);
                os.get() << lam_e << ',' << t << ',' << rec.mean_trP << ',' << rec.mean_trPe
                         << ',' << rec.tx_rate << ',' << rec.steps << ',' << rec.seed << '\n';
            }
        }
        return 0;
    }
    if (what == "fig4" || what == "fig5") {
        // Finite-horizon tradeoff curves: fig4 weighs the eavesdropper
        // covariance, fig5 the intercepted information.
        std::vector<double> betas;
        for (int i = 1; i <= 9; ++i) betas.push_back(0.1 * i);
        os.get() << "info,beta,mean_trP,mean_trPe,mean_Ie,tx_rate\n";
        for (const char* info : {"full", "partial"}) {
            SweepSpec spec;
            spec.kind = what == "fig4" ? ObjectiveKind::Covariance
                                       : ObjectiveKind::Information;
            spec.info = std::string(info) == "full" ? InfoMode::Full : InfoMode::Partial;
            spec.infinite = false;
            spec.horizon = std::string(info) == "full" ? 10 : 8;
            spec.sim_steps = steps;
            spec.seed = seed;
            for (const auto& p : sweep_beta(model, spec, betas))
                os.get() << info << ',' << p.beta << ',' << p.mean_trP << ',' << p.mean_trPe
                         << ',' << p.mean_Ie << ',' << p.tx_rate << '\n';
        }
        return 0;
    }
    if (what == "fig6") {
        std::vector<double> betas;
        for (int i = 1; i <= 9; ++i) betas.push_back(0.1 * i);
        os.get() << "info,beta,mean_trP,mean_trPe,mean_Ie,tx_rate\n";
        for (const char* info : {"full", "partial"}) {
            SweepSpec spec;
            spec.kind = ObjectiveKind::Information;
            spec.info = std::string(info) == "full" ? InfoMode::Full : InfoMode::Partial;
            spec.horizon = std::string(info) == "full" ? 10 : 8;
            spec.sim_steps = steps;
            spec.seed = seed;
            for (const auto& p : sweep_beta(model, spec, betas))
                os.get() << info << ',' << p.beta << ',' << p.mean_trP << ',' << p.mean_trPe
                         << ',' << p.mean_Ie << ',' << p.tx_rate << '\n';
        }
        return 0;
    }
    throw CLI::ValidationError("reproduce target must be table1, fig4, fig5, or fig6");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Transmission scheduling toolkit: remote estimation with an eavesdropper"};
    app.require_subcommand(1);

    std::string model_name = "paper", objective = "covariance", info = "full";
    std::string out, policy_spec = "threshold:1", trace_path, repro_what;
    int K = 10, trunc = 0, n_inf = 10, samples = 1000;
    double beta = 0.7;
    long steps = 100000;
    std::uint64_t seed = 1;
    std::vector<std::uint64_t> seeds;
    std::vector<double> betas;
    bool finite = false;

    auto add_model = [&](CLI::App* cmd) {
        cmd->add_option("--model", model_name,
                        "model file, or builtin 'paper' / 'paper_meas'");
        cmd->add_option("--out", out, "output path (default stdout)");
    };

    auto* solve = app.add_subcommand("solve", "finite-horizon DP");
    add_model(solve);
    solve->add_option("--horizon", K);
    solve->add_option("--beta", beta);
    solve->add_option("--objective", objective);
    solve->add_option("--info", info);
    solve->add_option("--truncation", trunc, "belief truncation (partial info)");

    auto* solve_inf = app.add_subcommand("solve-inf", "average-cost Bellman equation");
    add_model(solve_inf);
    solve_inf->add_option("--beta", beta);
    solve_inf->add_option("--objective", objective);
    solve_inf->add_option("--info", info);
    solve_inf->add_option("--truncation", n_inf, "ladder truncation N");

    auto* sim = app.add_subcommand("simulate", "Monte Carlo closed loop");
    add_model(sim);
    sim->add_option("--policy", policy_spec,
                    "threshold:T | dp-full | dp-partial | rvi-full | rvi-partial | "
                    "dp-meas-full | dp-meas-partial");
    sim->add_option("--steps", steps);
    sim->add_option("--seed", seeds, "seed (repeatable)");
    sim->add_option("--horizon", K, "table horizon K / truncation N");
    sim->add_option("--beta", beta);
    sim->add_option("--objective", objective);
    sim->add_option("--truncation", trunc);
    sim->add_option("--trace", trace_path, "per-step trace CSV (single seed)");

    auto* sweep = app.add_subcommand("sweep", "beta tradeoff curve");
    add_model(sweep);
    sweep->add_option("--betas", betas, "beta grid (default 0.1..0.9)");
    sweep->add_option("--objective", objective);
    sweep->add_option("--info", info);
    sweep->add_flag("--finite", finite, "finite-horizon tables instead of stationary");
    sweep->add_option("--horizon", K);
    sweep->add_option("--steps", steps);
    sweep->add_option("--seed", seed);

    auto* verify = app.add_subcommand("verify", "structure + lemma checks");
    add_model(verify);
    verify->add_option("--horizon", K);
    verify->add_option("--beta", beta);
    verify->add_option("--objective", objective);
    verify->add_option("--truncation", n_inf, "stationary truncation N");
    verify->add_option("--samples", samples);
    verify->add_option("--seed", seed);

    auto* bounds = app.add_subcommand("bounds", "leakage-rate bounds and threshold t");
    add_model(bounds);

    auto* repro = app.add_subcommand("reproduce", "bundled-model artifacts");
    long repro_steps = 1000000;
    repro->add_option("what", repro_what, "table1 | fig4 | fig5 | fig6")->required();
    repro->add_option("--steps", repro_steps);
    repro->add_option("--seed", seed);
    repro->add_option("--out", out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        if (solve->parsed()) return cmd_solve(model_name, K, beta, objective, info, trunc, out);
        if (solve_inf->parsed())
            return cmd_solve_inf(model_name, beta, objective, info, n_inf, out);
        if (sim->parsed())
            return cmd_simulate(model_name, policy_spec, steps, seeds, K, beta, objective,
                                trunc, trace_path, out);
        if (sweep->parsed())
            return cmd_sweep(model_name, betas, objective, info, finite, K, steps, seed, out);
        if (verify->parsed())
            return cmd_verify(model_name, K, beta, objective, n_inf, samples, seed, out);
        if (bounds->parsed()) return cmd_bounds(model_name, out);
        if (repro->parsed()) return cmd_reproduce(repro_what, repro_steps, seed, out);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ModelError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitSolver;
    }
    return kExitUsage;
}
