#include "csched/simkit.hpp"

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <mutex>
#include <ostream>
#include <random>
#include <thread>

namespace csched {

int FullTablePolicy::decide(long k, int n, int ne) {
    const int K = table_.K;
    const int kk = static_cast<int>((k - 1) % K) + 1;
    return table_.nu(kk, std::min(n, K), std::min(ne, K));
}

int PartialTablePolicy::decide(long k, int n, int) {
    const int K = sol_->K;
    const int kk = static_cast<int>((k - 1) % K) + 1;
    if (kk == 1) node_ = 0;
    const int nu = sol_->nu(kk, node_, std::min(n, sol_->width(kk) - 1));
    if (kk < K) {
        const auto& bn = sol_->nodes[static_cast<size_t>(kk - 1)][static_cast<size_t>(node_)];
        node_ = nu ? bn.child1 : bn.child0;
    }
    return nu;
}

int StationaryTablePolicy::decide(long, int n, int ne) {
    return sol_.nu(std::min(n, sol_.N), std::min(ne, sol_.N));
}

int StationaryBeliefPolicy::decide(long, int n, int) {
    const int nu = sol_.nu(suffix_, std::min(n, sol_.N));
    const std::uint64_t mask = (std::uint64_t{1} << sol_.N) - 1;
    suffix_ = ((suffix_ << 1) | static_cast<std::uint64_t>(nu)) & mask;
    return nu;
}

int MeasFullPolicy::decide(long k, int n, int ne) {
    const int K = sol_->K;
    const int kk = static_cast<int>((k - 1) % K) + 1;
    return sol_->nu(kk, n, ne);
}

int MeasPartialPolicy::decide(long k, int n, int) {
    const int K = sol_->K;
    const int kk = static_cast<int>((k - 1) % K) + 1;
    if (kk == 1) hist_ = 0;
    const int nu = sol_->nu(kk, hist_, n);
    hist_ = (hist_ << 1) | static_cast<std::uint64_t>(nu);
    return nu;
}

namespace {

constexpr std::uint64_t kNoiseStreamSalt = 0x9e3779b97f4a7c15ULL;
// Stop extending the explicit ladder once rungs are this ill-conditioned
// (max eigenvalue ~1e12 against the Q-floor); log-det factorizations degrade
// beyond it. Deeper rungs use the log-domain extrapolation.
constexpr double kMatrixTraceLimit = 1e12;

/// Ladder with on-demand extension and log-domain extrapolation past the
/// rung cap (or past the point where matrix entries would overflow).
class SimLadder {
public:
    SimLadder(const Matrix& P0, const SystemModel& model)
        : model_(&model), lad_(build_ladder(P0, 1, model)) {
        slope_tr_ = 2.0 * std::log(std::max(spectral_radius(model.A), 1e-12));
    }

    double trace(int n) {
        ensure(n);
        if (n <= lad_.depth()) return lad_.trace_at(n);
        extrapolated_ = true;
        return std::exp(log_trace(n));
    }

    double log_trace(int n) {
        ensure(n);
        if (n <= lad_.depth()) return std::log(lad_.trace_at(n));
        extrapolated_ = true;
        return std::log(lad_.traces.back()) + (n - lad_.depth()) * slope_tr_;
    }

    double logdet(int n) {
        ensure(n);
        if (n <= lad_.depth()) return lad_.logdet_at(n);
        extrapolated_ = true;
        const size_t d = lad_.logdets.size();
        const double slope = d >= 2 ? lad_.logdets[d - 1] - lad_.logdets[d - 2] : 0.0;
        return lad_.logdets.back() + (n - lad_.depth()) * slope;
    }

    bool extrapolated() const { return extrapolated_; }

private:
    void ensure(int n) {
        while (lad_.depth() < std::min(n, kSimLadderCap) &&
               lad_.traces.back() < kMatrixTraceLimit)
            lad_.extend_to(lad_.depth() + 1, *model_);
    }

    const SystemModel* model_;
    CovarianceLadder lad_;
    double slope_tr_;
    bool extrapolated_ = false;
};

}  // namespace

SimRecord simulate(const SystemModel& model, Policy& policy, const SimConfig& config) {
    if (config.horizon < 1) throw ModelError("simulate: horizon must be >= 1");
    if (config.episodes < 1) throw ModelError("simulate: episodes must be >= 1");
    if (config.mode == TxMode::MeasurementTx && config.horizon > 30)
        throw ResourceError("simulate: measurement-mode horizon capped at 30");

    std::mt19937_64 chan(config.seed);
    std::mt19937_64 noise(config.seed ^ kNoiseStreamSalt);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::normal_distribution<double> gauss;

    const SteadyState steady = steady_state_filter(model);
    const int nx = model.n_x();
    const int ny = model.n_y();

    SimRecord rec;
    rec.policy_name = policy.name();
    rec.seed = config.seed;

    double sum_trP = 0.0, sum_trPe = 0.0, sum_Ie = 0.0, sum_mse = 0.0;
    long step_index = 0;

    // State-tracking machinery (noise stream only; never touches scheduling).
    Matrix chol_Q, chol_R, gain;
    Eigen::VectorXd x, xs, xhat;
    if (config.track_states) {
        chol_Q = Eigen::LLT<Matrix>(symmetrize(model.Q)).matrixL();
        chol_R = Eigen::LLT<Matrix>(symmetrize(model.R)).matrixL();
        const Matrix S = model.C * steady.P_bar_plus * model.C.transpose() + model.R;
        gain = S.ldlt().solve(model.C * steady.P_bar_plus).transpose();
    }
    auto draw = [&](int dim) {
        Eigen::VectorXd z(dim);
        for (int i = 0; i < dim; ++i) z(i) = gauss(noise);
        return z;
    };

    if (config.mode == TxMode::EstimateTx) {
        SimLadder ladder(steady.P_bar, model);
        for (long ep = 0; ep < config.episodes; ++ep) {
            policy.reset();
            int n = 0, ne = 0;
            if (config.track_states) {
                x = Eigen::VectorXd::Zero(nx);
                xs = x;
                xhat = x;
            }
            for (long k = 1; k <= config.horizon; ++k) {
                const int nu = policy.decide(k, n, ne);
                const bool gamma = unif(chan) < model.lambda;
                const bool gamma_e = unif(chan) < model.lambda_e;

                double Ie = 0.0;
                if (nu && gamma_e) {
                    Ie = 0.5 * (ladder.logdet(ne + 1) - ladder.logdet(0));
                    ne = 0;
                } else {
                    ++ne;
                }
                n = (nu && gamma) ? 0 : n + 1;

                sum_trP += ladder.trace(n);
                sum_trPe += ladder.trace(ne);
                sum_Ie += Ie;
                rec.transmissions += nu;
                rec.receptions += (nu && gamma) ? 1 : 0;
                rec.eaves_receptions += (nu && gamma_e) ? 1 : 0;

                if (config.track_states) {
                    x = model.A * x + chol_Q * draw(nx);
                    const Eigen::VectorXd y = model.C * x + chol_R * draw(ny);
                    const Eigen::VectorXd xs_pred = model.A * xs;
                    xs = xs_pred + gain * (y - model.C * xs_pred);
                    xhat = (nu && gamma) ? xs : Eigen::VectorXd(model.A * xhat);
                    sum_mse += (x - xhat).squaredNorm();
                }
                ++step_index;
                if (config.record_trace)
                    rec.trace.push_back(StepTrace{step_index, nu, gamma ? 1 : 0,
                                                  gamma_e ? 1 : 0, n, ne, Ie});
            }
        }
        rec.extrapolated = ladder.extrapolated();
    } else {
        for (long ep = 0; ep < config.episodes; ++ep) {
            policy.reset();
            Matrix P = steady.P_bar_plus, Pe = steady.P_bar_plus;
            int code = 0, code_e = 0;
            for (long k = 1; k <= config.horizon; ++k) {
                const int nu = policy.decide(k, code, code_e);
                const bool gamma = unif(chan) < model.lambda;
                const bool gamma_e = unif(chan) < model.lambda_e;

                double Ie = 0.0;
                if (nu && gamma_e) {
                    const Matrix S = model.C * Pe * model.C.transpose() + model.R;
                    const Matrix filt = symmetrize(
                        Pe - Pe * model.C.transpose() * S.ldlt().solve(model.C * Pe));
                    Ie = 0.5 * (logdet_spd(Pe) - logdet_spd(filt));
                    Pe = riccati_update(Pe, model);
                    code_e = 2 * code_e;
                } else {
                    Pe = riccati_predict(Pe, model);
                    code_e = 2 * code_e + 1;
                }
                if (nu && gamma) {
                    P = riccati_update(P, model);
                    code = 2 * code;
                } else {
                    P = riccati_predict(P, model);
                    code = 2 * code + 1;
                }

                sum_trP += P.trace();
                sum_trPe += Pe.trace();
                sum_Ie += Ie;
                rec.transmissions += nu;
                rec.receptions += (nu && gamma) ? 1 : 0;
                rec.eaves_receptions += (nu && gamma_e) ? 1 : 0;
                ++step_index;
                if (config.record_trace)
                    rec.trace.push_back(StepTrace{step_index, nu, gamma ? 1 : 0,
                                                  gamma_e ? 1 : 0, code, code_e, Ie});
            }
        }
    }

    rec.steps = step_index;
    rec.mean_trP = sum_trP / step_index;
    rec.mean_trPe = sum_trPe / step_index;
    rec.mean_Ie = sum_Ie / step_index;
    rec.total_Ie = sum_Ie;
    rec.tx_rate = static_cast<double>(rec.transmissions) / step_index;
    if (config.track_states) rec.emp_mse = sum_mse / step_index;
    return rec;
}

Aggregate aggregate(std::vector<SimRecord> records) {
    if (records.empty()) throw ModelError("aggregate: no records");
    std::sort(records.begin(), records.end(),
              [](const SimRecord& a, const SimRecord& b) { return a.seed < b.seed; });
    Aggregate agg;
    agg.policy_name = records.front().policy_name;
    for (const auto& r : records) {
        if (r.policy_name != agg.policy_name)
            throw ModelError("aggregate: mixed policies (" + agg.policy_name + " vs " +
                             r.policy_name + ")");
        agg.total_steps += r.steps;
    }
    agg.runs = static_cast<int>(records.size());
    for (const auto& r : records) {
        const double w = static_cast<double>(r.steps) / agg.total_steps;
        agg.mean_trP += w * r.mean_trP;
        agg.mean_trPe += w * r.mean_trPe;
        agg.mean_Ie += w * r.mean_Ie;
        agg.tx_rate += w * r.tx_rate;
    }
    if (agg.runs > 1) {
        double vP = 0.0, vPe = 0.0;
        for (const auto& r : records) {
            vP += (r.mean_trP - agg.mean_trP) * (r.mean_trP - agg.mean_trP);
            vPe += (r.mean_trPe - agg.mean_trPe) * (r.mean_trPe - agg.mean_trPe);
        }
        agg.se_trP = std::sqrt(vP / (agg.runs - 1) / agg.runs);
        agg.se_trPe = std::sqrt(vPe / (agg.runs - 1) / agg.runs);
    }
    return agg;
}

int worker_count() {
    if (const char* env = std::getenv("COVERT_SCHED_WORKERS")) {
        const int w = std::atoi(env);
        if (w > 0) return w;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

std::vector<SweepPoint> sweep_beta(const SystemModel& model, const SweepSpec& spec,
                                   const std::vector<double>& betas) {
    for (double b : betas)
        if (!(b > 0.0 && b < 1.0))
            throw ModelError("sweep_beta: beta grid must lie in (0,1)");
    const SteadyState steady = steady_state_filter(model);
    const CovarianceLadder base = build_ladder(steady.P_bar, 2, model);

    std::vector<SweepPoint> points(betas.size());
    std::vector<size_t> next_index(1, 0);
    std::mutex mu;
    std::exception_ptr first_error;

    auto work = [&]() {
        for (;;) {
            size_t idx;
            {
                std::lock_guard<std::mutex> lock(mu);
                if (first_error || next_index[0] >= betas.size()) return;
                idx = next_index[0]++;
            }
            try {
                const double beta = betas[idx];
                const ObjectiveConfig obj{beta, spec.kind};
                std::unique_ptr<Policy> policy;
                SimConfig cfg;
                cfg.seed = spec.seed;
                if (spec.infinite) {
                    cfg.horizon = spec.sim_steps;
                    cfg.episodes = 1;
                    if (spec.info == InfoMode::Full)
                        policy = std::make_unique<StationaryTablePolicy>(
                            relative_value_iteration(model, base, obj, spec.horizon));
                    else
                        policy = std::make_unique<StationaryBeliefPolicy>(
                            relative_value_iteration_partial(model, base, obj, spec.horizon));
                } else {
                    cfg.horizon = spec.horizon;
                    cfg.episodes = std::max<long>(1, spec.sim_steps / spec.horizon);
                    if (spec.info == InfoMode::Full)
                        policy = std::make_unique<FullTablePolicy>(
                            solve_finite_full(model, base, spec.horizon, obj).policy);
                    else
                        policy = std::make_unique<PartialTablePolicy>(
                            std::make_shared<PartialSolution>(
                                solve_finite_partial(model, base, spec.horizon, obj)));
                }
                const SimRecord rec = simulate(model, *policy, cfg);
                points[idx] = SweepPoint{betas[idx], rec.mean_trP, rec.mean_trPe,
                                         rec.mean_Ie, rec.tx_rate};
            } catch (...) {
                std::lock_guard<std::mutex> lock(mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const int workers = std::min<int>(worker_count(), static_cast<int>(betas.size()));
    std::vector<std::thread> pool;
    for (int w = 1; w < workers; ++w) pool.emplace_back(work);
    work();
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
    return points;
}

void write_summary_csv(std::ostream& out, const std::vector<SimRecord>& records,
                       double beta, int t) {
    out << "policy,beta,t,mean_trP,mean_trPe,mean_Ie,tx_rate,steps,seed\n";
    for (const auto& r : records)
        out << r.policy_name << ',' << beta << ',' << t << ',' << r.mean_trP << ','
            << r.mean_trPe << ',' << r.mean_Ie << ',' << r.tx_rate << ',' << r.steps
            << ',' << r.seed << '\n';
}

void write_trace_csv(std::ostream& out, const SimRecord& record) {
    out << "k,nu,gamma,gamma_e,n,n_e,I_e\n";
    for (const auto& s : record.trace)
        out << s.k << ',' << s.nu << ',' << s.gamma << ',' << s.gamma_e << ',' << s.n
            << ',' << s.n_e << ',' << s.I_e << '\n';
}

void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points) {
    out << "beta,mean_trP,mean_trPe,mean_Ie,tx_rate\n";
    for (const auto& p : points)
        out << p.beta << ',' << p.mean_trP << ',' << p.mean_trPe << ',' << p.mean_Ie
            << ',' << p.tx_rate << '\n';
}

}  // namespace csched
