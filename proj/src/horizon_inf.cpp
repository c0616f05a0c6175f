#include "csched/horizon_inf.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <bit>
#include <cmath>
#include <limits>
#include <ostream>

namespace csched {

namespace {

// Stage cost on the truncated ladder; rung N is absorbing under f.
double truncated_stage_cost(int n, int ne, int nu, const ObjectiveConfig& objective,
                            const CovarianceLadder& ladder, const SystemModel& model, int N) {
    const double beta = objective.beta;
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    const int nf = std::min(n + 1, N);
    const int nef = std::min(ne + 1, N);
    const double est = nu * lam * ladder.trace_at(0) + (1.0 - nu * lam) * ladder.trace_at(nf);
    if (objective.kind == ObjectiveKind::Covariance) {
        const double eav = nu * lam_e * ladder.trace_at(0) + (1.0 - nu * lam_e) * ladder.trace_at(nef);
        return beta * est - (1.0 - beta) * eav;
    }
    const double leak = 0.5 * (ladder.logdet_at(nef) - ladder.logdet_at(0));
    return beta * est + (1.0 - beta) * nu * lam_e * leak;
}

}  // namespace

AvgCostSolution relative_value_iteration(const SystemModel& model, const CovarianceLadder& ladder,
                                         const ObjectiveConfig& objective, int N,
                                         double tol, int max_iter,
                                         int anchor_n, int anchor_ne) {
    objective.validate();
    if (N < 2) throw ModelError("relative_value_iteration: N must be >= 2");
    CovarianceLadder lad = ladder;
    lad.extend_to(N, model);

    const int W = N + 1;
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    auto idx = [W](int n, int ne) { return static_cast<size_t>(n) * W + ne; };

    std::vector<double> V(static_cast<size_t>(W) * W, 0.0), Vn(V.size(), 0.0);
    double span = std::numeric_limits<double>::infinity();
    double rho = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        for (int n = 0; n < W; ++n) {
            const int nf = std::min(n + 1, N);
            for (int ne = 0; ne < W; ++ne) {
                const int nef = std::min(ne + 1, N);
                const double c0 = truncated_stage_cost(n, ne, 0, objective, lad, model, N) +
                                  V[idx(nf, nef)];
                const double c1 = truncated_stage_cost(n, ne, 1, objective, lad, model, N) +
                                  lam * lam_e * V[idx(0, 0)] +
                                  lam * (1.0 - lam_e) * V[idx(0, nef)] +
                                  (1.0 - lam) * lam_e * V[idx(nf, 0)] +
                                  (1.0 - lam) * (1.0 - lam_e) * V[idx(nf, nef)];
                Vn[idx(n, ne)] = std::min(c0, c1);
            }
        }
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = -dmin;
        for (size_t i = 0; i < V.size(); ++i) {
            const double d = Vn[i] - V[i];
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        span = dmax - dmin;
        rho = 0.5 * (dmax + dmin);
        V.swap(Vn);
        if (span < tol) break;
    }
    if (span >= tol)
        throw DivergenceError("relative_value_iteration: span " + std::to_string(span) +
                              " after " + std::to_string(max_iter) + " iterations");

    AvgCostSolution sol;
    sol.rho = rho;
    sol.N = N;
    sol.iterations = it + 1;
    sol.residual = span;
    sol.h.assign(V.size(), 0.0);
    const double anchor = V[idx(anchor_n, anchor_ne)];
    for (size_t i = 0; i < V.size(); ++i) sol.h[i] = V[i] - anchor;

    sol.policy.assign(V.size(), 0);
    for (int n = 0; n < W; ++n) {
        const int nf = std::min(n + 1, N);
        for (int ne = 0; ne < W; ++ne) {
            const int nef = std::min(ne + 1, N);
            const double c0 = truncated_stage_cost(n, ne, 0, objective, lad, model, N) +
                              sol.h[idx(nf, nef)];
            const double c1 = truncated_stage_cost(n, ne, 1, objective, lad, model, N) +
                              lam * lam_e * sol.h[idx(0, 0)] +
                              lam * (1.0 - lam_e) * sol.h[idx(0, nef)] +
                              (1.0 - lam) * lam_e * sol.h[idx(nf, 0)] +
                              (1.0 - lam) * (1.0 - lam_e) * sol.h[idx(nf, nef)];
            sol.policy[idx(n, ne)] = c1 < c0 - kTieTolerance ? 1 : 0;
        }
    }
    return sol;
}

BeliefVector belief_from_suffix(std::uint64_t suffix, int N, const SystemModel& model) {
    BeliefVector pi;
    pi.probs.assign(static_cast<size_t>(N) + 1, 0.0);
    double sum = 0.0;
    for (int i = 0; i < N; ++i) {
        if ((suffix >> i) & 1u) {
            const int misses = std::popcount(suffix & ((std::uint64_t{1} << i) - 1));
            pi.probs[static_cast<size_t>(i)] =
                model.lambda_e * std::pow(1.0 - model.lambda_e, misses);
            sum += pi.probs[static_cast<size_t>(i)];
        }
    }
    pi.probs[static_cast<size_t>(N)] = 1.0 - sum;
    return pi;
}

AvgCostBeliefSolution relative_value_iteration_partial(const SystemModel& model,
                                                       const CovarianceLadder& ladder,
                                                       const ObjectiveConfig& objective, int N,
                                                       double tol, int max_iter) {
    objective.validate();
    if (N < 2) throw ModelError("relative_value_iteration_partial: N must be >= 2");
    if (N > 20) throw ResourceError("relative_value_iteration_partial: suffix space 2^N capped at N = 20");
    CovarianceLadder lad = ladder;
    lad.extend_to(N + 1, model);

    const std::uint64_t S = std::uint64_t{1} << N;
    const std::uint64_t mask = S - 1;
    const int W = N + 1;
    const double beta = objective.beta;
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;

    // Per-suffix expected eavesdropper statistic over the implied belief.
    // The tail entry (no interception within the suffix) sits at the
    // absorbing rung N, matching the full-information truncation.
    std::vector<double> eav_stat(S, 0.0);
    for (std::uint64_t s = 0; s < S; ++s) {
        const BeliefVector pi = belief_from_suffix(s, N, model);
        double stat = 0.0;
        for (int i = 0; i <= N; ++i) {
            const int r = std::min(i + 1, N);
            stat += pi.probs[static_cast<size_t>(i)] *
                    (objective.kind == ObjectiveKind::Covariance ? lad.trace_at(r)
                                                                 : 0.5 * lad.logdet_at(r));
        }
        eav_stat[s] = stat;
    }

    auto idx = [W](std::uint64_t s, int n) { return static_cast<size_t>(s) * W + n; };
    auto cost = [&](std::uint64_t s, int n, int nu) {
        const double est = nu * lam * lad.trace_at(0) + (1.0 - nu * lam) * lad.trace_at(std::min(n + 1, N));
        if (objective.kind == ObjectiveKind::Covariance)
            return beta * est - (1.0 - beta) * (nu * lam_e * lad.trace_at(0) +
                                                (1.0 - nu * lam_e) * eav_stat[s]);
        return beta * est +
               (1.0 - beta) * nu * lam_e * (eav_stat[s] - 0.5 * lad.logdet_at(0));
    };

    std::vector<double> V(S * static_cast<size_t>(W), 0.0), Vn(V.size(), 0.0);
    double span = std::numeric_limits<double>::infinity();
    double rho = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        for (std::uint64_t s = 0; s < S; ++s) {
            const std::uint64_t s0 = (s << 1) & mask;
            const std::uint64_t s1 = ((s << 1) | 1u) & mask;
            for (int n = 0; n < W; ++n) {
                const int nf = std::min(n + 1, N);
                const double c0 = cost(s, n, 0) + V[idx(s0, nf)];
                const double c1 = cost(s, n, 1) + lam * V[idx(s1, 0)] + (1.0 - lam) * V[idx(s1, nf)];
                Vn[idx(s, n)] = std::min(c0, c1);
            }
        }
        double dmin = std::numeric_limits<double>::infinity();
        double dmax = -dmin;
        for (size_t i = 0; i < V.size(); ++i) {
            const double d = Vn[i] - V[i];
            dmin = std::min(dmin, d);
            dmax = std::max(dmax, d);
        }
        span = dmax - dmin;
        rho = 0.5 * (dmax + dmin);
        V.swap(Vn);
        if (span < tol) break;
    }
    if (span >= tol)
        throw DivergenceError("relative_value_iteration_partial: span " + std::to_string(span) +
                              " after " + std::to_string(max_iter) + " iterations");

    AvgCostBeliefSolution sol;
    sol.rho = rho;
    sol.N = N;
    sol.iterations = it + 1;
    sol.residual = span;
    sol.h.assign(V.size(), 0.0);
    const double anchor = V[0];
    for (size_t i = 0; i < V.size(); ++i) sol.h[i] = V[i] - anchor;
    sol.policy.assign(V.size(), 0);
    for (std::uint64_t s = 0; s < S; ++s) {
        const std::uint64_t s0 = (s << 1) & mask;
        const std::uint64_t s1 = ((s << 1) | 1u) & mask;
        for (int n = 0; n < W; ++n) {
            const int nf = std::min(n + 1, N);
            const double c0 = cost(s, n, 0) + sol.h[idx(s0, nf)];
            const double c1 = cost(s, n, 1) + lam * sol.h[idx(s1, 0)] + (1.0 - lam) * sol.h[idx(s1, nf)];
            sol.policy[idx(s, n)] = c1 < c0 - kTieTolerance ? 1 : 0;
        }
    }
    return sol;
}

int min_t_for_unbounded(const SystemModel& model) {
    const double rho = spectral_radius(model.A);
    if (rho <= 1.0)
        throw ModelError("min_t_for_unbounded: requires an unstable A (rho > 1)");
    if (model.lambda <= stability_threshold(model))
        throw ModelError("min_t_for_unbounded: lambda below the stability threshold");
    const double log_rho2 = 2.0 * std::log(rho);
    const double base = std::log(model.lambda) + std::log(1.0 - model.lambda_e);
    for (long t = 0; t <= 1000000; ++t) {
        if (base + static_cast<double>(t + 1) * log_rho2 > 0.0) return static_cast<int>(t);
    }
    throw ResourceError("min_t_for_unbounded: no t found below cap");
}

LeakageBounds leakage_bounds(const SystemModel& model, const SteadyState& steady) {
    const int nx = model.n_x();
    Eigen::JacobiSVD<Matrix> svd(model.A);
    const double smax = svd.singularValues().maxCoeff();
    const double rho = spectral_radius(model.A);
    if (rho <= 1.0 || smax <= 1.0)
        throw ModelError("leakage_bounds: requires rho(A) > 1 and s_max(A) > 1");

    Eigen::SelfAdjointEigenSolver<Matrix> esP(symmetrize(steady.P_bar));
    Eigen::SelfAdjointEigenSolver<Matrix> esQ(symmetrize(model.Q));
    const double sig_max_P = esP.eigenvalues().maxCoeff();
    const double sig_min_P = esP.eigenvalues().minCoeff();
    const double sig_max_Q = esQ.eigenvalues().maxCoeff();
    const double sig_min_Q = esQ.eigenvalues().minCoeff();

    const double logdet_P = logdet_spd(steady.P_bar);

    LeakageBounds b;
    // The closed-form construction bounds log det f^N(P_bar) alone; when
    // det(P_bar) < 1 the subtracted -1/2 log det P_bar term is positive and
    // must be kept (its worst case is N = 1) for the bound to hold uniformly.
    b.delta_U = 0.5 * nx * std::log(sig_max_P + sig_max_Q / (smax * smax - 1.0)) +
                nx * std::log(smax) + std::max(0.0, -0.5 * logdet_P);
    // Bracket term of the Delta_1 construction; N' is the first split point
    // that makes Delta_1 positive.
    const double bracket = 0.5 * std::log(sig_min_P) + 0.5 * (nx - 1) * std::log(sig_min_Q) -
                           0.5 * logdet_P;
    const double log_rho = std::log(rho);
    long n_prime = 1;
    if (bracket < 0.0) n_prime = static_cast<long>(std::floor(-bracket / log_rho)) + 1;
    if (n_prime > 1000000) throw ResourceError("leakage_bounds: N' exceeds search cap");
    const double delta_1 = log_rho + bracket / static_cast<double>(n_prime);

    CovarianceLadder lad = build_ladder(steady.P_bar, static_cast<int>(n_prime), model);
    double delta_2 = std::numeric_limits<double>::infinity();
    for (long N = 1; N <= n_prime; ++N) {
        const double q = (0.5 * lad.logdet_at(static_cast<int>(N)) - 0.5 * logdet_P) /
                         static_cast<double>(N);
        delta_2 = std::min(delta_2, q);
    }
    // Nudge below the attained minimum so the lower bound is strict.
    delta_2 *= (1.0 - 1e-9);

    b.N_prime = n_prime;
    b.delta_L = std::min(delta_1, delta_2);
    if (b.delta_L <= 0.0)
        throw NumericError("leakage_bounds: nonpositive lower bound (unexpected)");
    return b;
}

void write_avg_cost_csv(std::ostream& out, const AvgCostSolution& sol) {
    out << "rho,iterations,residual\n"
        << sol.rho << ',' << sol.iterations << ',' << sol.residual << '\n';
    out << "n,n_e,h,nu\n";
    for (int n = 0; n <= sol.N; ++n)
        for (int ne = 0; ne <= sol.N; ++ne)
            out << n << ',' << ne << ',' << sol.h_at(n, ne) << ',' << sol.nu(n, ne) << '\n';
}

}  // namespace csched
