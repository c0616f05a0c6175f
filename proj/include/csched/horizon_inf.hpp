#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "csched/belief_dp.hpp"
#include "csched/sched_dp.hpp"

namespace csched {

/// Average-cost solution on the truncated grid [0,N]^2. The top rung is
/// absorbing: f maps rung N to rung N.
struct AvgCostSolution {
    double rho = 0.0;             // optimal average cost per stage
    int N = 0;                    // grid truncation
    std::vector<double> h;        // relative values, row-major (N+1)^2
    std::vector<std::uint8_t> policy;  // stationary greedy decisions
    int iterations = 0;
    double residual = 0.0;        // final span of the value update

    double h_at(int n, int ne) const { return h[static_cast<size_t>(n) * (N + 1) + ne]; }
    int nu(int n, int ne) const { return policy[static_cast<size_t>(n) * (N + 1) + ne]; }
};

AvgCostSolution relative_value_iteration(const SystemModel& model, const CovarianceLadder& ladder,
                                         const ObjectiveConfig& objective, int N,
                                         double tol = 1e-9, int max_iter = 100000,
                                         int anchor_n = 0, int anchor_ne = 0);

/// Average-cost solution for the partial-information problem. The state is
/// (estimator rung n, suffix of the last N transmission decisions); the
/// suffix determines the truncated belief over the eavesdropper rung.
struct AvgCostBeliefSolution {
    double rho = 0.0;
    int N = 0;
    std::vector<double> h;             // (2^N) * (N+1), index suffix*(N+1)+n
    std::vector<std::uint8_t> policy;
    int iterations = 0;
    double residual = 0.0;

    double h_at(std::uint64_t suffix, int n) const {
        return h[static_cast<size_t>(suffix) * (N + 1) + n];
    }
    int nu(std::uint64_t suffix, int n) const {
        return policy[static_cast<size_t>(suffix) * (N + 1) + n];
    }
};

/// Truncated belief over eavesdropper rungs implied by a decision suffix
/// (bit 0 = most recent decision).
BeliefVector belief_from_suffix(std::uint64_t suffix, int N, const SystemModel& model);

AvgCostBeliefSolution relative_value_iteration_partial(const SystemModel& model,
                                                       const CovarianceLadder& ladder,
                                                       const ObjectiveConfig& objective, int N,
                                                       double tol = 1e-9, int max_iter = 100000);

/// Stationary rule: transmit iff the estimator holding count is >= t.
/// Usable whether or not the eavesdropper state is known.
struct ThresholdPolicy {
    int t = 0;
    bool transmit(int n) const { return n >= t; }
};

/// Smallest t such that lambda_e < 1 - 1/(lambda * rho(A)^(2(t+1))).
/// Requires rho(A) > 1 and lambda above the stability threshold.
int min_t_for_unbounded(const SystemModel& model);

/// Uniform bounds on the per-step half-log-det growth rate of the ladder.
struct LeakageBounds {
    double delta_U = 0.0;
    double delta_L = 0.0;
    long N_prime = 0;  // split point used in the lower-bound construction
};

LeakageBounds leakage_bounds(const SystemModel& model, const SteadyState& steady);

/// CSV: one header record with rho/iterations/residual, then n,n_e,h,nu rows.
void write_avg_cost_csv(std::ostream& out, const AvgCostSolution& sol);

}  // namespace csched
