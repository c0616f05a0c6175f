#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "csched/sched_dp.hpp"

namespace csched {

/// Probability distribution over eavesdropper ladder indices.
struct BeliefVector {
    std::vector<double> probs;

    int size() const { return static_cast<int>(probs.size()); }
    void validate(double tol = 1e-12) const;
};

/// Exact belief recursion: nu = 0 shifts mass one rung up, nu = 1 places
/// lambda_e at rung 0 and shifts the rest scaled by 1 - lambda_e.
/// Throws TruncationError if nonzero mass would fall off the end.
BeliefVector belief_update(const BeliefVector& pi, int nu, const SystemModel& model);

/// Truncated recursion on length-(N+1) vectors; the last component absorbs
/// overflow mass.
BeliefVector belief_update_truncated(const BeliefVector& pi, int nu,
                                     const SystemModel& model, int N);

/// Inner product of the belief with the shifted trace (Covariance) or
/// half log-determinant (Information) ladder.
double expected_eaves_stat(const BeliefVector& pi, const CovarianceLadder& ladder,
                           ObjectiveKind kind);

/// One node of the reachable belief tree. Beliefs are keyed by the decision
/// history: the full history in exact mode, the trailing min(depth, N) bits
/// in truncated mode (those bits determine the truncated belief exactly).
struct BeliefNode {
    BeliefVector belief;
    std::uint64_t key = 0;
    int child0 = -1;  // index at next depth under nu = 0
    int child1 = -1;
};

/// Partial-information DP solution: values/policy indexed by stage, belief
/// node at depth k-1, and estimator rung n (internal width K+k per stage).
struct PartialSolution {
    int K = 0;
    int trunc = -1;  // belief truncation N, or -1 for exact
    ObjectiveConfig objective;
    std::vector<std::vector<BeliefNode>> nodes;  // nodes[d], depths 0 .. K-1
    std::vector<std::vector<double>> values;     // values[k-1]: nodes(k-1) x width(k)
    std::vector<std::vector<std::uint8_t>> policy;

    int width(int k) const { return K + k; }
    double value_at(int k, int node, int n) const;
    int nu(int k, int node, int n) const;
    /// Globally unique id of node `idx` at `depth` (for CSV export).
    int node_id(int depth, int idx) const;
    std::size_t node_count() const;
};

inline constexpr int kExactBeliefDepthCap = 20;

/// Forward belief-tree enumeration followed by backward DP. Exact mode
/// (truncation = nullopt) is capped at K = 20; beyond that a ResourceError
/// directs the caller to truncated mode.
PartialSolution solve_finite_partial(const SystemModel& model, const CovarianceLadder& ladder,
                                     int K, const ObjectiveConfig& objective,
                                     std::optional<int> truncation = std::nullopt);

/// Gap between no-transmit and transmit branch values at stage k; positive
/// iff transmitting is strictly optimal.
double psi_gap(int k, int n, int node, const PartialSolution& sol,
               const SystemModel& model, const CovarianceLadder& ladder);

/// CSV columns k,n,belief_id,nu over reachable nodes, n in [0,K].
void write_partial_policy_csv(std::ostream& out, const PartialSolution& sol);
/// Sidecar CSV: belief_id,p0,p1,...
void write_belief_defs_csv(std::ostream& out, const PartialSolution& sol);

}  // namespace csched
