#include "csched/belief_dp.hpp"

#include <cmath>
#include <ostream>
#include <unordered_map>

namespace csched {

void BeliefVector::validate(double tol) const {
    double sum = 0.0;
    for (double p : probs) {
        if (p < -tol) throw ModelError("belief has a negative component");
        sum += p;
    }
    if (std::abs(sum - 1.0) > tol) throw ModelError("belief does not sum to 1");
}

BeliefVector belief_update(const BeliefVector& pi, int nu, const SystemModel& model) {
    const int L = pi.size();
    if (L < 1) throw ModelError("belief_update: empty belief");
    if (std::abs(pi.probs.back()) > 1e-12)
        throw TruncationError("belief_update: mass would shift off the end of an exact belief");
    BeliefVector out;
    out.probs.assign(static_cast<size_t>(L), 0.0);
    const double scale = nu ? (1.0 - model.lambda_e) : 1.0;
    for (int i = 0; i + 1 < L; ++i) out.probs[static_cast<size_t>(i) + 1] = scale * pi.probs[static_cast<size_t>(i)];
    if (nu) out.probs[0] = model.lambda_e;
    return out;
}

BeliefVector belief_update_truncated(const BeliefVector& pi, int nu,
                                     const SystemModel& model, int N) {
    if (pi.size() != N + 1) throw ModelError("belief_update_truncated: belief length must be N+1");
    BeliefVector out;
    out.probs.assign(static_cast<size_t>(N) + 1, 0.0);
    const double scale = nu ? (1.0 - model.lambda_e) : 1.0;
    for (int i = 0; i + 1 <= N; ++i) out.probs[static_cast<size_t>(i) + 1] = scale * pi.probs[static_cast<size_t>(i)];
    out.probs[static_cast<size_t>(N)] += scale * pi.probs[static_cast<size_t>(N)];
    if (nu) out.probs[0] = model.lambda_e;
    return out;
}

double expected_eaves_stat(const BeliefVector& pi, const CovarianceLadder& ladder,
                           ObjectiveKind kind) {
    if (pi.size() > ladder.depth())
        throw TruncationError("expected_eaves_stat: belief longer than ladder");
    double acc = 0.0;
    for (int i = 0; i < pi.size(); ++i) {
        const double stat = kind == ObjectiveKind::Covariance
                                ? ladder.trace_at(i + 1)
                                : 0.5 * ladder.logdet_at(i + 1);
        acc += stat * pi.probs[static_cast<size_t>(i)];
    }
    return acc;
}

double PartialSolution::value_at(int k, int node, int n) const {
    if (k < 1 || k > K) throw TruncationError("PartialSolution: stage out of range");
    const int w = width(k);
    if (n < 0 || n >= w) throw TruncationError("PartialSolution: rung out of range");
    const auto& level = nodes[static_cast<size_t>(k - 1)];
    if (node < 0 || node >= static_cast<int>(level.size()))
        throw TruncationError("PartialSolution: unknown belief node");
    return values[static_cast<size_t>(k - 1)][static_cast<size_t>(node) * w + n];
}

int PartialSolution::nu(int k, int node, int n) const {
    if (k < 1 || k > K) throw TruncationError("PartialSolution: stage out of range");
    const int w = width(k);
    if (n < 0 || n >= w) throw TruncationError("PartialSolution: rung out of range");
    return policy[static_cast<size_t>(k - 1)][static_cast<size_t>(node) * w + n];
}

int PartialSolution::node_id(int depth, int idx) const {
    int id = idx;
    for (int d = 0; d < depth; ++d) id += static_cast<int>(nodes[static_cast<size_t>(d)].size());
    return id;
}

std::size_t PartialSolution::node_count() const {
    std::size_t total = 0;
    for (const auto& level : nodes) total += level.size();
    return total;
}

namespace {

double partial_stage_cost(int n, const BeliefVector& pi, int nu,
                          const ObjectiveConfig& objective, const CovarianceLadder& ladder,
                          const SystemModel& model) {
    const double beta = objective.beta;
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    const double est = nu * lam * ladder.trace_at(0) + (1.0 - nu * lam) * ladder.trace_at(n + 1);
    if (objective.kind == ObjectiveKind::Covariance) {
        const double eav = nu * lam_e * ladder.trace_at(0) +
                           (1.0 - nu * lam_e) * expected_eaves_stat(pi, ladder, objective.kind);
        return beta * est - (1.0 - beta) * eav;
    }
    const double leak = expected_eaves_stat(pi, ladder, objective.kind) -
                        0.5 * ladder.logdet_at(0);
    return beta * est + (1.0 - beta) * nu * lam_e * leak;
}

}  // namespace

PartialSolution solve_finite_partial(const SystemModel& model, const CovarianceLadder& ladder,
                                     int K, const ObjectiveConfig& objective,
                                     std::optional<int> truncation) {
    objective.validate();
    if (K < 1) throw ModelError("solve_finite_partial: K must be >= 1");
    const bool exact = !truncation.has_value();
    if (exact && K > kExactBeliefDepthCap)
        throw ResourceError("solve_finite_partial: exact mode capped at K = " +
                            std::to_string(kExactBeliefDepthCap) + "; use truncated mode");
    const int N = exact ? -1 : *truncation;
    if (!exact && N < 1) throw ModelError("solve_finite_partial: truncation must be >= 1");

    CovarianceLadder lad = ladder;
    lad.extend_to(std::max(2 * K, (exact ? K : N) + 2), model);

    PartialSolution sol;
    sol.K = K;
    sol.trunc = exact ? -1 : N;
    sol.objective = objective;
    sol.nodes.resize(static_cast<size_t>(K));

    // Forward enumeration from the point-mass root.
    BeliefVector root;
    root.probs.assign(static_cast<size_t>(exact ? K + 1 : N + 1), 0.0);
    root.probs[0] = 1.0;
    sol.nodes[0].push_back(BeliefNode{root, 0, -1, -1});

    for (int d = 0; d + 1 < K; ++d) {
        auto& level = sol.nodes[static_cast<size_t>(d)];
        auto& next = sol.nodes[static_cast<size_t>(d) + 1];
        std::unordered_map<std::uint64_t, int> index;
        for (auto& node : level) {
            for (int nu = 0; nu <= 1; ++nu) {
                std::uint64_t key = (node.key << 1) | static_cast<std::uint64_t>(nu);
                if (!exact && d + 1 > N) key &= (std::uint64_t{1} << N) - 1;
                auto it = index.find(key);
                int child;
                if (it != index.end()) {
                    child = it->second;
                } else {
                    child = static_cast<int>(next.size());
                    BeliefVector b = exact ? belief_update(node.belief, nu, model)
                                           : belief_update_truncated(node.belief, nu, model, N);
                    next.push_back(BeliefNode{std::move(b), key, -1, -1});
                    index.emplace(key, child);
                }
                (nu ? node.child1 : node.child0) = child;
            }
        }
    }

    // Backward DP.
    sol.values.resize(static_cast<size_t>(K));
    sol.policy.resize(static_cast<size_t>(K));
    const double lam = model.lambda;
    for (int k = K; k >= 1; --k) {
        const auto& level = sol.nodes[static_cast<size_t>(k - 1)];
        const int w = sol.width(k);
        auto& J = sol.values[static_cast<size_t>(k - 1)];
        auto& pol = sol.policy[static_cast<size_t>(k - 1)];
        J.assign(level.size() * static_cast<size_t>(w), 0.0);
        pol.assign(level.size() * static_cast<size_t>(w), 0);
        for (size_t m = 0; m < level.size(); ++m) {
            const BeliefNode& node = level[m];
            for (int n = 0; n < w; ++n) {
                double c0 = partial_stage_cost(n, node.belief, 0, objective, lad, model);
                double c1 = partial_stage_cost(n, node.belief, 1, objective, lad, model);
                if (k < K) {
                    c0 += sol.value_at(k + 1, node.child0, n + 1);
                    c1 += lam * sol.value_at(k + 1, node.child1, 0) +
                          (1.0 - lam) * sol.value_at(k + 1, node.child1, n + 1);
                }
                const bool transmit = c1 < c0 - kTieTolerance;
                J[m * static_cast<size_t>(w) + static_cast<size_t>(n)] = transmit ? c1 : c0;
                pol[m * static_cast<size_t>(w) + static_cast<size_t>(n)] = transmit ? 1 : 0;
            }
        }
    }
    return sol;
}

double psi_gap(int k, int n, int node, const PartialSolution& sol,
               const SystemModel& model, const CovarianceLadder& ladder) {
    const auto& level = sol.nodes.at(static_cast<size_t>(k - 1));
    if (node < 0 || node >= static_cast<int>(level.size()))
        throw TruncationError("psi_gap: unknown belief node");
    const BeliefNode& bn = level[static_cast<size_t>(node)];
    double c0 = partial_stage_cost(n, bn.belief, 0, sol.objective, ladder, model);
    double c1 = partial_stage_cost(n, bn.belief, 1, sol.objective, ladder, model);
    if (k < sol.K) {
        c0 += sol.value_at(k + 1, bn.child0, n + 1);
        c1 += model.lambda * sol.value_at(k + 1, bn.child1, 0) +
              (1.0 - model.lambda) * sol.value_at(k + 1, bn.child1, n + 1);
    }
    return c0 - c1;
}

void write_partial_policy_csv(std::ostream& out, const PartialSolution& sol) {
    out << "k,n,belief_id,nu\n";
    for (int k = 1; k <= sol.K; ++k) {
        const auto& level = sol.nodes[static_cast<size_t>(k - 1)];
        for (int n = 0; n <= sol.K; ++n)
            for (size_t m = 0; m < level.size(); ++m)
                out << k << ',' << n << ',' << sol.node_id(k - 1, static_cast<int>(m)) << ','
                    << sol.nu(k, static_cast<int>(m), n) << '\n';
    }
}

void write_belief_defs_csv(std::ostream& out, const PartialSolution& sol) {
    out << "belief_id";
    const int len = sol.nodes[0][0].belief.size();
    for (int i = 0; i < len; ++i) out << ",p" << i;
    out << '\n';
    for (size_t d = 0; d < sol.nodes.size(); ++d) {
        for (size_t m = 0; m < sol.nodes[d].size(); ++m) {
            out << sol.node_id(static_cast<int>(d), static_cast<int>(m));
            for (double p : sol.nodes[d][m].belief.probs) out << ',' << p;
            out << '\n';
        }
    }
}

}  // namespace csched
