#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csched/structcheck.hpp"

namespace csched {

/// Raw-measurement transmission mode. Covariances evolve by map composition:
/// g on reception (measurement update + predict), f otherwise. Composition
/// nodes are coded by bit-strings in application order, g -> '0', f -> '1';
/// a node index at depth d packs those bits with the newest map in the low
/// bit, so child(i, bit) = 2*i + bit.
struct MeasTree {
    std::vector<std::vector<Matrix>> values;  // values[d][i], 2^d nodes at depth d
    std::vector<std::vector<double>> traces;

    int depth() const { return static_cast<int>(values.size()) - 1; }
};

MeasTree build_meas_tree(const Matrix& root, int depth, const SystemModel& model);

/// Applies the coded map sequence left to right ('1' = f, '0' = g);
/// the empty string is the identity.
Matrix composition_value(const std::string& bits, const Matrix& P0,
                         const SystemModel& model);

/// One-step cost of the measurement-mode tradeoff objective at predicted
/// covariances (P, P_e).
double meas_stage_cost(const Matrix& P, const Matrix& Pe, int nu, double beta,
                       const SystemModel& model);

inline constexpr int kMeasDepthCap = 12;

/// Full-information DP over composition-node pairs rooted at the predicted
/// steady state. Stage k lives at depth k-1; index = i * 2^(k-1) + ie.
struct MeasFullSolution {
    int K = 0;
    double beta = 0.0;
    std::vector<std::vector<double>> values;
    std::vector<std::vector<std::uint8_t>> policy;

    int nodes_at(int k) const { return 1 << (k - 1); }
    double value_at(int k, int i, int ie) const;
    int nu(int k, int i, int ie) const;
};

MeasFullSolution solve_finite_full_meas(const SystemModel& model, int K, double beta);

/// Partial information: the eavesdropper node is unknown; its belief is
/// determined by the decision history h (newest decision in the low bit).
/// Estimator nodes i compatible with h satisfy (h | i) == all-ones: a
/// skipped transmission forces the f branch.
struct MeasPartialSolution {
    int K = 0;
    double beta = 0.0;
    std::vector<std::vector<double>> values;  // values[k-1], dense h * 2^(k-1) + i
    std::vector<std::vector<std::uint8_t>> policy;

    int nodes_at(int k) const { return 1 << (k - 1); }
    bool valid(int k, std::uint64_t h, int i) const;
    double value_at(int k, std::uint64_t h, int i) const;
    int nu(int k, std::uint64_t h, int i) const;
};

MeasPartialSolution solve_finite_partial_meas(const SystemModel& model, int K, double beta);

/// Belief over eavesdropper nodes at depth k-1 implied by decision history h.
std::vector<double> meas_belief(std::uint64_t h, int k, const SystemModel& model);

/// Threshold structure at stage k via pairwise PSD comparisons of node
/// covariances: the transmit set must be upward closed in P at fixed P_e
/// and downward closed in P_e at fixed P. For scalar systems nodes are
/// totally ordered and this is the usual sorted scan.
StructureReport threshold_check_meas(const MeasFullSolution& sol, const MeasTree& tree,
                                     int k, const SystemModel& model);

/// Partial variant: upward closedness in P at each fixed decision history.
StructureReport threshold_check_meas_partial(const MeasPartialSolution& sol,
                                             const MeasTree& tree, int k,
                                             const SystemModel& model);

/// Final-stage costs at (root, f(root)) and (P_alt, f(root)).
struct FinalStageScan {
    double c0_root = 0.0, c1_root = 0.0;
    double c0_alt = 0.0, c1_alt = 0.0;
    int nu_root = 0, nu_alt = 0;
};

FinalStageScan final_stage_scan(const SystemModel& model, double beta, const Matrix& P_alt);

/// Checks upward closedness of the transmit set over {root, P_alt} at fixed
/// P_e = f(root); the documented vector counterexample makes this fail.
StructureReport counterexample_check(const SystemModel& model, double beta,
                                     const Matrix& P_alt);

std::string node_bits(std::uint64_t code, int len);

/// CSV columns k,node_bits,e_node_or_belief_id,nu.
void write_meas_policy_csv(std::ostream& out, const MeasFullSolution& sol);
void write_meas_policy_csv(std::ostream& out, const MeasPartialSolution& sol);

}  // namespace csched
