#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "csched/model.hpp"

namespace csched {

enum class ObjectiveKind { Covariance, Information };

struct ObjectiveConfig {
    double beta = 0.5;
    ObjectiveKind kind = ObjectiveKind::Covariance;

    void validate() const {
        if (!(beta > 0.0 && beta < 1.0)) throw ModelError("beta must lie in (0,1)");
    }
};

/// Value-to-go tables for the full-information finite-horizon problem.
///
/// The public grid per stage is (n, n_e) in [0,K]^2. Internally each stage
/// is stored on the wider grid [0, K+k-1]^2 so that the recursion is exact
/// everywhere, including states unreachable from (0,0).
struct ValueTable {
    int K = 0;
    std::vector<std::vector<double>> stages;  // stages[k-1], row-major width(k)^2

    int width(int k) const { return K + k; }  // valid indices 0 .. width-1

    /// J_k(f^n(P0), f^ne(P0)); k = K+1 returns 0.
    double at(int k, int n, int ne) const;
};

/// Argmin decisions matching a ValueTable; entries in {0,1}.
struct PolicyTable {
    int K = 0;
    std::vector<std::vector<std::uint8_t>> stages;
    std::string metadata;

    int width(int k) const { return K + k; }
    int nu(int k, int n, int ne) const;
};

struct FullSolution {
    ValueTable values;
    PolicyTable policy;
};

/// One-stage expected cost at ladder indices (n, n_e) under decision nu.
double stage_cost(int n, int ne, int nu, const ObjectiveConfig& objective,
                  const CovarianceLadder& ladder, const SystemModel& model);

/// Exact backward DP over horizon K. Requires ladder.depth() >= K+1; the
/// ladder is deepened internally as needed for the extended grid.
FullSolution solve_finite_full(const SystemModel& model, const CovarianceLadder& ladder,
                               int K, const ObjectiveConfig& objective);

/// Gap between the no-transmit and transmit branch values at stage k.
/// Positive iff transmitting is strictly optimal.
double phi_gap(int k, int n, int ne, const ValueTable& values,
               const ObjectiveConfig& objective, const CovarianceLadder& ladder,
               const SystemModel& model);

/// CSV columns k,n,n_e,nu over the public [0,K]^2 grid, k outer.
void write_policy_csv(std::ostream& out, const PolicyTable& policy);
/// CSV columns k,n,n_e,J over the public [0,K]^2 grid.
void write_values_csv(std::ostream& out, const ValueTable& values);

inline constexpr double kTieTolerance = 1e-12;

}  // namespace csched
