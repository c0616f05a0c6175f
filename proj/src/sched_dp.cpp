#include "csched/sched_dp.hpp"

#include <ostream>

namespace csched {

double ValueTable::at(int k, int n, int ne) const {
    if (k == K + 1) return 0.0;
    if (k < 1 || k > K) throw TruncationError("ValueTable: stage out of range");
    const int w = width(k);
    if (n < 0 || n >= w || ne < 0 || ne >= w)
        throw TruncationError("ValueTable: grid index out of range");
    return stages[static_cast<size_t>(k - 1)][static_cast<size_t>(n) * w + ne];
}

int PolicyTable::nu(int k, int n, int ne) const {
    if (k < 1 || k > K) throw TruncationError("PolicyTable: stage out of range");
    const int w = width(k);
    if (n < 0 || n >= w || ne < 0 || ne >= w)
        throw TruncationError("PolicyTable: grid index out of range");
    return stages[static_cast<size_t>(k - 1)][static_cast<size_t>(n) * w + ne];
}

double stage_cost(int n, int ne, int nu, const ObjectiveConfig& objective,
                  const CovarianceLadder& ladder, const SystemModel& model) {
    if (n + 1 > ladder.depth() || ne + 1 > ladder.depth())
        throw TruncationError("stage_cost: ladder too shallow");
    const double beta = objective.beta;
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    const double tr0 = ladder.trace_at(0);
    const double est = nu * lam * tr0 + (1.0 - nu * lam) * ladder.trace_at(n + 1);
    if (objective.kind == ObjectiveKind::Covariance) {
        const double eav = nu * lam_e * tr0 + (1.0 - nu * lam_e) * ladder.trace_at(ne + 1);
        return beta * est - (1.0 - beta) * eav;
    }
    // Expected leakage is nonzero only on an interception, which happens with
    // probability nu * lambda_e and drops the log-determinant back to rung 0.
    const double leak = 0.5 * (ladder.logdet_at(ne + 1) - ladder.logdet_at(0));
    return beta * est + (1.0 - beta) * nu * lam_e * leak;
}

FullSolution solve_finite_full(const SystemModel& model, const CovarianceLadder& ladder,
                               int K, const ObjectiveConfig& objective) {
    objective.validate();
    if (K < 1) throw ModelError("solve_finite_full: K must be >= 1");

    // The extended grid at stage K reaches rung 2K-1, whose stage cost needs
    // trace/logdet at rung 2K.
    CovarianceLadder lad = ladder;
    lad.extend_to(2 * K, model);

    const double lam = model.lambda;
    const double lam_e = model.lambda_e;

    FullSolution sol;
    sol.values.K = K;
    sol.values.stages.resize(static_cast<size_t>(K));
    sol.policy.K = K;
    sol.policy.stages.resize(static_cast<size_t>(K));
    sol.policy.metadata = objective.kind == ObjectiveKind::Covariance ? "covariance" : "information";

    for (int k = K; k >= 1; --k) {
        const int w = sol.values.width(k);
        auto& J = sol.values.stages[static_cast<size_t>(k - 1)];
        auto& nu = sol.policy.stages[static_cast<size_t>(k - 1)];
        J.assign(static_cast<size_t>(w) * w, 0.0);
        nu.assign(static_cast<size_t>(w) * w, 0);
        for (int n = 0; n < w; ++n) {
            for (int ne = 0; ne < w; ++ne) {
                const double c0 = stage_cost(n, ne, 0, objective, lad, model) +
                                  sol.values.at(k + 1, n + 1, ne + 1);
                const double c1 = stage_cost(n, ne, 1, objective, lad, model) +
                                  lam * lam_e * sol.values.at(k + 1, 0, 0) +
                                  lam * (1.0 - lam_e) * sol.values.at(k + 1, 0, ne + 1) +
                                  (1.0 - lam) * lam_e * sol.values.at(k + 1, n + 1, 0) +
                                  (1.0 - lam) * (1.0 - lam_e) * sol.values.at(k + 1, n + 1, ne + 1);
                // Ties go to nu = 0 (do not transmit).
                const bool transmit = c1 < c0 - kTieTolerance;
                J[static_cast<size_t>(n) * w + ne] = transmit ? c1 : c0;
                nu[static_cast<size_t>(n) * w + ne] = transmit ? 1 : 0;
            }
        }
    }
    return sol;
}

double phi_gap(int k, int n, int ne, const ValueTable& values,
               const ObjectiveConfig& objective, const CovarianceLadder& ladder,
               const SystemModel& model) {
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    const double c0 = stage_cost(n, ne, 0, objective, ladder, model) +
                      values.at(k + 1, n + 1, ne + 1);
    const double c1 = stage_cost(n, ne, 1, objective, ladder, model) +
                      lam * lam_e * values.at(k + 1, 0, 0) +
                      lam * (1.0 - lam_e) * values.at(k + 1, 0, ne + 1) +
                      (1.0 - lam) * lam_e * values.at(k + 1, n + 1, 0) +
                      (1.0 - lam) * (1.0 - lam_e) * values.at(k + 1, n + 1, ne + 1);
    return c0 - c1;
}

void write_policy_csv(std::ostream& out, const PolicyTable& policy) {
    out << "k,n,n_e,nu\n";
    for (int k = 1; k <= policy.K; ++k)
        for (int n = 0; n <= policy.K; ++n)
            for (int ne = 0; ne <= policy.K; ++ne)
                out << k << ',' << n << ',' << ne << ',' << policy.nu(k, n, ne) << '\n';
}

void write_values_csv(std::ostream& out, const ValueTable& values) {
    out << "k,n,n_e,J\n";
    for (int k = 1; k <= values.K; ++k)
        for (int n = 0; n <= values.K; ++n)
            for (int ne = 0; ne <= values.K; ++ne)
                out << k << ',' << n << ',' << ne << ',' << values.at(k, n, ne) << '\n';
}

}  // namespace csched
