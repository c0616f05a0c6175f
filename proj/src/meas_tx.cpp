#include "csched/meas_tx.hpp"

#include <bit>
#include <cmath>
#include <ostream>
#include <sstream>

namespace csched {

MeasTree build_meas_tree(const Matrix& root, int depth, const SystemModel& model) {
    if (depth > kMeasDepthCap)
        throw ResourceError("build_meas_tree: depth beyond cap " + std::to_string(kMeasDepthCap));
    MeasTree tree;
    tree.values.resize(static_cast<size_t>(depth) + 1);
    tree.traces.resize(static_cast<size_t>(depth) + 1);
    tree.values[0] = {symmetrize(root)};
    tree.traces[0] = {root.trace()};
    for (int d = 0; d < depth; ++d) {
        const auto& level = tree.values[static_cast<size_t>(d)];
        auto& next = tree.values[static_cast<size_t>(d) + 1];
        auto& tr = tree.traces[static_cast<size_t>(d) + 1];
        next.resize(level.size() * 2);
        tr.resize(level.size() * 2);
        for (size_t i = 0; i < level.size(); ++i) {
            next[2 * i] = riccati_update(level[i], model);
            next[2 * i + 1] = riccati_predict(level[i], model);
            tr[2 * i] = next[2 * i].trace();
            tr[2 * i + 1] = next[2 * i + 1].trace();
        }
    }
    return tree;
}

Matrix composition_value(const std::string& bits, const Matrix& P0,
                         const SystemModel& model) {
    Matrix P = P0;
    for (char c : bits) {
        if (c == '1') P = riccati_predict(P, model);
        else if (c == '0') P = riccati_update(P, model);
        else throw ModelError("composition_value: bits must be '0' or '1'");
    }
    return P;
}

double meas_stage_cost(const Matrix& P, const Matrix& Pe, int nu, double beta,
                       const SystemModel& model) {
    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    const double tr_gP = riccati_update(P, model).trace();
    const double tr_fP = riccati_predict(P, model).trace();
    const double tr_gPe = riccati_update(Pe, model).trace();
    const double tr_fPe = riccati_predict(Pe, model).trace();
    const double est = nu * lam * tr_gP + (1.0 - nu * lam) * tr_fP;
    const double eav = nu * lam_e * tr_gPe + (1.0 - nu * lam_e) * tr_fPe;
    return beta * est - (1.0 - beta) * eav;
}

double MeasFullSolution::value_at(int k, int i, int ie) const {
    if (k == K + 1) return 0.0;
    return values[static_cast<size_t>(k - 1)]
                 [static_cast<size_t>(i) * nodes_at(k) + ie];
}

int MeasFullSolution::nu(int k, int i, int ie) const {
    return policy[static_cast<size_t>(k - 1)]
                 [static_cast<size_t>(i) * nodes_at(k) + ie];
}

MeasFullSolution solve_finite_full_meas(const SystemModel& model, int K, double beta) {
    if (K < 1) throw ModelError("solve_finite_full_meas: K must be >= 1");
    if (K > kMeasDepthCap)
        throw ResourceError("solve_finite_full_meas: K beyond cap " +
                            std::to_string(kMeasDepthCap));
    if (!(beta > 0.0 && beta < 1.0))
        throw ModelError("solve_finite_full_meas: beta must lie in (0,1)");
    const SteadyState steady = steady_state_filter(model);
    const MeasTree tree = build_meas_tree(steady.P_bar_plus, K, model);

    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    MeasFullSolution sol;
    sol.K = K;
    sol.beta = beta;
    sol.values.resize(static_cast<size_t>(K));
    sol.policy.resize(static_cast<size_t>(K));

    for (int k = K; k >= 1; --k) {
        const int W = sol.nodes_at(k);
        const auto& tr = tree.traces[static_cast<size_t>(k)];  // children of depth k-1
        auto& J = sol.values[static_cast<size_t>(k - 1)];
        auto& pol = sol.policy[static_cast<size_t>(k - 1)];
        J.assign(static_cast<size_t>(W) * W, 0.0);
        pol.assign(static_cast<size_t>(W) * W, 0);
        for (int i = 0; i < W; ++i) {
            const double tr_g = tr[static_cast<size_t>(2 * i)];
            const double tr_f = tr[static_cast<size_t>(2 * i) + 1];
            for (int ie = 0; ie < W; ++ie) {
                const double tre_g = tr[static_cast<size_t>(2 * ie)];
                const double tre_f = tr[static_cast<size_t>(2 * ie) + 1];
                double c0 = beta * tr_f - (1.0 - beta) * tre_f;
                double c1 = beta * (lam * tr_g + (1.0 - lam) * tr_f) -
                            (1.0 - beta) * (lam_e * tre_g + (1.0 - lam_e) * tre_f);
                if (k < K) {
                    c0 += sol.value_at(k + 1, 2 * i + 1, 2 * ie + 1);
                    c1 += lam * lam_e * sol.value_at(k + 1, 2 * i, 2 * ie) +
                          lam * (1.0 - lam_e) * sol.value_at(k + 1, 2 * i, 2 * ie + 1) +
                          (1.0 - lam) * lam_e * sol.value_at(k + 1, 2 * i + 1, 2 * ie) +
                          (1.0 - lam) * (1.0 - lam_e) *
                              sol.value_at(k + 1, 2 * i + 1, 2 * ie + 1);
                }
                const bool transmit = c1 < c0 - kTieTolerance;
                J[static_cast<size_t>(i) * W + ie] = transmit ? c1 : c0;
                pol[static_cast<size_t>(i) * W + ie] = transmit ? 1 : 0;
            }
        }
    }
    return sol;
}

bool MeasPartialSolution::valid(int k, std::uint64_t h, int i) const {
    const std::uint64_t mask = (std::uint64_t{1} << (k - 1)) - 1;
    return ((h | static_cast<std::uint64_t>(i)) & mask) == mask;
}

double MeasPartialSolution::value_at(int k, std::uint64_t h, int i) const {
    if (k == K + 1) return 0.0;
    return values[static_cast<size_t>(k - 1)]
                 [static_cast<size_t>(h) * nodes_at(k) + static_cast<size_t>(i)];
}

int MeasPartialSolution::nu(int k, std::uint64_t h, int i) const {
    return policy[static_cast<size_t>(k - 1)]
                 [static_cast<size_t>(h) * nodes_at(k) + static_cast<size_t>(i)];
}

std::vector<double> meas_belief(std::uint64_t h, int k, const SystemModel& model) {
    const int W = 1 << (k - 1);
    const std::uint64_t mask = static_cast<std::uint64_t>(W) - 1;
    std::vector<double> pi(static_cast<size_t>(W), 0.0);
    for (std::uint64_t ie = 0; ie < static_cast<std::uint64_t>(W); ++ie) {
        if (((h | ie) & mask) != mask) continue;  // nu=0 step forces the f branch
        const int hits = std::popcount(h & ~ie & mask);    // transmitted, intercepted
        const int misses = std::popcount(h & ie & mask);   // transmitted, missed
        pi[static_cast<size_t>(ie)] =
            std::pow(model.lambda_e, hits) * std::pow(1.0 - model.lambda_e, misses);
    }
    return pi;
}

MeasPartialSolution solve_finite_partial_meas(const SystemModel& model, int K, double beta) {
    if (K < 1) throw ModelError("solve_finite_partial_meas: K must be >= 1");
    if (K > kMeasDepthCap)
        throw ResourceError("solve_finite_partial_meas: K beyond cap " +
                            std::to_string(kMeasDepthCap));
    if (!(beta > 0.0 && beta < 1.0))
        throw ModelError("solve_finite_partial_meas: beta must lie in (0,1)");
    const SteadyState steady = steady_state_filter(model);
    const MeasTree tree = build_meas_tree(steady.P_bar_plus, K, model);

    const double lam = model.lambda;
    const double lam_e = model.lambda_e;
    MeasPartialSolution sol;
    sol.K = K;
    sol.beta = beta;
    sol.values.resize(static_cast<size_t>(K));
    sol.policy.resize(static_cast<size_t>(K));

    for (int k = K; k >= 1; --k) {
        const int W = sol.nodes_at(k);
        const std::uint64_t mask = static_cast<std::uint64_t>(W) - 1;
        const auto& tr = tree.traces[static_cast<size_t>(k)];
        auto& J = sol.values[static_cast<size_t>(k - 1)];
        auto& pol = sol.policy[static_cast<size_t>(k - 1)];
        J.assign(static_cast<size_t>(W) * W, 0.0);
        pol.assign(static_cast<size_t>(W) * W, 0);
        for (std::uint64_t h = 0; h < static_cast<std::uint64_t>(W); ++h) {
            // Expected child traces of the eavesdropper under the belief.
            double e_g = 0.0, e_f = 0.0;
            const std::vector<double> pi = meas_belief(h, k, model);
            for (std::uint64_t ie = 0; ie < static_cast<std::uint64_t>(W); ++ie) {
                const double p = pi[static_cast<size_t>(ie)];
                if (p == 0.0) continue;
                e_g += p * tr[static_cast<size_t>(2 * ie)];
                e_f += p * tr[static_cast<size_t>(2 * ie) + 1];
            }
            // Estimator nodes compatible with h: free bits where h transmitted.
            const std::uint64_t forced = ~h & mask;
            std::uint64_t s = h & mask;
            while (true) {
                const std::uint64_t i = forced | s;
                const double tr_g = tr[static_cast<size_t>(2 * i)];
                const double tr_f = tr[static_cast<size_t>(2 * i) + 1];
                double c0 = beta * tr_f - (1.0 - beta) * e_f;
                double c1 = beta * (lam * tr_g + (1.0 - lam) * tr_f) -
                            (1.0 - beta) * (lam_e * e_g + (1.0 - lam_e) * e_f);
                if (k < K) {
                    c0 += sol.value_at(k + 1, h << 1, 2 * i + 1);
                    c1 += lam * sol.value_at(k + 1, (h << 1) | 1u, 2 * i) +
                          (1.0 - lam) * sol.value_at(k + 1, (h << 1) | 1u, 2 * i + 1);
                }
                const bool transmit = c1 < c0 - kTieTolerance;
                J[static_cast<size_t>(h) * W + static_cast<size_t>(i)] = transmit ? c1 : c0;
                pol[static_cast<size_t>(h) * W + static_cast<size_t>(i)] = transmit ? 1 : 0;
                if (s == 0) break;
                s = (s - 1) & h & mask;
            }
        }
    }
    return sol;
}

namespace {

void check_upward_closed(StructureReport& report, const std::string& name,
                         const std::vector<const Matrix*>& mats,
                         const std::vector<int>& nus, bool upward) {
    bool pass = true;
    std::string witness;
    for (size_t a = 0; a < mats.size() && pass; ++a) {
        for (size_t b = 0; b < mats.size() && pass; ++b) {
            if (a == b) continue;
            if (!psd_leq(*mats[a], *mats[b])) continue;
            const int lo = nus[a], hi = nus[b];
            const bool ok = upward ? lo <= hi : lo >= hi;
            if (!ok) {
                pass = false;
                std::ostringstream os;
                os << "nodes " << a << " <= " << b << " but nu " << lo << " vs " << hi;
                witness = os.str();
            }
        }
    }
    report.add(name, pass, witness);
}

}  // namespace

StructureReport threshold_check_meas(const MeasFullSolution& sol, const MeasTree& tree,
                                     int k, const SystemModel& /*model*/) {
    StructureReport report;
    const int W = sol.nodes_at(k);
    const auto& level = tree.values[static_cast<size_t>(k - 1)];

    for (int ie = 0; ie < W; ++ie) {
        std::vector<const Matrix*> mats;
        std::vector<int> nus;
        for (int i = 0; i < W; ++i) {
            mats.push_back(&level[static_cast<size_t>(i)]);
            nus.push_back(sol.nu(k, i, ie));
        }
        std::ostringstream name;
        name << "meas_threshold_P_k" << k << "_ie" << ie;
        check_upward_closed(report, name.str(), mats, nus, true);
    }
    for (int i = 0; i < W; ++i) {
        std::vector<const Matrix*> mats;
        std::vector<int> nus;
        for (int ie = 0; ie < W; ++ie) {
            mats.push_back(&level[static_cast<size_t>(ie)]);
            nus.push_back(sol.nu(k, i, ie));
        }
        std::ostringstream name;
        name << "meas_threshold_Pe_k" << k << "_i" << i;
        check_upward_closed(report, name.str(), mats, nus, false);
    }
    return report;
}

StructureReport threshold_check_meas_partial(const MeasPartialSolution& sol,
                                             const MeasTree& tree, int k,
                                             const SystemModel& /*model*/) {
    StructureReport report;
    const int W = sol.nodes_at(k);
    const std::uint64_t mask = static_cast<std::uint64_t>(W) - 1;
    const auto& level = tree.values[static_cast<size_t>(k - 1)];
    for (std::uint64_t h = 0; h < static_cast<std::uint64_t>(W); ++h) {
        std::vector<const Matrix*> mats;
        std::vector<int> nus;
        const std::uint64_t forced = ~h & mask;
        std::uint64_t s = h & mask;
        while (true) {
            const std::uint64_t i = forced | s;
            mats.push_back(&level[static_cast<size_t>(i)]);
            nus.push_back(sol.nu(k, h, static_cast<int>(i)));
            if (s == 0) break;
            s = (s - 1) & h & mask;
        }
        std::ostringstream name;
        name << "meas_threshold_P_partial_k" << k << "_h" << h;
        check_upward_closed(report, name.str(), mats, nus, true);
    }
    return report;
}

FinalStageScan final_stage_scan(const SystemModel& model, double beta, const Matrix& P_alt) {
    const SteadyState steady = steady_state_filter(model);
    const Matrix Pe = riccati_predict(steady.P_bar_plus, model);
    FinalStageScan scan;
    scan.c0_root = meas_stage_cost(steady.P_bar_plus, Pe, 0, beta, model);
    scan.c1_root = meas_stage_cost(steady.P_bar_plus, Pe, 1, beta, model);
    scan.c0_alt = meas_stage_cost(P_alt, Pe, 0, beta, model);
    scan.c1_alt = meas_stage_cost(P_alt, Pe, 1, beta, model);
    scan.nu_root = scan.c1_root < scan.c0_root - kTieTolerance ? 1 : 0;
    scan.nu_alt = scan.c1_alt < scan.c0_alt - kTieTolerance ? 1 : 0;
    return scan;
}

StructureReport counterexample_check(const SystemModel& model, double beta,
                                     const Matrix& P_alt) {
    const SteadyState steady = steady_state_filter(model);
    const FinalStageScan scan = final_stage_scan(model, beta, P_alt);
    StructureReport report;
    bool pass = true;
    std::string witness;
    if (psd_leq(steady.P_bar_plus, P_alt) && scan.nu_root > scan.nu_alt) {
        pass = false;
        std::ostringstream os;
        os << "root <= alt but nu " << scan.nu_root << " vs " << scan.nu_alt
           << " (costs " << scan.c0_root << '/' << scan.c1_root << " and "
           << scan.c0_alt << '/' << scan.c1_alt << ')';
        witness = os.str();
    }
    report.add("meas_threshold_P_final_stage", pass, witness);
    return report;
}

std::string node_bits(std::uint64_t code, int len) {
    std::string s(static_cast<size_t>(len), '0');
    for (int p = 0; p < len; ++p)
        if ((code >> (len - 1 - p)) & 1u) s[static_cast<size_t>(p)] = '1';
    return s;
}

void write_meas_policy_csv(std::ostream& out, const MeasFullSolution& sol) {
    out << "k,node_bits,e_node_or_belief_id,nu\n";
    for (int k = 1; k <= sol.K; ++k) {
        const int W = sol.nodes_at(k);
        for (int i = 0; i < W; ++i)
            for (int ie = 0; ie < W; ++ie)
                out << k << ',' << node_bits(static_cast<std::uint64_t>(i), k - 1) << ','
                    << node_bits(static_cast<std::uint64_t>(ie), k - 1) << ','
                    << sol.nu(k, i, ie) << '\n';
    }
}

void write_meas_policy_csv(std::ostream& out, const MeasPartialSolution& sol) {
    out << "k,node_bits,e_node_or_belief_id,nu\n";
    for (int k = 1; k <= sol.K; ++k) {
        const int W = sol.nodes_at(k);
        const std::uint64_t mask = static_cast<std::uint64_t>(W) - 1;
        for (std::uint64_t h = 0; h < static_cast<std::uint64_t>(W); ++h) {
            const std::uint64_t forced = ~h & mask;
            std::uint64_t s = h & mask;
            while (true) {
                const std::uint64_t i = forced | s;
                out << k << ',' << node_bits(i, k - 1) << ',' << node_bits(h, k - 1)
                    << ',' << sol.nu(k, h, static_cast<int>(i)) << '\n';
                if (s == 0) break;
                s = (s - 1) & h & mask;
            }
        }
    }
}

}  // namespace csched
