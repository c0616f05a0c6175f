#include <doctest.h>

#include <cmath>
#include <sstream>

#include "csched/builtin_models.hpp"
#include "csched/meas_tx.hpp"
#include "oracle.hpp"

using namespace csched;

namespace {

SystemModel meas_model() { return SystemModel::from_json_text(kBuiltinMeasModel); }

SystemModel scalar_meas() {
    SystemModel m;
    m.A = Matrix::Constant(1, 1, 1.3);
    m.C = Matrix::Constant(1, 1, 1.0);
    m.Q = Matrix::Constant(1, 1, 1.0);
    m.R = Matrix::Constant(1, 1, 1.0);
    m.lambda = 0.6;
    m.lambda_e = 0.6;
    return m;
}

}  // namespace

TEST_CASE("composition codes") {
    const SystemModel m = scalar_meas();
    const Matrix P0 = Matrix::Constant(1, 1, 2.0);

    CHECK(composition_value("", P0, m)(0, 0) == doctest::Approx(2.0));
    CHECK(composition_value("1", P0, m)(0, 0) ==
          doctest::Approx(oracle::f_map(P0, m)(0, 0)));
    CHECK(composition_value("0", P0, m)(0, 0) ==
          doctest::Approx(oracle::g_map(P0, m)(0, 0)));

    // Maps are applied left to right, and f, g do not commute.
    const double gf = composition_value("10", P0, m)(0, 0);
    const double fg = composition_value("01", P0, m)(0, 0);
    CHECK(gf == doctest::Approx(oracle::g_map(oracle::f_map(P0, m), m)(0, 0)));
    CHECK(fg == doctest::Approx(oracle::f_map(oracle::g_map(P0, m), m)(0, 0)));
    CHECK(std::abs(gf - fg) > 1e-6);
}

TEST_CASE("tree child invariant") {
    const SystemModel m = meas_model();
    const Matrix root = steady_state_filter(m).P_bar_plus;
    const MeasTree tree = build_meas_tree(root, 3, m);
    REQUIRE(tree.depth() == 3);
    for (int d = 0; d < 3; ++d) {
        REQUIRE(tree.values[static_cast<size_t>(d)].size() == (1u << d));
        for (size_t i = 0; i < tree.values[static_cast<size_t>(d)].size(); ++i) {
            const Matrix& P = tree.values[static_cast<size_t>(d)][i];
            const Matrix& c0 = tree.values[static_cast<size_t>(d) + 1][2 * i];
            const Matrix& c1 = tree.values[static_cast<size_t>(d) + 1][2 * i + 1];
            CHECK((c0 - oracle::g_map(P, m)).cwiseAbs().maxCoeff() < 1e-10);
            CHECK((c1 - oracle::f_map(P, m)).cwiseAbs().maxCoeff() < 1e-10);
            CHECK(tree.traces[static_cast<size_t>(d)][i] == doctest::Approx(P.trace()));
        }
    }
}

TEST_CASE("final-stage counterexample") {
    const SystemModel m = meas_model();
    const double beta = 0.73;
    Matrix P2(2, 2);
    P2 << 6.4, 4.5, 4.5, 6.3;
    const Matrix root = steady_state_filter(m).P_bar_plus;
    CHECK(psd_leq(root, P2));

    const FinalStageScan scan = final_stage_scan(m, beta, P2);
    CHECK(std::abs(scan.c0_root - 5.4979) < 5e-4);
    CHECK(std::abs(scan.c1_root - 5.4427) < 5e-4);
    CHECK(std::abs(scan.c0_alt - 5.7103) < 5e-4);
    CHECK(std::abs(scan.c1_alt - 5.9216) < 5e-4);
    CHECK(scan.nu_root == 1);
    CHECK(scan.nu_alt == 0);

    // The transmit set is not upward closed in P, so the check must fail
    // and say where.
    const StructureReport rep = counterexample_check(m, beta, P2);
    CHECK_FALSE(rep.all_pass());
    bool witnessed = false;
    for (const auto& c : rep.checks)
        if (!c.pass && !c.witness.empty()) witnessed = true;
    CHECK(witnessed);
}

TEST_CASE("full-information measurement DP equals brute force") {
    for (std::uint64_t seed : {21u, 22u, 23u}) {
        const SystemModel m = oracle::random_model(seed, seed % 2 ? 1 : 2);
        const double beta = 0.7;
        const int K = 2;
        const MeasFullSolution sol = solve_finite_full_meas(m, K, beta);
        const oracle::MeasOracle ref(m, K, beta, false);
        CHECK(std::abs(sol.value_at(1, 0, 0) - ref.best_value()) < 1e-9);
        const double pv = ref.policy_value(
            [&](int k, std::uint64_t, int i, int ie) { return sol.nu(k, i, ie); });
        CHECK(std::abs(pv - ref.best_value()) < 1e-9);
    }
    // One deeper scalar instance.
    const SystemModel m = scalar_meas();
    const MeasFullSolution sol = solve_finite_full_meas(m, 3, 0.73);
    const oracle::MeasOracle ref(m, 3, 0.73, false);
    CHECK(std::abs(sol.value_at(1, 0, 0) - ref.best_value()) < 1e-9);
}

TEST_CASE("partial-information measurement DP equals brute force") {
    for (std::uint64_t seed : {31u, 32u}) {
        const SystemModel m = oracle::random_model(seed, seed % 2 ? 1 : 2);
        const double beta = 0.66;
        const int K = 3;
        const MeasPartialSolution sol = solve_finite_partial_meas(m, K, beta);
        const oracle::MeasOracle ref(m, K, beta, true);
        CHECK(std::abs(sol.value_at(1, 0, 0) - ref.best_value()) < 1e-9);
    }
}

TEST_CASE("K=1 partial reduces to full information") {
    const SystemModel m = meas_model();
    const MeasPartialSolution part = solve_finite_partial_meas(m, 1, 0.73);
    const MeasFullSolution full = solve_finite_full_meas(m, 1, 0.73);
    CHECK(part.value_at(1, 0, 0) == doctest::Approx(full.value_at(1, 0, 0)));
    CHECK(part.nu(1, 0, 0) == full.nu(1, 0, 0));
}

TEST_CASE("decision-history beliefs") {
    const SystemModel m = meas_model();  // lambda_e = 0.6
    for (int k : {1, 2, 3, 4}) {
        for (std::uint64_t h = 0; h < (1u << (k - 1)); ++h) {
            const std::vector<double> pi = meas_belief(h, k, m);
            REQUIRE(pi.size() == (1u << (k - 1)));
            double mass = 0.0;
            for (size_t ie = 0; ie < pi.size(); ++ie) {
                mass += pi[ie];
                // A skipped transmission forces the eavesdropper's f branch.
                if (((h | ie) & ((1u << (k - 1)) - 1)) != (1u << (k - 1)) - 1)
                    CHECK(pi[ie] == 0.0);
            }
            CHECK(mass == doctest::Approx(1.0));
        }
    }
    // k=2, transmitted once: intercepted (g branch, node 0) w.p. lambda_e.
    const std::vector<double> pi = meas_belief(1, 2, m);
    CHECK(pi[0] == doctest::Approx(0.6));
    CHECK(pi[1] == doctest::Approx(0.4));
}

TEST_CASE("scalar threshold structure holds") {
    const SystemModel m = scalar_meas();
    const int K = 4;
    const MeasTree tree = build_meas_tree(steady_state_filter(m).P_bar_plus, K, m);
    const MeasFullSolution full = solve_finite_full_meas(m, K, 0.73);
    const MeasPartialSolution part = solve_finite_partial_meas(m, K, 0.73);
    for (int k = 1; k <= K; ++k) {
        const StructureReport rf = threshold_check_meas(full, tree, k, m);
        CHECK(rf.all_pass());
        const StructureReport rp = threshold_check_meas_partial(part, tree, k, m);
        CHECK(rp.all_pass());
    }
}

TEST_CASE("depth cap and CSV export") {
    const SystemModel m = scalar_meas();
    CHECK_THROWS_AS(solve_finite_full_meas(m, kMeasDepthCap + 1, 0.7), ResourceError);
    CHECK_THROWS_AS(solve_finite_partial_meas(m, kMeasDepthCap + 1, 0.7), ResourceError);

    CHECK(node_bits(0b101, 3) == "101");
    CHECK(node_bits(0, 2) == "00");

    const MeasFullSolution sol = solve_finite_full_meas(m, 2, 0.7);
    std::ostringstream a, b;
    write_meas_policy_csv(a, sol);
    write_meas_policy_csv(b, sol);
    CHECK(a.str() == b.str());
    CHECK(!a.str().empty());
}
