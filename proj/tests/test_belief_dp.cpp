#include <doctest.h>

#include "csched/belief_dp.hpp"
#include "csched/builtin_models.hpp"
#include "oracle.hpp"

using namespace csched;

namespace {

SystemModel paper_model(double lambda_e = 0.6) {
    SystemModel m = SystemModel::from_json_text(kBuiltinPaperModel);
    m.lambda_e = lambda_e;
    return m;
}

CovarianceLadder ladder_for(const SystemModel& m, int depth) {
    return build_ladder(steady_state_filter(m).P_bar, depth, m);
}

BeliefVector make_belief(std::vector<double> p) { return BeliefVector{std::move(p)}; }

}  // namespace

TEST_CASE("belief recursion") {
    const SystemModel m = paper_model();

    BeliefVector pi = make_belief({1.0, 0.0, 0.0});
    BeliefVector out = belief_update(pi, 0, m);
    CHECK(out.probs == std::vector<double>{0.0, 1.0, 0.0});

    out = belief_update(pi, 1, m);
    CHECK(out.probs[0] == doctest::Approx(0.6));
    CHECK(out.probs[1] == doctest::Approx(0.4));
    CHECK(out.probs[2] == doctest::Approx(0.0));

    out = belief_update(out, 1, m);
    CHECK(out.probs[0] == doctest::Approx(0.6));
    CHECK(out.probs[1] == doctest::Approx(0.24));
    CHECK(out.probs[2] == doctest::Approx(0.16));
    out.validate();

    // Shifting mass off the end of an exact belief is an error.
    CHECK_THROWS_AS(belief_update(make_belief({0.0, 0.0, 1.0}), 0, m), TruncationError);
}

TEST_CASE("truncated belief recursion") {
    const SystemModel m = paper_model();
    const int N = 2;

    BeliefVector pi = make_belief({0.0, 0.0, 1.0});
    CHECK(belief_update_truncated(pi, 0, m, N).probs == std::vector<double>{0.0, 0.0, 1.0});

    pi = make_belief({1.0, 0.0, 0.0});
    for (int i = 0; i < 3; ++i) pi = belief_update_truncated(pi, 0, m, N);
    CHECK(pi.probs == std::vector<double>{0.0, 0.0, 1.0});

    // Matches the exact recursion while no mass has reached the tail.
    pi = make_belief({0.6, 0.4, 0.0});
    const BeliefVector t = belief_update_truncated(pi, 1, m, N);
    CHECK(t.probs[0] == doctest::Approx(0.6));
    CHECK(t.probs[1] == doctest::Approx(0.24));
    CHECK(t.probs[2] == doctest::Approx(0.16));
}

TEST_CASE("expected eavesdropper statistic") {
    const SystemModel m = paper_model();
    const CovarianceLadder lad = ladder_for(m, 5);
    CHECK(expected_eaves_stat(make_belief({1.0, 0.0}), lad, ObjectiveKind::Covariance) ==
          doctest::Approx(lad.trace_at(1)));
    CHECK(expected_eaves_stat(make_belief({0.5, 0.5}), lad, ObjectiveKind::Covariance) ==
          doctest::Approx(0.5 * (lad.trace_at(1) + lad.trace_at(2))));
    CHECK(expected_eaves_stat(make_belief({0.6, 0.4}), lad, ObjectiveKind::Covariance) ==
          doctest::Approx(0.6 * lad.trace_at(1) + 0.4 * lad.trace_at(2)));
    CHECK(expected_eaves_stat(make_belief({0.6, 0.4}), lad, ObjectiveKind::Information) ==
          doctest::Approx(0.5 * (0.6 * lad.logdet_at(1) + 0.4 * lad.logdet_at(2))));
}

TEST_CASE("K=1 partial reduces to full information") {
    const SystemModel m = paper_model();
    const CovarianceLadder lad = ladder_for(m, 3);
    for (ObjectiveKind kind : {ObjectiveKind::Covariance, ObjectiveKind::Information}) {
        const ObjectiveConfig obj{0.6, kind};
        const PartialSolution part = solve_finite_partial(m, lad, 1, obj);
        const FullSolution full = solve_finite_full(m, lad, 1, obj);
        CHECK(part.value_at(1, 0, 0) == doctest::Approx(full.values.at(1, 0, 0)));
        CHECK(part.nu(1, 0, 0) == full.policy.nu(1, 0, 0));
    }
}

TEST_CASE("near-deterministic eavesdropper matches full information") {
    SystemModel m = paper_model(0.999999);
    const CovarianceLadder lad = ladder_for(m, 4);
    const ObjectiveConfig obj{0.7, ObjectiveKind::Covariance};
    const int K = 3;
    const PartialSolution part = solve_finite_partial(m, lad, K, obj);
    const FullSolution full = solve_finite_full(m, lad, K, obj);
    // On-support trajectory: after a transmission the eavesdropper is at rung
    // 0 almost surely; after j skips it is at rung j.
    CHECK(part.nu(1, 0, 0) == full.policy.nu(1, 0, 0));
    const auto& root = part.nodes[0][0];
    const int c0 = root.child0, c1 = root.child1;
    for (int n = 0; n <= 1; ++n) {
        CHECK(part.nu(2, c1, n) == full.policy.nu(2, n, 0));
        CHECK(part.nu(2, c0, n) == full.policy.nu(2, n, 1));
    }
}

TEST_CASE("truncated agrees with exact when K <= N") {
    const SystemModel m = paper_model();
    const CovarianceLadder lad = ladder_for(m, 4);
    const ObjectiveConfig obj{0.55, ObjectiveKind::Covariance};
    const int K = 4;
    const PartialSolution exact = solve_finite_partial(m, lad, K, obj);
    const PartialSolution trunc = solve_finite_partial(m, lad, K, obj, 6);
    REQUIRE(exact.nodes.size() == trunc.nodes.size());
    for (int k = 1; k <= K; ++k) {
        const auto& le = exact.nodes[static_cast<size_t>(k - 1)];
        const auto& lt = trunc.nodes[static_cast<size_t>(k - 1)];
        REQUIRE(le.size() == lt.size());
        for (size_t mth = 0; mth < le.size(); ++mth)
            for (int n = 0; n <= K; ++n) {
                CHECK(std::abs(exact.value_at(k, static_cast<int>(mth), n) -
                               trunc.value_at(k, static_cast<int>(mth), n)) < 1e-12);
                CHECK(exact.nu(k, static_cast<int>(mth), n) ==
                      trunc.nu(k, static_cast<int>(mth), n));
            }
    }
}

TEST_CASE("reachable node count and exact cap") {
    const SystemModel m = paper_model();
    const CovarianceLadder lad = ladder_for(m, 6);
    const ObjectiveConfig obj{0.7, ObjectiveKind::Covariance};
    const int K = 5;
    const PartialSolution sol = solve_finite_partial(m, lad, K, obj);
    CHECK(sol.node_count() <=
          static_cast<size_t>((K + 1) * ((1 << (K + 1)) - 1)));
    CHECK_THROWS_AS(solve_finite_partial(m, lad, 21, obj), ResourceError);
}

TEST_CASE("psi gap consistency") {
    const SystemModel m = paper_model();
    CovarianceLadder lad = ladder_for(m, 4);
    const ObjectiveConfig obj{0.7, ObjectiveKind::Covariance};
    const int K = 3;
    const PartialSolution sol = solve_finite_partial(m, lad, K, obj);
    lad.extend_to(2 * K + 2, m);
    for (int k = 1; k <= K; ++k) {
        const auto& level = sol.nodes[static_cast<size_t>(k - 1)];
        for (int node = 0; node < static_cast<int>(level.size()); ++node) {
            int switches = 0;
            int prev = -1;
            for (int n = 0; n <= K; ++n) {
                const double gap = psi_gap(k, n, node, sol, m, lad);
                const int nu = sol.nu(k, node, n);
                if (nu == 1) CHECK(gap > kTieTolerance);
                else CHECK(gap <= kTieTolerance * 10);
                if (prev >= 0 && nu != prev) ++switches;
                prev = nu;
            }
            CHECK(switches <= 1);
        }
    }
    // Terminal stage: gap equals the stage-cost difference (checked via K=1).
    const PartialSolution one = solve_finite_partial(m, lad, 1, obj);
    const double g = psi_gap(1, 0, 0, one, m, lad);
    const FullSolution full = solve_finite_full(m, lad, 1, obj);
    const double direct = stage_cost(0, 0, 0, obj, lad, m) - stage_cost(0, 0, 1, obj, lad, m);
    CHECK(g == doctest::Approx(direct));
    CHECK((full.policy.nu(1, 0, 0) == 1) == (g > kTieTolerance));
}

TEST_CASE("partial DP equals brute force") {
    for (std::uint64_t seed : {11u, 12u}) {
        const SystemModel m = oracle::random_model(seed, seed % 2 ? 1 : 2);
        const CovarianceLadder lad = ladder_for(m, 4);
        for (ObjectiveKind kind : {ObjectiveKind::Covariance, ObjectiveKind::Information}) {
            const ObjectiveConfig obj{0.65, kind};
            const int K = 3;
            const PartialSolution sol = solve_finite_partial(m, lad, K, obj);
            const oracle::EstimateOracle ref(m, K, obj, true);
            CHECK(std::abs(sol.value_at(1, 0, 0) - ref.best_value()) < 1e-9);
        }
    }
}
