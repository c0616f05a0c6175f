#include <doctest.h>

#include <sstream>

#include "csched/builtin_models.hpp"
#include "csched/structcheck.hpp"

using namespace csched;

namespace {

SystemModel paper_model() { return SystemModel::from_json_text(kBuiltinPaperModel); }

/// Hand-built K=2 policy; rows are filled through a callback (k, n, ne) -> nu
/// on the internal wide grid.
template <typename Fn>
PolicyTable make_policy(const Fn& fn) {
    PolicyTable p;
    p.K = 2;
    for (int k = 1; k <= 2; ++k) {
        const int w = p.width(k);
        std::vector<std::uint8_t> stage(static_cast<size_t>(w) * w, 0);
        for (int n = 0; n < w; ++n)
            for (int ne = 0; ne < w; ++ne)
                stage[static_cast<size_t>(n) * w + ne] = static_cast<std::uint8_t>(fn(k, n, ne));
        p.stages.push_back(std::move(stage));
    }
    return p;
}

}  // namespace

TEST_CASE("report bookkeeping") {
    StructureReport a;
    a.add("one", true);
    a.add("two", false, "bad index");
    CHECK_FALSE(a.all_pass());
    CHECK(a.pass_count() == 1);

    StructureReport b;
    b.add("three", true);
    b.merge(a);
    CHECK(b.checks.size() == 3);
    CHECK(b.pass_count() == 2);

    std::ostringstream os;
    write_report_csv(os, b);
    CHECK(os.str().rfind("check,pass,witness\n", 0) == 0);
    CHECK(os.str().find("bad index") != std::string::npos);
}

TEST_CASE("threshold scans on fixtures") {
    // Proper threshold policy: transmit iff n >= 1 and ne == 0.
    const PolicyTable good = make_policy(
        [](int, int n, int ne) { return (n >= 1 && ne == 0) ? 1 : 0; });
    CHECK(verify_threshold_rows(good, ThresholdAxis::N).all_pass());
    CHECK(verify_threshold_rows(good, ThresholdAxis::Ne).all_pass());

    const PolicyTable zeros = make_policy([](int, int, int) { return 0; });
    CHECK(verify_threshold_rows(zeros, ThresholdAxis::N).all_pass());
    CHECK(verify_threshold_rows(zeros, ThresholdAxis::Ne).all_pass());

    // Row [0,1,0] along n at ne=0: fails axis N with a witness, passes Ne.
    const PolicyTable bump = make_policy(
        [](int, int n, int ne) { return (n == 1 && ne == 0) ? 1 : 0; });
    const StructureReport rn = verify_threshold_rows(bump, ThresholdAxis::N);
    CHECK_FALSE(rn.all_pass());
    bool witnessed = false;
    for (const auto& c : rn.checks)
        if (!c.pass) {
            CHECK(c.witness.find("n_e=0") != std::string::npos);
            CHECK(c.witness.find("1 and 2") != std::string::npos);
            witnessed = true;
        }
    CHECK(witnessed);
    CHECK(verify_threshold_rows(bump, ThresholdAxis::Ne).all_pass());

    // Constant in n but increasing in ne: fails axis Ne only.
    const PolicyTable col = make_policy(
        [](int, int, int ne) { return ne >= 1 ? 1 : 0; });
    CHECK(verify_threshold_rows(col, ThresholdAxis::N).all_pass());
    CHECK_FALSE(verify_threshold_rows(col, ThresholdAxis::Ne).all_pass());
}

TEST_CASE("threshold scans on stationary fixtures") {
    AvgCostSolution sol;
    sol.N = 2;
    sol.h.assign(9, 0.0);
    sol.policy = {0, 0, 0, 1, 0, 0, 1, 1, 0};  // nu(n, ne), row-major
    CHECK(verify_threshold_rows(sol, ThresholdAxis::N).all_pass());
    CHECK(verify_threshold_rows(sol, ThresholdAxis::Ne).all_pass());

    sol.policy = {0, 1, 0, 0, 0, 0, 0, 0, 0};  // nu(0,1)=1 breaks both axes
    CHECK_FALSE(verify_threshold_rows(sol, ThresholdAxis::Ne).all_pass());

    AvgCostBeliefSolution bel;
    bel.N = 2;
    bel.h.assign(12, 0.0);
    bel.policy.assign(12, 0);
    for (std::uint64_t s = 0; s < 4; ++s) bel.policy[s * 3 + 2] = 1;
    CHECK(verify_threshold_rows(bel).all_pass());
    bel.policy[1] = 1;  // suffix 0: row becomes [0,1,1] -> still a threshold
    CHECK(verify_threshold_rows(bel).all_pass());
    bel.policy[2] = 0;  // row [0,1,0]
    CHECK_FALSE(verify_threshold_rows(bel).all_pass());
}

TEST_CASE("lemma suite is deterministic and clean on the reference model") {
    const SystemModel m = paper_model();
    const StructureReport a = verify_lemma_suite(m, 200, 99);
    const StructureReport b = verify_lemma_suite(m, 200, 99);
    CHECK(a.all_pass());
    REQUIRE(a.checks.size() == b.checks.size());
    for (size_t i = 0; i < a.checks.size(); ++i) {
        CHECK(a.checks[i].name == b.checks[i].name);
        CHECK(a.checks[i].pass == b.checks[i].pass);
    }
    CHECK_THROWS_AS(verify_lemma_suite(m, 0, 1), ModelError);
}

TEST_CASE("solver policies pass the scans end to end") {
    const SystemModel m = paper_model();
    const CovarianceLadder lad = build_ladder(steady_state_filter(m).P_bar, 2, m);
    const ObjectiveConfig obj{0.7, ObjectiveKind::Covariance};
    const FullSolution full = solve_finite_full(m, lad, 6, obj);
    CHECK(verify_threshold_rows(full.policy, ThresholdAxis::N).all_pass());
    CHECK(verify_threshold_rows(full.policy, ThresholdAxis::Ne).all_pass());
    const PartialSolution part = solve_finite_partial(m, lad, 6, obj);
    CHECK(verify_threshold_rows(part).all_pass());
    const AvgCostSolution inf = relative_value_iteration(m, lad, obj, 8);
    CHECK(verify_threshold_rows(inf, ThresholdAxis::N).all_pass());
    CHECK(verify_threshold_rows(inf, ThresholdAxis::Ne).all_pass());
    const AvgCostBeliefSolution binf = relative_value_iteration_partial(m, lad, obj, 6);
    CHECK(verify_threshold_rows(binf).all_pass());
}
