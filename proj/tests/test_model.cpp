#include <doctest.h>

#include <cmath>

#include "csched/builtin_models.hpp"
#include "csched/model.hpp"

using namespace csched;

namespace {

SystemModel paper_model() { return SystemModel::from_json_text(kBuiltinPaperModel); }
SystemModel meas_model() { return SystemModel::from_json_text(kBuiltinMeasModel); }

SystemModel scalar_unit() {
    SystemModel m;
    m.A = Matrix::Constant(1, 1, 1.0);
    m.C = Matrix::Constant(1, 1, 1.0);
    m.Q = Matrix::Constant(1, 1, 1.0);
    m.R = Matrix::Constant(1, 1, 1.0);
    m.lambda = 0.5;
    m.lambda_e = 0.5;
    return m;
}

}  // namespace

TEST_CASE("model JSON round trip and validation") {
    const SystemModel m = paper_model();
    CHECK(m.n_x() == 2);
    CHECK(m.n_y() == 1);
    CHECK(m.A(0, 0) == doctest::Approx(1.2));
    CHECK(m.lambda == doctest::Approx(0.6));

    CHECK_THROWS_AS(SystemModel::from_json_text("not json"), ModelError);
    CHECK_THROWS_AS(SystemModel::from_json_text("{}"), ModelError);

    SystemModel bad = m;
    bad.Q(0, 1) = 0.5;  // asymmetric
    CHECK_THROWS_AS(bad.validate(), ModelError);

    bad = m;
    bad.lambda = 1.5;
    CHECK_THROWS_AS(bad.validate(), ModelError);

    bad = m;
    bad.Q = -Matrix::Identity(2, 2);
    CHECK_THROWS_AS(bad.validate(), ModelError);

    CHECK_THROWS_AS(SystemModel::from_file("/nonexistent/model.json"), ModelError);
}

TEST_CASE("steady state matches the reference values") {
    const SteadyState s = steady_state_filter(paper_model());
    CHECK(std::abs(s.P_bar(0, 0) - 1.3411) < 1e-3);
    CHECK(std::abs(s.P_bar(0, 1) - (-0.8244)) < 1e-3);
    CHECK(std::abs(s.P_bar(1, 0) - (-0.8244)) < 1e-3);
    CHECK(std::abs(s.P_bar(1, 1) - 1.0919) < 1e-3);

    const SteadyState sm = steady_state_filter(meas_model());
    CHECK(std::abs(sm.P_bar_plus(0, 0) - 6.2117) < 1e-3);
    CHECK(std::abs(sm.P_bar_plus(0, 1) - 4.7680) < 1e-3);
    CHECK(std::abs(sm.P_bar_plus(1, 1) - 5.9176) < 1e-3);

    // Scalar golden-ratio fixed point.
    const SteadyState sc = steady_state_filter(scalar_unit());
    CHECK(std::abs(sc.P_bar(0, 0) - (std::sqrt(5.0) - 1.0) / 2.0) < 1e-9);

    // P_bar_plus = f(P_bar).
    const Matrix fp = riccati_predict(s.P_bar, paper_model());
    CHECK((fp - s.P_bar_plus).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ladder ordering and accessors") {
    const SystemModel m = paper_model();
    const SteadyState s = steady_state_filter(m);
    CovarianceLadder lad = build_ladder(s.P_bar, 6, m);
    CHECK(lad.depth() == 6);
    for (int n = 0; n < 6; ++n) {
        CHECK(psd_leq(lad.rungs[static_cast<size_t>(n)], lad.rungs[static_cast<size_t>(n) + 1]));
        CHECK(lad.trace_at(n) < lad.trace_at(n + 1));
        CHECK(lad.logdet_at(n) < lad.logdet_at(n + 1));
    }
    CHECK_THROWS_AS(lad.trace_at(7), TruncationError);
    lad.extend_to(9, m);
    CHECK(lad.depth() == 9);
    CHECK(lad.trace_at(9) > lad.trace_at(8));
    CHECK_THROWS_AS(build_ladder(s.P_bar, 0, m), ModelError);
}

TEST_CASE("spectral quantities") {
    const SystemModel m = paper_model();
    CHECK(spectral_radius(m.A) == doctest::Approx(1.3162).epsilon(1e-3));
    CHECK(std::abs(stability_threshold(m) - 0.4227) < 1e-3);
    CHECK(stability_threshold(m) < m.lambda);

    Matrix X(2, 2);
    X << 3.0, 1.0, 1.0, 2.0;
    CHECK(logdet_spd(X) == doctest::Approx(std::log(5.0)));
    CHECK(psd_leq(X, X + Matrix::Identity(2, 2)));
    CHECK_FALSE(psd_leq(X + Matrix::Identity(2, 2), X));
}
