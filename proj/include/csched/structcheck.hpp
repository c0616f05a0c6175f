#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "csched/horizon_inf.hpp"

namespace csched {

struct CheckResult {
    std::string name;
    bool pass = false;
    std::string witness;  // empty on pass, indices + values on fail
};

struct StructureReport {
    std::vector<CheckResult> checks;

    void add(std::string name, bool pass, std::string witness = "");
    bool all_pass() const;
    int pass_count() const;
    /// Appends another report's checks.
    void merge(const StructureReport& other);
};

enum class ThresholdAxis { N, Ne };

/// Threshold scans over a finite-horizon policy grid. Axis N: every row
/// (fixed n_e) must be nondecreasing in n with at most one 0->1 switch.
/// Axis Ne: every column (fixed n) nonincreasing in n_e, one 1->0 switch.
StructureReport verify_threshold_rows(const PolicyTable& policy, ThresholdAxis axis);

/// Same scans on a stationary average-cost policy.
StructureReport verify_threshold_rows(const AvgCostSolution& sol, ThresholdAxis axis);

/// Partial information: axis n only, per reachable belief node.
StructureReport verify_threshold_rows(const PartialSolution& sol);

/// Partial-information stationary policy: axis n per decision suffix.
StructureReport verify_threshold_rows(const AvgCostBeliefSolution& sol);

/// Randomized monotonicity checks, deterministic given the seed:
///  - trace of f^n is increasing in P (PSD order), n = 1..4;
///  - log det f^n(P) - log det f^(n+1)(P) is increasing in P, n = 0..3;
///  - scalar composition gap: F(f(p)) - F(g(p)) increasing in p for random
///    compositions F of f, g, id (random scalar systems drawn per sample).
StructureReport verify_lemma_suite(const SystemModel& model, int samples,
                                   std::uint64_t seed);

/// CSV columns check,pass,witness.
void write_report_csv(std::ostream& out, const StructureReport& report);

}  // namespace csched
