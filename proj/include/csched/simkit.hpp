#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "csched/horizon_inf.hpp"
#include "csched/meas_tx.hpp"

namespace csched {

enum class TxMode { EstimateTx, MeasurementTx };

/// Scheduling rule driven by the simulator. In estimate mode `n`/`ne` are
/// holding counts (full-information policies may read `ne`, partial ones
/// must ignore it); in measurement mode they are composition-node codes.
/// Policies needing a decision history keep it internally across decide()
/// calls and clear it in reset().
class Policy {
public:
    virtual ~Policy() = default;
    virtual void reset() {}
    virtual int decide(long k, int n, int ne) = 0;
    virtual std::string name() const = 0;
};

class ThresholdSchedPolicy : public Policy {
public:
    explicit ThresholdSchedPolicy(int t) : t_(t) {}
    int decide(long, int n, int) override { return n >= t_ ? 1 : 0; }
    std::string name() const override { return "threshold:" + std::to_string(t_); }

private:
    int t_;
};

/// Finite-horizon full-information table; episodic (k wraps in [1, K]).
class FullTablePolicy : public Policy {
public:
    explicit FullTablePolicy(PolicyTable table) : table_(std::move(table)) {}
    int decide(long k, int n, int ne) override;
    std::string name() const override { return "dp-full"; }

private:
    PolicyTable table_;
};

/// Finite-horizon partial-information table; walks the belief tree by its
/// own decisions.
class PartialTablePolicy : public Policy {
public:
    explicit PartialTablePolicy(std::shared_ptr<const PartialSolution> sol)
        : sol_(std::move(sol)) {}
    void reset() override { node_ = 0; }
    int decide(long k, int n, int ne) override;
    std::string name() const override { return "dp-partial"; }

private:
    std::shared_ptr<const PartialSolution> sol_;
    int node_ = 0;
};

class StationaryTablePolicy : public Policy {
public:
    explicit StationaryTablePolicy(AvgCostSolution sol) : sol_(std::move(sol)) {}
    int decide(long, int n, int ne) override;
    std::string name() const override { return "rvi-full"; }

private:
    AvgCostSolution sol_;
};

class StationaryBeliefPolicy : public Policy {
public:
    explicit StationaryBeliefPolicy(AvgCostBeliefSolution sol) : sol_(std::move(sol)) {}
    void reset() override { suffix_ = 0; }
    int decide(long, int n, int ne) override;
    std::string name() const override { return "rvi-partial"; }

private:
    AvgCostBeliefSolution sol_;
    std::uint64_t suffix_ = 0;
};

/// Measurement-mode tables; n/ne are node codes, episodic in [1, K].
class MeasFullPolicy : public Policy {
public:
    explicit MeasFullPolicy(std::shared_ptr<const MeasFullSolution> sol)
        : sol_(std::move(sol)) {}
    int decide(long k, int n, int ne) override;
    std::string name() const override { return "dp-meas-full"; }

private:
    std::shared_ptr<const MeasFullSolution> sol_;
};

class MeasPartialPolicy : public Policy {
public:
    explicit MeasPartialPolicy(std::shared_ptr<const MeasPartialSolution> sol)
        : sol_(std::move(sol)) {}
    void reset() override { hist_ = 0; }
    int decide(long k, int n, int ne) override;
    std::string name() const override { return "dp-meas-partial"; }

private:
    std::shared_ptr<const MeasPartialSolution> sol_;
    std::uint64_t hist_ = 0;
};

struct SimConfig {
    long horizon = 1;       // steps per episode
    long episodes = 1;
    std::uint64_t seed = 0;
    TxMode mode = TxMode::EstimateTx;
    bool track_states = false;  // also run the plant/estimator state recursion
    bool record_trace = false;
};

struct StepTrace {
    long k;
    int nu, gamma, gamma_e;
    int n, n_e;
    double I_e;
};

struct SimRecord {
    std::string policy_name;
    std::uint64_t seed = 0;
    long steps = 0;
    double mean_trP = 0.0;
    double mean_trPe = 0.0;
    double mean_Ie = 0.0;
    double tx_rate = 0.0;
    double total_Ie = 0.0;
    long transmissions = 0;
    long receptions = 0;
    long eaves_receptions = 0;
    double emp_mse = 0.0;       // mean squared estimator error when tracking states
    bool extrapolated = false;  // ladder cap hit; trace values log-extrapolated
    std::vector<StepTrace> trace;
};

inline constexpr int kSimLadderCap = 10000;

/// Runs `episodes` independent episodes of `horizon` steps. Channel draws
/// and (optional) noise draws come from two separate streams derived from
/// the seed, so state tracking never perturbs scheduling.
SimRecord simulate(const SystemModel& model, Policy& policy, const SimConfig& config);

struct Aggregate {
    std::string policy_name;
    int runs = 0;
    long total_steps = 0;
    double mean_trP = 0.0, mean_trPe = 0.0, mean_Ie = 0.0, tx_rate = 0.0;
    double se_trP = 0.0, se_trPe = 0.0;  // between-run standard errors
};

/// Pools step-weighted means across records; merge order is by seed.
/// Throws ModelError if policy names differ.
Aggregate aggregate(std::vector<SimRecord> records);

enum class InfoMode { Full, Partial };

struct SweepSpec {
    ObjectiveKind kind = ObjectiveKind::Covariance;
    InfoMode info = InfoMode::Full;
    bool infinite = true;
    int horizon = 10;       // K (finite) or truncation N (infinite)
    long sim_steps = 100000;
    std::uint64_t seed = 1;
};

struct SweepPoint {
    double beta;
    double mean_trP, mean_trPe, mean_Ie, tx_rate;
};

/// Solves and simulates one point per beta; all points share the seed
/// (common random numbers).
std::vector<SweepPoint> sweep_beta(const SystemModel& model, const SweepSpec& spec,
                                   const std::vector<double>& betas);

/// Worker count: COVERT_SCHED_WORKERS if set, else hardware concurrency.
int worker_count();

void write_summary_csv(std::ostream& out, const std::vector<SimRecord>& records,
                       double beta, int t);
void write_trace_csv(std::ostream& out, const SimRecord& record);
void write_sweep_csv(std::ostream& out, const std::vector<SweepPoint>& points);

}  // namespace csched
