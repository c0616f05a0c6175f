#include "csched/structcheck.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace csched {

void StructureReport::add(std::string name, bool pass, std::string witness) {
    checks.push_back(CheckResult{std::move(name), pass, std::move(witness)});
}

bool StructureReport::all_pass() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const CheckResult& c) { return c.pass; });
}

int StructureReport::pass_count() const {
    int n = 0;
    for (const auto& c : checks)
        if (c.pass) ++n;
    return n;
}

void StructureReport::merge(const StructureReport& other) {
    checks.insert(checks.end(), other.checks.begin(), other.checks.end());
}

namespace {

/// Nondecreasing with at most one 0->1 switch: no 0 may follow a 1.
/// Returns the offending index pair, or (-1,-1).
std::pair<int, int> scan_nondecreasing(const std::vector<int>& row) {
    int last_one = -1;
    for (int i = 0; i < static_cast<int>(row.size()); ++i) {
        if (row[i] == 1) {
            last_one = i;
        } else if (last_one >= 0) {
            return {last_one, i};
        }
    }
    return {-1, -1};
}

std::pair<int, int> scan_nonincreasing(std::vector<int> row) {
    for (auto& v : row) v = 1 - v;
    return scan_nondecreasing(row);
}

std::string pair_witness(const std::string& prefix, std::pair<int, int> bad) {
    std::ostringstream os;
    os << prefix << " switch back between indices " << bad.first << " and " << bad.second;
    return os.str();
}

}  // namespace

StructureReport verify_threshold_rows(const PolicyTable& policy, ThresholdAxis axis) {
    StructureReport report;
    for (int k = 1; k <= policy.K; ++k) {
        bool pass = true;
        std::string witness;
        for (int fixed = 0; fixed <= policy.K && pass; ++fixed) {
            std::vector<int> row;
            for (int v = 0; v <= policy.K; ++v)
                row.push_back(axis == ThresholdAxis::N ? policy.nu(k, v, fixed)
                                                       : policy.nu(k, fixed, v));
            const auto bad = axis == ThresholdAxis::N ? scan_nondecreasing(row)
                                                      : scan_nonincreasing(row);
            if (bad.first >= 0) {
                pass = false;
                std::ostringstream os;
                os << (axis == ThresholdAxis::N ? "n_e=" : "n=") << fixed;
                witness = pair_witness(os.str(), bad);
            }
        }
        std::ostringstream name;
        name << "threshold_" << (axis == ThresholdAxis::N ? "n" : "n_e") << "_k" << k;
        report.add(name.str(), pass, witness);
    }
    return report;
}

StructureReport verify_threshold_rows(const AvgCostSolution& sol, ThresholdAxis axis) {
    StructureReport report;
    bool pass = true;
    std::string witness;
    for (int fixed = 0; fixed <= sol.N && pass; ++fixed) {
        std::vector<int> row;
        for (int v = 0; v <= sol.N; ++v)
            row.push_back(axis == ThresholdAxis::N ? sol.nu(v, fixed) : sol.nu(fixed, v));
        const auto bad = axis == ThresholdAxis::N ? scan_nondecreasing(row)
                                                  : scan_nonincreasing(row);
        if (bad.first >= 0) {
            pass = false;
            std::ostringstream os;
            os << (axis == ThresholdAxis::N ? "n_e=" : "n=") << fixed;
            witness = pair_witness(os.str(), bad);
        }
    }
    report.add(axis == ThresholdAxis::N ? "threshold_n_stationary" : "threshold_n_e_stationary",
               pass, witness);
    return report;
}

StructureReport verify_threshold_rows(const PartialSolution& sol) {
    StructureReport report;
    for (int k = 1; k <= sol.K; ++k) {
        bool pass = true;
        std::string witness;
        const auto& level = sol.nodes[static_cast<size_t>(k - 1)];
        for (int m = 0; m < static_cast<int>(level.size()) && pass; ++m) {
            std::vector<int> row;
            for (int n = 0; n <= sol.K; ++n) row.push_back(sol.nu(k, m, n));
            const auto bad = scan_nondecreasing(row);
            if (bad.first >= 0) {
                pass = false;
                std::ostringstream os;
                os << "belief_node=" << m;
                witness = pair_witness(os.str(), bad);
            }
        }
        std::ostringstream name;
        name << "threshold_n_belief_k" << k;
        report.add(name.str(), pass, witness);
    }
    return report;
}

StructureReport verify_threshold_rows(const AvgCostBeliefSolution& sol) {
    StructureReport report;
    bool pass = true;
    std::string witness;
    const std::uint64_t S = std::uint64_t{1} << sol.N;
    for (std::uint64_t s = 0; s < S && pass; ++s) {
        std::vector<int> row;
        for (int n = 0; n <= sol.N; ++n) row.push_back(sol.nu(s, n));
        const auto bad = scan_nondecreasing(row);
        if (bad.first >= 0) {
            pass = false;
            std::ostringstream os;
            os << "suffix=" << s;
            witness = pair_witness(os.str(), bad);
        }
    }
    report.add("threshold_n_belief_stationary", pass, witness);
    return report;
}

namespace {

constexpr double kLemmaTol = 1e-9;

Matrix random_psd(int n, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss;
    Matrix M(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) M(i, j) = gauss(rng);
    return M * M.transpose() + 1e-6 * Matrix::Identity(n, n);
}

double scalar_f(double p, double a2, double q) { return a2 * p + q; }

double scalar_g(double p, double a2, double c2, double q, double r) {
    return a2 * p + q - a2 * c2 * p * p / (c2 * p + r);
}

double scalar_comp(const std::vector<int>& ops, double p, double a2, double c2,
                   double q, double r) {
    for (int op : ops) {
        if (op == 0) p = scalar_g(p, a2, c2, q, r);
        else if (op == 1) p = scalar_f(p, a2, q);
        // op == 2: identity
    }
    return p;
}

}  // namespace

StructureReport verify_lemma_suite(const SystemModel& model, int samples,
                                   std::uint64_t seed) {
    StructureReport report;
    if (samples < 1) throw ModelError("verify_lemma_suite: samples must be >= 1");
    std::mt19937_64 rng(seed);
    const int nx = model.n_x();

    bool pass1 = true, pass2 = true, pass5 = true;
    std::string w1, w2, w5;
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    for (int s = 0; s < samples; ++s) {
        const Matrix X = random_psd(nx, rng);
        const Matrix Y = X + random_psd(nx, rng);

        Matrix fx = X, fy = Y;
        for (int n = 1; n <= 4; ++n) {
            fx = riccati_predict(fx, model);
            fy = riccati_predict(fy, model);
            if (pass1 && fy.trace() < fx.trace() - kLemmaTol) {
                pass1 = false;
                std::ostringstream os;
                os << "sample=" << s << " n=" << n << " tr=" << fx.trace() << " vs " << fy.trace();
                w1 = os.str();
            }
        }

        Matrix gx = X, gy = Y;
        for (int n = 0; n <= 3; ++n) {
            const Matrix gx1 = riccati_predict(gx, model);
            const Matrix gy1 = riccati_predict(gy, model);
            const double dx = logdet_spd(gx) - logdet_spd(gx1);
            const double dy = logdet_spd(gy) - logdet_spd(gy1);
            if (pass2 && dy < dx - kLemmaTol) {
                pass2 = false;
                std::ostringstream os;
                os << "sample=" << s << " n=" << n << " gap=" << dx << " vs " << dy;
                w2 = os.str();
            }
            gx = gx1;
            gy = gy1;
        }

        // Scalar composition gap; random scalar system per sample.
        const double a2 = 0.25 + 4.0 * unif(rng);
        const double c2 = 0.25 + 2.0 * unif(rng);
        const double q = 0.1 + 2.0 * unif(rng);
        const double r = 0.1 + 2.0 * unif(rng);
        const double pl = 5.0 * unif(rng);
        const double ph = pl + 5.0 * unif(rng);
        std::uniform_int_distribution<int> len_dist(0, 4);
        std::uniform_int_distribution<int> op_dist(0, 2);
        std::vector<int> ops(static_cast<size_t>(len_dist(rng)));
        for (auto& op : ops) op = op_dist(rng);
        const double gap_lo = scalar_comp(ops, scalar_f(pl, a2, q), a2, c2, q, r) -
                              scalar_comp(ops, scalar_g(pl, a2, c2, q, r), a2, c2, q, r);
        const double gap_hi = scalar_comp(ops, scalar_f(ph, a2, q), a2, c2, q, r) -
                              scalar_comp(ops, scalar_g(ph, a2, c2, q, r), a2, c2, q, r);
        if (pass5 && gap_hi < gap_lo - kLemmaTol) {
            pass5 = false;
            std::ostringstream os;
            os << "sample=" << s << " gap=" << gap_lo << " vs " << gap_hi;
            w5 = os.str();
        }
    }

    report.add("trace_f_iterates_increasing", pass1, w1);
    report.add("logdet_gap_increasing", pass2, w2);
    report.add("scalar_composition_gap_increasing", pass5, w5);
    return report;
}

void write_report_csv(std::ostream& out, const StructureReport& report) {
    out << "check,pass,witness\n";
    for (const auto& c : report.checks)
        out << c.name << ',' << (c.pass ? 1 : 0) << ",\"" << c.witness << "\"\n";
}

}  // namespace csched
