#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "csched/errors.hpp"

namespace csched {

using Matrix = Eigen::MatrixXd;

/// Plant/sensor model with the two packet-dropping links.
///
/// A is the state transition, C the observation map, Q > 0 and R > 0 the
/// process and measurement noise covariances. `lambda` is the probability
/// that a transmission reaches the estimator, `lambda_e` the probability
/// that it is overheard by the eavesdropper.
struct SystemModel {
    Matrix A;
    Matrix C;
    Matrix Q;
    Matrix R;
    double lambda = 0.0;
    double lambda_e = 0.0;

    int n_x() const { return static_cast<int>(A.rows()); }
    int n_y() const { return static_cast<int>(C.rows()); }

    /// Throws ModelError on dimension mismatch, asymmetric or non-PD
    /// covariances, or probabilities outside (0,1).
    void validate() const;

    /// Parses keys A, C, Q, R (row-major nested arrays), lambda, lambda_e.
    static SystemModel from_json_text(const std::string& text);
    static SystemModel from_file(const std::string& path);
};

/// Steady state of the local Kalman filter.
struct SteadyState {
    Matrix P_bar;       // filtered covariance
    Matrix P_bar_plus;  // predicted covariance
    int iterations = 0;
    double residual = 0.0;
};

/// Precomputed f-iterates of a base covariance with cached traces and
/// log-determinants. rungs[n] = f^n(P0); index n is the holding count.
struct CovarianceLadder {
    std::vector<Matrix> rungs;
    std::vector<double> traces;
    std::vector<double> logdets;

    int depth() const { return static_cast<int>(rungs.size()) - 1; }

    double trace_at(int n) const;
    double logdet_at(int n) const;

    /// Appends rungs until depth() >= n.
    void extend_to(int n, const SystemModel& model);
};

Matrix symmetrize(const Matrix& X);

/// f(X) = A X A' + Q
Matrix riccati_predict(const Matrix& X, const SystemModel& model);

/// g(X) = A X A' - A X C' (C X C' + R)^-1 C X A' + Q
Matrix riccati_update(const Matrix& X, const SystemModel& model);

SteadyState steady_state_filter(const SystemModel& model, double tol = 1e-10,
                                int max_iter = 10000);

CovarianceLadder build_ladder(const Matrix& P0, int N, const SystemModel& model);

double spectral_radius(const Matrix& A);

/// 1 - 1/rho(A)^2; non-positive when rho(A) <= 1.
double stability_threshold(const SystemModel& model);

double logdet_spd(const Matrix& X);

/// X <= Y in the PSD order, up to eigenvalue tolerance.
bool psd_leq(const Matrix& X, const Matrix& Y, double tol = 1e-9);

}  // namespace csched
