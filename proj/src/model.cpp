#include "csched/model.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace csched {

namespace {

bool is_symmetric(const Matrix& X, double tol = 1e-9) {
    return (X - X.transpose()).cwiseAbs().maxCoeff() <= tol * std::max(1.0, X.cwiseAbs().maxCoeff());
}

void require_spd(const Matrix& X, const std::string& name) {
    if (X.rows() != X.cols()) throw ModelError(name + " must be square");
    if (!is_symmetric(X)) throw ModelError(name + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(X));
    if (es.eigenvalues().minCoeff() <= 0.0)
        throw ModelError(name + " must be positive definite");
}

Matrix parse_matrix(const nlohmann::json& j, const std::string& key) {
    if (!j.contains(key)) throw ModelError("missing key '" + key + "'");
    const auto& rows = j.at(key);
    if (!rows.is_array() || rows.empty()) throw ModelError(key + " must be a nested array");
    const size_t ncols = rows.front().size();
    Matrix M(rows.size(), ncols);
    for (size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != ncols)
            throw ModelError(key + " rows must have equal length");
        for (size_t c = 0; c < ncols; ++c) M(r, c) = rows[r][c].get<double>();
    }
    return M;
}

}  // namespace

Matrix symmetrize(const Matrix& X) { return 0.5 * (X + X.transpose()); }

void SystemModel::validate() const {
    if (A.rows() != A.cols()) throw ModelError("A must be square");
    if (C.cols() != A.rows()) throw ModelError("C column count must match state dimension");
    if (Q.rows() != A.rows()) throw ModelError("Q dimension must match state dimension");
    if (R.rows() != C.rows()) throw ModelError("R dimension must match measurement dimension");
    require_spd(Q, "Q");
    require_spd(R, "R");
    if (!(lambda > 0.0 && lambda < 1.0)) throw ModelError("lambda must lie in (0,1)");
    if (!(lambda_e > 0.0 && lambda_e < 1.0)) throw ModelError("lambda_e must lie in (0,1)");
}

SystemModel SystemModel::from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("invalid model JSON: ") + e.what());
    }
    SystemModel m;
    try {
        m.A = parse_matrix(j, "A");
        m.C = parse_matrix(j, "C");
        m.Q = parse_matrix(j, "Q");
        m.R = parse_matrix(j, "R");
        if (!j.contains("lambda") || !j.contains("lambda_e"))
            throw ModelError("missing lambda / lambda_e");
        m.lambda = j.at("lambda").get<double>();
        m.lambda_e = j.at("lambda_e").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ModelError(std::string("invalid model JSON: ") + e.what());
    }
    m.validate();
    return m;
}

SystemModel SystemModel::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ModelError("cannot read model file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return from_json_text(ss.str());
}

double CovarianceLadder::trace_at(int n) const {
    if (n < 0 || n > depth()) throw TruncationError("ladder index " + std::to_string(n) + " beyond depth " + std::to_string(depth()));
    return traces[static_cast<size_t>(n)];
}

double CovarianceLadder::logdet_at(int n) const {
    if (n < 0 || n > depth()) throw TruncationError("ladder index " + std::to_string(n) + " beyond depth " + std::to_string(depth()));
    return logdets[static_cast<size_t>(n)];
}

void CovarianceLadder::extend_to(int n, const SystemModel& model) {
    while (depth() < n) {
        Matrix next = riccati_predict(rungs.back(), model);
        rungs.push_back(next);
        traces.push_back(next.trace());
        logdets.push_back(logdet_spd(next));
    }
}

Matrix riccati_predict(const Matrix& X, const SystemModel& model) {
    if (X.rows() != model.A.rows() || X.cols() != model.A.rows())
        throw ModelError("riccati_predict: dimension mismatch");
    if (!is_symmetric(X)) throw ModelError("riccati_predict: input not symmetric");
    return symmetrize(model.A * X * model.A.transpose() + model.Q);
}

Matrix riccati_update(const Matrix& X, const SystemModel& model) {
    if (X.rows() != model.A.rows() || X.cols() != model.A.rows())
        throw ModelError("riccati_update: dimension mismatch");
    const Matrix S = model.C * X * model.C.transpose() + model.R;
    const Matrix AXCt = model.A * X * model.C.transpose();
    return symmetrize(model.A * X * model.A.transpose() -
                      AXCt * S.ldlt().solve(AXCt.transpose()) + model.Q);
}

SteadyState steady_state_filter(const SystemModel& model, double tol, int max_iter) {
    if (tol <= 0.0) throw ModelError("steady_state_filter: tol must be positive");
    Matrix X = model.Q;  // predicted covariance iterate
    double diff = 0.0;
    int it = 0;
    for (; it < max_iter; ++it) {
        Matrix next = riccati_update(X, model);
        diff = (next - X).cwiseAbs().maxCoeff();
        X = next;
        if (diff < tol) break;
    }
    if (diff >= tol)
        throw DivergenceError("steady_state_filter: no convergence in " +
                              std::to_string(max_iter) + " iterations (residual " +
                              std::to_string(diff) + ")");
    SteadyState ss;
    ss.P_bar_plus = X;
    const Matrix S = model.C * X * model.C.transpose() + model.R;
    const Matrix K = X * model.C.transpose() * S.ldlt().solve(Matrix::Identity(S.rows(), S.cols()));
    ss.P_bar = symmetrize(X - K * model.C * X);
    ss.iterations = it + 1;
    ss.residual = diff;
    return ss;
}

CovarianceLadder build_ladder(const Matrix& P0, int N, const SystemModel& model) {
    if (N < 1) throw ModelError("build_ladder: N must be >= 1");
    CovarianceLadder ladder;
    Matrix X = symmetrize(P0);
    ladder.rungs.push_back(X);
    ladder.traces.push_back(X.trace());
    ladder.logdets.push_back(logdet_spd(X));
    ladder.extend_to(N, model);
    return ladder;
}

double spectral_radius(const Matrix& A) {
    return A.eigenvalues().cwiseAbs().maxCoeff();
}

double stability_threshold(const SystemModel& model) {
    const double rho = spectral_radius(model.A);
    return 1.0 - 1.0 / (rho * rho);
}

double logdet_spd(const Matrix& X) {
    Eigen::LLT<Matrix> llt(symmetrize(X));
    if (llt.info() != Eigen::Success)
        throw NumericError("logdet_spd: matrix is not positive definite");
    return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

bool psd_leq(const Matrix& X, const Matrix& Y, double tol) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(Y - X));
    return es.eigenvalues().minCoeff() >= -tol;
}

}  // namespace csched
