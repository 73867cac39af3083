#include <erasurekf/filter.hpp>

#include <erasurekf/errors.hpp>
#include <erasurekf/rng.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <vector>

namespace erasurekf {
namespace {

void require_finite(const Eigen::MatrixXd& P) {
    if (!P.allFinite()) throw NumericError("covariance contains non-finite entries");
}

Eigen::MatrixXd symmetrized(Eigen::MatrixXd M) {
    M = 0.5 * (M + M.transpose()).eval();
    return M;
}

} // namespace

ErasureTrace make_erasure_trace(std::uint64_t seed, double p, int length) {
    if (p < 0.0 || p > 1.0) throw StructuralError("p must lie in [0, 1]");
    if (length <= 0) throw StructuralError("length must be positive");
    ErasureTrace trace;
    trace.p = p;
    trace.seed = seed;
    trace.gammas.resize(static_cast<std::size_t>(length));
    SplitMix64 gen{seed};
    for (auto& g : trace.gammas) g = gen.next_unit() < p ? 1 : 0;
    return trace;
}

Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, int gamma, const LinearSystem& sys) {
    check_dimensions(sys);
    if (P.rows() != sys.state_dim() || P.cols() != sys.state_dim())
        throw StructuralError("P must be n x n");
    require_finite(P);

    Eigen::MatrixXd next = sys.A * P * sys.A.transpose() + sys.Q;
    if (gamma) {
        const Eigen::MatrixXd S = sys.C * P * sys.C.transpose() + sys.R;
        const Eigen::MatrixXd X = sys.C * P * sys.A.transpose(); // m x n
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            throw NumericError("innovation covariance is not positive definite");
        next -= X.transpose() * llt.solve(X);
    }
    return symmetrized(std::move(next));
}

Eigen::MatrixXd information_step(const Eigen::MatrixXd& P, int gamma, const LinearSystem& sys) {
    check_dimensions(sys);
    if (P.rows() != sys.state_dim() || P.cols() != sys.state_dim())
        throw StructuralError("P must be n x n");
    require_finite(P);
    if (!gamma) return symmetrized(sys.A * P * sys.A.transpose() + sys.Q);

    const Eigen::Index n = sys.state_dim();
    Eigen::LLT<Eigen::MatrixXd> pllt(symmetrized(P));
    if (pllt.info() != Eigen::Success)
        throw NumericError("P is singular beyond tolerance; use riccati_step instead");
    Eigen::LLT<Eigen::MatrixXd> rllt(sys.R);
    if (rllt.info() != Eigen::Success) throw NumericError("R is not positive definite");

    Eigen::MatrixXd M = pllt.solve(Eigen::MatrixXd::Identity(n, n));
    M += sys.C.transpose() * rllt.solve(sys.C);
    Eigen::LLT<Eigen::MatrixXd> mllt(symmetrized(std::move(M)));
    if (mllt.info() != Eigen::Success)
        throw NumericError("information matrix is not positive definite");
    const Eigen::MatrixXd Y = mllt.solve(sys.A.transpose());
    return symmetrized(sys.A * Y + sys.Q);
}

FilterState kalman_step(const FilterState& state, const std::optional<Eigen::VectorXd>& y,
                        int gamma, const LinearSystem& sys) {
    check_dimensions(sys);
    if (state.x_hat.size() != sys.state_dim())
        throw StructuralError("state.x_hat must have n entries");
    if (gamma && !y)
        throw StructuralError("gamma = 1 requires a measurement");
    if (gamma && y->size() != sys.obs_dim())
        throw StructuralError("y must have m entries");

    Eigen::VectorXd x_filtered = state.x_hat;
    if (gamma) {
        const Eigen::MatrixXd S = sys.C * state.P * sys.C.transpose() + sys.R;
        Eigen::LLT<Eigen::MatrixXd> llt(S);
        if (llt.info() != Eigen::Success)
            throw NumericError("innovation covariance is not positive definite");
        const Eigen::VectorXd innovation = *y - sys.C * state.x_hat;
        // K = P C' S^-1, applied as x + K nu without forming K explicitly
        x_filtered += state.P * sys.C.transpose() * llt.solve(innovation);
    }

    FilterState next;
    next.x_hat = sys.A * x_filtered;
    next.P = riccati_step(state.P, gamma, sys);
    next.k = state.k + 1;
    return next;
}

Eigen::MatrixXd ml_covariance(std::span<const std::uint8_t> gammas, const LinearSystem& sys,
                              int max_prefix) {
    check_dimensions(sys);
    const int len = static_cast<int>(gammas.size()); // k + 1 steps, times 0..k
    if (len == 0) throw StructuralError("gamma prefix must be non-empty");
    if (len - 1 > max_prefix)
        throw StructuralError("gamma prefix ends at time " + std::to_string(len - 1) +
                              ", beyond the enforced cap k <= " + std::to_string(max_prefix));

    const Eigen::Index n = sys.state_dim();
    const Eigen::Index m = sys.obs_dim();

    Eigen::FullPivLU<Eigen::MatrixXd> alu(sys.A);
    if (!alu.isInvertible()) throw NumericError("A is singular: the stacked form needs A^-1");
    const Eigen::MatrixXd Ainv = alu.inverse();

    // Powers A^-s for s = 0..len.
    std::vector<Eigen::MatrixXd> pow(static_cast<std::size_t>(len) + 1);
    pow[0] = Eigen::MatrixXd::Identity(n, n);
    for (int s = 1; s <= len; ++s) pow[s] = Ainv * pow[s - 1];

    // D[d][l] = sum_{u=0}^{l} A^-(u+1+d) Q A^-(u+1)', needed for the noise
    // cross-covariances below. d indexes the row-time offset.
    std::vector<std::vector<Eigen::MatrixXd>> D(static_cast<std::size_t>(len));
    for (int d = 0; d < len; ++d) {
        D[d].resize(static_cast<std::size_t>(len - d));
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(n, n);
        for (int l = 0; l + d < len; ++l) {
            acc += pow[l + 1 + d] * sys.Q * pow[l + 1].transpose();
            D[d][l] = acc;
        }
    }

    std::vector<int> kept; // times i with gamma_i = 1
    for (int i = 0; i < len; ++i)
        if (gammas[static_cast<std::size_t>(i)]) kept.push_back(i);
    const Eigen::Index rows = m * static_cast<Eigen::Index>(kept.size()) + n;

    // Stacked model relating the received measurements and the prior mean to
    // x[k+1]: row block for time i is C A^-(k+1-i); the prior block A^-(k+1).
    Eigen::MatrixXd H(rows, n);
    for (std::size_t a = 0; a < kept.size(); ++a)
        H.middleRows(static_cast<Eigen::Index>(a) * m, m) = sys.C * pow[len - kept[a]];
    H.bottomRows(n) = pow[len];

    // Noise covariance of the stacked model, with erased rows deleted.
    const int k_last = len - 1;
    Eigen::MatrixXd Cov(rows, rows);
    for (std::size_t a = 0; a < kept.size(); ++a) {
        for (std::size_t b = a; b < kept.size(); ++b) {
            const int i = kept[a];
            const int j = kept[b]; // j >= i
            Eigen::MatrixXd block =
                sys.C * D[j - i][k_last - j] * sys.C.transpose(); // C S_ij C'
            if (a == b) block += sys.R;
            Cov.block(static_cast<Eigen::Index>(a) * m, static_cast<Eigen::Index>(b) * m, m, m) =
                block;
            if (a != b)
                Cov.block(static_cast<Eigen::Index>(b) * m, static_cast<Eigen::Index>(a) * m, m,
                          m) = block.transpose();
        }
        const int i = kept[a];
        // Cross-covariance with the prior block.
        const Eigen::MatrixXd cross = sys.C * D[i][k_last - i].transpose();
        Cov.block(static_cast<Eigen::Index>(a) * m, rows - n, m, n) = cross;
        Cov.block(rows - n, static_cast<Eigen::Index>(a) * m, n, m) = cross.transpose();
    }
    Cov.bottomRightCorner(n, n) = sys.Sigma0 + D[0][k_last];

    Eigen::LDLT<Eigen::MatrixXd> covldlt(symmetrized(std::move(Cov)));
    if (covldlt.info() != Eigen::Success)
        throw NumericError("stacked noise covariance is not positive definite");
    Eigen::MatrixXd info = H.transpose() * covldlt.solve(H);
    Eigen::LDLT<Eigen::MatrixXd> infoldlt(symmetrized(std::move(info)));
    if (infoldlt.info() != Eigen::Success)
        throw NumericError("stacked information matrix is singular");
    return symmetrized(infoldlt.solve(Eigen::MatrixXd::Identity(n, n)));
}

Eigen::MatrixXd ml_covariance(const ErasureTrace& trace, const LinearSystem& sys,
                              int max_prefix) {
    return ml_covariance(std::span<const std::uint8_t>(trace.gammas), sys, max_prefix);
}

Eigen::MatrixXcd grammian_partial_sum(const SpectralForm& sf,
                                      std::span<const std::uint8_t> gammas) {
    const Eigen::Index n = sf.eigenvalues.size();
    for (Eigen::Index i = 0; i < n; ++i)
        if (!(std::abs(sf.eigenvalues(i)) > 1.0))
            throw AssumptionError("grammian partial sum requires all eigenvalues unstable");

    Eigen::VectorXcd lam_inv(n);
    for (Eigen::Index i = 0; i < n; ++i) lam_inv(i) = 1.0 / sf.eigenvalues(i);

    Eigen::MatrixXcd sum = Eigen::MatrixXcd::Zero(n, n);
    Eigen::VectorXcd scale = Eigen::VectorXcd::Ones(n);
    for (std::size_t t = 0; t < gammas.size(); ++t) {
        scale = scale.cwiseProduct(lam_inv).eval(); // Lambda^-(t+1) diagonal
        if (!gammas[t]) continue;
        const Eigen::MatrixXcd B = sf.C_tilde * scale.asDiagonal();
        sum += B.adjoint() * B;
    }
    return 0.5 * (sum + sum.adjoint()).eval();
}

} // namespace erasurekf
