#pragma once

#include <erasurekf/linear_system.hpp>
#include <erasurekf/spectral.hpp>

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace erasurekf {

/// One-step-predictor state of the intermittent Kalman filter: x_hat is the
/// prediction of x[k] given arrivals up to k-1, P its covariance. P is
/// re-symmetrized after every step.
struct FilterState {
    Eigen::VectorXd x_hat;
    Eigen::MatrixXd P;
    long long k = 0;
};

/// i.i.d. Bernoulli(p) arrival sequence, reproducible bit-exactly from
/// (seed, p, length): gamma[i] = 1 iff the i-th SplitMix64 uniform < p.
struct ErasureTrace {
    std::vector<std::uint8_t> gammas;
    double p = 0.0;
    std::uint64_t seed = 0;

    int length() const { return static_cast<int>(gammas.size()); }
};

ErasureTrace make_erasure_trace(std::uint64_t seed, double p, int length);

/// Covariance update of the one-step predictor under arrival indicator
/// gamma:
///
///   P' = A P A' + Q - gamma * A P C' (C P C' + R)^-1 C P A'
///
/// The innovation system is solved through a Cholesky factorization; no
/// explicit inverse. Non-finite entries in P throw NumericError.
Eigen::MatrixXd riccati_step(const Eigen::MatrixXd& P, int gamma, const LinearSystem& sys);

/// Same update written on the inverse covariance,
///   P' = A (P^-1 + gamma * C' R^-1 C)^-1 A' + Q,
/// algebraically identical to riccati_step. Requires P strictly positive
/// definite; a singular P throws NumericError (use riccati_step there).
Eigen::MatrixXd information_step(const Eigen::MatrixXd& P, int gamma, const LinearSystem& sys);

/// Full filter step: measurement update with gain K = P C'(C P C' + R)^-1
/// when gamma = 1 (y must be present, else StructuralError), then time
/// update. The covariance component equals riccati_step on the same inputs.
FilterState kalman_step(const FilterState& state, const std::optional<Eigen::VectorXd>& y,
                        int gamma, const LinearSystem& sys);

/// Predictor covariance after the arrival prefix gammas[0..k], computed as
/// the error covariance of the maximum-likelihood estimator on the stacked
/// linear model relating the received measurements (and the prior mean) to
/// x[k+1]. Rows whose gamma is zero are deleted rather than zero-weighted,
/// which keeps the stacked noise covariance nonsingular.
///
/// Independent of the Riccati recursion by construction; agrees with it to
/// numerical tolerance. Needs invertible A (NumericError otherwise) and a
/// final time index k of at most `max_prefix` (StructuralError beyond it).
Eigen::MatrixXd ml_covariance(std::span<const std::uint8_t> gammas, const LinearSystem& sys,
                              int max_prefix = 200);
Eigen::MatrixXd ml_covariance(const ErasureTrace& trace, const LinearSystem& sys,
                              int max_prefix = 200);

/// Partial sum  sum_{i=1..L} gamma_i (Lambda^-i)^H C~^H C~ Lambda^-i  on the
/// diagonal form; Hermitian by construction. Entry gammas[0] is the i = 1
/// term. All eigenvalues must be unstable (|lambda| > 1), else
/// AssumptionError.
Eigen::MatrixXcd grammian_partial_sum(const SpectralForm& sf, std::span<const std::uint8_t> gammas);

} // namespace erasurekf
