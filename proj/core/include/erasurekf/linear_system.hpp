#pragma once

#include <Eigen/Dense>
#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace erasurekf {

/// User-declared value of phi/2pi for an equal-magnitude eigenvalue pair,
/// either an exact fraction or an explicit statement of irrationality.
/// Floating-point eigenvalues cannot settle rationality on their own, so a
/// hint always wins over classification.
struct AngleHint {
    bool irrational = false;
    long long numerator = 0;
    long long denominator = 0;
};

/// Discrete-time linear Gaussian system
///
///   x[k+1] = A x[k] + w[k],   w ~ N(0, Q)
///   y[k]   = C x[k] + v[k],   v ~ N(0, R)
///   x[0]   ~ N(x0_mean, Sigma0)
///
/// observed through a memoryless erasure channel that delivers each y[k]
/// independently with probability p. All types here are plain values; every
/// operation on them is a pure function.
struct LinearSystem {
    Eigen::MatrixXd A;      ///< n x n state transition
    Eigen::MatrixXd C;      ///< m x n observation
    Eigen::MatrixXd Q;      ///< n x n process-noise covariance, SPD
    Eigen::MatrixXd R;      ///< m x m measurement-noise covariance, SPD
    Eigen::MatrixXd Sigma0; ///< n x n initial-state covariance, SPD
    Eigen::VectorXd x0_mean; ///< n-vector; empty means zero
    std::optional<AngleHint> angle_hint;

    Eigen::Index state_dim() const { return A.rows(); }
    Eigen::Index obs_dim() const { return C.rows(); }
};

/// Per-assumption verdicts for a system. All three flags true means the
/// system is admissible for every downstream operation.
struct ValidationReport {
    bool detectable = false;
    bool diagonalizable = false;
    bool noise_pd = false;
    std::vector<std::complex<double>> offending_eigenvalues; ///< eigenvalues failing the rank test
    std::vector<std::string> messages;

    bool admissible() const { return detectable && diagonalizable && noise_pd; }
};

/// Throws StructuralError if the matrices are not dimensionally consistent
/// (A n x n, C m x n, Q n x n, R m x m, Sigma0 n x n, x0_mean empty or n).
void check_dimensions(const LinearSystem& sys);

/// Checks the standing assumptions:
///   - (C, A) detectable: for every eigenvalue with |lambda| >= 1, the
///     stacked matrix [A - lambda I; C] has full column rank, decided by
///     singular values against tol * sigma_max;
///   - A diagonalizable: eigendecomposition reconstructs A to 1e-8 relative
///     Frobenius error with eigenvector condition number <= 1e12;
///   - Q, R, Sigma0 symmetric with smallest eigenvalue > 1e-12 * largest.
///
/// Dimension mismatches throw StructuralError; assumption failures are
/// reported in the returned flags, never thrown.
ValidationReport validate(const LinearSystem& sys, double tol = 1e-9);

} // namespace erasurekf
