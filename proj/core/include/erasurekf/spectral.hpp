#pragma once

#include <erasurekf/linear_system.hpp>

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace erasurekf {

/// Diagonal form A = V diag(lambda) V^-1 with the observation matrix carried
/// along as C_tilde = C V. Eigenvalues are sorted by descending magnitude;
/// ties in magnitude are broken by ascending argument in [0, 2pi) so output
/// is deterministic.
struct SpectralForm {
    Eigen::VectorXcd eigenvalues;
    Eigen::MatrixXcd V;
    Eigen::MatrixXcd V_inv;
    Eigen::MatrixXcd C_tilde;
};

enum class StabilityClass { unstable, critically_stable, stable };

const char* to_string(StabilityClass s);

/// A maximal group of eigenvalues sharing one magnitude, together with the
/// matching columns of C_tilde. The block is degenerate when those columns
/// do not have full column rank, i.e. a single received measurement cannot
/// pin down the block's state.
struct EquiBlock {
    std::vector<int> indices;   ///< positions into the sorted eigenvalue list
    double magnitude = 0.0;     ///< shared |lambda| (taken from the first member)
    Eigen::MatrixXcd C_block;   ///< m x |indices| columns of C_tilde
    int c_rank = 0;
    bool degenerate = false;
    StabilityClass stability = StabilityClass::stable;

    int dim() const { return static_cast<int>(indices.size()); }
};

/// Partition of the spectrum into equi-blocks plus summary flags.
struct DegeneracyReport {
    std::vector<EquiBlock> blocks;
    int max_equiblock_dim = 0;                ///< dimension of the largest block
    bool system_degenerate = false;           ///< any block degenerate
    bool unstable_part_degenerate = false;    ///< any non-stable block degenerate
    std::vector<std::string> messages;        ///< borderline grouping decisions
};

/// Eigendecomposition of A with deterministic ordering (see SpectralForm).
/// Throws AssumptionError when A fails the diagonalizability thresholds
/// (reconstruction residual > 1e-8 * ||A||_F or cond(V) > 1e12).
SpectralForm diagonalize(const LinearSystem& sys);

/// Groups the sorted eigenvalues into maximal equal-magnitude blocks. Two
/// magnitudes share a block iff they differ by at most
/// rel_tol * max(anchor_magnitude, 1); a block is classed unstable when
/// |lambda| > 1 + rel_tol, critically stable within rel_tol of 1, stable
/// otherwise. Rank of each C_block uses singular values > 1e-9 * sigma_max.
/// Grouping decisions within a factor 10 of the tolerance are noted in
/// `messages`.
DegeneracyReport equi_blocks(const SpectralForm& sf, double rel_tol = 1e-9);

} // namespace erasurekf
