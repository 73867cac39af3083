#include <erasurekf/spectral.hpp>

#include <erasurekf/errors.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace erasurekf {
namespace {

constexpr double kDiagResidualTol = 1e-8;
constexpr double kCondLimit = 1e12;
constexpr double kRankTol = 1e-9;

double arg_in_2pi(std::complex<double> z) {
    double a = std::arg(z);
    if (a < 0.0) a += 2.0 * std::numbers::pi;
    return a;
}

int column_rank(const Eigen::MatrixXcd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > kRankTol * sv(0)) ++rank;
    return rank;
}

} // namespace

const char* to_string(StabilityClass s) {
    switch (s) {
        case StabilityClass::unstable: return "unstable";
        case StabilityClass::critically_stable: return "critically_stable";
        case StabilityClass::stable: return "stable";
    }
    return "?";
}

SpectralForm diagonalize(const LinearSystem& sys) {
    check_dimensions(sys);
    const Eigen::Index n = sys.state_dim();

    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A);
    if (es.info() != Eigen::Success)
        throw AssumptionError("eigendecomposition of A failed to converge");

    // Sort by descending magnitude, ties by ascending argument in [0, 2pi).
    std::vector<int> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    const Eigen::VectorXcd raw = es.eigenvalues();
    std::sort(order.begin(), order.end(), [&raw](int a, int b) {
        const double ma = std::abs(raw(a)), mb = std::abs(raw(b));
        if (ma != mb) return ma > mb;
        return arg_in_2pi(raw(a)) < arg_in_2pi(raw(b));
    });

    SpectralForm sf;
    sf.eigenvalues.resize(n);
    sf.V.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        sf.eigenvalues(i) = raw(order[static_cast<std::size_t>(i)]);
        sf.V.col(i) = es.eigenvectors().col(order[static_cast<std::size_t>(i)]);
    }

    Eigen::PartialPivLU<Eigen::MatrixXcd> lu(sf.V);
    sf.V_inv = lu.solve(Eigen::MatrixXcd::Identity(n, n));

    Eigen::JacobiSVD<Eigen::MatrixXcd> vsvd(sf.V);
    const double sv_min = vsvd.singularValues()(n - 1);
    if (sv_min <= 0.0 || vsvd.singularValues()(0) / sv_min > kCondLimit)
        throw AssumptionError("A is not diagonalizable: eigenvector matrix is ill-conditioned");

    const Eigen::MatrixXcd recon = sf.V * sf.eigenvalues.asDiagonal() * sf.V_inv;
    const double residual = (recon - sys.A.cast<std::complex<double>>()).norm();
    if (residual > kDiagResidualTol * std::max(sys.A.norm(), 1e-300))
        throw AssumptionError("A is not diagonalizable: reconstruction residual too large");

    sf.C_tilde = sys.C.cast<std::complex<double>>() * sf.V;
    return sf;
}

DegeneracyReport equi_blocks(const SpectralForm& sf, double rel_tol) {
    if (!(rel_tol > 0.0)) throw StructuralError("rel_tol must be positive");
    const Eigen::Index n = sf.eigenvalues.size();
    if (n == 0 || sf.C_tilde.cols() != n)
        throw StructuralError("malformed spectral form");

    DegeneracyReport report;
    Eigen::Index i = 0;
    while (i < n) {
        EquiBlock block;
        const double anchor = std::abs(sf.eigenvalues(i));
        const double gap_scale = std::max(anchor, 1.0);
        block.magnitude = anchor;
        block.indices.push_back(static_cast<int>(i));
        Eigen::Index j = i + 1;
        while (j < n) {
            const double gap = std::abs(anchor - std::abs(sf.eigenvalues(j)));
            if (gap > rel_tol * gap_scale) break;
            if (gap > 0.1 * rel_tol * gap_scale) {
                std::ostringstream os;
                os << "grouping decision within 10x of tolerance: |lambda[" << i << "]| and |lambda["
                   << j << "]| differ by " << gap << " (grouped)";
                report.messages.push_back(os.str());
            }
            block.indices.push_back(static_cast<int>(j));
            ++j;
        }
        if (j < n) {
            const double gap = std::abs(anchor - std::abs(sf.eigenvalues(j)));
            if (gap <= 10.0 * rel_tol * gap_scale) {
                std::ostringstream os;
                os << "grouping decision within 10x of tolerance: |lambda[" << i << "]| and |lambda["
                   << j << "]| differ by " << gap << " (split)";
                report.messages.push_back(os.str());
            }
        }

        block.C_block.resize(sf.C_tilde.rows(), static_cast<Eigen::Index>(block.indices.size()));
        for (std::size_t c = 0; c < block.indices.size(); ++c)
            block.C_block.col(static_cast<Eigen::Index>(c)) = sf.C_tilde.col(block.indices[c]);
        block.c_rank = column_rank(block.C_block);
        block.degenerate = block.c_rank < block.dim();
        if (std::abs(block.magnitude - 1.0) <= rel_tol)
            block.stability = StabilityClass::critically_stable;
        else if (block.magnitude > 1.0)
            block.stability = StabilityClass::unstable;
        else
            block.stability = StabilityClass::stable;

        report.max_equiblock_dim = std::max(report.max_equiblock_dim, block.dim());
        report.system_degenerate = report.system_degenerate || block.degenerate;
        if (block.degenerate && block.stability != StabilityClass::stable)
            report.unstable_part_degenerate = true;
        report.blocks.push_back(std::move(block));
        i = j;
    }
    return report;
}

} // namespace erasurekf
