#include <erasurekf/linear_system.hpp>

#include <erasurekf/errors.hpp>

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

namespace erasurekf {
namespace {

constexpr double kDiagResidualTol = 1e-8;
constexpr double kCondLimit = 1e12;
constexpr double kPdTol = 1e-12;
// Eigenvalues within this band of the unit circle still join the PBH test;
// keeps the test aligned with the critically-stable classification.
constexpr double kUnitBand = 1e-9;

std::string dim_string(const Eigen::MatrixXd& M) {
    std::ostringstream os;
    os << M.rows() << "x" << M.cols();
    return os.str();
}

bool symmetric_positive_definite(const Eigen::MatrixXd& M, std::string name,
                                 std::vector<std::string>& messages) {
    const double scale = std::max(1.0, M.cwiseAbs().maxCoeff());
    if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
        messages.push_back(name + " is not symmetric");
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M, Eigen::EigenvaluesOnly);
    const double max_eig = es.eigenvalues().maxCoeff();
    const double min_eig = es.eigenvalues().minCoeff();
    if (!(max_eig > 0.0) || min_eig <= kPdTol * max_eig) {
        std::ostringstream os;
        os << name << " is not strictly positive definite (eigenvalue range [" << min_eig << ", "
           << max_eig << "])";
        messages.push_back(os.str());
        return false;
    }
    return true;
}

int numerical_rank(const Eigen::MatrixXcd& M, double tol) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0) return 0;
    const double cut = tol * sv(0);
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > cut) ++rank;
    return rank;
}

} // namespace

void check_dimensions(const LinearSystem& sys) {
    const Eigen::Index n = sys.A.rows();
    const Eigen::Index m = sys.C.rows();
    if (n == 0) throw StructuralError("A must be non-empty");
    if (sys.A.cols() != n)
        throw StructuralError("A must be square, got " + dim_string(sys.A));
    if (sys.C.cols() != n)
        throw StructuralError("C must have " + std::to_string(n) + " columns, got " +
                              dim_string(sys.C));
    if (m == 0) throw StructuralError("C must have at least one row");
    if (sys.Q.rows() != n || sys.Q.cols() != n)
        throw StructuralError("Q must be " + std::to_string(n) + "x" + std::to_string(n) +
                              ", got " + dim_string(sys.Q));
    if (sys.R.rows() != m || sys.R.cols() != m)
        throw StructuralError("R must be " + std::to_string(m) + "x" + std::to_string(m) +
                              ", got " + dim_string(sys.R));
    if (sys.Sigma0.rows() != n || sys.Sigma0.cols() != n)
        throw StructuralError("Sigma0 must be " + std::to_string(n) + "x" + std::to_string(n) +
                              ", got " + dim_string(sys.Sigma0));
    if (sys.x0_mean.size() != 0 && sys.x0_mean.size() != n)
        throw StructuralError("x0_mean must have " + std::to_string(n) + " entries, got " +
                              std::to_string(sys.x0_mean.size()));
}

ValidationReport validate(const LinearSystem& sys, double tol) {
    if (!(tol > 0.0)) throw StructuralError("tol must be positive");
    check_dimensions(sys);

    ValidationReport report;
    const Eigen::Index n = sys.state_dim();

    // Evaluate all three so the report names every offending matrix.
    const bool q_pd = symmetric_positive_definite(sys.Q, "Q", report.messages);
    const bool r_pd = symmetric_positive_definite(sys.R, "R", report.messages);
    const bool s_pd = symmetric_positive_definite(sys.Sigma0, "Sigma0", report.messages);
    report.noise_pd = q_pd && r_pd && s_pd;

    Eigen::EigenSolver<Eigen::MatrixXd> es(sys.A);
    if (es.info() != Eigen::Success) {
        report.diagonalizable = false;
        report.detectable = false;
        report.messages.push_back("eigendecomposition of A failed to converge");
        return report;
    }
    const Eigen::VectorXcd eigs = es.eigenvalues();
    const Eigen::MatrixXcd V = es.eigenvectors();

    // Diagonalizability: reconstruction residual plus eigenvector conditioning.
    Eigen::JacobiSVD<Eigen::MatrixXcd> vsvd(V);
    const double sv_max = vsvd.singularValues()(0);
    const double sv_min = vsvd.singularValues()(vsvd.singularValues().size() - 1);
    const double cond = sv_min > 0.0 ? sv_max / sv_min : std::numeric_limits<double>::infinity();
    bool diag_ok = cond <= kCondLimit;
    if (diag_ok) {
        const Eigen::MatrixXcd recon =
            V * eigs.asDiagonal() * V.partialPivLu().solve(Eigen::MatrixXcd::Identity(n, n));
        const double residual = (recon - sys.A.cast<std::complex<double>>()).norm();
        diag_ok = residual <= kDiagResidualTol * std::max(sys.A.norm(), 1e-300);
        if (!diag_ok) report.messages.push_back("A failed the diagonalization residual check");
    } else {
        report.messages.push_back("eigenvector matrix of A is ill-conditioned");
    }
    report.diagonalizable = diag_ok;

    // PBH detectability over every eigenvalue on or outside the unit circle.
    report.detectable = true;
    Eigen::MatrixXcd stacked(n + sys.obs_dim(), n);
    for (Eigen::Index i = 0; i < n; ++i) {
        if (std::abs(eigs(i)) < 1.0 - kUnitBand) continue;
        stacked.topRows(n) =
            sys.A.cast<std::complex<double>>() - eigs(i) * Eigen::MatrixXcd::Identity(n, n);
        stacked.bottomRows(sys.obs_dim()) = sys.C.cast<std::complex<double>>();
        if (numerical_rank(stacked, tol) < n) {
            report.detectable = false;
            report.offending_eigenvalues.push_back(eigs(i));
        }
    }
    if (!report.detectable) {
        std::ostringstream os;
        os << "(C, A) is not detectable: rank([A - lambda I; C]) < n at";
        for (const auto& l : report.offending_eigenvalues)
            os << " (" << l.real() << (l.imag() < 0 ? "-" : "+") << std::abs(l.imag()) << "j)";
        report.messages.push_back(os.str());
    }
    return report;
}

} // namespace erasurekf
