#include <erasurekf/errors.hpp>
#include <erasurekf/spectral.hpp>

#include "test_support.hpp"

#include <doctest.h>

#include <Eigen/Dense>
#include <numbers>
#include <random>
#include <set>

using namespace erasurekf;
using test_support::make_system;

TEST_CASE("diagonal input is already in standard form") {
    Eigen::MatrixXd C(1, 2);
    C << 1, 1;
    const auto sf = diagonalize(make_system(Eigen::Vector2d(3, 2).asDiagonal(), C));
    CHECK(sf.eigenvalues(0).real() == doctest::Approx(3.0));
    CHECK(sf.eigenvalues(1).real() == doctest::Approx(2.0));
    CHECK(std::abs(sf.C_tilde(0, 0)) == doctest::Approx(1.0));
    CHECK(std::abs(sf.C_tilde(0, 1)) == doctest::Approx(1.0));
    CHECK((sf.V.cwiseAbs() - Eigen::Matrix2d::Identity()).norm() < 1e-12);
}

TEST_CASE("rotation block gives a conjugate pair of magnitude two") {
    Eigen::MatrixXd A(2, 2);
    A << 0, 2, -2, 0; // characteristic polynomial x^2 + 4
    Eigen::MatrixXd C(1, 2);
    C << 1, 0;
    const auto sys = make_system(A, C);
    const auto sf = diagonalize(sys);
    CHECK(std::abs(sf.eigenvalues(0)) == doctest::Approx(2.0));
    CHECK(std::abs(sf.eigenvalues(1)) == doctest::Approx(2.0));
    // tie broken by ascending argument: +2j (pi/2) before -2j (3pi/2)
    CHECK(sf.eigenvalues(0).imag() > 0);
    CHECK(sf.eigenvalues(1).imag() < 0);
    const Eigen::MatrixXcd recon = sf.V * sf.eigenvalues.asDiagonal() * sf.V_inv;
    CHECK((recon - A.cast<std::complex<double>>()).norm() <= 1e-8 * A.norm());
}

TEST_CASE("four-dimensional example sorts magnitudes then arguments") {
    Eigen::MatrixXd A = Eigen::Vector4d(2, -2, 3, -3).asDiagonal();
    Eigen::MatrixXd C(2, 4);
    C << 1, 0, 1, 0, 0, 1, 0, 1;
    const auto sf = diagonalize(make_system(A, C));
    CHECK(sf.eigenvalues(0).real() == doctest::Approx(3.0));
    CHECK(sf.eigenvalues(1).real() == doctest::Approx(-3.0));
    CHECK(sf.eigenvalues(2).real() == doctest::Approx(2.0));
    CHECK(sf.eigenvalues(3).real() == doctest::Approx(-2.0));
    // C_tilde columns follow the permutation (up to eigenvector sign)
    Eigen::MatrixXd expected(2, 4);
    expected << 1, 0, 1, 0, 0, 1, 0, 1;
    CHECK((sf.C_tilde.cwiseAbs() - expected).norm() < 1e-9);
}

TEST_CASE("degenerate pair example") {
    Eigen::MatrixXd C(1, 2);
    C << 1, 1;
    const auto sf = diagonalize(make_system(Eigen::Vector2d(2, -2).asDiagonal(), C));
    const auto rep = equi_blocks(sf);
    REQUIRE(rep.blocks.size() == 1);
    CHECK(rep.blocks[0].dim() == 2);
    CHECK(rep.blocks[0].degenerate);
    CHECK(rep.blocks[0].c_rank == 1);
    CHECK(rep.blocks[0].stability == StabilityClass::unstable);
    CHECK(rep.max_equiblock_dim == 2);
    CHECK(rep.system_degenerate);
    CHECK(rep.unstable_part_degenerate);
}

TEST_CASE("two non-degenerate blocks of dimension two") {
    Eigen::MatrixXd A = Eigen::Vector4d(2, -2, 3, -3).asDiagonal();
    Eigen::MatrixXd C(2, 4);
    C << 1, 0, 1, 0, 0, 1, 0, 1;
    const auto rep = equi_blocks(diagonalize(make_system(A, C)));
    REQUIRE(rep.blocks.size() == 2);
    CHECK(rep.blocks[0].magnitude == doctest::Approx(3.0));
    CHECK(rep.blocks[1].magnitude == doctest::Approx(2.0));
    CHECK_FALSE(rep.blocks[0].degenerate);
    CHECK_FALSE(rep.blocks[1].degenerate);
    CHECK(rep.max_equiblock_dim == 2);
    CHECK_FALSE(rep.system_degenerate);
}

TEST_CASE("distinct magnitudes give singleton non-degenerate blocks") {
    Eigen::MatrixXd C(1, 2);
    C << 0.3, -7;
    const auto rep = equi_blocks(diagonalize(make_system(Eigen::Vector2d(3, 2).asDiagonal(), C)));
    REQUIRE(rep.blocks.size() == 2);
    CHECK(rep.max_equiblock_dim == 1);
    for (const auto& b : rep.blocks) {
        CHECK(b.dim() == 1);
        CHECK_FALSE(b.degenerate);
        CHECK(b.c_rank == 1);
    }
}

TEST_CASE("blocks partition the index set") {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 4);
        const auto sys = make_system(test_support::random_diagonalizable(rng, n, 0.4, 3.0),
                                     test_support::random_matrix(rng, 2, n));
        const auto rep = equi_blocks(diagonalize(sys));
        std::set<int> seen;
        int total = 0;
        for (const auto& b : rep.blocks) {
            for (int idx : b.indices) {
                CHECK(seen.insert(idx).second); // disjoint
                ++total;
            }
        }
        CHECK(total == n);
        CHECK(*seen.begin() == 0);
        CHECK(*seen.rbegin() == n - 1);
    }
}

TEST_CASE("full column rank C makes every block non-degenerate") {
    std::mt19937_64 rng(555);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 2 + static_cast<int>(rng() % 3);
        const auto C = test_support::random_matrix(rng, n + 1, n); // full rank a.s.
        const auto sys = make_system(test_support::random_diagonalizable(rng, n, 0.5, 2.0), C);
        const auto rep = equi_blocks(diagonalize(sys));
        for (const auto& b : rep.blocks) CHECK_FALSE(b.degenerate);
    }
}

TEST_CASE("degeneracy is invariant under scaling C") {
    Eigen::MatrixXd C(1, 2);
    C << 1, 1;
    const auto sys = make_system(Eigen::Vector2d(2, -2).asDiagonal(), C);
    const auto base = equi_blocks(diagonalize(sys));
    for (double scale : {1e-6, -3.7, 1e6}) {
        auto scaled = sys;
        scaled.C *= scale;
        const auto rep = equi_blocks(diagonalize(scaled));
        REQUIRE(rep.blocks.size() == base.blocks.size());
        for (std::size_t i = 0; i < rep.blocks.size(); ++i) {
            CHECK(rep.blocks[i].degenerate == base.blocks[i].degenerate);
            CHECK(rep.blocks[i].c_rank == base.blocks[i].c_rank);
        }
    }
}

TEST_CASE("stability classification bands") {
    Eigen::MatrixXd C(1, 3);
    C << 1, 1, 1;
    const auto sf =
        diagonalize(make_system(Eigen::Vector3d(1.5, 1.0 + 5e-10, 0.99).asDiagonal(), C));
    const auto rep = equi_blocks(sf);
    REQUIRE(rep.blocks.size() == 3);
    CHECK(rep.blocks[0].stability == StabilityClass::unstable);
    CHECK(rep.blocks[1].stability == StabilityClass::critically_stable);
    CHECK(rep.blocks[2].stability == StabilityClass::stable);
}

TEST_CASE("borderline grouping decisions are reported") {
    Eigen::MatrixXd C(1, 2);
    C << 1, 1;
    SUBCASE("split within 10x of the tolerance") {
        const auto sf =
            diagonalize(make_system(Eigen::Vector2d(2.0, 2.0 * (1.0 + 3e-9)).asDiagonal(), C));
        const auto rep = equi_blocks(sf);
        CHECK(rep.blocks.size() == 2);
        REQUIRE(rep.messages.size() >= 1);
        CHECK(rep.messages[0].find("split") != std::string::npos);
    }
    SUBCASE("comfortable split stays silent") {
        const auto sf = diagonalize(make_system(Eigen::Vector2d(2.0, 2.1).asDiagonal(), C));
        CHECK(equi_blocks(sf).messages.empty());
    }
}
