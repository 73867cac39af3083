#include <erasurekf/errors.hpp>
#include <erasurekf/system_io.hpp>

#include "test_support.hpp"

#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <random>
#include <string>

using namespace erasurekf;

namespace {

std::filesystem::path temp_file(const char* name) {
    return std::filesystem::temp_directory_path() / name;
}

} // namespace

TEST_CASE("well-formed document round-trips the declared fields") {
    const std::string doc = R"({
        "A": [[2.0, 0.0], [0.0, -2.0]],
        "C": [[1.0, 1.0]],
        "Q": [[1.0, 0.0], [0.0, 1.0]],
        "R": [[1.0]],
        "Sigma0": [[1.0, 0.0], [0.0, 1.0]]
    })";
    const auto sys = parse_system(doc);
    CHECK(sys.state_dim() == 2);
    CHECK(sys.obs_dim() == 1);
    CHECK(sys.A(1, 1) == -2.0);
    CHECK(sys.C(0, 1) == 1.0);
    // x0_mean defaults to zero when absent
    REQUIRE(sys.x0_mean.size() == 2);
    CHECK(sys.x0_mean.isZero(0.0));
    CHECK_FALSE(sys.angle_hint.has_value());
}

TEST_CASE("dimension inconsistency is rejected with the field named") {
    const std::string doc = R"({
        "A": [[2.0, 0.0], [0.0, -2.0]],
        "C": [[1.0, 1.0]],
        "Q": [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
        "R": [[1.0]],
        "Sigma0": [[1.0, 0.0], [0.0, 1.0]]
    })";
    CHECK_THROWS_AS(parse_system(doc), StructuralError);
}

TEST_CASE("ragged matrix is a parse error") {
    const std::string doc = R"({"A": [[1.0, 0.0], [0.0]], "C": [[1.0, 0.0]],
        "Q": [[1.0,0.0],[0.0,1.0]], "R": [[1.0]], "Sigma0": [[1.0,0.0],[0.0,1.0]]})";
    CHECK_THROWS_WITH_AS(parse_system(doc, "doc"),
                         doctest::Contains("ragged"), ParseError);
}

TEST_CASE("malformed JSON carries the origin in the message") {
    CHECK_THROWS_WITH_AS(parse_system("{not json", "broken.json"),
                         doctest::Contains("broken.json"), ParseError);
}

TEST_CASE("missing required field is named") {
    CHECK_THROWS_WITH_AS(parse_system(R"({"A": [[1.0]]})", "doc"),
                         doctest::Contains("\"C\""), ParseError);
}

TEST_CASE("angle hints") {
    const std::string base = R"("A": [[2.0, 0.0], [0.0, -2.0]], "C": [[1.0, 1.0]],
        "Q": [[1.0,0.0],[0.0,1.0]], "R": [[1.0]], "Sigma0": [[1.0,0.0],[0.0,1.0]])";
    SUBCASE("rational hint is reduced to lowest terms") {
        const auto sys = parse_system("{" + base + R"(, "angle_hint": {"numerator": 2, "denominator": 4}})");
        REQUIRE(sys.angle_hint.has_value());
        CHECK_FALSE(sys.angle_hint->irrational);
        CHECK(sys.angle_hint->numerator == 1);
        CHECK(sys.angle_hint->denominator == 2);
    }
    SUBCASE("irrational declaration") {
        const auto sys = parse_system("{" + base + R"(, "angle_hint": {"irrational": true}})");
        REQUIRE(sys.angle_hint.has_value());
        CHECK(sys.angle_hint->irrational);
    }
    SUBCASE("improper fraction is rejected") {
        CHECK_THROWS_AS(
            parse_system("{" + base + R"(, "angle_hint": {"numerator": 5, "denominator": 3}})"),
            ParseError);
    }
}

TEST_CASE("save then load reproduces every entry bit-exactly") {
    std::mt19937_64 rng(99);
    auto sys = test_support::make_system(test_support::random_diagonalizable(rng, 3, 0.5, 3.0),
                                         test_support::random_matrix(rng, 2, 3));
    sys.Q = test_support::random_spd(rng, 3);
    sys.R = test_support::random_spd(rng, 2);
    sys.Sigma0 = test_support::random_spd(rng, 3);
    sys.x0_mean = Eigen::Vector3d(1.0 / 3.0, 0.1, -7.25e-11);
    sys.angle_hint = AngleHint{false, 3, 7};

    const auto path = temp_file("erasurekf_roundtrip.json");
    save_system(sys, path);
    const auto back = load_system(path);
    std::filesystem::remove(path);

    CHECK((back.A.array() == sys.A.array()).all());
    CHECK((back.C.array() == sys.C.array()).all());
    CHECK((back.Q.array() == sys.Q.array()).all());
    CHECK((back.R.array() == sys.R.array()).all());
    CHECK((back.Sigma0.array() == sys.Sigma0.array()).all());
    CHECK((back.x0_mean.array() == sys.x0_mean.array()).all());
    REQUIRE(back.angle_hint.has_value());
    CHECK(back.angle_hint->numerator == 3);
    CHECK(back.angle_hint->denominator == 7);
}

TEST_CASE("missing file is reported distinctly") {
    CHECK_THROWS_WITH_AS(load_system("/nonexistent/zzz.json"),
                         doctest::Contains("no such file"), ParseError);
}
