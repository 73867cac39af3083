#pragma once

#include <erasurekf/linear_system.hpp>
#include <erasurekf/spectral.hpp>

#include <complex>
#include <optional>
#include <string>
#include <vector>

namespace erasurekf {

/// Classification of phi/2pi where lambda1 = lambda2 * exp(j phi).
/// `rational` carries the irreducible fraction r/q; `undetermined` means no
/// fraction with a small enough denominator survived, which floating point
/// cannot distinguish from irrationality. We never claim `irrational` from
/// numerics alone; that kind only arises from an explicit AngleHint.
struct RationalAngle {
    enum class Kind { rational, irrational, undetermined };
    Kind kind = Kind::undetermined;
    double value = 0.0; ///< phi / 2pi in [0, 1)
    long long numerator = 0;
    long long denominator = 0;
    /// Smallest denominator the classification could not rule out; set when
    /// kind == undetermined (equals max_denominator + 1).
    long long min_unexcluded_denominator = 0;
};

/// Value of the modified Dirichlet function: 1/q at an irreducible rational
/// r/q, 0 at an irrational. An undetermined angle is a refusal
/// (AssumptionError); the caller must resolve it via a hint or accept an
/// interval instead.
double modified_dirichlet(const RationalAngle& angle);

/// Derives phi = arg(lambda1 / lambda2) normalized to [0, 2pi) and searches
/// for an irreducible fraction r/q, q <= max_denominator, with
/// |phi/2pi - r/q| <= tol; the smallest such q wins. Returns undetermined
/// when none qualifies. Equal eigenvalues (phi = 0) are rejected: such a
/// pair is never detectable.
RationalAngle classify_angle(std::complex<double> lambda1, std::complex<double> lambda2,
                             long long max_denominator = 64, double tol = 1e-9);

/// Knobs for angle classification plus an optional overriding hint.
struct AngleOptions {
    long long max_denominator = 64;
    double tol = 1e-9;
    std::optional<AngleHint> hint;
};

/// An equal-magnitude eigenvalue pair with its two columns of the
/// transformed observation matrix.
struct PairBlock {
    std::complex<double> lambda1;
    std::complex<double> lambda2;
    Eigen::MatrixXcd C; ///< m x 2
};

/// One contributing bound and the rule that produced it.
struct BoundProvenance {
    double value = 0.0;
    std::string rule;
};

/// Critical arrival probability: either an exact value or a rigorous
/// [lower, upper] enclosure, with per-bound provenance. `exact` set implies
/// lower == exact == upper.
struct CriticalValueResult {
    std::optional<double> exact;
    double lower = 0.0;
    std::optional<double> upper;
    std::vector<BoundProvenance> provenance;
    std::string notes;
};

/// Rule tags used in provenance entries.
namespace rules {
inline constexpr const char* dominant_eigenvalue = "dominant-eigenvalue";
inline constexpr const char* degenerate_pair_rational = "degenerate-pair-rational-angle";
inline constexpr const char* degenerate_pair_irrational = "degenerate-pair-irrational-angle";
inline constexpr const char* degenerate_pair_undetermined = "degenerate-pair-undetermined-angle";
inline constexpr const char* block_lower_bound = "block-lower-bound";
} // namespace rules

/// Exact critical value of a two-eigenvalue system.
///
/// Non-degenerate (distinct magnitudes or rank(C) = 2):
///     p_c = max(1 - |lambda1|^-2, 0).
/// Degenerate with |lambda1| > 1:
///     rational angle r/q:  p_c = 1 - |lambda1|^(-2q/(q-1)),
///     irrational angle:    p_c = 1 - |lambda1|^-2,
///     undetermined angle:  interval [1 - |lambda1|^-2,
///                                    1 - |lambda1|^(-2q*/(q*-1))]
///     with q* the smallest denominator not excluded by classification.
/// Degenerate with |lambda1| <= 1: p_c = 0.
///
/// rank(C) = 0 throws AssumptionError (not detectable).
CriticalValueResult second_order_critical_value(const PairBlock& block,
                                                const AngleOptions& opts = {});

/// Critical value of a full system. Requires the system to pass validate()
/// (failures throw AssumptionError). Stable equi-blocks are excluded;
/// critically stable ones enter with |lambda| = 1, so they contribute 0.
/// Only A and C influence the result: replacing Q, R, Sigma0 by any other
/// SPD matrices leaves the output bit-identical.
///
/// Dispatch on the non-stable blocks:
///   (a) all non-degenerate: exact max(1 - |lambda1|^-2, 0);
///   (b) a single degenerate block of dimension 2 that carries the dominant
///       magnitude, all others non-degenerate with smaller bounds: its pair
///       value is exact for the whole system; in any other dimension-2
///       configuration the pair values only tighten the lower bound and the
///       result is an interval with unknown upper end;
///   (c) a degenerate block of dimension >= 3: lower bound from the best
///       1- and 2-dimensional sub-blocks, upper end unknown.
/// The angle hint carried by the system, if any, feeds the pair analysis.
CriticalValueResult critical_value(const LinearSystem& sys, const AngleOptions& opts = {});

} // namespace erasurekf
