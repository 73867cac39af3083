#include <erasurekf/critical_value.hpp>

#include <erasurekf/errors.hpp>

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <sstream>

namespace erasurekf {
namespace {

// Same band equi_blocks uses; keeps the dispatcher and the partition aligned.
constexpr double kSpectralBand = 1e-9;

double nondegenerate_value(double mag) {
    if (mag <= 1.0) return 0.0;
    return 1.0 - 1.0 / (mag * mag);
}

// 1 - mag^(-2 / (1 - dm)) with dm the modified Dirichlet value of the angle.
double degenerate_value(double mag, double dm) {
    if (mag <= 1.0) return 0.0;
    return 1.0 - std::pow(mag, -2.0 / (1.0 - dm));
}

int column_rank(const Eigen::MatrixXcd& M) {
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i)
        if (sv(i) > 1e-9 * sv(0)) ++rank;
    return rank;
}

RationalAngle resolve_angle(std::complex<double> l1, std::complex<double> l2,
                            const AngleOptions& opts) {
    RationalAngle base = classify_angle(l1, l2, opts.max_denominator, opts.tol);
    if (!opts.hint) return base;

    RationalAngle out;
    out.value = base.value;
    if (opts.hint->irrational) {
        out.kind = RationalAngle::Kind::irrational;
        return out;
    }
    long long r = opts.hint->numerator;
    long long q = opts.hint->denominator;
    if (q < 2 || r <= 0 || r >= q) throw StructuralError("angle hint must satisfy 0 < r < q");
    const long long g = std::gcd(r, q);
    r /= g;
    q /= g;
    // The hint may describe the angle in either rotation direction.
    const double hx = static_cast<double>(r) / static_cast<double>(q);
    if (std::abs(base.value - hx) > 1e-6 && std::abs(base.value - (1.0 - hx)) > 1e-6)
        throw AssumptionError("angle hint is inconsistent with the eigenvalue pair");
    out.kind = RationalAngle::Kind::rational;
    out.numerator = r;
    out.denominator = q;
    out.value = hx;
    return out;
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(12);
    os << v;
    return os.str();
}

} // namespace

double modified_dirichlet(const RationalAngle& angle) {
    switch (angle.kind) {
        case RationalAngle::Kind::irrational:
            return 0.0;
        case RationalAngle::Kind::rational: {
            if (angle.denominator < 2 || angle.numerator <= 0 ||
                angle.numerator >= angle.denominator ||
                std::gcd(angle.numerator, angle.denominator) != 1)
                throw StructuralError("rational angle must be an irreducible r/q with 0 < r < q");
            return 1.0 / static_cast<double>(angle.denominator);
        }
        case RationalAngle::Kind::undetermined:
            break;
    }
    throw AssumptionError(
        "angle is undetermined: supply an angle hint or accept the bounding interval");
}

RationalAngle classify_angle(std::complex<double> lambda1, std::complex<double> lambda2,
                             long long max_denominator, double tol) {
    if (max_denominator < 2) throw StructuralError("max_denominator must be at least 2");
    if (!(tol > 0.0)) throw StructuralError("tol must be positive");
    const double m1 = std::abs(lambda1);
    const double m2 = std::abs(lambda2);
    const double scale = std::max(std::max(m1, m2), 1.0);
    if (std::abs(m1 - m2) > kSpectralBand * scale)
        throw StructuralError("classify_angle needs an equal-magnitude pair");
    if (std::abs(lambda1 - lambda2) <= 1e-12 * scale)
        throw AssumptionError("equal eigenvalues: such a pair is never detectable");

    double phi = std::arg(lambda1 / lambda2);
    if (phi < 0.0) phi += 2.0 * std::numbers::pi;
    double x = phi / (2.0 * std::numbers::pi);
    if (x >= 1.0) x -= 1.0;

    RationalAngle angle;
    angle.value = x;
    for (long long q = 2; q <= max_denominator; ++q) {
        const long long r = std::llround(x * static_cast<double>(q));
        if (r <= 0 || r >= q) continue;
        if (std::gcd(r, q) != 1) continue; // reduced form already rejected at a smaller q
        if (std::abs(x - static_cast<double>(r) / static_cast<double>(q)) <= tol) {
            angle.kind = RationalAngle::Kind::rational;
            angle.numerator = r;
            angle.denominator = q;
            return angle;
        }
    }
    angle.kind = RationalAngle::Kind::undetermined;
    angle.min_unexcluded_denominator = max_denominator + 1;
    return angle;
}

CriticalValueResult second_order_critical_value(const PairBlock& block,
                                                const AngleOptions& opts) {
    if (block.C.cols() != 2 || block.C.rows() == 0)
        throw StructuralError("pair block needs an m x 2 observation matrix");
    const int rank = column_rank(block.C);
    if (rank == 0) throw AssumptionError("pair block is not detectable: C block vanishes");

    const double m1 = std::abs(block.lambda1);
    const double m2 = std::abs(block.lambda2);
    const double mag = std::max(m1, m2);

    CriticalValueResult res;
    const bool equal_magnitudes = std::abs(m1 - m2) <= kSpectralBand * std::max(mag, 1.0);
    if (!equal_magnitudes || rank == 2) {
        const double v = nondegenerate_value(mag);
        res.exact = v;
        res.lower = v;
        res.upper = v;
        res.provenance.push_back({v, rules::dominant_eigenvalue});
        return res;
    }

    // Degenerate pair. At or inside the unit circle every branch gives 0.
    if (mag <= 1.0 + kSpectralBand) {
        res.exact = 0.0;
        res.lower = 0.0;
        res.upper = 0.0;
        res.provenance.push_back({0.0, rules::dominant_eigenvalue});
        res.notes = "degenerate pair at or inside the unit circle";
        return res;
    }

    const RationalAngle angle = resolve_angle(block.lambda1, block.lambda2, opts);
    switch (angle.kind) {
        case RationalAngle::Kind::rational: {
            const double v = degenerate_value(mag, modified_dirichlet(angle));
            res.exact = v;
            res.lower = v;
            res.upper = v;
            res.provenance.push_back({v, rules::degenerate_pair_rational});
            res.notes = "degenerate pair, rational angle " + std::to_string(angle.numerator) +
                        "/" + std::to_string(angle.denominator) + " (modified Dirichlet value " +
                        format_double(modified_dirichlet(angle)) + ")";
            return res;
        }
        case RationalAngle::Kind::irrational: {
            const double v = degenerate_value(mag, 0.0);
            res.exact = v;
            res.lower = v;
            res.upper = v;
            res.provenance.push_back({v, rules::degenerate_pair_irrational});
            res.notes = "degenerate pair, declared irrational angle";
            return res;
        }
        case RationalAngle::Kind::undetermined: {
            const long long qs = angle.min_unexcluded_denominator;
            res.lower = nondegenerate_value(mag);
            res.upper = degenerate_value(mag, 1.0 / static_cast<double>(qs));
            res.provenance.push_back({res.lower, rules::dominant_eigenvalue});
            res.provenance.push_back({*res.upper, rules::degenerate_pair_undetermined});
            res.notes = "degenerate pair with undetermined angle: no rational with denominator <= " +
                        std::to_string(qs - 1) + " matches; upper bound uses the smallest "
                        "unexcluded denominator q* = " + std::to_string(qs);
            return res;
        }
    }
    throw StructuralError("unreachable angle kind");
}

CriticalValueResult critical_value(const LinearSystem& sys, const AngleOptions& opts) {
    const ValidationReport vr = validate(sys);
    if (!vr.admissible()) {
        std::string msg = "system fails validation:";
        for (const auto& m : vr.messages) msg += " " + m + ";";
        throw AssumptionError(msg);
    }

    const SpectralForm sf = diagonalize(sys);
    const DegeneracyReport rep = equi_blocks(sf, kSpectralBand);

    AngleOptions eff = opts;
    if (!eff.hint) eff.hint = sys.angle_hint;

    // Critically stable blocks enter the formulas at unit magnitude, so the
    // dispatch never produces a spurious epsilon above zero for them.
    const auto eff_mag = [](const EquiBlock& b) {
        return b.stability == StabilityClass::critically_stable ? 1.0 : b.magnitude;
    };

    std::vector<const EquiBlock*> live;
    bool has_stable = false;
    bool has_critical = false;
    for (const auto& b : rep.blocks) {
        if (b.stability == StabilityClass::stable) {
            has_stable = true;
        } else {
            live.push_back(&b);
            has_critical = has_critical || b.stability == StabilityClass::critically_stable;
        }
    }

    CriticalValueResult res;
    std::string exclusion_note;
    if (has_stable) exclusion_note += "stable equi-blocks excluded from the dispatch";
    if (has_critical) {
        if (!exclusion_note.empty()) exclusion_note += "; ";
        exclusion_note += "critically stable eigenvalues enter at unit magnitude";
    }

    if (live.empty()) {
        res.exact = 0.0;
        res.lower = 0.0;
        res.upper = 0.0;
        res.provenance.push_back({0.0, rules::dominant_eigenvalue});
        res.notes = "all eigenvalues strictly stable";
        return res;
    }

    const EquiBlock* dominant = live.front(); // sorted by magnitude already
    const double lam_star = eff_mag(*dominant);
    const double spectral_bound = nondegenerate_value(lam_star);

    std::vector<const EquiBlock*> degenerates;
    for (const auto* b : live)
        if (b->degenerate) degenerates.push_back(b);

    if (degenerates.empty()) {
        res.exact = spectral_bound;
        res.lower = spectral_bound;
        res.upper = spectral_bound;
        res.provenance.push_back({spectral_bound, rules::dominant_eigenvalue});
        res.notes = exclusion_note;
        return res;
    }

    // Per-block lower bounds; a degenerate pair may carry an exact value.
    struct BlockContribution {
        const EquiBlock* block;
        double lower;
        std::optional<double> exact;
        std::optional<double> upper;
        std::string rule;
        std::string note;
    };
    std::vector<BlockContribution> contribs;
    bool has_deep_degenerate = false;

    for (const auto* b : live) {
        BlockContribution c{b, 0.0, std::nullopt, std::nullopt, rules::block_lower_bound, ""};
        if (!b->degenerate) {
            c.lower = nondegenerate_value(eff_mag(*b));
            c.exact = c.lower;
        } else if (b->stability == StabilityClass::critically_stable) {
            c.lower = 0.0;
            c.exact = 0.0;
        } else if (b->dim() == 2) {
            PairBlock pair{sf.eigenvalues(b->indices[0]), sf.eigenvalues(b->indices[1]),
                           b->C_block};
            const CriticalValueResult pr = second_order_critical_value(pair, eff);
            c.lower = pr.lower;
            c.exact = pr.exact;
            c.upper = pr.upper;
            c.rule = pr.provenance.empty() ? rules::block_lower_bound
                                           : pr.provenance.back().rule;
            c.note = pr.notes;
        } else {
            // Degenerate block of dimension >= 3: best 1- and 2-dimensional
            // sub-blocks. Singletons give the spectral-radius value; rank-1
            // pairs get the full pair analysis.
            has_deep_degenerate = true;
            double best = nondegenerate_value(b->magnitude);
            std::string best_note;
            for (std::size_t a = 0; a < b->indices.size(); ++a) {
                for (std::size_t d = a + 1; d < b->indices.size(); ++d) {
                    Eigen::MatrixXcd Csub(b->C_block.rows(), 2);
                    Csub.col(0) = b->C_block.col(static_cast<Eigen::Index>(a));
                    Csub.col(1) = b->C_block.col(static_cast<Eigen::Index>(d));
                    if (column_rank(Csub) != 1) continue;
                    PairBlock pair{sf.eigenvalues(b->indices[a]), sf.eigenvalues(b->indices[d]),
                                   Csub};
                    const CriticalValueResult pr = second_order_critical_value(pair, eff);
                    if (pr.lower > best) {
                        best = pr.lower;
                        best_note = pr.notes;
                    }
                }
            }
            c.lower = best;
            c.note = best_note;
        }
        contribs.push_back(std::move(c));
    }

    // Exactness per the dimension-2 rule: a single degenerate block that
    // carries the dominant magnitude, every other live block non-degenerate
    // with a smaller value, and a settled pair angle.
    const bool single_pair_degenerate =
        degenerates.size() == 1 && !has_deep_degenerate && degenerates.front()->dim() == 2;
    const bool degenerate_dominant =
        single_pair_degenerate && degenerates.front() == dominant;

    if (degenerate_dominant) {
        const BlockContribution* pairc = nullptr;
        bool others_smaller = true;
        double others_max = 0.0;
        for (const auto& c : contribs) {
            if (c.block == degenerates.front()) {
                pairc = &c;
            } else {
                others_max = std::max(others_max, c.lower);
            }
        }
        const double pair_top = pairc->upper ? *pairc->upper
                                             : (pairc->exact ? *pairc->exact : pairc->lower);
        others_smaller = others_max <= pair_top;
        if (others_smaller && pairc->exact) {
            res.exact = *pairc->exact;
            res.lower = *pairc->exact;
            res.upper = *pairc->exact;
            res.provenance.push_back({*pairc->exact, pairc->rule});
            res.notes = pairc->note;
            if (!exclusion_note.empty()) res.notes += "; " + exclusion_note;
            return res;
        }
        if (others_smaller && pairc->upper) {
            // Undetermined angle on the dominant pair: its enclosure carries
            // over to the whole system.
            res.lower = std::max({pairc->lower, others_max, spectral_bound});
            res.upper = *pairc->upper;
            res.provenance.push_back({res.lower, rules::dominant_eigenvalue});
            res.provenance.push_back({*res.upper, rules::degenerate_pair_undetermined});
            res.notes = pairc->note;
            if (!exclusion_note.empty()) res.notes += "; " + exclusion_note;
            return res;
        }
    }

    // Interval: the block values and the spectral-radius bound only bound
    // the critical value from below.
    res.lower = spectral_bound;
    res.provenance.push_back({spectral_bound, rules::dominant_eigenvalue});
    for (const auto& c : contribs) {
        res.lower = std::max(res.lower, c.lower);
        if (c.block->degenerate)
            res.provenance.push_back({c.lower, c.rule});
    }
    res.upper = std::nullopt;
    std::string why;
    if (has_deep_degenerate)
        why = "no exact value available for degenerate equi-blocks of dimension >= 3";
    else
        why = "no exact composition rule for this degenerate configuration";
    res.notes = why + "; reporting the best block lower bound";
    if (!exclusion_note.empty()) res.notes += "; " + exclusion_note;
    return res;
}

} // namespace erasurekf
