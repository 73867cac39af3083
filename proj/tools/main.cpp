// Command line front end: validate / analyze a system file, run seeded
// simulations, and sweep for the empirical critical probability.

#include <erasurekf/critical_value.hpp>
#include <erasurekf/errors.hpp>
#include <erasurekf/simulation.hpp>
#include <erasurekf/spectral.hpp>
#include <erasurekf/system_io.hpp>

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace {

// Exit codes, one per failure category.
enum ExitCode : int {
    kOk = 0,
    kUsage = 2,
    kMissingFile = 3,
    kStructural = 4,
    kAssumption = 5,
    kNumeric = 6,
};

using nlohmann::json;

struct Options {
    std::string input;
    std::string output;
    double p = 0.5;
    bool p_set = false;
    int horizon = 300;
    int trials = 500;
    std::uint64_t seed = 1;
    double resolution = 0.05;
    int moment_order = 1;
    long long max_denominator = 64;
    int jobs = 0;
};

std::string complex_str(std::complex<double> z) {
    std::ostringstream os;
    os.precision(12);
    os << z.real() << (z.imag() < 0 ? " - " : " + ") << std::abs(z.imag()) << "j";
    return os.str();
}

void print_validation(std::ostream& os, const erasurekf::ValidationReport& vr) {
    os << "validation: detectable=" << (vr.detectable ? "yes" : "no")
       << " diagonalizable=" << (vr.diagonalizable ? "yes" : "no")
       << " noise_pd=" << (vr.noise_pd ? "yes" : "no") << "\n";
    for (const auto& l : vr.offending_eigenvalues)
        os << "  offending eigenvalue: " << complex_str(l) << "\n";
    for (const auto& m : vr.messages) os << "  note: " << m << "\n";
}

json validation_json(const erasurekf::ValidationReport& vr) {
    json j;
    j["detectable"] = vr.detectable;
    j["diagonalizable"] = vr.diagonalizable;
    j["noise_pd"] = vr.noise_pd;
    json off = json::array();
    for (const auto& l : vr.offending_eigenvalues) off.push_back({l.real(), l.imag()});
    j["offending_eigenvalues"] = std::move(off);
    j["messages"] = vr.messages;
    return j;
}

json critical_json(const erasurekf::CriticalValueResult& cv) {
    json j;
    if (cv.exact) j["exact"] = *cv.exact;
    j["lower"] = cv.lower;
    if (cv.upper) j["upper"] = *cv.upper;
    json prov = json::array();
    for (const auto& b : cv.provenance) prov.push_back({{"value", b.value}, {"rule", b.rule}});
    j["provenance"] = std::move(prov);
    j["notes"] = cv.notes;
    return j;
}

void print_critical(std::ostream& os, const erasurekf::CriticalValueResult& cv) {
    os.precision(12);
    if (cv.exact) {
        os << "critical value: exact = " << *cv.exact << "\n";
    } else {
        os << "critical value: interval [" << cv.lower << ", ";
        if (cv.upper)
            os << *cv.upper;
        else
            os << "1 (unknown)";
        os << "]\n";
    }
    for (const auto& b : cv.provenance)
        os << "  bound " << b.value << " from " << b.rule << "\n";
    if (!cv.notes.empty()) os << "  notes: " << cv.notes << "\n";
}

erasurekf::LinearSystem load_checked(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw std::system_error(std::make_error_code(std::errc::no_such_file_or_directory),
                                path);
    return erasurekf::load_system(path);
}

int cmd_validate(const Options& opt) {
    const auto sys = load_checked(opt.input);
    const auto vr = erasurekf::validate(sys);
    print_validation(std::cout, vr);
    return vr.admissible() ? kOk : kAssumption;
}

int cmd_analyze(const Options& opt) {
    const auto sys = load_checked(opt.input);
    const auto vr = erasurekf::validate(sys);
    print_validation(std::cout, vr);
    if (!vr.admissible()) {
        std::cout << "system is not admissible; no analysis performed\n";
        return kAssumption;
    }

    const auto sf = erasurekf::diagonalize(sys);
    const auto rep = erasurekf::equi_blocks(sf);
    erasurekf::AngleOptions aopts;
    aopts.max_denominator = opt.max_denominator;
    const auto cv = erasurekf::critical_value(sys, aopts);

    std::cout << "eigenvalues (by descending magnitude):";
    for (Eigen::Index i = 0; i < sf.eigenvalues.size(); ++i)
        std::cout << " " << complex_str(sf.eigenvalues(i));
    std::cout << "\n";
    for (std::size_t b = 0; b < rep.blocks.size(); ++b) {
        const auto& blk = rep.blocks[b];
        std::cout << "equi-block " << b << ": dim " << blk.dim() << ", |lambda| = "
                  << blk.magnitude << ", rank " << blk.c_rank << ", "
                  << (blk.degenerate ? "degenerate" : "non-degenerate") << ", "
                  << erasurekf::to_string(blk.stability) << "\n";
    }
    std::cout << "largest equi-block dimension: " << rep.max_equiblock_dim << "\n";
    std::cout << "system degenerate: " << (rep.system_degenerate ? "yes" : "no") << "\n";
    for (const auto& m : rep.messages) std::cout << "  note: " << m << "\n";
    print_critical(std::cout, cv);

    if (!opt.output.empty()) {
        std::ifstream in(opt.input);
        json doc = json::parse(in);
        json results;
        results["validation"] = validation_json(vr);
        json eigs = json::array();
        for (Eigen::Index i = 0; i < sf.eigenvalues.size(); ++i)
            eigs.push_back({sf.eigenvalues(i).real(), sf.eigenvalues(i).imag()});
        results["eigenvalues"] = std::move(eigs);
        json blocks = json::array();
        for (const auto& blk : rep.blocks) {
            blocks.push_back({{"indices", blk.indices},
                              {"magnitude", blk.magnitude},
                              {"rank", blk.c_rank},
                              {"degenerate", blk.degenerate},
                              {"stability", erasurekf::to_string(blk.stability)}});
        }
        results["equi_blocks"] = std::move(blocks);
        results["max_equiblock_dim"] = rep.max_equiblock_dim;
        results["system_degenerate"] = rep.system_degenerate;
        results["unstable_part_degenerate"] = rep.unstable_part_degenerate;
        results["grouping_messages"] = rep.messages;
        results["critical_value"] = critical_json(cv);
        doc["results"] = std::move(results);
        std::ofstream out(opt.output);
        if (!out) throw erasurekf::StructuralError("cannot open for writing: " + opt.output);
        out << doc.dump(2) << "\n";
        std::cout << "report written to " << opt.output << "\n";
    }
    return kOk;
}

erasurekf::TrialConfig make_config(const Options& opt) {
    erasurekf::TrialConfig cfg;
    cfg.p = opt.p;
    cfg.horizon = opt.horizon;
    cfg.trials = opt.trials;
    cfg.base_seed = opt.seed;
    cfg.moment_order = opt.moment_order;
    return cfg;
}

int cmd_simulate(const Options& opt) {
    const auto sys = load_checked(opt.input);
    const auto vr = erasurekf::validate(sys);
    if (!vr.admissible()) {
        print_validation(std::cerr, vr);
        return kAssumption;
    }
    const auto summary = erasurekf::estimate(sys, make_config(opt), opt.jobs);

    std::ostringstream human;
    human.precision(12);
    human << "p=" << opt.p << " verdict=" << erasurekf::to_string(summary.verdict)
          << " diverged_fraction=" << summary.diverged_fraction
          << " log_slope=" << summary.log_slope << " tail_decay=" << summary.tail_decay << "\n";
    if (!opt.output.empty()) {
        std::ofstream out(opt.output);
        if (!out) throw erasurekf::StructuralError("cannot open for writing: " + opt.output);
        erasurekf::write_summary_csv(out, summary);
        std::cout << human.str() << "summary written to " << opt.output << "\n";
    } else {
        erasurekf::write_summary_csv(std::cout, summary);
        std::cerr << human.str();
    }
    return kOk;
}

int cmd_sweep(const Options& opt) {
    const auto sys = load_checked(opt.input);
    const auto vr = erasurekf::validate(sys);
    if (!vr.admissible()) {
        print_validation(std::cerr, vr);
        return kAssumption;
    }
    auto sweep = erasurekf::empirical_pc(sys, opt.resolution, make_config(opt), opt.jobs);

    erasurekf::AngleOptions aopts;
    aopts.max_denominator = opt.max_denominator;
    const auto cv = erasurekf::critical_value(sys, aopts);
    if (cv.exact) sweep.analytic_pc = *cv.exact;

    std::ostringstream human;
    human.precision(12);
    human << "estimated_pc=" << sweep.estimated_pc << " bracket=[" << sweep.bracket.first
          << ", " << sweep.bracket.second << "]";
    if (cv.exact)
        human << " analytic_pc=" << *cv.exact;
    else
        human << " analytic_pc_lower=" << cv.lower;
    human << "\n";
    for (const auto& a : sweep.anomalies) human << "anomaly: " << a << "\n";

    if (!opt.output.empty()) {
        std::ofstream out(opt.output);
        if (!out) throw erasurekf::StructuralError("cannot open for writing: " + opt.output);
        erasurekf::write_sweep_csv(out, sweep);
        std::cout << human.str() << "sweep written to " << opt.output << "\n";
    } else {
        erasurekf::write_sweep_csv(std::cout, sweep);
        std::cerr << human.str();
    }
    return kOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical arrival probability analysis for Kalman filtering over erasure "
                 "channels"};
    app.require_subcommand(1);

    Options opt;
    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--input", opt.input, "system spec file (JSON)")->required();
        sub->add_option("--output", opt.output, "output file path");
    };
    const auto add_budget = [&](CLI::App* sub) {
        sub->add_option("--horizon", opt.horizon, "steps per trial (default 300)");
        sub->add_option("--trials", opt.trials, "Monte Carlo trials (default 500)");
        sub->add_option("--seed", opt.seed, "base seed (default 1)");
        sub->add_option("--moment-order", opt.moment_order,
                        "probe the q-th moment of the trace (default 1)");
        sub->add_option("--jobs", opt.jobs, "worker threads, 0 = all cores");
    };

    CLI::App* validate_cmd = app.add_subcommand("validate", "check the model assumptions");
    add_common(validate_cmd);

    CLI::App* analyze_cmd =
        app.add_subcommand("analyze", "spectral analysis and critical value (no simulation)");
    add_common(analyze_cmd);
    analyze_cmd->add_option("--max-denominator", opt.max_denominator,
                            "largest denominator the angle classifier may accept (default 64)");

    CLI::App* simulate_cmd =
        app.add_subcommand("simulate", "Monte Carlo estimate at a fixed arrival probability");
    add_common(simulate_cmd);
    add_budget(simulate_cmd);
    simulate_cmd->add_option("--p", opt.p, "packet arrival probability")
        ->required()
        ->check(CLI::Range(0.0, 1.0));

    CLI::App* sweep_cmd =
        app.add_subcommand("sweep", "bisection localization of the critical probability");
    add_common(sweep_cmd);
    add_budget(sweep_cmd);
    sweep_cmd->add_option("--resolution", opt.resolution,
                          "final bracket width (default 0.05, minimum 0.005)");
    sweep_cmd->add_option("--max-denominator", opt.max_denominator,
                          "largest denominator the angle classifier may accept (default 64)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return e.get_exit_code() == 0 ? kOk : kUsage;
    }

    try {
        if (app.got_subcommand(validate_cmd)) return cmd_validate(opt);
        if (app.got_subcommand(analyze_cmd)) return cmd_analyze(opt);
        if (app.got_subcommand(simulate_cmd)) return cmd_simulate(opt);
        if (app.got_subcommand(sweep_cmd)) return cmd_sweep(opt);
        return kUsage;
    } catch (const std::system_error&) {
        std::cerr << "error: no such file: " << opt.input << "\n";
        return kMissingFile;
    } catch (const erasurekf::ParseError& e) {
        std::cerr << "parse error: " << e.what() << "\n";
        return kStructural;
    } catch (const erasurekf::StructuralError& e) {
        std::cerr << "structural error: " << e.what() << "\n";
        return kStructural;
    } catch (const erasurekf::AssumptionError& e) {
        std::cerr << "assumption failure: " << e.what() << "\n";
        return kAssumption;
    } catch (const erasurekf::NumericError& e) {
        std::cerr << "numeric failure: " << e.what() << "\n";
        return kNumeric;
    }
}
