#include <CLI11.hpp>

#include <cstdint>
#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include "gmlab/counterexample.hpp"
#include "gmlab/hspace.hpp"
#include "gmlab/io.hpp"
#include "gmlab/refuter.hpp"
#include "gmlab/regress.hpp"
#include "gmlab/rng.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNotFound = 3;
constexpr int kExitRefutation = 4;

std::uint64_t seed_or_default(const CLI::Option* seed_opt, std::uint64_t seed_flag) {
    if (seed_opt->count() > 0) return seed_flag;
    if (const char* env = std::getenv("GMLAB_SEED")) {
        try {
            std::size_t used = 0;
            const std::uint64_t parsed = std::stoull(env, &used, 0);
            if (used != std::string(env).size()) throw std::invalid_argument(env);
            return parsed;
        } catch (const std::exception&) {
            throw CLI::ValidationError("GMLAB_SEED", "not a valid 64-bit seed");
        }
    }
    return gmlab::kDefaultSeed;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        gmlab::io::write_text(out_path, text);
    }
}

gmlab::SearchStrategy parse_strategy(const std::string& name) {
    if (name == "rule-i") return gmlab::SearchStrategy::RuleI;
    if (name == "rule-ii") return gmlab::SearchStrategy::RuleII;
    if (name == "tensor") return gmlab::SearchStrategy::Tensor;
    throw CLI::ValidationError("--strategy", "expected rule-i, rule-ii, or tensor");
}

/// A deterministic non-identity covariance shape, so the built-in GLS
/// subject genuinely differs from OLS while remaining unbiased.
Eigen::MatrixXd default_gls_shape(Eigen::Index n) {
    Eigen::MatrixXd sigma(n, n);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < n; ++c)
            sigma(r, c) = std::pow(0.5, std::abs(static_cast<double>(r - c)));
    return sigma;
}

struct Subject {
    gmlab::BlackBoxEstimator estimator;
    std::string note;  // e.g. the hansen-tilde OLS-coincidence remark
};

Subject build_subject(const std::string& spec, const gmlab::DesignMatrix& design) {
    Subject subject;
    if (spec == "builtin:ols") {
        subject.estimator = {[design](const Eigen::VectorXd& y) { return gmlab::ols(design, y); },
                             "ols"};
        return subject;
    }
    if (spec == "builtin:gls") {
        const gmlab::CovarianceSpec cov(1.0, default_gls_shape(design.n()));
        const Eigen::MatrixXd map = gmlab::gls_map(design, cov);
        subject.estimator = {[map](const Eigen::VectorXd& y) { return Eigen::VectorXd(map * y); },
                             "gls"};
        return subject;
    }
    const std::string hansen_prefix = "builtin:hansen-tilde:";
    if (spec.rfind(hansen_prefix, 0) == 0) {
        const std::string args = spec.substr(hansen_prefix.size());
        const std::size_t comma = args.find(',');
        if (comma == std::string::npos) {
            throw CLI::ValidationError("estimator", "expected builtin:hansen-tilde:i,j");
        }
        Eigen::Index i = 0, j = 0;
        try {
            i = std::stol(args.substr(0, comma));
            j = std::stol(args.substr(comma + 1));
        } catch (const std::exception&) {
            throw CLI::ValidationError("estimator", "row indices must be integers");
        }
        subject.estimator =
            gmlab::hansen_tilde(design, i, j, Eigen::VectorXd::Ones(design.k()));

        // Flag the cases where the correction provably vanishes.
        gmlab::CounterRng rng(gmlab::kDefaultSeed, 0x636f696e);  // "coin"
        double worst = 0.0;
        for (int trial = 0; trial < 20; ++trial) {
            const Eigen::VectorXd y = rng.uniform_vector(design.n(), -3.0, 3.0);
            const Eigen::VectorXd diff = subject.estimator.eval(y) - gmlab::ols(design, y);
            worst = std::max(worst, diff.cwiseAbs().maxCoeff());
        }
        if (worst <= 1e-12) {
            subject.note = "coincides with OLS";
        }
        return subject;
    }
    if (spec.rfind("file:", 0) == 0) {
        const std::string path = spec.substr(5);
        const gmlab::QuadraticEstimator est = gmlab::io::estimator_from_json(
            gmlab::io::parse_json(gmlab::io::read_text(path), path));
        subject.estimator = {[est](const Eigen::VectorXd& y) { return est.estimate(y); },
                             "file:" + path};
        return subject;
    }
    throw CLI::ValidationError(
        "estimator", "expected builtin:ols, builtin:gls, builtin:hansen-tilde:i,j, or file:PATH");
}

int run_analyze(const std::string& design_path, const std::string& format,
                const std::string& out_path) {
    const gmlab::DesignMatrix design = gmlab::io::read_design(design_path);
    const gmlab::HBasis space = gmlab::solve_h_space(design);
    if (format == "table") {
        std::ostringstream out;
        out << "n                 " << design.n() << '\n'
            << "k                 " << design.k() << '\n'
            << "h_dim             " << space.dim() << '\n'
            << "constraint_rank   " << space.constraint_rank() << '\n'
            << "location_model    " << (design.is_location_model() ? "yes" : "no") << '\n';
        emit(out.str(), out_path);
    } else {
        gmlab::Json j;
        j["schema_version"] = gmlab::io::kSchemaVersion;
        j["command"] = "analyze";
        j["config"] = {{"design", design_path}};
        j["n"] = design.n();
        j["k"] = design.k();
        j["h_dim"] = space.dim();
        j["constraint_rank"] = space.constraint_rank();
        j["location_model"] = design.is_location_model();
        emit(j.dump(2) + "\n", out_path);
    }
    return kExitOk;
}

int run_counterexample(const std::string& design_path, const std::string& builtin,
                       Eigen::Index ex1_n, double gamma, double skew,
                       const std::string& strategy, int budget, std::uint64_t seed,
                       const std::string& format, const std::string& out_path) {
    std::optional<gmlab::CounterexampleCase> found;
    gmlab::Json config;  // the inputs that determine the result, for reproducible reruns
    if (builtin == "ex1") {
        found = gmlab::example_ex1(ex1_n, gamma);
        config = {{"builtin", "ex1"}, {"n", ex1_n}, {"gamma", gamma}};
    } else if (builtin == "ex2") {
        found = gmlab::example_ex2(skew == 0.0 ? gmlab::SkewedTwoPoint::symmetric()
                                               : gmlab::SkewedTwoPoint::with_third_moment(skew));
        config = {{"builtin", "ex2"}, {"skew", skew}};
    } else if (!builtin.empty()) {
        throw CLI::ValidationError("--builtin", "expected ex1 or ex2");
    } else {
        if (design_path.empty()) {
            throw CLI::ValidationError("--design", "required unless --builtin is given");
        }
        const gmlab::DesignMatrix design = gmlab::io::read_design(design_path);
        found = gmlab::search_counterexample(design, parse_strategy(strategy), budget, seed,
                                             skew);
        config = {{"design", design_path},
                  {"strategy", strategy},
                  {"budget", budget},
                  {"seed", seed},
                  {"skew", skew}};
    }

    const bool improved = found && found->report.improvement > 0.0;
    if (format == "table") {
        std::ostringstream out;
        out << "found             " << (found ? "yes" : "no") << '\n';
        if (found) out << gmlab::io::to_table(found->report);
        emit(out.str(), out_path);
    } else {
        gmlab::Json j;
        j["schema_version"] = gmlab::io::kSchemaVersion;
        j["command"] = "counterexample";
        j["config"] = config;
        j["found"] = static_cast<bool>(found);
        if (found) {
            j["case"] = gmlab::io::to_json(*found);
        }
        emit(j.dump(2) + "\n", out_path);
    }
    return improved ? kExitOk : kExitNotFound;
}

int run_refute(const std::string& estimator_spec, const std::string& design_path, int budget,
               std::uint64_t seed, const std::string& format, const std::string& out_path) {
    const gmlab::DesignMatrix design = gmlab::io::read_design(design_path);
    const Subject subject = build_subject(estimator_spec, design);
    const std::optional<gmlab::Refutation> refutation =
        gmlab::refute_f2_unbiasedness(subject.estimator, design, budget, seed);

    if (format == "table") {
        std::ostringstream out;
        out << "subject           " << subject.estimator.label << '\n'
            << "verdict           " << (refutation ? "refutation" : "pass") << '\n';
        if (!subject.note.empty()) out << "note              " << subject.note << '\n';
        if (refutation) out << gmlab::io::to_table(*refutation);
        emit(out.str(), out_path);
    } else {
        gmlab::Json j;
        j["schema_version"] = gmlab::io::kSchemaVersion;
        j["command"] = "refute";
        j["config"] = {{"estimator", estimator_spec},
                       {"design", design_path},
                       {"budget", budget},
                       {"seed", seed}};
        j["subject"] = subject.estimator.label;
        j["budget"] = budget;
        j["seed"] = seed;
        j["verdict"] = refutation ? "refutation" : "pass";
        if (!subject.note.empty()) j["note"] = subject.note;
        if (refutation) j["refutation"] = gmlab::io::to_json(*refutation);
        emit(j.dump(2) + "\n", out_path);
    }
    return refutation ? kExitRefutation : kExitOk;
}

int run_simulate(const std::string& case_path, std::int64_t reps, std::uint64_t seed,
                 const std::string& format, const std::string& out_path) {
    gmlab::CounterexampleCase found = gmlab::io::read_case(case_path);
    gmlab::confirm_by_simulation(found, reps, seed);
    if (format == "table") {
        emit(gmlab::io::to_table(found.report), out_path);
    } else {
        gmlab::Json j;
        j["schema_version"] = gmlab::io::kSchemaVersion;
        j["command"] = "simulate";
        j["config"] = {{"case", case_path}, {"reps", reps}, {"seed", seed}};
        j["case"] = gmlab::io::to_json(found);
        emit(j.dump(2) + "\n", out_path);
    }
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Linear-model estimator lab: quadratic perturbations of OLS, exact variance "
                 "comparisons, and unbiasedness refutation by discrete probes"};
    app.require_subcommand(1);

    std::string design_path, out_path, format = "json", builtin, strategy = "rule-ii";
    std::string estimator_spec, case_path;
    std::uint64_t seed_flag = gmlab::kDefaultSeed;
    std::int64_t reps = 100000;
    int budget = 200;
    Eigen::Index ex1_n = 3;
    double gamma = 1.5, skew = 1.5;

    CLI::App* analyze = app.add_subcommand(
        "analyze", "Report the admissible quadratic-perturbation space of a design");
    analyze->add_option("--design", design_path, "design matrix file (.csv or .json)")
        ->required();
    analyze->add_option("--format", format, "json or table");
    analyze->add_option("--out", out_path, "write output to a file instead of stdout");

    CLI::App* counterexample = app.add_subcommand(
        "counterexample", "Build or search an estimator that beats OLS in variance");
    counterexample->add_option("--design", design_path, "design matrix file");
    counterexample->add_option("--builtin", builtin, "ex1 or ex2");
    counterexample->add_option("--n", ex1_n, "size of the ex1 location design");
    counterexample->add_option("--gamma", gamma, "third moment of the ex1 skewed coordinate");
    counterexample->add_option("--skew", skew,
                               "third moment of generated marginals; 0 forces symmetric");
    counterexample->add_option("--strategy", strategy, "rule-i, rule-ii, or tensor");
    counterexample->add_option("--budget", budget, "search candidates");
    const CLI::Option* ce_seed = counterexample->add_option("--seed", seed_flag, "search seed");
    counterexample->add_option("--format", format, "json or table");
    counterexample->add_option("--out", out_path, "write output to a file instead of stdout");

    CLI::App* refute = app.add_subcommand(
        "refute", "Probe an estimator's unbiasedness over broad error classes");
    refute
        ->add_option("estimator", estimator_spec,
                     "builtin:ols | builtin:gls | builtin:hansen-tilde:i,j | file:PATH")
        ->required();
    refute->add_option("--design", design_path, "design matrix file")->required();
    refute->add_option("--budget", budget, "probe budget");
    const CLI::Option* rf_seed = refute->add_option("--seed", seed_flag, "probe seed");
    refute->add_option("--format", format, "json or table");
    refute->add_option("--out", out_path, "write output to a file instead of stdout");

    CLI::App* simulate = app.add_subcommand(
        "simulate", "Cross-check a saved comparison report by Monte Carlo");
    simulate->add_option("case", case_path, "saved counterexample case JSON")->required();
    simulate->add_option("--reps", reps, "replications (>= 2)");
    const CLI::Option* sim_seed = simulate->add_option("--seed", seed_flag, "simulation seed");
    simulate->add_option("--format", format, "json or table");
    simulate->add_option("--out", out_path, "write output to a file instead of stdout");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (format != "json" && format != "table") {
            std::cerr << "error: --format must be json or table\n";
            return kExitUsage;
        }
        if (analyze->parsed()) {
            return run_analyze(design_path, format, out_path);
        }
        if (counterexample->parsed()) {
            return run_counterexample(design_path, builtin, ex1_n, gamma, skew, strategy,
                                      budget, seed_or_default(ce_seed, seed_flag), format,
                                      out_path);
        }
        if (refute->parsed()) {
            return run_refute(estimator_spec, design_path, budget,
                              seed_or_default(rf_seed, seed_flag), format, out_path);
        }
        if (simulate->parsed()) {
            if (reps < 2) {
                std::cerr << "error: --reps must be at least 2\n";
                return kExitUsage;
            }
            return run_simulate(case_path, reps, seed_or_default(sim_seed, seed_flag), format,
                                out_path);
        }
        std::cerr << "error: no command\n";
        return kExitUsage;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const gmlab::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const gmlab::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
}
