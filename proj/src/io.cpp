#include "gmlab/io.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <utility>
#include <vector>

namespace gmlab::io {

namespace {

std::string trimmed(const std::string& s) {
    std::size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return s.substr(b, e - b);
}

Eigen::MatrixXd read_matrix_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::vector<std::vector<double>> rows;
    std::string line;
    long line_number = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (trimmed(line).empty()) continue;
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        while (std::getline(cells, cell, ',')) {
            const std::string token = trimmed(cell);
            try {
                std::size_t used = 0;
                const double value = std::stod(token, &used);
                if (used != token.size()) {
                    throw std::invalid_argument(token);
                }
                row.push_back(value);
            } catch (const std::exception&) {
                throw IoError("malformed numeric cell '" + token + "' in " + path,
                              line_number);
            }
        }
        if (row.empty()) {
            throw IoError("empty row in " + path, line_number);
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw IoError("inconsistent column count in " + path, line_number);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw IoError("no data rows in " + path);
    }
    Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()),
                      static_cast<Eigen::Index>(rows.front().size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
        for (Eigen::Index c = 0; c < m.cols(); ++c)
            m(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
    return m;
}

bool ends_with(const std::string& s, const std::string& suffix) {
    return s.size() >= suffix.size() &&
           s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

std::string format_double(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

Json report_to_json(const ComparisonReport& report) {
    Json j;
    j["c"] = to_json(report.c);
    j["cov_term"] = report.cov_term;
    j["quad_var"] = report.quad_var;
    j["alpha_star"] = report.alpha_star;
    j["var_ols"] = report.var_ols;
    j["var_alpha_star"] = report.var_alpha_star;
    j["improvement"] = report.improvement;
    j["note"] = report.note;
    if (report.mc_confirmation) {
        j["mc_confirmation"] = to_json(*report.mc_confirmation);
    }
    return j;
}

MonteCarloSummary summary_from_json(const Json& j) {
    MonteCarloSummary s;
    s.estimate = j.at("estimate").get<double>();
    s.std_error = j.at("std_error").get<double>();
    s.reps = j.at("reps").get<std::int64_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    return s;
}

ComparisonReport report_from_json(const Json& j) {
    ComparisonReport r;
    r.c = vector_from_json(j.at("c"));
    r.cov_term = j.at("cov_term").get<double>();
    r.quad_var = j.at("quad_var").get<double>();
    r.alpha_star = j.at("alpha_star").get<double>();
    r.var_ols = j.at("var_ols").get<double>();
    r.var_alpha_star = j.at("var_alpha_star").get<double>();
    r.improvement = j.at("improvement").get<double>();
    r.note = j.at("note").get<std::string>();
    if (j.contains("mc_confirmation")) {
        const Json& m = j.at("mc_confirmation");
        McConfirmation conf;
        conf.var_ols = summary_from_json(m.at("var_ols"));
        conf.var_alpha_star = summary_from_json(m.at("var_alpha_star"));
        conf.within_tolerance = m.at("within_tolerance").get<bool>();
        r.mc_confirmation = conf;
    }
    return r;
}

}  // namespace

DesignMatrix read_design(const std::string& path) {
    if (ends_with(path, ".csv")) {
        return DesignMatrix(read_matrix_csv(path));
    }
    const Json j = parse_json(read_text(path), path);
    try {
        if (j.is_object()) {
            return DesignMatrix(matrix_from_json(j.at("design")));
        }
        return DesignMatrix(matrix_from_json(j));
    } catch (const Json::exception& e) {
        throw IoError("bad design in " + path + ": " + e.what());
    }
}

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path);
    }
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) {
        throw IoError("cannot open " + path + " for writing");
    }
    out << text;
    if (!out) {
        throw IoError("failed writing " + path);
    }
}

Json to_json(const Eigen::MatrixXd& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        Json row = Json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(std::move(row));
    }
    return rows;
}

Json to_json(const Eigen::VectorXd& v) {
    Json arr = Json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
    return arr;
}

Json to_json(const SkewedTwoPoint& marginal) {
    Json j;
    j["variance"] = marginal.variance;
    j["skew_weight"] = marginal.skew_weight;
    return j;
}

Json to_json(const FiniteSupportDistribution& dist) {
    Json atoms = Json::array();
    for (Eigen::Index i = 0; i < dist.size(); ++i) {
        atoms.push_back(to_json(Eigen::VectorXd(dist.support().col(i))));
    }
    Json j;
    j["support"] = std::move(atoms);
    j["weights"] = to_json(dist.weights());
    return j;
}

Json to_json(const MonteCarloSummary& summary) {
    Json j;
    j["estimate"] = summary.estimate;
    j["std_error"] = summary.std_error;
    j["reps"] = summary.reps;
    j["seed"] = summary.seed;
    return j;
}

Json to_json(const McConfirmation& confirmation) {
    Json j;
    j["var_ols"] = to_json(confirmation.var_ols);
    j["var_alpha_star"] = to_json(confirmation.var_alpha_star);
    j["within_tolerance"] = confirmation.within_tolerance;
    return j;
}

Json to_json(const ComparisonReport& report) { return report_to_json(report); }

Json to_json(const QuadraticEstimator& est) {
    Json forms = Json::array();
    for (const auto& h : est.H) forms.push_back(to_json(h));
    Json j;
    j["A"] = to_json(est.A);
    j["H"] = std::move(forms);
    j["alpha"] = est.alpha;
    return j;
}

Json to_json(const CounterexampleCase& found) {
    Json j;
    j["schema_version"] = kSchemaVersion;
    j["design"] = to_json(found.design.matrix());
    j["estimator"] = to_json(found.estimator);
    j["c"] = to_json(found.c);
    if (found.errors) {
        j["errors"] = to_json(*found.errors);
    }
    if (found.error_marginals) {
        Json marginals = Json::array();
        for (const auto& m : *found.error_marginals) marginals.push_back(to_json(m));
        j["error_marginals"] = std::move(marginals);
    }
    j["report"] = report_to_json(found.report);
    return j;
}

Json to_json(const Refutation& refutation) {
    Json j;
    j["probe"] = to_json(refutation.probe);
    j["beta"] = to_json(refutation.beta);
    j["expectation"] = to_json(refutation.expectation);
    j["norm"] = refutation.norm;
    return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
    if (!j.is_array() || j.empty() || !j.front().is_array()) {
        throw IoError("expected a non-empty array of row arrays");
    }
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const Json& row = j.at(static_cast<std::size_t>(r));
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols) {
            throw IoError("ragged matrix row " + std::to_string(r));
        }
        for (Eigen::Index c = 0; c < cols; ++c) {
            m(r, c) = row.at(static_cast<std::size_t>(c)).get<double>();
        }
    }
    return m;
}

Eigen::VectorXd vector_from_json(const Json& j) {
    if (!j.is_array()) {
        throw IoError("expected a numeric array");
    }
    Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        v[i] = j.at(static_cast<std::size_t>(i)).get<double>();
    }
    return v;
}

QuadraticEstimator estimator_from_json(const Json& j) {
    try {
        QuadraticEstimator est;
        est.A = matrix_from_json(j.at("A"));
        for (const Json& h : j.at("H")) est.H.push_back(matrix_from_json(h));
        est.alpha = j.at("alpha").get<double>();
        return est;
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad estimator payload: ") + e.what());
    }
}

FiniteSupportDistribution distribution_from_json(const Json& j) {
    try {
        const Json& atoms = j.at("support");
        if (!atoms.is_array() || atoms.empty()) {
            throw IoError("support must be a non-empty atom list");
        }
        const Eigen::Index size = static_cast<Eigen::Index>(atoms.size());
        const Eigen::Index n = static_cast<Eigen::Index>(atoms.front().size());
        Eigen::MatrixXd support(n, size);
        for (Eigen::Index i = 0; i < size; ++i) {
            support.col(i) = vector_from_json(atoms.at(static_cast<std::size_t>(i)));
        }
        return FiniteSupportDistribution(support, vector_from_json(j.at("weights")));
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad distribution payload: ") + e.what());
    }
}

CounterexampleCase case_from_json(const Json& j) {
    try {
        DesignMatrix design(matrix_from_json(j.at("design")));
        QuadraticEstimator stored = estimator_from_json(j.at("estimator"));
        QuadraticEstimator rebuilt = make_perturbed_ols(design, stored.H, stored.alpha);
        if ((rebuilt.A - stored.A).cwiseAbs().maxCoeff() > 1e-9) {
            throw IoError("stored estimator map disagrees with OLS for the stored design");
        }
        CounterexampleCase found{std::move(design), std::move(rebuilt),
                                 vector_from_json(j.at("c")), std::nullopt, std::nullopt,
                                 report_from_json(j.at("report"))};
        if (j.contains("errors")) {
            found.errors = distribution_from_json(j.at("errors"));
        }
        if (j.contains("error_marginals")) {
            std::vector<SkewedTwoPoint> marginals;
            for (const Json& m : j.at("error_marginals")) {
                marginals.push_back(SkewedTwoPoint{m.at("variance").get<double>(),
                                                   m.at("skew_weight").get<double>()});
            }
            found.error_marginals = std::move(marginals);
        }
        return found;
    } catch (const Json::exception& e) {
        throw IoError(std::string("bad case payload: ") + e.what());
    }
}

CounterexampleCase read_case(const std::string& path) {
    Json j = parse_json(read_text(path), path);
    // Accept a whole CLI envelope so `counterexample --out f` feeds
    // `simulate f` directly.
    if (j.is_object() && j.contains("case")) {
        j = j.at("case");
    }
    return case_from_json(j);
}

Json parse_json(const std::string& text, const std::string& origin) {
    try {
        return Json::parse(text);
    } catch (const Json::parse_error& e) {
        throw IoError("invalid JSON in " + origin + ": " + e.what());
    }
}

std::string to_table(const ComparisonReport& report) {
    std::ostringstream out;
    const auto line = [&](const std::string& name, const std::string& value) {
        out << name;
        for (std::size_t pad = name.size(); pad < 18; ++pad) out << ' ';
        out << value << '\n';
    };
    std::ostringstream cdir;
    for (Eigen::Index i = 0; i < report.c.size(); ++i) {
        cdir << (i ? " " : "") << format_double(report.c[i]);
    }
    line("c", cdir.str());
    line("var_ols", format_double(report.var_ols));
    line("cov_term", format_double(report.cov_term));
    line("quad_var", format_double(report.quad_var));
    line("alpha_star", format_double(report.alpha_star));
    line("var_alpha_star", format_double(report.var_alpha_star));
    line("improvement", format_double(report.improvement));
    if (!report.note.empty()) {
        line("note", report.note);
    }
    if (report.mc_confirmation) {
        const McConfirmation& mc = *report.mc_confirmation;
        line("mc_var_ols", format_double(mc.var_ols.estimate) + " (se " +
                               format_double(mc.var_ols.std_error) + ")");
        line("mc_var_alpha", format_double(mc.var_alpha_star.estimate) + " (se " +
                                 format_double(mc.var_alpha_star.std_error) + ")");
        line("mc_within_4se", mc.within_tolerance ? "yes" : "no");
    }
    return out.str();
}

std::string to_table(const Refutation& refutation) {
    std::ostringstream out;
    out << "refuted: expectation misses beta by " << format_double(refutation.norm)
        << " (max norm)\n";
    out << "beta:";
    for (Eigen::Index i = 0; i < refutation.beta.size(); ++i) {
        out << ' ' << format_double(refutation.beta[i]);
    }
    out << "\nexpectation:";
    for (Eigen::Index i = 0; i < refutation.expectation.size(); ++i) {
        out << ' ' << format_double(refutation.expectation[i]);
    }
    out << "\nprobe atoms: " << refutation.probe.size() << '\n';
    return out.str();
}

}  // namespace gmlab::io
