#include "dpdg/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dpdg/csv.hpp"
#include "dpdg/distributions.hpp"
#include "dpdg/estimators.hpp"
#include "dpdg/influence.hpp"
#include "dpdg/mc.hpp"
#include "dpdg/rao.hpp"

namespace dpdg {

namespace {

std::vector<double> parse_double_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    if (out.empty()) throw CLI::ValidationError("expected a comma-separated number list");
    return out;
}

Vector to_vector(const std::vector<double>& v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = v[static_cast<std::size_t>(i)];
    return x;
}

MeanCovModel resolve_model(const std::string& name, int obs_dim) {
    auto mdl = model_by_name(name, obs_dim);
    if (!mdl) throw CLI::ValidationError("unknown model '" + name + "'");
    return *mdl;
}

// Constraint mini-language: comma-separated "fix:i=v" terms, 1-based i.
ConstraintSet parse_constraints(int d, const std::vector<std::string>& specs) {
    std::vector<std::pair<int, double>> fixes;
    for (const auto& spec : specs) {
        std::stringstream ss(spec);
        std::string term;
        while (std::getline(ss, term, ',')) {
            if (term.empty()) continue;
            if (term.rfind("fix:", 0) != 0) {
                throw CLI::ValidationError("constraint term must look like fix:i=v");
            }
            const auto eq = term.find('=', 4);
            if (eq == std::string::npos) {
                throw CLI::ValidationError("constraint term must look like fix:i=v");
            }
            const int idx = std::stoi(term.substr(4, eq - 4));
            const double val = std::stod(term.substr(eq + 1));
            if (idx < 1 || idx > d) throw CLI::ValidationError("constraint index out of range");
            fixes.emplace_back(idx - 1, val);
        }
    }
    if (fixes.empty()) return no_constraint(d);
    return fix_coordinates(d, std::move(fixes));
}

std::string estimate_json(const EstimateReport& rep) {
    nlohmann::json j;
    j["theta_hat"] = std::vector<double>(rep.theta_hat.begin(), rep.theta_hat.end());
    j["tau"] = rep.tau;
    j["lambda"] = std::vector<double>(rep.lambda.begin(), rep.lambda.end());
    j["converged"] = rep.converged;
    j["iterations"] = rep.iterations;
    j["score_norm"] = rep.score_norm;
    j["kkt_residual"] = rep.kkt_residual;
    std::vector<std::vector<double>> cov;
    for (Eigen::Index i = 0; i < rep.asym_cov.rows(); ++i) {
        cov.emplace_back(rep.asym_cov.row(i).begin(), rep.asym_cov.row(i).end());
    }
    j["asym_cov"] = cov;
    j["std_errors"] = std::vector<double>(rep.std_errors.begin(), rep.std_errors.end());
    return j.dump(2);
}

void print_estimate(std::ostream& out, const EstimateReport& rep) {
    out << "theta_hat:";
    for (Eigen::Index i = 0; i < rep.theta_hat.size(); ++i) out << " " << rep.theta_hat[i];
    out << "\n";
    out << "tau: " << rep.tau << "\n";
    if (rep.lambda.size() > 0) {
        out << "lambda:";
        for (Eigen::Index i = 0; i < rep.lambda.size(); ++i) out << " " << rep.lambda[i];
        out << "\n";
    }
    out << "converged: " << (rep.converged ? "yes" : "no")
        << "  iterations: " << rep.iterations << "\n";
    out << "score_norm: " << rep.score_norm << "  kkt_residual: " << rep.kkt_residual << "\n";
    out << "std_errors:";
    for (Eigen::Index i = 0; i < rep.std_errors.size(); ++i) out << " " << rep.std_errors[i];
    out << "\n";
}

void print_test(std::ostream& out, const TestReport& rep) {
    out << "method: " << rep.method << "\n";
    out << "statistic: " << std::setprecision(6) << rep.statistic << "  df: " << rep.df << "\n";
    out << "critical_value(alpha=" << rep.alpha << "): " << rep.critical_value << "\n";
    out << "p_value: " << rep.p_value << "\n";
    out << "reject: " << (rep.reject ? "true" : "false") << "\n";
}

struct SimulateFileConfig {
    MCConfig mc;
    bool has_seed = false;
    bool has_reps = false;
};

SimulateFileConfig parse_simulate_config(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open config " + path);
    SimulateFileConfig cfg;
    std::string line;
    int line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
        };
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw IoError(path + ": expected key = value at line " + std::to_string(line_no));
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "test") {
            if (val == "rao_tau") {
                cfg.mc.test = McTest::rao_tau;
            } else if (val == "mdpde_beta") {
                cfg.mc.test = McTest::mdpde_beta;
            } else {
                throw IoError(path + ": unknown test '" + val + "'");
            }
        } else if (key == "params") {
            cfg.mc.param_grid = parse_double_list(val);
        } else if (key == "n") {
            cfg.mc.n_list.clear();
            for (double x : parse_double_list(val)) cfg.mc.n_list.push_back(static_cast<int>(x));
        } else if (key == "eps") {
            cfg.mc.eps_list = parse_double_list(val);
        } else if (key == "theta0") {
            cfg.mc.theta0_null = std::stod(val);
        } else if (key == "theta_true") {
            cfg.mc.theta_true = std::stod(val);
        } else if (key == "reps") {
            cfg.mc.reps = std::stoi(val);
            cfg.has_reps = true;
        } else if (key == "alpha") {
            cfg.mc.alpha = std::stod(val);
        } else if (key == "seed") {
            cfg.mc.master_seed = std::stoull(val);
            cfg.has_seed = true;
        } else {
            throw IoError(path + ": unknown key '" + key + "' at line " +
                          std::to_string(line_no));
        }
    }
    return cfg;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Robust Gaussian-surrogate estimation and Rao-type testing"};
    app.require_subcommand(1);

    // estimate
    auto* est = app.add_subcommand("estimate", "Fit the (possibly restricted) estimator");
    std::string est_model, est_data;
    double est_tau = 0.0;
    std::vector<std::string> est_constraints;
    bool est_json = false;
    est->add_option("--model", est_model, "Model preset")->required();
    est->add_option("--tau", est_tau, "Tuning parameter");
    est->add_option("--data", est_data, "CSV data file")->required();
    est->add_option("--constraint", est_constraints, "Constraint terms fix:i=v");
    est->add_flag("--json", est_json, "JSON output");

    // test
    auto* tst = app.add_subcommand("test", "Score test of a simple null");
    std::string tst_model, tst_data, tst_null;
    double tst_tau = 0.0, tst_alpha = 0.05, tst_beta = -1.0;
    bool tst_json = false;
    tst->add_option("--model", tst_model, "Model preset")->required();
    tst->add_option("--null", tst_null, "Null parameter value(s), comma-separated")->required();
    tst->add_option("--tau", tst_tau, "Tuning parameter");
    tst->add_option("--alpha", tst_alpha, "Significance level");
    tst->add_option("--data", tst_data, "CSV data file")->required();
    tst->add_option("--mdpde-beta", tst_beta, "Use the exponential-model score test");
    tst->add_flag("--json", tst_json, "JSON output");

    // influence
    auto* infl = app.add_subcommand("influence", "Tabulate influence curves");
    std::string infl_model, infl_theta, infl_tau, infl_grid, infl_out;
    infl->add_option("--model", infl_model, "Model preset")->required();
    infl->add_option("--theta", infl_theta, "Evaluation point, comma-separated")->required();
    infl->add_option("--tau", infl_tau, "Comma-separated tau values")->required();
    infl->add_option("--grid", infl_grid, "Contamination grid LO:HI:N")->required();
    infl->add_option("--out", infl_out, "Output CSV path")->required();

    // simulate
    auto* sim = app.add_subcommand("simulate", "Monte Carlo rejection-rate grid");
    std::string sim_config, sim_out;
    int sim_reps = -1;
    std::uint64_t sim_seed = 0;
    bool sim_seed_set = false;
    sim->add_option("--config", sim_config, "Config file (key = value lines)")->required();
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--reps", sim_reps, "Override replication count");
    sim->add_option("--seed", sim_seed, "Override master seed")
        ->each([&](const std::string&) { sim_seed_set = true; });

    // reproduce-tables
    auto* rep = app.add_subcommand("reproduce-tables", "Reproduce the size/power study");
    std::string rep_out;
    int rep_reps = 10000;
    std::uint64_t rep_seed = 20240901;
    rep->add_option("--out", rep_out, "Output directory")->required();
    rep->add_option("--reps", rep_reps, "Replications per cell");
    rep->add_option("--seed", rep_seed, "Master seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        err << e.what() << "\n" << app.help();
        return 1;
    }

    try {
        if (est->parsed()) {
            const SampleMatrix sample = read_sample_csv_file(est_data);
            const MeanCovModel model = resolve_model(est_model, static_cast<int>(sample.m()));
            const ConstraintSet constraint = parse_constraints(model.d, est_constraints);
            const EstimateReport report =
                constraint.r == 0 ? fit_mdpdge(sample, model, est_tau)
                                  : fit_rmdpdge(sample, model, est_tau, constraint);
            if (est_json) {
                out << estimate_json(report) << "\n";
            } else {
                print_estimate(out, report);
            }
            return 0;
        }
        if (tst->parsed()) {
            const SampleMatrix sample = read_sample_csv_file(tst_data);
            TestReport report;
            if (tst_beta >= 0.0) {
                if (tst_model != "exponential") {
                    err << "--mdpde-beta is only available for --model exponential\n";
                    return 1;
                }
                report = mdpde_rao_exponential(sample, std::stod(tst_null), tst_beta, tst_alpha);
            } else {
                const MeanCovModel model =
                    resolve_model(tst_model, static_cast<int>(sample.m()));
                const Vector theta0 = to_vector(parse_double_list(tst_null));
                if (theta0.size() != model.d) {
                    err << "--null must supply " << model.d << " value(s) for model "
                        << tst_model << "\n";
                    return 1;
                }
                report = rao_statistic(sample, model, theta0, tst_tau, tst_alpha);
            }
            if (tst_json) {
                out << report.to_json() << "\n";
            } else {
                print_test(out, report);
            }
            return 0;
        }
        if (infl->parsed()) {
            const MeanCovModel model = resolve_model(infl_model, 1);
            const Vector theta = to_vector(parse_double_list(infl_theta));
            if (theta.size() != model.d) {
                err << "--theta must supply " << model.d << " value(s)\n";
                return 1;
            }
            const std::vector<double> taus = parse_double_list(infl_tau);
            double lo, hi;
            int npts;
            {
                std::stringstream ss(infl_grid);
                std::string a, b, c;
                if (!std::getline(ss, a, ':') || !std::getline(ss, b, ':') ||
                    !std::getline(ss, c)) {
                    err << "--grid must look like LO:HI:N\n";
                    return 1;
                }
                lo = std::stod(a);
                hi = std::stod(b);
                npts = std::stoi(c);
            }
            if (npts < 1) {
                err << "--grid needs N >= 1 points\n";
                return 1;
            }
            Vector grid(npts);
            for (int i = 0; i < npts; ++i) {
                grid[i] = npts == 1 ? lo : lo + (hi - lo) * i / static_cast<double>(npts - 1);
            }
            const auto curves = influence_curve(model, theta, taus, grid);
            std::ofstream os(infl_out);
            if (!os) throw IoError("cannot open " + infl_out);
            write_influence_csv(os, curves);
            return 0;
        }
        if (sim->parsed()) {
            SimulateFileConfig cfg = parse_simulate_config(sim_config);
            if (sim_reps > 0) cfg.mc.reps = sim_reps;
            if (sim_seed_set) cfg.mc.master_seed = sim_seed;
            const MCResult result = run_grid(cfg.mc);
            std::error_code ec;
            std::filesystem::create_directories(sim_out, ec);
            if (ec) throw IoError("cannot create output directory " + sim_out);
            const std::string path = sim_out + "/mc_result.csv";
            std::ofstream os(path);
            if (!os) throw IoError("cannot open " + path);
            result.write_csv(os);
            out << "wrote " << path << "\n";
            return 0;
        }
        if (rep->parsed()) {
            reproduce_tables(rep_out, rep_reps, rep_seed);
            out << "wrote " << rep_out << "/table1.csv, table2.csv, diff_report.md\n";
            return 0;
        }
    } catch (const CLI::ValidationError& e) {
        err << e.what() << "\n";
        return 1;
    } catch (const DataFormatError& e) {
        err << e.name() << ": " << e.what() << "\n";
        return 1;
    } catch (const IoError& e) {
        err << e.name() << ": " << e.what() << "\n";
        return 3;
    } catch (const Error& e) {
        err << e.name() << ": " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        err << "invalid argument: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace dpdg
