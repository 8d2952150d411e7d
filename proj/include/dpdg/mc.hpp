#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace dpdg {

enum class McTest { rao_tau, mdpde_beta };

std::string to_string(McTest t);

struct MCConfig {
    McTest test = McTest::mdpde_beta;
    std::vector<double> param_grid = {0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7};
    std::vector<int> n_list = {20, 40};
    std::vector<double> eps_list = {0.0, 0.05, 0.10, 0.20};
    double theta0_null = 2.0;
    double theta_true = 2.0;  // 2 for size runs, 1 for power runs
    int reps = 10000;
    double alpha = 0.05;
    std::uint64_t master_seed = 20240901;

    void validate() const;
};

struct MCRow {
    McTest test;
    double param;
    int n;
    double eps;
    double rate;
    double mc_se;
    int reps;
    int failures;
};

struct MCResult {
    std::vector<MCRow> rows;
    void write_csv(std::ostream& os) const;
};

struct RejectionRate {
    double rate;
    double mc_se;
    int failures;
};

/// Monte Carlo rejection rate of one test over `reps` replications of n
/// mixture draws.  Replication r of a cell always uses the stream derived
/// from hash(method, param, n, eps, theta_true, theta0, r), so results are
/// deterministic and independent of worker count and of any other cells.
RejectionRate estimate_rejection_rate(McTest test, double param, int n, double eps,
                                      double theta_true, double theta0_null, int reps,
                                      double alpha, std::uint64_t master_seed);

/// Full cross product of (param, n, eps), rows ordered param-major.
MCResult run_grid(const MCConfig& config);

/// One reference cell of the published size/power study.
struct ReferenceCell {
    int table;  // 1 => n=20, 2 => n=40
    McTest method;
    double param;
    const char* label;  // alpha(eps) or pi(eps)
    double eps;
    bool is_power;
    double rate;
};

const std::vector<ReferenceCell>& reference_cells();

struct ComputedCell {
    ReferenceCell ref;
    double rate;
    double mc_se;
    int failures;
};

/// Writes table1.csv / table2.csv (columns method,param,label,rate) plus
/// diff_report.md comparing against the embedded reference values; returns
/// the computed cells.
std::vector<ComputedCell> reproduce_tables(const std::string& out_dir, int reps = 10000,
                                           std::uint64_t master_seed = 20240901);

}  // namespace dpdg
