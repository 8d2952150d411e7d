#pragma once

#include <optional>
#include <string>

#include "dpdg/model.hpp"

namespace dpdg {

struct TestReport {
    double statistic = 0.0;
    int df = 1;
    double alpha = 0.05;
    double critical_value = 0.0;
    double p_value = 1.0;
    bool reject = false;
    std::optional<double> noncentrality;
    std::string method;

    std::string to_json() const;
};

/// Score test of the simple null theta = theta0:
///   R = (1/n) U^T K_tau(theta0)^-1 U,  U = score_u(theta0),
/// asymptotically chi-square with d degrees of freedom.
TestReport rao_statistic(const SampleMatrix& sample, const MeanCovModel& model,
                         const Vector& theta0, double tau, double alpha);

/// Closed-form fast paths; equal to the generic statistic to 1e-10.
double rao_exponential(const SampleMatrix& sample, double theta0, double tau);
double rao_poisson(const SampleMatrix& sample, double theta0, double tau);

/// Composite-null statistic evaluated at the restricted fit:
///   (1/n) U^T Q [Q^T K Q]^-1 Q^T U at theta_tilde, df = r.
/// The limiting distribution of this statistic is not established; the
/// report is flagged method = "composite-experimental" and p-values use the
/// central chi-square as a convention.
TestReport rao_composite(const SampleMatrix& sample, const MeanCovModel& model,
                         const ConstraintSet& constraint, double tau, double alpha);

/// Parametric-model score test for exponential data (comparison baseline):
///   S = c_beta^-1 (1/n) [ (1/theta0) sum (y_i - theta0) e^(-beta y_i/theta0)
///                          + n beta/(beta+1)^2 ]^2,
///   c_beta = (4 beta^2+1)/(2 beta+1)^3 - beta^2/(beta+1)^4,
/// reducing at beta = 0 to the classical (sqrt(n)(ybar-theta0)/theta0)^2.
TestReport mdpde_rao_exponential(const SampleMatrix& sample, double theta0, double beta,
                                 double alpha);

/// Raw value of the statistic above (no report machinery).
double mdpde_exponential(const SampleMatrix& sample, double theta0, double beta);

/// Noncentral chi-square approximation to the power at a fixed alternative:
/// 1 - F_{chi2_d(delta)}(chi2_{d,alpha}) with delta built from l = sqrt(n)(theta_alt - theta0).
double power_approximation(const MeanCovModel& model, const Vector& theta0,
                           const Vector& theta_alt, double tau, int n, double alpha);

}  // namespace dpdg
