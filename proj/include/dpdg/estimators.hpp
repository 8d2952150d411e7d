#pragma once

#include <optional>

#include "dpdg/model.hpp"

namespace dpdg {

struct FitOptions {
    std::optional<Vector> theta0;  // start; defaults to a moment plug-in
    double tol = 1e-9;
    int max_iter = 200;
};

struct EstimateReport {
    Vector theta_hat;
    double tau = 0.0;
    Vector lambda;  // Lagrange multipliers, empty if unconstrained
    bool converged = false;
    int iterations = 0;
    double score_norm = 0.0;     // ||sum_i psi||_inf at theta_hat
    double kkt_residual = 0.0;   // max(||grad H + G lambda||_inf, ||g||_inf)
    Matrix asym_cov;             // J^-1 K J^-1 / n unconstrained, M / n restricted
    Vector std_errors;
};

/// Unconstrained maximizer of objective_h.  Safeguarded Newton on the score
/// with backtracking on H, golden-section fallback for d = 1, best of a
/// 5-point start multiset (the objective can have local optima for tau > 0).
/// Non-convergence reports the best iterate with converged = false.
EstimateReport fit_mdpdge(const SampleMatrix& sample, const MeanCovModel& model, double tau,
                          const FitOptions& opts = {});

/// Equality-constrained maximizer.  Coordinate-fixing constraints are solved
/// exactly through the reduced problem; general constraints go through a
/// full Newton iteration on the stationarity system
///   grad H + G lambda = 0,  g(theta) = 0.
EstimateReport fit_rmdpdge(const SampleMatrix& sample, const MeanCovModel& model, double tau,
                           const ConstraintSet& constraint, const FitOptions& opts = {});

double kkt_residual(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                    double tau, const ConstraintSet& constraint, const Vector& lambda);

/// Moment plug-in start projected into the domain box.
Vector plug_in_start(const SampleMatrix& sample, const MeanCovModel& model);

}  // namespace dpdg
