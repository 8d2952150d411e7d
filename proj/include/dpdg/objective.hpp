#pragma once

#include "dpdg/model.hpp"

namespace dpdg {

/// Constants of the tau > 0 objective:
///   a = (tau+1) / (tau * (2*pi)^(m*tau/2)),   b = tau / (1+tau)^(m/2+1).
/// Undefined at tau = 0; the tau = 0 objective uses the limit form instead.
struct DpdConstants {
    double a;
    double b;
    double tau;
    int m;
};

DpdConstants dpd_constants(double tau, int m);

/// Gaussian-based DPD objective, averaged per observation so the value is
/// O(1) in n.
///
///   tau > 0:  a * |Sigma|^(-tau/2) * [ (1/n) sum_i exp(-tau/2 q_i) - b ] - 1/tau
///   tau = 0:  -(1/2) log|Sigma| - (1/(2n)) sum_i q_i
///
/// with q_i the Mahalanobis form of row i.  The two branches differ by a
/// theta-free offset that vanishes smoothly as tau -> 0.
double objective_h(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                   double tau);

/// Full Gaussian log-likelihood (summed over observations, constants kept).
double gaussian_loglik(const SampleMatrix& sample, const MeanCovModel& model,
                       const Vector& theta);

}  // namespace dpdg
