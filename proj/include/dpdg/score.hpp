#pragma once

#include <cstdint>

#include "dpdg/model.hpp"

namespace dpdg {

/// Sensitivity and variability matrices of the estimating equations.
struct AsymptoticMatrices {
    Matrix j;  // d x d, symmetric
    Matrix k;  // d x d, symmetric
    double tau;
};

/// Restricted-covariance construction:
///   Q  = J^-1 G [G^T J^-1 G]^-1
///   P* = J^-1 - Q G^T J^-1
///   M  = P* K P*^T
struct RestrictedCovariance {
    Matrix q;      // d x r
    Matrix pstar;  // d x d
    Matrix m;      // d x d, positive semidefinite
};

/// Per-observation score contribution Psi_tau(y; theta).  The gradient of
/// objective_h equals (1/n) sum_i psi(y_i).  tau = 0 uses the analytic
/// limit branch (a/tau factors are singular at zero).
Vector psi(const Vector& y, const MeanCovModel& model, const Vector& theta, double tau);

/// Sum of psi over all rows; one covariance factorization for the whole
/// sample.
Vector score_sum(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                 double tau);

/// Score vector U = (1/(tau+1)) * sum_i psi(y_i) = (n/(tau+1)) * grad objective_h.
Vector score_u(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
               double tau);

/// Central finite-difference gradient of objective_h (oracle for psi).
Vector grad_h_fd(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                 double tau, double h);

/// Delta_tau^i = (tau/2) trace(Sigma^-1 dSigma/dtheta_i); index is 0-based.
double delta_tau(const MeanCovModel& model, const Vector& theta, double tau, int i);

Matrix matrix_j(const MeanCovModel& model, const Vector& theta, double tau);
Matrix matrix_k(const MeanCovModel& model, const Vector& theta, double tau);

RestrictedCovariance restricted_covariance(const MeanCovModel& model, const Vector& theta,
                                           double tau, const ConstraintSet& constraint);

/// Noncentrality of the score test under local alternatives theta0 + l/sqrt(n):
/// delta = l^T J K^-1 J l.
double noncentrality(const MeanCovModel& model, const Vector& theta0, double tau,
                     const Vector& l);

struct ScoreMoments {
    Vector mean;
    Matrix cov;
};

/// Monte Carlo mean and covariance of psi over draws from the model-normal
/// law N(mu(theta), Sigma(theta)).  Draws are partitioned into fixed-size
/// blocks with per-block streams derived from (seed, block index), so the
/// result does not depend on the worker count.
ScoreMoments mc_score_moments(const MeanCovModel& model, const Vector& theta, double tau,
                              std::int64_t n_draws, std::uint64_t seed);

}  // namespace dpdg
