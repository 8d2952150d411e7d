#pragma once

#include <iosfwd>
#include <vector>

#include "dpdg/model.hpp"

namespace dpdg {

struct InfluenceCurve {
    Vector y_grid;
    Matrix values;  // grid x d
    double tau;
    Vector theta;
};

/// IF of the unrestricted estimator: J_tau(theta)^-1 Psi_tau(y; theta).
Vector influence_unrestricted(const MeanCovModel& model, const Vector& theta, double tau,
                              const Vector& y);

/// IF of the restricted estimator: P*_tau(theta) Psi_tau(y; theta), the
/// solution of the constrained stationarity system.  Satisfies
/// G(theta)^T IF = 0 identically; with r = 0 it reduces to the
/// unrestricted form.
Vector influence_restricted(const MeanCovModel& model, const Vector& theta, double tau,
                            const ConstraintSet& constraint, const Vector& y);

/// Tabulated curves for scalar-observation models, one per tau.
std::vector<InfluenceCurve> influence_curve(const MeanCovModel& model, const Vector& theta,
                                            const std::vector<double>& taus,
                                            const Vector& y_grid);

/// CSV schema: y, tau, if_1, ..., if_d with 17-significant-digit floats.
void write_influence_csv(std::ostream& os, const std::vector<InfluenceCurve>& curves);

}  // namespace dpdg
