#include "dpdg/influence.hpp"

#include <ostream>

#include "dpdg/score.hpp"

namespace dpdg {

Vector influence_unrestricted(const MeanCovModel& model, const Vector& theta, double tau,
                              const Vector& y) {
    const Matrix j = matrix_j(model, theta, tau);
    Eigen::LDLT<Matrix> fact(j);
    if (fact.info() != Eigen::Success || !fact.isPositive()) throw SingularMatrixError("J");
    return fact.solve(psi(y, model, theta, tau));
}

Vector influence_restricted(const MeanCovModel& model, const Vector& theta, double tau,
                            const ConstraintSet& constraint, const Vector& y) {
    if (constraint.r == 0) return influence_unrestricted(model, theta, tau, y);
    const RestrictedCovariance rc = restricted_covariance(model, theta, tau, constraint);
    return rc.pstar * psi(y, model, theta, tau);
}

std::vector<InfluenceCurve> influence_curve(const MeanCovModel& model, const Vector& theta,
                                            const std::vector<double>& taus,
                                            const Vector& y_grid) {
    if (model.m != 1) throw DomainError("influence curves are emitted for m = 1 models only");
    std::vector<InfluenceCurve> curves;
    curves.reserve(taus.size());
    for (double tau : taus) {
        InfluenceCurve c;
        c.tau = tau;
        c.theta = theta;
        c.y_grid = y_grid;
        c.values.resize(y_grid.size(), model.d);
        const Matrix j = matrix_j(model, theta, tau);
        Eigen::LDLT<Matrix> fact(j);
        if (fact.info() != Eigen::Success || !fact.isPositive()) throw SingularMatrixError("J");
        for (Eigen::Index i = 0; i < y_grid.size(); ++i) {
            c.values.row(i) =
                fact.solve(psi(Vector::Constant(1, y_grid[i]), model, theta, tau)).transpose();
        }
        curves.push_back(std::move(c));
    }
    return curves;
}

void write_influence_csv(std::ostream& os, const std::vector<InfluenceCurve>& curves) {
    const int d = curves.empty() ? 0 : static_cast<int>(curves.front().values.cols());
    os << "y,tau";
    for (int k = 1; k <= d; ++k) os << ",if_" << k;
    os << "\n";
    const auto old_precision = os.precision(17);
    for (const auto& c : curves) {
        for (Eigen::Index i = 0; i < c.y_grid.size(); ++i) {
            os << c.y_grid[i] << "," << c.tau;
            for (Eigen::Index k = 0; k < c.values.cols(); ++k) os << "," << c.values(i, k);
            os << "\n";
        }
    }
    os.precision(old_precision);
}

}  // namespace dpdg
