#include "dpdg/rao.hpp"

#include <cmath>

#include <json.hpp>

#include "dpdg/distributions.hpp"
#include "dpdg/estimators.hpp"
#include "dpdg/score.hpp"

namespace dpdg {

namespace {

TestReport finish_report(double statistic, int df, double alpha, std::string method,
                         std::optional<double> delta = std::nullopt) {
    TestReport rep;
    rep.statistic = statistic;
    rep.df = df;
    rep.alpha = alpha;
    rep.critical_value = chisq_quantile(df, alpha);
    rep.p_value = 1.0 - chisq_cdf(statistic, df);
    rep.reject = statistic > rep.critical_value;
    rep.noncentrality = delta;
    rep.method = std::move(method);
    return rep;
}

constexpr double kExpClamp = -745.0;

double clamped_exp(double x) { return x < kExpClamp ? 0.0 : std::exp(x); }

}  // namespace

std::string TestReport::to_json() const {
    nlohmann::json j{
        {"statistic", statistic},
        {"df", df},
        {"alpha", alpha},
        {"critical_value", critical_value},
        {"p_value", p_value},
        {"reject", reject},
        {"method", method},
    };
    if (noncentrality) {
        j["noncentrality"] = *noncentrality;
    } else {
        j["noncentrality"] = nullptr;
    }
    return j.dump(2);
}

TestReport rao_statistic(const SampleMatrix& sample, const MeanCovModel& model,
                         const Vector& theta0, double tau, double alpha) {
    sample.validate();
    const Vector u = score_u(sample, model, theta0, tau);
    const Matrix k = matrix_k(model, theta0, tau);
    Eigen::LDLT<Matrix> fact(k);
    if (fact.info() != Eigen::Success || !fact.isPositive()) throw SingularMatrixError("K");
    const double stat = u.dot(fact.solve(u)) / static_cast<double>(sample.n());
    return finish_report(stat, model.d, alpha, "rao-simple");
}

double rao_exponential(const SampleMatrix& sample, double theta0, double tau) {
    if (!(theta0 > 0.0)) throw DomainError("theta0 must be positive");
    const auto n = sample.n();
    const double t2 = theta0 * theta0;
    double u;
    if (tau == 0.0) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = sample.data(i, 0);
            sum += (y * y - y * theta0 - t2) / (t2 * theta0);
        }
        u = sum;
    } else {
        const double coef = (tau + 1.0) /
                            (std::pow(theta0, tau + 3.0) * std::pow(2.0 * M_PI, 0.5 * tau));
        const double shift = tau * t2 / std::pow(1.0 + tau, 1.5);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = sample.data(i, 0);
            const double z = (y - theta0) / theta0;
            sum += (y * y - y * theta0 - t2) * clamped_exp(-0.5 * tau * z * z) + shift;
        }
        u = coef * sum / (tau + 1.0);
    }
    const double k = std::pow(2.0 * M_PI, -tau) * std::pow(theta0, -2.0 * (tau + 1.0)) *
                     ((4.0 * tau * tau + 2.0 * tau + 3.0) / std::pow(1.0 + 2.0 * tau, 2.5) -
                      tau * tau / std::pow(1.0 + tau, 3.0));
    return u * u / (static_cast<double>(n) * k);
}

double rao_poisson(const SampleMatrix& sample, double theta0, double tau) {
    if (!(theta0 > 0.0)) throw DomainError("theta0 must be positive");
    const auto n = sample.n();
    const double t2 = theta0 * theta0;
    double u;
    if (tau == 0.0) {
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = sample.data(i, 0);
            sum += (y * y - t2 - theta0) / (2.0 * t2);
        }
        u = sum;
    } else {
        const double coef =
            (tau + 1.0) / (2.0 * std::pow(2.0 * M_PI * theta0, 0.5 * tau) * t2);
        const double shift = tau * theta0 / std::pow(1.0 + tau, 1.5);
        double sum = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            const double y = sample.data(i, 0);
            const double dev = y - theta0;
            sum += (y * y - t2 - theta0) * clamped_exp(-0.5 * tau * dev * dev / theta0) + shift;
        }
        u = coef * sum / (tau + 1.0);
    }
    const double k = std::pow(2.0 * M_PI * theta0, -tau) / (2.0 * t2) *
                     ((2.0 * tau * tau + 2.0 * theta0 + 4.0 * theta0 * tau + 1.0) /
                          std::pow(1.0 + 2.0 * tau, 2.5) -
                      tau * tau / (2.0 * std::pow(1.0 + tau, 3.0)));
    return u * u / (static_cast<double>(n) * k);
}

TestReport rao_composite(const SampleMatrix& sample, const MeanCovModel& model,
                         const ConstraintSet& constraint, double tau, double alpha) {
    if (constraint.r == 0) {
        throw InvalidConstraintError("composite statistic needs r >= 1 restrictions");
    }
    const EstimateReport fit = fit_rmdpdge(sample, model, tau, constraint);
    if (!fit.converged) throw NoConvergenceError("restricted fit did not converge");
    const Vector u = score_u(sample, model, fit.theta_hat, tau);
    const Matrix k = matrix_k(model, fit.theta_hat, tau);
    double stat;
    if (constraint.r == model.d) {
        // Square invertible Q cancels: Q [Q^T K Q]^-1 Q^T = K^-1.
        Eigen::LDLT<Matrix> fact(k);
        if (fact.info() != Eigen::Success || !fact.isPositive()) throw SingularMatrixError("K");
        stat = u.dot(fact.solve(u)) / static_cast<double>(sample.n());
    } else {
        const RestrictedCovariance rc =
            restricted_covariance(model, fit.theta_hat, tau, constraint);
        const Matrix qkq = rc.q.transpose() * k * rc.q;
        Eigen::FullPivLU<Matrix> lu(qkq);
        if (!lu.isInvertible()) throw SingularMatrixError("Q^T K Q");
        const Vector qu = rc.q.transpose() * u;
        stat = qu.dot(lu.solve(qu)) / static_cast<double>(sample.n());
    }
    return finish_report(stat, constraint.r, alpha, "composite-experimental");
}

double mdpde_exponential(const SampleMatrix& sample, double theta0, double beta) {
    if (!(theta0 > 0.0)) throw DomainError("theta0 must be positive");
    if (beta < 0.0) throw DomainError("beta must be >= 0");
    const auto n = sample.n();
    double inner = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double y = sample.data(i, 0);
        inner += (y - theta0) / theta0 * clamped_exp(-beta * y / theta0);
    }
    inner += static_cast<double>(n) * beta / ((beta + 1.0) * (beta + 1.0));
    const double c_beta = (4.0 * beta * beta + 1.0) / std::pow(2.0 * beta + 1.0, 3.0) -
                          beta * beta / std::pow(beta + 1.0, 4.0);
    return inner * inner / (c_beta * static_cast<double>(n));
}

TestReport mdpde_rao_exponential(const SampleMatrix& sample, double theta0, double beta,
                                 double alpha) {
    sample.validate();
    return finish_report(mdpde_exponential(sample, theta0, beta), 1, alpha,
                         "mdpde-rao-exponential");
}

double power_approximation(const MeanCovModel& model, const Vector& theta0,
                           const Vector& theta_alt, double tau, int n, double alpha) {
    if (n < 1) throw DomainError("n must be >= 1");
    const Vector l = std::sqrt(static_cast<double>(n)) * (theta_alt - theta0);
    const double delta = noncentrality(model, theta0, tau, l);
    const double crit = chisq_quantile(model.d, alpha);
    return 1.0 - chisq_cdf(crit, model.d, delta);
}

}  // namespace dpdg
