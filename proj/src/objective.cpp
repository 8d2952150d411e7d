#include "dpdg/objective.hpp"

#include <cmath>

namespace dpdg {

namespace {

// Exponents below this underflow to exactly zero; extreme outliers then
// contribute nothing, which is the intended redescending behaviour.
constexpr double kExpClamp = -745.0;

struct FactoredModel {
    Vector mu;
    Eigen::LLT<Matrix> llt;
    double logdet;  // log|Sigma| via the factor diagonal
};

FactoredModel factor_model(const SampleMatrix& sample, const MeanCovModel& model,
                           const Vector& theta) {
    sample.validate();
    if (sample.m() != model.m) throw DomainError("sample dimension does not match model");
    auto [mu, sigma] = model_eval(model, theta);
    FactoredModel f;
    f.llt.compute(sigma);
    if (f.llt.info() != Eigen::Success) throw NotSpdError("covariance factorization failed");
    f.logdet = 0.0;
    const auto& l = f.llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) f.logdet += 2.0 * std::log(l(i, i));
    f.mu = std::move(mu);
    return f;
}

// Kahan-compensated accumulator; makes reductions order-stable to ~1e-12.
struct Kahan {
    double sum = 0.0;
    double c = 0.0;
    void add(double x) {
        const double y = x - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

}  // namespace

DpdConstants dpd_constants(double tau, int m) {
    if (!(tau > 0.0)) throw InvalidTauError("a and b are undefined at tau <= 0");
    if (m < 1) throw DomainError("observation dimension must be >= 1");
    DpdConstants c;
    c.tau = tau;
    c.m = m;
    c.a = (tau + 1.0) / (tau * std::pow(2.0 * M_PI, 0.5 * m * tau));
    c.b = tau / std::pow(1.0 + tau, 0.5 * m + 1.0);
    return c;
}

double objective_h(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                   double tau) {
    if (tau < 0.0) throw InvalidTauError("tau must be >= 0");
    const FactoredModel f = factor_model(sample, model, theta);
    const auto n = sample.n();

    if (tau == 0.0) {
        Kahan q_sum;
        for (Eigen::Index i = 0; i < n; ++i) {
            const Vector r = sample.data.row(i).transpose() - f.mu;
            q_sum.add(r.dot(f.llt.solve(r)));
        }
        return -0.5 * f.logdet - q_sum.sum / (2.0 * static_cast<double>(n));
    }

    const DpdConstants c = dpd_constants(tau, model.m);
    Kahan e_sum;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector r = sample.data.row(i).transpose() - f.mu;
        const double expo = -0.5 * tau * r.dot(f.llt.solve(r));
        e_sum.add(expo < kExpClamp ? 0.0 : std::exp(expo));
    }
    const double det_pow = std::exp(-0.5 * tau * f.logdet);
    return c.a * det_pow * (e_sum.sum / static_cast<double>(n) - c.b) - 1.0 / tau;
}

double gaussian_loglik(const SampleMatrix& sample, const MeanCovModel& model,
                       const Vector& theta) {
    const FactoredModel f = factor_model(sample, model, theta);
    const auto n = sample.n();
    Kahan q_sum;
    for (Eigen::Index i = 0; i < n; ++i) {
        const Vector r = sample.data.row(i).transpose() - f.mu;
        q_sum.add(r.dot(f.llt.solve(r)));
    }
    const double nn = static_cast<double>(n);
    return -0.5 * nn * model.m * std::log(2.0 * M_PI) - 0.5 * nn * f.logdet - 0.5 * q_sum.sum;
}

}  // namespace dpdg
