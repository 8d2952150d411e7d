#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dpdg/distributions.hpp"
#include "dpdg/estimators.hpp"
#include "dpdg/objective.hpp"
#include "dpdg/score.hpp"

using namespace dpdg;

namespace {

Vector vec1(double x) { return Vector::Constant(1, x); }

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

TEST_CASE("exponential tau = 0 fits land on the quadratic roots") {
    auto expo = make_exponential();
    {
        const EstimateReport rep = fit_mdpdge(make_sample_1d({2.0}), expo, 0.0);
        CHECK(rep.converged);
        CHECK(rep.theta_hat[0] == doctest::Approx(std::sqrt(5.0) - 1.0).epsilon(1e-7));
    }
    {
        const EstimateReport rep = fit_mdpdge(make_sample_1d({1.0, 1.0}), expo, 0.0);
        CHECK(rep.converged);
        CHECK(rep.theta_hat[0] ==
              doctest::Approx(0.5 * (std::sqrt(5.0) - 1.0)).epsilon(1e-7));
    }
    {
        // all rows identical: the quadratic still has its positive root
        const EstimateReport rep = fit_mdpdge(make_sample_1d({3.0, 3.0, 3.0}), expo, 0.0);
        CHECK(rep.converged);
        CHECK(rep.theta_hat[0] ==
              doctest::Approx(3.0 * 0.5 * (std::sqrt(5.0) - 1.0)).epsilon(1e-7));
    }
}

TEST_CASE("mvnormal fit zeroes the score from a truth start") {
    auto mvn = make_mvnormal(2);
    Vector truth = vec({0.5, -0.3, 1.0, 0.2, 1.5});
    RngStream rng(31, 0);
    const SampleMatrix s = sample_model_normal(mvn, truth, 400, rng);
    for (double tau : {0.0, 0.4}) {
        FitOptions opts;
        opts.theta0 = truth;
        const EstimateReport rep = fit_mdpdge(s, mvn, tau, opts);
        CHECK(rep.converged);
        CHECK(rep.score_norm < 1e-6);
    }
}

TEST_CASE("fit report invariants: convergence flags and standard errors") {
    auto expo = make_exponential();
    RngStream rng(32, 0);
    const SampleMatrix s = sample_model_normal(expo, vec1(2.0), 200, rng);
    const EstimateReport rep = fit_mdpdge(s, expo, 0.3);
    CHECK(rep.converged);
    CHECK(rep.score_norm < 1e-9 * static_cast<double>(s.n()));
    CHECK(rep.std_errors[0] > 0.0);
    const Matrix j = matrix_j(expo, rep.theta_hat, 0.3);
    const Matrix k = matrix_k(expo, rep.theta_hat, 0.3);
    CHECK(rep.asym_cov(0, 0) ==
          doctest::Approx(k(0, 0) / (j(0, 0) * j(0, 0)) / 200.0).epsilon(1e-10));
}

TEST_CASE("non-convergence is reported, not thrown") {
    auto expo = make_exponential();
    FitOptions opts;
    opts.theta0 = vec1(40.0);
    opts.max_iter = 1;
    const EstimateReport rep = fit_mdpdge(make_sample_1d({1.0, 2.0, 0.5}), expo, 0.6, opts);
    CHECK_FALSE(rep.converged);
    CHECK(rep.theta_hat.allFinite());
}

TEST_CASE("zero-variance mvnormal sample surfaces NotSPD") {
    auto mvn = make_mvnormal(2);
    Matrix data(5, 2);
    for (int i = 0; i < 5; ++i) data.row(i) << 1.0, 2.0;
    CHECK_THROWS_AS(fit_mdpdge(SampleMatrix(data), mvn, 0.0), NotSpdError);
}

TEST_CASE("point constraint returns theta0 bit-exactly with lambda = -grad H") {
    auto expo = make_exponential();
    const SampleMatrix s = make_sample_1d({1.0, 3.0, 2.5});
    const Vector theta0 = vec1(2.0);
    const EstimateReport rep = fit_rmdpdge(s, expo, 0.2, point_constraint(theta0));
    CHECK(rep.theta_hat[0] == 2.0);
    const Vector grad = score_sum(s, expo, theta0, 0.2) / 3.0;
    CHECK(rep.lambda[0] == doctest::Approx(-grad[0]).epsilon(1e-12));
    CHECK(rep.kkt_residual < 1e-12);
    CHECK(rep.asym_cov.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("vacuous constraint reproduces the unconstrained fit") {
    auto expo = make_exponential();
    const SampleMatrix s = make_sample_1d({0.8, 1.9, 2.2, 1.4});
    const EstimateReport a = fit_mdpdge(s, expo, 0.3);
    const EstimateReport b = fit_rmdpdge(s, expo, 0.3, no_constraint(1));
    CHECK(a.theta_hat[0] == doctest::Approx(b.theta_hat[0]).epsilon(1e-12));
}

TEST_CASE("known-variance normal fit recovers the sample mean") {
    auto norm = make_normal1d();
    const SampleMatrix s = make_sample_1d({0.0, 2.0});
    const EstimateReport rep =
        fit_rmdpdge(s, norm, 0.0, fix_coordinates(2, {{1, 1.0}}));
    CHECK(rep.converged);
    CHECK(rep.theta_hat[0] == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(rep.theta_hat[1] == 1.0);
    CHECK(std::abs(rep.lambda[0]) < 1e-8);
}

TEST_CASE("general nonlinear constraint solved by the stationarity iteration") {
    // normal1d with variance tied to the mean: theta2 = theta1^2
    auto norm = make_normal1d();
    RngStream rng(33, 0);
    const SampleMatrix s = sample_model_normal(norm, vec({2.0, 4.0}), 300, rng);
    auto c = general_constraint(
        2, 1, [](const Vector& t) { return Vector::Constant(1, t[1] - t[0] * t[0]); });
    const EstimateReport rep = fit_rmdpdge(s, norm, 0.0, c);
    CHECK(rep.converged);
    CHECK(std::abs(rep.theta_hat[1] - rep.theta_hat[0] * rep.theta_hat[0]) < 1e-8);
    CHECK(rep.kkt_residual < 1e-8);
    CHECK(rep.theta_hat[0] == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("two simultaneous restrictions through the general stationarity path") {
    auto mvn = make_mvnormal(2);
    Vector truth = vec({0.5, 0.5, 1.2, 0.1, 1.2});
    RngStream rng(35, 0);
    const SampleMatrix s = sample_model_normal(mvn, truth, 250, rng);
    auto c = general_constraint(5, 2, [](const Vector& t) {
        Vector g(2);
        g << t[0] - t[1], t[2] - t[4];
        return g;
    });
    const EstimateReport rep = fit_rmdpdge(s, mvn, 0.1, c);
    CHECK(rep.converged);
    CHECK(std::abs(rep.theta_hat[0] - rep.theta_hat[1]) < 1e-8);
    CHECK(std::abs(rep.theta_hat[2] - rep.theta_hat[4]) < 1e-8);
    CHECK(rep.kkt_residual < 1e-8);
    CHECK(rep.lambda.size() == 2);
    CHECK(rep.theta_hat[0] == doctest::Approx(0.5).epsilon(0.25));
}

TEST_CASE("kkt residual: converged fits, and the infeasible-point reduction") {
    auto expo = make_exponential();
    const SampleMatrix s = make_sample_1d({1.5, 2.5, 2.0});
    auto c = point_constraint(vec1(2.0));
    const EstimateReport rep = fit_rmdpdge(s, expo, 0.1, c);
    CHECK(kkt_residual(s, expo, rep.theta_hat, 0.1, c, rep.lambda) < 1e-9);

    // at an infeasible theta with lambda zeroing the gradient part, only
    // the feasibility gap remains
    const Vector theta = vec1(3.0);
    const Vector grad = score_sum(s, expo, theta, 0.1) / 3.0;
    const Vector lambda = -grad;
    CHECK(kkt_residual(s, expo, theta, 0.1, c, lambda) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("kkt residual at the truth vanishes with growing n") {
    auto expo = make_exponential();
    const Vector truth = vec1(2.0);
    auto c = no_constraint(1);
    std::vector<double> medians;
    for (int n : {100, 1000, 10000}) {
        std::vector<double> vals;
        for (int rep = 0; rep < 41; ++rep) {
            RngStream rng(820, hash64({static_cast<std::uint64_t>(n),
                                       static_cast<std::uint64_t>(rep)}));
            const SampleMatrix s = sample_model_normal(expo, truth, n, rng);
            vals.push_back(kkt_residual(s, expo, truth, 0.2, c, Vector(0)));
        }
        medians.push_back(median(std::move(vals)));
    }
    CHECK(medians[1] < medians[0]);
    CHECK(medians[2] < medians[1]);
}

TEST_CASE("restricted fits stay feasible") {
    auto norm = make_normal1d();
    RngStream rng(34, 0);
    for (int trial = 0; trial < 5; ++trial) {
        const SampleMatrix s = sample_model_normal(norm, vec({1.0, 2.0}), 50, rng);
        const EstimateReport rep =
            fit_rmdpdge(s, norm, 0.2, fix_coordinates(2, {{1, 2.0}}));
        CHECK(rep.converged);
        CHECK(std::abs(rep.theta_hat[1] - 2.0) < 1e-8);
    }
}

TEST_CASE("root-n consistency: median error halves when n quadruples") {
    auto expo = make_exponential();
    const double theta0 = 2.0;
    for (double tau : {0.0, 0.3}) {
        std::vector<double> med;
        for (int n : {100, 400, 1600}) {
            std::vector<double> errs;
            for (int rep = 0; rep < 201; ++rep) {
                RngStream rng(500 + static_cast<std::uint64_t>(1000 * tau),
                              hash64({static_cast<std::uint64_t>(n),
                                      static_cast<std::uint64_t>(rep)}));
                const SampleMatrix s = sample_model_normal(expo, vec1(theta0), n, rng);
                errs.push_back(std::abs(fit_mdpdge(s, expo, tau).theta_hat[0] - theta0));
            }
            med.push_back(median(std::move(errs)));
        }
        for (std::size_t i = 0; i + 1 < med.size(); ++i) {
            const double ratio = med[i + 1] / med[i];
            CHECK(ratio > 0.5 * 0.7);
            CHECK(ratio < 0.5 * 1.3);
        }
    }
}

TEST_CASE("Wald intervals reach nominal coverage under the working model") {
    auto expo = make_exponential();
    const double theta0 = 2.0, tau = 0.3;
    const double z = 1.959963985;
    int covered = 0;
    const int reps = 2000;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng(600, static_cast<std::uint64_t>(rep));
        const SampleMatrix s = sample_model_normal(expo, vec1(theta0), 500, rng);
        const EstimateReport fit = fit_mdpdge(s, expo, tau);
        const double half = z * fit.std_errors[0];
        if (std::abs(fit.theta_hat[0] - theta0) <= half) ++covered;
    }
    const double rate = static_cast<double>(covered) / reps;
    CHECK(rate > 0.93);
    CHECK(rate < 0.97);
}

TEST_CASE("moderate tau is more accurate than tau = 0 under contamination") {
    // Under the 10% scale mixture the population roots of the estimating
    // equation sit at 2.307 (tau = 0), 1.741 (tau = 0.2) and 1.490
    // (tau = 0.4), by numerical quadrature of E[psi] over the mixture law.
    // tau = 0.2 trades the contamination bias down; at tau = 0.4 the
    // Gaussian-surrogate misfit to exponential data dominates and the error
    // grows again.
    auto expo = make_exponential();
    const double theta0 = 2.0;
    const int reps = 2000, n = 40;
    double mae0 = 0.0, mae2 = 0.0, mae4 = 0.0;
    for (int rep = 0; rep < reps; ++rep) {
        RngStream rng(700, static_cast<std::uint64_t>(rep));
        const SampleMatrix s = sample_contaminated_exponential({theta0, 0.1}, n, rng);
        mae0 += std::abs(fit_mdpdge(s, expo, 0.0).theta_hat[0] - theta0);
        mae2 += std::abs(fit_mdpdge(s, expo, 0.2).theta_hat[0] - theta0);
        mae4 += std::abs(fit_mdpdge(s, expo, 0.4).theta_hat[0] - theta0);
    }
    CHECK(mae2 / reps < mae0 / reps);
    CHECK(mae2 / reps < mae4 / reps);
}
