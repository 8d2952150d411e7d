#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dpdg/distributions.hpp"
#include "dpdg/estimators.hpp"
#include "dpdg/influence.hpp"
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

// m = 2 identity model: mu = theta, Sigma = I, so J_0 = I and Psi_0 = y - theta.
MeanCovModel make_identity2_model() {
    MeanCovModel mdl;
    mdl.d = 2;
    mdl.m = 2;
    mdl.name = "identity2";
    mdl.domain_lo = vec({-1e30, -1e30});
    mdl.domain_hi = vec({1e30, 1e30});
    mdl.mean_fn = [](const Vector& t) { return t; };
    mdl.cov_fn = [](const Vector&) { return Matrix::Identity(2, 2); };
    mdl.mean_derivs = [](const Vector&) {
        return std::vector<Vector>{vec({1.0, 0.0}), vec({0.0, 1.0})};
    };
    mdl.cov_derivs = [](const Vector&) {
        return std::vector<Matrix>{Matrix::Zero(2, 2), Matrix::Zero(2, 2)};
    };
    return mdl;
}

double sup_abs_if(const MeanCovModel& model, double theta, double tau, double y_end,
                  double spacing) {
    const Matrix j = matrix_j(model, vec1(theta), tau);
    double sup = 0.0;
    for (double y = 0.0; y <= y_end; y += spacing) {
        const double v = psi(vec1(y), model, vec1(theta), tau)[0] / j(0, 0);
        sup = std::max(sup, std::abs(v));
    }
    return sup;
}

}  // namespace

TEST_CASE("unrestricted influence at the worked exponential values") {
    auto expo = make_exponential();
    CHECK(influence_unrestricted(expo, vec1(4.0), 0.0, vec1(4.0))[0] ==
          doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
    const double golden = 0.5 * (1.0 + std::sqrt(5.0));
    CHECK(std::abs(influence_unrestricted(expo, vec1(1.0), 0.0, vec1(golden))[0]) < 1e-12);
}

TEST_CASE("tau > 0 bounds the influence, tau = 0 does not") {
    auto expo = make_exponential();
    // tau = 0.8: the maximum over [0, 100] sits at an interior point
    double max_if = 0.0, arg = 0.0;
    for (double y = 0.0; y <= 100.0; y += 0.05) {
        const double v =
            std::abs(influence_unrestricted(expo, vec1(4.0), 0.8, vec1(y))[0]);
        if (v > max_if) {
            max_if = v;
            arg = y;
        }
    }
    CHECK(arg < 99.0);
    // tau = 0: attained at the grid end and still growing
    const double at_end = std::abs(influence_unrestricted(expo, vec1(4.0), 0.0, vec1(100.0))[0]);
    const double further =
        std::abs(influence_unrestricted(expo, vec1(4.0), 0.0, vec1(1000.0))[0]);
    CHECK(further > at_end);
}

TEST_CASE("restricted influence: vacuous, fully pinned, and the (0, 5) example") {
    auto expo = make_exponential();
    {
        const Vector a = influence_restricted(expo, vec1(3.0), 0.3, no_constraint(1), vec1(5.0));
        const Vector b = influence_unrestricted(expo, vec1(3.0), 0.3, vec1(5.0));
        CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
    }
    {
        const Vector iff =
            influence_restricted(expo, vec1(3.0), 0.3, point_constraint(vec1(3.0)), vec1(9.0));
        CHECK(iff.cwiseAbs().maxCoeff() == 0.0);
    }
    {
        auto model = make_identity2_model();
        const Vector theta = vec({1.0, -2.0});
        const Vector y = vec({1.0 + 3.0, -2.0 + 5.0});  // Psi_0 = y - theta = (3, 5)
        CHECK((psi(y, model, theta, 0.0) - vec({3.0, 5.0})).cwiseAbs().maxCoeff() < 1e-12);
        const Vector iff =
            influence_restricted(model, theta, 0.0, fix_coordinates(2, {{0, 1.0}}), y);
        CHECK(std::abs(iff[0]) < 1e-12);
        CHECK(iff[1] == doctest::Approx(5.0).epsilon(1e-10));
    }
}

TEST_CASE("constraint directions annihilate the restricted influence everywhere") {
    auto mvn = make_mvnormal(2);
    RngStream rng(41, 0);
    const Vector theta = vec({0.2, -0.4, 1.3, 0.3, 1.1});
    auto c = fix_coordinates(5, {{0, theta[0]}, {3, theta[3]}});
    const Matrix big_g = c.jac_fn(theta);
    for (int trial = 0; trial < 100; ++trial) {
        Vector y(2);
        y << 3.0 * rng.normal(), 3.0 * rng.normal();
        const Vector iff = influence_restricted(mvn, theta, 0.35, c, y);
        CHECK((big_g.transpose() * iff).lpNorm<Eigen::Infinity>() < 1e-10);
    }
}

TEST_CASE("sup of the influence stabilizes for tau > 0 and diverges at tau = 0") {
    auto expo = make_exponential();
    for (double tau : {0.2, 0.8}) {
        const double s3 = sup_abs_if(expo, 4.0, tau, 1e3, 0.05);
        const double s4 = sup_abs_if(expo, 4.0, tau, 1e4, 0.05);
        CHECK(std::abs(s4 - s3) / s3 < 1e-3);
    }
    const double u3 = sup_abs_if(expo, 4.0, 0.0, 1e3, 0.5);
    const double u4 = sup_abs_if(expo, 4.0, 0.0, 1e4, 0.5);
    CHECK(u4 > 10.0 * u3);
}

TEST_CASE("curve emission: shapes, row counts, CSV schema, empty grid") {
    auto expo = make_exponential();
    Vector grid(100);
    for (int i = 0; i < 100; ++i) grid[i] = 15.0 * i / 99.0;
    const auto curves = influence_curve(expo, vec1(4.0), {0.0, 0.2, 0.8}, grid);
    REQUIRE(curves.size() == 3);
    for (const auto& c : curves) CHECK(c.values.rows() == 100);

    // tau = 0: magnitude strictly increasing beyond the largest root of Psi
    const double root = 4.0 * 0.5 * (1.0 + std::sqrt(5.0));
    const auto& flat = curves[0];
    for (int i = 0; i + 1 < 100; ++i) {
        if (flat.y_grid[i] > root + 0.2) {
            CHECK(std::abs(flat.values(i + 1, 0)) > std::abs(flat.values(i, 0)));
        }
    }
    // tau > 0: the curve magnitude eventually decreases (the tau = 0.2 peak
    // sits near y = 16, past this plotting window, so probe a longer grid)
    Vector long_grid(240);
    for (int i = 0; i < 240; ++i) long_grid[i] = 60.0 * i / 239.0;
    const auto long_curves = influence_curve(expo, vec1(4.0), {0.2, 0.8}, long_grid);
    for (const auto& c : long_curves) {
        CHECK(std::abs(c.values(239, 0)) < std::abs(c.values(120, 0)));
    }

    std::ostringstream os;
    write_influence_csv(os, curves);
    const std::string text = os.str();
    CHECK(text.rfind("y,tau,if_1\n", 0) == 0);
    CHECK(std::count(text.begin(), text.end(), '\n') == 301);  // header + 300 rows

    const auto empty = influence_curve(expo, vec1(4.0), {0.3}, Vector(0));
    CHECK(empty[0].values.rows() == 0);
}

TEST_CASE("influence matches the one-point perturbation of an actual fit") {
    auto expo = make_exponential();
    const double theta0 = 2.0;
    const int n = 100000;
    RngStream rng(4004, 0);
    SampleMatrix base = sample_model_normal(expo, vec1(theta0), n, rng);

    // replace the sample point nearest the zero of the score, so the swap
    // isolates the contribution of the new point
    const double root = theta0 * 0.5 * (1.0 + std::sqrt(5.0));
    Eigen::Index swap_at = 0;
    for (Eigen::Index i = 1; i < base.n(); ++i) {
        if (std::abs(base.data(i, 0) - root) < std::abs(base.data(swap_at, 0) - root)) {
            swap_at = i;
        }
    }
    const double y_new = 6.0;
    const double base_hat = fit_mdpdge(base, expo, 0.0).theta_hat[0];
    SampleMatrix perturbed = base;
    perturbed.data(swap_at, 0) = y_new;
    const double pert_hat = fit_mdpdge(perturbed, expo, 0.0).theta_hat[0];
    const double gateaux = (pert_hat - base_hat) * static_cast<double>(n);
    const double iff = influence_unrestricted(expo, vec1(theta0), 0.0, vec1(y_new))[0];
    CHECK(gateaux == doctest::Approx(iff).epsilon(0.10));

    // for tau > 0 the fit perturbation carries the extra M-estimator factor:
    // (perturbation) * n = IF / (1 + tau) to first order
    const double tau = 0.3;
    const double base_hat_t = fit_mdpdge(base, expo, tau).theta_hat[0];
    const double pert_hat_t = fit_mdpdge(perturbed, expo, tau).theta_hat[0];
    const double gateaux_t = (pert_hat_t - base_hat_t) * static_cast<double>(n);
    const double iff_t = influence_unrestricted(expo, vec1(theta0), tau, vec1(y_new))[0];
    CHECK(gateaux_t * (1.0 + tau) == doctest::Approx(iff_t).epsilon(0.10));
}
