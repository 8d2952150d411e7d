#include <doctest.h>

#include "dpdg/distributions.hpp"
#include "dpdg/model.hpp"

using namespace dpdg;

namespace {

Vector vec(std::initializer_list<double> v) {
    Vector x(static_cast<Eigen::Index>(v.size()));
    Eigen::Index i = 0;
    for (double e : v) x[i++] = e;
    return x;
}

// Random interior theta for a preset, diag-dominant for mvnormal.
Vector random_theta(const MeanCovModel& model, RngStream& rng) {
    if (model.name == "exponential" || model.name == "poisson") {
        return vec({0.3 + 4.0 * rng.uniform01()});
    }
    if (model.name == "normal1d") {
        return vec({-2.0 + 4.0 * rng.uniform01(), 0.3 + 3.0 * rng.uniform01()});
    }
    // mvnormal: build SPD Sigma = A A^T + I, pack the lower triangle
    const int m = model.m;
    Matrix a(m, m);
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j < m; ++j) a(i, j) = rng.normal() * 0.5;
    }
    Matrix sigma = a * a.transpose() + Matrix::Identity(m, m);
    Vector theta(model.d);
    for (int i = 0; i < m; ++i) theta[i] = rng.normal();
    int k = m;
    for (int i = 0; i < m; ++i) {
        for (int j = 0; j <= i; ++j, ++k) theta[k] = sigma(i, j);
    }
    return theta;
}

}  // namespace

TEST_CASE("preset evaluation matches the closed-form moments") {
    auto expo = make_exponential();
    auto [mu_e, cov_e] = model_eval(expo, vec({2.0}));
    CHECK(mu_e[0] == doctest::Approx(2.0));
    CHECK(cov_e(0, 0) == doctest::Approx(4.0));

    auto pois = make_poisson();
    auto [mu_p, cov_p] = model_eval(pois, vec({4.0}));
    CHECK(mu_p[0] == doctest::Approx(4.0));
    CHECK(cov_p(0, 0) == doctest::Approx(4.0));

    auto norm = make_normal1d();
    auto [mu_n, cov_n] = model_eval(norm, vec({0.0, 1.0}));
    CHECK(mu_n[0] == doctest::Approx(0.0));
    CHECK(cov_n(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("domain violations and bad covariances are rejected") {
    auto expo = make_exponential();
    CHECK_THROWS_AS(model_eval(expo, vec({-1.0})), DomainError);
    CHECK_THROWS_AS(model_eval(expo, vec({0.0})), DomainError);

    auto mvn = make_mvnormal(2);
    // Indefinite Sigma: off-diagonal larger than the diagonal entries.
    Vector bad = vec({0.0, 0.0, 1.0, 5.0, 1.0});
    CHECK_THROWS_AS(model_eval(mvn, bad), NotSpdError);
}

TEST_CASE("preset analytic derivatives settle the hand examples") {
    auto expo = make_exponential();
    auto d_e = model_derivs(expo, vec({2.0}));
    CHECK(d_e.dmu[0][0] == doctest::Approx(1.0));
    CHECK(d_e.dsigma[0](0, 0) == doctest::Approx(4.0));

    auto pois = make_poisson();
    auto d_p = model_derivs(pois, vec({3.0}));
    CHECK(d_p.dmu[0][0] == doctest::Approx(1.0));
    CHECK(d_p.dsigma[0](0, 0) == doctest::Approx(1.0));
}

TEST_CASE("analytic derivatives agree with finite differences on all presets") {
    RngStream rng(7, 0);
    for (auto make : {make_exponential, make_poisson, make_normal1d}) {
        MeanCovModel model = make();
        MeanCovModel fd_model = model;
        fd_model.mean_derivs = nullptr;
        fd_model.cov_derivs = nullptr;
        for (int trial = 0; trial < 20; ++trial) {
            const Vector theta = random_theta(model, rng);
            const ModelDerivs a = model_derivs(model, theta);
            const ModelDerivs b = model_derivs(fd_model, theta);
            for (int k = 0; k < model.d; ++k) {
                const double scale = 1.0 + a.dmu[k].norm() + a.dsigma[k].norm();
                CHECK((a.dmu[k] - b.dmu[k]).norm() / scale < 1e-6);
                CHECK((a.dsigma[k] - b.dsigma[k]).norm() / scale < 1e-6);
            }
        }
    }
    MeanCovModel mvn = make_mvnormal(2);
    MeanCovModel mvn_fd = mvn;
    mvn_fd.mean_derivs = nullptr;
    mvn_fd.cov_derivs = nullptr;
    for (int trial = 0; trial < 10; ++trial) {
        const Vector theta = random_theta(mvn, rng);
        const ModelDerivs a = model_derivs(mvn, theta);
        const ModelDerivs b = model_derivs(mvn_fd, theta);
        for (int k = 0; k < mvn.d; ++k) {
            const double scale = 1.0 + a.dmu[k].norm() + a.dsigma[k].norm();
            CHECK((a.dmu[k] - b.dmu[k]).norm() / scale < 1e-6);
            CHECK((a.dsigma[k] - b.dsigma[k]).norm() / scale < 1e-6);
        }
    }
}

TEST_CASE("covariances are symmetric positive definite at random interior points") {
    RngStream rng(11, 0);
    for (auto make : {make_exponential, make_poisson, make_normal1d}) {
        MeanCovModel model = make();
        for (int trial = 0; trial < 100; ++trial) {
            const Vector theta = random_theta(model, rng);
            auto [mu, sigma] = model_eval(model, theta);
            (void)mu;
            CHECK((sigma - sigma.transpose()).cwiseAbs().maxCoeff() < 1e-12);
            Eigen::LLT<Matrix> llt(sigma);
            CHECK(llt.info() == Eigen::Success);
        }
    }
}

TEST_CASE("mvnormal with m = 1 is the identity parametrization") {
    auto mvn = make_mvnormal(1);
    CHECK(mvn.d == 2);
    auto [mu, cov] = model_eval(mvn, vec({0.0, 1.0}));
    CHECK(mu[0] == doctest::Approx(0.0));
    CHECK(cov(0, 0) == doctest::Approx(1.0));
}

TEST_CASE("elliptical scaling multiplies the reported covariance by c_Y") {
    const double c_y = 2.5;
    auto mvn = make_mvnormal(2, c_y);
    auto plain = make_mvnormal(2, 1.0);
    RngStream rng(13, 0);
    const Vector theta = random_theta(plain, rng);
    auto [mu1, cov1] = model_eval(mvn, theta);
    auto [mu2, cov2] = model_eval(plain, theta);
    CHECK((mu1 - mu2).norm() == doctest::Approx(0.0));
    CHECK((cov1 - c_y * cov2).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("constraint evaluation: point, linear and product constraints") {
    auto [g1, G1] = constraint_eval(point_constraint(vec({2.0})), vec({2.0}));
    CHECK(g1[0] == doctest::Approx(0.0));
    CHECK(G1(0, 0) == doctest::Approx(1.0));

    auto lin = general_constraint(
        2, 1, [](const Vector& t) { return Vector::Constant(1, t[0] - t[1]); });
    auto [g2, G2] = constraint_eval(lin, vec({3.0, 3.0}));
    CHECK(g2[0] == doctest::Approx(0.0));
    CHECK(G2(0, 0) == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(G2(1, 0) == doctest::Approx(-1.0).epsilon(1e-6));

    auto prod = general_constraint(
        2, 1, [](const Vector& t) { return Vector::Constant(1, t[0] * t[1] - 1.0); });
    auto [g3, G3] = constraint_eval(prod, vec({2.0, 0.5}));
    CHECK(g3[0] == doctest::Approx(0.0));
    CHECK(G3(0, 0) == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(G3(1, 0) == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("constraint Jacobians keep full rank at feasible points") {
    auto c = fix_coordinates(3, {{0, 1.0}, {2, 4.0}});
    auto [g, G] = constraint_eval(c, vec({1.0, 7.0, 4.0}));
    CHECK(g.lpNorm<Eigen::Infinity>() == doctest::Approx(0.0));
    Eigen::JacobiSVD<Matrix> svd(G);
    CHECK(svd.singularValues()(svd.singularValues().size() - 1) > 1e-10);
}

TEST_CASE("sample validation rejects empty and non-finite input") {
    CHECK_THROWS_AS(make_sample(Matrix(0, 1)), DomainError);
    Matrix bad(1, 1);
    bad(0, 0) = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(make_sample(bad), DomainError);
}
