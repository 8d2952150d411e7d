#pragma once

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "dpdg/errors.hpp"

namespace dpdg {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// n observations of dimension m, one per row.
struct SampleMatrix {
    Matrix data;  // n x m

    SampleMatrix() = default;
    explicit SampleMatrix(Matrix d) : data(std::move(d)) {}

    Eigen::Index n() const { return data.rows(); }
    Eigen::Index m() const { return data.cols(); }

    // Throws DomainError unless n >= 1, m >= 1 and every entry is finite.
    void validate() const;
};

SampleMatrix make_sample(Matrix data);
SampleMatrix make_sample_1d(const std::vector<double>& values);

/// Parametric model given only through its mean vector and covariance matrix
/// as functions of theta, plus (optionally analytic) partial derivatives.
///
/// Immutable after construction; evaluation is pure and thread-safe.
struct MeanCovModel {
    int d = 0;  // parameter dimension
    int m = 0;  // observation dimension
    std::function<Vector(const Vector&)> mean_fn;
    std::function<Matrix(const Vector&)> cov_fn;
    // Analytic derivatives; when absent model_derivs falls back to central
    // finite differences with step h = 1e-6 * max(1, |theta_i|).
    std::function<std::vector<Vector>(const Vector&)> mean_derivs;
    std::function<std::vector<Matrix>(const Vector&)> cov_derivs;
    // Open per-coordinate domain box.
    Vector domain_lo;
    Vector domain_hi;
    std::string name;

    bool in_domain(const Vector& theta) const;
};

struct ModelDerivs {
    std::vector<Vector> dmu;     // d vectors of length m
    std::vector<Matrix> dsigma;  // d matrices m x m
};

void check_domain(const MeanCovModel& model, const Vector& theta);

/// Evaluates (mu(theta), Sigma(theta)).  Throws DomainError outside the
/// domain box and NotSPD when the covariance fails a Cholesky factorization.
std::pair<Vector, Matrix> model_eval(const MeanCovModel& model, const Vector& theta);

/// Analytic derivatives when the preset supplies them, else central finite
/// differences of mean_fn/cov_fn.
ModelDerivs model_derivs(const MeanCovModel& model, const Vector& theta);

// Built-in presets.  Preset names are stable CLI identifiers.
MeanCovModel make_exponential();               // d=1: mu=theta, var=theta^2, theta>0
MeanCovModel make_poisson();                   // d=1: mu=var=theta, theta>0
MeanCovModel make_normal1d();                  // d=2: mu=theta1, var=theta2>0
MeanCovModel make_mvnormal(int m, double c_y = 1.0);  // theta=(mu, lower tri of Sigma)

/// Looks a preset up by CLI name; obs_dim only matters for mvnormal.
std::optional<MeanCovModel> model_by_name(const std::string& name, int obs_dim = 1);

/// Equality restriction g(theta) = 0_r with d x r Jacobian G(theta).
struct ConstraintSet {
    int d = 0;
    int r = 0;
    std::function<Vector(const Vector&)> g_fn;
    std::function<Matrix(const Vector&)> jac_fn;  // columns dg_j/dtheta
    // Populated by fix_coordinates(); enables the exact reduced-problem
    // solve in fit_rmdpdge.
    std::vector<std::pair<int, double>> fixed_coords;

    bool empty() const { return r == 0; }
};

ConstraintSet no_constraint(int d);

/// g_j(theta) = theta_i - v for each (i, v); indices are 0-based.
ConstraintSet fix_coordinates(int d, std::vector<std::pair<int, double>> fixes);

/// Fixes the whole parameter vector: g(theta) = theta - theta0, G = I.
ConstraintSet point_constraint(const Vector& theta0);

/// General constraint from user-supplied callables; Jacobian by finite
/// differences when jac is absent.
ConstraintSet general_constraint(int d, int r,
                                 std::function<Vector(const Vector&)> g,
                                 std::function<Matrix(const Vector&)> jac = nullptr);

std::pair<Vector, Matrix> constraint_eval(const ConstraintSet& constraint, const Vector& theta);

}  // namespace dpdg
