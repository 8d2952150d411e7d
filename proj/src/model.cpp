#include "dpdg/model.hpp"

#include <cmath>
#include <sstream>

namespace dpdg {

void SampleMatrix::validate() const {
    if (data.rows() < 1 || data.cols() < 1) {
        throw DomainError("sample must have n >= 1 rows and m >= 1 columns");
    }
    if (!data.allFinite()) {
        throw DomainError("sample contains non-finite entries");
    }
}

SampleMatrix make_sample(Matrix data) {
    SampleMatrix s(std::move(data));
    s.validate();
    return s;
}

SampleMatrix make_sample_1d(const std::vector<double>& values) {
    Matrix d(static_cast<Eigen::Index>(values.size()), 1);
    for (Eigen::Index i = 0; i < d.rows(); ++i) d(i, 0) = values[static_cast<std::size_t>(i)];
    return make_sample(std::move(d));
}

bool MeanCovModel::in_domain(const Vector& theta) const {
    if (theta.size() != d) return false;
    if (!theta.allFinite()) return false;
    for (int i = 0; i < d; ++i) {
        if (!(theta[i] > domain_lo[i] && theta[i] < domain_hi[i])) return false;
    }
    return true;
}

void check_domain(const MeanCovModel& model, const Vector& theta) {
    if (!model.in_domain(theta)) {
        std::ostringstream os;
        os << "theta outside the domain of model '" << model.name << "'";
        throw DomainError(os.str());
    }
}

std::pair<Vector, Matrix> model_eval(const MeanCovModel& model, const Vector& theta) {
    check_domain(model, theta);
    Vector mu = model.mean_fn(theta);
    Matrix sigma = model.cov_fn(theta);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) {
        throw NotSpdError("covariance factorization failed for model '" + model.name + "'");
    }
    return {std::move(mu), std::move(sigma)};
}

ModelDerivs model_derivs(const MeanCovModel& model, const Vector& theta) {
    check_domain(model, theta);
    ModelDerivs out;
    if (model.mean_derivs && model.cov_derivs) {
        out.dmu = model.mean_derivs(theta);
        out.dsigma = model.cov_derivs(theta);
        return out;
    }
    out.dmu.resize(static_cast<std::size_t>(model.d));
    out.dsigma.resize(static_cast<std::size_t>(model.d));
    for (int i = 0; i < model.d; ++i) {
        const double h = 1e-6 * std::max(1.0, std::abs(theta[i]));
        Vector tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        out.dmu[static_cast<std::size_t>(i)] =
            (model.mean_fn(tp) - model.mean_fn(tm)) / (2.0 * h);
        out.dsigma[static_cast<std::size_t>(i)] =
            (model.cov_fn(tp) - model.cov_fn(tm)) / (2.0 * h);
    }
    return out;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

Vector constant_vector(int n, double v) {
    Vector x(n);
    x.setConstant(v);
    return x;
}

}  // namespace

MeanCovModel make_exponential() {
    MeanCovModel mdl;
    mdl.d = 1;
    mdl.m = 1;
    mdl.name = "exponential";
    mdl.domain_lo = constant_vector(1, 0.0);
    mdl.domain_hi = constant_vector(1, kInf);
    mdl.mean_fn = [](const Vector& t) { return Vector::Constant(1, t[0]); };
    mdl.cov_fn = [](const Vector& t) { return Matrix::Constant(1, 1, t[0] * t[0]); };
    mdl.mean_derivs = [](const Vector&) {
        return std::vector<Vector>{Vector::Constant(1, 1.0)};
    };
    mdl.cov_derivs = [](const Vector& t) {
        return std::vector<Matrix>{Matrix::Constant(1, 1, 2.0 * t[0])};
    };
    return mdl;
}

MeanCovModel make_poisson() {
    MeanCovModel mdl;
    mdl.d = 1;
    mdl.m = 1;
    mdl.name = "poisson";
    mdl.domain_lo = constant_vector(1, 0.0);
    mdl.domain_hi = constant_vector(1, kInf);
    mdl.mean_fn = [](const Vector& t) { return Vector::Constant(1, t[0]); };
    mdl.cov_fn = [](const Vector& t) { return Matrix::Constant(1, 1, t[0]); };
    mdl.mean_derivs = [](const Vector&) {
        return std::vector<Vector>{Vector::Constant(1, 1.0)};
    };
    mdl.cov_derivs = [](const Vector&) {
        return std::vector<Matrix>{Matrix::Constant(1, 1, 1.0)};
    };
    return mdl;
}

MeanCovModel make_normal1d() {
    MeanCovModel mdl;
    mdl.d = 2;
    mdl.m = 1;
    mdl.name = "normal1d";
    mdl.domain_lo = Vector(2);
    mdl.domain_hi = Vector(2);
    mdl.domain_lo << -kInf, 0.0;
    mdl.domain_hi << kInf, kInf;
    mdl.mean_fn = [](const Vector& t) { return Vector::Constant(1, t[0]); };
    mdl.cov_fn = [](const Vector& t) { return Matrix::Constant(1, 1, t[1]); };
    mdl.mean_derivs = [](const Vector&) {
        return std::vector<Vector>{Vector::Constant(1, 1.0), Vector::Constant(1, 0.0)};
    };
    mdl.cov_derivs = [](const Vector&) {
        return std::vector<Matrix>{Matrix::Constant(1, 1, 0.0), Matrix::Constant(1, 1, 1.0)};
    };
    return mdl;
}

MeanCovModel make_mvnormal(int m, double c_y) {
    // theta = (mu_1..mu_m, then the lower triangle of Sigma in row-major
    // order: Sigma_11, Sigma_21, Sigma_22, Sigma_31, ...).  The reported
    // covariance is c_y * Sigma(theta); c_y = 1 is the normal instance.
    const int d = m + m * (m + 1) / 2;
    MeanCovModel mdl;
    mdl.d = d;
    mdl.m = m;
    mdl.name = "mvnormal";
    mdl.domain_lo = constant_vector(d, -kInf);
    mdl.domain_hi = constant_vector(d, kInf);
    // Diagonal entries of Sigma must stay positive.
    {
        int k = m;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j <= i; ++j, ++k) {
                if (i == j) mdl.domain_lo[k] = 0.0;
            }
        }
    }
    mdl.mean_fn = [m](const Vector& t) { return t.head(m).eval(); };
    mdl.cov_fn = [m, c_y](const Vector& t) {
        Matrix s(m, m);
        int k = m;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j <= i; ++j, ++k) {
                s(i, j) = t[k];
                s(j, i) = t[k];
            }
        }
        return Matrix(c_y * s);
    };
    mdl.mean_derivs = [m, d](const Vector&) {
        std::vector<Vector> dmu(static_cast<std::size_t>(d), Vector::Zero(m));
        for (int i = 0; i < m; ++i) dmu[static_cast<std::size_t>(i)][i] = 1.0;
        return dmu;
    };
    mdl.cov_derivs = [m, d, c_y](const Vector&) {
        std::vector<Matrix> ds(static_cast<std::size_t>(d), Matrix::Zero(m, m));
        int k = m;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j <= i; ++j, ++k) {
                ds[static_cast<std::size_t>(k)](i, j) = c_y;
                ds[static_cast<std::size_t>(k)](j, i) = c_y;
            }
        }
        return ds;
    };
    return mdl;
}

std::optional<MeanCovModel> model_by_name(const std::string& name, int obs_dim) {
    if (name == "exponential") return make_exponential();
    if (name == "poisson") return make_poisson();
    if (name == "normal1d") return make_normal1d();
    if (name == "mvnormal") return make_mvnormal(obs_dim);
    return std::nullopt;
}

ConstraintSet no_constraint(int d) {
    ConstraintSet c;
    c.d = d;
    c.r = 0;
    c.g_fn = [](const Vector&) { return Vector(0); };
    c.jac_fn = [d](const Vector&) { return Matrix::Zero(d, 0); };
    return c;
}

ConstraintSet fix_coordinates(int d, std::vector<std::pair<int, double>> fixes) {
    for (const auto& [idx, v] : fixes) {
        (void)v;
        if (idx < 0 || idx >= d) {
            throw InvalidConstraintError("fixed coordinate index out of range");
        }
    }
    ConstraintSet c;
    c.d = d;
    c.r = static_cast<int>(fixes.size());
    c.fixed_coords = fixes;
    c.g_fn = [fixes](const Vector& t) {
        Vector g(static_cast<Eigen::Index>(fixes.size()));
        for (std::size_t j = 0; j < fixes.size(); ++j) g[static_cast<Eigen::Index>(j)] = t[fixes[j].first] - fixes[j].second;
        return g;
    };
    c.jac_fn = [d, fixes](const Vector&) {
        Matrix G = Matrix::Zero(d, static_cast<Eigen::Index>(fixes.size()));
        for (std::size_t j = 0; j < fixes.size(); ++j) G(fixes[j].first, static_cast<Eigen::Index>(j)) = 1.0;
        return G;
    };
    return c;
}

ConstraintSet point_constraint(const Vector& theta0) {
    std::vector<std::pair<int, double>> fixes;
    fixes.reserve(static_cast<std::size_t>(theta0.size()));
    for (Eigen::Index i = 0; i < theta0.size(); ++i) fixes.emplace_back(static_cast<int>(i), theta0[i]);
    return fix_coordinates(static_cast<int>(theta0.size()), std::move(fixes));
}

ConstraintSet general_constraint(int d, int r,
                                 std::function<Vector(const Vector&)> g,
                                 std::function<Matrix(const Vector&)> jac) {
    ConstraintSet c;
    c.d = d;
    c.r = r;
    c.g_fn = std::move(g);
    if (jac) {
        c.jac_fn = std::move(jac);
    } else {
        auto gf = c.g_fn;
        c.jac_fn = [d, r, gf](const Vector& t) {
            Matrix G(d, r);
            for (int i = 0; i < d; ++i) {
                const double h = 1e-6 * std::max(1.0, std::abs(t[i]));
                Vector tp = t, tm = t;
                tp[i] += h;
                tm[i] -= h;
                G.row(i) = ((gf(tp) - gf(tm)) / (2.0 * h)).transpose();
            }
            return G;
        };
    }
    return c;
}

std::pair<Vector, Matrix> constraint_eval(const ConstraintSet& constraint, const Vector& theta) {
    if (!theta.allFinite()) throw DomainError("theta contains non-finite entries");
    return {constraint.g_fn(theta), constraint.jac_fn(theta)};
}

}  // namespace dpdg
