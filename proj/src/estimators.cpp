#include "dpdg/estimators.hpp"

#include <algorithm>
#include <cmath>

#include "dpdg/objective.hpp"
#include "dpdg/score.hpp"

namespace dpdg {

namespace {

Vector clamp_to_domain(const MeanCovModel& model, Vector theta, double margin = 1e-6) {
    for (int i = 0; i < model.d; ++i) {
        const double lo = model.domain_lo[i];
        const double hi = model.domain_hi[i];
        const double scale = std::max(1.0, std::abs(theta[i]));
        if (std::isfinite(lo) && theta[i] <= lo) theta[i] = lo + margin * scale;
        if (std::isfinite(hi) && theta[i] >= hi) theta[i] = hi - margin * scale;
    }
    return theta;
}

double objective_or_lowest(const SampleMatrix& sample, const MeanCovModel& model,
                           const Vector& theta, double tau) {
    try {
        return objective_h(sample, model, theta, tau);
    } catch (const Error&) {
        return -std::numeric_limits<double>::infinity();
    }
}

struct NewtonResult {
    Vector theta;
    double h_value = -std::numeric_limits<double>::infinity();
    bool converged = false;
    int iterations = 0;
};

// Ascent on H: Newton direction from a finite-difference Hessian of the
// analytic gradient, steepest ascent when that direction is unusable,
// backtracking clipped to the domain box.
NewtonResult newton_maximize(const SampleMatrix& sample, const MeanCovModel& model, double tau,
                             Vector theta, double tol, int max_iter) {
    const double n = static_cast<double>(sample.n());
    NewtonResult res;
    theta = clamp_to_domain(model, std::move(theta));
    double h_cur = objective_or_lowest(sample, model, theta, tau);
    if (!std::isfinite(h_cur)) {
        res.theta = theta;
        return res;
    }
    for (int it = 0; it < max_iter; ++it) {
        res.iterations = it + 1;
        const Vector s = score_sum(sample, model, theta, tau);
        if (s.lpNorm<Eigen::Infinity>() < tol * n) {
            res.converged = true;
            break;
        }
        const Vector grad = s / n;

        Matrix hess(model.d, model.d);
        bool hess_ok = true;
        for (int j = 0; j < model.d; ++j) {
            const double hj = 1e-5 * std::max(1.0, std::abs(theta[j]));
            Vector tp = clamp_to_domain(model, theta), tm = tp;
            tp[j] += hj;
            tm[j] -= hj;
            if (!model.in_domain(tp) || !model.in_domain(tm)) {
                hess_ok = false;
                break;
            }
            hess.col(j) = (score_sum(sample, model, tp, tau) -
                           score_sum(sample, model, tm, tau)) /
                          (2.0 * hj * n);
        }
        Vector dir;
        if (hess_ok) {
            hess = 0.5 * (hess + hess.transpose()).eval();
            Eigen::LDLT<Matrix> fact(Matrix(-hess));
            if (fact.info() == Eigen::Success && fact.isPositive()) {
                dir = fact.solve(grad);
            }
        }
        if (dir.size() == 0 || dir.dot(grad) <= 0.0 || !dir.allFinite()) {
            dir = grad;  // steepest ascent fallback
        }

        double step = 1.0;
        bool moved = false;
        const double slope = grad.dot(dir);
        for (int ls = 0; ls < 60; ++ls) {
            Vector cand = clamp_to_domain(model, theta + step * dir);
            if (model.in_domain(cand)) {
                const double h_new = objective_or_lowest(sample, model, cand, tau);
                if (h_new > h_cur + 1e-4 * step * slope && std::isfinite(h_new)) {
                    theta = std::move(cand);
                    h_cur = h_new;
                    moved = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if (!moved) break;  // stalled
    }
    res.theta = theta;
    res.h_value = h_cur;
    return res;
}

// Golden-section sweep for d = 1; used when Newton stalls away from a root.
NewtonResult golden_maximize(const SampleMatrix& sample, const MeanCovModel& model, double tau,
                             double center, double tol, int max_iter) {
    const double lo_bound = model.domain_lo[0];
    double a = std::isfinite(lo_bound) ? lo_bound + 1e-8 * std::max(1.0, std::abs(center))
                                       : center - 8.0 * std::max(1.0, std::abs(center));
    double b = center;
    auto value = [&](double x) {
        Vector t(1);
        t[0] = x;
        return objective_or_lowest(sample, model, t, tau);
    };
    // Expand to the right until the objective drops.
    double fb = value(b);
    double width = std::max(1.0, std::abs(center));
    for (int i = 0; i < 60; ++i) {
        const double nb = b + width;
        const double fnb = value(nb);
        if (fnb < fb) {
            b = nb;
            break;
        }
        b = nb;
        fb = fnb;
        width *= 1.6;
    }
    const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
    double x1 = b - gr * (b - a);
    double x2 = a + gr * (b - a);
    double f1 = value(x1), f2 = value(x2);
    for (int i = 0; i < 200 && (b - a) > 1e-12 * std::max(1.0, std::abs(b)); ++i) {
        if (f1 < f2) {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = value(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = value(x1);
        }
    }
    Vector t(1);
    t[0] = 0.5 * (a + b);
    return newton_maximize(sample, model, tau, t, tol, max_iter);
}

std::vector<Vector> start_multiset(const MeanCovModel& model, const Vector& base) {
    std::vector<Vector> starts{base};
    for (double f : {0.25, -0.25, 0.5, -0.5}) {
        Vector s = base;
        for (int i = 0; i < model.d; ++i) s[i] += f * std::max(1.0, std::abs(base[i]));
        starts.push_back(clamp_to_domain(model, std::move(s)));
    }
    return starts;
}

void fill_unconstrained_covariance(const SampleMatrix& sample, const MeanCovModel& model,
                                   double tau, EstimateReport& rep) {
    const Matrix j = matrix_j(model, rep.theta_hat, tau);
    const Matrix k = matrix_k(model, rep.theta_hat, tau);
    Eigen::LDLT<Matrix> fact(j);
    if (fact.info() != Eigen::Success || !fact.isPositive()) throw SingularMatrixError("J");
    const Matrix jinv = fact.solve(Matrix::Identity(model.d, model.d));
    rep.asym_cov = jinv * k * jinv / static_cast<double>(sample.n());
    rep.std_errors = rep.asym_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
}

}  // namespace

Vector plug_in_start(const SampleMatrix& sample, const MeanCovModel& model) {
    sample.validate();
    const Vector mean = sample.data.colwise().mean();
    Vector theta;
    if (model.name == "exponential" || model.name == "poisson") {
        theta = Vector::Constant(1, std::max(mean[0], 1e-3));
    } else if (model.name == "normal1d") {
        const double n = static_cast<double>(sample.n());
        double var = (sample.data.col(0).array() - mean[0]).square().sum() / std::max(n, 2.0);
        theta = Vector(2);
        theta << mean[0], std::max(var, 1e-6);
    } else if (model.name == "mvnormal") {
        const int m = model.m;
        const double n = static_cast<double>(sample.n());
        Matrix centered = sample.data.rowwise() - mean.transpose();
        Matrix cov = centered.transpose() * centered / std::max(n, 2.0);
        Eigen::LLT<Matrix> llt(cov);
        if (llt.info() != Eigen::Success) {
            throw NotSpdError("sample covariance is not positive definite");
        }
        theta = Vector(model.d);
        theta.head(m) = mean;
        int k = m;
        for (int i = 0; i < m; ++i) {
            for (int j = 0; j <= i; ++j, ++k) theta[k] = cov(i, j);
        }
    } else {
        theta = Vector::Ones(model.d);
    }
    return clamp_to_domain(model, std::move(theta));
}

EstimateReport fit_mdpdge(const SampleMatrix& sample, const MeanCovModel& model, double tau,
                          const FitOptions& opts) {
    sample.validate();
    const Vector base = opts.theta0 ? clamp_to_domain(model, *opts.theta0)
                                    : plug_in_start(sample, model);
    if (!model.in_domain(base)) throw DomainError("start outside model domain");

    NewtonResult best;
    int total_iters = 0;
    for (const Vector& s : start_multiset(model, base)) {
        NewtonResult r = newton_maximize(sample, model, tau, s, opts.tol, opts.max_iter);
        total_iters += r.iterations;
        if (r.h_value > best.h_value || (r.converged && !best.converged &&
                                         r.h_value >= best.h_value - 1e-12)) {
            best = std::move(r);
        }
    }
    if (!best.converged && model.d == 1) {
        NewtonResult r = golden_maximize(sample, model, tau, base[0], opts.tol, opts.max_iter);
        total_iters += r.iterations;
        if (r.h_value >= best.h_value) best = std::move(r);
    }

    EstimateReport rep;
    rep.theta_hat = best.theta;
    rep.tau = tau;
    rep.lambda = Vector(0);
    rep.converged = best.converged;
    rep.iterations = total_iters;
    rep.score_norm =
        score_sum(sample, model, best.theta, tau).lpNorm<Eigen::Infinity>();
    rep.kkt_residual = rep.score_norm / static_cast<double>(sample.n());
    fill_unconstrained_covariance(sample, model, tau, rep);
    return rep;
}

double kkt_residual(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                    double tau, const ConstraintSet& constraint, const Vector& lambda) {
    const Vector grad = score_sum(sample, model, theta, tau) / static_cast<double>(sample.n());
    if (constraint.r == 0) return grad.lpNorm<Eigen::Infinity>();
    auto [g, big_g] = constraint_eval(constraint, theta);
    const Vector stat = grad + big_g * lambda;
    return std::max(stat.lpNorm<Eigen::Infinity>(), g.lpNorm<Eigen::Infinity>());
}

namespace {

// Reduced view over the free coordinates when the constraint just pins some
// of them; solves the fixed coordinates exactly.
EstimateReport fit_fixed_coords(const SampleMatrix& sample, const MeanCovModel& model,
                                double tau, const ConstraintSet& constraint,
                                const FitOptions& opts) {
    std::vector<bool> is_fixed(static_cast<std::size_t>(model.d), false);
    Vector full = Vector::Zero(model.d);
    for (const auto& [idx, v] : constraint.fixed_coords) {
        is_fixed[static_cast<std::size_t>(idx)] = true;
        full[idx] = v;
    }
    std::vector<int> free_idx;
    for (int i = 0; i < model.d; ++i) {
        if (!is_fixed[static_cast<std::size_t>(i)]) free_idx.push_back(i);
    }

    EstimateReport rep;
    rep.tau = tau;

    if (free_idx.empty()) {
        rep.theta_hat = full;
        check_domain(model, full);
        rep.converged = true;
        rep.iterations = 0;
    } else {
        auto assemble = [&, full](const Vector& tf) {
            Vector t = full;
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                t[free_idx[j]] = tf[static_cast<Eigen::Index>(j)];
            }
            return t;
        };
        MeanCovModel sub;
        sub.d = static_cast<int>(free_idx.size());
        sub.m = model.m;
        sub.name = model.name + "/reduced";
        sub.domain_lo = Vector(sub.d);
        sub.domain_hi = Vector(sub.d);
        for (std::size_t j = 0; j < free_idx.size(); ++j) {
            sub.domain_lo[static_cast<Eigen::Index>(j)] = model.domain_lo[free_idx[j]];
            sub.domain_hi[static_cast<Eigen::Index>(j)] = model.domain_hi[free_idx[j]];
        }
        sub.mean_fn = [&model, assemble](const Vector& tf) { return model.mean_fn(assemble(tf)); };
        sub.cov_fn = [&model, assemble](const Vector& tf) { return model.cov_fn(assemble(tf)); };
        sub.mean_derivs = [&model, assemble, free_idx](const Vector& tf) {
            ModelDerivs d = model_derivs(model, assemble(tf));
            std::vector<Vector> out;
            out.reserve(free_idx.size());
            for (int i : free_idx) out.push_back(d.dmu[static_cast<std::size_t>(i)]);
            return out;
        };
        sub.cov_derivs = [&model, assemble, free_idx](const Vector& tf) {
            ModelDerivs d = model_derivs(model, assemble(tf));
            std::vector<Matrix> out;
            out.reserve(free_idx.size());
            for (int i : free_idx) out.push_back(d.dsigma[static_cast<std::size_t>(i)]);
            return out;
        };

        FitOptions sub_opts;
        sub_opts.tol = opts.tol;
        sub_opts.max_iter = opts.max_iter;
        if (opts.theta0) {
            Vector tf(sub.d);
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                tf[static_cast<Eigen::Index>(j)] = (*opts.theta0)[free_idx[j]];
            }
            sub_opts.theta0 = tf;
        } else {
            const Vector plug = plug_in_start(sample, model);
            Vector tf(sub.d);
            for (std::size_t j = 0; j < free_idx.size(); ++j) {
                tf[static_cast<Eigen::Index>(j)] = plug[free_idx[j]];
            }
            sub_opts.theta0 = tf;
        }
        const EstimateReport sub_rep = fit_mdpdge(sample, sub, tau, sub_opts);
        rep.theta_hat = assemble(sub_rep.theta_hat);
        rep.converged = sub_rep.converged;
        rep.iterations = sub_rep.iterations;
    }

    const Vector grad =
        score_sum(sample, model, rep.theta_hat, tau) / static_cast<double>(sample.n());
    rep.lambda = Vector(constraint.r);
    for (int j = 0; j < constraint.r; ++j) {
        rep.lambda[j] = -grad[constraint.fixed_coords[static_cast<std::size_t>(j)].first];
    }
    rep.score_norm =
        score_sum(sample, model, rep.theta_hat, tau).lpNorm<Eigen::Infinity>();
    rep.kkt_residual = kkt_residual(sample, model, rep.theta_hat, tau, constraint, rep.lambda);
    const RestrictedCovariance rc =
        restricted_covariance(model, rep.theta_hat, tau, constraint);
    rep.asym_cov = rc.m / static_cast<double>(sample.n());
    rep.std_errors = rep.asym_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return rep;
}

void check_constraint_rank(const Matrix& big_g) {
    Eigen::JacobiSVD<Matrix> svd(big_g);
    const auto& sv = svd.singularValues();
    if (sv.size() == 0 || sv(sv.size() - 1) < 1e-10 * std::max(1.0, sv(0))) {
        throw RankDeficientConstraintError("G lost rank along the solution path");
    }
}

}  // namespace

EstimateReport fit_rmdpdge(const SampleMatrix& sample, const MeanCovModel& model, double tau,
                           const ConstraintSet& constraint, const FitOptions& opts) {
    sample.validate();
    if (constraint.d != model.d) throw InvalidConstraintError("constraint dimension mismatch");
    if (constraint.r == 0) {
        EstimateReport rep = fit_mdpdge(sample, model, tau, opts);
        return rep;
    }
    if (!constraint.fixed_coords.empty()) {
        return fit_fixed_coords(sample, model, tau, constraint, opts);
    }

    const double n = static_cast<double>(sample.n());
    const int d = model.d;
    const int r = constraint.r;

    Vector theta = opts.theta0 ? clamp_to_domain(model, *opts.theta0)
                               : plug_in_start(sample, model);
    // Gauss-Newton projection toward the feasible manifold.
    for (int it = 0; it < 50; ++it) {
        auto [g, big_g] = constraint_eval(constraint, theta);
        if (g.lpNorm<Eigen::Infinity>() < 1e-12) break;
        check_constraint_rank(big_g);
        const Matrix gtg = big_g.transpose() * big_g;
        theta = clamp_to_domain(model, theta - big_g * gtg.ldlt().solve(g));
    }

    Vector grad = score_sum(sample, model, theta, tau) / n;
    Matrix big_g = constraint.jac_fn(theta);
    check_constraint_rank(big_g);
    Vector lambda = (big_g.transpose() * big_g)
                        .ldlt()
                        .solve(-(big_g.transpose() * grad));

    auto residual = [&](const Vector& th, const Vector& lm) {
        Vector f(d + r);
        const Vector gr = score_sum(sample, model, th, tau) / n;
        auto [g, gg] = constraint_eval(constraint, th);
        f.head(d) = gr + gg * lm;
        f.tail(r) = g;
        return f;
    };

    EstimateReport rep;
    rep.tau = tau;
    rep.converged = false;
    Vector f = residual(theta, lambda);
    int iters = 0;
    for (int it = 0; it < opts.max_iter; ++it) {
        iters = it + 1;
        if (std::max(f.head(d).lpNorm<Eigen::Infinity>(), f.tail(r).lpNorm<Eigen::Infinity>()) <
            opts.tol) {
            rep.converged = true;
            break;
        }
        Matrix jac(d + r, d + r);
        for (int j = 0; j < d + r; ++j) {
            const double hj =
                1e-6 * std::max(1.0, std::abs(j < d ? theta[j] : lambda[j - d]));
            Vector tp = theta, tm = theta, lp = lambda, lm = lambda;
            if (j < d) {
                tp[j] += hj;
                tm[j] -= hj;
            } else {
                lp[j - d] += hj;
                lm[j - d] -= hj;
            }
            jac.col(j) = (residual(clamp_to_domain(model, tp), lp) -
                          residual(clamp_to_domain(model, tm), lm)) /
                         (2.0 * hj);
        }
        Eigen::FullPivLU<Matrix> lu(jac);
        if (!lu.isInvertible()) throw SingularMatrixError("KKT Jacobian");
        const Vector step = lu.solve(-f);
        double t = 1.0;
        const double merit0 = f.squaredNorm();
        bool moved = false;
        for (int ls = 0; ls < 50; ++ls) {
            Vector th_new = clamp_to_domain(model, theta + t * step.head(d));
            Vector lm_new = lambda + t * step.tail(r);
            if (model.in_domain(th_new)) {
                Vector f_new = residual(th_new, lm_new);
                if (f_new.squaredNorm() < merit0 * (1.0 - 1e-4 * t)) {
                    theta = std::move(th_new);
                    lambda = std::move(lm_new);
                    f = std::move(f_new);
                    moved = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if (!moved) break;
    }

    rep.theta_hat = theta;
    rep.lambda = lambda;
    rep.iterations = iters;
    rep.score_norm = score_sum(sample, model, theta, tau).lpNorm<Eigen::Infinity>();
    rep.kkt_residual = kkt_residual(sample, model, theta, tau, constraint, lambda);
    const RestrictedCovariance rc = restricted_covariance(model, theta, tau, constraint);
    rep.asym_cov = rc.m / n;
    rep.std_errors = rep.asym_cov.diagonal().cwiseMax(0.0).cwiseSqrt();
    return rep;
}

}  // namespace dpdg
