#include "dpdg/score.hpp"

#include <atomic>
#include <cmath>
#include <cstdlib>
#include <thread>
#include <vector>

#include "dpdg/distributions.hpp"
#include "dpdg/objective.hpp"
#include "dpdg/parallel.hpp"

namespace dpdg {

int worker_count() {
    int hw = static_cast<int>(std::thread::hardware_concurrency());
    if (hw < 1) hw = 1;
    if (const char* env = std::getenv("DPDG_THREADS")) {
        const int cap = std::atoi(env);
        if (cap >= 1 && cap < hw) hw = cap;
    }
    return hw;
}

void parallel_for(std::int64_t n_items, const std::function<void(std::int64_t)>& fn) {
    const int workers = std::min<std::int64_t>(worker_count(), n_items) > 0
                            ? static_cast<int>(std::min<std::int64_t>(worker_count(), n_items))
                            : 1;
    if (workers <= 1) {
        for (std::int64_t i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1);
                if (i >= n_items) return;
                fn(i);
            }
        });
    }
    for (auto& t : pool) t.join();
}

namespace {

constexpr double kExpClamp = -745.0;

// Everything theta-dependent the score needs, factored once per call.
struct ScoreContext {
    Vector mu;
    Eigen::LLT<Matrix> llt;
    double logdet = 0.0;
    std::vector<Vector> dmu;
    std::vector<Matrix> dsigma;
    std::vector<double> trace_sinv_dsigma;  // t_k = tr(Sigma^-1 dSigma_k)
    double coeff = 0.0;  // a*tau/2*|Sigma|^(-tau/2); 1/2 in the tau=0 limit
    double b = 0.0;      // 0 in the tau=0 limit
    double tau = 0.0;
    int d = 0;
};

ScoreContext make_score_context(const MeanCovModel& model, const Vector& theta, double tau) {
    if (tau < 0.0) throw InvalidTauError("tau must be >= 0");
    auto [mu, sigma] = model_eval(model, theta);
    ScoreContext ctx;
    ctx.tau = tau;
    ctx.d = model.d;
    ctx.llt.compute(sigma);
    if (ctx.llt.info() != Eigen::Success) throw NotSpdError("covariance factorization failed");
    const auto& l = ctx.llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) ctx.logdet += 2.0 * std::log(l(i, i));
    ctx.mu = std::move(mu);

    ModelDerivs der = model_derivs(model, theta);
    ctx.dmu = std::move(der.dmu);
    ctx.dsigma = std::move(der.dsigma);
    ctx.trace_sinv_dsigma.resize(static_cast<std::size_t>(model.d));
    for (int k = 0; k < model.d; ++k) {
        ctx.trace_sinv_dsigma[static_cast<std::size_t>(k)] =
            ctx.llt.solve(ctx.dsigma[static_cast<std::size_t>(k)]).trace();
    }

    if (tau == 0.0) {
        ctx.coeff = 0.5;
        ctx.b = 0.0;
    } else {
        const DpdConstants c = dpd_constants(tau, model.m);
        ctx.coeff = c.a * 0.5 * tau * std::exp(-0.5 * tau * ctx.logdet);
        ctx.b = c.b;
    }
    return ctx;
}

void accumulate_psi(const ScoreContext& ctx, const Vector& y, Vector& out) {
    const Vector r = y - ctx.mu;
    const Vector w = ctx.llt.solve(r);
    const double e = [&] {
        if (ctx.tau == 0.0) return 1.0;
        const double expo = -0.5 * ctx.tau * r.dot(w);
        return expo < kExpClamp ? 0.0 : std::exp(expo);
    }();
    for (int k = 0; k < ctx.d; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        const double t_k = ctx.trace_sinv_dsigma[uk];
        const double quad = w.dot(ctx.dsigma[uk] * w);
        out[k] += ctx.coeff * ((-t_k + 2.0 * ctx.dmu[uk].dot(w) + quad) * e + ctx.b * t_k);
    }
}

}  // namespace

Vector psi(const Vector& y, const MeanCovModel& model, const Vector& theta, double tau) {
    if (y.size() != model.m) throw DomainError("observation dimension does not match model");
    const ScoreContext ctx = make_score_context(model, theta, tau);
    Vector out = Vector::Zero(model.d);
    accumulate_psi(ctx, y, out);
    return out;
}

Vector score_sum(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                 double tau) {
    sample.validate();
    if (sample.m() != model.m) throw DomainError("sample dimension does not match model");
    const ScoreContext ctx = make_score_context(model, theta, tau);
    Vector out = Vector::Zero(model.d);
    for (Eigen::Index i = 0; i < sample.n(); ++i) {
        accumulate_psi(ctx, sample.data.row(i).transpose(), out);
    }
    return out;
}

Vector score_u(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
               double tau) {
    return score_sum(sample, model, theta, tau) / (tau + 1.0);
}

Vector grad_h_fd(const SampleMatrix& sample, const MeanCovModel& model, const Vector& theta,
                 double tau, double h) {
    Vector g(model.d);
    for (int i = 0; i < model.d; ++i) {
        Vector tp = theta, tm = theta;
        tp[i] += h;
        tm[i] -= h;
        g[i] = (objective_h(sample, model, tp, tau) - objective_h(sample, model, tm, tau)) /
               (2.0 * h);
    }
    return g;
}

double delta_tau(const MeanCovModel& model, const Vector& theta, double tau, int i) {
    if (i < 0 || i >= model.d) throw DomainError("parameter index out of range");
    auto [mu, sigma] = model_eval(model, theta);
    (void)mu;
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw NotSpdError("covariance factorization failed");
    const ModelDerivs der = model_derivs(model, theta);
    return 0.5 * tau * llt.solve(der.dsigma[static_cast<std::size_t>(i)]).trace();
}

namespace {

struct MatrixContext {
    std::vector<Vector> sinv_dmu;     // Sigma^-1 dmu_k
    std::vector<Matrix> sinv_dsigma;  // Sigma^-1 dSigma_k
    std::vector<double> trace_sd;     // tr(Sigma^-1 dSigma_k)
    std::vector<Vector> dmu;
    double log_norm;  // log((2*pi)^(m/2) |Sigma|^(1/2))
    int d;
};

MatrixContext make_matrix_context(const MeanCovModel& model, const Vector& theta) {
    auto [mu, sigma] = model_eval(model, theta);
    (void)mu;
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw NotSpdError("covariance factorization failed");
    double logdet = 0.0;
    const auto& l = llt.matrixLLT();
    for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += 2.0 * std::log(l(i, i));

    ModelDerivs der = model_derivs(model, theta);
    MatrixContext ctx;
    ctx.d = model.d;
    ctx.log_norm = 0.5 * model.m * std::log(2.0 * M_PI) + 0.5 * logdet;
    ctx.dmu = std::move(der.dmu);
    ctx.sinv_dmu.resize(static_cast<std::size_t>(model.d));
    ctx.sinv_dsigma.resize(static_cast<std::size_t>(model.d));
    ctx.trace_sd.resize(static_cast<std::size_t>(model.d));
    for (int k = 0; k < model.d; ++k) {
        const auto uk = static_cast<std::size_t>(k);
        ctx.sinv_dmu[uk] = llt.solve(ctx.dmu[uk]);
        ctx.sinv_dsigma[uk] = llt.solve(der.dsigma[uk]);
        ctx.trace_sd[uk] = ctx.sinv_dsigma[uk].trace();
    }
    return ctx;
}

}  // namespace

Matrix matrix_j(const MeanCovModel& model, const Vector& theta, double tau) {
    if (tau < 0.0) throw InvalidTauError("tau must be >= 0");
    const MatrixContext ctx = make_matrix_context(model, theta);
    const double pref =
        std::exp(-tau * ctx.log_norm) / std::pow(1.0 + tau, 0.5 * model.m + 2.0);
    Matrix j(model.d, model.d);
    for (int i = 0; i < model.d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double delta_i = 0.5 * tau * ctx.trace_sd[ui];
        for (int k = i; k < model.d; ++k) {
            const auto uk = static_cast<std::size_t>(k);
            const double delta_k = 0.5 * tau * ctx.trace_sd[uk];
            const double mu_term = ctx.dmu[uk].dot(ctx.sinv_dmu[ui]);
            const double sig_term =
                0.5 * (ctx.sinv_dsigma[uk] * ctx.sinv_dsigma[ui]).trace();
            const double val =
                pref * ((tau + 1.0) * mu_term + delta_i * delta_k + sig_term);
            j(i, k) = val;
            j(k, i) = val;
        }
    }
    return j;
}

Matrix matrix_k(const MeanCovModel& model, const Vector& theta, double tau) {
    if (tau < 0.0) throw InvalidTauError("tau must be >= 0");
    const MatrixContext ctx = make_matrix_context(model, theta);
    const double f2 = std::exp(-2.0 * tau * ctx.log_norm);
    const double pref1 = f2 / std::pow(1.0 + 2.0 * tau, 0.5 * model.m + 2.0);
    const double pref2 = f2 / std::pow(1.0 + tau, static_cast<double>(model.m) + 2.0);
    Matrix k(model.d, model.d);
    for (int i = 0; i < model.d; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        const double delta_i = 0.5 * tau * ctx.trace_sd[ui];
        const double delta2_i = tau * ctx.trace_sd[ui];  // Delta at 2*tau
        for (int q = i; q < model.d; ++q) {
            const auto uq = static_cast<std::size_t>(q);
            const double delta_q = 0.5 * tau * ctx.trace_sd[uq];
            const double delta2_q = tau * ctx.trace_sd[uq];
            const double mu_term = ctx.dmu[uq].dot(ctx.sinv_dmu[ui]);
            const double sig_term =
                0.5 * (ctx.sinv_dsigma[uq] * ctx.sinv_dsigma[ui]).trace();
            const double val =
                pref1 * (delta2_i * delta2_q + (1.0 + 2.0 * tau) * mu_term + sig_term) -
                pref2 * delta_i * delta_q;
            k(i, q) = val;
            k(q, i) = val;
        }
    }
    return k;
}

RestrictedCovariance restricted_covariance(const MeanCovModel& model, const Vector& theta,
                                           double tau, const ConstraintSet& constraint) {
    const Matrix j = matrix_j(model, theta, tau);
    const Matrix k = matrix_k(model, theta, tau);
    Eigen::LDLT<Matrix> j_fact(j);
    if (j_fact.info() != Eigen::Success || !j_fact.isPositive()) {
        throw SingularMatrixError("J");
    }
    RestrictedCovariance out;
    if (constraint.r == 0) {
        out.q = Matrix::Zero(model.d, 0);
        out.pstar = j_fact.solve(Matrix::Identity(model.d, model.d));
        out.m = out.pstar * k * out.pstar.transpose();
        return out;
    }
    const Matrix big_g = constraint.jac_fn(theta);
    if (big_g.rows() != model.d || big_g.cols() != constraint.r) {
        throw InvalidConstraintError("constraint Jacobian has wrong shape");
    }
    if (constraint.r == model.d) {
        // Square full-rank G annihilates everything: P* = 0 identically.
        Eigen::FullPivLU<Matrix> lu(big_g);
        if (!lu.isInvertible()) throw RankDeficientConstraintError("G is rank deficient");
        out.q = j_fact.solve(Matrix::Identity(model.d, model.d));
        out.pstar = Matrix::Zero(model.d, model.d);
        out.m = Matrix::Zero(model.d, model.d);
        return out;
    }
    const Matrix jinv_g = j_fact.solve(big_g);
    const Matrix gtjg = big_g.transpose() * jinv_g;  // r x r
    Eigen::FullPivLU<Matrix> lu(gtjg);
    if (!lu.isInvertible()) throw SingularMatrixError("G^T J^-1 G");
    const Matrix jinv = j_fact.solve(Matrix::Identity(model.d, model.d));
    out.q = jinv_g * lu.inverse();
    out.pstar = jinv - out.q * big_g.transpose() * jinv;
    out.m = out.pstar * k * out.pstar.transpose();
    return out;
}

double noncentrality(const MeanCovModel& model, const Vector& theta0, double tau,
                     const Vector& l) {
    if (l.size() != model.d) throw DomainError("shift vector has wrong dimension");
    const Matrix j = matrix_j(model, theta0, tau);
    const Matrix k = matrix_k(model, theta0, tau);
    Eigen::LDLT<Matrix> k_fact(k);
    if (k_fact.info() != Eigen::Success || !k_fact.isPositive()) {
        throw SingularMatrixError("K");
    }
    const Vector jl = j * l;
    return jl.dot(k_fact.solve(jl));
}

ScoreMoments mc_score_moments(const MeanCovModel& model, const Vector& theta, double tau,
                              std::int64_t n_draws, std::uint64_t seed) {
    if (n_draws < 1000) throw DomainError("mc_score_moments needs at least 1000 draws");
    const ScoreContext ctx = make_score_context(model, theta, tau);
    auto [mu, sigma] = model_eval(model, theta);
    Eigen::LLT<Matrix> llt(sigma);
    const Matrix chol_l = llt.matrixL();

    constexpr std::int64_t kBlock = 1 << 15;
    const std::int64_t n_blocks = (n_draws + kBlock - 1) / kBlock;
    const int d = model.d;
    const int m = model.m;

    std::vector<Vector> block_sum(static_cast<std::size_t>(n_blocks));
    std::vector<Matrix> block_outer(static_cast<std::size_t>(n_blocks));

    parallel_for(n_blocks, [&](std::int64_t b) {
        RngStream rng(seed, static_cast<std::uint64_t>(b));
        const std::int64_t lo = b * kBlock;
        const std::int64_t hi = std::min(n_draws, lo + kBlock);
        Vector s = Vector::Zero(d);
        Matrix o = Matrix::Zero(d, d);
        Vector z(m), y(m), p(d);
        for (std::int64_t i = lo; i < hi; ++i) {
            for (int q = 0; q < m; ++q) z[q] = rng.normal();
            y = mu + chol_l * z;
            p.setZero();
            accumulate_psi(ctx, y, p);
            s += p;
            o += p * p.transpose();
        }
        block_sum[static_cast<std::size_t>(b)] = std::move(s);
        block_outer[static_cast<std::size_t>(b)] = std::move(o);
    });

    Vector total = Vector::Zero(d);
    Matrix outer = Matrix::Zero(d, d);
    for (std::int64_t b = 0; b < n_blocks; ++b) {
        total += block_sum[static_cast<std::size_t>(b)];
        outer += block_outer[static_cast<std::size_t>(b)];
    }
    ScoreMoments out;
    const double nn = static_cast<double>(n_draws);
    out.mean = total / nn;
    out.cov = outer / nn - out.mean * out.mean.transpose();
    return out;
}

}  // namespace dpdg
