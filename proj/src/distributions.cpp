#include "dpdg/distributions.hpp"

#include <bit>
#include <cmath>

namespace dpdg {

namespace {

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xbf58476d1ce4e5b9ULL;
    z ^= z >> 27;
    z *= 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return z;
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t stream_id)
    : state_(mix64(master_seed + kGolden * mix64(stream_id + kGolden))) {}

std::uint64_t RngStream::next_u64() {
    // splitmix64 step
    std::uint64_t z = (state_ += kGolden);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

double RngStream::uniform01() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_carry_) {
        has_carry_ = false;
        return carry_;
    }
    const double u1 = uniform_pos();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    carry_ = r * std::sin(a);
    has_carry_ = true;
    return r * std::cos(a);
}

double RngStream::exponential(double scale) {
    return -scale * std::log(uniform_pos());
}

std::uint64_t hash64(std::initializer_list<std::uint64_t> words) {
    std::uint64_t h = 0x2545f4914f6cdd1dULL;
    for (std::uint64_t w : words) {
        h = mix64(h ^ (w + kGolden + (h << 6) + (h >> 2)));
    }
    return h;
}

std::uint64_t hash_f64(double x) {
    return std::bit_cast<std::uint64_t>(x == 0.0 ? 0.0 : x);
}

namespace {

// Regularized incomplete gamma: series for x < a + 1, Lentz continued
// fraction otherwise.
double gamma_p_series(double a, double x) {
    double ap = a;
    double sum = 1.0 / a;
    double del = sum;
    for (int i = 0; i < 1000; ++i) {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if (std::abs(del) < std::abs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 1000; ++i) {
        const double an = -static_cast<double>(i) * (static_cast<double>(i) - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gamma_p(double a, double x) {
    if (x <= 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double chisq_cdf(double x, int df, double noncentrality) {
    if (!(x > 0.0)) return 0.0;
    const double half_x = 0.5 * x;
    if (noncentrality <= 0.0) {
        return gamma_p(0.5 * df, half_x);
    }
    // Poisson(delta/2) mixture over central chi-square CDFs with df + 2j
    // degrees of freedom.  Forward recursion; stop once the remaining
    // Poisson mass times the (decreasing) CDF terms is below 1e-12 relative.
    const double half_d = 0.5 * noncentrality;
    double weight = std::exp(-half_d);
    double weight_sum = weight;
    double cdf = weight * gamma_p(0.5 * df, half_x);
    for (int j = 1; j < 10000; ++j) {
        weight *= half_d / static_cast<double>(j);
        weight_sum += weight;
        const double term = weight * gamma_p(0.5 * df + j, half_x);
        cdf += term;
        const double tail = 1.0 - weight_sum;
        if (tail <= 0.0) break;
        // CDF terms decrease in j, so tail * current term bounds the rest.
        if (tail * gamma_p(0.5 * df + j, half_x) < 1e-12 * std::max(cdf, 1e-300) &&
            weight < 1e-13) {
            break;
        }
    }
    return std::min(cdf, 1.0);
}

double chisq_quantile(int df, double alpha) {
    if (df < 1) throw DomainError("chisq_quantile requires df >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("alpha must lie in (0, 1)");
    const double target = 1.0 - alpha;
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(df));
    while (chisq_cdf(hi, df) < target) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chisq_cdf(mid, df) < target) {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

SampleMatrix sample_contaminated_exponential(const MixtureSpec& spec, int n, RngStream& rng) {
    if (n < 1) throw DomainError("sample size must be >= 1");
    if (!(spec.theta0 > 0.0)) throw DomainError("mixture theta0 must be positive");
    if (spec.epsilon < 0.0 || spec.epsilon > 1.0) throw DomainError("epsilon must lie in [0, 1]");
    Matrix data(n, 1);
    for (int i = 0; i < n; ++i) {
        const double scale = (rng.uniform01() < spec.epsilon) ? 2.0 * spec.theta0 : spec.theta0;
        data(i, 0) = rng.exponential(scale);
    }
    return SampleMatrix(std::move(data));
}

SampleMatrix sample_model_normal(const MeanCovModel& model, const Vector& theta, int n,
                                 RngStream& rng) {
    if (n < 1) throw DomainError("sample size must be >= 1");
    auto [mu, sigma] = model_eval(model, theta);
    Eigen::LLT<Matrix> llt(sigma);
    if (llt.info() != Eigen::Success) throw NotSpdError("covariance not SPD in sampler");
    const Matrix chol_l = llt.matrixL();
    const int m = model.m;
    Matrix data(n, m);
    Vector z(m);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) z[j] = rng.normal();
        data.row(i) = (mu + chol_l * z).transpose();
    }
    return SampleMatrix(std::move(data));
}

namespace {

int poisson_inversion(double theta, RngStream& rng) {
    const double limit = std::exp(-theta);
    int k = 0;
    double p = rng.uniform01();
    while (p > limit) {
        p *= rng.uniform01();
        ++k;
    }
    return k;
}

// Transformed rejection with squeeze (Hormann's PTRS), exact for theta >= 10.
int poisson_ptrs(double theta, RngStream& rng) {
    const double b = 0.931 + 2.53 * std::sqrt(theta);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_theta = std::log(theta);
    for (;;) {
        double u = rng.uniform01() - 0.5;
        double v = rng.uniform01();
        const double us = 0.5 - std::abs(u);
        const double k = std::floor((2.0 * a / us + b) * u + theta + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<int>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        const double lhs = std::log(v * inv_alpha / (a / (us * us) + b));
        const double rhs = -theta + k * log_theta - std::lgamma(k + 1.0);
        if (lhs <= rhs) return static_cast<int>(k);
    }
}

}  // namespace

SampleMatrix sample_poisson(double theta, int n, RngStream& rng) {
    if (n < 1) throw DomainError("sample size must be >= 1");
    if (!(theta > 0.0)) throw DomainError("poisson theta must be positive");
    Matrix data(n, 1);
    for (int i = 0; i < n; ++i) {
        const int k = theta <= 30.0 ? poisson_inversion(theta, rng) : poisson_ptrs(theta, rng);
        data(i, 0) = static_cast<double>(k);
    }
    return SampleMatrix(std::move(data));
}

}  // namespace dpdg
