#pragma once

#include <cstdint>
#include <initializer_list>

#include "dpdg/model.hpp"

namespace dpdg {

/// Counter-free splittable stream: the state is seeded from
/// (master_seed, stream_id) through an avalanche mix, so any (seed, id)
/// pair reproduces the same draw sequence regardless of which worker
/// consumes it.  A stream is a value type owned by exactly one worker.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id);

    std::uint64_t next_u64();
    double uniform01();    // [0, 1)
    double uniform_pos();  // (0, 1]
    double normal();       // standard normal, Box-Muller with carry
    double exponential(double scale);

private:
    std::uint64_t state_;
    double carry_ = 0.0;
    bool has_carry_ = false;
};

/// Order-independent 64-bit mix of a tuple of words; doubles are hashed by
/// their IEEE-754 bit patterns via hash_f64 below.
std::uint64_t hash64(std::initializer_list<std::uint64_t> words);
std::uint64_t hash_f64(double x);

/// Regularized lower incomplete gamma P(a, x).
double gamma_p(double a, double x);

/// Chi-square CDF; noncentrality > 0 switches to the Poisson-mixture series
/// truncated at relative tail below 1e-12.
double chisq_cdf(double x, int df, double noncentrality = 0.0);

/// Upper-alpha quantile: P(chi2_df > q) = alpha.
double chisq_quantile(int df, double alpha);

/// Two-component exponential scale mixture (1-eps)*Exp(theta0) + eps*Exp(2*theta0).
struct MixtureSpec {
    double theta0;
    double epsilon;
};

SampleMatrix sample_contaminated_exponential(const MixtureSpec& spec, int n, RngStream& rng);

/// n draws from N(mu(theta), Sigma(theta)) via the Cholesky factor.
SampleMatrix sample_model_normal(const MeanCovModel& model, const Vector& theta, int n,
                                 RngStream& rng);

/// Poisson sampler: inversion for theta <= 30, transformed rejection above.
SampleMatrix sample_poisson(double theta, int n, RngStream& rng);

}  // namespace dpdg
