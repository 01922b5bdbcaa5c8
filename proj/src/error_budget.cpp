#include "dirne/error_budget.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace dirne {

namespace {

bool in_open_unit(double x) { return x > 0.0 && x < 1.0; }

// x·ln(x/p), with 0·ln 0 := 0
double xlogx_over(double x, double p) {
    return x == 0.0 ? 0.0 : x * std::log(x / p);
}

double standard_normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::numbers::sqrt2);
}

}  // namespace

ErrorBudget ErrorBudget::from_soundness(double eps_s, double eps_c, double extractor_fraction) {
    if (!in_open_unit(eps_s) || !in_open_unit(eps_c)) {
        throw std::invalid_argument("error budget: eps_s and eps_c must lie in (0,1)");
    }
    if (!in_open_unit(extractor_fraction)) {
        throw std::invalid_argument("error budget: extractor fraction must lie in (0,1)");
    }
    ErrorBudget b;
    b.eps_s = eps_s;
    b.eps_c = eps_c;
    b.eps_ext = extractor_fraction * eps_s;
    b.eps_h = 0.5 * (eps_s - b.eps_ext);
    b.eps_eat = b.eps_ext + 2.0 * b.eps_h;
    return b;
}

void ErrorBudget::validate() const {
    for (double e : {eps_s, eps_c, eps_ext, eps_h, eps_eat}) {
        if (!in_open_unit(e)) throw std::invalid_argument("error budget: every component must lie in (0,1)");
    }
    if (soundness_compose(eps_eat, eps_ext, eps_h) > eps_s * (1.0 + 1e-12)) {
        throw std::invalid_argument("error budget: eps_s is below max{eps_eat, eps_ext + 2 eps_h}");
    }
}

double binomial_cdf_bound(std::uint64_t n, std::uint64_t k_plus_1, double p) {
    if (n == 0 || k_plus_1 < 1 || k_plus_1 > n) {
        throw std::domain_error("binomial_cdf_bound: need 1 <= k+1 <= n");
    }
    if (!in_open_unit(p)) throw std::domain_error("binomial_cdf_bound: p outside (0,1)");
    const double nd = static_cast<double>(n);
    const double x = static_cast<double>(k_plus_1) / nd;
    // G(x,p) = x ln(x/p) + (1−x) ln((1−x)/(1−p)); clamp the rounding residue.
    const double g = std::max(0.0, xlogx_over(x, p) + xlogx_over(1.0 - x, 1.0 - p));
    const double sign = x > p ? 1.0 : (x < p ? -1.0 : 0.0);
    return standard_normal_cdf(sign * std::sqrt(2.0 * nd * g));
}

double binomial_cdf_exact(std::uint64_t n, std::uint64_t k, double p) {
    if (k >= n) return 1.0;
    if (p <= 0.0) return 1.0;
    if (p >= 1.0) return 0.0;
    const long double lp = std::log(static_cast<long double>(p));
    const long double lq = std::log1p(-static_cast<long double>(p));
    const long double lnf = std::lgamma(static_cast<long double>(n) + 1.0L);
    long double max_term = -INFINITY;
    std::vector<long double> terms;
    terms.reserve(k + 1);
    for (std::uint64_t i = 0; i <= k; ++i) {
        const long double li = static_cast<long double>(i);
        const long double t = lnf - std::lgamma(li + 1.0L) -
                              std::lgamma(static_cast<long double>(n - i) + 1.0L) + li * lp +
                              (static_cast<long double>(n) - li) * lq;
        terms.push_back(t);
        max_term = std::max(max_term, t);
    }
    long double sum = 0.0L;
    for (long double t : terms) sum += std::exp(t - max_term);
    return static_cast<double>(std::min(1.0L, std::exp(max_term) * sum));
}

CompletenessBound completeness_error(std::uint64_t n, double gamma, double omega_exp, double delta) {
    if (n == 0) throw std::domain_error("completeness_error: n must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("completeness_error: gamma outside (0,1]");
    if (!(omega_exp >= 0.0 && omega_exp <= 1.0)) throw std::domain_error("completeness_error: omega_exp outside [0,1]");
    if (!(delta > 0.0)) throw std::domain_error("completeness_error: delta must be positive");

    CompletenessBound out;
    const double nd = static_cast<double>(n);
    const double threshold = nd * gamma * (omega_exp - delta);
    const double p = gamma * omega_exp;
    std::uint64_t k_plus_1;
    if (threshold <= 0.0) {
        out.degenerate = true;
        out.abort_threshold = 0;
        k_plus_1 = 1;
    } else {
        const double k = std::ceil(threshold);
        out.abort_threshold = static_cast<std::uint64_t>(k);
        if (k + 1.0 > nd) {
            out.value = 1.0;
            return out;
        }
        k_plus_1 = out.abort_threshold + 1;
    }
    if (p <= 0.0) {
        out.value = 1.0;
    } else if (p >= 1.0) {
        out.value = 0.0;
    } else {
        out.value = binomial_cdf_bound(n, k_plus_1, p);
    }
    return out;
}

double min_delta_for_completeness(std::uint64_t n, double gamma, double omega_exp, double eps_c) {
    const auto passes = [&](double d) { return completeness_error(n, gamma, omega_exp, d).value <= eps_c; };
    double hi = omega_exp;
    if (!passes(hi)) return omega_exp;
    double lo = omega_exp * 1e-15;
    if (passes(lo)) return lo;
    while (hi / lo - 1.0 > 1e-6) {
        const double mid = std::sqrt(lo * hi);
        if (passes(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

double soundness_compose(double eps_eat, double eps_ext, double eps_h) {
    return std::max(eps_eat, eps_ext + 2.0 * eps_h);
}

double input_randomness(double n, double gamma) {
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::domain_error("input_randomness: gamma outside (0,1]");
    if (!(n >= 0.0)) throw std::domain_error("input_randomness: n must be nonnegative");
    return n * (h_bin(gamma) + 2.0 * gamma) + 2.0;
}

double extractor_error(double k_bits, double m_bits) {
    if (!(m_bits >= 0.0) || !(k_bits >= m_bits)) {
        throw std::invalid_argument("extractor_error: need k >= m >= 0");
    }
    return std::exp2(-(k_bits - m_bits) / 2.0);
}

double extractor_margin(double eps_ext) {
    if (!in_open_unit(eps_ext) && eps_ext != 1.0) {
        throw std::invalid_argument("extractor_margin: eps_ext outside (0,1]");
    }
    return -2.0 * std::log2(eps_ext);
}

double extractable_bits(const EntropyCertificate& cert, double eps_ext) {
    return cert.hmin_lower - extractor_margin(eps_ext);
}

double net_expansion(const EntropyCertificate& cert, double n, double gamma, double eps_ext) {
    return extractable_bits(cert, eps_ext) - input_randomness(n, gamma);
}

}  // namespace dirne
