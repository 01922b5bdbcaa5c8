#include "dirne/entropy_core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dirne/errors.hpp"
#include "dirne/optimizer.hpp"

namespace dirne {

namespace {

constexpr double kLn2 = std::numbers::ln2;
constexpr double kDomainSlack = 1e-12;

// Half-width of the argument of H_bin in rate_chsh: x = 1/2 + u.
double rate_half_width(double q) {
    const double s = std::max(0.0, 16.0 * q * (q - 1.0) + 3.0);
    return 0.5 * std::sqrt(s);
}

void check_quantum(double q, const char* what) {
    if (!(q >= kQuantumMinScore - kDomainSlack && q <= kQuantumMaxScore + kDomainSlack)) {
        throw std::domain_error(std::string(what) + ": score " + std::to_string(q) +
                                " is outside the quantum interval");
    }
}

}  // namespace

double h_bin(double x) {
    if (!(x >= 0.0 && x <= 1.0)) {
        throw std::domain_error("h_bin: argument outside [0,1]");
    }
    if (x == 0.0 || x == 1.0) return 0.0;
    return -(x * std::log2(x) + (1.0 - x) * std::log2(1.0 - x));
}

TestDistribution::TestDistribution(double q) : q_(q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::domain_error("TestDistribution: q outside [0,1]");
    }
}

bool TestDistribution::is_quantum() const {
    return q_ >= kQuantumMinScore && q_ <= kQuantumMaxScore;
}

ScoreDistribution::ScoreDistribution(double gamma, TestDistribution q) : gamma_(gamma), q_(q) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::domain_error("ScoreDistribution: gamma outside (0,1]");
    }
}

double rate_chsh(double q) {
    check_quantum(q, "rate_chsh");
    if (q >= 0.25 && q <= 0.75) return 0.0;
    const double u = rate_half_width(q);
    const double y = 2.0 * u;
    if (y < 0.1) {
        // 1 − H_bin(1/2 + y/2) = (1/ln 2)·Σ_k y^{2k} / (2k(2k−1))
        const double y2 = y * y;
        double power = y2;
        double sum = 0.0;
        for (int k = 1; k < 40; ++k) {
            const double term = power / (2.0 * k * (2.0 * k - 1.0));
            sum += term;
            if (term < 1e-18 * sum) break;
            power *= y2;
        }
        return sum / kLn2;
    }
    return 1.0 - h_bin(std::min(1.0, 0.5 + u));
}

double rate_chsh_derivative(double q) {
    check_quantum(q, "rate_chsh_derivative");
    if (q > 0.25 && q < 0.75) return 0.0;
    // d/dq [1 − H_bin(1/2 + u)] = (8q − 4)·atanh(2u) / (u·ln 2)
    const double u = rate_half_width(q);
    if (u >= 0.5) {
        throw std::domain_error("rate_chsh_derivative: unbounded at the Tsirelson endpoints");
    }
    const double ratio = u < 1e-8 ? 2.0 : std::atanh(2.0 * u) / u;
    return (8.0 * q - 4.0) * ratio / kLn2;
}

MinTradeoffFn::MinTradeoffFn(double gamma, double t, double c_perp)
    : gamma_(gamma), t_(t), c_perp_(c_perp) {
    if (!(gamma > 0.0 && gamma <= 1.0)) {
        throw std::domain_error("MinTradeoffFn: gamma outside (0,1]");
    }
    if (!(t > kQuantumMinScore && t < kQuantumMaxScore)) {
        throw std::domain_error("MinTradeoffFn: tangent point must lie strictly inside the quantum interval");
    }
    if (!std::isfinite(c_perp)) {
        throw std::domain_error("MinTradeoffFn: c_perp must be finite");
    }
    rate_t_ = rate_chsh(t);
    slope_ = rate_chsh_derivative(t);
}

double MinTradeoffFn::f_win() const {
    return g(1.0) / gamma_ + (1.0 - 1.0 / gamma_) * c_perp_;
}

double MinTradeoffFn::f_lose() const {
    return g(0.0) / gamma_ + (1.0 - 1.0 / gamma_) * c_perp_;
}

double g_tangent(const MinTradeoffFn& fn, double q) {
    if (!(q >= 0.0 && q <= 1.0)) {
        throw std::domain_error("g_tangent: q outside [0,1]");
    }
    return fn.g(q);
}

double f_eval(const MinTradeoffFn& fn, const ScoreDistribution& p) {
    if (std::abs(p.gamma() - fn.gamma()) > 1e-12 * fn.gamma()) {
        throw std::invalid_argument("f_eval: distribution and min-tradeoff function disagree on gamma");
    }
    return p.p_none() * fn.f_none() + p.p_win() * fn.f_win() + p.p_lose() * fn.f_lose();
}

TradeoffProperties f_properties(const MinTradeoffFn& fn) {
    const double max_f = std::max({fn.f_win(), fn.f_lose(), fn.f_none()});
    // g_t is affine, so its extremes over the quantum interval sit at the ends.
    const double min_q_f = std::min(fn.g(kQuantumMinScore), fn.g(kQuantumMaxScore));
    return {max_f, min_q_f};
}

double var_bound(const MinTradeoffFn& fn, double q) {
    const double dw = fn.c_perp() - fn.g(1.0);
    const double dl = fn.c_perp() - fn.g(0.0);
    return (q * dw * dw + (1.0 - q) * dl * dl) / fn.gamma();
}

double v_term_from_variance(double var) {
    const double root = std::log2(9.0) + std::sqrt(2.0 + var);
    return 0.5 * kLn2 * root * root;
}

double v_term(const MinTradeoffFn& fn, double q) {
    return v_term_from_variance(var_bound(fn, q));
}

double k_term_log2(const MinTradeoffFn& fn, double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0)) {
        throw std::domain_error("k_term: alpha outside (1,2)");
    }
    const auto props = f_properties(fn);
    const double spread = 1.0 + props.max_f - props.min_q_f;  // base-2 exponent
    // ln(2^spread + e²), split so 2^spread is never formed when it is large.
    double ln_inner;
    if (spread * kLn2 > 2.0) {
        ln_inner = spread * kLn2 + std::log1p(std::exp(2.0 - spread * kLn2));
    } else {
        ln_inner = std::log(std::exp2(spread) + std::exp(2.0));
    }
    const double two_minus = 2.0 - alpha;
    return -std::log2(6.0 * two_minus * two_minus * two_minus * kLn2) + (alpha - 1.0) * spread +
           3.0 * std::log2(ln_inner);
}

double k_term(const MinTradeoffFn& fn, double alpha) {
    const double lg = k_term_log2(fn, alpha);
    if (!(lg < 1023.0)) {
        throw NumericalGuard("k_term: K_alpha overflows double precision (log2 K = " +
                             std::to_string(lg) + ")");
    }
    return std::exp2(lg);
}

double threshold_rate(const MinTradeoffFn& fn, double omega_threshold, ThresholdMode mode) {
    if (!(omega_threshold >= 0.0 && omega_threshold <= 1.0)) {
        throw std::domain_error("threshold_rate: threshold score outside [0,1]");
    }
    const double gamma = fn.gamma();
    const double floor_win = gamma * omega_threshold;
    const auto value = [&](double win, double lose, double none) {
        return win * fn.f_win() + lose * fn.f_lose() + none * fn.f_none();
    };
    if (mode == ThresholdMode::spot_check) {
        return std::min(value(floor_win, gamma - floor_win, 1.0 - gamma), value(gamma, 0.0, 1.0 - gamma));
    }
    std::array<double, 3> vertex_values{
        value(1.0, 0.0, 0.0),
        value(floor_win, 1.0 - floor_win, 0.0),
        value(floor_win, 0.0, 1.0 - floor_win),
    };
    return *std::min_element(vertex_values.begin(), vertex_values.end());
}

void ProtocolParams::validate() const {
    if (n == 0) throw std::invalid_argument("n must be a positive integer");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("gamma must lie in (0,1]");
    if (!(omega_exp >= 0.0 && omega_exp <= 1.0)) throw std::invalid_argument("omega_exp must lie in [0,1]");
    if (!(delta > 0.0)) throw std::invalid_argument("delta must be positive");
    if (!(eps_h > 0.0 && eps_h < 1.0)) throw std::invalid_argument("eps_h must lie in (0,1)");
    if (!(eps_eat > 0.0 && eps_eat < 1.0)) throw std::invalid_argument("eps_eat must lie in (0,1)");
}

double alpha_error_term(double alpha, double eps_eat, double eps_h) {
    // 1 − √(1 − ε²) = −expm1(½·log1p(−ε²))
    const double smoothing = -std::expm1(0.5 * std::log1p(-eps_h * eps_h));
    return alpha / (alpha - 1.0) * (-std::log2(eps_eat) - std::log2(smoothing));
}

EntropyCertificate eat_bound(const EatParams& params, const MinTradeoffFn& fn) {
    const ProtocolParams& p = params.protocol;
    p.validate();
    if (std::abs(p.gamma - fn.gamma()) > 1e-12 * p.gamma) {
        throw std::invalid_argument("eat_bound: parameters and min-tradeoff function disagree on gamma");
    }
    const double threshold_score = std::clamp(p.omega_exp - p.delta, 0.0, 1.0);
    const InnerResult inner = inner_inf(fn, params.alpha);

    EntropyCertificate cert;
    cert.n = p.n;
    cert.alpha = params.alpha;
    cert.t = fn.t();
    cert.c_perp = fn.c_perp();
    cert.threshold_r = threshold_rate(fn, threshold_score, p.threshold_mode);
    cert.inner_inf_value = inner.value;
    cert.inner_q_star = inner.q_star;
    cert.error_term_alpha = alpha_error_term(params.alpha, p.eps_eat, p.eps_h);
    const double n = static_cast<double>(p.n);
    cert.hmin_lower = n * cert.threshold_r + n * cert.inner_inf_value - cert.error_term_alpha;
    cert.rate_per_round = cert.hmin_lower / n;
    return cert;
}

}  // namespace dirne
