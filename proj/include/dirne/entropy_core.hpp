#pragma once

// Rate functions and the tangent family of min-tradeoff functions for the
// spot-checking CHSH protocol, plus the per-run entropy accumulation bound.
//
// Score alphabet of a round: 1 (test round won), 0 (test round lost),
// ⊥ (generation round). A test distribution is the single number q, the
// probability of winning a test round.

#include <cstdint>
#include <numbers>

namespace dirne {

inline constexpr double kQuantumMinScore = 0.5 - std::numbers::sqrt2 / 4.0;
inline constexpr double kQuantumMaxScore = 0.5 + std::numbers::sqrt2 / 4.0;
inline constexpr double kClassicalScore = 0.75;

/// Binary Shannon entropy in bits, with 0·log 0 := 0.
double h_bin(double x);

class TestDistribution {
public:
    explicit TestDistribution(double q);

    double win() const { return q_; }
    double lose() const { return 1.0 - q_; }
    bool is_quantum() const;

private:
    double q_;
};

/// p(1) = γq, p(0) = γ(1−q), p(⊥) = 1−γ.
class ScoreDistribution {
public:
    ScoreDistribution(double gamma, TestDistribution q);

    double gamma() const { return gamma_; }
    const TestDistribution& test() const { return q_; }
    double p_win() const { return gamma_ * q_.win(); }
    double p_lose() const { return gamma_ * q_.lose(); }
    double p_none() const { return 1.0 - gamma_; }

private:
    double gamma_;
    TestDistribution q_;
};

/// Worst-case single-round entropy (bits) of Alice's output for CHSH win
/// probability q. Throws std::domain_error outside the quantum interval.
double rate_chsh(double q);

/// Closed-form derivative of rate_chsh. At q = 0.75 the right derivative
/// 4/ln 2 is returned, at q = 0.25 the left one.
double rate_chsh_derivative(double q);

/// Tangent of rate_chsh at t, extended affinely to all of [0,1], lifted to the
/// spot-checking score alphabet with free value c_perp on ⊥.
class MinTradeoffFn {
public:
    MinTradeoffFn(double gamma, double t, double c_perp);

    double gamma() const { return gamma_; }
    double t() const { return t_; }
    double c_perp() const { return c_perp_; }
    double slope() const { return slope_; }

    /// g_t(q) = rate(t) + (q − t)·rate'(t).
    double g(double q) const { return rate_t_ + (q - t_) * slope_; }

    double f_win() const;   // f(δ₁)
    double f_lose() const;  // f(δ₀)
    double f_none() const { return c_perp_; }

private:
    double gamma_;
    double t_;
    double c_perp_;
    double rate_t_;
    double slope_;
};

double g_tangent(const MinTradeoffFn& fn, double q);

/// Three-term evaluation of f on a spot-check distribution. Throws
/// std::invalid_argument if p and fn disagree on γ.
double f_eval(const MinTradeoffFn& fn, const ScoreDistribution& p);

struct TradeoffProperties {
    double max_f;    // max over all score distributions
    double min_q_f;  // min over quantum distributions
};

TradeoffProperties f_properties(const MinTradeoffFn& fn);

/// Upper bound (1/γ)·Σₓ q(x)(c_⊥ − g_t(δₓ))² on Var_p(f_t).
double var_bound(const MinTradeoffFn& fn, double q);

/// (ln 2 / 2)·(log₂ 9 + √(2 + var))².
double v_term_from_variance(double var);
double v_term(const MinTradeoffFn& fn, double q);

/// log₂ of the second-order coefficient K_α(f_t); finite for every valid input.
double k_term_log2(const MinTradeoffFn& fn, double alpha);

/// K_α(f_t). Throws NumericalGuard when it is not representable as a double.
double k_term(const MinTradeoffFn& fn, double alpha);

/// Which accepted frequency vectors the threshold rate r must lower-bound.
enum class ThresholdMode {
    /// Frequencies with the spot-check structure freq(⊥) = 1 − γ and
    /// freq(1) ≥ γω. Gives r = g_t(ω) whenever g_t is nondecreasing.
    spot_check,
    /// Every point of the simplex over {1, 0, ⊥} with freq(1) ≥ γω.
    worst_case,
};

/// Exact minimum of the affine map freq ↦ f_t(freq) over the accepted region,
/// found by evaluating its vertices.
double threshold_rate(const MinTradeoffFn& fn, double omega_threshold,
                      ThresholdMode mode = ThresholdMode::worst_case);

/// Run parameters shared by every (α, t, c_⊥) choice.
struct ProtocolParams {
    std::uint64_t n = 0;
    double gamma = 0.0;
    double omega_exp = 0.0;
    double delta = 0.0;
    double eps_h = 0.0;
    double eps_eat = 0.0;
    ThresholdMode threshold_mode = ThresholdMode::spot_check;

    /// Throws std::invalid_argument on out-of-range fields.
    void validate() const;
};

struct EatParams {
    ProtocolParams protocol;
    double alpha = 0.0;
};

struct EntropyCertificate {
    double hmin_lower = 0.0;        // bits
    double rate_per_round = 0.0;    // hmin_lower / n
    double threshold_r = 0.0;       // bits/round
    double error_term_alpha = 0.0;  // bits
    double inner_inf_value = 0.0;   // bits/round
    double inner_q_star = 0.0;
    double alpha = 0.0;
    double t = 0.0;
    double c_perp = 0.0;
    std::uint64_t n = 0;
};

/// α/(α−1)·log₂(1/(ε_EAT·(1 − √(1 − ε_h²)))), evaluated without cancellation.
double alpha_error_term(double alpha, double eps_eat, double eps_h);

/// Smooth min-entropy lower bound for one (α, t, c_⊥) choice. Weak
/// parameters give a non-positive certificate rather than an error.
EntropyCertificate eat_bound(const EatParams& params, const MinTradeoffFn& fn);

}  // namespace dirne
