#include <cmath>
#include <stdexcept>
#include <random>

#include "doctest.h"
#include "dirne/entropy_core.hpp"
#include "dirne/errors.hpp"
#include "dirne/optimizer.hpp"

using namespace dirne;
using doctest::Approx;

TEST_CASE("binary entropy") {
    CHECK(h_bin(0.5) == 1.0);
    CHECK(h_bin(0.0) == 0.0);
    CHECK(h_bin(1.0) == 0.0);
    CHECK(h_bin(0.11) == Approx(0.49991595816452799564).epsilon(1e-14));
    CHECK_THROWS_AS(h_bin(-0.1), std::domain_error);
    CHECK_THROWS_AS(h_bin(1.5), std::domain_error);
}

TEST_CASE("rate function values") {
    CHECK(rate_chsh(0.75) == 0.0);
    CHECK(rate_chsh(0.5) == 0.0);
    CHECK(rate_chsh(kQuantumMaxScore) == Approx(1.0).epsilon(1e-12));
    CHECK(rate_chsh(0.80) == Approx(0.34611243579453872305).epsilon(1e-13));
    // symmetric under q -> 1 - q
    CHECK(rate_chsh(0.2) == Approx(rate_chsh(0.8)).epsilon(1e-13));
    CHECK_THROWS_AS(rate_chsh(0.9), std::domain_error);
    CHECK_THROWS_AS(rate_chsh(0.1), std::domain_error);
}

TEST_CASE("rate derivative matches finite differences") {
    CHECK(rate_chsh_derivative(0.78) == Approx(7.1140286092971557732).epsilon(1e-12));
    for (double t : {0.7502, 0.76, 0.8, 0.84}) {
        const double h = 1e-7;
        const double fd = (rate_chsh(t + h) - rate_chsh(t - h)) / (2 * h);
        CHECK(rate_chsh_derivative(t) == Approx(fd).epsilon(1e-6));
    }
    CHECK(rate_chsh_derivative(0.6) == 0.0);
}

TEST_CASE("rate is convex and nondecreasing above the classical bound") {
    const int points = 1000;
    const double lo = 0.75;
    const double hi = kQuantumMaxScore;
    const double step = (hi - lo) / points;
    int violations = 0;
    for (int i = 1; i < points; ++i) {
        const double q = lo + i * step;
        const double mid = rate_chsh(q);
        const double avg = 0.5 * (rate_chsh(q - step) + rate_chsh(q + step));
        if (mid > avg + 1e-10) ++violations;
        if (rate_chsh(q + step) < mid - 1e-15) ++violations;
    }
    CHECK(violations == 0);
}

TEST_CASE("tangent lies below the rate curve") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> tdist(kQuantumMinScore + 1e-4, kQuantumMaxScore - 1e-4);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
        const MinTradeoffFn fn(0.5, tdist(rng), 0.0);
        CHECK(g_tangent(fn, fn.t()) == Approx(rate_chsh(fn.t())).epsilon(1e-14));
        for (int i = 0; i <= 400; ++i) {
            const double q = kQuantumMinScore + (kQuantumMaxScore - kQuantumMinScore) * i / 400.0;
            if (g_tangent(fn, q) > rate_chsh(q) + 1e-12) ++violations;
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("tangent value against a finite-difference slope") {
    const MinTradeoffFn fn(1e-4, 0.78, 0.2);
    CHECK(g_tangent(fn, 0.83) == Approx(0.54791350904527563709).epsilon(1e-6));
    CHECK_THROWS_AS(g_tangent(fn, 1.2), std::domain_error);
    CHECK_THROWS_AS(MinTradeoffFn(1e-4, kQuantumMaxScore, 0.0), std::domain_error);
}

TEST_CASE("spot-check evaluation equals the tangent") {
    const MinTradeoffFn fn(1e-4, 0.78, 0.2);
    const ScoreDistribution p(1e-4, TestDistribution(0.76));
    CHECK(f_eval(fn, p) == Approx(0.049931506394417938712).epsilon(1e-9));

    const MinTradeoffFn full(1.0, 0.78, 3.0);
    CHECK(f_eval(full, ScoreDistribution(1.0, TestDistribution(0.8))) == Approx(g_tangent(full, 0.8)).epsilon(1e-13));

    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    int violations = 0;
    for (int trial = 0; trial < 500; ++trial) {
        const double gamma = std::pow(10.0, -4.0 * u(rng));
        const double t = 0.7501 + 0.1 * u(rng);
        const double c = -2.0 + 4.0 * u(rng);
        const double q = u(rng);
        const MinTradeoffFn f(gamma, t, c);
        const double lhs = f_eval(f, ScoreDistribution(gamma, TestDistribution(q)));
        // γ·f_win and γ·f_lose are of the size of g and c
        const double scale = 1.0 + std::abs(c) + std::abs(f.g(1.0)) + std::abs(f.g(0.0));
        if (std::abs(lhs - g_tangent(f, q)) > 1e-12 * scale) ++violations;
        if (trial == 0) CHECK(f_eval(f, ScoreDistribution(gamma, TestDistribution(t))) == Approx(rate_chsh(t)));
    }
    CHECK(violations == 0);
    CHECK_THROWS_AS(f_eval(fn, ScoreDistribution(2e-4, TestDistribution(0.76))), std::invalid_argument);
}

TEST_CASE("min-tradeoff properties") {
    const MinTradeoffFn fn(1e-4, 0.78, 0.2);
    const auto props = f_properties(fn);
    CHECK(props.max_f == Approx(15573.183726257353242865996841546146501).epsilon(1e-12));
    CHECK(props.min_q_f == Approx(-4.3149048676174040207479931141471882278).epsilon(1e-12));
    // positive slope puts the maximum at the winning outcome
    CHECK(fn.slope() > 0);
    CHECK(fn.f_win() > fn.f_lose());
    CHECK(var_bound(fn, 0.75) == Approx(95381.9639682167777).epsilon(1e-12));

    const MinTradeoffFn one(1.0, 0.8, 0.0);
    const MinTradeoffFn pinned(1.0, 0.8, one.g(1.0));
    CHECK(var_bound(pinned, 1.0) == Approx(0.0).epsilon(1e-20));
    const double dl = pinned.c_perp() - pinned.g(0.0);
    CHECK(var_bound(pinned, 0.3) == Approx(0.7 * dl * dl));
}

TEST_CASE("second-order term") {
    CHECK(v_term_from_variance(0.0) == Approx(7.2830105381491179048).epsilon(1e-14));
    const MinTradeoffFn fn(1e-4, 0.78, 0.2);
    CHECK(v_term(fn, 0.7508) == Approx(33659.946618542755313).epsilon(1e-12));
    double prev = v_term_from_variance(0.0);
    for (double v = 0.5; v < 1e6; v *= 1.7) {
        const double cur = v_term_from_variance(v);
        CHECK(cur >= prev);
        prev = cur;
    }
}

TEST_CASE("third-order term") {
    const MinTradeoffFn fn(1e-4, 0.78, 0.2);
    CHECK(k_term(fn, 1.0 + 1e-6) == Approx(306032374076.6685374).epsilon(1e-10));
    CHECK(k_term(fn, 1.0 + 1e-14) == Approx(302744647171.24164898).epsilon(1e-9));
    double prev = 0.0;
    for (double a = 1.01; a < 2.0; a += 0.02) {
        const double cur = k_term_log2(fn, a);
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK_THROWS_AS(k_term(fn, 1.0), std::domain_error);
    // (α−1)·(1+Max−Min) ≈ 0.9·15578 bits does not fit a double
    CHECK_THROWS_AS(k_term(fn, 1.9), NumericalGuard);
    CHECK(std::isfinite(k_term_log2(fn, 1.9)));
}

TEST_CASE("threshold rate over the constrained simplex") {
    const MinTradeoffFn fn(1e-4, 0.78, 0.2);
    const double omega = 0.7506;
    const double gw = fn.gamma() * omega;
    const double r = threshold_rate(fn, omega, ThresholdMode::worst_case);

    // the vertex argument: f_win ≥ c ≥ f_lose here, so the minimum sits at (γω, 1−γω, 0)
    REQUIRE(fn.f_win() >= fn.c_perp());
    REQUIRE(fn.f_lose() <= fn.c_perp());
    CHECK(r == Approx(gw * fn.f_win() + (1 - gw) * fn.f_lose()).epsilon(1e-12));

    // brute-force grid over freq(1) ∈ [γω, 1], freq(0) ∈ [0, 1 − freq(1)]
    double best = INFINITY;
    const int steps = 10000;
    for (int i = 0; i <= steps; ++i) {
        const double f1 = gw + (1 - gw) * i / steps;
        for (int j = 0; j <= steps - i; j += 50) {
            const double f0 = (1 - f1) * j / std::max(1, steps - i);
            best = std::min(best, f1 * fn.f_win() + f0 * fn.f_lose() + (1 - f1 - f0) * fn.c_perp());
        }
        best = std::min(best, f1 * fn.f_win() + (1 - f1) * fn.f_lose());
    }
    CHECK(r <= best + 1e-9);
    CHECK(best - r <= 1e-4 * (std::abs(fn.f_win()) + std::abs(fn.f_lose())));

    // γω = 0: corners δ₀ and δ⊥
    CHECK(threshold_rate(fn, 0.0, ThresholdMode::worst_case) == Approx(std::min(fn.f_lose(), fn.c_perp())));

    // spot-check structure: rate at the threshold score
    CHECK(threshold_rate(fn, omega, ThresholdMode::spot_check) == Approx(fn.g(omega)).epsilon(1e-10));
}

TEST_CASE("error term") {
    // 1 − √(1 − ε²) ≈ ε²/2 for small ε
    const double lt = -std::log2(2e-6) - std::log2(0.5e-12);
    CHECK(alpha_error_term(1.001, 2e-6, 1e-6) == Approx(1001.0 * lt).epsilon(1e-12));
    CHECK(alpha_error_term(1.001, 2e-6, 1e-6) == Approx(59854.500413686721).epsilon(1e-9));
}

TEST_CASE("certificate bookkeeping on a small instance") {
    ProtocolParams p;
    p.n = 1'000'000;
    p.gamma = 1e-2;
    p.omega_exp = 0.84;
    p.delta = 1e-2;
    p.eps_h = 1e-6;
    p.eps_eat = 2e-6;
    const MinTradeoffFn probe(1e-2, 0.83, 0.0);
    const MinTradeoffFn fn(1e-2, 0.83, probe.g(0.83));
    CHECK(fn.c_perp() == Approx(0.637118348099229).epsilon(1e-13));
    const double alpha = 1.001;

    p.threshold_mode = ThresholdMode::spot_check;
    const auto cert = eat_bound({p, alpha}, fn);
    CHECK(cert.threshold_r == Approx(6.371183480992285e-01).epsilon(1e-12));
    CHECK(cert.inner_inf_value == Approx(-1.575573210799058).epsilon(1e-9));
    CHECK(cert.inner_q_star == Approx(0.7989355788).epsilon(1e-7));
    CHECK(cert.error_term_alpha == Approx(59854.500413686721).epsilon(1e-9));
    CHECK(cert.hmin_lower == Approx(-998309.3631135165).epsilon(1e-8));
    CHECK(cert.hmin_lower == Approx(1e6 * cert.threshold_r + 1e6 * cert.inner_inf_value - cert.error_term_alpha));

    p.threshold_mode = ThresholdMode::worst_case;
    const auto worst = eat_bound({p, alpha}, fn);
    CHECK(worst.threshold_r == Approx(-9.434684007709095e+02).epsilon(1e-12));
    CHECK(worst.hmin_lower == Approx(-945103828.4821223021).epsilon(1e-9));
}

TEST_CASE("certificate monotonicity") {
    ProtocolParams p;
    p.n = 1'000'000'000;
    p.gamma = 1e-2;
    p.omega_exp = 0.8;
    p.delta = 1e-3;
    p.eps_h = 1e-6;
    p.eps_eat = 2e-6;
    const MinTradeoffFn fn(1e-2, 0.79, 0.4);
    double prev = INFINITY;
    for (double delta : {1e-4, 1e-3, 5e-3, 1e-2, 3e-2}) {
        p.delta = delta;
        const double h = eat_bound({p, 1.0001}, fn).hmin_lower;
        CHECK(h <= prev);
        prev = h;
    }
    p.delta = 1e-3;
    double prev_rate = -INFINITY;
    for (std::uint64_t n : {1'000'000ULL, 100'000'000ULL, 10'000'000'000ULL}) {
        p.n = n;
        const double h = eat_bound({p, 1.0001}, fn).hmin_lower;
        CHECK(h >= prev_rate);
        prev_rate = h;
    }
    // at or below the classical score the rate term vanishes
    p.omega_exp = 0.7505;
    p.delta = 1e-3;
    CHECK(eat_bound({p, 1.0001}, MinTradeoffFn(1e-2, 0.76, 0.0)).hmin_lower < 0);
    CHECK_THROWS_AS(eat_bound({p, 1.0001}, MinTradeoffFn(2e-2, 0.76, 0.0)), std::invalid_argument);
}
