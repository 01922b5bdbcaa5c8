#include "dirne/optimizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

namespace dirne {

namespace {

constexpr double kInvPhi = 0.6180339887498949;  // 1/φ
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct LineResult {
    double x;
    double fx;
};

// Golden-section maximization of f on [a, b]; stops once b − a < tol or
// after max_iter shrink steps.
template <class F>
LineResult golden_max(F&& f, double a, double b, double tol, int max_iter) {
    double c = b - kInvPhi * (b - a);
    double d = a + kInvPhi * (b - a);
    double fc = f(c);
    double fd = f(d);
    for (int it = 0; it < max_iter && b - a > tol; ++it) {
        if (fc >= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - kInvPhi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + kInvPhi * (b - a);
            fd = f(d);
        }
    }
    return fc >= fd ? LineResult{c, fc} : LineResult{d, fd};
}

double rate_gap(const MinTradeoffFn& fn, double q) { return rate_chsh(q) - fn.g(q); }

// Runs body(i) for i in [0, count), in parallel on request, and rethrows the
// first exception (by index) on the calling thread.
template <class Body>
void for_each_index(std::size_t count, bool parallel, Body&& body) {
    std::vector<std::exception_ptr> errors(count);
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(count); ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            errors[static_cast<std::size_t>(i)] = std::current_exception();
        }
    }
    for (auto& e : errors) {
        if (e) std::rethrow_exception(e);
    }
}

}  // namespace

double inner_objective_q(const MinTradeoffFn& fn, double alpha, double q) {
    return rate_gap(fn, q) - (alpha - 1.0) * v_term(fn, q);
}

double inner_constant(const MinTradeoffFn& fn, double alpha) {
    return std::exp2(2.0 * std::log2(alpha - 1.0) + k_term_log2(fn, alpha));
}

InnerResult inner_inf(const MinTradeoffFn& fn, double alpha) {
    if (!(alpha > 1.0 && alpha < 2.0)) {
        throw std::domain_error("inner_inf: alpha outside (1,2)");
    }
    const auto neg = [&](double q) { return -inner_objective_q(fn, alpha, q); };
    LineResult best = golden_max(neg, kQuantumMinScore, kQuantumMaxScore, 1e-12, 200);
    for (double q : {kQuantumMinScore, kQuantumMaxScore, fn.t()}) {
        const double v = neg(q);
        if (v > best.fx) best = {q, v};
    }
    return {best.x, -best.fx - inner_constant(fn, alpha)};
}

OuterPoint seed_point(const ProtocolParams& params) {
    OuterPoint p;
    const double am1 = std::clamp(1.0 / std::sqrt(static_cast<double>(params.n)),
                                  std::pow(10.0, kMinLog10AlphaMinusOne), kMaxAlphaMinusOne);
    p.alpha = 1.0 + am1;
    p.t = std::clamp(params.omega_exp - params.delta, kMinTangent, kMaxTangent);
    p.c_perp = std::clamp(rate_chsh(p.t), -kMaxAbsCPerp, kMaxAbsCPerp);
    return p;
}

EntropyCertificate certificate_at(const ProtocolParams& params, const OuterPoint& point) {
    const MinTradeoffFn fn(params.gamma, point.t, point.c_perp);
    return eat_bound(EatParams{params, point.alpha}, fn);
}

EntropyCertificate outer_optimize(const ProtocolParams& params, const OuterOptions& options) {
    params.validate();
    using Vec = std::array<double, 3>;  // log10(α−1), t, c_⊥
    const Vec lo{kMinLog10AlphaMinusOne, kMinTangent, -kMaxAbsCPerp};
    const Vec hi{std::log10(kMaxAlphaMinusOne), kMaxTangent, kMaxAbsCPerp};
    const Vec min_width{1e-6, 1e-10, 1e-9};

    const auto to_point = [](const Vec& x) { return OuterPoint{1.0 + std::pow(10.0, x[0]), x[1], x[2]}; };
    EntropyCertificate best_cert;
    double best = kNegInf;
    const auto eval = [&](const Vec& x) {
        const EntropyCertificate cert = certificate_at(params, to_point(x));
        const double v = std::isnan(cert.hmin_lower) ? kNegInf : cert.hmin_lower;
        if (v > best) {
            best = v;
            best_cert = cert;
        }
        return v;
    };

    const OuterPoint start = options.warm_start.value_or(seed_point(params));
    Vec x{std::log10(start.alpha - 1.0), start.t, start.c_perp};
    for (int i = 0; i < 3; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
    double fx = eval(x);
    if (best == kNegInf) best_cert = certificate_at(params, to_point(x));

    Vec width{1.0, 0.01, 0.5};
    for (int sweep = 0; sweep < options.max_sweeps; ++sweep) {
        const double before = fx;
        const Vec x_before = x;
        bool widened = false;
        for (int i = 0; i < 3; ++i) {
            const double a = std::max(lo[i], x[i] - width[i]);
            const double b = std::min(hi[i], x[i] + width[i]);
            const auto line = [&](double v) {
                Vec y = x;
                y[i] = v;
                return eval(y);
            };
            const LineResult r = golden_max(line, a, b, 1e-9 * (b - a), 45);
            if (r.fx > fx) {
                x[i] = r.x;
                fx = r.fx;
            }
            const double edge = 0.02 * (b - a);
            const bool at_edge = (x[i] - a < edge && a > lo[i]) || (b - x[i] < edge && b < hi[i]);
            if (at_edge) {
                width[i] = std::min(2.0 * width[i], hi[i] - lo[i]);
                widened = true;
            } else {
                width[i] = std::max(0.5 * width[i], min_width[i]);
            }
        }
        // Pattern move along the net displacement of the sweep.
        Vec y;
        for (int i = 0; i < 3; ++i) y[i] = std::clamp(2.0 * x[i] - x_before[i], lo[i], hi[i]);
        const double fy = eval(y);
        if (fy > fx) {
            x = y;
            fx = fy;
        }
        if (sweep >= 2 && !widened && fx - before < options.tolerance_bits) break;
    }
    return best_cert;
}

NetEvaluation evaluate_net_at_delta(std::uint64_t n, double gamma, double omega_exp, double delta,
                                    const ErrorBudget& budget, const std::optional<OuterPoint>& warm_start) {
    NetEvaluation out;
    out.n = n;
    out.gamma = gamma;
    out.delta = delta;
    out.completeness = completeness_error(n, gamma, omega_exp, delta).value;
    out.delta_feasible = out.completeness <= budget.eps_c;

    ProtocolParams p;
    p.n = n;
    p.gamma = gamma;
    p.omega_exp = omega_exp;
    p.delta = delta;
    p.eps_h = budget.eps_h;
    p.eps_eat = budget.eps_eat;
    p.threshold_mode = ThresholdMode::spot_check;

    OuterOptions opts;
    opts.warm_start = warm_start;
    out.certificate = outer_optimize(p, opts);
    out.extractable_bits = extractable_bits(out.certificate, budget.eps_ext);
    out.input_bits = input_randomness(static_cast<double>(n), gamma);
    out.net_bits = out.extractable_bits - out.input_bits;
    return out;
}

NetEvaluation evaluate_net(std::uint64_t n, double gamma, double omega_exp, const ErrorBudget& budget,
                           const std::optional<OuterPoint>& warm_start) {
    const double delta = min_delta_for_completeness(n, gamma, omega_exp, budget.eps_c);
    const double completeness = completeness_error(n, gamma, omega_exp, delta).value;
    if (completeness > budget.eps_c) {
        NetEvaluation out;
        out.n = n;
        out.gamma = gamma;
        out.delta = delta;
        out.completeness = completeness;
        out.input_bits = input_randomness(static_cast<double>(n), gamma);
        out.net_bits = kNegInf;
        return out;
    }
    return evaluate_net_at_delta(n, gamma, omega_exp, delta, budget, warm_start);
}

NetEvaluation optimize_gamma(std::uint64_t n, double omega_exp, const ErrorBudget& budget,
                             const PlanOptions& options) {
    const int points = std::max(options.gamma_grid_points, 3);
    const double lg_lo = std::log10(kMinGamma);
    const double lg_hi = std::log10(kMaxGamma);
    const double step = (lg_hi - lg_lo) / (points - 1);

    std::vector<NetEvaluation> grid(static_cast<std::size_t>(points));
    for_each_index(grid.size(), options.parallel, [&](std::size_t i) {
        grid[i] = evaluate_net(n, std::pow(10.0, lg_lo + step * static_cast<double>(i)), omega_exp, budget);
    });
    std::size_t best_i = 0;
    for (std::size_t i = 1; i < grid.size(); ++i) {
        if (grid[i].net_bits > grid[best_i].net_bits) best_i = i;
    }
    NetEvaluation best = grid[best_i];
    if (best.net_bits == kNegInf) return best;

    const double centre = lg_lo + step * static_cast<double>(best_i);
    std::optional<OuterPoint> warm = OuterPoint{best.certificate.alpha, best.certificate.t, best.certificate.c_perp};
    const auto line = [&](double lg) {
        NetEvaluation e = evaluate_net(n, std::pow(10.0, lg), omega_exp, budget, warm);
        if (e.net_bits > best.net_bits) best = e;
        return e.net_bits;
    };
    golden_max(line, std::max(lg_lo, centre - step), std::min(lg_hi, centre + step),
               options.log10_gamma_tolerance, 200);
    return best;
}

PlanResult plan_protocol(double omega_exp, double eps_s, double eps_c, const PlanOptions& options) {
    if (!(omega_exp > kClassicalScore && omega_exp <= kQuantumMaxScore)) {
        throw std::invalid_argument("plan_protocol: omega_exp must lie in (0.75, 1/2 + sqrt(2)/4]");
    }
    const ErrorBudget budget = ErrorBudget::from_soundness(eps_s, eps_c, options.extractor_fraction);
    const auto eval = [&](double n) {
        return optimize_gamma(static_cast<std::uint64_t>(std::ceil(n)), omega_exp, budget, options);
    };

    PlanResult plan;
    double lo = 1e2;
    NetEvaluation at_hi = eval(lo);
    double hi = lo;
    if (!(at_hi.net_bits > 0.0)) {
        bool found = false;
        while (hi < kMaxRounds) {
            lo = hi;
            hi = std::min(hi * 10.0, kMaxRounds);
            at_hi = eval(hi);
            if (at_hi.net_bits > 0.0) {
                found = true;
                break;
            }
        }
        if (!found) return plan;
        while (hi / lo - 1.0 > options.log_n_tolerance) {
            const double mid = std::sqrt(lo * hi);
            NetEvaluation e = eval(mid);
            if (e.net_bits > 0.0) {
                hi = mid;
                at_hi = std::move(e);
            } else {
                lo = mid;
            }
        }
    }
    plan.feasible = at_hi.net_bits > 0.0 && at_hi.completeness <= eps_c;
    plan.n_min = at_hi.n;
    plan.gamma_opt = at_hi.gamma;
    plan.delta = at_hi.delta;
    plan.net_bits = at_hi.net_bits;
    plan.completeness = at_hi.completeness;
    plan.input_bits = at_hi.input_bits;
    plan.extractable_bits = at_hi.extractable_bits;
    plan.certificate = at_hi.certificate;
    return plan;
}

std::vector<CurvePoint> expansion_curve(double omega_exp, double eps_s, double eps_c,
                                        const std::vector<std::uint64_t>& n_grid,
                                        std::optional<double> fixed_gamma, const PlanOptions& options) {
    if (n_grid.empty() || !std::is_sorted(n_grid.begin(), n_grid.end())) {
        throw std::invalid_argument("expansion_curve: n grid must be nonempty and ascending");
    }
    const ErrorBudget budget = ErrorBudget::from_soundness(eps_s, eps_c, options.extractor_fraction);
    std::vector<CurvePoint> out;
    out.reserve(n_grid.size());
    for (std::uint64_t n : n_grid) {
        const NetEvaluation e = fixed_gamma ? evaluate_net(n, *fixed_gamma, omega_exp, budget)
                                            : optimize_gamma(n, omega_exp, budget, options);
        out.push_back({n, e.gamma, e.delta, e.net_bits, e.net_bits / static_cast<double>(n)});
    }
    return out;
}

std::vector<CurvePoint> gamma_sweep(std::uint64_t n, double omega_exp, double eps_s, double eps_c,
                                    const std::vector<double>& gammas, const PlanOptions& options) {
    const ErrorBudget budget = ErrorBudget::from_soundness(eps_s, eps_c, options.extractor_fraction);
    std::vector<CurvePoint> out(gammas.size());
    for_each_index(gammas.size(), options.parallel, [&](std::size_t i) {
        const NetEvaluation e = evaluate_net(n, gammas[i], omega_exp, budget);
        out[i] = {n, e.gamma, e.delta, e.net_bits, e.net_bits / static_cast<double>(n)};
    });
    return out;
}

double asymptotic_rate(double omega_exp) { return rate_chsh(omega_exp); }

}  // namespace dirne
