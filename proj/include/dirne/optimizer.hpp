#pragma once

// Parameter search on top of the entropy bound: the convex inner infimum
// over quantum scores, the outer search over (α, t, c_⊥) and the planner
// that picks γ and the minimal number of rounds.

#include <cstdint>
#include <optional>
#include <vector>

#include "dirne/entropy_core.hpp"
#include "dirne/error_budget.hpp"

namespace dirne {

struct InnerResult {
    double q_star = 0.0;
    double value = 0.0;  // bits/round; −inf when (α−1)²K overflows
};

/// Δ(f_t,q) − (α−1)·V(f_t,q), the q-dependent part of the inner objective.
double inner_objective_q(const MinTradeoffFn& fn, double alpha, double q);

/// (α−1)²·K_α(f_t); +inf when it leaves double range.
double inner_constant(const MinTradeoffFn& fn, double alpha);

/// Global minimum over the quantum interval of
/// Δ(f_t,q) − (α−1)·V(f_t,q) − (α−1)²·K_α(f_t), by golden section (the
/// objective is convex in q).
InnerResult inner_inf(const MinTradeoffFn& fn, double alpha);

struct OuterPoint {
    double alpha = 0.0;
    double t = 0.0;
    double c_perp = 0.0;
};

struct OuterOptions {
    int max_sweeps = 50;
    double tolerance_bits = 1.0;
    std::optional<OuterPoint> warm_start;
};

/// Box of the outer search.
inline constexpr double kMinLog10AlphaMinusOne = -9.0;
inline constexpr double kMaxAlphaMinusOne = 0.5;
inline constexpr double kMinTangent = 0.7501;
inline constexpr double kMaxTangent = kQuantumMaxScore - 1e-6;
inline constexpr double kMaxAbsCPerp = 5.0;

/// Default seed: α − 1 = 1/√n, t = ω_exp − δ, c_⊥ = rate(t), clamped to the box.
OuterPoint seed_point(const ProtocolParams& params);

/// Certificate at one point of the search box.
EntropyCertificate certificate_at(const ProtocolParams& params, const OuterPoint& point);

/// Best certificate found by coordinate descent with a golden-section line
/// search per coordinate. Never worse than the seed (or the warm start).
EntropyCertificate outer_optimize(const ProtocolParams& params, const OuterOptions& options = {});

/// Net expansion of one (n, γ) candidate with δ derived from the
/// completeness budget.
struct NetEvaluation {
    std::uint64_t n = 0;
    double gamma = 0.0;
    double delta = 0.0;
    double completeness = 1.0;
    bool delta_feasible = false;
    EntropyCertificate certificate;
    double extractable_bits = 0.0;
    double input_bits = 0.0;
    double net_bits = 0.0;  // −inf when no admissible δ exists
};

NetEvaluation evaluate_net(std::uint64_t n, double gamma, double omega_exp, const ErrorBudget& budget,
                           const std::optional<OuterPoint>& warm_start = std::nullopt);

/// Same as evaluate_net with δ given explicitly.
NetEvaluation evaluate_net_at_delta(std::uint64_t n, double gamma, double omega_exp, double delta,
                                    const ErrorBudget& budget,
                                    const std::optional<OuterPoint>& warm_start = std::nullopt);

inline constexpr double kMinGamma = 1e-7;
inline constexpr double kMaxGamma = 1e-1;
inline constexpr double kMaxRounds = 1e18;

struct PlanOptions {
    int gamma_grid_points = 25;
    double log10_gamma_tolerance = 1e-4;
    double log_n_tolerance = 1e-4;  // relative precision of n_min
    double extractor_fraction = kDefaultExtractorFraction;
    bool parallel = true;
};

/// Net-maximizing γ at fixed n: a log grid over [1e-7, 1e-1] evaluated in
/// parallel, refined by golden section on log γ around the best grid point.
NetEvaluation optimize_gamma(std::uint64_t n, double omega_exp, const ErrorBudget& budget,
                             const PlanOptions& options = {});

struct PlanResult {
    bool feasible = false;
    std::uint64_t n_min = 0;
    double gamma_opt = 0.0;
    double delta = 0.0;
    double net_bits = 0.0;
    double completeness = 1.0;
    double input_bits = 0.0;
    double extractable_bits = 0.0;
    EntropyCertificate certificate;
};

/// Smallest n (up to 1e18) with positive net expansion at the best γ.
PlanResult plan_protocol(double omega_exp, double eps_s, double eps_c, const PlanOptions& options = {});

struct CurvePoint {
    std::uint64_t n = 0;
    double gamma = 0.0;
    double delta = 0.0;
    double net_bits = 0.0;
    double net_rate = 0.0;  // net_bits / n
};

/// Net expansion along an ascending n grid, γ optimized per point unless
/// fixed_gamma is given.
std::vector<CurvePoint> expansion_curve(double omega_exp, double eps_s, double eps_c,
                                        const std::vector<std::uint64_t>& n_grid,
                                        std::optional<double> fixed_gamma = std::nullopt,
                                        const PlanOptions& options = {});

/// Net expansion over a γ grid at fixed n.
std::vector<CurvePoint> gamma_sweep(std::uint64_t n, double omega_exp, double eps_s, double eps_c,
                                    const std::vector<double>& gammas, const PlanOptions& options = {});

/// Limit of the net rate as n → ∞ (δ → 0 and γ → 0): rate_chsh(ω_exp).
double asymptotic_rate(double omega_exp);

}  // namespace dirne
