#pragma once

#include <cstdint>

#include "dirne/entropy_core.hpp"

namespace dirne {

/// Default share of the soundness budget given to the extractor.
inline constexpr double kDefaultExtractorFraction = 1e-5;

struct ErrorBudget {
    double eps_s = 0.0;
    double eps_c = 0.0;
    double eps_ext = 0.0;
    double eps_h = 0.0;
    double eps_eat = 0.0;

    /// Standard split: ε_EXT = fraction·ε_S, ε_EAT = ε_EXT + 2ε_h and ε_h chosen
    /// so that both branches of the soundness composition equal ε_S.
    static ErrorBudget from_soundness(double eps_s, double eps_c,
                                      double extractor_fraction = kDefaultExtractorFraction);

    /// Throws std::invalid_argument unless every component lies in (0,1) and
    /// eps_s dominates the composition.
    void validate() const;
};

/// Φ(sign(k₁/n − p)·√(2n·G(k₁/n, p))): an upper bound on P[X ≤ k₁ − 1] for
/// X ~ Binomial(n, p).
double binomial_cdf_bound(std::uint64_t n, std::uint64_t k_plus_1, double p);

/// Exact P[X ≤ k] for X ~ Binomial(n, p) by log-space summation. Used as an
/// oracle for small n.
double binomial_cdf_exact(std::uint64_t n, std::uint64_t k, double p);

struct CompletenessBound {
    double value = 1.0;
    std::uint64_t abort_threshold = 0;  // ⌈nγ(ω_exp − δ)⌉
    bool degenerate = false;            // abort region empty, k₁ forced to 1
};

/// Upper bound on the abort probability of an honest run.
CompletenessBound completeness_error(std::uint64_t n, double gamma, double omega_exp, double delta);

/// Smallest δ (relative tolerance 1e-6) whose completeness bound is ≤ eps_c.
/// Returns omega_exp when even the empty abort region is not enough.
double min_delta_for_completeness(std::uint64_t n, double gamma, double omega_exp, double eps_c);

double soundness_compose(double eps_eat, double eps_ext, double eps_h);

/// Expected input randomness n·(H_bin(γ) + 2γ) + 2 in bits.
double input_randomness(double n, double gamma);

/// 2^{−(k−m)/2}. Throws std::invalid_argument when k < m.
double extractor_error(double k_bits, double m_bits);

/// Entropy margin k − m = 2·log₂(1/ε_EXT) spent by the Toeplitz extractor.
double extractor_margin(double eps_ext);

/// Output length a certificate supports after the extractor margin.
double extractable_bits(const EntropyCertificate& cert, double eps_ext);

/// Extractable output minus consumed input randomness.
double net_expansion(const EntropyCertificate& cert, double n, double gamma, double eps_ext);

}  // namespace dirne
