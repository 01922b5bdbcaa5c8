#pragma once

// Toeplitz hashing over GF(2). The m×n matrix is fixed by a seed of m+n−1
// bits: T[i][j] = seed[(n−1) + i − j], so seed[0] is the bottom-left corner
// and seed[m+n−2] the top-right one.

#include <cstdint>

#include "dirne/bit_file.hpp"

namespace dirne {

/// Largest block length; convolution coefficients stay below 2²⁶ and round
/// exactly in double precision.
inline constexpr std::uint64_t kMaxBlockLen = std::uint64_t{1} << 26;
inline constexpr std::uint64_t kDefaultBlockLen = std::uint64_t{1} << 20;

struct ToeplitzJob {
    std::uint64_t n_bits = 0;
    std::uint64_t m_bits = 0;
    std::uint64_t block_len = kDefaultBlockLen;
    BitVector seed;

    /// Throws std::invalid_argument on inconsistent lengths.
    void validate() const;
};

/// Direct row-by-row product (word-wise AND and parity); reference for the FFT path.
BitVector toeplitz_naive(const BitVector& seed, const BitVector& input, std::uint64_t m_bits);

enum class Execution { serial, parallel };

/// Column blocks of length block_len, each multiplied by circular
/// convolution through a real FFT, then XOR-combined. The final block is
/// zero-padded. Throws NumericalGuard if a coefficient does not round
/// cleanly.
BitVector toeplitz_fft(const ToeplitzJob& job, const BitVector& input, Execution exec = Execution::parallel);

struct Extraction {
    BitVector output;
    double eps_ext = 1.0;
};

/// toeplitz_fft plus the extractor error 2^{−(k−m)/2} for min-entropy k.
Extraction extract(const ToeplitzJob& job, const BitVector& input, double k_min_entropy,
                   Execution exec = Execution::parallel);

/// Smallest 2^a·3^b·5^c·7^d that is ≥ n.
std::uint64_t smooth_transform_size(std::uint64_t n);

}  // namespace dirne
