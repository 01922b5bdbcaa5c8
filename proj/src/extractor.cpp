#include "dirne/extractor.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "dirne/error_budget.hpp"
#include "dirne/errors.hpp"

namespace dirne {

namespace {

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

struct FftwFree {
    void operator()(void* p) const { fftw_free(p); }
};
using RealBuffer = std::unique_ptr<double[], FftwFree>;
using ComplexBuffer = std::unique_ptr<fftw_complex[], FftwFree>;

RealBuffer alloc_real(std::size_t n) {
    auto* p = fftw_alloc_real(n);
    if (!p) throw std::bad_alloc();
    return RealBuffer(p);
}

ComplexBuffer alloc_complex(std::size_t n) {
    auto* p = fftw_alloc_complex(n);
    if (!p) throw std::bad_alloc();
    return ComplexBuffer(p);
}

// Forward and inverse plans of one size, usable from any thread through the
// new-array execute interface.
class PlanPair {
public:
    explicit PlanPair(std::size_t n) : n_(n) {
        auto real = alloc_real(n);
        auto spec = alloc_complex(n / 2 + 1);
        std::lock_guard lock(planner_mutex());
        const int len = static_cast<int>(n);
        forward_ = fftw_plan_dft_r2c_1d(len, real.get(), spec.get(), FFTW_ESTIMATE);
        inverse_ = fftw_plan_dft_c2r_1d(len, spec.get(), real.get(), FFTW_ESTIMATE);
        if (!forward_ || !inverse_) throw std::runtime_error("FFTW planning failed");
    }
    ~PlanPair() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(forward_);
        fftw_destroy_plan(inverse_);
    }
    PlanPair(const PlanPair&) = delete;
    PlanPair& operator=(const PlanPair&) = delete;

    void forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(forward_, in, out); }
    void inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inverse_, in, out); }
    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    fftw_plan forward_ = nullptr;
    fftw_plan inverse_ = nullptr;
};

struct Workspace {
    RealBuffer a;
    RealBuffer b;
    ComplexBuffer fa;
    ComplexBuffer fb;

    explicit Workspace(std::size_t n)
        : a(alloc_real(n)), b(alloc_real(n)), fa(alloc_complex(n / 2 + 1)), fb(alloc_complex(n / 2 + 1)) {}
};

// XORs T_k v_k into acc for the column block starting at `start`.
void multiply_block(const ToeplitzJob& job, const BitVector& input, std::uint64_t start, const PlanPair& plans,
                    Workspace& ws, BitVector& acc) {
    const std::uint64_t n = job.n_bits;
    const std::uint64_t m = job.m_bits;
    const std::uint64_t l = job.block_len;
    const std::size_t size = plans.size();
    double* a = ws.a.get();
    double* b = ws.b.get();

    // Block seed slice: entry r is seed[n − start − l + r], zero outside the seed.
    const auto base = static_cast<std::int64_t>(n) - static_cast<std::int64_t>(start) - static_cast<std::int64_t>(l);
    const std::uint64_t slice_len = m + l - 1;
    for (std::uint64_t r = 0; r < slice_len; ++r) {
        const std::int64_t idx = base + static_cast<std::int64_t>(r);
        a[r] = idx >= 0 ? static_cast<double>(job.seed.get(static_cast<std::uint64_t>(idx))) : 0.0;
    }
    std::fill(a + slice_len, a + size, 0.0);

    const std::uint64_t cols = std::min(l, n - start);
    for (std::uint64_t j = 0; j < cols; ++j) b[j] = static_cast<double>(input.get(start + j));
    std::fill(b + cols, b + size, 0.0);

    plans.forward(a, ws.fa.get());
    plans.forward(b, ws.fb.get());
    fftw_complex* fa = ws.fa.get();
    const fftw_complex* fb = ws.fb.get();
    for (std::size_t k = 0; k < size / 2 + 1; ++k) {
        const double re = fa[k][0] * fb[k][0] - fa[k][1] * fb[k][1];
        const double im = fa[k][0] * fb[k][1] + fa[k][1] * fb[k][0];
        fa[k][0] = re;
        fa[k][1] = im;
    }
    plans.inverse(fa, a);

    const double scale = 1.0 / static_cast<double>(size);
    for (std::uint64_t i = 0; i < m; ++i) {
        const double c = a[l - 1 + i] * scale;
        const double r = std::nearbyint(c);
        if (!(std::abs(c - r) <= 0.25)) {
            throw NumericalGuard("toeplitz_fft: coefficient " + std::to_string(c) + " does not round cleanly");
        }
        if (static_cast<std::int64_t>(r) & 1) acc.set(i, !acc.get(i));
    }
}

}  // namespace

void ToeplitzJob::validate() const {
    if (n_bits == 0) throw std::invalid_argument("toeplitz job: n must be positive");
    if (m_bits > n_bits) throw std::invalid_argument("toeplitz job: m must not exceed n");
    if (block_len == 0 || block_len > n_bits) throw std::invalid_argument("toeplitz job: block length must lie in [1, n]");
    if (block_len > kMaxBlockLen) throw std::invalid_argument("toeplitz job: block length above 2^26");
    const std::uint64_t want = m_bits == 0 ? 0 : m_bits + n_bits - 1;
    if (seed.size() != want) {
        throw std::invalid_argument("toeplitz job: seed has " + std::to_string(seed.size()) + " bits, expected " +
                                    std::to_string(want));
    }
}

BitVector toeplitz_naive(const BitVector& seed, const BitVector& input, std::uint64_t m_bits) {
    const std::uint64_t n = input.size();
    if (n == 0) throw std::invalid_argument("toeplitz_naive: empty input");
    if (m_bits > 0 && seed.size() != m_bits + n - 1) throw std::invalid_argument("toeplitz_naive: seed length mismatch");
    if (m_bits == 0) return {};
    // With the seed reversed, row i is the contiguous window rev[m−1−i, m−1−i+n),
    // so each row is a word-wise AND and a parity.
    const std::uint64_t len = seed.size();
    BitVector rev(len);
    for (std::uint64_t k = 0; k < len; ++k) rev.set(k, seed.get(len - 1 - k));
    const auto rw = rev.words();
    const auto window = [&](std::uint64_t bit) {
        const std::uint64_t w = bit >> 6;
        const unsigned shift = bit & 63;
        std::uint64_t v = w < rw.size() ? rw[w] >> shift : 0;
        if (shift != 0 && w + 1 < rw.size()) v |= rw[w + 1] << (64 - shift);
        return v;
    };
    const auto in = input.words();
    BitVector out(m_bits);
    for (std::uint64_t i = 0; i < m_bits; ++i) {
        const std::uint64_t start = m_bits - 1 - i;
        std::uint64_t acc = 0;
        for (std::uint64_t w = 0; w < in.size(); ++w) acc ^= window(start + 64 * w) & in[w];
        out.set(i, std::popcount(acc) & 1);
    }
    return out;
}

std::uint64_t smooth_transform_size(std::uint64_t n) {
    std::uint64_t best = std::bit_ceil(n);
    for (std::uint64_t p7 = 1; p7 < best; p7 *= 7)
        for (std::uint64_t p5 = p7; p5 < best; p5 *= 5)
            for (std::uint64_t p3 = p5; p3 < best; p3 *= 3) {
                std::uint64_t v = p3;
                while (v < n) v *= 2;
                best = std::min(best, v);
            }
    return best;
}

BitVector toeplitz_fft(const ToeplitzJob& job, const BitVector& input, Execution exec) {
    job.validate();
    if (input.size() != job.n_bits) throw std::invalid_argument("toeplitz_fft: input length differs from n");
    if (job.m_bits == 0) return {};

    const std::uint64_t blocks = (job.n_bits + job.block_len - 1) / job.block_len;
    const std::size_t size = smooth_transform_size(job.m_bits + job.block_len - 1);
    if (size > static_cast<std::size_t>(std::numeric_limits<int>::max())) {
        throw std::invalid_argument("toeplitz_fft: transform size exceeds FFTW's int range");
    }
    const PlanPair plans(size);
    BitVector result(job.m_bits);
    std::exception_ptr error;
    const bool parallel = exec == Execution::parallel && blocks > 1;

    const auto record = [&error] {
#pragma omp critical(dirne_toeplitz_error)
        if (!error) error = std::current_exception();
    };

#pragma omp parallel if (parallel)
    {
        BitVector acc(job.m_bits);
        std::unique_ptr<Workspace> ws;
        try {
            ws = std::make_unique<Workspace>(size);
        } catch (...) {
            record();
        }
#pragma omp for schedule(dynamic)
        for (std::int64_t k = 0; k < static_cast<std::int64_t>(blocks); ++k) {
            if (!ws) continue;
            try {
                multiply_block(job, input, static_cast<std::uint64_t>(k) * job.block_len, plans, *ws, acc);
            } catch (...) {
                record();
            }
        }
#pragma omp critical(dirne_toeplitz_reduce)
        result ^= acc;
    }
    if (error) std::rethrow_exception(error);
    return result;
}

Extraction extract(const ToeplitzJob& job, const BitVector& input, double k_min_entropy, Execution exec) {
    if (static_cast<double>(job.m_bits) > k_min_entropy) {
        throw std::invalid_argument("extract: output length exceeds the certified min-entropy");
    }
    Extraction out;
    out.eps_ext = extractor_error(k_min_entropy, static_cast<double>(job.m_bits));
    out.output = toeplitz_fft(job, input, exec);
    return out;
}

}  // namespace dirne
