#include <bit>
#include <cmath>

#include "dirne/protocol_sim.hpp"

namespace dirne {

namespace {
__extension__ typedef unsigned __int128 u128;
}  // namespace

BiasedBits biased_bits(double gamma, std::uint64_t count, const BitVector& source) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("biased_bits: gamma must lie in (0,1)");
    if (gamma < 0x1.0p-60) throw std::invalid_argument("biased_bits: gamma below coder resolution");

    // γ as a 0.64 fixed-point fraction.
    const auto g = static_cast<std::uint64_t>(std::ldexp(gamma, 64));
    constexpr std::uint64_t kLow = std::uint64_t{1} << 62;

    // value is uniform on [0, range) given the bits pulled so far.
    std::uint64_t range = 1;
    std::uint64_t value = 0;
    std::uint64_t pulled = 0;
    BiasedBits out;
    out.bits = BitVector(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        while (range < kLow) {
            if (pulled == source.size()) throw SourceExhausted("biased_bits: uniform source exhausted");
            range <<= 1;
            value = (value << 1) | static_cast<std::uint64_t>(source.get(pulled++));
        }
        const auto split = static_cast<std::uint64_t>((static_cast<u128>(range) * g) >> 64);
        const std::uint64_t zero_part = range - split;
        if (value >= zero_part) {
            out.bits.set(i, true);
            value -= zero_part;
            range = split;
        } else {
            range = zero_part;
        }
    }
    const auto held = static_cast<std::uint64_t>(std::bit_width(range) - 1);
    out.consumed = pulled > held ? pulled - held : 0;
    return out;
}

}  // namespace dirne
