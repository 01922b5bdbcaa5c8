#pragma once

// Packed bit strings and their on-disk form: an 8-byte little-endian bit
// count followed by ⌈count/8⌉ bytes, bit i stored in byte i/8 at position
// i%8 (least significant bit first). Unused bits of the last byte are zero.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace dirne {

class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::uint64_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::uint64_t size() const { return size_; }
    bool empty() const { return size_ == 0; }

    bool get(std::uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }
    void set(std::uint64_t i, bool v) {
        const std::uint64_t mask = std::uint64_t{1} << (i & 63);
        if (v) {
            words_[i >> 6] |= mask;
        } else {
            words_[i >> 6] &= ~mask;
        }
    }
    void push_back(bool v);
    void resize(std::uint64_t size);

    /// Appends every bit of other.
    void append(const BitVector& other);

    /// Bitwise XOR with an equally long vector.
    BitVector& operator^=(const BitVector& other);

    std::uint64_t popcount() const;

    std::span<const std::uint64_t> words() const { return words_; }
    std::span<std::uint64_t> words() { return words_; }

    friend bool operator==(const BitVector& a, const BitVector& b) {
        return a.size_ == b.size_ && a.words_ == b.words_;
    }

private:
    std::uint64_t size_ = 0;
    std::vector<std::uint64_t> words_;  // tail bits beyond size_ kept zero
};

/// Bits from the low end of each byte first.
BitVector bits_from_bytes(std::span<const std::uint8_t> bytes, std::uint64_t bit_count);
std::vector<std::uint8_t> bytes_from_bits(const BitVector& bits);

/// Throws std::runtime_error on I/O failure or a truncated file.
BitVector read_bit_file(const std::filesystem::path& path);
void write_bit_file(const std::filesystem::path& path, const BitVector& bits);

/// Bit count from the header without reading the payload.
std::uint64_t read_bit_file_length(const std::filesystem::path& path);

}  // namespace dirne
