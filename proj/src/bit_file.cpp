#include "dirne/bit_file.hpp"

#include <bit>
#include <fstream>
#include <stdexcept>

namespace dirne {

void BitVector::push_back(bool v) {
    if ((size_ & 63) == 0) words_.push_back(0);
    ++size_;
    set(size_ - 1, v);
}

void BitVector::resize(std::uint64_t size) {
    words_.resize((size + 63) / 64, 0);
    size_ = size;
    if (size_ & 63) words_.back() &= (std::uint64_t{1} << (size_ & 63)) - 1;
}

void BitVector::append(const BitVector& other) {
    const std::uint64_t offset = size_;
    resize(size_ + other.size_);
    const unsigned shift = offset & 63;
    std::size_t w = offset >> 6;
    for (std::size_t i = 0; i < other.words_.size(); ++i) {
        const std::uint64_t word = other.words_[i];
        words_[w + i] |= word << shift;
        if (shift != 0 && w + i + 1 < words_.size()) words_[w + i + 1] |= word >> (64 - shift);
    }
}

BitVector& BitVector::operator^=(const BitVector& other) {
    if (other.size_ != size_) throw std::invalid_argument("BitVector xor: length mismatch");
    for (std::size_t i = 0; i < words_.size(); ++i) words_[i] ^= other.words_[i];
    return *this;
}

std::uint64_t BitVector::popcount() const {
    std::uint64_t total = 0;
    for (std::uint64_t w : words_) total += static_cast<std::uint64_t>(std::popcount(w));
    return total;
}

BitVector bits_from_bytes(std::span<const std::uint8_t> bytes, std::uint64_t bit_count) {
    if (bytes.size() < (bit_count + 7) / 8) throw std::invalid_argument("bits_from_bytes: too few bytes");
    BitVector out(bit_count);
    auto words = out.words();
    for (std::uint64_t j = 0; j < (bit_count + 7) / 8; ++j) {
        words[j >> 3] |= std::uint64_t{bytes[j]} << (8 * (j & 7));
    }
    out.resize(bit_count);  // clears stray bits of the last byte
    return out;
}

std::vector<std::uint8_t> bytes_from_bits(const BitVector& bits) {
    std::vector<std::uint8_t> out((bits.size() + 7) / 8);
    auto words = bits.words();
    for (std::size_t j = 0; j < out.size(); ++j) {
        out[j] = static_cast<std::uint8_t>(words[j >> 3] >> (8 * (j & 7)));
    }
    return out;
}

namespace {

std::uint64_t read_header(std::istream& in, const std::filesystem::path& path) {
    std::uint8_t header[8];
    if (!in.read(reinterpret_cast<char*>(header), 8)) {
        throw std::runtime_error("bit file " + path.string() + ": missing length header");
    }
    std::uint64_t count = 0;
    for (int i = 7; i >= 0; --i) count = (count << 8) | header[i];
    return count;
}

}  // namespace

std::uint64_t read_bit_file_length(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bit file " + path.string());
    return read_header(in, path);
}

BitVector read_bit_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open bit file " + path.string());
    const std::uint64_t count = read_header(in, path);
    std::vector<std::uint8_t> bytes((count + 7) / 8);
    if (!in.read(reinterpret_cast<char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()))) {
        throw std::runtime_error("bit file " + path.string() + ": truncated payload");
    }
    return bits_from_bytes(bytes, count);
}

void write_bit_file(const std::filesystem::path& path, const BitVector& bits) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create bit file " + path.string());
    std::uint8_t header[8];
    std::uint64_t count = bits.size();
    for (int i = 0; i < 8; ++i) {
        header[i] = static_cast<std::uint8_t>(count & 0xff);
        count >>= 8;
    }
    out.write(reinterpret_cast<const char*>(header), 8);
    const auto bytes = bytes_from_bits(bits);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for bit file " + path.string());
}

}  // namespace dirne
