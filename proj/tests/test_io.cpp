#include <filesystem>
#include <stdexcept>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dirne/bit_file.hpp"
#include "dirne/config.hpp"
#include "dirne/errors.hpp"

using namespace dirne;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const char* name) {
    const fs::path dir = fs::temp_directory_path() / "dirne_tests";
    fs::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("bit vector operations") {
    BitVector v;
    for (int i = 0; i < 130; ++i) v.push_back(i % 3 == 0);
    CHECK(v.size() == 130);
    CHECK(v.popcount() == 44);
    CHECK(v.get(129));
    BitVector w = v;
    w.append(v);
    CHECK(w.size() == 260);
    for (int i = 0; i < 130; ++i) CHECK(w.get(130 + i) == v.get(i));
    w.resize(131);
    CHECK(w.popcount() == 45);
    w.resize(200);
    CHECK(w.popcount() == 45);  // growth adds zeros
    BitVector x = v;
    x ^= v;
    CHECK(x.popcount() == 0);
    CHECK_THROWS_AS(x ^= w, std::invalid_argument);
}

TEST_CASE("byte packing is least significant bit first") {
    const std::vector<std::uint8_t> bytes{0x01, 0x80, 0xff};
    const auto bits = bits_from_bytes(bytes, 20);
    CHECK(bits.get(0));
    CHECK_FALSE(bits.get(1));
    CHECK(bits.get(15));
    CHECK(bits.popcount() == 2 + 4);
    const auto back = bytes_from_bits(bits);
    REQUIRE(back.size() == 3);
    CHECK(back[2] == 0x0f);
    CHECK_THROWS_AS(bits_from_bytes(bytes, 25), std::invalid_argument);
}

TEST_CASE("bit file round trip") {
    std::mt19937_64 rng(71);
    for (std::uint64_t n : {0ULL, 1ULL, 63ULL, 64ULL, 1000ULL, 123457ULL}) {
        BitVector v(n);
        for (auto& w : v.words()) w = rng();
        v.resize(n);
        const auto path = scratch("roundtrip.bits");
        write_bit_file(path, v);
        CHECK(read_bit_file_length(path) == n);
        CHECK(read_bit_file(path) == v);
        CHECK(fs::file_size(path) == 8 + (n + 7) / 8);
    }
    const auto path = scratch("short.bits");
    {
        std::ofstream out(path, std::ios::binary);
        const char header[8] = {100, 0, 0, 0, 0, 0, 0, 0};
        out.write(header, 8);
        out.put('\x01');
    }
    CHECK_THROWS_AS(read_bit_file(path), std::runtime_error);
    CHECK_THROWS_AS(read_bit_file(scratch("missing.bits")), std::runtime_error);
}

TEST_CASE("config parsing") {
    std::istringstream in(
        "# comment\n"
        "[protocol]\n"
        "n = 3.168e12   # rounds\n"
        "gamma=1.194e-4\n"
        "\n"
        "[curve]\n"
        "gammas = 1e-4, 2e-4 ,3e-4\n"
        "[plan]\n"
        "parallel = off\n");
    auto cfg = Config::parse(in);
    CHECK(cfg.get_uint("protocol", "n") == 3'168'000'000'000ULL);
    CHECK(cfg.get_double("protocol", "gamma") == 1.194e-4);
    CHECK(cfg.get_doubles("curve", "gammas").size() == 3);
    CHECK_FALSE(cfg.get_bool("plan", "parallel"));
    CHECK_FALSE(cfg.find_double("protocol", "delta").has_value());
    CHECK_THROWS_AS(cfg.get_double("protocol", "delta"), ConfigError);

    cfg.set("protocol.gamma=2e-4");
    CHECK(cfg.get_double("protocol", "gamma") == 2e-4);
    CHECK_THROWS_AS(cfg.set("protocol.gama=2e-4"), ConfigError);
    CHECK_THROWS_AS(cfg.set("gamma=2e-4"), ConfigError);
    CHECK_THROWS_AS(cfg.set("nosuch.n=1"), ConfigError);
}

TEST_CASE("config rejects malformed input") {
    for (const char* text : {"[protocol]\nn = 1\nn = 2\n", "[nosuch]\n", "[protocol]\nbogus = 1\n", "n = 1\n",
                             "[protocol\n", "[protocol]\nn\n"}) {
        std::istringstream in(text);
        CHECK_THROWS_AS(Config::parse(in), ConfigError);
    }
    std::istringstream values("[protocol]\nn = 1.5\ngamma = abc\ndelta = 1e400\n");
    const auto cfg = Config::parse(values);
    CHECK_THROWS_AS(cfg.get_uint("protocol", "n"), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("protocol", "gamma"), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("protocol", "delta"), ConfigError);
    CHECK_THROWS_AS(Config::load(scratch("no_such.conf")), ConfigError);
}

TEST_CASE("count values") {
    CHECK(parse_count_value("18446744073709551615", "x") == 18446744073709551615ULL);
    CHECK(parse_count_value("1e18", "x") == 1'000'000'000'000'000'000ULL);
    CHECK_THROWS_AS(parse_count_value("-3", "x"), ConfigError);
    CHECK_THROWS_AS(parse_count_value("1e30", "x"), ConfigError);
}
