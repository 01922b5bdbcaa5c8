#include <cmath>
#include <stdexcept>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "dirne/entropy_core.hpp"
#include "dirne/error_budget.hpp"
#include "dirne/protocol_sim.hpp"

using namespace dirne;
using doctest::Approx;

namespace {

double deg(double d) { return d * std::numbers::pi / 180.0; }

QuantumModel lab_device() {
    return QuantumModel{deg(24.3), deg(-83.08), deg(-118.59), deg(6.92), deg(-28.59), 0.8041, 0.8224};
}

SimulationParams small_run(std::uint64_t n, double gamma, DeviceModel model, std::uint64_t seed) {
    SimulationParams p;
    p.n = n;
    p.gamma = gamma;
    p.omega_exp = 0.76;
    p.delta = 0.005;
    p.model = model;
    p.seed = seed;
    return p;
}

}  // namespace

TEST_CASE("lab device outcome distribution") {
    const auto q = lab_device();
    const double expected[2][2][4] = {
        {{0.810725686320479, 0.045385579510466, 0.042110907410860, 0.101777826758195},
         {0.704141956315558, 0.151969309515388, 0.032045316105554, 0.111843418063501}},
        {{0.706737630658915, 0.035319988205161, 0.146098963072423, 0.111843418063501},
         {0.486039440709753, 0.256018178154322, 0.250147831711358, 0.007794549424566}},
    };
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const auto d = quantum_setting_distribution(q, x, y);
            for (int k = 0; k < 4; ++k) CHECK(d[k >> 1][k & 1] == Approx(expected[x][y][k]).epsilon(1e-12));
        }
    }
    CHECK(model_score(q) == Approx(0.763308986511457).epsilon(1e-13));
    CHECK(model_score(q) > 0.75);
}

TEST_CASE("ideal configuration reaches the Tsirelson bound") {
    const double pi = std::numbers::pi;
    const QuantumModel ideal{pi / 4, 0.0, pi / 4, 3 * pi / 8, 5 * pi / 8, 1.0, 1.0};
    CHECK(model_score(ideal) == Approx(kQuantumMaxScore).epsilon(1e-14));
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const auto d = quantum_setting_distribution(ideal, x, y);
            const double win = (x & y) ? d[0][1] + d[1][0] : d[0][0] + d[1][1];
            CHECK(win == Approx(std::pow(std::cos(pi / 8), 2)).epsilon(1e-14));
        }
    }
}

TEST_CASE("dead detector never clicks") {
    auto q = lab_device();
    q.eta_a = 0.0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const auto d = quantum_setting_distribution(q, x, y);
            CHECK(d[1][0] == 0.0);
            CHECK(d[1][1] == 0.0);
            CHECK(d[0][0] + d[0][1] == Approx(1.0));
        }
    }
}

TEST_CASE("quantum device marginals do not signal") {
    std::mt19937_64 rng(41);
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> eff(0.0, 1.0);
    int violations = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const QuantumModel q{angle(rng), angle(rng), angle(rng), angle(rng), angle(rng), eff(rng), eff(rng)};
        for (int x = 0; x < 2; ++x) {
            const auto d0 = quantum_setting_distribution(q, x, 0);
            const auto d1 = quantum_setting_distribution(q, x, 1);
            if (std::abs((d0[1][0] + d0[1][1]) - (d1[1][0] + d1[1][1])) > 1e-12) ++violations;
        }
        for (int y = 0; y < 2; ++y) {
            const auto d0 = quantum_setting_distribution(q, 0, y);
            const auto d1 = quantum_setting_distribution(q, 1, y);
            if (std::abs((d0[0][1] + d0[1][1]) - (d1[0][1] + d1[1][1])) > 1e-12) ++violations;
        }
        for (int x = 0; x < 2; ++x) {
            for (int y = 0; y < 2; ++y) {
                const auto d = quantum_setting_distribution(q, x, y);
                double sum = 0;
                for (int k = 0; k < 4; ++k) {
                    if (d[k >> 1][k & 1] < -1e-15) ++violations;
                    sum += d[k >> 1][k & 1];
                }
                if (std::abs(sum - 1.0) > 1e-12) ++violations;
            }
        }
    }
    CHECK(violations == 0);
}

TEST_CASE("bernoulli device") {
    const BernoulliModel b{0.8};
    CHECK(model_score(b) == Approx(0.8));
    const auto d = setting_distribution(b, 1, 1);
    CHECK(d[0][1] == Approx(0.4));
    CHECK(d[0][0] == Approx(0.1));
    CHECK_THROWS_AS(validate_model(BernoulliModel{1.5}), std::invalid_argument);
}

TEST_CASE("perfect and broken devices") {
    auto p = small_run(50'000, 1.0, BernoulliModel{1.0}, 1);
    p.delta = 1e-9;
    const auto ok = run_protocol(p);
    CHECK(ok.wins == p.n);
    CHECK_FALSE(ok.aborted);

    p.model = BernoulliModel{0.0};
    const auto bad = run_protocol(p);
    CHECK(bad.wins == 0);
    CHECK(bad.aborted);
}

TEST_CASE("records follow the protocol rules") {
    const auto tr = run_protocol(small_run(300'000, 0.05, lab_device(), 7));
    REQUIRE(tr.has_records());
    std::uint64_t wins = 0;
    std::uint64_t tests = 0;
    for (std::uint8_t byte : tr.records) {
        const auto r = RoundRecord::unpack(byte);
        CHECK(RoundRecord::unpack(r.pack()).pack() == byte);
        if (r.test) {
            ++tests;
            CHECK(r.win == ((r.a ^ r.b) == (r.x && r.y)));
            wins += r.win;
        } else {
            CHECK_FALSE(r.x);
            CHECK_FALSE(r.y);
            CHECK_FALSE(r.b);
            CHECK_FALSE(r.win);
        }
    }
    CHECK(wins == tr.wins);
    CHECK(tests == tr.tally.test_rounds());
    CHECK(tr.tally.total_rounds() == tr.n);
    CHECK(tr.abort_threshold == Approx(300'000 * 0.05 * (0.76 - 0.005)));
    CHECK(tr.aborted == (static_cast<double>(tr.wins) < tr.abort_threshold));
    // 15000 tests: a 4σ window on the test count
    CHECK(std::abs(static_cast<double>(tests) - 15000.0) < 4 * std::sqrt(15000.0 * 0.95));

    const BitVector raw = extractor_input(tr);
    CHECK(raw.size() == tr.n + tests);
}

TEST_CASE("simulation is deterministic and thread-independent") {
    for (std::uint64_t n : {1ULL, 1000ULL, 2'500'000ULL}) {
        auto p = small_run(n, 0.01, lab_device(), 99);
        p.block_rounds = 1 << 16;
        const auto a = run_protocol(p);
        const auto b = run_protocol_serial(p);
        const auto c = run_protocol(p);
        CHECK(a.tally == b.tally);
        CHECK(a.records == b.records);
        CHECK(a.tally == c.tally);
        CHECK(a.wins == b.wins);

        p.record_threshold = 0;  // tally mode
        const auto ta = run_protocol(p);
        const auto tb = run_protocol_serial(p);
        CHECK_FALSE(ta.has_records());
        CHECK(ta.tally == tb.tally);
        CHECK(ta.tally.total_rounds() == n);
        // test rounds come from the same streams in both modes
        CHECK(ta.tally.counts == a.tally.counts);
    }
    auto p = small_run(100'000, 0.01, lab_device(), 1);
    auto q = p;
    q.seed = 2;
    CHECK_FALSE(run_protocol(p).tally == run_protocol(q).tally);
}

TEST_CASE("empirical score tracks the device") {
    auto p = small_run(20'000'000, 0.05, lab_device(), 5);
    p.record_threshold = 0;
    const auto tr = run_protocol(p);
    // ~10⁶ test rounds: standard error of the score about 4e-4
    CHECK(tr.empirical_score() == Approx(model_score(lab_device())).epsilon(0.003));
    const auto& g = tr.tally.gen_counts;
    const double gen = static_cast<double>(tr.tally.generation_rounds());
    const auto d = quantum_setting_distribution(lab_device(), 0, 0);
    CHECK(g[1][1] / gen == Approx(d[1][1]).epsilon(0.02));
}

TEST_CASE("score from counts") {
    TrialTally all_win;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) all_win.counts[x][y][x & y][0] = 10 + x + y;
    }
    CHECK(chsh_score_from_counts(all_win) == 1.0);
    TrialTally empty;
    empty.counts[0][0][0][0] = 5;
    CHECK_THROWS_AS(chsh_score_from_counts(empty), std::invalid_argument);

    const auto train = read_tally_file(DIRNE_DATA_DIR "/training_counts.tally");
    CHECK(chsh_score_from_counts(train) == Approx(0.75080931).epsilon(1e-8));
    const auto exp = read_tally_file(DIRNE_DATA_DIR "/experiment_counts.tally");
    CHECK(chsh_score_from_counts(exp) == Approx(0.75080502).epsilon(1e-8));
    CHECK(exp.gen_counts[0][0] == 3079174741623ULL);
}

TEST_CASE("recorded count tables do not signal") {
    for (const char* name : {"/training_counts.tally", "/experiment_counts.tally"}) {
        const auto t = read_tally_file(std::string(DIRNE_DATA_DIR) + name);
        const auto frac = [&](int x, int y, bool alice) {
            double hit = 0, total = 0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    const double c = static_cast<double>(t.counts[x][y][a][b]);
                    total += c;
                    if (alice ? a : b) hit += c;
                }
            }
            return hit / total;
        };
        for (int x = 0; x < 2; ++x) CHECK(frac(x, 0, true) == Approx(frac(x, 1, true)).epsilon(0.02));
        for (int y = 0; y < 2; ++y) CHECK(frac(0, y, false) == Approx(frac(1, y, false)).epsilon(0.02));
    }
}

TEST_CASE("tally text format") {
    TrialTally t;
    t.counts[1][0][1][1] = 12345678901234ULL;
    t.counts[0][1][0][0] = 7;
    t.gen_counts[1][0] = 42;
    std::stringstream ss;
    write_tally(ss, t);
    CHECK(read_tally(ss) == t);

    std::istringstream repeated("# note\n0 0 1 1 5\n0 0 1 1 6\ngen 0 0 3\n");
    const auto r = read_tally(repeated);
    CHECK(r.counts[0][0][1][1] == 11);
    CHECK(r.gen_counts[0][0] == 3);

    for (const char* bad : {"0 0 1 2 5\n", "0 0 1 5\n", "gen 0 0 -3\n", "0 0 1 1 5 extra\n", "x 0 1 1 5\n"}) {
        std::istringstream in(bad);
        CHECK_THROWS_AS(read_tally(in), std::invalid_argument);
    }
}

TEST_CASE("heralding efficiency") {
    const auto [ea, eb] = heralding_efficiency(100, 100, 100);
    CHECK(ea == 1.0);
    CHECK(eb == 1.0);
    CHECK(heralding_efficiency(8041, 9000, 10000).first == Approx(0.8041));
    CHECK(heralding_efficiency(0, 5, 5).first == 0.0);
    CHECK_THROWS_AS(heralding_efficiency(10, 5, 20), std::invalid_argument);
    CHECK_THROWS_AS(heralding_efficiency(0, 0, 20), std::invalid_argument);
}

TEST_CASE("spacelike separation checks") {
    SpacetimeGeometry g{93, 90, 191, 173.5, 10, 96, 96, 270, 230, 112, 100, 55, 100};
    CHECK(spacetime_check(g).all());

    const SpacetimeGeometry zero{};
    const auto z = spacetime_check(zero);
    CHECK_FALSE(z.locality_a);
    CHECK_FALSE(z.locality_b);

    g.path_sa_m *= 2;
    const auto doubled = spacetime_check(g);
    CHECK_FALSE(doubled.mi_a);
    CHECK(doubled.mi_b);

    g.dist_sa_m = -1;
    CHECK_THROWS_AS(spacetime_check(g), std::invalid_argument);
}

TEST_CASE("biased bits from a uniform source") {
    std::mt19937_64 rng(43);
    BitVector source(4'000'000);
    for (auto& w : source.words()) w = rng();
    const double gamma = 1e-2;
    const std::uint64_t count = 2'000'000;
    const auto out = biased_bits(gamma, count, source);
    const double ones = static_cast<double>(out.bits.popcount());
    CHECK(std::abs(ones - gamma * count) < 5 * std::sqrt(count * gamma * (1 - gamma)));
    // interval coding spends about H(γ) bits per output bit
    const double ideal = count * h_bin(gamma);
    CHECK(static_cast<double>(out.consumed) == Approx(ideal).epsilon(0.01));

    // consecutive-pair independence: ones following ones at rate γ
    std::uint64_t pairs = 0;
    for (std::uint64_t i = 1; i < count; ++i) pairs += out.bits.get(i) && out.bits.get(i - 1);
    const double expect = (count - 1) * gamma * gamma;
    CHECK(std::abs(pairs - expect) < 5 * std::sqrt(expect));

    const auto again = biased_bits(gamma, count, source);
    CHECK(again.bits == out.bits);

    CHECK_THROWS_AS(biased_bits(0.3, 1000, BitVector(64)), SourceExhausted);
    CHECK_THROWS_AS(biased_bits(0.0, 10, source), std::invalid_argument);
}
