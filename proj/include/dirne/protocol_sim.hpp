#pragma once

// Honest-device simulation of the spot-checking CHSH protocol, count tables
// and their score, biased input bits, and the timing checks of the optical
// layout.

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <utility>
#include <variant>
#include <vector>

#include "dirne/bit_file.hpp"

namespace dirne {

/// Each test round is won with probability omega, whatever the inputs.
struct BernoulliModel {
    double omega = 0.0;
};

/// One photon pair in cos θ|HV⟩ + sin θ|VH⟩. Each side clicks (outcome 1)
/// with probability η times the projection onto cos φ|H⟩ + sin φ|V⟩ for its
/// analyzer angle φ. Angles in radians.
struct QuantumModel {
    double theta = 0.0;
    double a0 = 0.0;
    double a1 = 0.0;
    double b0 = 0.0;
    double b1 = 0.0;
    double eta_a = 1.0;
    double eta_b = 1.0;
};

using DeviceModel = std::variant<BernoulliModel, QuantumModel>;

/// Throws std::invalid_argument when a field is out of range.
void validate_model(const DeviceModel& model);

/// P(a, b) indexed as [a][b].
using OutcomeDistribution = std::array<std::array<double, 2>, 2>;

/// Outcome distribution of the quantum model for inputs (x, y).
OutcomeDistribution quantum_setting_distribution(const QuantumModel& model, int x, int y);

/// Outcome distribution for any model. The Bernoulli model splits its win
/// and loss mass evenly over the two matching (a, b) pairs.
OutcomeDistribution setting_distribution(const DeviceModel& model, int x, int y);

/// Expected CHSH score (1/4)·Σ_xy P(a⊕b = x·y | x, y).
double model_score(const DeviceModel& model);

struct TrialTally {
    // counts[x][y][a][b] for test rounds, gen_counts[a][b] for generation
    // rounds (b as produced by the device, before it is zeroed).
    std::array<std::array<std::array<std::array<std::uint64_t, 2>, 2>, 2>, 2> counts{};
    std::array<std::array<std::uint64_t, 2>, 2> gen_counts{};

    std::uint64_t test_rounds() const;
    std::uint64_t generation_rounds() const;
    std::uint64_t total_rounds() const { return test_rounds() + generation_rounds(); }
    std::uint64_t wins() const;

    TrialTally& operator+=(const TrialTally& other);
    friend bool operator==(const TrialTally&, const TrialTally&) = default;
};

/// (1/4)·Σ_xy (wins in setting xy)/(rounds in setting xy). Throws
/// std::invalid_argument when a setting has no rounds.
double chsh_score_from_counts(const TrialTally& tally);

/// Text form: `x y a b count` lines for test rounds, `gen a b count` for
/// generation rounds, `#` starts a comment. Repeated keys accumulate.
TrialTally read_tally(std::istream& in);
TrialTally read_tally_file(const std::filesystem::path& path);
void write_tally(std::ostream& out, const TrialTally& tally);
void write_tally_file(const std::filesystem::path& path, const TrialTally& tally);

/// One round, packed into a byte.
struct RoundRecord {
    bool test = false;  // T
    bool x = false;
    bool y = false;
    bool a = false;
    bool b = false;
    bool win = false;   // U = 1; U = ⊥ iff !test

    std::uint8_t pack() const;
    static RoundRecord unpack(std::uint8_t byte);
};

struct Transcript {
    std::uint64_t n = 0;
    TrialTally tally;
    std::vector<std::uint8_t> records;  // per-round RoundRecord bytes, empty in tally mode
    std::uint64_t wins = 0;
    double abort_threshold = 0.0;       // nγ(ω_exp − δ)
    bool aborted = false;

    bool has_records() const { return !records.empty(); }
    double empirical_score() const { return chsh_score_from_counts(tally); }
};

struct SimulationParams {
    std::uint64_t n = 0;
    double gamma = 0.0;
    double omega_exp = 0.0;
    double delta = 0.0;
    DeviceModel model = BernoulliModel{0.0};
    std::uint64_t seed = 0;
    std::uint64_t record_threshold = 100'000'000;  // keep per-round records up to this n
    std::uint64_t block_rounds = 1U << 20;

    void validate() const;
};

/// Rounds are simulated in fixed blocks; block k draws from generators seeded
/// by (seed, role, k), so the result depends on neither thread count nor
/// scheduling. Records mode samples every generation round; tally mode draws
/// the generation outcome counts in bulk.
Transcript run_protocol(const SimulationParams& params);

/// Block-by-block reference on the calling thread.
Transcript run_protocol_serial(const SimulationParams& params);

/// Extractor input from a recorded transcript: Alice's outputs for all
/// rounds followed by Bob's outputs for test rounds.
BitVector extractor_input(const Transcript& transcript);

/// (η_A, η_B) = (C/N_B, C/N_A).
std::pair<double, double> heralding_efficiency(std::uint64_t coincidences, std::uint64_t n_a,
                                               std::uint64_t n_b);

inline constexpr double kSpeedOfLight = 299'792'458.0;  // m/s

struct SpacetimeGeometry {
    double dist_sa_m = 0.0;
    double dist_sb_m = 0.0;
    double path_sa_m = 0.0;  // effective optical path source to A
    double path_sb_m = 0.0;
    double t_e_ns = 0.0;
    double t_qrng_a_ns = 0.0;
    double t_qrng_b_ns = 0.0;
    double t_delay_a_ns = 0.0;
    double t_delay_b_ns = 0.0;
    double t_pc_a_ns = 0.0;
    double t_pc_b_ns = 0.0;
    double t_m_a_ns = 0.0;
    double t_m_b_ns = 0.0;

    void validate() const;
};

struct SpacetimeResult {
    bool locality_a = false;
    bool locality_b = false;
    bool mi_a = false;  // measurement independence
    bool mi_b = false;

    bool all() const { return locality_a && locality_b && mi_a && mi_b; }
};

SpacetimeResult spacetime_check(const SpacetimeGeometry& geom);

/// Thrown when the uniform source runs dry.
class SourceExhausted : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct BiasedBits {
    BitVector bits;
    std::uint64_t consumed = 0;  // uniform bits used, net of those still held in the coder
};

/// `count` bits, each 1 with probability γ (to within 2⁻⁶²), decoded from
/// the uniform source with an integer interval coder.
BiasedBits biased_bits(double gamma, std::uint64_t count, const BitVector& uniform_source);

}  // namespace dirne
