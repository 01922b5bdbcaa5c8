#include "dirne/protocol_sim.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>

namespace dirne {

namespace {

enum class Stream : std::uint64_t {
    round_type = 1,
    alice_input = 2,
    bob_input = 3,
    device = 4,
    gen_device = 5,
};

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::mt19937_64 substream(std::uint64_t seed, Stream role, std::uint64_t block) {
    const std::uint64_t key =
        splitmix64(splitmix64(splitmix64(seed) ^ static_cast<std::uint64_t>(role)) ^ block);
    return std::mt19937_64(key);
}

// Uniform on (0, 1], 53 random bits.
double unit_open_closed(std::mt19937_64& rng) {
    return static_cast<double>((rng() >> 11) + 1) * 0x1.0p-53;
}

// Uniform on [0, 1).
double unit_closed_open(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

int random_bit(std::mt19937_64& rng) { return static_cast<int>(rng() >> 63); }

// Index 2a + b of an outcome drawn from dist.
int sample_outcome(const OutcomeDistribution& dist, double u) {
    double acc = 0.0;
    for (int k = 0; k < 3; ++k) {
        acc += dist[k >> 1][k & 1];
        if (u < acc) return k;
    }
    return 3;
}

struct Distributions {
    std::array<std::array<OutcomeDistribution, 2>, 2> test;
};

void simulate_block(const SimulationParams& p, const Distributions& dist, std::uint64_t block, bool keep_records,
                    std::uint8_t* records, TrialTally& tally) {
    const std::uint64_t begin = block * p.block_rounds;
    const std::uint64_t end = std::min(p.n, begin + p.block_rounds);
    auto types = substream(p.seed, Stream::round_type, block);
    auto alice = substream(p.seed, Stream::alice_input, block);
    auto bob = substream(p.seed, Stream::bob_input, block);
    auto device = substream(p.seed, Stream::device, block);
    auto gen = substream(p.seed, Stream::gen_device, block);
    const OutcomeDistribution& gen_dist = dist.test[0][0];
    const double log_skip = std::log1p(-p.gamma);  // −inf when γ = 1

    const auto next_test = [&](std::uint64_t from) -> std::uint64_t {
        const double gap = std::floor(std::log(unit_open_closed(types)) / log_skip);
        if (!(gap < static_cast<double>(end - from))) return end;
        return from + static_cast<std::uint64_t>(gap);
    };
    const auto generation_rounds = [&](std::uint64_t from, std::uint64_t to) {
        if (keep_records) {
            for (std::uint64_t i = from; i < to; ++i) {
                const int k = sample_outcome(gen_dist, unit_closed_open(gen));
                const int a = k >> 1;
                const int b = k & 1;
                ++tally.gen_counts[a][b];
                RoundRecord r;
                r.a = a;
                records[i - begin] = r.pack();
            }
        }
    };

    std::uint64_t generation_total = 0;
    std::uint64_t cursor = begin;
    while (cursor < end) {
        const std::uint64_t t = next_test(cursor);
        generation_rounds(cursor, t);
        generation_total += t - cursor;
        if (t == end) break;
        const int x = random_bit(alice);
        const int y = random_bit(bob);
        const int k = sample_outcome(dist.test[x][y], unit_closed_open(device));
        const int a = k >> 1;
        const int b = k & 1;
        ++tally.counts[x][y][a][b];
        if (keep_records) {
            RoundRecord r;
            r.test = true;
            r.x = x;
            r.y = y;
            r.a = a;
            r.b = b;
            r.win = (a ^ b) == (x & y);
            records[t - begin] = r.pack();
        }
        cursor = t + 1;
    }

    if (!keep_records && generation_total > 0) {
        // Multinomial split by successive conditional binomials.
        std::uint64_t left = generation_total;
        double mass_left = 1.0;
        for (int k = 0; k < 3 && left > 0; ++k) {
            const double pk = gen_dist[k >> 1][k & 1];
            const double cond = mass_left > 0.0 ? std::clamp(pk / mass_left, 0.0, 1.0) : 1.0;
            std::binomial_distribution<std::uint64_t> draw(left, cond);
            const std::uint64_t c = draw(gen);
            tally.gen_counts[k >> 1][k & 1] += c;
            left -= c;
            mass_left -= pk;
        }
        tally.gen_counts[1][1] += left;
    }
}

Transcript run(const SimulationParams& params, bool parallel) {
    params.validate();
    Distributions dist;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) dist.test[x][y] = setting_distribution(params.model, x, y);
    }
    const bool keep_records = params.n <= params.record_threshold;
    Transcript tr;
    tr.n = params.n;
    if (keep_records) tr.records.assign(params.n, 0);

    const std::uint64_t blocks = (params.n + params.block_rounds - 1) / params.block_rounds;
    std::vector<TrialTally> tallies(blocks);
    std::exception_ptr error;
#pragma omp parallel for schedule(dynamic) if (parallel)
    for (std::int64_t k = 0; k < static_cast<std::int64_t>(blocks); ++k) {
        try {
            const auto block = static_cast<std::uint64_t>(k);
            std::uint8_t* out = keep_records ? tr.records.data() + block * params.block_rounds : nullptr;
            simulate_block(params, dist, block, keep_records, out, tallies[block]);
        } catch (...) {
#pragma omp critical(dirne_sim_error)
            if (!error) error = std::current_exception();
        }
    }
    if (error) std::rethrow_exception(error);

    for (const auto& t : tallies) tr.tally += t;
    tr.wins = tr.tally.wins();
    tr.abort_threshold = static_cast<double>(params.n) * params.gamma * (params.omega_exp - params.delta);
    tr.aborted = static_cast<double>(tr.wins) < tr.abort_threshold;
    return tr;
}

}  // namespace

void validate_model(const DeviceModel& model) {
    if (const auto* b = std::get_if<BernoulliModel>(&model)) {
        if (!(b->omega >= 0.0 && b->omega <= 1.0)) {
            throw std::invalid_argument("bernoulli model: omega must lie in [0,1]");
        }
        return;
    }
    const auto& q = std::get<QuantumModel>(model);
    for (double angle : {q.theta, q.a0, q.a1, q.b0, q.b1}) {
        if (!std::isfinite(angle)) throw std::invalid_argument("quantum model: angles must be finite");
    }
    if (!(q.eta_a >= 0.0 && q.eta_a <= 1.0 && q.eta_b >= 0.0 && q.eta_b <= 1.0)) {
        throw std::invalid_argument("quantum model: efficiencies must lie in [0,1]");
    }
}

OutcomeDistribution quantum_setting_distribution(const QuantumModel& m, int x, int y) {
    const double phi_a = x ? m.a1 : m.a0;
    const double phi_b = y ? m.b1 : m.b0;
    const double ct = std::cos(m.theta);
    const double st = std::sin(m.theta);
    const double ca = std::cos(phi_a);
    const double sa = std::sin(phi_a);
    const double cb = std::cos(phi_b);
    const double sb = std::sin(phi_b);
    // ⟨φ_A φ_B|ψ⟩ for ψ = cos θ|HV⟩ + sin θ|VH⟩
    const double amp = ct * ca * sb + st * sa * cb;
    const double proj_a = ct * ct * ca * ca + st * st * sa * sa;
    const double proj_b = ct * ct * sb * sb + st * st * cb * cb;
    const double p11 = m.eta_a * m.eta_b * amp * amp;
    const double pa = m.eta_a * proj_a;
    const double pb = m.eta_b * proj_b;
    OutcomeDistribution d;
    d[1][1] = p11;
    d[1][0] = pa - p11;
    d[0][1] = pb - p11;
    d[0][0] = 1.0 - pa - pb + p11;
    return d;
}

OutcomeDistribution setting_distribution(const DeviceModel& model, int x, int y) {
    if (const auto* q = std::get_if<QuantumModel>(&model)) return quantum_setting_distribution(*q, x, y);
    const double w = std::get<BernoulliModel>(model).omega;
    OutcomeDistribution d;
    for (int a = 0; a < 2; ++a) {
        for (int b = 0; b < 2; ++b) d[a][b] = ((a ^ b) == (x & y) ? w : 1.0 - w) / 2.0;
    }
    return d;
}

double model_score(const DeviceModel& model) {
    double total = 0.0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            const auto d = setting_distribution(model, x, y);
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    if ((a ^ b) == (x & y)) total += d[a][b];
                }
            }
        }
    }
    return total / 4.0;
}

std::uint64_t TrialTally::test_rounds() const {
    std::uint64_t total = 0;
    for (const auto& xs : counts)
        for (const auto& ys : xs)
            for (const auto& as : ys)
                for (std::uint64_t c : as) total += c;
    return total;
}

std::uint64_t TrialTally::generation_rounds() const {
    return gen_counts[0][0] + gen_counts[0][1] + gen_counts[1][0] + gen_counts[1][1];
}

std::uint64_t TrialTally::wins() const {
    std::uint64_t total = 0;
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    if ((a ^ b) == (x & y)) total += counts[x][y][a][b];
    return total;
}

TrialTally& TrialTally::operator+=(const TrialTally& o) {
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b) counts[x][y][a][b] += o.counts[x][y][a][b];
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) gen_counts[a][b] += o.gen_counts[a][b];
    return *this;
}

double chsh_score_from_counts(const TrialTally& tally) {
    double score = 0.0;
    for (int x = 0; x < 2; ++x) {
        for (int y = 0; y < 2; ++y) {
            std::uint64_t total = 0;
            std::uint64_t won = 0;
            for (int a = 0; a < 2; ++a) {
                for (int b = 0; b < 2; ++b) {
                    total += tally.counts[x][y][a][b];
                    if ((a ^ b) == (x & y)) won += tally.counts[x][y][a][b];
                }
            }
            if (total == 0) {
                throw std::invalid_argument("chsh score: setting (" + std::to_string(x) + "," +
                                            std::to_string(y) + ") has no test rounds");
            }
            score += static_cast<double>(won) / static_cast<double>(total);
        }
    }
    return score / 4.0;
}

std::uint8_t RoundRecord::pack() const {
    return static_cast<std::uint8_t>(test | (x << 1) | (y << 2) | (a << 3) | (b << 4) | (win << 5));
}

RoundRecord RoundRecord::unpack(std::uint8_t v) {
    RoundRecord r;
    r.test = v & 1;
    r.x = (v >> 1) & 1;
    r.y = (v >> 2) & 1;
    r.a = (v >> 3) & 1;
    r.b = (v >> 4) & 1;
    r.win = (v >> 5) & 1;
    return r;
}

void SimulationParams::validate() const {
    if (n == 0) throw std::invalid_argument("simulation: n must be positive");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw std::invalid_argument("simulation: gamma must lie in (0,1]");
    if (!(omega_exp >= 0.0 && omega_exp <= 1.0)) throw std::invalid_argument("simulation: omega_exp must lie in [0,1]");
    if (!(delta > 0.0)) throw std::invalid_argument("simulation: delta must be positive");
    if (block_rounds == 0) throw std::invalid_argument("simulation: block size must be positive");
    validate_model(model);
}

Transcript run_protocol(const SimulationParams& params) { return run(params, true); }

Transcript run_protocol_serial(const SimulationParams& params) { return run(params, false); }

BitVector extractor_input(const Transcript& tr) {
    if (!tr.has_records()) throw std::invalid_argument("extractor_input: transcript holds no per-round records");
    BitVector out(tr.n + tr.tally.test_rounds());
    std::uint64_t k = tr.n;
    for (std::uint64_t i = 0; i < tr.n; ++i) {
        const RoundRecord r = RoundRecord::unpack(tr.records[i]);
        out.set(i, r.a);
        if (r.test) out.set(k++, r.b);
    }
    return out;
}

std::pair<double, double> heralding_efficiency(std::uint64_t coincidences, std::uint64_t n_a, std::uint64_t n_b) {
    if (n_a == 0 || n_b == 0) throw std::invalid_argument("heralding_efficiency: singles counts must be positive");
    if (coincidences > std::min(n_a, n_b)) {
        throw std::invalid_argument("heralding_efficiency: coincidences exceed singles");
    }
    const double c = static_cast<double>(coincidences);
    return {c / static_cast<double>(n_b), c / static_cast<double>(n_a)};
}

void SpacetimeGeometry::validate() const {
    for (double v : {dist_sa_m, dist_sb_m, path_sa_m, path_sb_m, t_e_ns, t_qrng_a_ns, t_qrng_b_ns, t_delay_a_ns,
                     t_delay_b_ns, t_pc_a_ns, t_pc_b_ns, t_m_a_ns, t_m_b_ns}) {
        if (!(v >= 0.0)) throw std::invalid_argument("spacetime geometry: values must be nonnegative");
    }
}

SpacetimeResult spacetime_check(const SpacetimeGeometry& g) {
    g.validate();
    const auto ns = [](double metres) { return metres / kSpeedOfLight * 1e9; };
    const double separation = ns(g.dist_sa_m + g.dist_sb_m);
    const double path_skew = ns(g.path_sa_m - g.path_sb_m);
    SpacetimeResult r;
    r.locality_a = separation > g.t_e_ns - path_skew + g.t_qrng_a_ns + g.t_delay_a_ns + g.t_pc_a_ns + g.t_m_a_ns;
    r.locality_b = separation > g.t_e_ns + path_skew + g.t_qrng_b_ns + g.t_delay_b_ns + g.t_pc_b_ns + g.t_m_b_ns;
    r.mi_a = ns(g.dist_sa_m) > ns(g.path_sa_m) - g.t_delay_a_ns - g.t_pc_a_ns;
    r.mi_b = ns(g.dist_sb_m) > ns(g.path_sb_m) - g.t_delay_b_ns - g.t_pc_b_ns;
    return r;
}

}  // namespace dirne
