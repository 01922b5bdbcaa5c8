#include "dirne/commands.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dirne/entropy_core.hpp"
#include "dirne/error_budget.hpp"
#include "dirne/errors.hpp"
#include "dirne/extractor.hpp"
#include "dirne/optimizer.hpp"
#include "dirne/protocol_sim.hpp"

namespace dirne {

using nlohmann::json;

namespace {

std::string fmt(double v) {
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

json config_json(const Config& cfg) {
    json j = json::object();
    for (const auto& [section, keys] : cfg.entries()) {
        for (const auto& [key, value] : keys) j[section][key] = value;
    }
    return j;
}

ErrorBudget budget_from(const Config& cfg) {
    const double fraction = cfg.find_double("budget", "extractor_fraction").value_or(kDefaultExtractorFraction);
    return ErrorBudget::from_soundness(cfg.get_double("budget", "eps_s"), cfg.get_double("budget", "eps_c"), fraction);
}

json budget_json(const ErrorBudget& b) {
    return {{"eps_s", b.eps_s},     {"eps_c", b.eps_c},     {"eps_ext", b.eps_ext},
            {"eps_h", b.eps_h},     {"eps_eat", b.eps_eat},
            {"soundness", soundness_compose(b.eps_eat, b.eps_ext, b.eps_h)}};
}

json certificate_json(const EntropyCertificate& c) {
    const double n = static_cast<double>(c.n);
    return {{"hmin_lower", c.hmin_lower},
            {"n_times_threshold_r", n * c.threshold_r},
            {"n_times_inner_inf", n * c.inner_inf_value},
            {"error_term_alpha", c.error_term_alpha},
            {"threshold_r", c.threshold_r},
            {"inner_inf_value", c.inner_inf_value},
            {"inner_q_star", c.inner_q_star},
            {"rate_per_round", c.rate_per_round},
            {"alpha", c.alpha},
            {"alpha_minus_one", c.alpha - 1.0},
            {"t", c.t},
            {"c_perp", c.c_perp},
            {"n", c.n}};
}

ThresholdMode threshold_mode_from(const Config& cfg) {
    const std::string mode = cfg.find_string("protocol", "threshold_mode").value_or("spot_check");
    if (mode == "spot_check") return ThresholdMode::spot_check;
    if (mode == "worst_case") return ThresholdMode::worst_case;
    throw ConfigError("protocol.threshold_mode must be spot_check or worst_case");
}

DeviceModel device_from(const Config& cfg) {
    const std::string model = cfg.get_string("device", "model");
    if (model == "bernoulli") return BernoulliModel{cfg.get_double("device", "omega")};
    if (model == "quantum") {
        const auto rad = [&](const char* key) { return cfg.get_double("device", key) * std::numbers::pi / 180.0; };
        QuantumModel q;
        q.theta = rad("theta_deg");
        q.a0 = rad("a0_deg");
        q.a1 = rad("a1_deg");
        q.b0 = rad("b0_deg");
        q.b1 = rad("b1_deg");
        q.eta_a = cfg.find_double("device", "eta_a").value_or(1.0);
        q.eta_b = cfg.find_double("device", "eta_b").value_or(1.0);
        return q;
    }
    throw ConfigError("device.model must be bernoulli or quantum");
}

PlanOptions plan_options_from(const Config& cfg) {
    PlanOptions o;
    if (auto g = cfg.find_uint("plan", "gamma_grid_points")) o.gamma_grid_points = static_cast<int>(*g);
    if (auto p = cfg.find_bool("plan", "parallel")) o.parallel = *p;
    o.extractor_fraction = cfg.find_double("budget", "extractor_fraction").value_or(kDefaultExtractorFraction);
    return o;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create " + path);
    out << text;
    if (!out) throw std::runtime_error("write failed for " + path);
}

std::string sweep_csv(const std::vector<CurvePoint>& rows) {
    std::ostringstream os;
    os << "gamma,n,delta,net_bits,net_rate\n";
    for (const auto& r : rows) {
        os << fmt(r.gamma) << ',' << r.n << ',' << fmt(r.delta) << ',' << fmt(r.net_bits) << ',' << fmt(r.net_rate)
           << '\n';
    }
    return os.str();
}

// Writes csv to `path` if given, otherwise hands it back for stdout.
void emit_csv(CommandResult& res, const std::optional<std::string>& path, std::string csv) {
    if (path) {
        write_text(*path, csv);
        res.report["csv"] = *path;
    } else {
        res.csv = std::move(csv);
    }
}

}  // namespace

CommandResult cmd_certify(const Config& cfg) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "certify";
    rep["config"] = config_json(cfg);

    const std::uint64_t n = cfg.get_uint("protocol", "n");
    const double gamma = cfg.get_double("protocol", "gamma");
    std::optional<double> tally_score;
    if (auto path = cfg.find_string("protocol", "tally")) {
        tally_score = chsh_score_from_counts(read_tally_file(*path));
        rep["tally_score"] = *tally_score;
    }
    const auto omega_cfg = cfg.find_double("protocol", "omega_exp");
    if (!omega_cfg && !tally_score) throw ConfigError("certify needs protocol.omega_exp or protocol.tally");
    const double omega = omega_cfg ? *omega_cfg : *tally_score;
    const ErrorBudget budget = budget_from(cfg);

    std::string delta_source = "config";
    double delta;
    if (auto d = cfg.find_double("protocol", "delta")) {
        delta = *d;
    } else {
        delta = min_delta_for_completeness(n, gamma, omega, budget.eps_c);
        if (completeness_error(n, gamma, omega, delta).value > budget.eps_c) {
            throw ConfigError("infeasible budget: no delta meets eps_c = " + fmt(budget.eps_c));
        }
        delta_source = "completeness";
    }

    ProtocolParams p;
    p.n = n;
    p.gamma = gamma;
    p.omega_exp = omega;
    p.delta = delta;
    p.eps_h = budget.eps_h;
    p.eps_eat = budget.eps_eat;
    p.threshold_mode = threshold_mode_from(cfg);
    p.validate();

    const int fixed = cfg.has("search", "alpha") + cfg.has("search", "t") + cfg.has("search", "c_perp");
    EntropyCertificate cert;
    if (fixed == 3) {
        cert = certificate_at(p, {cfg.get_double("search", "alpha"), cfg.get_double("search", "t"),
                                  cfg.get_double("search", "c_perp")});
    } else if (fixed == 0) {
        OuterOptions opts;
        if (auto s = cfg.find_uint("search", "max_sweeps")) opts.max_sweeps = static_cast<int>(*s);
        cert = outer_optimize(p, opts);
    } else {
        throw ConfigError("search.alpha, search.t and search.c_perp must be given together");
    }

    const CompletenessBound comp = completeness_error(n, gamma, omega, delta);
    const double margin = extractor_margin(budget.eps_ext);
    const double extractable = extractable_bits(cert, budget.eps_ext);
    const double input = input_randomness(static_cast<double>(n), gamma);
    const double net = extractable - input;

    rep["protocol"] = {{"n", n},
                       {"gamma", gamma},
                       {"omega_exp", omega},
                       {"delta", delta},
                       {"delta_source", delta_source},
                       {"threshold_mode", p.threshold_mode == ThresholdMode::spot_check ? "spot_check" : "worst_case"}};
    rep["budget"] = budget_json(budget);
    rep["completeness"] = {{"bound", comp.value},
                           {"abort_threshold", comp.abort_threshold},
                           {"degenerate", comp.degenerate},
                           {"within_budget", comp.value <= budget.eps_c}};
    rep["certificate"] = certificate_json(cert);
    rep["output"] = {{"extractor_margin", margin},
                     {"extractable_bits", extractable},
                     {"input_bits", input},
                     {"net_bits", net},
                     {"net_rate", net / static_cast<double>(n)},
                     {"expansion", net > 0.0}};
    res.exit_code = net > 0.0 ? kExitOk : kExitNoExpansion;
    return res;
}

CommandResult cmd_plan(const Config& cfg) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "plan";
    rep["config"] = config_json(cfg);
    const double omega = cfg.get_double("protocol", "omega_exp");
    const double eps_s = cfg.get_double("budget", "eps_s");
    const double eps_c = cfg.get_double("budget", "eps_c");
    const PlanOptions opts = plan_options_from(cfg);
    const PlanResult plan = plan_protocol(omega, eps_s, eps_c, opts);

    rep["feasible"] = plan.feasible;
    if (!plan.feasible) {
        rep["reason"] = "no n up to 1e18 rounds achieves net expansion";
        res.exit_code = kExitNoExpansion;
        return res;
    }
    rep["plan"] = {{"n_min", plan.n_min},
                   {"gamma_opt", plan.gamma_opt},
                   {"delta", plan.delta},
                   {"net_bits", plan.net_bits},
                   {"completeness", plan.completeness},
                   {"input_bits", plan.input_bits},
                   {"extractable_bits", plan.extractable_bits}};
    rep["budget"] = budget_json(ErrorBudget::from_soundness(eps_s, eps_c, opts.extractor_fraction));
    rep["certificate"] = certificate_json(plan.certificate);

    if (auto path = cfg.find_string("plan", "sweep_csv")) {
        std::vector<double> gammas;
        if (cfg.has("curve", "gammas")) {
            gammas = cfg.get_doubles("curve", "gammas");
        } else {
            for (int i = -10; i <= 10; ++i) gammas.push_back(plan.gamma_opt * std::pow(10.0, i / 10.0));
        }
        write_text(*path, sweep_csv(gamma_sweep(plan.n_min, omega, eps_s, eps_c, gammas, opts)));
        rep["sweep_csv"] = *path;
    }
    return res;
}

CommandResult cmd_simulate(const Config& cfg) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "simulate";
    rep["config"] = config_json(cfg);

    SimulationParams sp;
    sp.n = cfg.get_uint("protocol", "n");
    sp.gamma = cfg.get_double("protocol", "gamma");
    sp.omega_exp = cfg.get_double("protocol", "omega_exp");
    sp.delta = cfg.get_double("protocol", "delta");
    sp.model = device_from(cfg);
    sp.seed = cfg.find_uint("simulate", "seed").value_or(0);
    if (auto t = cfg.find_uint("simulate", "record_threshold")) sp.record_threshold = *t;
    if (auto b = cfg.find_uint("simulate", "block_rounds")) sp.block_rounds = *b;
    sp.validate();
    const auto raw_out = cfg.find_string("simulate", "raw_out");
    if (raw_out && sp.n > sp.record_threshold) {
        throw ConfigError("simulate.raw_out needs per-round records; n exceeds simulate.record_threshold");
    }

    const bool parallel = cfg.find_bool("simulate", "parallel").value_or(true);
    const Transcript tr = parallel ? run_protocol(sp) : run_protocol_serial(sp);

    rep["rounds"] = tr.n;
    rep["test_rounds"] = tr.tally.test_rounds();
    rep["generation_rounds"] = tr.tally.generation_rounds();
    rep["wins"] = tr.wins;
    rep["abort_threshold"] = tr.abort_threshold;
    rep["aborted"] = tr.aborted;
    rep["mode"] = tr.has_records() ? "records" : "tally";
    rep["model_score"] = model_score(sp.model);
    try {
        rep["empirical_score"] = tr.empirical_score();
    } catch (const std::invalid_argument&) {
        rep["empirical_score"] = nullptr;  // some setting never tested
    }
    if (auto path = cfg.find_string("simulate", "tally_out")) {
        write_tally_file(*path, tr.tally);
        rep["tally_out"] = *path;
    }
    if (raw_out) {
        const BitVector bits = extractor_input(tr);
        write_bit_file(*raw_out, bits);
        rep["raw_out"] = *raw_out;
        rep["raw_bits"] = bits.size();
    }
    return res;
}

CommandResult cmd_score(const std::filesystem::path& tally_path) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "score";
    rep["tally"] = tally_path.string();
    const TrialTally tally = read_tally_file(tally_path);
    const double score = chsh_score_from_counts(tally);
    json settings = json::array();
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
            settings.push_back({{"x", x}, {"y", y}, {"rounds", total}, {"wins", won},
                                {"win_fraction", static_cast<double>(won) / static_cast<double>(total)}});
        }
    }
    char rounded[32];
    std::snprintf(rounded, sizeof rounded, "%.6f", score);
    rep["score"] = score;
    rep["score_6dp"] = rounded;
    rep["settings"] = settings;
    rep["test_rounds"] = tally.test_rounds();
    rep["generation_rounds"] = tally.generation_rounds();
    return res;
}

CommandResult cmd_extract(const Config& cfg, bool oracle_check) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "extract";
    rep["config"] = config_json(cfg);

    const std::string input_path = cfg.get_string("extract", "input");
    const std::uint64_t n_bits = read_bit_file_length(input_path);

    std::uint64_t m_bits;
    double k_bits;
    if (auto cert_path = cfg.find_string("extract", "certificate")) {
        std::ifstream in(*cert_path);
        if (!in) throw ConfigError("cannot open certificate report " + *cert_path);
        const json cert = json::parse(in);
        k_bits = cert.at("certificate").at("hmin_lower").get<double>();
        const double extractable = cert.at("output").at("extractable_bits").get<double>();
        if (!(extractable >= 1.0)) throw ConfigError("certificate supports no extractor output");
        m_bits = cfg.find_uint("extract", "m_bits").value_or(static_cast<std::uint64_t>(std::floor(extractable)));
        rep["certificate"] = *cert_path;
    } else {
        m_bits = cfg.get_uint("extract", "m_bits");
        k_bits = cfg.get_double("extract", "k_bits");
    }
    if (m_bits == 0) throw ConfigError("extract: m_bits must be positive");
    if (static_cast<double>(m_bits) > k_bits) throw ConfigError("extract: m_bits exceeds the min-entropy k");

    ToeplitzJob job;
    job.n_bits = n_bits;
    job.m_bits = m_bits;
    job.block_len = std::min<std::uint64_t>(cfg.find_uint("extract", "block_len").value_or(kDefaultBlockLen), n_bits);
    const std::uint64_t seed_len = m_bits + n_bits - 1;
    if (auto seed_path = cfg.find_string("extract", "seed_file")) {
        const std::uint64_t have = read_bit_file_length(*seed_path);
        if (have != seed_len) {
            throw ConfigError("seed file " + *seed_path + " holds " + std::to_string(have) + " bits, expected m + n - 1 = " +
                              std::to_string(seed_len));
        }
        job.seed = read_bit_file(*seed_path);
    } else if (auto rng_seed = cfg.find_uint("extract", "seed_rng")) {
        // Pseudorandom seed for testing pipelines; not a substitute for a uniform seed.
        std::mt19937_64 rng(*rng_seed);
        job.seed = BitVector(seed_len);
        auto words = job.seed.words();
        for (auto& w : words) w = rng();
        job.seed.resize(seed_len);
    } else {
        throw ConfigError("extract needs extract.seed_file or extract.seed_rng");
    }
    job.validate();

    const BitVector input = read_bit_file(input_path);
    const bool parallel = cfg.find_bool("extract", "parallel").value_or(true);
    const Extraction ex = extract(job, input, k_bits, parallel ? Execution::parallel : Execution::serial);

    rep["n_bits"] = n_bits;
    rep["m_bits"] = m_bits;
    rep["k_bits"] = k_bits;
    rep["eps_ext"] = ex.eps_ext;
    rep["block_len"] = job.block_len;
    rep["blocks"] = (n_bits + job.block_len - 1) / job.block_len;
    rep["output_bits"] = ex.output.size();
    rep["output_ones"] = ex.output.popcount();
    if (oracle_check) {
        const bool same = toeplitz_naive(job.seed, input, m_bits) == ex.output;
        rep["oracle_check"] = same ? "identical" : "mismatch";
        if (!same) res.exit_code = kExitNumerical;
    }
    if (auto out = cfg.find_string("extract", "output")) {
        write_bit_file(*out, ex.output);
        rep["output"] = *out;
    }
    if (auto out = cfg.find_string("extract", "seed_out")) {
        write_bit_file(*out, job.seed);
        rep["seed_out"] = *out;
    }
    return res;
}

CommandResult cmd_curve(const Config& cfg) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "curve";
    rep["config"] = config_json(cfg);
    const std::string kind = cfg.get_string("curve", "kind");
    const double eps_s = cfg.get_double("budget", "eps_s");
    const double eps_c = cfg.get_double("budget", "eps_c");
    const PlanOptions opts = plan_options_from(cfg);
    const auto output = cfg.find_string("curve", "output");
    rep["kind"] = kind;
    std::ostringstream os;
    json rows = json::array();

    if (kind == "score") {
        os << "omega_exp,feasible,n_min,gamma_opt,delta,net_bits\n";
        for (double omega : cfg.get_doubles("curve", "scores")) {
            const PlanResult p = plan_protocol(omega, eps_s, eps_c, opts);
            os << fmt(omega) << ',' << (p.feasible ? 1 : 0) << ',' << p.n_min << ',' << fmt(p.gamma_opt) << ','
               << fmt(p.delta) << ',' << fmt(p.net_bits) << '\n';
            rows.push_back({{"omega_exp", omega}, {"feasible", p.feasible}, {"n_min", p.n_min},
                            {"gamma_opt", p.gamma_opt}});
        }
    } else if (kind == "rounds") {
        const double omega = cfg.get_double("protocol", "omega_exp");
        std::vector<std::uint64_t> grid;
        for (double v : cfg.get_doubles("curve", "n_grid")) grid.push_back(parse_count_value(fmt(v), "curve.n_grid"));
        const auto points = expansion_curve(omega, eps_s, eps_c, grid, cfg.find_double("curve", "gamma"), opts);
        const double asymptote = asymptotic_rate(omega);
        os << "n,gamma,delta,net_bits,net_rate,asymptotic_rate\n";
        for (const auto& r : points) {
            os << r.n << ',' << fmt(r.gamma) << ',' << fmt(r.delta) << ',' << fmt(r.net_bits) << ','
               << fmt(r.net_rate) << ',' << fmt(asymptote) << '\n';
            rows.push_back({{"n", r.n}, {"gamma", r.gamma}, {"net_rate", r.net_rate}});
        }
        rep["asymptotic_rate"] = asymptote;
    } else if (kind == "gamma") {
        const double omega = cfg.get_double("protocol", "omega_exp");
        const auto points = gamma_sweep(cfg.get_uint("protocol", "n"), omega, eps_s, eps_c,
                                        cfg.get_doubles("curve", "gammas"), opts);
        os << sweep_csv(points);
        for (const auto& r : points) rows.push_back({{"gamma", r.gamma}, {"net_rate", r.net_rate}});
    } else {
        throw ConfigError("curve.kind must be score, rounds or gamma");
    }
    rep["rows"] = rows;
    emit_csv(res, output, os.str());
    return res;
}

CommandResult cmd_spacetime(const Config& cfg) {
    CommandResult res;
    json& rep = res.report;
    rep["command"] = "spacetime";
    rep["config"] = config_json(cfg);
    SpacetimeGeometry g;
    g.dist_sa_m = cfg.get_double("geometry", "dist_sa_m");
    g.dist_sb_m = cfg.get_double("geometry", "dist_sb_m");
    g.path_sa_m = cfg.get_double("geometry", "path_sa_m");
    g.path_sb_m = cfg.get_double("geometry", "path_sb_m");
    g.t_e_ns = cfg.get_double("geometry", "t_e_ns");
    g.t_qrng_a_ns = cfg.get_double("geometry", "t_qrng_a_ns");
    g.t_qrng_b_ns = cfg.get_double("geometry", "t_qrng_b_ns");
    g.t_delay_a_ns = cfg.get_double("geometry", "t_delay_a_ns");
    g.t_delay_b_ns = cfg.get_double("geometry", "t_delay_b_ns");
    g.t_pc_a_ns = cfg.get_double("geometry", "t_pc_a_ns");
    g.t_pc_b_ns = cfg.get_double("geometry", "t_pc_b_ns");
    g.t_m_a_ns = cfg.get_double("geometry", "t_m_a_ns");
    g.t_m_b_ns = cfg.get_double("geometry", "t_m_b_ns");
    const SpacetimeResult r = spacetime_check(g);
    rep["locality_a"] = r.locality_a;
    rep["locality_b"] = r.locality_b;
    rep["measurement_independence_a"] = r.mi_a;
    rep["measurement_independence_b"] = r.mi_b;
    rep["all"] = r.all();
    return res;
}

CommandResult dispatch(const std::string& command, const Config& cfg, const std::filesystem::path& tally_path,
                       bool oracle_check) {
    const auto fail = [&](int code, const std::string& kind, const std::string& what) {
        CommandResult res;
        res.report = {{"command", command}, {"error", kind}, {"message", what}};
        res.exit_code = code;
        return res;
    };
    try {
        if (command == "certify") return cmd_certify(cfg);
        if (command == "plan") return cmd_plan(cfg);
        if (command == "simulate") return cmd_simulate(cfg);
        if (command == "score") return cmd_score(tally_path);
        if (command == "extract") return cmd_extract(cfg, oracle_check);
        if (command == "curve") return cmd_curve(cfg);
        if (command == "spacetime") return cmd_spacetime(cfg);
        return fail(kExitConfig, "config", "unknown command '" + command + "'");
    } catch (const ConfigError& e) {
        return fail(kExitConfig, "config", e.what());
    } catch (const NumericalGuard& e) {
        return fail(kExitNumerical, "numerical_guard", e.what());
    } catch (const std::invalid_argument& e) {
        return fail(kExitConfig, "invalid_argument", e.what());
    } catch (const std::domain_error& e) {
        return fail(kExitConfig, "domain_error", e.what());
    } catch (const json::exception& e) {
        return fail(kExitConfig, "json", e.what());
    } catch (const std::exception& e) {
        return fail(kExitFailure, "runtime", e.what());
    }
}

}  // namespace dirne
