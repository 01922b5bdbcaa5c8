// dirne: certify, plan, simulate and post-process randomness-expansion runs.

#include <omp.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dirne/commands.hpp"
#include "dirne/errors.hpp"

namespace {

void apply_thread_env() {
    const char* env = std::getenv("DIRNE_THREADS");
    if (!env || !*env) return;
    const int threads = std::atoi(env);
    if (threads > 0) omp_set_num_threads(threads);
}

}  // namespace

int main(int argc, char** argv) {
    apply_thread_env();

    CLI::App app{"Device-independent randomness expansion: certification, planning, simulation, extraction"};
    app.require_subcommand(1);

    std::string config_path;
    std::vector<std::string> overrides;
    std::string report_path;
    std::string tally_path;
    bool oracle_check = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("-c,--config", config_path, "Config file (sectioned key = value)");
        sub->add_option("--set", overrides, "Override one key, section.key=value (repeatable)");
        sub->add_option("--report", report_path, "Write the JSON report here instead of stdout");
    };
    add_common(app.add_subcommand("certify", "Certified min-entropy and net expansion for given parameters"));
    add_common(app.add_subcommand("plan", "Minimal rounds and best test probability for a score and budget"));
    add_common(app.add_subcommand("simulate", "Run the spot-checking protocol against a simulated device"));
    auto* score = app.add_subcommand("score", "Score estimate from a tally file");
    score->add_option("tally", tally_path, "Tally file")->required();
    score->add_option("--report", report_path, "Write the JSON report here instead of stdout");
    auto* extract = app.add_subcommand("extract", "Toeplitz extraction of a raw bit file");
    add_common(extract);
    extract->add_flag("--oracle-check", oracle_check, "Compare against the direct row-by-row product");
    add_common(app.add_subcommand("curve", "Expansion-rate curves as CSV"));
    add_common(app.add_subcommand("spacetime", "Locality and measurement-independence timing checks"));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : dirne::kExitConfig;
    }

    const std::string command = app.get_subcommands().front()->get_name();
    dirne::CommandResult result;
    try {
        dirne::Config cfg;
        if (!config_path.empty()) cfg = dirne::Config::load(config_path);
        for (const auto& o : overrides) cfg.set(o);
        result = dirne::dispatch(command, cfg, tally_path, oracle_check);
    } catch (const dirne::ConfigError& e) {
        result.report = {{"command", command}, {"error", "config"}, {"message", e.what()}};
        result.exit_code = dirne::kExitConfig;
    }

    const std::string text = result.report.dump(2);
    if (report_path.empty()) {
        if (result.csv.empty()) std::cout << text << '\n';
    } else {
        std::ofstream out(report_path, std::ios::trunc);
        out << text << '\n';
        if (!out) {
            std::cerr << "dirne: cannot write report " << report_path << '\n';
            return dirne::kExitFailure;
        }
    }
    if (!result.csv.empty()) std::cout << result.csv;
    if (result.report.contains("error")) {
        std::cerr << "dirne " << command << ": " << result.report.value("message", std::string{}) << '\n';
    }
    return result.exit_code;
}
