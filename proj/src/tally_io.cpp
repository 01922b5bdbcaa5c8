#include <fstream>
#include <sstream>
#include <string>

#include "dirne/protocol_sim.hpp"

namespace dirne {

namespace {

int parse_bit(const std::string& token, int line_no) {
    if (token == "0") return 0;
    if (token == "1") return 1;
    throw std::invalid_argument("tally line " + std::to_string(line_no) + ": expected 0 or 1, got '" + token + "'");
}

std::uint64_t parse_count(const std::string& token, int line_no) {
    if (token.empty() || token.find_first_not_of("0123456789") != std::string::npos) {
        throw std::invalid_argument("tally line " + std::to_string(line_no) + ": bad count '" + token + "'");
    }
    try {
        return std::stoull(token);
    } catch (const std::out_of_range&) {
        throw std::invalid_argument("tally line " + std::to_string(line_no) + ": count out of range");
    }
}

}  // namespace

TrialTally read_tally(std::istream& in) {
    TrialTally tally;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        std::istringstream fields(line);
        std::vector<std::string> tok;
        for (std::string t; fields >> t;) tok.push_back(t);
        if (tok.empty()) continue;
        if (tok[0] == "gen") {
            if (tok.size() != 4) {
                throw std::invalid_argument("tally line " + std::to_string(line_no) + ": expected 'gen a b count'");
            }
            tally.gen_counts[parse_bit(tok[1], line_no)][parse_bit(tok[2], line_no)] += parse_count(tok[3], line_no);
            continue;
        }
        if (tok.size() != 5) {
            throw std::invalid_argument("tally line " + std::to_string(line_no) + ": expected 'x y a b count'");
        }
        tally.counts[parse_bit(tok[0], line_no)][parse_bit(tok[1], line_no)][parse_bit(tok[2], line_no)]
                    [parse_bit(tok[3], line_no)] += parse_count(tok[4], line_no);
    }
    return tally;
}

TrialTally read_tally_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open tally file " + path.string());
    return read_tally(in);
}

void write_tally(std::ostream& out, const TrialTally& tally) {
    out << "# x y a b count\n";
    for (int x = 0; x < 2; ++x)
        for (int y = 0; y < 2; ++y)
            for (int a = 0; a < 2; ++a)
                for (int b = 0; b < 2; ++b)
                    out << x << ' ' << y << ' ' << a << ' ' << b << ' ' << tally.counts[x][y][a][b] << '\n';
    out << "# gen a b count\n";
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b) out << "gen " << a << ' ' << b << ' ' << tally.gen_counts[a][b] << '\n';
}

void write_tally_file(const std::filesystem::path& path, const TrialTally& tally) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw std::runtime_error("cannot create tally file " + path.string());
    write_tally(out, tally);
    if (!out) throw std::runtime_error("write failed for tally file " + path.string());
}

}  // namespace dirne
