#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <iterator>
#include <ostream>

#include "csg/cli/cli.hpp"
#include "csg/core/errors.hpp"
#include "csg/core/format.hpp"

namespace csg::cli {

const char* exit_code_name(int code) {
    switch (code) {
        case kOk: return "OK";
        case kUsage: return "E_USAGE";
        case kIo: return "E_IO";
        case kInput: return "E_INPUT";
        case kTraining: return "E_TRAIN";
        case kSolver: return "E_SOLVER";
        case kBudget: return "E_BUDGET";
        case kMissing: return "E_MISSING";
        default: return "E_INTERNAL";
    }
}

Config parse_config(std::istream& in) {
    Config out;
    std::string line;
    for (std::size_t number = 1; std::getline(in, line); ++number) {
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InputError("config line " + std::to_string(number) + " is not 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw InputError("config line " + std::to_string(number) + " has an empty key");
        out[key] = trim(line.substr(eq + 1));
    }
    return out;
}

Config read_config_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MissingError("cannot open " + path.string());
    return parse_config(in);
}

void write_config(std::ostream& out, const Config& config) {
    for (const auto& [key, value] : config) out << key << " = " << value << '\n';
}

std::string file_hash(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw MissingError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (std::istreambuf_iterator<char> it(in), end; it != end; ++it) {
        h ^= static_cast<unsigned char>(*it);
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace csg::cli
