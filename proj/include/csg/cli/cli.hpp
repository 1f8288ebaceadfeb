#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>

namespace csg::cli {

/// Process exit codes. Every failure prints exactly one line
/// `error <name>: <message>` on stderr.
enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kUsage = 2,
    kIo = 3,
    kInput = 4,
    kTraining = 5,
    kSolver = 6,
    kBudget = 7,
    kMissing = 8,
};

const char* exit_code_name(int code);

/// A referenced file or artifact does not exist.
class MissingError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Line-oriented `key = value` settings; `#` starts a comment.
using Config = std::map<std::string, std::string>;

Config parse_config(std::istream& in);
Config read_config_file(const std::filesystem::path& path);
void write_config(std::ostream& out, const Config& config);

/// FNV-1a over a file's bytes, as 16 hex digits.
std::string file_hash(const std::filesystem::path& path);

// Subcommands on a merged config. Progress lines go to `log`.

/// Keys: problem, seed, n, n_eval, out, plus env.* and <problem>.* overrides.
void gen_env(const Config& config, std::ostream& log);
/// Keys: data, method (mmd|static|dynamic), out, optional mmd (artifact dir),
/// plus training settings.
void train(const Config& config, std::ostream& log);
/// Keys: data, methods (comma list of oracle, ev, qr, <dir> or
/// <label>=<dir>), out, jobs, timing, budget.max_support, budget.max_binaries.
void evaluate(const Config& config, std::ostream& log);
/// Keys: inputs (comma list of gaps.csv files), out.
void report(const Config& config, std::ostream& log);

/// Full command line entry point; returns the exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace csg::cli
