#pragma once

// Command-line front end. Commands live in the library so that tests can run
// them in-process; tools/sievelab.cpp only forwards argv.
//
// Configuration precedence: command-line flags > --config file > defaults.

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include <json.hpp>

#include "sievelab/classes.hpp"

namespace sievelab::cli {

inline constexpr const char* kSchemaVersion = "v1";

enum ExitCode : int { kSuccess = 0, kPropertyFailure = 1, kUsageError = 2 };

struct RunConfig {
    ClassSpec spec;
    double c = 14.0;
    std::size_t pool_size = 8000;
    std::size_t centers = 32;
    std::vector<std::size_t> n_list{250, 1000, 4000, 16000};
    std::size_t replicates = 200;
    int J_cap = 8;
    std::uint64_t seed = 20240611;
    std::string out = "out";
    unsigned threads = 1;
    double radius_multiplier = 1.0;
    // NaN selects the theorem's sqrt(L) / c (written "theorem" in JSON).
    double schedule_constant = 0.5;
    bool adaptive = false;
    std::size_t max_children = 0;  // 0: unlimited
    std::vector<double> epsilon_list;  // empty: geometric grid from the pool diameter
    std::string samples;
    std::string truth = "default";     // "default" or "pool:<index>"
    std::size_t verify_pairs = 10000;
    std::vector<std::size_t> bernstein_n{50, 200, 800};
    std::size_t bernstein_replicates = 2000;

    // Throws ConfigError.
    void validate() const;
};

RunConfig default_config();

void to_json(nlohmann::json& j, const RunConfig& config);
// Missing keys keep the values already in `config`.
void merge_json(const nlohmann::json& j, RunConfig& config);

RunConfig load_config_file(const std::string& path, RunConfig base = default_config());

// FNV-1a (64-bit, hex) of the canonical JSON of every field that affects
// results; `out` and `threads` are excluded.
std::string config_hash(const RunConfig& config);

// Writes to path.tmp and renames over path.
void write_atomic(const std::string& path, const std::string& contents);

// Newline-delimited decimals in [0,1]; throws ParseError naming the line.
std::vector<double> read_samples(const std::string& path);

int cmd_verify(const RunConfig& config, std::ostream& log);
int cmd_entropy(const RunConfig& config, std::ostream& log);
int cmd_estimate(const RunConfig& config, std::ostream& log);
int cmd_sweep(const RunConfig& config, std::ostream& log);
int cmd_bernstein(const RunConfig& config, std::ostream& log);

// Full argv handling, including usage errors; returns the process exit code.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace sievelab::cli
