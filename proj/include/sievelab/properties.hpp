#pragma once

// Seeded property suites behind the `verify` command. Each suite counts the
// cases it checked and the violations it found.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "sievelab/classes.hpp"

namespace sievelab {

struct SuiteResult {
    std::string name;
    std::size_t checked = 0;
    std::size_t violations = 0;
    double worst_margin = 0.0;  // most negative slack seen (0 when none)
    std::string detail;

    bool passed() const { return checked > 0 && violations == 0; }
};

// Random pairs of F^[alpha, beta] members on an m-cell grid.
SuiteResult suite_kl_sandwich(const Bounds& bounds, std::size_t m, std::size_t pairs, std::uint64_t seed);
SuiteResult suite_hellinger_sandwich(const Bounds& bounds, std::size_t m, std::size_t pairs, std::uint64_t seed);
SuiteResult suite_kl_below_chi_square(const Bounds& bounds, std::size_t m, std::size_t pairs, std::uint64_t seed);

// (gamma, x) grid with gamma in (0, gamma_max], x in (0, gamma].
SuiteResult suite_log_inequality(std::size_t gamma_points, std::size_t x_points, double gamma_max = 100.0);
SuiteResult suite_h_monotone(std::size_t points);

// All pairwise squared distances within a sine family agree.
SuiteResult suite_sine_family(double alpha, std::size_t m, int count, double tolerance);

SuiteResult suite_convexity(const ClassSpec& spec, std::size_t trials, std::uint64_t seed);

// Local packings from a sampled pool, contracted at eps / 2 and eps / 3.
SuiteResult suite_contraction(const ClassSpec& spec, std::size_t trials, std::size_t pool_size, double c,
                              std::uint64_t seed);

// Sieve runs at full depth; checks ||Y_J - Y_J'|| <= d / 2^{J'-2} for all J' < J.
SuiteResult suite_cauchy_trajectory(const ClassSpec& spec, std::size_t runs, std::size_t pool_size, double c,
                                    int depth, std::uint64_t seed);

void to_json(nlohmann::json& j, const SuiteResult& r);

}  // namespace sievelab
