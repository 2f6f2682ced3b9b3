#pragma once

// Packings over finite candidate pools and the entropy estimates built on
// them. A pool is a fixed, ordered, finite stand-in for a density class; every
// count reported here is a lower estimate of the corresponding quantity for
// the class itself.

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "sievelab/classes.hpp"
#include "sievelab/grid_density.hpp"

namespace sievelab {

class CandidatePool {
public:
    CandidatePool() = default;
    explicit CandidatePool(std::vector<GridDensity> densities, std::optional<ClassSpec> spec = std::nullopt,
                           std::uint64_t seed = 0);

    // Element i is drawn from the stream (seed, pool, i), so a larger pool
    // with the same seed extends a smaller one.
    static CandidatePool generate(const ClassSpec& spec, std::size_t size, std::uint64_t seed);

    std::size_t size() const noexcept { return densities_.size(); }
    bool empty() const noexcept { return densities_.empty(); }
    std::size_t grid_size() const noexcept { return empty() ? 0 : densities_.front().size(); }
    const GridDensity& operator[](std::size_t i) const { return densities_[i]; }
    const std::vector<GridDensity>& densities() const noexcept { return densities_; }

    // log of element i's cell values; -inf where a value is zero.
    std::span<const double> log_values(std::size_t i) const { return logs_[i]; }
    bool strictly_positive(std::size_t i) const { return positive_[i] != 0; }

    const std::optional<ClassSpec>& spec() const noexcept { return spec_; }
    std::uint64_t seed() const noexcept { return seed_; }

    double distance(std::size_t i, std::size_t j) const;
    double distance_to(std::size_t i, const GridDensity& g) const;

    // Exact maximum pairwise distance, computed once.
    double diameter() const;

private:
    std::vector<GridDensity> densities_;
    std::vector<std::vector<double>> logs_;
    std::vector<char> positive_;
    std::optional<ClassSpec> spec_;
    std::uint64_t seed_ = 0;
    std::shared_ptr<std::optional<double>> diameter_ = std::make_shared<std::optional<double>>();
    std::shared_ptr<std::once_flag> diameter_once_ = std::make_shared<std::once_flag>();
};

// Mean distance to the nearest other pool element over an evenly strided
// subsample of at most `sample` elements.
double mean_nearest_neighbor_spacing(const CandidatePool& pool, std::size_t sample = 256);

struct Ball {
    GridDensity center;
    double radius;
};

struct PackingResult {
    std::vector<std::size_t> center_indices;
    double separation = 0.0;
    bool maximal = false;
    std::size_t eligible_count = 0;
};

// Pool indices within distance <= radius of the center, in pool order.
std::vector<std::size_t> ball_members(const CandidatePool& pool, const GridDensity& center, double radius);

// First-fit greedy in pool order over the eligible elements: admit an element
// iff it is strictly farther than `separation` from everything admitted.
PackingResult greedy_maximal_packing(const CandidatePool& pool, double separation,
                                     const std::optional<Ball>& restrict = std::nullopt);

PackingResult greedy_packing_of(const CandidatePool& pool, std::span<const std::size_t> eligible, double separation);

// Exhaustive check of separation and maximality against the eligible set.
bool verify_packing(const CandidatePool& pool, const PackingResult& packing,
                    const std::optional<Ball>& restrict = std::nullopt);

enum class EntropyMode { Global, LocalSup, Adaptive };

std::string_view entropy_mode_name(EntropyMode mode);

struct EntropyEstimate {
    double epsilon = 0.0;
    double c = 1.0;
    EntropyMode mode = EntropyMode::Global;
    std::size_t count = 0;
    double log_count = 0.0;  // log(max(count, 1))
    std::optional<std::size_t> center_index;
};

EntropyEstimate global_entropy_estimate(const CandidatePool& pool, double epsilon);

// max over centers of log |greedy (epsilon / c)-packing of B(theta, epsilon)|.
EntropyEstimate local_entropy_estimate(const ClassSpec& spec, double epsilon, double c, const CandidatePool& pool,
                                       std::span<const GridDensity> centers);

EntropyEstimate adaptive_local_entropy(const ClassSpec& spec, const GridDensity& theta, double epsilon, double c,
                                       const CandidatePool& pool);

// The first min(count, |pool|) pool elements.
std::vector<GridDensity> default_centers(const CandidatePool& pool, std::size_t count = 32);

// theta (1 - eps'/eps) + (eps'/eps) g_j for each j. Throws ContractError
// unless 0 < eps' <= eps, every g_j is within eps of theta and the g_j are
// pairwise more than eps / c apart.
std::vector<GridDensity> contract_packing(const GridDensity& theta, double eps, double eps_prime, double c,
                                          std::span<const GridDensity> g);

// Pool-adjacent-violators fit of a nonincreasing sequence (equal weights).
std::vector<double> isotonic_nonincreasing(std::span<const double> y);

using EntropyFn = std::function<double(double)>;

// Right-continuous step function through isotonized values on an ascending
// epsilon grid; constant beyond both ends.
class MonotoneEntropy {
public:
    MonotoneEntropy(std::vector<double> epsilons, std::span<const double> raw_log_counts);

    double operator()(double epsilon) const;
    const std::vector<double>& epsilons() const noexcept { return eps_; }
    const std::vector<double>& values() const noexcept { return values_; }

private:
    std::vector<double> eps_;
    std::vector<double> values_;
};

inline constexpr int kBisectionIterations = 60;
inline constexpr double kBisectionRelativeTolerance = 1e-3;

// Largest eps in (0, diameter] with n eps^2 <= entropy(eps); 0 if none.
double solve_critical_epsilon(std::size_t n, double diameter, const EntropyFn& entropy);

// log M_loc > 2 n eps^2 / alpha + 2 log 2 (strict).
bool lower_bound_condition(std::size_t n, double epsilon, double alpha, double entropy_value);

struct GapReport {
    double epsilon = 0.0;
    double c = 1.0;
    double log_global_eps = 0.0;        // log M(eps)
    double log_global_eps_over_c = 0.0; // log M(eps / c)
    double log_local = 0.0;             // log M_loc(eps, c)
    bool lower_holds = false;           // log M(eps/c) - log M(eps) <= log M_loc
    bool upper_holds = false;           // log M_loc <= log M(eps/c)
    double lower_slack = 0.0;
    double upper_slack = 0.0;
};

// The local estimate takes the best of greedy local packings and the pigeonhole
// bound from the global (eps/c)-packing over the balls of a maximal
// eps-packing; the global (eps/c) estimate takes the best of the global greedy
// packing and any local packing found.
GapReport global_local_gap_check(const ClassSpec& spec, double epsilon, double c, const CandidatePool& pool,
                                 std::span<const GridDensity> centers = {});

}  // namespace sievelab
