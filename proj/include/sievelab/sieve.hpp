#pragma once

// Multistage sieve MLE over a candidate pool, built online: the level-k
// packing around the current node Y_k is a greedy packing of
// B(Y_k, d / 2^{k-1}) at separation d / (2^k (C + 1)), and the next node is
// the packing element with the largest log-likelihood (smallest pool index on
// exact ties).

#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include <json.hpp>

#include "sievelab/grid_density.hpp"
#include "sievelab/packing.hpp"
#include "sievelab/rng.hpp"

namespace sievelab {

struct SieveConstants {
    double c = 0.0;
    double C = 0.0;     // c / 2 - 1
    double c_ab = 0.0;
    double K_ab = 0.0;
    double L = 0.0;
    double d = 0.0;
    // eps_J = schedule_constant * d / 2^{J-2}; sqrt(L) / c reproduces the
    // theorem's schedule.
    double schedule_constant = 0.0;
    // Local entropy in the stopping rule is taken at radius
    // radius_multiplier * d / 2^{J-2}.
    double radius_multiplier = 1.0;
};

// Smallest c accepted by compute_constants: 2 (2 + sqrt(1 / (alpha c_ab))).
double minimal_c(const Bounds& bounds);

// Throws ConfigError when c / 2 - 1 <= 1 + sqrt(1 / (alpha c_ab)).
// A NaN schedule_constant selects sqrt(L) / c.
SieveConstants compute_constants(const Bounds& bounds, double c, double d,
                                 double schedule_constant = std::numeric_limits<double>::quiet_NaN(),
                                 double radius_multiplier = 1.0);

double epsilon_schedule(int J, const SieveConstants& k);

// Radius argument of the local entropy in the stopping rule for level J.
double entropy_radius(int J, const SieveConstants& k);

// d / 2^{k-1}
double level_radius(int k, const SieveConstants& constants);
// d / (2^k (C + 1))
double level_separation(int k, const SieveConstants& constants);

// Largest J <= J_cap with n eps_J^2 > max(2 entropy(entropy_radius(J)), log 2);
// 1 if there is none.
int solve_J_bar(std::size_t n, const SieveConstants& constants, const EntropyFn& entropy, int J_cap);

// Cell occupation counts of points in [0,1].
std::vector<double> cell_counts(const std::vector<double>& samples, std::size_t m);

// sum_i log g(X_i) - sum_i log g'(X_i).
double log_likelihood_diff(const GridDensity& g, const GridDensity& g_prime, const std::vector<double>& samples);

// Memoized, thread-safe online packing tree over a pool. Children depend only
// on (node, level), never on data.
class PackingTree {
public:
    PackingTree(const CandidatePool& pool, const SieveConstants& constants);

    const CandidatePool& pool() const noexcept { return *pool_; }
    const SieveConstants& constants() const noexcept { return constants_; }

    // Pool indices of the level-k packing around pool element `node`.
    std::shared_ptr<const std::vector<std::size_t>> children(std::size_t node, int level) const;

    // log count of the greedy (2 r_J / (2c))-packing of B(node, 2 r_J) with
    // r_J = entropy_radius(J): the adaptive local entropy in the adaptive
    // stopping rule.
    double adaptive_log_count(std::size_t node, int J) const;

private:
    const CandidatePool* pool_;
    SieveConstants constants_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<std::uint64_t, std::shared_ptr<const std::vector<std::size_t>>> children_;
    mutable std::unordered_map<std::uint64_t, double> adaptive_;
};

struct SieveLevel {
    int level = 0;                // k
    std::size_t parent_index = 0; // Y_k
    std::size_t selected_index = 0;  // Y_{k+1}
    std::size_t packing_size = 0;
    std::size_t ties = 0;         // other children sharing the maximal likelihood
    double radius = 0.0;
    double separation = 0.0;
    double log_likelihood = 0.0;
};

struct SieveTrace {
    SieveConstants constants;
    int J_bar = 1;
    std::vector<double> epsilon_schedule;  // eps_1 .. eps_J_bar
    std::vector<std::size_t> path;         // pool indices of Y_1 .. Y_final
    std::vector<SieveLevel> levels;
    bool adaptive = false;
    bool truncated = false;
    int stop_level = 1;
    std::string stop_reason;
};

struct SieveResult {
    GridDensity estimate;
    std::size_t estimate_index = 0;
    SieveTrace trace;
};

SieveResult run_sieve(const std::vector<double>& samples, const PackingTree& tree, int J_bar);

// Depth-adaptive traversal. Before descending from Y_k to level k + 1 the run
// checks n eps_{k+1}^2 > max(2 M_ad(Y_k), log 2) with the adaptive local
// entropy of the tree (or `entropy` when given, called as (node, J)) and that
// the next packing has at most `max_children` elements; it stops at Y_k
// otherwise.
using AdaptiveEntropyFn = std::function<double(std::size_t node, int J)>;
SieveResult run_adaptive_sieve(const std::vector<double>& samples, const PackingTree& tree, int J_cap,
                               std::size_t max_children = std::numeric_limits<std::size_t>::max(),
                               const AdaptiveEntropyFn& entropy = {});

// Estimator over the half-mixture class, called on the randomized sample.
using EstimateFn = std::function<GridDensity(const std::vector<double>& samples)>;

// Average over rounds of 2 f_hat(Z) - f_alpha, where Z_i is a draw from
// f_alpha or X_i by a fair coin; clipped to [0, beta] and renormalized.
GridDensity mixture_lift(const GridDensity& f_alpha, const EstimateFn& estimate, const std::vector<double>& samples,
                         Rng& rng, int rounds, double beta);

void to_json(nlohmann::json& j, const SieveConstants& k);
void to_json(nlohmann::json& j, const SieveTrace& trace);

// level,selected_index,packing_size,ties,radius,separation
std::string trace_csv(const SieveTrace& trace);

}  // namespace sievelab
